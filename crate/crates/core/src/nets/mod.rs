//! Morphology-conditioned networks: a descriptor-gated attention encoder
//! producing a fixed-width latent for any joint count, a per-joint Gaussian
//! actor head, a state-value network, and a twin state-action value network
//! over zero-padded actions.

mod config;
mod forward;
mod layout;
mod mlp;

pub use config::{LatentConfig, ModelManifest, MODEL_FORMAT_VERSION};
pub use forward::{
    actor_forward, deterministic_action, encode, gaussian_log_prob, pad_action, q_forward,
    sample_actions, v_forward, ActorOut, Encoded, NetInputs,
};
pub use layout::{actor_layout, init_params, q_layout, value_layout};
