//! LinkChain: a synthetic family of chain-of-joints embodiments with
//! deterministic dynamics, velocity-tracking rewards, and scripted
//! controllers spanning expert to heavily degraded behavior.

mod dynamics;
mod rollout;
mod spec;
mod suite;

pub use dynamics::{
    observe, reward_fn, reset, scripted_controller, step, DoneReason, EnvState, ObsBundle,
    StepResult, A_MAX, DT, HORIZON, KP,
};
pub use rollout::{evaluate, rollout_scripted, Episode, Policy};
pub use spec::{make_suite, EmbodimentSpec, Family};
pub use suite::{load_suite_manifest, save_suite_manifest, SuiteManifest};
