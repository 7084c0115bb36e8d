//! Desk-scale laboratory for cross-embodiment offline reinforcement learning.
//!
//! The crate is organized around a synthetic embodiment family ("LinkChain")
//! standing in for a heterogeneous fleet of legged robots:
//!
//! * [`numerics`] - flat parameter vectors, reverse-mode gradients on an eager
//!   tape, an Adam optimizer, and gradient utilities.
//! * [`morphology`] - embodiment graphs, Fused Gromov-Wasserstein distances,
//!   similarity normalization, and hierarchical clustering into robot groups.
//! * [`envs`] - the LinkChain embodiment suite: deterministic dynamics,
//!   velocity-tracking rewards, scripted controllers, and policy evaluation.
//! * [`datasets`] - offline dataset generation (expert / replay / mixture),
//!   a byte-exact shard format, and per-robot batch sampling.
//! * [`nets`] - the morphology-conditioned network family: attention encoder,
//!   per-joint Gaussian actor, state value, and twin Q networks.
//! * [`rl`] - BC / IQL / TD3+BC trainers, the embodiment-grouped update,
//!   PCGrad, and pre-train / fine-tune workflows.
//! * [`analysis`] - gradient-conflict instrumentation and correlation
//!   statistics.

pub mod analysis;
pub mod datasets;
pub mod envs;
pub mod morphology;
pub mod nets;
pub mod numerics;
pub mod rl;
pub mod rng;
pub mod stats;

mod error;

pub use error::{Error, Result};
