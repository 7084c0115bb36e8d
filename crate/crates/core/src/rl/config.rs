use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Bc,
    Iql,
    Td3bc,
}

impl Algorithm {
    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::Bc => "bc",
            Algorithm::Iql => "iql",
            Algorithm::Td3bc => "td3bc",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "bc" => Ok(Algorithm::Bc),
            "iql" => Ok(Algorithm::Iql),
            "td3bc" => Ok(Algorithm::Td3bc),
            other => Err(Error::Config(format!("unknown algorithm `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Grouping {
    None,
    Eg,
    Random,
    Heuristic,
}

impl Grouping {
    pub fn as_str(&self) -> &'static str {
        match self {
            Grouping::None => "none",
            Grouping::Eg => "eg",
            Grouping::Random => "random",
            Grouping::Heuristic => "heuristic",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Grouping::None),
            "eg" => Ok(Grouping::Eg),
            "random" => Ok(Grouping::Random),
            "heuristic" => Ok(Grouping::Heuristic),
            other => Err(Error::Config(format!("unknown grouping `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConflictResolver {
    None,
    Pcgrad,
}

/// Hyperparameters of one training run. Defaults follow the standard
/// offline-RL settings for IQL and TD3+BC at desk scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub algorithm: Algorithm,
    pub grouping: Grouping,
    /// Group count for `eg` and `random` grouping and for normalized mode.
    pub m: usize,
    pub conflict_resolver: ConflictResolver,
    pub lr: f64,
    pub updates: usize,
    pub per_robot_batch: usize,
    pub gamma: f64,
    /// Value expectile.
    pub tau_exp: f64,
    /// Advantage-weighting temperature.
    pub beta: f64,
    /// Target-network EMA rate.
    pub tau_target: f64,
    pub max_grad_norm: f64,
    pub policy_freq: usize,
    pub policy_noise: f64,
    pub noise_clip: f64,
    /// Behavior-cloning weight for TD3+BC.
    pub bc_weight: f64,
    pub a_max: f64,
    pub awr_weight_cap: f64,
    /// Ungrouped control matching grouped compute: actor steps times `m`,
    /// per-robot actor batch divided by `m`.
    pub normalized_mode: bool,
    /// Also run the critic update sequentially per group.
    pub critic_eg: bool,
    /// Record pairwise actor-gradient cosines every this many updates
    /// (0 disables).
    pub conflict_every: usize,
    /// Number of evaluation checkpoints over the run.
    pub eval_points: usize,
    pub eval_episodes: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            algorithm: Algorithm::Iql,
            grouping: Grouping::None,
            m: 4,
            conflict_resolver: ConflictResolver::None,
            lr: 3e-4,
            updates: 20_000,
            per_robot_batch: 256,
            gamma: 0.99,
            tau_exp: 0.7,
            beta: 3.0,
            tau_target: 0.005,
            max_grad_norm: 0.5,
            policy_freq: 2,
            policy_noise: 0.2,
            noise_clip: 0.5,
            bc_weight: 2.5,
            a_max: 5.0,
            awr_weight_cap: 100.0,
            normalized_mode: false,
            critic_eg: false,
            conflict_every: 100,
            eval_points: 20,
            eval_episodes: 5,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::Config(format!("gamma {} outside (0, 1)", self.gamma)));
        }
        if !(self.tau_exp > 0.0 && self.tau_exp < 1.0) {
            return Err(Error::Config(format!("tau_exp {} outside (0, 1)", self.tau_exp)));
        }
        if self.updates == 0 || self.per_robot_batch == 0 || self.policy_freq == 0 || self.m == 0 {
            return Err(Error::Config(
                "updates, per_robot_batch, policy_freq, and m must be >= 1".into(),
            ));
        }
        if !(self.lr > 0.0 && self.tau_target > 0.0 && self.tau_target <= 1.0) {
            return Err(Error::Config("lr must be > 0 and tau_target in (0, 1]".into()));
        }
        if self.awr_weight_cap <= 0.0 || self.beta < 0.0 {
            return Err(Error::Config("awr_weight_cap must be > 0 and beta >= 0".into()));
        }
        if self.eval_points == 0 || self.eval_episodes == 0 {
            return Err(Error::Config("eval_points and eval_episodes must be >= 1".into()));
        }
        if self.normalized_mode {
            if self.grouping != Grouping::None {
                return Err(Error::Config(
                    "normalized_mode is an ungrouped control; grouping must be `none`".into(),
                ));
            }
            if self.per_robot_batch % self.m != 0 {
                return Err(Error::Config(format!(
                    "normalized_mode needs per_robot_batch {} divisible by m {}",
                    self.per_robot_batch, self.m
                )));
            }
        }
        Ok(())
    }
}
