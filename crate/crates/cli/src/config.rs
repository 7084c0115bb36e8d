use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use xembod::nets::LatentConfig;
use xembod::rl::{Algorithm, ConflictResolver, Grouping, TrainConfig};
use xembod::{Error, Result};

/// A method label of the form `algorithm[+modifier...]`, e.g. `iql`,
/// `iql+eg`, `iql+pcgrad`, `iql+eg+critic`, `iql+norm`, `iql+random`.
#[derive(Debug, Clone, PartialEq)]
pub struct Method {
    pub label: String,
    pub algorithm: Algorithm,
    pub grouping: Grouping,
    pub conflict_resolver: ConflictResolver,
    pub normalized_mode: bool,
    pub critic_eg: bool,
}

impl Method {
    pub fn parse(label: &str) -> Result<Method> {
        let mut parts = label.split('+');
        let algorithm = match parts.next().unwrap_or_default() {
            "bc" => Algorithm::Bc,
            "iql" => Algorithm::Iql,
            "td3bc" => Algorithm::Td3bc,
            other => return Err(Error::Config(format!("unknown algorithm `{other}`"))),
        };
        let mut m = Method {
            label: label.to_string(),
            algorithm,
            grouping: Grouping::None,
            conflict_resolver: ConflictResolver::None,
            normalized_mode: false,
            critic_eg: false,
        };
        for part in parts {
            match part {
                "eg" => m.grouping = Grouping::Eg,
                "random" => m.grouping = Grouping::Random,
                "heuristic" => m.grouping = Grouping::Heuristic,
                "pcgrad" => m.conflict_resolver = ConflictResolver::Pcgrad,
                "norm" => m.normalized_mode = true,
                "critic" => m.critic_eg = true,
                other => {
                    return Err(Error::Config(format!(
                        "unknown method modifier `{other}` in `{label}`"
                    )))
                }
            }
        }
        if m.critic_eg && m.grouping == Grouping::None {
            return Err(Error::Config(format!(
                "`{label}`: critic grouping requires a grouping modifier"
            )));
        }
        Ok(m)
    }

    /// The train config for this method at a given seed.
    pub fn train_config(&self, base: &TrainConfig, seed: u64) -> TrainConfig {
        TrainConfig {
            algorithm: self.algorithm,
            grouping: self.grouping,
            conflict_resolver: self.conflict_resolver,
            normalized_mode: self.normalized_mode,
            critic_eg: self.critic_eg,
            seed,
            ..base.clone()
        }
    }
}

/// Experiment-level configuration file. All `[train]` and `[net]` fields are
/// optional; missing fields take the defaults recorded in the resolved copy
/// written next to the outputs.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunConfig {
    pub name: String,
    #[serde(default)]
    pub suite_seed: u64,
    #[serde(default = "default_command")]
    pub command: f64,
    pub datasets: Vec<PathBuf>,
    pub methods: Vec<String>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub net: NetSection,
}

fn default_command() -> f64 {
    1.0
}

fn default_out() -> PathBuf {
    PathBuf::from("runs")
}

/// Optional overrides of the training defaults.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub m: Option<usize>,
    pub lr: Option<f64>,
    pub updates: Option<usize>,
    pub per_robot_batch: Option<usize>,
    pub gamma: Option<f64>,
    pub tau_exp: Option<f64>,
    pub beta: Option<f64>,
    pub tau_target: Option<f64>,
    pub max_grad_norm: Option<f64>,
    pub policy_freq: Option<usize>,
    pub policy_noise: Option<f64>,
    pub noise_clip: Option<f64>,
    pub bc_weight: Option<f64>,
    pub awr_weight_cap: Option<f64>,
    pub conflict_every: Option<usize>,
    pub eval_points: Option<usize>,
    pub eval_episodes: Option<usize>,
}

impl TrainSection {
    pub fn apply(&self, base: &TrainConfig) -> TrainConfig {
        let mut cfg = base.clone();
        macro_rules! take {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field.clone() { cfg.$field = v; })*
            };
        }
        take!(
            m,
            lr,
            updates,
            per_robot_batch,
            gamma,
            tau_exp,
            beta,
            tau_target,
            max_grad_norm,
            policy_freq,
            policy_noise,
            noise_clip,
            bc_weight,
            awr_weight_cap,
            conflict_every,
            eval_points,
            eval_episodes
        );
        cfg
    }
}

/// Network preset plus optional width overrides.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct NetSection {
    #[serde(default = "default_preset")]
    pub preset: String,
    #[serde(default = "default_d_max")]
    pub d_max: usize,
    pub l_d: Option<usize>,
    pub l_a: Option<usize>,
    pub enc_hidden: Option<usize>,
    pub head_hidden: Option<usize>,
    pub core_widths: Option<Vec<usize>>,
    pub value_widths: Option<Vec<usize>>,
}

fn default_preset() -> String {
    "compact".to_string()
}

fn default_d_max() -> usize {
    8
}

impl Default for NetSection {
    fn default() -> Self {
        NetSection {
            preset: default_preset(),
            d_max: default_d_max(),
            l_d: None,
            l_a: None,
            enc_hidden: None,
            head_hidden: None,
            core_widths: None,
            value_widths: None,
        }
    }
}

impl NetSection {
    pub fn resolve(&self) -> Result<LatentConfig> {
        let mut net = match self.preset.as_str() {
            "full" => LatentConfig::full(self.d_max),
            "compact" => LatentConfig::compact(self.d_max),
            other => return Err(Error::Config(format!("unknown net preset `{other}`"))),
        };
        if let Some(v) = self.l_d {
            net.l_d = v;
        }
        if let Some(v) = self.l_a {
            net.l_a = v;
        }
        if let Some(v) = self.enc_hidden {
            net.enc_hidden = v;
        }
        if let Some(v) = self.head_hidden {
            net.head_hidden = v;
        }
        if let Some(v) = &self.core_widths {
            net.core_widths = v.clone();
        }
        if let Some(v) = &self.value_widths {
            net.value_widths = v.clone();
        }
        net.validate()?;
        Ok(net)
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path)?;
        let cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::Config("experiment name must not be empty".into()));
        }
        if self.datasets.is_empty() || self.methods.is_empty() || self.seeds.is_empty() {
            return Err(Error::Config(
                "datasets, methods, and seeds must all be non-empty".into(),
            ));
        }
        for m in &self.methods {
            Method::parse(m)?;
        }
        self.net.resolve()?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = toml::to_string_pretty(self)
            .map_err(|e| Error::Config(format!("serialize config: {e}")))?;
        fs::write(path, text)?;
        Ok(())
    }
}
