use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const MODEL_FORMAT_VERSION: &str = "xembod-model-v1";

/// Widths and attention constants shared by every network in a run.
///
/// `d_max` is the longest action vector over the robot suite; the twin Q
/// network zero-pads every action to this length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentConfig {
    /// Per-joint and per-foot latent width.
    pub l_d: usize,
    /// Attention temperature.
    pub tau_att: f64,
    /// Additive temperature floor.
    pub eps_att: f64,
    /// Actor core hidden widths; the last entry is the core output width.
    pub core_widths: Vec<usize>,
    /// Hidden widths of the value and Q head MLPs.
    pub value_widths: Vec<usize>,
    /// Action-descriptor and action latent width.
    pub l_a: usize,
    /// Maximum joint count over the suite.
    pub d_max: usize,
    /// Hidden width of the descriptor and observation encoders.
    pub enc_hidden: usize,
    /// Hidden width of the per-joint heads and the action encoder.
    pub head_hidden: usize,
}

impl LatentConfig {
    /// Full-size configuration.
    pub fn full(d_max: usize) -> Self {
        LatentConfig {
            l_d: 64,
            tau_att: 1.0,
            eps_att: 1e-6,
            core_widths: vec![256, 128],
            value_widths: vec![512, 256, 128],
            l_a: 32,
            d_max,
            enc_hidden: 128,
            head_hidden: 128,
        }
    }

    /// Small configuration sized for single-core experiments.
    pub fn compact(d_max: usize) -> Self {
        LatentConfig {
            l_d: 16,
            tau_att: 1.0,
            eps_att: 1e-6,
            core_widths: vec![64, 48],
            value_widths: vec![64, 48],
            l_a: 8,
            d_max,
            enc_hidden: 32,
            head_hidden: 32,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let widths = [self.l_d, self.l_a, self.d_max, self.enc_hidden, self.head_hidden];
        if widths.iter().any(|&w| w == 0)
            || self.core_widths.is_empty()
            || self.value_widths.is_empty()
            || self.core_widths.iter().any(|&w| w == 0)
            || self.value_widths.iter().any(|&w| w == 0)
        {
            return Err(Error::Config("latent config: all widths must be >= 1".into()));
        }
        if !(self.tau_att > 0.0) {
            return Err(Error::Config(format!(
                "latent config: attention temperature {} must be > 0",
                self.tau_att
            )));
        }
        Ok(())
    }

    /// Width of the pooled latent `[o_g, joint pool, foot pool]`; independent
    /// of the robot's joint and foot counts.
    pub fn zbar_dim(&self) -> usize {
        3 + 2 * self.l_d
    }

    /// Actor core output width.
    pub fn core_out(&self) -> usize {
        *self.core_widths.last().expect("non-empty core widths")
    }
}

/// On-disk record of the network shape used by a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelManifest {
    pub format_version: String,
    pub config: LatentConfig,
}

impl ModelManifest {
    pub fn new(config: LatentConfig) -> Self {
        ModelManifest { format_version: MODEL_FORMAT_VERSION.to_string(), config }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let manifest: ModelManifest = serde_json::from_str(&fs::read_to_string(path)?)?;
        if manifest.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "model manifest version `{}`, expected `{MODEL_FORMAT_VERSION}`",
                manifest.format_version
            )));
        }
        manifest.config.validate()?;
        Ok(manifest)
    }
}
