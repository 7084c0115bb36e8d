use std::sync::Arc;

use rand::Rng;

use super::config::LatentConfig;
use super::mlp::MlpSpec;
use crate::numerics::{Layout, ParamVector, Segment};
use crate::rng::stream;
use crate::Result;

pub(crate) fn phi_joint(cfg: &LatentConfig) -> MlpSpec {
    MlpSpec::new("enc.phi_j", 4, &[cfg.enc_hidden], cfg.l_d, false)
}

pub(crate) fn psi_joint(cfg: &LatentConfig) -> MlpSpec {
    MlpSpec::new("enc.psi_j", 3, &[cfg.enc_hidden], cfg.l_d, true)
}

pub(crate) fn phi_foot(cfg: &LatentConfig) -> MlpSpec {
    MlpSpec::new("enc.phi_f", 2, &[cfg.enc_hidden], cfg.l_d, false)
}

pub(crate) fn psi_foot(cfg: &LatentConfig) -> MlpSpec {
    MlpSpec::new("enc.psi_f", 2, &[cfg.enc_hidden], cfg.l_d, true)
}

pub(crate) fn core(cfg: &LatentConfig) -> MlpSpec {
    let hidden = &cfg.core_widths[..cfg.core_widths.len() - 1];
    MlpSpec::new("core", cfg.zbar_dim(), hidden, cfg.core_out(), true)
}

pub(crate) fn action_descriptor(cfg: &LatentConfig) -> MlpSpec {
    MlpSpec::new("adesc", 4, &[cfg.head_hidden], cfg.l_a, true)
}

pub(crate) fn mu_head(cfg: &LatentConfig) -> MlpSpec {
    let in_dim = cfg.l_a + cfg.core_out() + cfg.l_d;
    MlpSpec::new("mu", in_dim, &[cfg.head_hidden], 1, false)
}

pub(crate) fn sigma_head(cfg: &LatentConfig) -> MlpSpec {
    MlpSpec::new("sigma", cfg.l_a, &[cfg.head_hidden], 1, false)
}

pub(crate) fn value_head(cfg: &LatentConfig) -> MlpSpec {
    MlpSpec::new("v", cfg.zbar_dim(), &cfg.value_widths, 1, false)
}

pub(crate) fn action_encoder(cfg: &LatentConfig) -> MlpSpec {
    MlpSpec::new("fa", cfg.d_max, &[cfg.head_hidden], cfg.l_a, true)
}

pub(crate) fn q_head(cfg: &LatentConfig, k: usize) -> MlpSpec {
    let in_dim = cfg.zbar_dim() + cfg.l_a;
    MlpSpec::new(&format!("q{k}"), in_dim, &cfg.value_widths, 1, false)
}

fn encoder_segments(cfg: &LatentConfig) -> Vec<Segment> {
    let mut segs = Vec::new();
    for spec in [phi_joint(cfg), psi_joint(cfg), phi_foot(cfg), psi_foot(cfg)] {
        segs.extend(spec.segments());
    }
    segs
}

/// Layout of the policy network: encoder, core, action-descriptor encoder,
/// and the per-joint mean and scale heads.
pub fn actor_layout(cfg: &LatentConfig) -> Result<Arc<Layout>> {
    cfg.validate()?;
    let mut segs = encoder_segments(cfg);
    for spec in [core(cfg), action_descriptor(cfg), mu_head(cfg), sigma_head(cfg)] {
        segs.extend(spec.segments());
    }
    Layout::new(segs)
}

/// Layout of the state-value network: encoder plus the value MLP.
pub fn value_layout(cfg: &LatentConfig) -> Result<Arc<Layout>> {
    cfg.validate()?;
    let mut segs = encoder_segments(cfg);
    segs.extend(value_head(cfg).segments());
    Layout::new(segs)
}

/// Layout of the twin Q network: encoder, action encoder, and two
/// independently parameterized heads.
pub fn q_layout(cfg: &LatentConfig) -> Result<Arc<Layout>> {
    cfg.validate()?;
    let mut segs = encoder_segments(cfg);
    segs.extend(action_encoder(cfg).segments());
    segs.extend(q_head(cfg, 1).segments());
    segs.extend(q_head(cfg, 2).segments());
    Layout::new(segs)
}

/// Deterministic initialization: weight segments (`*.w<i>`) are uniform on
/// `[-s, s]` with `s = 1/sqrt(fan_in)`, bias segments start at zero.
pub fn init_params(layout: &Arc<Layout>, seed: u64, label: &str) -> ParamVector {
    let mut rng = stream(seed, label);
    let mut pv = ParamVector::zeros(layout.clone());
    for seg in layout.segments().to_vec() {
        if seg.name.rsplit('.').next().is_some_and(|tail| tail.starts_with('w')) {
            let s = 1.0 / (seg.rows as f64).sqrt();
            for v in pv.seg_mut(&seg.name) {
                *v = rng.gen_range(-s..s);
            }
        }
    }
    pv
}
