use rand_chacha::ChaCha8Rng;

use super::config::{Algorithm, TrainConfig};
use crate::nets::{actor_layout, init_params, q_layout, value_layout, LatentConfig};
use crate::numerics::{OptimState, ParamVector};
use crate::rng::stream;
use crate::Result;

/// All mutable state of one training run: network parameters, target copies,
/// optimizer moments, step counters, and the named rng streams.
#[derive(Debug, Clone)]
pub struct TrainerState {
    pub cfg: TrainConfig,
    pub net: LatentConfig,
    /// Robot ids in sorted order; fixes batch and reduction order.
    pub robots: Vec<String>,
    pub actor: ParamVector,
    pub actor_target: Option<ParamVector>,
    pub value: Option<ParamVector>,
    pub q: Option<ParamVector>,
    pub q_target: Option<ParamVector>,
    pub actor_opt: OptimState,
    pub value_opt: Option<OptimState>,
    pub q_opt: Option<OptimState>,
    /// Completed outer iterations; drives the TD3+BC policy delay.
    pub outer_steps: u64,
    pub critic_steps: u64,
    pub actor_steps: u64,
    /// Total transitions consumed by actor-loss evaluations in updates.
    pub actor_samples: u64,
    pub batch_rng: ChaCha8Rng,
    pub shuffle_rng: ChaCha8Rng,
    pub noise_rng: ChaCha8Rng,
}

/// Builds the initial trainer state. Every rng stream and every parameter
/// tensor derives from `cfg.seed`.
pub fn init_trainer(
    cfg: &TrainConfig,
    net: &LatentConfig,
    mut robots: Vec<String>,
) -> Result<TrainerState> {
    cfg.validate()?;
    net.validate()?;
    robots.sort();
    robots.dedup();

    let actor = init_params(&actor_layout(net)?, cfg.seed, "init:actor");
    let (value, value_opt) = match cfg.algorithm {
        Algorithm::Iql => {
            let v = init_params(&value_layout(net)?, cfg.seed, "init:value");
            let opt = OptimState::new(v.values().len(), cfg.lr);
            (Some(v), Some(opt))
        }
        _ => (None, None),
    };
    let (q, q_target, q_opt) = match cfg.algorithm {
        Algorithm::Bc => (None, None, None),
        _ => {
            let q = init_params(&q_layout(net)?, cfg.seed, "init:q");
            let opt = OptimState::new(q.values().len(), cfg.lr);
            (Some(q.clone()), Some(q), Some(opt))
        }
    };
    let actor_target = match cfg.algorithm {
        Algorithm::Td3bc => Some(actor.clone()),
        _ => None,
    };
    let actor_opt = OptimState::new(actor.values().len(), cfg.lr);

    Ok(TrainerState {
        cfg: cfg.clone(),
        net: net.clone(),
        robots,
        actor,
        actor_target,
        value,
        q,
        q_target,
        actor_opt,
        value_opt,
        q_opt,
        outer_steps: 0,
        critic_steps: 0,
        actor_steps: 0,
        actor_samples: 0,
        batch_rng: stream(cfg.seed, "batch"),
        shuffle_rng: stream(cfg.seed, "shuffle"),
        noise_rng: stream(cfg.seed, "noise"),
    })
}

/// FNV-1a over the raw parameter bits; used for determinism and
/// no-cross-update audits.
pub fn param_hash(pv: &ParamVector) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for v in pv.values() {
        for b in v.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
    }
    h
}

/// Hash over every parameter tensor of the state (targets included).
pub fn state_hash(state: &TrainerState) -> u64 {
    let mut h = param_hash(&state.actor);
    for pv in [&state.actor_target, &state.value, &state.q, &state.q_target]
        .into_iter()
        .flatten()
    {
        h ^= param_hash(pv).rotate_left(17);
    }
    h
}

/// In-place EMA target update: `target = (1 - tau) * target + tau * online`.
pub fn ema_update(target: &mut ParamVector, online: &ParamVector, tau: f64) {
    debug_assert!(target.layout().same_as(online.layout()));
    for (t, o) in target.values_mut().iter_mut().zip(online.values()) {
        *t = (1.0 - tau) * *t + tau * *o;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_matches_algorithm_shape() {
        let net = LatentConfig::compact(8);
        let robots = vec!["b".to_string(), "a".to_string(), "a".to_string()];
        let mut cfg = TrainConfig { seed: 3, ..TrainConfig::default() };

        cfg.algorithm = Algorithm::Bc;
        let s = init_trainer(&cfg, &net, robots.clone()).unwrap();
        assert_eq!(s.robots, vec!["a".to_string(), "b".to_string()]);
        assert!(s.value.is_none() && s.q.is_none() && s.actor_target.is_none());

        cfg.algorithm = Algorithm::Iql;
        let s = init_trainer(&cfg, &net, robots.clone()).unwrap();
        assert!(s.value.is_some() && s.q.is_some() && s.q_target.is_some());
        assert!(s.actor_target.is_none());
        assert_eq!(s.q.as_ref().unwrap(), s.q_target.as_ref().unwrap());

        cfg.algorithm = Algorithm::Td3bc;
        let s = init_trainer(&cfg, &net, robots).unwrap();
        assert!(s.value.is_none());
        assert!(s.actor_target.is_some() && s.q_target.is_some());
    }

    #[test]
    fn ema_is_exact() {
        let net = LatentConfig::compact(4);
        let layout = actor_layout(&net).unwrap();
        let online = init_params(&layout, 0, "a");
        let mut target = init_params(&layout, 1, "b");
        let before = target.clone();
        let tau = 0.005;
        ema_update(&mut target, &online, tau);
        for ((t, b), o) in target
            .values()
            .iter()
            .zip(before.values())
            .zip(online.values())
        {
            assert_eq!(*t, (1.0 - tau) * *b + tau * *o);
        }
    }

    #[test]
    fn hashes_detect_changes() {
        let net = LatentConfig::compact(4);
        let cfg = TrainConfig::default();
        let s1 = init_trainer(&cfg, &net, vec!["r".into()]).unwrap();
        let mut s2 = s1.clone();
        assert_eq!(state_hash(&s1), state_hash(&s2));
        s2.actor.values_mut()[0] += 1e-12;
        assert_ne!(state_hash(&s1), state_hash(&s2));
    }
}
