use ndarray::Array2;

use super::shard::{DatasetManifest, RobotShard, VariantTag, FORMAT_VERSION};
use crate::envs::{observe, rollout_scripted, EmbodimentSpec, Episode};
use crate::rng::substream;
use crate::{Error, Result};

pub use super::shard::VariantTag as Variant;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn command(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        }
    }
}

/// Scripted-controller sweep standing in for a behavior policy's training
/// run: `n_ramp` episodes interpolating gain and noise from weak to expert,
/// then `n_plateau` episodes at expert settings. Episodes with gain below
/// `early_eta` are tagged as the early phase.
#[derive(Debug, Clone)]
pub struct SweepSchedule {
    pub n_ramp: usize,
    pub n_plateau: usize,
    pub eta_start: f64,
    pub eta_end: f64,
    pub sigma_start: f64,
    pub sigma_end: f64,
    pub early_eta: f64,
    pub ma_window: usize,
}

impl Default for SweepSchedule {
    fn default() -> Self {
        SweepSchedule {
            n_ramp: 300,
            n_plateau: 320,
            eta_start: 0.05,
            eta_end: 1.0,
            sigma_start: 0.8,
            sigma_end: 0.05,
            early_eta: 0.4,
            ma_window: 10,
        }
    }
}

impl SweepSchedule {
    /// `(eta, sigma)` of sweep episode `k`.
    fn settings(&self, k: usize) -> (f64, f64) {
        if k >= self.n_ramp {
            return (self.eta_end, self.sigma_end);
        }
        let frac = k as f64 / (self.n_ramp - 1) as f64;
        (
            self.eta_start + (self.eta_end - self.eta_start) * frac,
            self.sigma_start + (self.sigma_end - self.sigma_start) * frac,
        )
    }

    fn len(&self) -> usize {
        self.n_ramp + self.n_plateau
    }
}

const EXPERT_SIGMA: f64 = 0.05;

fn expert_oracle_check(spec: &EmbodimentSpec, command: f64, seed: u64) -> Result<()> {
    let mut rng = substream(seed, &format!("expert-oracle:{}", spec.id), 0, 0);
    let ep = rollout_scripted(spec, command, 1.0, 0.0, &mut rng)?;
    if ep.len() < 51 {
        return Err(Error::Generation {
            spec_id: spec.id.clone(),
            reason: format!("expert episode ended after {} steps", ep.len()),
        });
    }
    let errs: Vec<f64> =
        ep.states[50..].iter().map(|s| (s.base_velocity(spec) - command).abs()).collect();
    let mean = errs.iter().sum::<f64>() / errs.len() as f64;
    if mean >= 0.05 {
        return Err(Error::Generation {
            spec_id: spec.id.clone(),
            reason: format!("expert tracking error {mean:.4} >= 0.05"),
        });
    }
    Ok(())
}

fn episodes_to_shard(
    spec: &EmbodimentSpec,
    episodes: &[Episode],
    early: &[bool],
) -> RobotShard {
    assert_eq!(episodes.len(), early.len());
    let n: usize = episodes.iter().map(|e| e.len()).sum();
    let (j, f) = (spec.n_joints, spec.n_feet);
    let mut o_g = Array2::zeros((n, 3));
    let mut o_j = Array2::zeros((n, j * 3));
    let mut o_f = Array2::zeros((n, f * 2));
    let mut action = Array2::zeros((n, j));
    let mut next_o_g = Array2::zeros((n, 3));
    let mut next_o_j = Array2::zeros((n, j * 3));
    let mut next_o_f = Array2::zeros((n, f * 2));
    let mut reward = Vec::with_capacity(n);
    let mut done = Vec::with_capacity(n);
    let mut episode_starts = Vec::with_capacity(episodes.len());
    let mut row = 0;
    for ep in episodes {
        episode_starts.push(row);
        for t in 0..ep.len() {
            for (target_g, target_j, target_f, state) in [
                (&mut o_g, &mut o_j, &mut o_f, &ep.states[t]),
                (&mut next_o_g, &mut next_o_j, &mut next_o_f, &ep.states[t + 1]),
            ] {
                let obs = observe(spec, state);
                for (k, v) in obs.o_g.iter().enumerate() {
                    target_g[(row, k)] = *v;
                }
                for (jj, trip) in obs.o_j.iter().enumerate() {
                    for (k, v) in trip.iter().enumerate() {
                        target_j[(row, jj * 3 + k)] = *v;
                    }
                }
                for (ff, pair) in obs.o_f.iter().enumerate() {
                    for (k, v) in pair.iter().enumerate() {
                        target_f[(row, ff * 2 + k)] = *v;
                    }
                }
            }
            for (k, a) in ep.actions[t].iter().enumerate() {
                action[(row, k)] = *a;
            }
            reward.push(ep.rewards[t]);
            done.push(t + 1 == ep.len());
            row += 1;
        }
    }
    let d_j = Array2::from_shape_fn((j, 4), |(r, c)| spec.descriptor_joint(r)[c]);
    let d_f = Array2::from_shape_fn((f, 2), |(r, c)| spec.descriptor_foot(r)[c]);
    RobotShard {
        robot_id: spec.id.clone(),
        n_joints: j,
        n_feet: f,
        o_g,
        o_j,
        o_f,
        action,
        reward,
        done,
        next_o_g,
        next_o_j,
        next_o_f,
        d_j,
        d_f,
        episode_starts,
        early_phase: early.to_vec(),
    }
}

fn manifest_for(
    variant: VariantTag,
    direction: Direction,
    mixture_fraction: f64,
    seed: u64,
    shards: &[RobotShard],
) -> DatasetManifest {
    DatasetManifest {
        format_version: FORMAT_VERSION.into(),
        variant,
        command: direction.command(),
        mixture_fraction,
        seed,
        counts: shards.iter().map(|s| (s.robot_id.clone(), s.len())).collect(),
    }
}

/// Expert datasets: the scripted expert with small exploration noise,
/// whole episodes until the per-robot step budget is reached.
pub fn gen_expert(
    suite: &[EmbodimentSpec],
    direction: Direction,
    steps_per_robot: usize,
    seed: u64,
) -> Result<(Vec<RobotShard>, DatasetManifest)> {
    let mut shards = Vec::new();
    for spec in suite {
        expert_oracle_check(spec, direction.command(), seed)?;
        let mut episodes = Vec::new();
        let mut steps = 0;
        let mut k = 0u64;
        while steps < steps_per_robot {
            let mut rng =
                substream(seed, &format!("expert:{}:{}", direction.label(), spec.id), k, 0);
            let ep = rollout_scripted(spec, direction.command(), 1.0, EXPERT_SIGMA, &mut rng)?;
            steps += ep.len();
            episodes.push(ep);
            k += 1;
        }
        let early = vec![false; episodes.len()];
        shards.push(episodes_to_shard(spec, &episodes, &early));
    }
    let manifest = manifest_for(VariantTag::Expert, direction, 0.0, seed, &shards);
    Ok((shards, manifest))
}

/// Runs the full sweep for one robot. Returns episodes plus their early-phase
/// tags.
fn run_sweep(
    spec: &EmbodimentSpec,
    direction: Direction,
    schedule: &SweepSchedule,
    seed: u64,
) -> Result<(Vec<Episode>, Vec<bool>)> {
    let mut episodes = Vec::with_capacity(schedule.len());
    let mut early = Vec::with_capacity(schedule.len());
    for k in 0..schedule.len() {
        let (eta, sigma) = schedule.settings(k);
        let mut rng =
            substream(seed, &format!("sweep:{}:{}", direction.label(), spec.id), k as u64, 0);
        episodes.push(rollout_scripted(spec, direction.command(), eta, sigma, &mut rng)?);
        early.push(eta < schedule.early_eta);
    }
    Ok((episodes, early))
}

/// Trailing moving average of episode returns (window clipped at the start).
fn moving_average(returns: &[f64], window: usize) -> Vec<f64> {
    (0..returns.len())
        .map(|k| {
            let lo = (k + 1).saturating_sub(window);
            let slice = &returns[lo..=k];
            slice.iter().sum::<f64>() / slice.len() as f64
        })
        .collect()
}

/// First index whose moving-average return reaches 90% of the final
/// moving-average value.
fn crossing_index(returns: &[f64], window: usize) -> Option<usize> {
    let ma = moving_average(returns, window);
    let threshold = 0.9 * *ma.last()?;
    ma.iter().position(|&v| v >= threshold)
}

/// Keeps whole episodes at approximately equal intervals so the kept step
/// count tracks `target_steps`.
fn subsample_episodes(episodes: &[Episode], target_steps: usize) -> Vec<usize> {
    let total: usize = episodes.iter().map(|e| e.len()).sum();
    if total <= target_steps {
        return (0..episodes.len()).collect();
    }
    let ratio = target_steps as f64 / total as f64;
    let mut kept_steps = 0usize;
    let mut seen_steps = 0usize;
    let mut kept = Vec::new();
    for (i, ep) in episodes.iter().enumerate() {
        seen_steps += ep.len();
        if (kept_steps as f64) < ratio * seen_steps as f64 {
            kept.push(i);
            kept_steps += ep.len();
        }
    }
    kept
}

/// Replay datasets: the sweep truncated at the first 90%-of-final crossing
/// of the moving-average return, subsampled by whole episodes down to the
/// step budget.
pub fn gen_replay(
    suite: &[EmbodimentSpec],
    direction: Direction,
    steps_per_robot: usize,
    seed: u64,
) -> Result<(Vec<RobotShard>, DatasetManifest)> {
    let schedule = SweepSchedule::default();
    let mut shards = Vec::new();
    for spec in suite {
        expert_oracle_check(spec, direction.command(), seed)?;
        let (episodes, early) = run_sweep(spec, direction, &schedule, seed)?;
        let returns: Vec<f64> = episodes.iter().map(|e| e.ret()).collect();
        let cross = crossing_index(&returns, schedule.ma_window).ok_or_else(|| {
            Error::Generation {
                spec_id: spec.id.clone(),
                reason: "sweep never reached 90% of final performance".into(),
            }
        })?;
        let truncated = &episodes[..=cross];
        let keep = subsample_episodes(truncated, steps_per_robot);
        let kept: Vec<Episode> = keep.iter().map(|&i| truncated[i].clone()).collect();
        let kept_early: Vec<bool> = keep.iter().map(|&i| early[i]).collect();
        shards.push(episodes_to_shard(spec, &kept, &kept_early));
    }
    let manifest = manifest_for(VariantTag::Replay, direction, 0.0, seed, &shards);
    Ok((shards, manifest))
}

/// Mixture datasets: `x` of the step budget from the earliest (lowest-gain)
/// sweep episodes, the rest from the end of the sweep working backward
/// (expert-settings plateau first).
pub fn gen_mixture(
    suite: &[EmbodimentSpec],
    direction: Direction,
    steps_per_robot: usize,
    x: f64,
    seed: u64,
) -> Result<(Vec<RobotShard>, DatasetManifest)> {
    assert!((0.0..=1.0).contains(&x));
    let schedule = SweepSchedule::default();
    let mut shards = Vec::new();
    for spec in suite {
        expert_oracle_check(spec, direction.command(), seed)?;
        let (episodes, early) = run_sweep(spec, direction, &schedule, seed)?;
        let target_early = (x * steps_per_robot as f64).round() as usize;
        let mut chosen: Vec<usize> = Vec::new();
        let mut early_steps = 0usize;
        for (i, ep) in episodes.iter().enumerate() {
            if early_steps >= target_early {
                break;
            }
            if !early[i] {
                return Err(Error::Generation {
                    spec_id: spec.id.clone(),
                    reason: format!(
                        "early sweep phase exhausted after {early_steps} of {target_early} steps"
                    ),
                });
            }
            chosen.push(i);
            early_steps += ep.len();
        }
        let mut total = early_steps;
        let mut late: Vec<usize> = Vec::new();
        for i in (0..episodes.len()).rev() {
            if total >= steps_per_robot {
                break;
            }
            late.push(i);
            total += episodes[i].len();
        }
        late.reverse();
        chosen.extend(late);
        let kept: Vec<Episode> = chosen.iter().map(|&i| episodes[i].clone()).collect();
        let kept_early: Vec<bool> = chosen.iter().map(|&i| early[i]).collect();
        shards.push(episodes_to_shard(spec, &kept, &kept_early));
    }
    let manifest = manifest_for(VariantTag::Mixture, direction, x, seed, &shards);
    Ok((shards, manifest))
}
