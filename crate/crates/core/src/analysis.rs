//! Gradient-conflict and transfer instrumentation: per-robot actor
//! gradients, pairwise cosine matrices, negative-fraction curves, histograms,
//! transfer gains, and the correlation statistics tying them together.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use ndarray::Array2;

use crate::datasets::{sample_batch, MiniBatch, RobotShard};
use crate::envs::EmbodimentSpec;
use crate::nets::LatentConfig;
use crate::numerics::{cosine, ParamVector};
use crate::rl::{actor_grad, run_training, TrainConfig, TrainerState};
use crate::rng::substream;
use crate::stats::pearson;
use crate::{Error, Result};

pub const HIST_BINS: usize = 50;

/// Pairwise actor-gradient cosine matrix at one training step. Degenerate
/// gradients leave NaN entries; everything else is in `[-1, 1]` with a unit
/// diagonal.
#[derive(Debug, Clone)]
pub struct CosineRecord {
    pub step: usize,
    pub labels: Vec<String>,
    pub matrix: Array2<f64>,
}

/// Gradient of the configured actor loss per robot on its sub-batch, without
/// touching any parameters. Near-zero gradients are flagged per robot.
pub fn per_robot_actor_grads(
    state: &TrainerState,
    batch: &MiniBatch,
) -> Vec<(String, Result<ParamVector>)> {
    batch
        .per_robot
        .iter()
        .map(|b| {
            let res = actor_grad(state, &[b]).and_then(|report| {
                if report.grad_norm < 1e-12 {
                    Err(Error::DegenerateGradient {
                        context: format!("actor:{}", b.robot_id),
                        norm: report.grad_norm,
                    })
                } else {
                    Ok(report.grad)
                }
            });
            (b.robot_id.clone(), res)
        })
        .collect()
}

/// Samples a measurement batch from a dedicated stream (so training rng
/// state is untouched) and records the pairwise cosine matrix.
pub fn cosine_record(
    state: &TrainerState,
    shards: &[RobotShard],
    step: usize,
) -> Result<CosineRecord> {
    let mut rng = substream(state.cfg.seed, "conflict", step as u64, 0);
    let batch = sample_batch(shards, &state.robots, state.cfg.per_robot_batch, &mut rng)?;
    let grads = per_robot_actor_grads(state, &batch);
    let n = grads.len();
    let mut matrix = Array2::from_elem((n, n), f64::NAN);
    for i in 0..n {
        if grads[i].1.is_ok() {
            matrix[(i, i)] = 1.0;
        }
        for j in i + 1..n {
            if let (Ok(gi), Ok(gj)) = (&grads[i].1, &grads[j].1) {
                if let Ok(c) = cosine(gi, gj) {
                    matrix[(i, j)] = c;
                    matrix[(j, i)] = c;
                }
            }
        }
    }
    Ok(CosineRecord {
        step,
        labels: grads.into_iter().map(|(id, _)| id).collect(),
        matrix,
    })
}

/// Aggregates cosine records: negative fraction over time, time-mean matrix,
/// and a unit-mass histogram of all upper-triangle cosines.
#[derive(Debug, Clone)]
pub struct ConflictStats {
    pub labels: Vec<String>,
    pub steps: Vec<usize>,
    pub negative_fraction: Vec<f64>,
    pub mean_matrix: Array2<f64>,
    pub histogram: Vec<f64>,
}

impl ConflictStats {
    /// Mean negative fraction over the recorded steps.
    pub fn mean_negative_fraction(&self) -> f64 {
        self.negative_fraction.iter().sum::<f64>() / self.negative_fraction.len() as f64
    }

    /// Time-mean of each robot's row mean excluding the diagonal.
    pub fn mean_cosine_rows(&self) -> BTreeMap<String, f64> {
        let n = self.labels.len();
        let mut out = BTreeMap::new();
        for i in 0..n {
            let mut sum = 0.0;
            let mut count = 0usize;
            for j in 0..n {
                if j != i && self.mean_matrix[(i, j)].is_finite() {
                    sum += self.mean_matrix[(i, j)];
                    count += 1;
                }
            }
            if count > 0 {
                out.insert(self.labels[i].clone(), sum / count as f64);
            }
        }
        out
    }
}

pub fn conflict_stats(records: &[CosineRecord]) -> Result<ConflictStats> {
    let first = records
        .first()
        .ok_or_else(|| Error::InsufficientData("no cosine records".into()))?;
    let labels = first.labels.clone();
    let n = labels.len();
    for r in records {
        if r.labels != labels || r.matrix.dim() != (n, n) {
            return Err(Error::Shape("cosine records disagree on robots".into()));
        }
    }

    let mut steps = Vec::with_capacity(records.len());
    let mut negative_fraction = Vec::with_capacity(records.len());
    let mut sums = Array2::<f64>::zeros((n, n));
    let mut counts = Array2::<f64>::zeros((n, n));
    let mut hist = vec![0.0; HIST_BINS];
    let mut hist_total = 0.0;

    for r in records {
        steps.push(r.step);
        let mut neg = 0usize;
        let mut pairs = 0usize;
        for i in 0..n {
            for j in 0..n {
                let c = r.matrix[(i, j)];
                if c.is_finite() {
                    sums[(i, j)] += c;
                    counts[(i, j)] += 1.0;
                }
                if j > i && c.is_finite() {
                    pairs += 1;
                    if c < 0.0 {
                        neg += 1;
                    }
                    let bin = (((c + 1.0) / 2.0 * HIST_BINS as f64) as usize).min(HIST_BINS - 1);
                    hist[bin] += 1.0;
                    hist_total += 1.0;
                }
            }
        }
        negative_fraction.push(if pairs > 0 { neg as f64 / pairs as f64 } else { f64::NAN });
    }

    let mean_matrix = Array2::from_shape_fn((n, n), |(i, j)| {
        if counts[(i, j)] > 0.0 {
            sums[(i, j)] / counts[(i, j)]
        } else {
            f64::NAN
        }
    });
    if hist_total > 0.0 {
        for h in &mut hist {
            *h /= hist_total;
        }
    }
    Ok(ConflictStats { labels, steps, negative_fraction, mean_matrix, histogram: hist })
}

/// Per-robot transfer outcome: return under single-robot training, return
/// under cross-embodiment training, and the flag for gains beyond 10% of the
/// robot's expert reference.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferReport {
    pub robot_id: String,
    pub single_return: f64,
    pub cross_return: f64,
    pub expert_ref: f64,
    pub flagged: bool,
}

impl TransferReport {
    pub fn new(robot_id: &str, single_return: f64, cross_return: f64, expert_ref: f64) -> Self {
        let flagged = (cross_return - single_return).abs() > 0.1 * expert_ref;
        TransferReport {
            robot_id: robot_id.to_string(),
            single_return,
            cross_return,
            expert_ref,
            flagged,
        }
    }

    pub fn gain(&self) -> f64 {
        self.cross_return - self.single_return
    }
}

/// Pearson correlation (with p-value) between transfer gain and each flagged
/// robot's mean cosine row.
pub fn transfer_correlation(
    reports: &[TransferReport],
    mean_cosine_rows: &BTreeMap<String, f64>,
) -> Result<(f64, f64)> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for r in reports.iter().filter(|r| r.flagged) {
        let Some(&c) = mean_cosine_rows.get(&r.robot_id) else {
            return Err(Error::Config(format!("no mean cosine for `{}`", r.robot_id)));
        };
        xs.push(r.gain());
        ys.push(c);
    }
    if xs.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} flagged robots, need at least 3",
            xs.len()
        )));
    }
    pearson(&xs, &ys)
}

/// Pearson correlation between embodiment similarity and mean pairwise
/// cosine over all upper-triangle pairs.
pub fn similarity_alignment_correlation(
    similarity: &Array2<f64>,
    mean_matrix: &Array2<f64>,
) -> Result<(f64, f64)> {
    if similarity.dim() != mean_matrix.dim() {
        return Err(Error::Shape("similarity and cosine matrices differ in size".into()));
    }
    let n = similarity.nrows();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if mean_matrix[(i, j)].is_finite() {
                xs.push(similarity[(i, j)]);
                ys.push(mean_matrix[(i, j)]);
            }
        }
    }
    if xs.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} finite pairs, need at least 3",
            xs.len()
        )));
    }
    pearson(&xs, &ys)
}

/// Trains once per robot subset and reports the mean negative fraction for
/// each; subsets without pairs report `None`.
pub fn diversity_sweep(
    cfg: &TrainConfig,
    net: &LatentConfig,
    suite: &[EmbodimentSpec],
    shards: &[RobotShard],
    subsets: &[Vec<String>],
    command: f64,
) -> Result<Vec<Option<f64>>> {
    let mut out = Vec::with_capacity(subsets.len());
    for subset in subsets {
        if subset.len() < 2 {
            out.push(None);
            continue;
        }
        let chosen: Vec<RobotShard> = shards
            .iter()
            .filter(|s| subset.contains(&s.robot_id))
            .cloned()
            .collect();
        if chosen.len() != subset.len() {
            return Err(Error::Config("subset robot missing from dataset".into()));
        }
        let outcome = run_training(cfg, net, suite, &chosen, command)?;
        let stats = conflict_stats(&outcome.conflicts)?;
        out.push(Some(stats.mean_negative_fraction()));
    }
    Ok(out)
}

/// CSV export: one row per (step, i, j) upper-triangle cosine.
pub fn save_cosine_series(path: &Path, records: &[CosineRecord]) -> Result<()> {
    let mut out = String::from("step,robot_i,robot_j,cosine\n");
    for r in records {
        let n = r.labels.len();
        for i in 0..n {
            for j in i + 1..n {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    r.step,
                    r.labels[i],
                    r.labels[j],
                    r.matrix[(i, j)]
                ));
            }
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// CSV export: negative fraction per recorded step.
pub fn save_negative_fraction(path: &Path, stats: &ConflictStats) -> Result<()> {
    let mut out = String::from("step,negative_fraction\n");
    for (s, f) in stats.steps.iter().zip(&stats.negative_fraction) {
        out.push_str(&format!("{s},{f}\n"));
    }
    fs::write(path, out)?;
    Ok(())
}

/// CSV export of a labeled square matrix.
pub fn save_matrix(path: &Path, labels: &[String], matrix: &Array2<f64>) -> Result<()> {
    let mut out = String::from("robot");
    for l in labels {
        out.push(',');
        out.push_str(l);
    }
    out.push('\n');
    for (i, l) in labels.iter().enumerate() {
        out.push_str(l);
        for j in 0..labels.len() {
            out.push_str(&format!(",{}", matrix[(i, j)]));
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// CSV export of the cosine histogram (bin midpoints on [-1, 1]).
pub fn save_histogram(path: &Path, stats: &ConflictStats) -> Result<()> {
    let mut out = String::from("bin_mid,mass\n");
    let w = 2.0 / HIST_BINS as f64;
    for (k, m) in stats.histogram.iter().enumerate() {
        out.push_str(&format!("{},{m}\n", -1.0 + (k as f64 + 0.5) * w));
    }
    fs::write(path, out)?;
    Ok(())
}

/// CSV export of per-robot transfer reports.
pub fn save_transfer_reports(path: &Path, reports: &[TransferReport]) -> Result<()> {
    let mut out = String::from("robot_id,single_return,cross_return,gain,expert_ref,flagged\n");
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.robot_id,
            r.single_return,
            r.cross_return,
            r.gain(),
            r.expert_ref,
            r.flagged
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

/// CSV export of (similarity, mean cosine) scatter points per pair.
pub fn save_scatter(
    path: &Path,
    labels: &[String],
    similarity: &Array2<f64>,
    mean_matrix: &Array2<f64>,
) -> Result<()> {
    let mut out = String::from("robot_i,robot_j,similarity,mean_cosine\n");
    for i in 0..labels.len() {
        for j in i + 1..labels.len() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                labels[i],
                labels[j],
                similarity[(i, j)],
                mean_matrix[(i, j)]
            ));
        }
    }
    fs::write(path, out)?;
    Ok(())
}
