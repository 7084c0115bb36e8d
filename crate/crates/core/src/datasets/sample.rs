use ndarray::Array2;
use rand::Rng;

use super::shard::RobotShard;
use crate::{Error, Result};

/// Rows sampled from one robot's shard.
#[derive(Debug, Clone)]
pub struct RobotBatch {
    pub robot_id: String,
    pub n_joints: usize,
    pub n_feet: usize,
    pub o_g: Array2<f64>,
    pub o_j: Array2<f64>,
    pub o_f: Array2<f64>,
    pub action: Array2<f64>,
    pub reward: Vec<f64>,
    pub done: Vec<bool>,
    pub next_o_g: Array2<f64>,
    pub next_o_j: Array2<f64>,
    pub next_o_f: Array2<f64>,
    pub d_j: Array2<f64>,
    pub d_f: Array2<f64>,
}

impl RobotBatch {
    pub fn len(&self) -> usize {
        self.reward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reward.is_empty()
    }
}

/// A per-robot minibatch plus a flat index over all sampled transitions.
#[derive(Debug, Clone)]
pub struct MiniBatch {
    pub per_robot: Vec<RobotBatch>,
}

impl MiniBatch {
    pub fn total_len(&self) -> usize {
        self.per_robot.iter().map(|b| b.len()).sum()
    }

    /// Concatenated view: `(robot index, row within that robot's batch)` in
    /// robot order.
    pub fn flat_index(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.total_len());
        for (r, batch) in self.per_robot.iter().enumerate() {
            for i in 0..batch.len() {
                out.push((r, i));
            }
        }
        out
    }
}

fn gather(m: &Array2<f64>, rows: &[usize]) -> Array2<f64> {
    Array2::from_shape_fn((rows.len(), m.ncols()), |(r, c)| m[(rows[r], c)])
}

/// Uniform with-replacement sampling of `per_robot_batch` rows from each
/// requested robot, in the order given by `robots`.
pub fn sample_batch(
    shards: &[RobotShard],
    robots: &[String],
    per_robot_batch: usize,
    rng: &mut impl Rng,
) -> Result<MiniBatch> {
    let mut per_robot = Vec::with_capacity(robots.len());
    for id in robots {
        let shard = shards
            .iter()
            .find(|s| &s.robot_id == id)
            .ok_or_else(|| Error::Config(format!("sample_batch: unknown robot `{id}`")))?;
        if shard.len() < per_robot_batch {
            return Err(Error::InsufficientData(format!(
                "robot `{id}` has {} transitions, need {per_robot_batch}",
                shard.len()
            )));
        }
        let rows: Vec<usize> =
            (0..per_robot_batch).map(|_| rng.gen_range(0..shard.len())).collect();
        per_robot.push(RobotBatch {
            robot_id: shard.robot_id.clone(),
            n_joints: shard.n_joints,
            n_feet: shard.n_feet,
            o_g: gather(&shard.o_g, &rows),
            o_j: gather(&shard.o_j, &rows),
            o_f: gather(&shard.o_f, &rows),
            action: gather(&shard.action, &rows),
            reward: rows.iter().map(|&i| shard.reward[i]).collect(),
            done: rows.iter().map(|&i| shard.done[i]).collect(),
            next_o_g: gather(&shard.next_o_g, &rows),
            next_o_j: gather(&shard.next_o_j, &rows),
            next_o_f: gather(&shard.next_o_f, &rows),
            d_j: shard.d_j.clone(),
            d_f: shard.d_f.clone(),
        });
    }
    Ok(MiniBatch { per_robot })
}
