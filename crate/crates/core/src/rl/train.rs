use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;

use super::config::{Algorithm, Grouping, TrainConfig};
use super::step::{eg_train_step, normalized_train_step, StepLog};
use super::trainer::{init_trainer, TrainerState};
use crate::analysis::{cosine_record, CosineRecord};
use crate::datasets::RobotShard;
use crate::envs::{evaluate, EmbodimentSpec, ObsBundle, Policy};
use crate::morphology::{build_graph, cluster, distance_matrix};
use crate::nets::{
    actor_forward, deterministic_action, encode, LatentConfig, NetInputs,
};
use crate::numerics::{ParamSource, ParamVector, Tape};
use crate::rng::{stream, substream};
use crate::{Error, Result};

/// Deterministic policy view over actor parameters: the per-joint Gaussian
/// mean, clipped to the torque bound.
pub struct ActorPolicy<'a> {
    pub net: &'a LatentConfig,
    pub params: &'a ParamVector,
}

impl Policy for ActorPolicy<'_> {
    fn act(&self, _spec: &EmbodimentSpec, obs: &ObsBundle) -> Vec<f64> {
        let inp = NetInputs::from_obs(obs);
        let mut tape = Tape::new(self.params);
        let enc = encode(&mut tape, &ParamSource::Live, self.net, &inp).expect("encoder shapes");
        let out =
            actor_forward(&mut tape, &ParamSource::Live, self.net, &inp, enc).expect("actor shapes");
        deterministic_action(&tape, out).row(0).to_vec()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpdateRow {
    pub step: usize,
    pub algorithm: Algorithm,
    /// Actor group index; `None` for the critic-phase row.
    pub group: Option<usize>,
    pub value_loss: Option<f64>,
    pub critic_loss: Option<f64>,
    pub actor_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub step: usize,
    pub robot_id: String,
    pub mean_return: f64,
}

/// Everything a finished run produces.
pub struct TrainOutcome {
    pub state: TrainerState,
    pub groups: Vec<Vec<String>>,
    pub log: Vec<UpdateRow>,
    pub evals: Vec<EvalRow>,
    pub conflicts: Vec<CosineRecord>,
}

/// Resolves the configured grouping into sorted robot-id groups over the
/// robots actually present.
pub fn resolve_groups(
    cfg: &TrainConfig,
    suite: &[EmbodimentSpec],
    robots: &[String],
) -> Result<Vec<Vec<String>>> {
    let spec_of = |id: &String| {
        suite
            .iter()
            .find(|s| &s.id == id)
            .ok_or_else(|| Error::Config(format!("robot `{id}` not in suite")))
    };
    for id in robots {
        spec_of(id)?;
    }
    let m = cfg.m.min(robots.len());
    match cfg.grouping {
        Grouping::None => Ok(vec![robots.to_vec()]),
        Grouping::Eg => {
            if robots.len() < 2 || m < 2 {
                return Ok(vec![robots.to_vec()]);
            }
            let graphs: Vec<_> = robots
                .iter()
                .map(|id| Ok(build_graph(spec_of(id)?)))
                .collect::<Result<_>>()?;
            let dm = distance_matrix(robots, &graphs, 0.5, 1e-3)?;
            let assignment = cluster(&dm, m)?;
            Ok(assignment.groups())
        }
        Grouping::Random => {
            let mut shuffled = robots.to_vec();
            shuffled.shuffle(&mut stream(cfg.seed, "partition"));
            let mut groups = vec![Vec::new(); m];
            for (i, id) in shuffled.into_iter().enumerate() {
                groups[i % m].push(id);
            }
            for g in &mut groups {
                g.sort();
            }
            Ok(groups.into_iter().filter(|g| !g.is_empty()).collect())
        }
        Grouping::Heuristic => {
            let mut by_family: BTreeMap<String, Vec<String>> = BTreeMap::new();
            for id in robots {
                let fam = format!("{:?}", spec_of(id)?.family);
                by_family.entry(fam).or_default().push(id.clone());
            }
            Ok(by_family.into_values().collect())
        }
    }
}

fn eval_rows(
    state: &TrainerState,
    suite: &[EmbodimentSpec],
    command: f64,
    step: usize,
) -> Result<Vec<EvalRow>> {
    let policy = ActorPolicy { net: &state.net, params: &state.actor };
    let mut rows = Vec::with_capacity(state.robots.len());
    for id in &state.robots {
        let spec = suite
            .iter()
            .find(|s| &s.id == id)
            .ok_or_else(|| Error::Config(format!("robot `{id}` not in suite")))?;
        let mut rng = substream(state.cfg.seed, &format!("eval:{id}"), step as u64, 0);
        let mean_return = evaluate(&policy, spec, command, state.cfg.eval_episodes, &mut rng)?;
        rows.push(EvalRow { step, robot_id: id.clone(), mean_return });
    }
    Ok(rows)
}

fn push_log(rows: &mut Vec<UpdateRow>, step: usize, algorithm: Algorithm, sl: &StepLog) {
    if sl.value_loss.is_some() || sl.critic_loss.is_some() {
        rows.push(UpdateRow {
            step,
            algorithm,
            group: None,
            value_loss: sl.value_loss,
            critic_loss: sl.critic_loss,
            actor_loss: None,
        });
    }
    for (gid, loss) in &sl.actor {
        rows.push(UpdateRow {
            step,
            algorithm,
            group: Some(*gid),
            value_loss: None,
            critic_loss: None,
            actor_loss: Some(*loss),
        });
    }
}

/// Continues training from an existing state (used by fine-tuning); records
/// evaluations every `updates / eval_points` iterations and gradient-conflict
/// snapshots every `conflict_every` iterations.
pub fn run_training_from(
    mut state: TrainerState,
    suite: &[EmbodimentSpec],
    shards: &[RobotShard],
    command: f64,
) -> Result<TrainOutcome> {
    let cfg = state.cfg.clone();
    let groups = resolve_groups(&cfg, suite, &state.robots)?;
    let eval_every = (cfg.updates / cfg.eval_points).max(1);

    let mut log = Vec::new();
    let mut evals = eval_rows(&state, suite, command, 0)?;
    let mut conflicts = Vec::new();

    for it in 1..=cfg.updates {
        let sl = if cfg.normalized_mode {
            normalized_train_step(&mut state, shards)?
        } else {
            eg_train_step(&mut state, &groups, shards)?
        };
        push_log(&mut log, it, cfg.algorithm, &sl);

        if cfg.conflict_every > 0 && it % cfg.conflict_every == 0 && state.robots.len() >= 2 {
            conflicts.push(cosine_record(&state, shards, it)?);
        }
        if it % eval_every == 0 || it == cfg.updates {
            evals.extend(eval_rows(&state, suite, command, it)?);
        }
    }
    Ok(TrainOutcome { state, groups, log, evals, conflicts })
}

/// Full training run: initializes from the config seed, resolves the
/// grouping, and trains on all robots present in `shards`.
pub fn run_training(
    cfg: &TrainConfig,
    net: &LatentConfig,
    suite: &[EmbodimentSpec],
    shards: &[RobotShard],
    command: f64,
) -> Result<TrainOutcome> {
    let robots: Vec<String> = shards.iter().map(|s| s.robot_id.clone()).collect();
    if robots.is_empty() {
        return Err(Error::Config("no shards given".into()));
    }
    let state = init_trainer(cfg, net, robots)?;
    run_training_from(state, suite, shards, command)
}

/// Fine-tuning curves for one held-out robot: phase 1 trains on every other
/// robot, phase 2 trains on the held-out robot alone, once from the
/// pre-trained parameters and once from scratch.
pub struct FinetuneOutcome {
    pub pretrained: TrainOutcome,
    pub scratch: TrainOutcome,
}

pub fn pretrain_finetune(
    cfg: &TrainConfig,
    net: &LatentConfig,
    suite: &[EmbodimentSpec],
    shards: &[RobotShard],
    held_out: &str,
    command: f64,
) -> Result<FinetuneOutcome> {
    if !shards.iter().any(|s| s.robot_id == held_out) {
        return Err(Error::Config(format!("held-out robot `{held_out}` not in dataset")));
    }
    let rest: Vec<RobotShard> = shards
        .iter()
        .filter(|s| s.robot_id != held_out)
        .cloned()
        .collect();
    if rest.is_empty() {
        return Err(Error::Config("pre-training set is empty".into()));
    }
    let held: Vec<RobotShard> = shards
        .iter()
        .filter(|s| s.robot_id == held_out)
        .cloned()
        .collect();

    let phase1 = run_training(cfg, net, suite, &rest, command)?;

    let mut warm = init_trainer(cfg, net, vec![held_out.to_string()])?;
    warm.actor = phase1.state.actor.clone();
    warm.actor_target = phase1.state.actor_target.clone();
    warm.value = phase1.state.value.clone();
    warm.q = phase1.state.q.clone();
    warm.q_target = phase1.state.q_target.clone();
    let pretrained = run_training_from(warm, suite, &held, command)?;

    let scratch_state = init_trainer(cfg, net, vec![held_out.to_string()])?;
    let scratch = run_training_from(scratch_state, suite, &held, command)?;

    Ok(FinetuneOutcome { pretrained, scratch })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

/// Writes the update log as CSV: step, algorithm, group, losses.
pub fn save_update_log(path: &Path, rows: &[UpdateRow]) -> Result<()> {
    let mut out = String::from("step,algorithm,group,value_loss,critic_loss,actor_loss\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.step,
            r.algorithm.as_str(),
            r.group.map(|g| g.to_string()).unwrap_or_default(),
            fmt_opt(r.value_loss),
            fmt_opt(r.critic_loss),
            fmt_opt(r.actor_loss),
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Writes the evaluation table as CSV: step, robot, mean return.
pub fn save_eval_table(path: &Path, rows: &[EvalRow]) -> Result<()> {
    let mut out = String::from("step,robot_id,mean_return\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.step, r.robot_id, r.mean_return));
    }
    fs::write(path, out)?;
    Ok(())
}
