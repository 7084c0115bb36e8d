use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use super::config::{Algorithm, ConflictResolver};
use super::losses::{actor_grad, grad_with};
use super::pcgrad::pcgrad_combine;
use super::trainer::{ema_update, TrainerState};
use crate::datasets::{sample_batch, MiniBatch, RobotBatch, RobotShard};
use crate::nets::{actor_forward, encode, q_forward, v_forward, NetInputs};
use crate::numerics::{optim_step, ParamSource, Tape};
use crate::{Error, Result};

/// Losses recorded by one outer iteration: critic-side losses once (or
/// averaged over group sub-steps in the critic-grouped variant) and one actor
/// loss per group actually updated.
#[derive(Debug, Clone, Default)]
pub struct StepLog {
    pub value_loss: Option<f64>,
    pub critic_loss: Option<f64>,
    pub actor: Vec<(usize, f64)>,
}

fn refs<'a>(batch: &'a MiniBatch, ids: &[String]) -> Result<Vec<&'a RobotBatch>> {
    let mut out = Vec::with_capacity(ids.len());
    for id in ids {
        let b = batch
            .per_robot
            .iter()
            .find(|b| &b.robot_id == id)
            .ok_or_else(|| Error::Grouping(format!("robot `{id}` missing from batch")))?;
        out.push(b);
    }
    if out.is_empty() {
        return Err(Error::Grouping("empty group sub-batch".into()));
    }
    Ok(out)
}

/// Asymmetric expectile weight `|tau - 1[u < 0]|`.
pub fn expectile_weight(u: f64, tau: f64) -> f64 {
    if u >= 0.0 {
        tau
    } else {
        1.0 - tau
    }
}

/// Fits a scalar location parameter to `targets` by gradient descent on the
/// mean expectile loss, the same asymmetric weighting the value update uses.
pub fn expectile_fit(targets: &[f64], tau: f64, iters: usize, lr: f64) -> f64 {
    let mut v = targets.iter().sum::<f64>() / targets.len() as f64;
    for _ in 0..iters {
        let grad: f64 = targets
            .iter()
            .map(|t| {
                let u = t - v;
                -2.0 * expectile_weight(u, tau) * u
            })
            .sum::<f64>()
            / targets.len() as f64;
        v -= lr * grad;
    }
    v
}

/// Expectile-regression value step plus TD steps on both Q heads, each one
/// optimizer step, using the target Q for the value regression and the fresh
/// value estimate for the TD target.
pub(crate) fn iql_critic_update(
    state: &mut TrainerState,
    batches: &[&RobotBatch],
) -> Result<(f64, f64)> {
    let net = state.net.clone();
    let cfg = state.cfg.clone();
    let total: usize = batches.iter().map(|b| b.len()).sum();

    let q_target = state.q_target.as_ref().expect("iql target q");
    let mut min_q = Vec::with_capacity(batches.len());
    for b in batches {
        let inp = NetInputs::from_batch(b, false);
        let mut tape = Tape::new(q_target);
        let enc = encode(&mut tape, &ParamSource::Live, &net, &inp)?;
        let act = tape.constant(b.action.clone());
        let (q1, q2) = q_forward(&mut tape, &ParamSource::Live, &net, enc.zbar, act)?;
        let q1v = tape.value(q1);
        let q2v = tape.value(q2);
        min_q.push(Array2::from_shape_fn((b.len(), 1), |(r, _)| {
            q1v[(r, 0)].min(q2v[(r, 0)])
        }));
    }

    let value = state.value.as_ref().expect("iql value net");
    let report = grad_with(value, |tape| {
        let mut acc = None;
        for (b, mq) in batches.iter().zip(&min_q) {
            let inp = NetInputs::from_batch(b, false);
            let enc = encode(tape, &ParamSource::Live, &net, &inp)?;
            let v = v_forward(tape, &ParamSource::Live, &net, enc.zbar)?;
            let target = tape.constant(mq.clone());
            let u = tape.sub(target, v);
            let mask = {
                let uv = tape.value(u);
                Array2::from_shape_fn(uv.dim(), |(r, c)| expectile_weight(uv[(r, c)], cfg.tau_exp))
            };
            let w = tape.constant(mask);
            let sq = tape.square(u);
            let weighted = tape.mul(sq, w);
            let s = tape.sum_all(weighted);
            acc = Some(match acc {
                Some(prev) => tape.add(prev, s),
                None => s,
            });
        }
        Ok(tape.scale(acc.expect("nonempty"), 1.0 / total as f64))
    })?;
    let (value_new, value_opt_new) = optim_step(
        state.value.as_ref().unwrap(),
        &report.grad,
        state.value_opt.as_ref().unwrap(),
        cfg.max_grad_norm,
    )?;
    state.value = Some(value_new);
    state.value_opt = Some(value_opt_new);
    let value_loss = report.loss;

    let value = state.value.as_ref().unwrap();
    let mut targets = Vec::with_capacity(batches.len());
    for b in batches {
        let inp = NetInputs::from_batch(b, true);
        let mut tape = Tape::new(value);
        let enc = encode(&mut tape, &ParamSource::Live, &net, &inp)?;
        let v = v_forward(&mut tape, &ParamSource::Live, &net, enc.zbar)?;
        let vv = tape.value(v);
        targets.push(Array2::from_shape_fn((b.len(), 1), |(r, _)| {
            let mask = if b.done[r] { 0.0 } else { 1.0 };
            b.reward[r] + cfg.gamma * mask * vv[(r, 0)]
        }));
    }
    let q_loss = q_td_step(state, batches, &targets)?;
    state.critic_steps += 1;
    Ok((value_loss, q_loss))
}

/// Squared-error step on both Q heads toward the given `(n, 1)` targets.
fn q_td_step(
    state: &mut TrainerState,
    batches: &[&RobotBatch],
    targets: &[Array2<f64>],
) -> Result<f64> {
    let net = state.net.clone();
    let total: usize = batches.iter().map(|b| b.len()).sum();
    let q = state.q.as_ref().expect("critic q");
    let report = grad_with(q, |tape| {
        let mut acc = None;
        for (b, y) in batches.iter().zip(targets) {
            let inp = NetInputs::from_batch(b, false);
            let enc = encode(tape, &ParamSource::Live, &net, &inp)?;
            let act = tape.constant(b.action.clone());
            let (q1, q2) = q_forward(tape, &ParamSource::Live, &net, enc.zbar, act)?;
            let yc = tape.constant(y.clone());
            let d1 = tape.sub(yc, q1);
            let d2 = tape.sub(yc, q2);
            let s1 = tape.square(d1);
            let s2 = tape.square(d2);
            let both = tape.add(s1, s2);
            let s = tape.sum_all(both);
            acc = Some(match acc {
                Some(prev) => tape.add(prev, s),
                None => s,
            });
        }
        Ok(tape.scale(acc.expect("nonempty"), 1.0 / total as f64))
    })?;
    let (q_new, q_opt_new) = optim_step(
        state.q.as_ref().unwrap(),
        &report.grad,
        state.q_opt.as_ref().unwrap(),
        state.cfg.max_grad_norm,
    )?;
    state.q = Some(q_new);
    state.q_opt = Some(q_opt_new);
    Ok(report.loss)
}

/// TD3+BC critic step: smoothed target-policy actions, clipped TD target
/// from the target twin minimum, squared error on both heads.
pub(crate) fn td3_critic_update(state: &mut TrainerState, batches: &[&RobotBatch]) -> Result<f64> {
    let net = state.net.clone();
    let cfg = state.cfg.clone();
    // draw all smoothing noise first so the target-network borrows below
    // do not overlap the rng borrow
    let noise: Vec<Array2<f64>> = batches
        .iter()
        .map(|b| {
            Array2::from_shape_fn((b.len(), b.n_joints), |_| {
                let eps: f64 = state.noise_rng.sample(StandardNormal);
                (cfg.policy_noise * eps).clamp(-cfg.noise_clip, cfg.noise_clip)
            })
        })
        .collect();
    let actor_target = state.actor_target.as_ref().expect("td3 target actor");
    let q_target = state.q_target.as_ref().expect("td3 target q");

    let mut targets = Vec::with_capacity(batches.len());
    for (b, eta) in batches.iter().zip(&noise) {
        let inp = NetInputs::from_batch(b, true);
        let mut at = Tape::new(actor_target);
        let enc = encode(&mut at, &ParamSource::Live, &net, &inp)?;
        let out = actor_forward(&mut at, &ParamSource::Live, &net, &inp, enc)?;
        let mu = at.value(out.mu).clone();
        let next_action = Array2::from_shape_fn(mu.dim(), |(r, c)| {
            (mu[(r, c)] + eta[(r, c)]).clamp(-cfg.a_max, cfg.a_max)
        });

        let mut qt = Tape::new(q_target);
        let enc_q = encode(&mut qt, &ParamSource::Live, &net, &inp)?;
        let act = qt.constant(next_action);
        let (q1, q2) = q_forward(&mut qt, &ParamSource::Live, &net, enc_q.zbar, act)?;
        let q1v = qt.value(q1);
        let q2v = qt.value(q2);
        targets.push(Array2::from_shape_fn((b.len(), 1), |(r, _)| {
            let mask = if b.done[r] { 0.0 } else { 1.0 };
            b.reward[r] + cfg.gamma * mask * q1v[(r, 0)].min(q2v[(r, 0)])
        }));
    }
    let loss = q_td_step(state, batches, &targets)?;
    state.critic_steps += 1;
    Ok(loss)
}

/// One actor optimizer step on the given sub-batch, honoring the configured
/// conflict resolver. Returns the loss.
pub(crate) fn actor_update(state: &mut TrainerState, batches: &[&RobotBatch]) -> Result<f64> {
    let total: usize = batches.iter().map(|b| b.len()).sum();
    let (grad, loss) = if state.cfg.conflict_resolver == ConflictResolver::Pcgrad
        && batches.len() >= 2
    {
        let mut grads = Vec::with_capacity(batches.len());
        let mut loss_sum = 0.0;
        for b in batches {
            let report = actor_grad(state, &[b])?;
            loss_sum += report.loss * b.len() as f64;
            grads.push((b.robot_id.clone(), report.grad));
        }
        let combined = pcgrad_combine(&grads, &mut state.shuffle_rng)?;
        (combined, loss_sum / total as f64)
    } else {
        let report = actor_grad(state, batches)?;
        (report.grad, report.loss)
    };
    let (actor_new, opt_new) = optim_step(&state.actor, &grad, &state.actor_opt, state.cfg.max_grad_norm)?;
    state.actor = actor_new;
    state.actor_opt = opt_new;
    state.actor_steps += 1;
    state.actor_samples += total as u64;
    Ok(loss)
}

fn critic_phase(state: &mut TrainerState, groups: &[Vec<String>], batch: &MiniBatch) -> Result<StepLog> {
    let mut log = StepLog::default();
    match state.cfg.algorithm {
        Algorithm::Bc => {}
        Algorithm::Iql => {
            if state.cfg.critic_eg {
                let (mut vl, mut ql) = (0.0, 0.0);
                for ids in groups {
                    let sub = refs(batch, ids)?;
                    let (v, q) = iql_critic_update(state, &sub)?;
                    vl += v;
                    ql += q;
                }
                log.value_loss = Some(vl / groups.len() as f64);
                log.critic_loss = Some(ql / groups.len() as f64);
            } else {
                let all = refs(batch, &state.robots.clone())?;
                let (v, q) = iql_critic_update(state, &all)?;
                log.value_loss = Some(v);
                log.critic_loss = Some(q);
            }
        }
        Algorithm::Td3bc => {
            if state.cfg.critic_eg {
                let mut ql = 0.0;
                for ids in groups {
                    let sub = refs(batch, ids)?;
                    ql += td3_critic_update(state, &sub)?;
                }
                log.critic_loss = Some(ql / groups.len() as f64);
            } else {
                let all = refs(batch, &state.robots.clone())?;
                log.critic_loss = Some(td3_critic_update(state, &all)?);
            }
        }
    }
    Ok(log)
}

fn target_phase(state: &mut TrainerState) {
    let tau = state.cfg.tau_target;
    if let Some(q) = &state.q {
        let q = q.clone();
        if let Some(target) = state.q_target.as_mut() {
            ema_update(target, &q, tau);
        }
    }
    if state.cfg.algorithm == Algorithm::Td3bc {
        let actor = state.actor.clone();
        if let Some(target) = state.actor_target.as_mut() {
            ema_update(target, &actor, tau);
        }
    }
}

fn actor_due(state: &TrainerState) -> bool {
    state.cfg.algorithm != Algorithm::Td3bc || state.outer_steps % state.cfg.policy_freq as u64 == 0
}

/// One outer iteration of the grouped trainer: sample a global minibatch,
/// one critic update (grouped in the critic variant), EMA target update,
/// shuffle the group order, then one actor update per group on its sub-batch.
/// A single all-robots group is exactly the ungrouped trainer.
pub fn eg_train_step(
    state: &mut TrainerState,
    groups: &[Vec<String>],
    shards: &[RobotShard],
) -> Result<StepLog> {
    state.outer_steps += 1;
    let robots = state.robots.clone();
    let batch = {
        let rng = &mut state.batch_rng;
        sample_batch(shards, &robots, state.cfg.per_robot_batch, rng)?
    };
    let mut log = critic_phase(state, groups, &batch)?;
    target_phase(state);

    let mut order: Vec<usize> = (0..groups.len()).collect();
    order.shuffle(&mut state.shuffle_rng);
    if actor_due(state) {
        for gid in order {
            let sub = refs(&batch, &groups[gid])?;
            let loss = actor_update(state, &sub)?;
            log.actor.push((gid, loss));
        }
    }
    Ok(log)
}

/// Compute-normalized ungrouped control: one global critic update, then `m`
/// actor updates on fresh global minibatches of `per_robot_batch / m` rows
/// per robot, so actor-loss samples per iteration match the grouped trainer.
pub fn normalized_train_step(state: &mut TrainerState, shards: &[RobotShard]) -> Result<StepLog> {
    state.outer_steps += 1;
    let robots = state.robots.clone();
    let m = state.cfg.m;
    let batch = {
        let rng = &mut state.batch_rng;
        sample_batch(shards, &robots, state.cfg.per_robot_batch, rng)?
    };
    let all = vec![robots.clone()];
    let mut log = critic_phase(state, &all, &batch)?;
    target_phase(state);

    let mut order: Vec<usize> = (0..1).collect();
    order.shuffle(&mut state.shuffle_rng);
    if actor_due(state) {
        let small = state.cfg.per_robot_batch / m;
        for _ in 0..m {
            let sub_batch = {
                let rng = &mut state.batch_rng;
                sample_batch(shards, &robots, small, rng)?
            };
            let sub = refs(&sub_batch, &robots)?;
            let loss = actor_update(state, &sub)?;
            log.actor.push((0, loss));
        }
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::super::config::{Algorithm, ConflictResolver, Grouping, TrainConfig};
    use super::super::losses::{actor_grad, awr_weight, td3_lambda};
    use super::super::trainer::{init_trainer, param_hash, state_hash, TrainerState};
    use super::*;
    use crate::datasets::shard::tests::tiny_shard;
    use crate::nets::{actor_forward, encode, LatentConfig, NetInputs};
    use crate::stats::chi2_uniformity;

    fn tiny_net() -> LatentConfig {
        LatentConfig {
            l_d: 3,
            tau_att: 1.0,
            eps_att: 1e-6,
            core_widths: vec![5, 4],
            value_widths: vec![6, 5],
            l_a: 3,
            d_max: 4,
            enc_hidden: 4,
            head_hidden: 4,
        }
    }

    fn tiny_cfg(algorithm: Algorithm) -> TrainConfig {
        TrainConfig {
            algorithm,
            per_robot_batch: 4,
            seed: 11,
            ..TrainConfig::default()
        }
    }

    fn shards(ids: &[&str]) -> Vec<RobotShard> {
        ids.iter().map(|id| tiny_shard(id, 30)).collect()
    }

    fn trainer(algorithm: Algorithm, ids: &[&str]) -> TrainerState {
        let cfg = tiny_cfg(algorithm);
        init_trainer(&cfg, &tiny_net(), ids.iter().map(|s| s.to_string()).collect()).unwrap()
    }

    #[test]
    fn expectile_weight_cases() {
        assert_eq!(expectile_weight(1.3, 0.5), 0.5);
        assert_eq!(expectile_weight(-0.2, 0.5), 0.5);
        assert_eq!(expectile_weight(0.4, 0.7), 0.7);
        assert!((expectile_weight(-0.4, 0.7) - 0.3).abs() < 1e-15);
        assert_eq!(expectile_weight(0.0, 0.7), 0.7);
    }

    #[test]
    fn expectile_fit_of_bernoulli_targets_is_tau() {
        let targets = [0.0, 1.0];
        let v = expectile_fit(&targets, 0.7, 2000, 0.3);
        assert!((v - 0.7).abs() < 1e-6, "fit {v}");
        let v = expectile_fit(&targets, 0.5, 2000, 0.3);
        assert!((v - 0.5).abs() < 1e-6, "fit {v}");
    }

    #[test]
    fn advantage_weight_and_lambda_arithmetic() {
        assert_eq!(awr_weight(0.0, 3.0, 100.0), 1.0);
        assert_eq!(awr_weight(2.0, 3.0, 100.0), 100.0);
        assert!((awr_weight(0.1, 3.0, 100.0) - 0.3f64.exp()).abs() < 1e-15);
        assert_eq!(td3_lambda(2.5, 5.0), 0.5);
    }

    #[test]
    fn bc_gradient_vanishes_on_mean_path_when_actions_match_mu() {
        let state = trainer(Algorithm::Bc, &["alpha"]);
        let all = shards(&["alpha"]);
        let mut rng = crate::rng::stream(0, "batch");
        let batch = sample_batch(&all, &state.robots, 4, &mut rng).unwrap();
        let mut b = batch.per_robot[0].clone();

        let inp = NetInputs::from_batch(&b, false);
        let mut tape = Tape::new(&state.actor);
        let enc = encode(&mut tape, &ParamSource::Live, &state.net, &inp).unwrap();
        let out = actor_forward(&mut tape, &ParamSource::Live, &state.net, &inp, enc).unwrap();
        b.action = tape.value(out.mu).clone();

        let report = actor_grad(&state, &[&b]).unwrap();
        for seg in report.grad.layout().segments() {
            let name = seg.name.clone();
            let g = report.grad.seg(&name);
            let zero = g.iter().all(|x| *x == 0.0);
            if name.starts_with("mu.")
                || name.starts_with("core.")
                || name.starts_with("enc.")
            {
                assert!(zero, "segment {name} should have zero gradient");
            }
            if name.starts_with("sigma.") {
                assert!(!zero, "segment {name} should be active");
            }
        }
    }

    #[test]
    fn bc_actor_updates_reduce_loss_on_fixed_batch() {
        let mut state = trainer(Algorithm::Bc, &["alpha", "beta"]);
        let all = shards(&["alpha", "beta"]);
        let mut rng = crate::rng::stream(0, "batch");
        let batch = sample_batch(&all, &state.robots, 4, &mut rng).unwrap();
        let sub = refs(&batch, &state.robots.clone()).unwrap();
        let first = actor_update(&mut state, &sub).unwrap();
        let mut last = first;
        for _ in 0..99 {
            last = actor_update(&mut state, &sub).unwrap();
        }
        assert!(last < first, "loss {first} -> {last}");
        assert_eq!(state.actor_steps, 100);
        assert_eq!(state.actor_samples, 800);
    }

    #[test]
    fn td3_policy_delay_counts() {
        let mut state = trainer(Algorithm::Td3bc, &["alpha"]);
        let groups = vec![state.robots.clone()];
        let all = shards(&["alpha"]);
        for _ in 0..10 {
            eg_train_step(&mut state, &groups, &all).unwrap();
        }
        assert_eq!(state.outer_steps, 10);
        assert_eq!(state.critic_steps, 10);
        assert_eq!(state.actor_steps, 5);
    }

    #[test]
    fn critic_update_leaves_actor_untouched_and_vice_versa() {
        let mut state = trainer(Algorithm::Iql, &["alpha", "beta"]);
        let all = shards(&["alpha", "beta"]);
        let mut rng = crate::rng::stream(0, "batch");
        let batch = sample_batch(&all, &state.robots, 4, &mut rng).unwrap();
        let sub = refs(&batch, &state.robots.clone()).unwrap();

        let actor_before = param_hash(&state.actor);
        iql_critic_update(&mut state, &sub).unwrap();
        assert_eq!(param_hash(&state.actor), actor_before);

        let value_before = param_hash(state.value.as_ref().unwrap());
        let q_before = param_hash(state.q.as_ref().unwrap());
        actor_update(&mut state, &sub).unwrap();
        assert_eq!(param_hash(state.value.as_ref().unwrap()), value_before);
        assert_eq!(param_hash(state.q.as_ref().unwrap()), q_before);
        assert_ne!(param_hash(&state.actor), actor_before);
    }

    #[test]
    fn same_seed_same_trajectory() {
        for algorithm in [Algorithm::Bc, Algorithm::Iql, Algorithm::Td3bc] {
            let all = shards(&["alpha", "beta"]);
            let mut a = trainer(algorithm, &["alpha", "beta"]);
            let mut b = trainer(algorithm, &["alpha", "beta"]);
            let groups = vec![vec!["alpha".to_string()], vec!["beta".to_string()]];
            for _ in 0..4 {
                eg_train_step(&mut a, &groups, &all).unwrap();
                eg_train_step(&mut b, &groups, &all).unwrap();
            }
            assert_eq!(state_hash(&a), state_hash(&b));
        }
    }

    #[test]
    fn grouping_changes_the_trajectory() {
        let all = shards(&["alpha", "beta"]);
        let mut grouped = trainer(Algorithm::Bc, &["alpha", "beta"]);
        let mut pooled = trainer(Algorithm::Bc, &["alpha", "beta"]);
        let split = vec![vec!["alpha".to_string()], vec!["beta".to_string()]];
        let joint = vec![vec!["alpha".to_string(), "beta".to_string()]];
        for _ in 0..3 {
            eg_train_step(&mut grouped, &split, &all).unwrap();
            eg_train_step(&mut pooled, &joint, &all).unwrap();
        }
        assert_ne!(state_hash(&grouped), state_hash(&pooled));
    }

    #[test]
    fn group_order_shuffle_is_uniform() {
        let ids = ["alpha", "beta", "gamma"];
        let all = shards(&ids);
        let mut state = trainer(Algorithm::Bc, &ids);
        let groups: Vec<Vec<String>> = ids.iter().map(|id| vec![id.to_string()]).collect();
        let mut counts = [0usize; 6];
        let perms = [
            [0, 1, 2],
            [0, 2, 1],
            [1, 0, 2],
            [1, 2, 0],
            [2, 0, 1],
            [2, 1, 0],
        ];
        for _ in 0..240 {
            let log = eg_train_step(&mut state, &groups, &all).unwrap();
            let order: Vec<usize> = log.actor.iter().map(|(g, _)| *g).collect();
            let k = perms.iter().position(|p| p == order.as_slice()).unwrap();
            counts[k] += 1;
        }
        let p = chi2_uniformity(&counts);
        assert!(p > 0.01, "order distribution p = {p}, counts {counts:?}");
    }

    #[test]
    fn normalized_mode_matches_grouped_actor_sample_count() {
        let ids = ["alpha", "beta"];
        let all = shards(&ids);

        let mut grouped_cfg = tiny_cfg(Algorithm::Bc);
        grouped_cfg.m = 2;
        grouped_cfg.grouping = Grouping::Random;
        let mut grouped =
            init_trainer(&grouped_cfg, &tiny_net(), vec!["alpha".into(), "beta".into()]).unwrap();
        let split = vec![vec!["alpha".to_string()], vec!["beta".to_string()]];

        let mut norm_cfg = tiny_cfg(Algorithm::Bc);
        norm_cfg.m = 2;
        norm_cfg.normalized_mode = true;
        let mut normalized =
            init_trainer(&norm_cfg, &tiny_net(), vec!["alpha".into(), "beta".into()]).unwrap();

        for _ in 0..5 {
            eg_train_step(&mut grouped, &split, &all).unwrap();
            normalized_train_step(&mut normalized, &all).unwrap();
        }
        assert_eq!(grouped.actor_samples, normalized.actor_samples);
        assert_eq!(normalized.actor_steps, 10);
    }

    #[test]
    fn pcgrad_path_still_trains() {
        let ids = ["alpha", "beta"];
        let all = shards(&ids);
        let mut cfg = tiny_cfg(Algorithm::Bc);
        cfg.conflict_resolver = ConflictResolver::Pcgrad;
        let mut state =
            init_trainer(&cfg, &tiny_net(), ids.iter().map(|s| s.to_string()).collect()).unwrap();
        let before = param_hash(&state.actor);
        let groups = vec![state.robots.clone()];
        let log = eg_train_step(&mut state, &groups, &all).unwrap();
        assert_eq!(log.actor.len(), 1);
        assert_ne!(param_hash(&state.actor), before);
        assert_eq!(state.actor_steps, 1);
    }

    #[test]
    fn iql_and_td3_steps_touch_all_their_networks() {
        let ids = ["alpha", "beta"];
        let all = shards(&ids);

        let mut iql = trainer(Algorithm::Iql, &ids);
        let groups = vec![iql.robots.clone()];
        let v0 = param_hash(iql.value.as_ref().unwrap());
        let q0 = param_hash(iql.q.as_ref().unwrap());
        let qt0 = param_hash(iql.q_target.as_ref().unwrap());
        let log = eg_train_step(&mut iql, &groups, &all).unwrap();
        assert!(log.value_loss.is_some() && log.critic_loss.is_some());
        assert_ne!(param_hash(iql.value.as_ref().unwrap()), v0);
        assert_ne!(param_hash(iql.q.as_ref().unwrap()), q0);
        assert_ne!(param_hash(iql.q_target.as_ref().unwrap()), qt0);

        let mut td3 = trainer(Algorithm::Td3bc, &ids);
        let groups = vec![td3.robots.clone()];
        let at0 = param_hash(td3.actor_target.as_ref().unwrap());
        eg_train_step(&mut td3, &groups, &all).unwrap();
        eg_train_step(&mut td3, &groups, &all).unwrap();
        assert_ne!(param_hash(td3.actor_target.as_ref().unwrap()), at0);
    }
}
