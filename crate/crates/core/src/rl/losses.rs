use ndarray::Array2;

use super::config::Algorithm;
use super::trainer::TrainerState;
use crate::datasets::RobotBatch;
use crate::nets::{
    actor_forward, encode, gaussian_log_prob, q_forward, v_forward, LatentConfig, NetInputs,
};
use crate::numerics::{GradReport, NodeId, ParamSource, ParamVector, Tape};
use crate::{Error, Result};

/// Like `grad_of` but the loss builder may fail.
pub(crate) fn grad_with<F>(params: &ParamVector, build: F) -> Result<GradReport>
where
    F: FnOnce(&mut Tape) -> Result<NodeId>,
{
    let mut tape = Tape::new(params);
    let loss_node = build(&mut tape)?;
    let loss = tape.scalar(loss_node);
    if !loss.is_finite() {
        return Err(Error::Numerical { context: "loss".into() });
    }
    let grad = tape.backward(loss_node);
    if let Some(seg) = grad.first_non_finite_segment() {
        return Err(Error::Numerical { context: format!("grad:{seg}") });
    }
    let grad_norm = grad.norm();
    Ok(GradReport { loss, grad, grad_norm })
}

fn total_len(batches: &[&RobotBatch]) -> usize {
    batches.iter().map(|b| b.len()).sum()
}

/// Mean negative Gaussian log-likelihood of the dataset actions.
pub(crate) fn nll_loss_node(
    tape: &mut Tape,
    net: &LatentConfig,
    batches: &[&RobotBatch],
) -> Result<NodeId> {
    let total = total_len(batches);
    let mut acc: Option<NodeId> = None;
    for b in batches {
        let inp = NetInputs::from_batch(b, false);
        let enc = encode(tape, &ParamSource::Live, net, &inp)?;
        let out = actor_forward(tape, &ParamSource::Live, net, &inp, enc)?;
        let act = tape.constant(b.action.clone());
        let lp = gaussian_log_prob(tape, out, act);
        let s = tape.sum_all(lp);
        acc = Some(match acc {
            Some(prev) => tape.add(prev, s),
            None => s,
        });
    }
    let sum = acc.expect("nonempty batch list");
    Ok(tape.scale(sum, -1.0 / total as f64))
}

/// Capped advantage weight `min(exp(beta * adv), cap)`.
pub fn awr_weight(adv: f64, beta: f64, cap: f64) -> f64 {
    (beta * adv).exp().min(cap)
}

/// TD3+BC loss scale `bc_weight / mean |Q1|`, floored against division by
/// a vanishing critic.
pub fn td3_lambda(bc_weight: f64, mean_abs_q: f64) -> f64 {
    bc_weight / mean_abs_q.max(1e-8)
}

/// Advantage weights `min(exp(beta * (min Q_target(s,a) - V(s))), cap)`
/// evaluated outside any gradient path, one `(n, 1)` array per batch.
pub(crate) fn awr_weights(
    state: &TrainerState,
    batches: &[&RobotBatch],
) -> Result<Vec<Array2<f64>>> {
    let net = &state.net;
    let q_target = state.q_target.as_ref().expect("iql state has target q");
    let value = state.value.as_ref().expect("iql state has value net");
    let beta = state.cfg.beta;
    let cap = state.cfg.awr_weight_cap;

    let mut out = Vec::with_capacity(batches.len());
    for b in batches {
        let inp = NetInputs::from_batch(b, false);

        let mut qt = Tape::new(q_target);
        let enc = encode(&mut qt, &ParamSource::Live, net, &inp)?;
        let act = qt.constant(b.action.clone());
        let (q1, q2) = q_forward(&mut qt, &ParamSource::Live, net, enc.zbar, act)?;
        let q1v = qt.value(q1);
        let q2v = qt.value(q2);

        let mut vt = Tape::new(value);
        let enc_v = encode(&mut vt, &ParamSource::Live, net, &inp)?;
        let v = v_forward(&mut vt, &ParamSource::Live, net, enc_v.zbar)?;
        let vv = vt.value(v);

        let w = Array2::from_shape_fn((b.len(), 1), |(r, _)| {
            let adv = q1v[(r, 0)].min(q2v[(r, 0)]) - vv[(r, 0)];
            awr_weight(adv, beta, cap)
        });
        if w.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numerical { context: "awr weights".into() });
        }
        out.push(w);
    }
    Ok(out)
}

/// Advantage-weighted NLL: `-mean(w * log pi(a|s))`.
pub(crate) fn awr_loss_node(
    tape: &mut Tape,
    net: &LatentConfig,
    batches: &[&RobotBatch],
    weights: &[Array2<f64>],
) -> Result<NodeId> {
    let total = total_len(batches);
    let mut acc: Option<NodeId> = None;
    for (b, w) in batches.iter().zip(weights) {
        let inp = NetInputs::from_batch(b, false);
        let enc = encode(tape, &ParamSource::Live, net, &inp)?;
        let out = actor_forward(tape, &ParamSource::Live, net, &inp, enc)?;
        let act = tape.constant(b.action.clone());
        let lp = gaussian_log_prob(tape, out, act);
        let wc = tape.constant(w.clone());
        let weighted = tape.mul(lp, wc);
        let s = tape.sum_all(weighted);
        acc = Some(match acc {
            Some(prev) => tape.add(prev, s),
            None => s,
        });
    }
    let sum = acc.expect("nonempty batch list");
    Ok(tape.scale(sum, -1.0 / total as f64))
}

/// TD3+BC actor loss `-lambda * mean Q1(s, mu(s)) + mean ||mu(s) - a||^2`
/// with `lambda = bc_weight / mean |Q1(s, mu(s))|` treated as a constant.
/// Q parameters are frozen on the tape; gradients reach only the actor.
pub(crate) fn td3_actor_loss_node(
    tape: &mut Tape,
    net: &LatentConfig,
    q_params: &ParamVector,
    bc_weight: f64,
    batches: &[&RobotBatch],
) -> Result<NodeId> {
    let total = total_len(batches);
    let qsrc = ParamSource::Frozen(q_params);
    let mut q_nodes = Vec::with_capacity(batches.len());
    let mut bc_nodes = Vec::with_capacity(batches.len());
    let mut abs_sum = 0.0;
    for b in batches {
        let inp = NetInputs::from_batch(b, false);
        let enc = encode(tape, &ParamSource::Live, net, &inp)?;
        let out = actor_forward(tape, &ParamSource::Live, net, &inp, enc)?;

        let enc_q = encode(tape, &qsrc, net, &inp)?;
        let (q1, _) = q_forward(tape, &qsrc, net, enc_q.zbar, out.mu)?;
        abs_sum += tape.value(q1).iter().map(|x| x.abs()).sum::<f64>();
        let qs = tape.sum_all(q1);
        q_nodes.push(qs);

        let act = tape.constant(b.action.clone());
        let diff = tape.sub(out.mu, act);
        let sq = tape.square(diff);
        let rs = tape.row_sums(sq);
        let bs = tape.sum_all(rs);
        bc_nodes.push(bs);
    }
    let lambda = td3_lambda(bc_weight, abs_sum / total as f64);

    let mut q_sum = q_nodes[0];
    for &n in &q_nodes[1..] {
        q_sum = tape.add(q_sum, n);
    }
    let mut bc_sum = bc_nodes[0];
    for &n in &bc_nodes[1..] {
        bc_sum = tape.add(bc_sum, n);
    }
    let q_term = tape.scale(q_sum, -lambda / total as f64);
    let bc_term = tape.scale(bc_sum, 1.0 / total as f64);
    Ok(tape.add(q_term, bc_term))
}

/// Gradient of the configured actor loss on the given sub-batch; parameters
/// are not modified. This is the exact gradient the trainer applies, shared
/// by updates, PCGrad, and conflict instrumentation.
pub fn actor_grad(state: &TrainerState, batches: &[&RobotBatch]) -> Result<GradReport> {
    if batches.is_empty() {
        return Err(Error::Grouping("empty actor sub-batch".into()));
    }
    let net = state.net.clone();
    match state.cfg.algorithm {
        Algorithm::Bc => grad_with(&state.actor, |tape| nll_loss_node(tape, &net, batches)),
        Algorithm::Iql => {
            let weights = awr_weights(state, batches)?;
            grad_with(&state.actor, |tape| awr_loss_node(tape, &net, batches, &weights))
        }
        Algorithm::Td3bc => {
            let q = state.q.as_ref().expect("td3bc state has q");
            let bc_weight = state.cfg.bc_weight;
            grad_with(&state.actor, |tape| {
                td3_actor_loss_node(tape, &net, q, bc_weight, batches)
            })
        }
    }
}
