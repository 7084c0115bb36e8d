use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::spec::EmbodimentSpec;
use crate::{Error, Result};

pub const DT: f64 = 0.05;
pub const HORIZON: usize = 200;
pub const A_MAX: f64 = 5.0;
pub const KP: f64 = 4.0;

/// Mutable environment state of one embodiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvState {
    pub q: Vec<f64>,
    pub qdot: Vec<f64>,
    pub prev_action: Vec<f64>,
    pub t: usize,
    /// Commanded base velocity: +1 forward, -1 backward.
    pub command: f64,
}

impl EnvState {
    pub fn zeros(n_joints: usize, command: f64) -> Self {
        EnvState {
            q: vec![0.0; n_joints],
            qdot: vec![0.0; n_joints],
            prev_action: vec![0.0; n_joints],
            t: 0,
            command,
        }
    }

    /// Base velocity `v = sum_j w_j qdot_j`.
    pub fn base_velocity(&self, spec: &EmbodimentSpec) -> f64 {
        spec.coupling.iter().zip(&self.qdot).map(|(w, qd)| w * qd).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DoneReason {
    Boundary,
    Horizon,
}

#[derive(Debug, Clone)]
pub struct StepResult {
    pub next: EnvState,
    pub reward: f64,
    pub done: bool,
    pub done_reason: Option<DoneReason>,
}

/// Factored observation of one state: general, per-joint, and per-foot
/// observation sets plus the static per-joint and per-foot descriptors.
#[derive(Debug, Clone, PartialEq)]
pub struct ObsBundle {
    /// `[c, v, v - c]`
    pub o_g: [f64; 3],
    /// per joint `[q_j, qdot_j, prev_action_j]`
    pub o_j: Vec<[f64; 3]>,
    /// per foot `[q_{j(f)}, w_{j(f)} * qdot_{j(f)}]`
    pub o_f: Vec<[f64; 2]>,
    /// per joint `[w_j, j/J, gear_j, q_limit_j]`
    pub d_j: Vec<[f64; 4]>,
    /// per foot `[w_{j(f)}, f/F]`
    pub d_f: Vec<[f64; 2]>,
}

pub fn observe(spec: &EmbodimentSpec, state: &EnvState) -> ObsBundle {
    let v = state.base_velocity(spec);
    let c = state.command;
    let o_j = (0..spec.n_joints)
        .map(|j| [state.q[j], state.qdot[j], state.prev_action[j]])
        .collect();
    let o_f = (0..spec.n_feet)
        .map(|f| {
            let j = spec.foot_joint[f];
            [state.q[j], spec.coupling[j] * state.qdot[j]]
        })
        .collect();
    let d_j = (0..spec.n_joints).map(|j| spec.descriptor_joint(j)).collect();
    let d_f = (0..spec.n_feet).map(|f| spec.descriptor_foot(f)).collect();
    ObsBundle { o_g: [c, v, v - c], o_j, o_f, d_j, d_f }
}

/// Tracking reward minus torque and action-rate penalties, clipped at zero:
/// `max(0, k_track exp(-(v-c)^2/0.25) - k_torque ||a||^2 - k_rate ||a - a_prev||^2)`.
pub fn reward_fn(spec: &EmbodimentSpec, state: &EnvState, action: &[f64], prev_action: &[f64]) -> f64 {
    let v = state.base_velocity(spec);
    let err = v - state.command;
    let track = spec.k_track * (-err * err / 0.25).exp();
    let torque: f64 = action.iter().map(|a| a * a).sum();
    let rate: f64 = action.iter().zip(prev_action).map(|(a, p)| (a - p) * (a - p)).sum();
    (track - spec.k_torque * torque - spec.k_rate * rate).max(0.0)
}

/// Semi-implicit Euler step. The action is clipped to `[-A_MAX, A_MAX]`
/// before use; the reward is evaluated at the post-integration velocity.
pub fn step(spec: &EmbodimentSpec, state: &EnvState, action: &[f64]) -> Result<StepResult> {
    assert_eq!(action.len(), spec.n_joints);
    let a: Vec<f64> = action.iter().map(|x| x.clamp(-A_MAX, A_MAX)).collect();
    let mut next = state.clone();
    for j in 0..spec.n_joints {
        let accel =
            spec.gear[j] * a[j] - spec.damping[j] * state.qdot[j] - spec.stiffness[j] * state.q[j];
        next.qdot[j] = state.qdot[j] + DT * accel;
        next.q[j] = state.q[j] + DT * next.qdot[j];
    }
    next.t = state.t + 1;
    let prev = std::mem::replace(&mut next.prev_action, a.clone());
    if next.q.iter().chain(&next.qdot).any(|x| !x.is_finite()) {
        return Err(Error::Numerical { context: format!("step:{}", spec.id) });
    }
    let reward = reward_fn(spec, &next, &a, &prev);
    let boundary = next.q.iter().zip(&spec.q_limit).any(|(q, lim)| q.abs() > *lim);
    let horizon = next.t >= HORIZON;
    let done_reason = if boundary {
        Some(DoneReason::Boundary)
    } else if horizon {
        Some(DoneReason::Horizon)
    } else {
        None
    };
    Ok(StepResult { next, reward, done: done_reason.is_some(), done_reason })
}

/// Initial state: small uniform perturbations of position and velocity.
pub fn reset(spec: &EmbodimentSpec, command: f64, rng: &mut impl Rng) -> EnvState {
    let mut state = EnvState::zeros(spec.n_joints, command);
    for j in 0..spec.n_joints {
        state.q[j] = rng.gen_range(-0.1..0.1);
        state.qdot[j] = rng.gen_range(-0.1..0.1);
    }
    state
}

/// Velocity-tracking PD controller with feedforward gravity/damping
/// compensation, degraded by the gain `eta` and perturbed by Gaussian noise:
///
/// `a_j = clip(eta [Kp (qdot*_j - qdot_j) + (stiff_j q_j + damp_j qdot*_j)/gear_j] + sigma xi_j)`
///
/// with per-joint velocity targets `qdot*_j = c w_j / sum_k w_k^2`.
pub fn scripted_controller(
    spec: &EmbodimentSpec,
    state: &EnvState,
    eta: f64,
    sigma: f64,
    rng: &mut impl Rng,
) -> Vec<f64> {
    let norm = spec.coupling_norm_sq();
    (0..spec.n_joints)
        .map(|j| {
            let target = state.command * spec.coupling[j] / norm;
            let fb = KP * (target - state.qdot[j]);
            let ff = (spec.stiffness[j] * state.q[j] + spec.damping[j] * target) / spec.gear[j];
            let noise: f64 = StandardNormal.sample(rng);
            (eta * (fb + ff) + sigma * noise).clamp(-A_MAX, A_MAX)
        })
        .collect()
}
