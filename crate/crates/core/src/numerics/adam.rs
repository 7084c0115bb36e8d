use super::param::ParamVector;
use crate::{Error, Result};

/// Adam moments and hyperparameters tracking one parameter vector.
#[derive(Debug, Clone)]
pub struct OptimState {
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub step_count: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl OptimState {
    pub fn new(n_params: usize, lr: f64) -> Self {
        OptimState {
            first_moment: vec![0.0; n_params],
            second_moment: vec![0.0; n_params],
            step_count: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One Adam step with global-norm clipping applied to the gradient first.
/// Deterministic: identical inputs produce bit-identical outputs.
pub fn optim_step(
    params: &ParamVector,
    grad: &ParamVector,
    state: &OptimState,
    max_grad_norm: f64,
) -> Result<(ParamVector, OptimState)> {
    if !params.layout().same_as(grad.layout()) {
        return Err(Error::Layout("optim_step: params and grad layouts differ".into()));
    }
    if state.first_moment.len() != params.values().len() {
        return Err(Error::Layout(format!(
            "optim_step: state tracks {} params, got {}",
            state.first_moment.len(),
            params.values().len()
        )));
    }

    let norm = grad.norm();
    let clip = if norm > max_grad_norm && norm > 0.0 {
        max_grad_norm / norm
    } else {
        1.0
    };

    let mut next = state.clone();
    next.step_count += 1;
    let t = next.step_count as i32;
    let bc1 = 1.0 - state.beta1.powi(t);
    let bc2 = 1.0 - state.beta2.powi(t);

    let mut out = params.clone();
    let values = out.values_mut();
    for i in 0..values.len() {
        let g = grad.values()[i] * clip;
        next.first_moment[i] = state.beta1 * state.first_moment[i] + (1.0 - state.beta1) * g;
        next.second_moment[i] = state.beta2 * state.second_moment[i] + (1.0 - state.beta2) * g * g;
        let m_hat = next.first_moment[i] / bc1;
        let v_hat = next.second_moment[i] / bc2;
        values[i] -= state.lr * m_hat / (v_hat.sqrt() + state.eps);
    }
    Ok((out, next))
}
