use rand::Rng;

use super::dynamics::{observe, reset, scripted_controller, step, DoneReason, EnvState, ObsBundle};
use super::spec::EmbodimentSpec;
use crate::Result;

/// Deterministic mapping from an observation to a torque vector.
pub trait Policy {
    fn act(&self, spec: &EmbodimentSpec, obs: &ObsBundle) -> Vec<f64>;
}

impl<F> Policy for F
where
    F: Fn(&EmbodimentSpec, &ObsBundle) -> Vec<f64>,
{
    fn act(&self, spec: &EmbodimentSpec, obs: &ObsBundle) -> Vec<f64> {
        self(spec, obs)
    }
}

/// One complete episode. `states` holds T+1 entries; `actions` and
/// `rewards` hold T.
#[derive(Debug, Clone)]
pub struct Episode {
    pub states: Vec<EnvState>,
    pub actions: Vec<Vec<f64>>,
    pub rewards: Vec<f64>,
    pub done_reason: DoneReason,
}

impl Episode {
    pub fn ret(&self) -> f64 {
        self.rewards.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

/// Rolls out the scripted controller from a randomized initial state until
/// termination.
pub fn rollout_scripted(
    spec: &EmbodimentSpec,
    command: f64,
    eta: f64,
    sigma: f64,
    rng: &mut impl Rng,
) -> Result<Episode> {
    let mut state = reset(spec, command, rng);
    let mut states = vec![state.clone()];
    let mut actions = Vec::new();
    let mut rewards = Vec::new();
    loop {
        let action = scripted_controller(spec, &state, eta, sigma, rng);
        let res = step(spec, &state, &action)?;
        actions.push(action);
        rewards.push(res.reward);
        states.push(res.next.clone());
        state = res.next;
        if res.done {
            return Ok(Episode { states, actions, rewards, done_reason: res.done_reason.unwrap() });
        }
    }
}

/// Mean undiscounted return of a deterministic policy over `n_episodes`
/// randomized starts.
pub fn evaluate(
    policy: &dyn Policy,
    spec: &EmbodimentSpec,
    command: f64,
    n_episodes: usize,
    rng: &mut impl Rng,
) -> Result<f64> {
    assert!(n_episodes >= 1);
    let mut total = 0.0;
    for _ in 0..n_episodes {
        let mut state = reset(spec, command, rng);
        loop {
            let obs = observe(spec, &state);
            let action = policy.act(spec, &obs);
            let res = step(spec, &state, &action)?;
            total += res.reward;
            state = res.next;
            if res.done {
                break;
            }
        }
    }
    Ok(total / n_episodes as f64)
}
