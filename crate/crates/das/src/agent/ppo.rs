//! Clipped-surrogate policy optimization over collected episodes.

use super::{AgentError, NetworkParams};
use crate::features::DasState;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PpoConfig {
    /// Ratio clip half-width.
    pub clip: f64,
    /// Return discount.
    pub gamma: f64,
    /// Updates per episode batch: ceil(k_factor * T).
    pub k_factor: f64,
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
}

impl Default for PpoConfig {
    fn default() -> PpoConfig {
        PpoConfig {
            clip: 0.2,
            gamma: 0.99,
            k_factor: 0.3,
            lr: 1e-5,
            batch_size: 16,
            epochs: 200,
        }
    }
}

impl PpoConfig {
    pub fn updates_for(&self, t: usize) -> usize {
        ((self.k_factor * t as f64).ceil() as usize).max(1)
    }
}

#[derive(Clone, Debug)]
pub struct StepSample {
    pub state: DasState,
    pub action: usize,
    pub logp_old: f64,
    pub reward: f64,
    pub ret: f64,
    pub advantage: f64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub steps: Vec<StepSample>,
}

impl Trajectory {
    /// Assemble a trajectory: discounted returns G_t = r_t + gamma G_{t+1}
    /// and advantages G_t - v(s_t) under the given parameters.
    pub fn build(
        params: &NetworkParams,
        states: Vec<DasState>,
        actions: Vec<usize>,
        logps: Vec<f64>,
        rewards: Vec<f64>,
        gamma: f64,
    ) -> Trajectory {
        let t = rewards.len();
        assert!(states.len() == t && actions.len() == t && logps.len() == t);
        let mut returns = vec![0.0; t];
        let mut acc = 0.0;
        for i in (0..t).rev() {
            acc = rewards[i] + gamma * acc;
            returns[i] = acc;
        }
        let steps = states
            .into_iter()
            .enumerate()
            .map(|(i, state)| {
                let advantage = returns[i] - params.value(&state);
                StepSample {
                    state,
                    action: actions[i],
                    logp_old: logps[i],
                    reward: rewards[i],
                    ret: returns[i],
                    advantage,
                }
            })
            .collect();
        Trajectory { steps }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// First-order adaptive-moment optimizer state, aligned with the network's
/// tensor order.
#[derive(Clone, Debug, PartialEq)]
pub struct Adam {
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub t: u64,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

impl Adam {
    pub fn new(params: &NetworkParams) -> Adam {
        let shapes: Vec<usize> = params.tensors().iter().map(|(_, t)| t.data.len()).collect();
        Adam {
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut NetworkParams, grads: &NetworkParams, lr: f64) {
        self.t += 1;
        let bc1 = 1.0 - BETA1.powi(self.t as i32);
        let bc2 = 1.0 - BETA2.powi(self.t as i32);
        let gs: Vec<&[f64]> = grads.tensors().iter().map(|(_, t)| t.data.as_slice()).collect::<Vec<_>>();
        for (k, (_, tensor)) in params.tensors_mut().into_iter().enumerate() {
            let m = &mut self.m[k];
            let v = &mut self.v[k];
            let g = gs[k];
            for i in 0..tensor.data.len() {
                m[i] = BETA1 * m[i] + (1.0 - BETA1) * g[i];
                v[i] = BETA2 * v[i] + (1.0 - BETA2) * g[i] * g[i];
                let mh = m[i] / bc1;
                let vh = v[i] / bc2;
                tensor.data[i] -= lr * mh / (vh.sqrt() + ADAM_EPS);
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct LossReport {
    pub actor_loss: f64,
    pub critic_loss: f64,
    pub mean_ratio: f64,
    pub updates: usize,
}

struct FlatSample<'a> {
    state: &'a DasState,
    action: usize,
    logp_old: f64,
    ret: f64,
    advantage: f64,
}

/// Loss and gradients of the combined clipped-actor + squared-error-critic
/// objective over a sample batch. Exposed for gradient checking.
pub fn ppo_loss_and_grad(
    params: &NetworkParams,
    samples: &[(&DasState, usize, f64, f64, f64)],
    clip: f64,
) -> (LossReport, NetworkParams) {
    let b = samples.len() as f64;
    let mut grads = params.zeros_like();
    let mut actor_loss = 0.0;
    let mut critic_loss = 0.0;
    let mut ratio_sum = 0.0;
    for &(state, action, logp_old, ret, adv) in samples {
        let ((pi, value), cache) = params.forward(state);
        let logp_new = pi[action].max(1e-300).ln();
        let ratio = (logp_new - logp_old).exp();
        ratio_sum += ratio;
        let unclipped = ratio * adv;
        let clipped = ratio.clamp(1.0 - clip, 1.0 + clip) * adv;
        let obj = unclipped.min(clipped);
        actor_loss -= obj / b;
        // gradient flows only through the unclipped branch when it is active
        let d_logp = if unclipped <= clipped {
            -unclipped / b
        } else {
            0.0
        };

        let err = ret - value;
        critic_loss += err * err / b;
        let d_value = -2.0 * err / b;

        params.backward(&cache, action, d_logp, d_value, &mut grads);
    }
    (
        LossReport {
            actor_loss,
            critic_loss,
            mean_ratio: ratio_sum / b,
            updates: 0,
        },
        grads,
    )
}

/// Run ceil(k_factor * max episode length) full-batch gradient steps over
/// the trajectories. Advantages are standardized once across the batch.
pub fn ppo_update(
    params: &mut NetworkParams,
    adam: &mut Adam,
    trajectories: &[Trajectory],
    cfg: &PpoConfig,
) -> Result<LossReport, AgentError> {
    let total: usize = trajectories.iter().map(|t| t.len()).sum();
    if total == 0 {
        return Err(AgentError::EmptyBatch);
    }
    let max_t = trajectories.iter().map(|t| t.len()).max().unwrap_or(1);
    let k_upd = cfg.updates_for(max_t);

    let mut advs: Vec<f64> = trajectories
        .iter()
        .flat_map(|t| t.steps.iter().map(|s| s.advantage))
        .collect();
    let mean = advs.iter().sum::<f64>() / total as f64;
    let var = advs.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / total as f64;
    let std = var.sqrt();
    if std > 1e-12 {
        for a in advs.iter_mut() {
            *a = (*a - mean) / std;
        }
    } else {
        for a in advs.iter_mut() {
            *a -= mean;
        }
    }

    let flat: Vec<FlatSample> = trajectories
        .iter()
        .flat_map(|t| t.steps.iter())
        .zip(advs)
        .map(|(s, a)| FlatSample {
            state: &s.state,
            action: s.action,
            logp_old: s.logp_old,
            ret: s.ret,
            advantage: a,
        })
        .collect();

    let mut report = LossReport::default();
    for _ in 0..k_upd {
        let view: Vec<(&DasState, usize, f64, f64, f64)> = flat
            .iter()
            .map(|s| (s.state, s.action, s.logp_old, s.ret, s.advantage))
            .collect();
        let (r, grads) = ppo_loss_and_grad(params, &view, cfg.clip);
        adam.step(params, &grads, cfg.lr);
        report = r;
    }
    report.updates = k_upd;
    Ok(report)
}
