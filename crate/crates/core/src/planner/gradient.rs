//! Likelihood-ratio gradient with reward-to-go and a constant baseline:
//! `(1/m) sum_i sum_t grad log π(a_t | s_t) * (sum_{j>=t} r_j - b)`.

use crate::planner::policy::{accumulate_grad_log_prob, action_distribution, PolicyParams};
use crate::planner::rollout::Rollout;
use crate::{Error, Result};

/// Mean total reward of a batch, the default baseline.
pub fn mean_total_reward(rollouts: &[Rollout]) -> f64 {
    if rollouts.is_empty() {
        return 0.0;
    }
    rollouts.iter().map(|r| r.total_reward).sum::<f64>() / rollouts.len() as f64
}

fn reward_to_go(rollout: &Rollout) -> Vec<f64> {
    let mut out = vec![0.0; rollout.steps.len()];
    let mut acc = 0.0;
    for (t, step) in rollout.steps.iter().enumerate().rev() {
        acc += step.reward;
        out[t] = acc;
    }
    out
}

fn check_batch(rollouts: &[Rollout], params: &PolicyParams) -> Result<()> {
    if rollouts.is_empty() {
        return Err(Error::param("policy gradient needs at least one rollout"));
    }
    let cols = params.cols();
    if params.theta.len() != 4 * cols {
        return Err(Error::ShapeMismatch(format!(
            "theta has {} entries, expected {}",
            params.theta.len(),
            4 * cols
        )));
    }
    for r in rollouts {
        if let Some(s) = r.steps.iter().find(|s| s.features.len() != cols) {
            return Err(Error::ShapeMismatch(format!(
                "rollout features have length {}, policy expects {cols}",
                s.features.len()
            )));
        }
    }
    Ok(())
}

/// Per-rollout contribution `sum_t grad log π * (G_t - b)` added into `grad`
/// with weight `scale`.
pub(crate) fn accumulate_rollout(
    rollout: &Rollout,
    params: &PolicyParams,
    baseline: f64,
    scale: f64,
    grad: &mut [f64],
) -> Result<()> {
    for (step, g) in rollout.steps.iter().zip(reward_to_go(rollout)) {
        let probs = action_distribution(params, &step.features, &step.mask)?;
        accumulate_grad_log_prob(&probs, &step.features, step.action, scale * (g - baseline), grad);
    }
    Ok(())
}

/// Gradient estimate with the batch's mean total reward as baseline.
pub fn policy_gradient(rollouts: &[Rollout], params: &PolicyParams) -> Result<Vec<f64>> {
    policy_gradient_with_baseline(rollouts, params, mean_total_reward(rollouts))
}

pub fn policy_gradient_with_baseline(rollouts: &[Rollout], params: &PolicyParams, baseline: f64) -> Result<Vec<f64>> {
    check_batch(rollouts, params)?;
    let mut grad = vec![0.0; params.theta.len()];
    let scale = 1.0 / rollouts.len() as f64;
    for r in rollouts {
        accumulate_rollout(r, params, baseline, scale, &mut grad)?;
    }
    Ok(grad)
}

/// `(1/m) sum_i sum_t log π_θ(a_t | s_t) * (G_t - b)` with the trajectories
/// held fixed. Its gradient in θ is exactly [`policy_gradient_with_baseline`],
/// which makes it the finite-difference target.
pub fn surrogate_objective(rollouts: &[Rollout], params: &PolicyParams, baseline: f64) -> Result<f64> {
    check_batch(rollouts, params)?;
    let mut total = 0.0;
    for r in rollouts {
        for (step, g) in r.steps.iter().zip(reward_to_go(r)) {
            let probs = action_distribution(params, &step.features, &step.mask)?;
            total += probs[step.action.index()].ln() * (g - baseline);
        }
    }
    Ok(total / rollouts.len() as f64)
}
