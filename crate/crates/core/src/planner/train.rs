//! Plain gradient ascent on the expected coverage reward.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::grid::{GridPose, ScoreMap};
use crate::planner::features::{FeatureConfig, FeatureLayout};
use crate::planner::gradient::{accumulate_rollout, mean_total_reward};
use crate::planner::policy::PolicyParams;
use crate::planner::rollout::{check_start, policy_episode, Rollout, Selection};
use crate::{rng, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub iterations: usize,
    /// Rollouts per iteration.
    pub m: usize,
    pub horizon: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub start: GridPose,
    pub feature: FeatureConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            iterations: 300,
            m: 32,
            horizon: 200,
            learning_rate: 0.01,
            seed: 1,
            start: GridPose::new(0, 0),
            feature: FeatureConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 || self.m == 0 || self.horizon == 0 {
            return Err(Error::param("iterations, m and horizon must be positive"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::param("learning rate must be positive and finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub iteration: usize,
    pub mean_reward: f64,
    pub baseline: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub params: PolicyParams,
    pub curve: Vec<CurvePoint>,
}

pub fn curve_csv(curve: &[CurvePoint]) -> String {
    let mut out = String::from("iteration,mean_reward,baseline\n");
    for p in curve {
        let _ = writeln!(out, "{},{},{}", p.iteration, p.mean_reward, p.baseline);
    }
    out
}

/// The `m` rollouts of one iteration; rollout `i` of iteration `k` draws from
/// stream `k * m + i` so the batch is independent of thread scheduling.
pub fn sample_batch(
    params: &PolicyParams,
    layout: &FeatureLayout,
    scoremap: &ScoreMap,
    config: &TrainConfig,
    iteration: usize,
) -> Result<Vec<Rollout>> {
    (0..config.m)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(config.seed, (iteration * config.m + i) as u64);
            policy_episode(Selection::Sample(params), layout, scoremap, config.start, config.horizon, &mut rng)
        })
        .collect()
}

/// Trains from `θ = 0`.
pub fn train(scoremap: &ScoreMap, config: &TrainConfig) -> Result<TrainOutcome> {
    train_from(PolicyParams::zeros(config.feature.clone()), scoremap, config)
}

pub fn train_from(mut params: PolicyParams, scoremap: &ScoreMap, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    check_start(scoremap, config.start)?;
    if params.feature != config.feature {
        return Err(Error::param("initial policy and config use different feature layouts"));
    }
    let layout = FeatureLayout::new(&config.feature)?;
    let mut curve = Vec::with_capacity(config.iterations);
    for iteration in 0..config.iterations {
        let batch = sample_batch(&params, &layout, scoremap, config, iteration)?;
        let baseline = mean_total_reward(&batch);
        // per-rollout gradients in parallel, summed in rollout order
        let parts = batch
            .par_iter()
            .map(|r| {
                let mut g = vec![0.0; params.theta.len()];
                accumulate_rollout(r, &params, baseline, 1.0, &mut g).map(|_| g)
            })
            .collect::<Result<Vec<_>>>()?;
        let step = config.learning_rate / config.m as f64;
        for g in &parts {
            for (t, gi) in params.theta.iter_mut().zip(g) {
                *t += step * gi;
            }
        }
        if !params.is_finite() {
            return Err(Error::Diverged {
                stage: "global planner training",
                index: iteration,
            });
        }
        curve.push(CurvePoint {
            iteration,
            mean_reward: baseline,
            baseline,
        });
    }
    Ok(TrainOutcome { params, curve })
}
