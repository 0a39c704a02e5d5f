//! Discounted-return comparison of the trained planner against the
//! lawnmower sweep and a random walk.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::grid::{GridPose, ScoreMap};
use crate::planner::features::FeatureLayout;
use crate::planner::rollout::{policy_episode, random_walk_with, Selection};
use crate::planner::{baseline_boustrophedon, discounted_return, PolicyParams};
use crate::{rng, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    PolicyGradient,
    Boustrophedon,
    RandomWalk,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::PolicyGradient, Method::Boustrophedon, Method::RandomWalk];

    pub fn label(self) -> &'static str {
        match self {
            Method::PolicyGradient => "policy_gradient",
            Method::Boustrophedon => "boustrophedon",
            Method::RandomWalk => "random_walk",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub method: Method,
    /// Discounted return of each trial.
    pub returns: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation over trials.
    pub std: f64,
}

/// Runs `trials` episodes of each method from `start`. The trained policy is
/// sampled (trial `i` uses stream `i`), the random walk uses streams offset
/// by `trials`, and the sweep is deterministic.
pub fn compare_baselines(
    scoremap: &ScoreMap,
    policy: &PolicyParams,
    start: GridPose,
    horizon: usize,
    gamma: f64,
    trials: usize,
    seed: u64,
) -> Result<Vec<ComparisonRow>> {
    if trials == 0 || horizon == 0 {
        return Err(Error::param("trials and horizon must be positive"));
    }
    let layout = FeatureLayout::new(&policy.feature)?;
    let mut rows = Vec::with_capacity(3);
    for method in Method::ALL {
        let returns = (0..trials)
            .into_par_iter()
            .map(|i| {
                let rollout = match method {
                    Method::PolicyGradient => {
                        let mut r = rng::stream(seed, i as u64);
                        policy_episode(Selection::Sample(policy), &layout, scoremap, start, horizon, &mut r)?
                    }
                    Method::Boustrophedon => baseline_boustrophedon(scoremap, start, horizon)?,
                    Method::RandomWalk => {
                        let mut r = rng::stream(seed, (trials + i) as u64);
                        random_walk_with(scoremap, start, horizon, &mut r)?
                    }
                };
                discounted_return(&rollout, gamma)
            })
            .collect::<Result<Vec<f64>>>()?;
        let mean = returns.iter().sum::<f64>() / trials as f64;
        let std = (returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / trials as f64).sqrt();
        rows.push(ComparisonRow {
            method,
            returns,
            mean,
            std,
        });
    }
    Ok(rows)
}

/// `method,trial,discounted_return,mean,std`: one row per trial followed by
/// one `summary` row per method.
pub fn comparison_csv(rows: &[ComparisonRow]) -> String {
    let mut out = String::from("method,trial,discounted_return,mean,std\n");
    for row in rows {
        for (i, r) in row.returns.iter().enumerate() {
            let _ = writeln!(out, "{},{i},{r},,", row.method.label());
        }
    }
    for row in rows {
        let _ = writeln!(out, "{},summary,,{},{}", row.method.label(), row.mean, row.std);
    }
    out
}
