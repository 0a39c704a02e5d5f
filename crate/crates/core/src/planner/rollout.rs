//! Episodes on a scoremap under coverage semantics: entering a cell collects
//! its remaining score and zeroes it. The start cell is not collected at
//! `t = 0`; it pays out only if the robot re-enters it.

use std::fmt::Write as _;

use rand::Rng as _;

use crate::grid::{GridPose, ScoreMap};
use crate::planner::features::FeatureLayout;
use crate::planner::policy::{action_distribution, argmax_action, feasible_actions, Action, ActionMask, PolicyParams};
use crate::{rng, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RolloutStep {
    /// Features observed before acting (empty for non-parametric baselines).
    pub features: Vec<f64>,
    pub mask: ActionMask,
    pub action: Action,
    pub reward: f64,
    /// Cell entered by the action.
    pub cell: GridPose,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rollout {
    pub start: GridPose,
    pub steps: Vec<RolloutStep>,
    pub total_reward: f64,
}

impl Rollout {
    pub fn rewards(&self) -> impl Iterator<Item = f64> + '_ {
        self.steps.iter().map(|s| s.reward)
    }

    /// Start cell followed by every entered cell.
    pub fn visited(&self) -> Vec<GridPose> {
        std::iter::once(self.start)
            .chain(self.steps.iter().map(|s| s.cell))
            .collect()
    }

    /// `step,x,y,reward`; row 0 is the start cell with reward 0.
    pub fn path_csv(&self) -> String {
        let mut out = String::from("step,x,y,reward\n");
        let _ = writeln!(out, "0,{},{},0", self.start.x, self.start.y);
        for (i, s) in self.steps.iter().enumerate() {
            let _ = writeln!(out, "{},{},{},{}", i + 1, s.cell.x, s.cell.y, s.reward);
        }
        out
    }
}

pub(crate) fn check_start(scoremap: &ScoreMap, start: GridPose) -> Result<()> {
    if start.x >= scoremap.width() || start.y >= scoremap.height() {
        return Err(Error::param(format!("start ({}, {}) is outside the map", start.x, start.y)));
    }
    Ok(())
}

#[derive(Clone, Copy)]
pub(crate) enum Selection<'a> {
    Sample(&'a PolicyParams),
    Greedy(&'a PolicyParams),
}

/// Runs `horizon` steps choosing actions with `choose`; a 1x1 map (no
/// feasible move) ends the episode early.
pub(crate) fn run_episode(
    scoremap: &ScoreMap,
    start: GridPose,
    horizon: usize,
    record_features: bool,
    layout: Option<&FeatureLayout>,
    mut choose: impl FnMut(&[f64], &ActionMask, GridPose, usize) -> Result<Action>,
) -> Result<Rollout> {
    check_start(scoremap, start)?;
    let (w, h) = (scoremap.width(), scoremap.height());
    let mut remaining = scoremap.clone();
    let mut pose = start;
    let mut steps = Vec::with_capacity(horizon);
    let mut total = 0.0;
    let mut phi = Vec::new();
    for t in 0..horizon {
        let mask = feasible_actions(w, h, pose);
        if !mask.iter().any(|&m| m) {
            break;
        }
        if let Some(layout) = layout {
            layout.extract_into(&remaining, pose, &mut phi);
        }
        let action = choose(&phi, &mask, pose, t)?;
        debug_assert!(mask[action.index()]);
        pose = action.apply(pose);
        let reward = remaining.take(pose);
        total += reward;
        steps.push(RolloutStep {
            features: if record_features { phi.clone() } else { Vec::new() },
            mask,
            action,
            reward,
            cell: pose,
        });
    }
    Ok(Rollout {
        start,
        steps,
        total_reward: total,
    })
}

pub(crate) fn policy_episode(
    selection: Selection<'_>,
    layout: &FeatureLayout,
    scoremap: &ScoreMap,
    start: GridPose,
    horizon: usize,
    rng: &mut rng::Rng,
) -> Result<Rollout> {
    run_episode(scoremap, start, horizon, true, Some(layout), |phi, mask, _, _| {
        match selection {
            Selection::Sample(params) => {
                let probs = action_distribution(params, phi, mask)?;
                Ok(sample_action(&probs, mask, rng))
            }
            Selection::Greedy(params) => {
                let probs = action_distribution(params, phi, mask)?;
                Ok(argmax_action(&probs, mask))
            }
        }
    })
}

pub(crate) fn sample_action(probs: &[f64; 4], mask: &ActionMask, rng: &mut rng::Rng) -> Action {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = None;
    for a in Action::ALL {
        if !mask[a.index()] {
            continue;
        }
        acc += probs[a.index()];
        last = Some(a);
        if u < acc {
            return a;
        }
    }
    last.expect("at least one feasible action")
}

/// One stochastic episode of `horizon` steps.
pub fn rollout(
    params: &PolicyParams,
    scoremap: &ScoreMap,
    start: GridPose,
    horizon: usize,
    seed: u64,
) -> Result<Rollout> {
    if horizon == 0 {
        return Err(Error::param("horizon must be at least 1"));
    }
    let layout = FeatureLayout::new(&params.feature)?;
    let mut rng = rng::seeded(seed);
    policy_episode(Selection::Sample(params), &layout, scoremap, start, horizon, &mut rng)
}

/// Deterministic episode taking the most probable move at every step.
pub fn greedy_rollout(
    params: &PolicyParams,
    scoremap: &ScoreMap,
    start: GridPose,
    horizon: usize,
) -> Result<Rollout> {
    let layout = FeatureLayout::new(&params.feature)?;
    let mut unused = rng::seeded(0);
    policy_episode(Selection::Greedy(params), &layout, scoremap, start, horizon, &mut unused)
}

/// Uniformly random feasible moves.
pub fn random_walk(scoremap: &ScoreMap, start: GridPose, horizon: usize, seed: u64) -> Result<Rollout> {
    random_walk_with(scoremap, start, horizon, &mut rng::seeded(seed))
}

pub(crate) fn random_walk_with(
    scoremap: &ScoreMap,
    start: GridPose,
    horizon: usize,
    rng: &mut rng::Rng,
) -> Result<Rollout> {
    run_episode(scoremap, start, horizon, false, None, |_, mask, _, _| {
        let feasible: Vec<Action> = Action::ALL.into_iter().filter(|a| mask[a.index()]).collect();
        Ok(feasible[rng.gen_range(0..feasible.len())])
    })
}

/// Waypoints from a greedy episode of `horizon` steps: every `stride`-th
/// visited cell (starting with the start cell) plus the final cell.
pub fn plan_waypoints(
    params: &PolicyParams,
    scoremap: &ScoreMap,
    start: GridPose,
    horizon: usize,
    stride: usize,
) -> Result<Vec<GridPose>> {
    if stride == 0 {
        return Err(Error::param("stride must be at least 1"));
    }
    let visited = greedy_rollout(params, scoremap, start, horizon)?.visited();
    let mut waypoints: Vec<GridPose> = visited.iter().step_by(stride).copied().collect();
    if (visited.len() - 1) % stride != 0 {
        waypoints.push(*visited.last().expect("start is always visited"));
    }
    Ok(waypoints)
}

pub fn waypoints_csv(waypoints: &[GridPose]) -> String {
    let mut out = String::from("index,x,y\n");
    for (i, w) in waypoints.iter().enumerate() {
        let _ = writeln!(out, "{i},{},{}", w.x, w.y);
    }
    out
}

pub fn waypoints_from_csv(text: &str) -> Result<Vec<GridPose>> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("index,x,y") {
        return Err(Error::parse("waypoints csv", "expected header index,x,y"));
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let cols: Vec<&str> = l.split(',').map(str::trim).collect();
            if cols.len() != 3 {
                return Err(Error::parse("waypoints csv", format!("bad row {l:?}")));
            }
            let parse = |s: &str| s.parse::<usize>().map_err(|e| Error::parse("waypoints csv", e.to_string()));
            Ok(GridPose::new(parse(cols[1])?, parse(cols[2])?))
        })
        .collect()
}

/// `sum_t gamma^t r_t`.
pub fn discounted_return(rollout: &Rollout, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::param(format!("gamma {gamma} must lie in (0, 1]")));
    }
    let mut weight = 1.0;
    let mut total = 0.0;
    for r in rollout.rewards() {
        total += weight * r;
        weight *= gamma;
    }
    Ok(total)
}
