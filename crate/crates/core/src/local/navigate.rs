//! Waypoint following with stuck detection.

use serde::{Deserialize, Serialize};

use crate::grid::GridPose;
use crate::local::net::SteeringNet;
use crate::local::observation::{observe, LocalConfig, Observation};
use crate::scoremap::DrivabilityTable;
use crate::sim::{measure_feedback, SimWorld, Trajectory, TraversalFeedback};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NavLimits {
    pub max_steps: usize,
    /// Stuck when the distance to the current waypoint shrinks by less than
    /// `stuck_progress` over this many steps.
    pub stuck_window: usize,
    pub stuck_progress: f64,
}

impl Default for NavLimits {
    fn default() -> Self {
        Self {
            max_steps: 400,
            stuck_window: 30,
            stuck_progress: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Completed,
    /// Gave up on waypoint `waypoint` (stuck or out of steps).
    Stuck { waypoint: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Navigation {
    pub trajectory: Trajectory,
    pub feedback: Vec<TraversalFeedback>,
    pub outcome: Outcome,
    /// Waypoints reached, in order.
    pub reached: usize,
    /// Final simulator state.
    pub world: SimWorld,
}

impl Navigation {
    pub fn completed(&self) -> bool {
        self.outcome == Outcome::Completed
    }

    pub fn collisions(&self) -> usize {
        self.trajectory.collisions()
    }
}

/// Drives through `waypoints` choosing a steering bin index with
/// `controller` at every step.
pub fn drive(
    world: &SimWorld,
    waypoints: &[GridPose],
    limits: &NavLimits,
    table: &DrivabilityTable,
    config: &LocalConfig,
    mut controller: impl FnMut(&SimWorld, &Observation, GridPose) -> Result<usize>,
) -> Result<Navigation> {
    if waypoints.is_empty() {
        return Err(Error::param("navigation needs at least one waypoint"));
    }
    if limits.stuck_window == 0 {
        return Err(Error::param("stuck window must be positive"));
    }
    config.validate()?;
    let bins = config.bins()?;
    let mut world = world.clone();
    let mut trajectory = Trajectory::starting_at(&world);
    // trajectory index where each waypoint's segment begins
    let mut segments = vec![0usize];
    let mut current = 0;
    let mut history: Vec<f64> = Vec::new();
    let mut outcome = Outcome::Completed;
    let mut steps = 0;
    while current < waypoints.len() {
        let goal = waypoints[current];
        let (gx, gy) = goal.center();
        let dist = world.robot().distance_to(gx, gy);
        if dist <= config.waypoint_radius {
            current += 1;
            segments.push(trajectory.steps());
            history.clear();
            continue;
        }
        history.push(dist);
        let n = history.len();
        let stalled = n > limits.stuck_window
            && history[n - 1 - limits.stuck_window] - history[n - 1] < limits.stuck_progress;
        if stalled || steps >= limits.max_steps {
            outcome = Outcome::Stuck { waypoint: current };
            break;
        }
        let obs = observe(&world, &world.robot(), goal, table, config)?;
        let index = controller(&world, &obs, goal)?;
        if index >= bins.len() {
            return Err(Error::param(format!("controller chose bin index {index}")));
        }
        let result = world.step(&config.sim, bins.angle_at(index))?;
        trajectory.push(&result);
        steps += 1;
    }
    let end = trajectory.steps();
    if segments.last() != Some(&end) {
        segments.push(end);
    }
    let feedback = segment_feedback(&trajectory, &segments, waypoints, &world)?;
    Ok(Navigation {
        trajectory,
        feedback,
        outcome,
        reached: current,
        world,
    })
}

/// Feedback per class over the whole run, measuring each segment's progress
/// toward the waypoint it was driving to.
fn segment_feedback(
    trajectory: &Trajectory,
    segments: &[usize],
    waypoints: &[GridPose],
    world: &SimWorld,
) -> Result<Vec<TraversalFeedback>> {
    use std::collections::BTreeMap;
    let mut acc: BTreeMap<usize, (f64, usize, usize)> = BTreeMap::new();
    for (k, pair) in segments.windows(2).enumerate() {
        let (a, b) = (pair[0], pair[1]);
        if b == a {
            continue;
        }
        let part = Trajectory {
            points: trajectory.points[a..=b].to_vec(),
        };
        for fb in measure_feedback(&part, waypoints[k.min(waypoints.len() - 1)], world.class_map())? {
            let e = acc.entry(fb.class_id).or_default();
            e.0 += fb.progress_rate * fb.steps as f64;
            e.1 += fb.obstacle_incidents;
            e.2 += fb.steps;
        }
    }
    Ok(acc
        .into_iter()
        .map(|(class_id, (progress, incidents, steps))| TraversalFeedback {
            class_id,
            progress_rate: progress / steps as f64,
            obstacle_incidents: incidents,
            steps,
        })
        .collect())
}

/// Follows `waypoints` taking the net's most probable bin at each step.
pub fn navigate(
    net: &SteeringNet,
    world: &SimWorld,
    waypoints: &[GridPose],
    limits: &NavLimits,
    table: &DrivabilityTable,
    config: &LocalConfig,
) -> Result<Navigation> {
    drive(world, waypoints, limits, table, config, |_, obs, _| net.argmax(&obs.to_vec()))
}

/// Same loop driven by the scripted expert.
pub fn navigate_expert(
    world: &SimWorld,
    waypoints: &[GridPose],
    limits: &NavLimits,
    table: &DrivabilityTable,
    config: &LocalConfig,
) -> Result<Navigation> {
    let m = config.m as i64;
    drive(world, waypoints, limits, table, config, |w, _, goal| {
        Ok((crate::local::expert::expert_action(w, &w.robot(), goal, table, config)? + m) as usize)
    })
}
