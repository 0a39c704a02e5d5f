//! Egocentric range/terrain observation of the simulated robot.

use std::f64::consts::{FRAC_PI_4, PI};

use serde::{Deserialize, Serialize};

use crate::grid::GridPose;
use crate::local::bins::SteeringBins;
use crate::scoremap::DrivabilityTable;
use crate::sim::{normalize_angle, ContinuousPose, SimConfig, SimWorld};
use crate::{Error, Result};

/// Sensing, steering and expert settings shared by the local planner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LocalConfig {
    /// Bins per side; `2M + 1` steering choices.
    pub m: usize,
    pub sim: SimConfig,
    /// Ray length; depths are divided by it.
    pub ray_range: f64,
    /// Goal distances are divided by this and capped at 1.
    pub goal_scale: f64,
    pub hidden: usize,
    /// A waypoint counts as reached within this distance of its cell center.
    pub waypoint_radius: f64,
    /// The expert leaves pure pursuit when the chosen ray is shorter.
    pub safety_range: f64,
    /// Expert weight on terrain drivability.
    pub kappa: f64,
    /// Expert penalty per radian of bearing error.
    pub mu: f64,
}

impl Default for LocalConfig {
    fn default() -> Self {
        Self {
            m: 7,
            sim: SimConfig {
                max_steering: FRAC_PI_4,
                speed: 0.5,
            },
            ray_range: 5.0,
            goal_scale: 10.0,
            hidden: 32,
            waypoint_radius: 1.0,
            safety_range: 1.5,
            kappa: 0.5,
            mu: 0.3,
        }
    }
}

impl LocalConfig {
    pub fn bins(&self) -> Result<SteeringBins> {
        SteeringBins::new(self.m, self.sim.max_steering)
    }

    pub fn observation_len(&self) -> usize {
        Observation::len_for(self.m)
    }

    pub fn validate(&self) -> Result<()> {
        self.bins()?;
        if !(self.ray_range > 0.0 && self.goal_scale > 0.0 && self.waypoint_radius > 0.0) {
            return Err(Error::param("ray range, goal scale and waypoint radius must be positive"));
        }
        if !(self.sim.speed > 0.0) {
            return Err(Error::param("speed must be positive"));
        }
        if self.hidden == 0 {
            return Err(Error::param("hidden width must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    /// One per steering bin, right (`-M`) to left (`+M`), in `[0, 1]`.
    pub ray_depths: Vec<f64>,
    /// Relative bearing of the waypoint divided by π.
    pub goal_bearing: f64,
    pub goal_distance: f64,
    /// Drivability of the last free cell along each ray.
    pub terrain_scores: Vec<f64>,
}

impl Observation {
    pub fn len_for(m: usize) -> usize {
        2 * (2 * m + 1) + 2
    }

    pub fn len(&self) -> usize {
        self.ray_depths.len() + 2 + self.terrain_scores.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `[rays..., bearing, distance, terrain...]`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.len());
        v.extend_from_slice(&self.ray_depths);
        v.push(self.goal_bearing);
        v.push(self.goal_distance);
        v.extend_from_slice(&self.terrain_scores);
        v
    }

    pub fn from_slice(values: &[f64], m: usize) -> Result<Self> {
        let n = 2 * m + 1;
        if values.len() != Self::len_for(m) {
            return Err(Error::ShapeMismatch(format!(
                "observation needs {} values, got {}",
                Self::len_for(m),
                values.len()
            )));
        }
        Ok(Self {
            ray_depths: values[..n].to_vec(),
            goal_bearing: values[n],
            goal_distance: values[n + 1],
            terrain_scores: values[n + 2..].to_vec(),
        })
    }

    /// Left-right reflection: ray order reversed, bearing negated.
    pub fn mirrored(&self) -> Self {
        Self {
            ray_depths: self.ray_depths.iter().rev().copied().collect(),
            goal_bearing: if self.goal_bearing == -1.0 { -1.0 } else { -self.goal_bearing },
            goal_distance: self.goal_distance,
            terrain_scores: self.terrain_scores.iter().rev().copied().collect(),
        }
    }
}

/// Position `j` of the mirrored flat observation comes from `mirror_source(j)`
/// with the returned sign.
pub fn mirror_source(m: usize, j: usize) -> (usize, f64) {
    let n = 2 * m + 1;
    if j < n {
        (n - 1 - j, 1.0)
    } else if j == n {
        (n, -1.0)
    } else if j == n + 1 {
        (n + 1, 1.0)
    } else {
        (2 * n + 2 - 1 - (j - n - 2), 1.0)
    }
}

/// Relative bearing from `pose` to the center of `cell`, in `[-π, π)`.
pub fn bearing_to(pose: &ContinuousPose, cell: GridPose) -> f64 {
    let (gx, gy) = cell.center();
    normalize_angle((gy - pose.py).atan2(gx - pose.px) - pose.heading)
}

pub fn observe(
    world: &SimWorld,
    pose: &ContinuousPose,
    waypoint: GridPose,
    table: &DrivabilityTable,
    config: &LocalConfig,
) -> Result<Observation> {
    let bins = config.bins()?;
    if waypoint.x >= world.width() || waypoint.y >= world.height() {
        return Err(Error::param("waypoint is outside the world"));
    }
    let mut ray_depths = Vec::with_capacity(bins.len());
    let mut terrain_scores = Vec::with_capacity(bins.len());
    for angle in bins.angles() {
        let depth = world.ray_cast(pose, angle, config.ray_range)?;
        ray_depths.push(depth / config.ray_range);
        let end = world.ray_end_cell(pose, angle, depth);
        terrain_scores.push(table.score(world.class_at(end)));
    }
    let (gx, gy) = waypoint.center();
    Ok(Observation {
        ray_depths,
        goal_bearing: bearing_to(pose, waypoint) / PI,
        goal_distance: (pose.distance_to(gx, gy) / config.goal_scale).min(1.0),
        terrain_scores,
    })
}
