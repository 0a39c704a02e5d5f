//! Scripted steering expert: pure pursuit with a reactive obstacle override.

use crate::grid::GridPose;
use crate::local::observation::{bearing_to, observe, LocalConfig};
use crate::scoremap::DrivabilityTable;
use crate::sim::{normalize_angle, ContinuousPose, SimWorld};
use crate::Result;

/// Steering bin in `[-M, M]` toward `waypoint`. When the pure-pursuit ray is
/// shorter than the safety range the expert picks, among bins whose ray
/// clears it, the one maximizing `depth + κ·terrain - μ·|bearing error|`;
/// if no bin clears it, the deepest ray wins.
pub fn expert_action(
    world: &SimWorld,
    pose: &ContinuousPose,
    waypoint: GridPose,
    table: &DrivabilityTable,
    config: &LocalConfig,
) -> Result<i64> {
    let bins = config.bins()?;
    let obs = observe(world, pose, waypoint, table, config)?;
    let bearing = bearing_to(pose, waypoint);
    let pursuit = bins.nearest(bearing);
    let depth = |c: i64| obs.ray_depths[(c + bins.m() as i64) as usize] * config.ray_range;
    // close to the waypoint the ray may legitimately be short
    let (gx, gy) = waypoint.center();
    let goal_dist = pose.distance_to(gx, gy);
    let needed = config.safety_range.min(goal_dist);
    if depth(pursuit) >= needed {
        return Ok(pursuit);
    }
    let m = bins.m() as i64;
    let mut best: Option<(i64, f64)> = None;
    for c in -m..=m {
        if depth(c) < config.safety_range {
            continue;
        }
        let i = (c + m) as usize;
        let error = normalize_angle(bearing - bins.angle(c)).abs();
        let score = obs.ray_depths[i] + config.kappa * obs.terrain_scores[i] - config.mu * error;
        if best.is_none_or(|(_, s)| score > s) {
            best = Some((c, score));
        }
    }
    if let Some((c, _)) = best {
        return Ok(c);
    }
    let mut deepest = -m;
    for c in -m..=m {
        if depth(c) > depth(deepest) {
            deepest = c;
        }
    }
    Ok(deepest)
}
