//! Random obstacle worlds for imitation training and evaluation.

use std::collections::VecDeque;
use std::f64::consts::PI;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::grid::{ClassMap, GridPose};
use crate::sim::{ContinuousPose, SimWorld};
use crate::{rng, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorldGenConfig {
    pub width: usize,
    pub height: usize,
    pub min_obstacles: usize,
    pub max_obstacles: usize,
    /// Largest side of an obstacle rectangle, cells.
    pub max_obstacle_size: usize,
    pub min_goal_distance: f64,
    /// Terrain classes; the class map is split into vertical bands.
    pub classes: usize,
}

impl Default for WorldGenConfig {
    fn default() -> Self {
        Self {
            width: 20,
            height: 20,
            min_obstacles: 3,
            max_obstacles: 7,
            max_obstacle_size: 4,
            min_goal_distance: 6.0,
            classes: 2,
        }
    }
}

/// A world with the robot placed at its start and a reachable goal cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub world: SimWorld,
    pub goal: GridPose,
}

/// Cells reachable from `from` through free cells (4-connected).
pub fn reachable(obstacles: &[bool], width: usize, height: usize, from: GridPose) -> Vec<bool> {
    let mut seen = vec![false; width * height];
    if obstacles[from.y * width + from.x] {
        return seen;
    }
    let mut queue = VecDeque::from([from]);
    seen[from.y * width + from.x] = true;
    while let Some(c) = queue.pop_front() {
        let (x, y) = (c.x as i64, c.y as i64);
        for (nx, ny) in [(x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)] {
            if nx < 0 || ny < 0 || nx >= width as i64 || ny >= height as i64 {
                continue;
            }
            let i = ny as usize * width + nx as usize;
            if !obstacles[i] && !seen[i] {
                seen[i] = true;
                queue.push_back(GridPose::new(nx as usize, ny as usize));
            }
        }
    }
    seen
}

/// Episode number `index` of the family identified by `seed`.
pub fn generate_episode(config: &WorldGenConfig, seed: u64, index: u64) -> Result<Episode> {
    let (w, h) = (config.width, config.height);
    if w < 2 || h < 2 || config.classes == 0 || config.min_obstacles > config.max_obstacles {
        return Err(Error::param("world generator needs at least 2x2 cells, one class and a valid obstacle range"));
    }
    let mut rng = rng::stream(seed, index);
    let band = w.div_ceil(config.classes);
    let classes = (0..w * h).map(|i| ((i % w) / band).min(config.classes - 1)).collect();
    let class_map = ClassMap::new(w, h, config.classes, classes)?;
    for _ in 0..1000 {
        let mut obstacles = vec![false; w * h];
        for _ in 0..rng.gen_range(config.min_obstacles..=config.max_obstacles) {
            let rw = rng.gen_range(1..=config.max_obstacle_size.max(1));
            let rh = rng.gen_range(1..=config.max_obstacle_size.max(1));
            let x0 = rng.gen_range(0..w);
            let y0 = rng.gen_range(0..h);
            for y in y0..(y0 + rh).min(h) {
                for x in x0..(x0 + rw).min(w) {
                    obstacles[y * w + x] = true;
                }
            }
        }
        let free: Vec<usize> = (0..w * h).filter(|&i| !obstacles[i]).collect();
        if free.len() < 2 {
            continue;
        }
        let start_i = free[rng.gen_range(0..free.len())];
        let start = GridPose::new(start_i % w, start_i / w);
        let reach = reachable(&obstacles, w, h, start);
        let (sx, sy) = start.center();
        let goals: Vec<usize> = free
            .iter()
            .copied()
            .filter(|&i| {
                let (gx, gy) = GridPose::new(i % w, i / w).center();
                reach[i] && (gx - sx).hypot(gy - sy) >= config.min_goal_distance
            })
            .collect();
        if goals.is_empty() {
            continue;
        }
        let goal_i = goals[rng.gen_range(0..goals.len())];
        let heading = rng.gen_range(-PI..PI);
        let world = SimWorld::new(class_map, obstacles, ContinuousPose::new(sx, sy, heading))?;
        return Ok(Episode {
            world,
            goal: GridPose::new(goal_i % w, goal_i / w),
        });
    }
    Err(Error::InvalidState("could not generate a world with a reachable goal".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn episodes_are_reproducible_and_reachable() {
        let cfg = WorldGenConfig::default();
        for i in 0..30 {
            let a = generate_episode(&cfg, 3, i).unwrap();
            assert_eq!(a, generate_episode(&cfg, 3, i).unwrap());
            let start = a.world.robot();
            let s = GridPose::new(start.px as usize, start.py as usize);
            let reach = reachable(a.world.obstacles(), 20, 20, s);
            assert!(reach[a.goal.y * 20 + a.goal.x]);
            let (gx, gy) = a.goal.center();
            assert!(start.distance_to(gx, gy) >= 6.0);
        }
    }

    #[test]
    fn reachability_respects_walls() {
        let mut obstacles = vec![false; 25];
        for y in 0..5 {
            obstacles[y * 5 + 2] = true;
        }
        let r = reachable(&obstacles, 5, 5, GridPose::new(0, 0));
        assert!(r[4 * 5 + 1]);
        assert!(!r[3]);
    }
}
