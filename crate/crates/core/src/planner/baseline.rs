//! Uniform-coverage lawnmower sweep used as the reference strategy.

use crate::grid::{GridPose, ScoreMap};
use crate::planner::policy::Action;
use crate::planner::rollout::{run_episode, Rollout};
use crate::Result;

/// Sweeps east along the start row, steps one row, sweeps west, and so on.
/// The sweep heads toward the side with more rows (north on ties) and turns
/// back at the map edge.
pub fn baseline_boustrophedon(scoremap: &ScoreMap, start: GridPose, horizon: usize) -> Result<Rollout> {
    let (w, h) = (scoremap.width(), scoremap.height());
    let mut horizontal = Action::East;
    let mut vertical = if start.y + 1 + start.y < h || h - 1 - start.y >= start.y {
        Action::North
    } else {
        Action::South
    };
    run_episode(scoremap, start, horizon, false, None, |_, mask, _, _| {
        if w == 1 {
            // a single column is a vertical sweep
            if !mask[vertical.index()] {
                vertical = flip(vertical);
            }
            return Ok(vertical);
        }
        if mask[horizontal.index()] {
            return Ok(horizontal);
        }
        horizontal = flip(horizontal);
        if !mask[vertical.index()] {
            vertical = flip(vertical);
        }
        if mask[vertical.index()] {
            Ok(vertical)
        } else {
            // single row: bounce back and forth
            Ok(horizontal)
        }
    })
}

fn flip(a: Action) -> Action {
    match a {
        Action::North => Action::South,
        Action::South => Action::North,
        Action::East => Action::West,
        Action::West => Action::East,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn uniform_map_row_sweep() {
        let map = ScoreMap::filled(7, 5, 0.5).unwrap();
        let r = baseline_boustrophedon(&map, GridPose::new(0, 0), 7).unwrap();
        // start cell is not collected: six moves east, one north
        assert_eq!(r.total_reward, 7.0 * 0.5);
        assert_eq!(r.steps[6].cell, GridPose::new(6, 1));
    }

    #[test]
    fn no_revisits_before_full_sweep() {
        for (w, h, sx, sy) in [(7, 5, 0, 0), (6, 6, 3, 2), (4, 9, 1, 8), (1, 6, 0, 2), (8, 1, 3, 0), (5, 5, 4, 4)] {
            let map = ScoreMap::filled(w, h, 1.0).unwrap();
            let start = GridPose::new(sx, sy);
            let r = baseline_boustrophedon(&map, start, 2 * w * h).unwrap();
            let visited = r.visited();
            let mut seen = HashSet::new();
            for cell in &visited {
                if seen.len() == w * h {
                    break;
                }
                // starting mid-map the sweep covers one side first; it only
                // re-crosses rows after that side is exhausted
                if !seen.insert(*cell) && sx == 0 && (sy == 0 || sy == h - 1) {
                    panic!("revisit of {cell:?} on {w}x{h}");
                }
            }
        }
    }

    #[test]
    fn corner_start_covers_whole_map() {
        let map = ScoreMap::filled(6, 4, 1.0).unwrap();
        let r = baseline_boustrophedon(&map, GridPose::new(0, 0), 23).unwrap();
        assert_eq!(r.total_reward, 23.0);
        let cells: HashSet<_> = r.visited().into_iter().collect();
        assert_eq!(cells.len(), 24);
    }

    #[test]
    fn reward_equals_path_sum() {
        let map = ScoreMap::new(5, 4, (0..20).map(|i| (i * 7 % 11) as f64).collect()).unwrap();
        let r = baseline_boustrophedon(&map, GridPose::new(0, 0), 19).unwrap();
        let direct: f64 = r.steps.iter().map(|s| map.get(s.cell)).sum();
        assert_eq!(direct, r.total_reward);
    }

    #[test]
    fn gamma_one_full_sum_on_uniform_map() {
        let map = ScoreMap::filled(5, 5, 2.0).unwrap();
        let r = baseline_boustrophedon(&map, GridPose::new(0, 0), 24).unwrap();
        // every cell but the uncollected start
        assert_eq!(r.total_reward, map.total() - 2.0);
        // the return sweep re-enters the start cell
        let r = baseline_boustrophedon(&map, GridPose::new(0, 0), 100).unwrap();
        assert_eq!(r.total_reward, map.total());
    }
}
