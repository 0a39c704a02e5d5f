//! Egocentric multi-resolution features.
//!
//! Cells around the robot are grouped by Chebyshev distance into concentric
//! rings whose widths grow outward (1, 2, 4, 8 cells by default), and each
//! ring is split into 8 angular octants. A feature is the mean remaining
//! score over the cells of one (ring, octant) bucket, so near cells are
//! summarized finely and far cells coarsely. The last entry is a constant
//! bias of 1.

use serde::{Deserialize, Serialize};

use crate::grid::{GridPose, ScoreMap};
use crate::{Error, Result};

pub const OCTANTS: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub ring_widths: Vec<usize>,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            ring_widths: vec![1, 2, 4, 8],
        }
    }
}

impl FeatureConfig {
    pub fn len(&self) -> usize {
        self.ring_widths.len() * OCTANTS + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Largest Chebyshev distance covered by any ring.
    pub fn reach(&self) -> usize {
        self.ring_widths.iter().sum()
    }
}

/// Octant of a nonzero integer offset, `floor(atan2(dy, dx) / (π/4))` with
/// the angle in `[0, 2π)`, computed exactly on integers.
pub fn octant(dx: i64, dy: i64) -> usize {
    debug_assert!(dx != 0 || dy != 0);
    // rotate by -90° until the offset lies in the half-open first quadrant
    let (mut x, mut y, mut quadrant) = (dx, dy, 0);
    while !(x > 0 && y >= 0) {
        (x, y) = (y, -x);
        quadrant += 1;
    }
    2 * quadrant + usize::from(y >= x)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiResFeature {
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannerState {
    pub pose: GridPose,
    /// Scores not yet collected.
    pub remaining: ScoreMap,
    pub t: usize,
    pub horizon: usize,
}

/// Precomputed offset → bucket table for one [`FeatureConfig`].
#[derive(Debug, Clone)]
pub struct FeatureLayout {
    config: FeatureConfig,
    offsets: Vec<(i64, i64, usize)>,
    bucket_sizes: Vec<usize>,
}

impl FeatureLayout {
    pub fn new(config: &FeatureConfig) -> Result<Self> {
        if config.ring_widths.is_empty() || config.ring_widths.contains(&0) {
            return Err(Error::param("ring widths must be a non-empty list of positive values"));
        }
        let reach = config.reach() as i64;
        let mut ring_of = vec![0usize; reach as usize + 1];
        let mut d = 1;
        for (ring, &w) in config.ring_widths.iter().enumerate() {
            for _ in 0..w {
                ring_of[d] = ring;
                d += 1;
            }
        }
        let mut offsets = Vec::new();
        let mut bucket_sizes = vec![0; config.ring_widths.len() * OCTANTS];
        for dy in -reach..=reach {
            for dx in -reach..=reach {
                let cheb = dx.abs().max(dy.abs());
                if cheb == 0 {
                    continue;
                }
                let bucket = ring_of[cheb as usize] * OCTANTS + octant(dx, dy);
                bucket_sizes[bucket] += 1;
                offsets.push((dx, dy, bucket));
            }
        }
        Ok(Self {
            config: config.clone(),
            offsets,
            bucket_sizes,
        })
    }

    pub fn config(&self) -> &FeatureConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.config.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of grid offsets in each bucket (independent of the map).
    pub fn bucket_sizes(&self) -> &[usize] {
        &self.bucket_sizes
    }

    /// Bucket of an offset, if it falls inside the rings.
    pub fn bucket_of(&self, dx: i64, dy: i64) -> Option<usize> {
        let reach = self.config.reach() as i64;
        let cheb = dx.abs().max(dy.abs());
        if cheb == 0 || cheb > reach {
            return None;
        }
        let side = 2 * reach + 1;
        let mut idx = (dy + reach) * side + (dx + reach);
        // the center offset is skipped in the table
        if idx > reach * side + reach {
            idx -= 1;
        }
        Some(self.offsets[idx as usize].2)
    }

    pub fn extract_into(&self, remaining: &ScoreMap, pose: GridPose, out: &mut Vec<f64>) {
        out.clear();
        out.resize(self.len(), 0.0);
        let (px, py) = (pose.x as i64, pose.y as i64);
        let (w, h) = (remaining.width() as i64, remaining.height() as i64);
        let scores = remaining.scores();
        for &(dx, dy, bucket) in &self.offsets {
            let (x, y) = (px + dx, py + dy);
            if x >= 0 && y >= 0 && x < w && y < h {
                out[bucket] += scores[(y * w + x) as usize];
            }
        }
        for (v, &n) in out.iter_mut().zip(&self.bucket_sizes) {
            *v /= n as f64;
        }
        let last = self.len() - 1;
        out[last] = 1.0;
    }

    pub fn extract(&self, remaining: &ScoreMap, pose: GridPose) -> MultiResFeature {
        let mut values = Vec::with_capacity(self.len());
        self.extract_into(remaining, pose, &mut values);
        MultiResFeature { values }
    }
}

/// Features of a planner state under the default ring geometry.
pub fn extract_features(state: &PlannerState) -> Result<MultiResFeature> {
    if state.pose.x >= state.remaining.width() || state.pose.y >= state.remaining.height() {
        return Err(Error::param("pose is outside the score map"));
    }
    Ok(FeatureLayout::new(&FeatureConfig::default())?.extract(&state.remaining, state.pose))
}
