#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use rand::Rng;
use terrasample::experiment::ExperimentConfig;
use terrasample::local::{train_clone, CloneConfig};
use terrasample::pnm::{GrayImage, RgbImage};
use terrasample::scoremap::DrivabilityTable;
use terrasample::texture::{Plane, Rect, SegmentConfig};
use terrasample::planner::{feasible_actions, Action, FeatureConfig, PolicyParams, TrainConfig};
use terrasample::{GridPose, ScoreMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Texture {
    /// Reddish horizontal stripes, 8 px period.
    Grating,
    /// Flat green with mild noise.
    Flat,
    /// Blue 4 px checkerboard.
    Checker,
}

pub fn texture_pixel(t: Texture, x: usize, y: usize, noise: f64) -> [u8; 3] {
    let clamp = |v: f64| v.round().clamp(0.0, 255.0) as u8;
    match t {
        Texture::Grating => {
            let m = 0.55 + 0.45 * (2.0 * PI * y as f64 / 8.0).cos();
            [clamp(210.0 * m + 30.0 + noise), clamp(60.0 * m + 10.0 + noise), clamp(40.0 * m + 5.0)]
        }
        Texture::Flat => [clamp(60.0 + noise), clamp(170.0 + noise), clamp(70.0 + noise)],
        Texture::Checker => {
            if ((x / 4) + (y / 4)) % 2 == 0 {
                [clamp(40.0 + noise), clamp(60.0 + noise), clamp(210.0 + noise)]
            } else {
                [clamp(15.0 + noise), clamp(25.0 + noise), clamp(100.0 + noise)]
            }
        }
    }
}

/// Image whose texture at pixel `(x, y)` is `region(x, y)`.
pub fn textured_image(
    width: usize,
    height: usize,
    seed: u64,
    region: impl Fn(usize, usize) -> Texture,
) -> RgbImage {
    let mut rng = terrasample::rng::seeded(seed);
    RgbImage::from_fn(width, height, |x, y| {
        let noise = rng.gen_range(-6.0..6.0);
        texture_pixel(region(x, y), x, y, noise)
    })
}

/// Fraction of items whose cluster's majority label equals their own label.
pub fn purity(clusters: &[usize], labels: &[usize]) -> f64 {
    let k = clusters.iter().max().map_or(0, |m| m + 1);
    let l = labels.iter().max().map_or(0, |m| m + 1);
    let mut counts = vec![vec![0usize; l]; k];
    for (&c, &t) in clusters.iter().zip(labels) {
        counts[c][t] += 1;
    }
    let majority: usize = counts.iter().map(|row| row.iter().copied().max().unwrap_or(0)).sum();
    majority as f64 / clusters.len() as f64
}

pub fn random_plane(width: usize, height: usize, seed: u64) -> Plane {
    let mut rng = terrasample::rng::seeded(seed);
    Plane::new(width, height, (0..width * height).map(|_| rng.gen_range(0.0..255.0)).collect()).unwrap()
}

/// Sum of a few Gaussian blobs, normalized to a maximum of 1.
pub fn clustered_scoremap(width: usize, height: usize, seed: u64) -> ScoreMap {
    let mut rng = terrasample::rng::seeded(seed);
    let blobs: Vec<(f64, f64, f64, f64)> = (0..rng.gen_range(3..=5))
        .map(|_| {
            (
                rng.gen_range(0.0..width as f64),
                rng.gen_range(0.0..height as f64),
                rng.gen_range(1.5..3.5),
                rng.gen_range(0.5..1.0),
            )
        })
        .collect();
    let mut scores: Vec<f64> = (0..width * height)
        .map(|i| {
            let (x, y) = ((i % width) as f64 + 0.5, (i / width) as f64 + 0.5);
            blobs
                .iter()
                .map(|(cx, cy, s, a)| a * (-((x - cx).powi(2) + (y - cy).powi(2)) / (2.0 * s * s)).exp())
                .sum()
        })
        .collect();
    let max = scores.iter().copied().fold(0.0, f64::max);
    scores.iter_mut().for_each(|s| *s = if *s / max < 0.02 { 0.0 } else { *s / max });
    ScoreMap::new(width, height, scores).unwrap()
}

/// Exhaustive search over every action sequence of length `horizon`.
pub fn best_coverage_reward(remaining: &mut ScoreMap, pose: GridPose, horizon: usize) -> f64 {
    if horizon == 0 {
        return 0.0;
    }
    let mask = feasible_actions(remaining.width(), remaining.height(), pose);
    let mut best = 0.0f64;
    for a in Action::ALL {
        if !mask[a.index()] {
            continue;
        }
        let next = a.apply(pose);
        let r = remaining.take(next);
        best = best.max(r + best_coverage_reward(remaining, next, horizon - 1));
        remaining.set(next, r).unwrap();
    }
    best
}

pub fn random_scoremap(width: usize, height: usize, seed: u64) -> ScoreMap {
    let mut rng = terrasample::rng::seeded(seed);
    ScoreMap::new(width, height, (0..width * height).map(|_| rng.gen_range(0.0..1.0)).collect()).unwrap()
}

pub fn random_policy(seed: u64, scale: f64) -> PolicyParams {
    let mut rng = terrasample::rng::seeded(seed);
    let mut p = PolicyParams::zeros(FeatureConfig::default());
    p.theta.iter_mut().for_each(|t| *t = rng.gen_range(-scale..scale));
    p
}

/// Class-map cells of the impassable texture: everything outside the
/// quadrant holding the start cell.
pub fn blocked_cell(x: usize, y: usize) -> bool {
    x.max(y) >= 8
}

/// Default-config steering net, trained once per test binary.
pub fn shared_net() -> &'static Path {
    static NET: OnceLock<(tempfile::TempDir, PathBuf)> = OnceLock::new();
    let (_, path) = NET.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let out = train_clone(&CloneConfig::default(), &DrivabilityTable::default()).unwrap();
        let path = dir.path().join("net.json");
        out.net.write(&path).unwrap();
        (dir, path)
    });
    path
}

pub fn blocked_scenario(dir: &Path, loop_count: usize, net: &Path) -> ExperimentConfig {
    let img = textured_image(256, 256, 11, |x, y| {
        if blocked_cell(x / 16, y / 16) {
            Texture::Grating
        } else {
            Texture::Flat
        }
    });
    let image = dir.join("aerial.ppm");
    img.write(&image).unwrap();
    let mask = (0..256).map(|i| if blocked_cell(i % 16, i / 16) { 255 } else { 0 }).collect();
    let obstacles = dir.join("obstacles.pgm");
    GrayImage::new(16, 16, 255, mask).unwrap().write(&obstacles).unwrap();
    ExperimentConfig {
        output_dir: dir.join("out"),
        image,
        obstacles: Some(obstacles),
        loop_count,
        segment: SegmentConfig {
            k: 2,
            ..SegmentConfig::default()
        },
        planner: TrainConfig {
            iterations: 300,
            m: 16,
            horizon: 40,
            learning_rate: 0.05,
            ..TrainConfig::default()
        },
        net: Some(net.to_path_buf()),
        // trust fresh feedback: one pass over the blocked region is enough
        table: DrivabilityTable {
            alpha: 0.8,
            ..DrivabilityTable::default()
        },
        seed: 1,
        ..ExperimentConfig::default()
    }
}


/// Textbook convolution: four nested loops with explicit kernel reflection.
pub fn naive_convolution(plane: &Plane, weights: &[f64], size: usize, patch: Rect) -> Vec<f64> {
    let r = (size / 2) as i64;
    let mut out = Vec::new();
    let (px0, py0) = (patch.x as i64, patch.y as i64);
    let (px1, py1) = (px0 + patch.width as i64, py0 + patch.height as i64);
    for y in patch.y..patch.y + patch.height {
        for x in patch.x..patch.x + patch.width {
            let (xi, yi) = (x as i64, y as i64);
            if xi - r < px0 || yi - r < py0 || xi + r >= px1 || yi + r >= py1 {
                continue;
            }
            let mut acc = 0.0;
            for v in -r..=r {
                for u in -r..=r {
                    let k = weights[((v + r) * size as i64 + (u + r)) as usize];
                    acc += k * plane.get((xi - u) as usize, (yi - v) as usize);
                }
            }
            out.push(acc);
        }
    }
    out
}
