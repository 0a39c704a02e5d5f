//! Grid types shared by the segmentation, scoring and planning stages.
//!
//! All grids are row-major with `y` as the row index. Moving "north" means
//! increasing `y`, which matches a counterclockwise-positive heading of π/2
//! in the simulator.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::pnm::GrayImage;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridPose {
    pub x: usize,
    pub y: usize,
}

impl GridPose {
    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }

    /// Center of the cell in continuous cell units.
    pub fn center(self) -> (f64, f64) {
        (self.x as f64 + 0.5, self.y as f64 + 0.5)
    }
}

/// Nonnegative per-cell reward field.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMap {
    width: usize,
    height: usize,
    scores: Vec<f64>,
}

impl ScoreMap {
    pub fn new(width: usize, height: usize, scores: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::param("score map dimensions must be positive"));
        }
        if scores.len() != width * height {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} score map needs {} values, got {}",
                width,
                height,
                width * height,
                scores.len()
            )));
        }
        if let Some(bad) = scores.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
            return Err(Error::param(format!("score {bad} is not a finite nonnegative value")));
        }
        Ok(Self {
            width,
            height,
            scores,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn contains(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height
    }

    pub fn get(&self, pose: GridPose) -> f64 {
        self.scores[pose.y * self.width + pose.x]
    }

    /// Sets a cell score. Negative or non-finite values are rejected.
    pub fn set(&mut self, pose: GridPose, value: f64) -> Result<()> {
        if !(value.is_finite() && value >= 0.0) {
            return Err(Error::param(format!("score {value} is not a finite nonnegative value")));
        }
        self.scores[pose.y * self.width + pose.x] = value;
        Ok(())
    }

    /// Zeroes a cell and returns what it held.
    pub fn take(&mut self, pose: GridPose) -> f64 {
        std::mem::take(&mut self.scores[pose.y * self.width + pose.x])
    }

    pub fn total(&self) -> f64 {
        self.scores.iter().sum()
    }

    /// Comma-separated grid, one line per row starting at `y = 0`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in self.scores.chunks(self.width) {
            let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            let _ = writeln!(out, "{}", line.join(","));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut width = 0;
        let mut scores = Vec::new();
        let mut height = 0;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(|tok| tok.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| Error::parse("score map csv", format!("line {}: {e}", lineno + 1)))?;
            if height == 0 {
                width = row.len();
            } else if row.len() != width {
                return Err(Error::parse(
                    "score map csv",
                    format!("line {} has {} columns, expected {width}", lineno + 1, row.len()),
                ));
            }
            scores.extend(row);
            height += 1;
        }
        Self::new(width, height, scores)
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    /// Visualization: `round(clamp(score, 0, 1) * 255)`.
    pub fn to_pgm(&self) -> GrayImage {
        let pixels = self
            .scores
            .iter()
            .map(|s| (s.clamp(0.0, 1.0) * 255.0).round() as u16)
            .collect();
        GrayImage::new(self.width, self.height, 255, pixels).expect("shape checked on construction")
    }
}

/// Texture class id per cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassMap {
    width: usize,
    height: usize,
    num_classes: usize,
    classes: Vec<usize>,
}

impl ClassMap {
    pub fn new(width: usize, height: usize, num_classes: usize, classes: Vec<usize>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::param("class map dimensions must be positive"));
        }
        if num_classes == 0 {
            return Err(Error::param("class map needs at least one class"));
        }
        if classes.len() != width * height {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} class map needs {} values, got {}",
                width,
                height,
                width * height,
                classes.len()
            )));
        }
        if let Some(bad) = classes.iter().find(|&&c| c >= num_classes) {
            return Err(Error::param(format!("class id {bad} is not below {num_classes}")));
        }
        Ok(Self {
            width,
            height,
            num_classes,
            classes,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn classes(&self) -> &[usize] {
        &self.classes
    }

    pub fn get(&self, pose: GridPose) -> usize {
        self.classes[pose.y * self.width + pose.x]
    }

    /// One gray level per class id: the level is the id itself and the PGM
    /// maxval is `num_classes - 1` (at least 1), so viewers stretch the ids
    /// over the full gray range.
    pub fn to_pgm(&self) -> GrayImage {
        let maxval = (self.num_classes.saturating_sub(1)).max(1) as u16;
        let pixels = self.classes.iter().map(|&c| c as u16).collect();
        GrayImage::new(self.width, self.height, maxval, pixels).expect("ids bounded by maxval")
    }

    /// Inverse of [`ClassMap::to_pgm`]; the class count is `maxval + 1`, so a
    /// single-class map reads back with two classes.
    pub fn from_pgm(image: &GrayImage) -> Result<Self> {
        let classes: Vec<usize> = image.pixels().iter().map(|&p| p as usize).collect();
        let num_classes = image.maxval() as usize + 1;
        Self::new(image.width(), image.height(), num_classes, classes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_negative_scores_and_bad_shapes() {
        assert!(ScoreMap::new(2, 2, vec![0.0, 1.0, -0.1, 0.0]).is_err());
        assert!(ScoreMap::new(2, 2, vec![0.0; 3]).is_err());
        assert!(ScoreMap::new(2, 1, vec![0.0, f64::NAN]).is_err());
        assert!(ClassMap::new(2, 1, 2, vec![0, 2]).is_err());
    }

    #[test]
    fn score_csv_round_trip_is_exact() {
        let map = ScoreMap::new(3, 2, vec![0.1, 0.2, 1.0 / 3.0, 0.0, 5.5, 1e-17]).unwrap();
        let back = ScoreMap::from_csv(&map.to_csv()).unwrap();
        assert_eq!(map, back);
    }

    #[test]
    fn ragged_csv_is_rejected() {
        assert!(ScoreMap::from_csv("1,2\n3\n").is_err());
    }

    #[test]
    fn class_map_pgm_round_trip() {
        let map = ClassMap::new(3, 2, 4, vec![0, 1, 2, 3, 3, 0]).unwrap();
        let back = ClassMap::from_pgm(&map.to_pgm()).unwrap();
        assert_eq!(map, back);
    }

    #[test]
    fn take_zeroes_and_returns() {
        let mut map = ScoreMap::new(2, 1, vec![0.5, 2.0]).unwrap();
        assert_eq!(map.take(GridPose::new(1, 0)), 2.0);
        assert_eq!(map.get(GridPose::new(1, 0)), 0.0);
        assert_eq!(map.total(), 0.5);
    }
}
