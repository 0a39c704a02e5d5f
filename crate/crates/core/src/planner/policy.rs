//! Linear softmax policy over the four grid moves.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::grid::GridPose;
use crate::planner::features::{FeatureConfig, MultiResFeature};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    North,
    South,
    East,
    West,
}

impl Action {
    pub const ALL: [Action; 4] = [Action::North, Action::South, Action::East, Action::West];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn delta(self) -> (i64, i64) {
        match self {
            Action::North => (0, 1),
            Action::South => (0, -1),
            Action::East => (1, 0),
            Action::West => (-1, 0),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Action::North => "north",
            Action::South => "south",
            Action::East => "east",
            Action::West => "west",
        }
    }

    pub fn apply(self, pose: GridPose) -> GridPose {
        let (dx, dy) = self.delta();
        GridPose::new((pose.x as i64 + dx) as usize, (pose.y as i64 + dy) as usize)
    }
}

pub type ActionMask = [bool; 4];

/// Moves that stay on a `width x height` grid.
pub fn feasible_actions(width: usize, height: usize, pose: GridPose) -> ActionMask {
    Action::ALL.map(|a| {
        let (dx, dy) = a.delta();
        let (x, y) = (pose.x as i64 + dx, pose.y as i64 + dy);
        x >= 0 && y >= 0 && (x as usize) < width && (y as usize) < height
    })
}

/// `theta` is a row-major `4 x feature_len` matrix, one row per action.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    pub feature: FeatureConfig,
    pub theta: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct PolicyJson {
    actions: Vec<String>,
    feature_config: FeatureConfig,
    rows: usize,
    cols: usize,
    theta: Vec<f64>,
}

impl PolicyParams {
    pub fn zeros(feature: FeatureConfig) -> Self {
        let n = 4 * feature.len();
        Self {
            feature,
            theta: vec![0.0; n],
        }
    }

    pub fn cols(&self) -> usize {
        self.feature.len()
    }

    pub fn row(&self, action: Action) -> &[f64] {
        let c = self.cols();
        &self.theta[action.index() * c..(action.index() + 1) * c]
    }

    pub fn is_finite(&self) -> bool {
        self.theta.iter().all(|v| v.is_finite())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&PolicyJson {
            actions: Action::ALL.iter().map(|a| a.label().to_string()).collect(),
            feature_config: self.feature.clone(),
            rows: 4,
            cols: self.cols(),
            theta: self.theta.clone(),
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let json: PolicyJson = serde_json::from_str(text)?;
        let expected: Vec<&str> = Action::ALL.iter().map(|a| a.label()).collect();
        if json.actions != expected {
            return Err(Error::parse("policy json", format!("actions must be {expected:?}")));
        }
        if json.rows != 4 || json.cols != json.feature_config.len() || json.theta.len() != 4 * json.cols {
            return Err(Error::parse("policy json", "theta shape does not match the feature config"));
        }
        let params = Self {
            feature: json.feature_config,
            theta: json.theta,
        };
        if !params.is_finite() {
            return Err(Error::parse("policy json", "theta has non-finite entries"));
        }
        Ok(params)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }
}

/// Masked softmax of `theta · phi`: infeasible moves get probability 0 and
/// the rest are renormalized.
pub fn action_distribution(params: &PolicyParams, phi: &[f64], mask: &ActionMask) -> Result<[f64; 4]> {
    let cols = params.cols();
    if phi.len() != cols || params.theta.len() != 4 * cols {
        return Err(Error::ShapeMismatch(format!(
            "feature length {} vs policy columns {cols}",
            phi.len()
        )));
    }
    if !mask.iter().any(|&m| m) {
        return Err(Error::InvalidState("every action is masked".into()));
    }
    let mut logits = [f64::NEG_INFINITY; 4];
    for a in Action::ALL {
        if mask[a.index()] {
            logits[a.index()] = params.row(a).iter().zip(phi).map(|(t, f)| t * f).sum();
        }
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut probs = [0.0; 4];
    let mut total = 0.0;
    for i in 0..4 {
        if mask[i] {
            probs[i] = (logits[i] - max).exp();
            total += probs[i];
        }
    }
    probs.iter_mut().for_each(|p| *p /= total);
    Ok(probs)
}

/// Convenience wrapper taking a feature value and a grid position.
pub fn action_distribution_at(
    params: &PolicyParams,
    phi: &MultiResFeature,
    width: usize,
    height: usize,
    pose: GridPose,
) -> Result<[f64; 4]> {
    let mask = feasible_actions(width, height, pose);
    action_distribution(params, &phi.values, &mask).map_err(|e| match e {
        Error::InvalidState(_) => Error::NoFeasibleAction { x: pose.x, y: pose.y },
        other => other,
    })
}

/// `d log π(a|s) / d theta = (e_a - π) ⊗ phi`, accumulated as `scale` times
/// that into `grad`.
pub fn accumulate_grad_log_prob(
    probs: &[f64; 4],
    phi: &[f64],
    action: Action,
    scale: f64,
    grad: &mut [f64],
) {
    let cols = phi.len();
    for (row, &p) in probs.iter().enumerate() {
        let coeff = (f64::from(u8::from(row == action.index())) - p) * scale;
        if coeff == 0.0 {
            continue;
        }
        for (g, f) in grad[row * cols..(row + 1) * cols].iter_mut().zip(phi) {
            *g += coeff * f;
        }
    }
}

pub fn log_prob(params: &PolicyParams, phi: &[f64], mask: &ActionMask, action: Action) -> Result<f64> {
    Ok(action_distribution(params, phi, mask)?[action.index()].ln())
}

/// Highest-probability feasible action; ties go to the earlier action in
/// [`Action::ALL`].
pub fn argmax_action(probs: &[f64; 4], mask: &ActionMask) -> Action {
    let mut best = None;
    for a in Action::ALL {
        if !mask[a.index()] {
            continue;
        }
        match best {
            Some((_, p)) if probs[a.index()] <= p => {}
            _ => best = Some((a, probs[a.index()])),
        }
    }
    best.expect("at least one feasible action").0
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_params(seed: u64, scale: f64) -> PolicyParams {
        let mut rng = crate::rng::seeded(seed);
        let mut p = PolicyParams::zeros(FeatureConfig::default());
        p.theta.iter_mut().for_each(|t| *t = rng.gen_range(-scale..scale));
        p
    }

    #[test]
    fn zero_theta_interior_is_uniform() {
        let p = PolicyParams::zeros(FeatureConfig::default());
        let phi = vec![0.3; 33];
        let probs = action_distribution(&p, &phi, &[true; 4]).unwrap();
        assert_eq!(probs, [0.25; 4]);
    }

    #[test]
    fn corner_masks_two_moves() {
        let p = PolicyParams::zeros(FeatureConfig::default());
        let mask = feasible_actions(5, 5, GridPose::new(0, 0));
        assert_eq!(mask, [true, false, true, false]);
        let probs = action_distribution(&p, &[0.0; 33], &mask).unwrap();
        assert_eq!(probs, [0.5, 0.0, 0.5, 0.0]);
    }

    #[test]
    fn all_masked_is_an_error() {
        let p = PolicyParams::zeros(FeatureConfig::default());
        assert!(action_distribution(&p, &[0.0; 33], &[false; 4]).is_err());
        let phi = MultiResFeature { values: vec![0.0; 33] };
        assert!(matches!(
            action_distribution_at(&p, &phi, 1, 1, GridPose::new(0, 0)),
            Err(Error::NoFeasibleAction { .. })
        ));
        assert!(action_distribution(&p, &[0.0; 5], &[true; 4]).is_err());
    }

    #[test]
    fn matches_scalar_softmax() {
        let mut rng = crate::rng::seeded(3);
        for seed in 0..50 {
            let p = random_params(seed, 3.0);
            let phi: Vec<f64> = (0..33).map(|_| rng.gen_range(0.0..2.0)).collect();
            let mask = [rng.gen_bool(0.8), true, rng.gen_bool(0.8), rng.gen_bool(0.8)];
            let probs = action_distribution(&p, &phi, &mask).unwrap();
            let z: Vec<f64> = (0..4)
                .map(|a| {
                    if !mask[a] {
                        return 0.0;
                    }
                    let mut s = 0.0;
                    for j in 0..33 {
                        s += p.theta[a * 33 + j] * phi[j];
                    }
                    s.exp()
                })
                .collect();
            let total: f64 = z.iter().sum();
            for a in 0..4 {
                assert!((probs[a] - z[a] / total).abs() < 1e-12);
            }
            assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn grad_log_prob_matches_finite_differences() {
        let mut rng = crate::rng::seeded(8);
        for seed in 0..20 {
            let p = random_params(seed, 1.0);
            let phi: Vec<f64> = (0..33).map(|_| rng.gen_range(0.0..1.5)).collect();
            let mask = [true, rng.gen_bool(0.7), true, rng.gen_bool(0.7)];
            let action = Action::ALL[if rng.gen_bool(0.5) { 0 } else { 2 }];
            let probs = action_distribution(&p, &phi, &mask).unwrap();
            let mut grad = vec![0.0; p.theta.len()];
            accumulate_grad_log_prob(&probs, &phi, action, 1.0, &mut grad);
            let h = 1e-6;
            for i in 0..p.theta.len() {
                let (mut plus, mut minus) = (p.clone(), p.clone());
                plus.theta[i] += h;
                minus.theta[i] -= h;
                let fd = (log_prob(&plus, &phi, &mask, action).unwrap()
                    - log_prob(&minus, &phi, &mask, action).unwrap())
                    / (2.0 * h);
                let denom = grad[i].abs().max(fd.abs()).max(1e-3);
                assert!((fd - grad[i]).abs() / denom < 1e-6, "i={i} fd={fd} an={}", grad[i]);
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let p = random_params(1, 1.0);
        let back = PolicyParams::from_json(&p.to_json().unwrap()).unwrap();
        assert_eq!(back, p);
        let v: serde_json::Value = serde_json::from_str(&p.to_json().unwrap()).unwrap();
        assert_eq!(v["actions"][2], "east");
    }

    #[test]
    fn argmax_prefers_first_on_ties() {
        assert_eq!(argmax_action(&[0.25; 4], &[true; 4]), Action::North);
        assert_eq!(argmax_action(&[0.5, 0.0, 0.5, 0.0], &[false, true, true, true]), Action::East);
    }
}
