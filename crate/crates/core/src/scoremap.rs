//! Per-class drivability table and scoremap rendering.
//!
//! Scores are an exponential moving average of an instantaneous drivability
//! measured from traversal feedback:
//!
//! ```text
//! d     = clamp(progress_rate / nominal_speed - beta * incidents / steps, 0, 1)
//! score = (1 - alpha) * score + alpha * d
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::grid::{ClassMap, ScoreMap};
use crate::sim::TraversalFeedback;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrivabilityEntry {
    pub score: f64,
    pub observations: u64,
}

fn default_alpha() -> f64 {
    0.3
}
fn default_beta() -> f64 {
    1.0
}
fn default_prior() -> f64 {
    0.5
}
fn default_nominal_speed() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrivabilityTable {
    #[serde(with = "string_keys")]
    pub classes: BTreeMap<usize, DrivabilityEntry>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_prior")]
    pub prior: f64,
    /// Progress rate that counts as perfect traversal, cells/step.
    #[serde(default = "default_nominal_speed")]
    pub nominal_speed: f64,
}

impl Default for DrivabilityTable {
    fn default() -> Self {
        Self {
            classes: BTreeMap::new(),
            alpha: default_alpha(),
            beta: default_beta(),
            prior: default_prior(),
            nominal_speed: default_nominal_speed(),
        }
    }
}

impl DrivabilityTable {
    pub fn with_params(alpha: f64, beta: f64, prior: f64, nominal_speed: f64) -> Result<Self> {
        let table = Self {
            classes: BTreeMap::new(),
            alpha,
            beta,
            prior,
            nominal_speed,
        };
        table.validate()?;
        Ok(table)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::param(format!("alpha {} must lie in (0, 1]", self.alpha)));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::param(format!("beta {} must be nonnegative", self.beta)));
        }
        if !(0.0..=1.0).contains(&self.prior) {
            return Err(Error::param(format!("prior {} must lie in [0, 1]", self.prior)));
        }
        if !(self.nominal_speed > 0.0 && self.nominal_speed.is_finite()) {
            return Err(Error::param("nominal speed must be positive"));
        }
        for (id, e) in &self.classes {
            if !(0.0..=1.0).contains(&e.score) {
                return Err(Error::param(format!("class {id} score {} outside [0, 1]", e.score)));
            }
        }
        Ok(())
    }

    /// Sets a class score by hand (for authored interest maps).
    pub fn set_score(&mut self, class_id: usize, score: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::param(format!("score {score} outside [0, 1]")));
        }
        self.classes
            .entry(class_id)
            .and_modify(|e| e.score = score)
            .or_insert(DrivabilityEntry {
                score,
                observations: 0,
            });
        Ok(())
    }

    pub fn score(&self, class_id: usize) -> f64 {
        self.classes.get(&class_id).map_or(self.prior, |e| e.score)
    }

    pub fn entry(&self, class_id: usize) -> DrivabilityEntry {
        self.classes.get(&class_id).copied().unwrap_or(DrivabilityEntry {
            score: self.prior,
            observations: 0,
        })
    }

    /// Instantaneous drivability of one feedback record.
    pub fn drivability(&self, feedback: &TraversalFeedback) -> Result<f64> {
        if feedback.steps == 0 {
            return Err(Error::param("feedback must cover at least one step"));
        }
        if !feedback.progress_rate.is_finite() {
            return Err(Error::param("progress rate must be finite"));
        }
        let incidence = feedback.obstacle_incidents as f64 / feedback.steps as f64;
        Ok((feedback.progress_rate / self.nominal_speed - self.beta * incidence).clamp(0.0, 1.0))
    }

    /// Folds one feedback record into the table. Unknown classes start from
    /// the prior.
    pub fn update(&mut self, feedback: &TraversalFeedback) -> Result<()> {
        let d = self.drivability(feedback)?;
        let alpha = self.alpha;
        let prior = self.prior;
        let entry = self.classes.entry(feedback.class_id).or_insert(DrivabilityEntry {
            score: prior,
            observations: 0,
        });
        entry.score = ((1.0 - alpha) * entry.score + alpha * d).clamp(0.0, 1.0);
        entry.observations += 1;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let table: Self = serde_json::from_str(text)?;
        table.validate()?;
        Ok(table)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }
}

/// Pure update, leaving the input table untouched.
pub fn update_drivability(
    table: &DrivabilityTable,
    feedback: &TraversalFeedback,
) -> Result<DrivabilityTable> {
    let mut next = table.clone();
    next.update(feedback)?;
    Ok(next)
}

/// Per-cell lookup of the class score.
pub fn render_scoremap(class_map: &ClassMap, table: &DrivabilityTable) -> ScoreMap {
    let scores = class_map.classes().iter().map(|&c| table.score(c)).collect();
    ScoreMap::new(class_map.width(), class_map.height(), scores)
        .expect("table scores are validated into [0, 1]")
}

/// JSON object keys are strings; the table is keyed by numeric class id.
mod string_keys {
    use std::collections::BTreeMap;

    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::DrivabilityEntry;

    pub fn serialize<S: Serializer>(
        map: &BTreeMap<usize, DrivabilityEntry>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        map.iter()
            .map(|(k, v)| (k.to_string(), *v))
            .collect::<BTreeMap<String, DrivabilityEntry>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<BTreeMap<usize, DrivabilityEntry>, D::Error> {
        let raw = BTreeMap::<String, DrivabilityEntry>::deserialize(d)?;
        raw.into_iter()
            .map(|(k, v)| {
                k.parse::<usize>()
                    .map(|id| (id, v))
                    .map_err(|_| D::Error::custom(format!("class key {k:?} is not an integer")))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridPose;
    use proptest::prelude::*;
    use rand::Rng;

    fn fb(class_id: usize, progress_rate: f64, incidents: usize, steps: usize) -> TraversalFeedback {
        TraversalFeedback {
            class_id,
            progress_rate,
            obstacle_incidents: incidents,
            steps,
        }
    }

    #[test]
    fn uniform_render() {
        let cm = ClassMap::new(4, 3, 1, vec![0; 12]).unwrap();
        let mut table = DrivabilityTable::default();
        table.set_score(0, 0.8).unwrap();
        let map = render_scoremap(&cm, &table);
        assert!(map.scores().iter().all(|&s| s == 0.8));
    }

    #[test]
    fn checkerboard_render() {
        let classes: Vec<usize> = (0..16).map(|i| (i % 4 + i / 4) % 2).collect();
        let cm = ClassMap::new(4, 4, 2, classes).unwrap();
        let mut table = DrivabilityTable::default();
        table.set_score(0, 1.0).unwrap();
        table.set_score(1, 0.0).unwrap();
        let map = render_scoremap(&cm, &table);
        for y in 0..4 {
            for x in 0..4 {
                let expect = if (x + y) % 2 == 0 { 1.0 } else { 0.0 };
                assert_eq!(map.get(GridPose::new(x, y)), expect);
            }
        }
    }

    #[test]
    fn render_matches_direct_lookup() {
        let mut rng = crate::rng::seeded(5);
        let classes: Vec<usize> = (0..15 * 9).map(|_| rng.gen_range(0..5)).collect();
        let cm = ClassMap::new(15, 9, 5, classes.clone()).unwrap();
        let mut table = DrivabilityTable::default();
        let scores = [0.1, 0.9, 0.33];
        for (id, s) in scores.iter().enumerate() {
            table.set_score(id, *s).unwrap();
        }
        let map = render_scoremap(&cm, &table);
        for (i, &c) in classes.iter().enumerate() {
            let expect = if c < scores.len() { scores[c] } else { 0.5 };
            assert_eq!(map.scores()[i], expect);
        }
    }

    #[test]
    fn perfect_traversal() {
        let mut t = DrivabilityTable::default();
        t.update(&fb(0, 0.5, 0, 10)).unwrap();
        assert!((t.score(0) - 0.65).abs() < 1e-12);
        assert_eq!(t.entry(0).observations, 1);
    }

    #[test]
    fn fully_blocked_class() {
        for s in [0.0, 0.2, 0.5, 1.0] {
            let mut t = DrivabilityTable::default();
            t.set_score(3, s).unwrap();
            t.update(&fb(3, 0.0, 12, 12)).unwrap();
            assert!((t.score(3) - 0.7 * s).abs() < 1e-12);
        }
    }

    #[test]
    fn repeated_feedback_matches_closed_form() {
        let mut t = DrivabilityTable::default();
        let f = fb(1, 0.31, 2, 9);
        let d = t.drivability(&f).unwrap();
        let s0 = t.prior;
        for n in 1..=40 {
            t.update(&f).unwrap();
            let keep = (1.0 - t.alpha).powi(n);
            let closed = keep * s0 + (1.0 - keep) * d;
            assert!((t.score(1) - closed).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn converges_to_fixed_point() {
        let mut t = DrivabilityTable::default();
        let f = fb(0, 0.2, 1, 5);
        let d = t.drivability(&f).unwrap();
        for _ in 0..50 {
            t.update(&f).unwrap();
        }
        assert!((t.score(0) - d).abs() < 1e-6);
    }

    #[test]
    fn unknown_class_starts_from_prior() {
        let t = DrivabilityTable::default();
        let next = update_drivability(&t, &fb(42, 0.0, 0, 1)).unwrap();
        assert!((next.score(42) - 0.35).abs() < 1e-12);
        assert!(t.classes.is_empty());
    }

    #[test]
    fn zero_step_feedback_is_rejected() {
        let mut t = DrivabilityTable::default();
        assert!(t.update(&fb(0, 0.0, 0, 0)).is_err());
    }

    #[test]
    fn json_layout() {
        let mut t = DrivabilityTable::default();
        t.classes.insert(
            0,
            DrivabilityEntry {
                score: 0.5,
                observations: 3,
            },
        );
        let v: serde_json::Value = serde_json::from_str(&t.to_json().unwrap()).unwrap();
        assert_eq!(v["classes"]["0"]["score"], 0.5);
        assert_eq!(v["classes"]["0"]["observations"], 3);
        assert_eq!(v["alpha"], 0.3);
        assert_eq!(v["beta"], 1.0);

        let minimal = r#"{"classes": {"0": {"score": 0.5, "observations": 3}}, "alpha": 0.3, "beta": 1.0}"#;
        let parsed = DrivabilityTable::from_json(minimal).unwrap();
        assert_eq!(parsed, t);
        assert!(DrivabilityTable::from_json(r#"{"classes": {"x": {"score": 0.5, "observations": 0}}}"#).is_err());
    }

    #[test]
    fn scores_stay_clamped_under_fuzz() {
        let mut rng = crate::rng::seeded(77);
        let mut t = DrivabilityTable::default();
        for _ in 0..10_000 {
            let steps = rng.gen_range(1..50);
            let f = fb(
                rng.gen_range(0..6),
                rng.gen_range(-5.0..5.0),
                rng.gen_range(0..=steps * 2),
                steps,
            );
            t.update(&f).unwrap();
            assert!(t.classes.values().all(|e| (0.0..=1.0).contains(&e.score)));
        }
    }

    proptest! {
        #[test]
        fn larger_drivability_never_lowers_score(
            old in 0.0f64..=1.0,
            p1 in -1.0f64..2.0,
            p2 in -1.0f64..2.0,
            inc in 0usize..10,
            steps in 1usize..10,
        ) {
            let mut t = DrivabilityTable::default();
            t.set_score(0, old).unwrap();
            let (a, b) = (fb(0, p1, inc, steps), fb(0, p2, inc, steps));
            let (da, db) = (t.drivability(&a).unwrap(), t.drivability(&b).unwrap());
            let sa = update_drivability(&t, &a).unwrap().score(0);
            let sb = update_drivability(&t, &b).unwrap().score(0);
            if da <= db {
                prop_assert!(sa <= sb);
            } else {
                prop_assert!(sa >= sb);
            }
        }
    }
}
