//! Discrete steering set `C = {-M, ..., M}`.

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteeringBins {
    m: usize,
    max_angle: f64,
}

impl SteeringBins {
    pub fn new(m: usize, max_angle: f64) -> Result<Self> {
        if !(max_angle > 0.0 && max_angle.is_finite()) {
            return Err(Error::param("maximum steering angle must be positive"));
        }
        Ok(Self { m, max_angle })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn max_angle(&self) -> f64 {
        self.max_angle
    }

    /// `2M + 1`.
    pub fn len(&self) -> usize {
        2 * self.m + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Angle between adjacent bins (the full range when `M = 0`).
    pub fn spacing(&self) -> f64 {
        if self.m == 0 {
            self.max_angle
        } else {
            self.max_angle / self.m as f64
        }
    }

    /// Angle of bin `c ∈ [-M, M]`.
    pub fn angle(&self, c: i64) -> f64 {
        if self.m == 0 {
            0.0
        } else {
            c as f64 * self.spacing()
        }
    }

    /// Angle of the bin at array position `index = c + M`.
    pub fn angle_at(&self, index: usize) -> f64 {
        self.angle(self.bin_of(index))
    }

    pub fn index_of(&self, c: i64) -> Result<usize> {
        if c.unsigned_abs() as usize > self.m {
            return Err(Error::param(format!("bin {c} outside [-{0}, {0}]", self.m)));
        }
        Ok((c + self.m as i64) as usize)
    }

    pub fn bin_of(&self, index: usize) -> i64 {
        index as i64 - self.m as i64
    }

    pub fn angles(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.angle_at(i)).collect()
    }

    /// Bin closest to `angle`, after clamping to the steering range.
    pub fn nearest(&self, angle: f64) -> i64 {
        if self.m == 0 {
            return 0;
        }
        let c = (angle.clamp(-self.max_angle, self.max_angle) / self.spacing()).round() as i64;
        c.clamp(-(self.m as i64), self.m as i64)
    }
}

/// Mass `1 - s` on bin `c` and `s / 2` on each neighbor; at the ends of the
/// range the single neighbor takes all of `s`.
pub fn smooth_labels(bins: &SteeringBins, c: i64, s: f64) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&s) {
        return Err(Error::param(format!("smoothing {s} must lie in [0, 1)")));
    }
    let i = bins.index_of(c)?;
    let mut labels = vec![0.0; bins.len()];
    if bins.m() == 0 || s == 0.0 {
        labels[i] = 1.0;
        return Ok(labels);
    }
    labels[i] = 1.0 - s;
    match (i.checked_sub(1), (i + 1 < bins.len()).then_some(i + 1)) {
        (Some(lo), Some(hi)) => {
            labels[lo] += s / 2.0;
            labels[hi] += s / 2.0;
        }
        (Some(n), None) | (None, Some(n)) => labels[n] += s,
        (None, None) => unreachable!("M >= 1 has two bins"),
    }
    Ok(labels)
}
