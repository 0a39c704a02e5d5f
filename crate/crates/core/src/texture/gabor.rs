//! Real Gabor kernels and quadrature filter banks.
//!
//! `g(x, y) = exp(-(x'^2 + γ^2 y'^2) / 2σ^2) * cos(2π x'/λ + ψ)` with
//! `x' = x cosθ + y sinθ` and `y' = -x sinθ + y cosθ`, sampled at integer
//! offsets inside the disk of radius `size / 2` (zero outside, so truncation
//! does not favor the axis directions). The mean over the disk is subtracted
//! so constant input produces zero response.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaborParams {
    pub size: usize,
    pub wavelength: f64,
    pub orientation: f64,
    pub sigma: f64,
    pub aspect_ratio: f64,
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaborKernel {
    params: GaborParams,
    weights: Vec<f64>,
}

/// Raw (not mean-removed) Gabor value at offset `(x, y)`.
pub fn gabor_value(params: &GaborParams, x: f64, y: f64) -> f64 {
    let (s, c) = params.orientation.sin_cos();
    let xr = x * c + y * s;
    let yr = -x * s + y * c;
    let g = params.aspect_ratio;
    let envelope = (-(xr * xr + g * g * yr * yr) / (2.0 * params.sigma * params.sigma)).exp();
    envelope * (2.0 * PI * xr / params.wavelength + params.phase).cos()
}

impl GaborKernel {
    pub fn new(params: GaborParams) -> Result<Self> {
        if params.size % 2 == 0 {
            return Err(Error::param(format!("kernel size {} must be odd", params.size)));
        }
        if !(params.wavelength > 0.0) {
            return Err(Error::param("wavelength must be positive"));
        }
        if !(params.sigma > 0.0) {
            return Err(Error::param("sigma must be positive"));
        }
        if !params.aspect_ratio.is_finite() || !params.orientation.is_finite() || !params.phase.is_finite() {
            return Err(Error::param("gabor parameters must be finite"));
        }
        let r = (params.size / 2) as i64;
        let inside = |x: i64, y: i64| x * x + y * y <= r * r;
        let mut weights = Vec::with_capacity(params.size * params.size);
        for y in -r..=r {
            for x in -r..=r {
                weights.push(if inside(x, y) {
                    gabor_value(&params, x as f64, y as f64)
                } else {
                    0.0
                });
            }
        }
        let support = (-r..=r)
            .flat_map(|y| (-r..=r).map(move |x| (x, y)))
            .filter(|&(x, y)| inside(x, y))
            .count();
        let mean = weights.iter().sum::<f64>() / support as f64;
        for (i, w) in weights.iter_mut().enumerate() {
            let (x, y) = ((i as i64 % params.size as i64) - r, (i as i64 / params.size as i64) - r);
            if inside(x, y) {
                *w -= mean;
            }
        }
        Ok(Self { params, weights })
    }

    pub fn params(&self) -> &GaborParams {
        &self.params
    }

    pub fn size(&self) -> usize {
        self.params.size
    }

    pub fn radius(&self) -> usize {
        self.params.size / 2
    }

    /// Row-major weights, index `(y + r) * size + (x + r)` for offset `(x, y)`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn at(&self, x: i64, y: i64) -> f64 {
        let r = self.radius() as i64;
        self.weights[((y + r) as usize) * self.size() + (x + r) as usize]
    }
}

pub fn make_gabor_kernel(
    size: usize,
    wavelength: f64,
    orientation: f64,
    sigma: f64,
    aspect_ratio: f64,
    phase: f64,
) -> Result<GaborKernel> {
    GaborKernel::new(GaborParams {
        size,
        wavelength,
        orientation,
        sigma,
        aspect_ratio,
        phase,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BankConfig {
    pub orientations: usize,
    pub wavelengths: Vec<f64>,
    /// σ = sigma_ratio · λ
    pub sigma_ratio: f64,
    pub aspect_ratio: f64,
    pub kernel_size: usize,
}

impl Default for BankConfig {
    fn default() -> Self {
        Self {
            orientations: 6,
            wavelengths: vec![4.0, 8.0, 16.0],
            sigma_ratio: 0.56,
            aspect_ratio: 0.5,
            kernel_size: 9,
        }
    }
}

/// Even (ψ = 0) and odd (ψ = π/2) kernels sharing orientation and scale.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraturePair {
    pub even: GaborKernel,
    pub odd: GaborKernel,
}

/// Orientation-major grid of quadrature pairs: index `o * scales + s`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    orientations: usize,
    scales: usize,
    pairs: Vec<QuadraturePair>,
}

impl FilterBank {
    pub fn new(config: &BankConfig) -> Result<Self> {
        if config.orientations < 4 {
            return Err(Error::param("a filter bank needs at least 4 orientations"));
        }
        if config.wavelengths.len() < 2 {
            return Err(Error::param("a filter bank needs at least 2 scales"));
        }
        let mut pairs = Vec::with_capacity(config.orientations * config.wavelengths.len());
        for o in 0..config.orientations {
            let orientation = PI * o as f64 / config.orientations as f64;
            for &wavelength in &config.wavelengths {
                let params = GaborParams {
                    size: config.kernel_size,
                    wavelength,
                    orientation,
                    sigma: config.sigma_ratio * wavelength,
                    aspect_ratio: config.aspect_ratio,
                    phase: 0.0,
                };
                pairs.push(QuadraturePair {
                    even: GaborKernel::new(params)?,
                    odd: GaborKernel::new(GaborParams {
                        phase: PI / 2.0,
                        ..params
                    })?,
                });
            }
        }
        Ok(Self {
            orientations: config.orientations,
            scales: config.wavelengths.len(),
            pairs,
        })
    }

    pub fn orientations(&self) -> usize {
        self.orientations
    }

    pub fn scales(&self) -> usize {
        self.scales
    }

    pub fn pairs(&self) -> &[QuadraturePair] {
        &self.pairs
    }

    pub fn pair(&self, orientation: usize, scale: usize) -> &QuadraturePair {
        &self.pairs[orientation * self.scales + scale]
    }

    pub fn kernel_size(&self) -> usize {
        self.pairs[0].even.size()
    }
}
