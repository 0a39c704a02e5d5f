//! Per-patch texture descriptors: Gabor energy statistics and hue histograms.

use crate::pnm::RgbImage;
use crate::texture::gabor::{FilterBank, GaborKernel};
use crate::{Error, Result};

/// Single-channel real image, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl Plane {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::ShapeMismatch(format!(
                "{width}x{height} plane needs {} values, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_rgb(image: &RgbImage) -> Self {
        Self {
            width: image.width(),
            height: image.height(),
            data: image.to_gray(),
        }
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl Rect {
    pub fn new(x: usize, y: usize, width: usize, height: usize) -> Self {
        Self {
            x,
            y,
            width,
            height,
        }
    }
}

/// Output positions of the valid (unpadded) convolution of `patch` with a
/// kernel of radius `r`: the kernel window stays inside the patch.
fn valid_range(plane: &Plane, patch: Rect, r: usize) -> Result<(std::ops::Range<usize>, std::ops::Range<usize>)> {
    if patch.x + patch.width > plane.width || patch.y + patch.height > plane.height {
        return Err(Error::param("patch extends beyond the image"));
    }
    if patch.width < 2 * r + 1 || patch.height < 2 * r + 1 {
        return Err(Error::PatchTooSmall(format!(
            "{}x{} patch cannot hold a {}-px kernel",
            patch.width,
            patch.height,
            2 * r + 1
        )));
    }
    Ok((
        patch.x + r..patch.x + patch.width - r,
        patch.y + r..patch.y + patch.height - r,
    ))
}

/// Convolution `sum k(u, v) * I(x - u, y - v)` at every valid position of
/// the patch, row-major.
pub fn convolve_valid(plane: &Plane, kernel: &GaborKernel, patch: Rect) -> Result<Vec<f64>> {
    let r = kernel.radius();
    let size = kernel.size();
    let (xs, ys) = valid_range(plane, patch, r)?;
    // convolution is correlation with the point-reflected kernel
    let flipped: Vec<f64> = kernel.weights().iter().rev().copied().collect();
    let mut out = Vec::with_capacity(xs.len() * ys.len());
    for y in ys {
        for x in xs.clone() {
            let mut acc = 0.0;
            for (row, krow) in flipped.chunks_exact(size).enumerate() {
                let start = (y + row - r) * plane.width + (x - r);
                acc += plane.data[start..start + size]
                    .iter()
                    .zip(krow)
                    .map(|(p, k)| p * k)
                    .sum::<f64>();
            }
            out.push(acc);
        }
    }
    Ok(out)
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// `(mean |response|, population std of response)` over the patch's valid
/// convolution outputs.
pub fn filter_energy(plane: &Plane, kernel: &GaborKernel, patch: Rect) -> Result<(f64, f64)> {
    let resp = convolve_valid(plane, kernel, patch)?;
    let mean_abs = resp.iter().map(|v| v.abs()).sum::<f64>() / resp.len() as f64;
    let (_, std) = mean_std(resp.iter().copied());
    Ok((mean_abs, std))
}

/// `(mean, std)` of the quadrature magnitude `sqrt(even^2 + odd^2)`.
pub fn quadrature_energy(
    plane: &Plane,
    even: &GaborKernel,
    odd: &GaborKernel,
    patch: Rect,
) -> Result<(f64, f64)> {
    let e = convolve_valid(plane, even, patch)?;
    let o = convolve_valid(plane, odd, patch)?;
    let mag: Vec<f64> = e.iter().zip(&o).map(|(a, b)| a.hypot(*b)).collect();
    Ok(mean_std(mag.iter().copied()))
}

/// Saturation below which a pixel's hue is treated as undefined.
pub const GRAY_SATURATION: f64 = 0.05;

/// Hue in degrees `[0, 360)` and saturation in `[0, 1]` (HSV).
pub fn hue_saturation([r, g, b]: [u8; 3]) -> (f64, f64) {
    let (r, g, b) = (r as f64 / 255.0, g as f64 / 255.0, b as f64 / 255.0);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let sat = if max > 0.0 { delta / max } else { 0.0 };
    if delta == 0.0 {
        return (0.0, sat);
    }
    let h = if max == r {
        60.0 * ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    (h.rem_euclid(360.0), sat)
}

/// Normalized hue histogram; near-gray pixels are spread evenly over all
/// bins.
pub fn hue_histogram(pixels: &[[u8; 3]], bins: usize) -> Result<Vec<f64>> {
    if bins < 2 {
        return Err(Error::param("hue histogram needs at least 2 bins"));
    }
    if pixels.is_empty() {
        return Err(Error::EmptyPatch);
    }
    let mut hist = vec![0.0; bins];
    for &px in pixels {
        let (h, s) = hue_saturation(px);
        if s < GRAY_SATURATION {
            hist.iter_mut().for_each(|b| *b += 1.0 / bins as f64);
        } else {
            let bin = ((h / 360.0 * bins as f64) as usize).min(bins - 1);
            hist[bin] += 1.0;
        }
    }
    let n = pixels.len() as f64;
    hist.iter_mut().for_each(|b| *b /= n);
    Ok(hist)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatchFeature {
    /// `(mean, std)` per quadrature pair in bank order.
    pub gabor_stats: Vec<(f64, f64)>,
    pub hue_hist: Vec<f64>,
}

impl PatchFeature {
    pub fn to_vec(&self) -> Vec<f64> {
        self.gabor_stats
            .iter()
            .flat_map(|&(m, s)| [m, s])
            .chain(self.hue_hist.iter().copied())
            .collect()
    }

    /// Mean quadrature energy per orientation at one scale.
    pub fn orientation_means(&self, bank: &FilterBank, scale: usize) -> Vec<f64> {
        (0..bank.orientations())
            .map(|o| self.gabor_stats[o * bank.scales() + scale].0)
            .collect()
    }
}

pub fn patch_feature(
    image: &RgbImage,
    plane: &Plane,
    bank: &FilterBank,
    patch: Rect,
    hue_bins: usize,
) -> Result<PatchFeature> {
    let gabor_stats = bank
        .pairs()
        .iter()
        .map(|pair| quadrature_energy(plane, &pair.even, &pair.odd, patch))
        .collect::<Result<Vec<_>>>()?;
    let mut pixels = Vec::with_capacity(patch.width * patch.height);
    for y in patch.y..patch.y + patch.height {
        for x in patch.x..patch.x + patch.width {
            pixels.push(image.get(x, y));
        }
    }
    Ok(PatchFeature {
        gabor_stats,
        hue_hist: hue_histogram(&pixels, hue_bins)?,
    })
}
