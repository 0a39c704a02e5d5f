use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::grid::ClassMap;
use crate::pnm::RgbImage;
use crate::texture::features::{patch_feature, PatchFeature, Plane, Rect};
use crate::texture::gabor::{BankConfig, FilterBank};
use crate::texture::kmeans::{kmeans, nearest, FeatureScale, KMeansOptions};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmentConfig {
    pub k: usize,
    pub patch_size: usize,
    pub hue_bins: usize,
    pub bank: BankConfig,
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        Self {
            k: 4,
            patch_size: 16,
            hue_bins: 12,
            bank: BankConfig::default(),
            max_iterations: 100,
            tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansModel {
    pub k: usize,
    pub centroids: Vec<Vec<f64>>,
    pub feature_scale: FeatureScale,
}

#[derive(Serialize, Deserialize)]
struct ModelJson {
    k: usize,
    centroids: BTreeMap<String, Vec<f64>>,
    feature_mean: Vec<f64>,
    feature_std: Vec<f64>,
}

impl KMeansModel {
    /// Class of a raw (unstandardized) feature vector.
    pub fn classify(&self, raw: &[f64]) -> usize {
        nearest(&self.feature_scale.apply(raw), &self.centroids).0
    }

    /// Sidecar layout: `{"k", "centroids": {"<id>": [...]}, "feature_mean", "feature_std"}`.
    pub fn to_json(&self) -> Result<String> {
        let json = ModelJson {
            k: self.k,
            centroids: self
                .centroids
                .iter()
                .enumerate()
                .map(|(i, c)| (i.to_string(), c.clone()))
                .collect(),
            feature_mean: self.feature_scale.mean.clone(),
            feature_std: self.feature_scale.std.clone(),
        };
        Ok(serde_json::to_string_pretty(&json)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let json: ModelJson = serde_json::from_str(text)?;
        let mut centroids = vec![Vec::new(); json.k];
        for (key, c) in json.centroids {
            let id: usize = key
                .parse()
                .map_err(|_| Error::parse("k-means sidecar", format!("bad class key {key:?}")))?;
            if id >= json.k {
                return Err(Error::parse("k-means sidecar", format!("class {id} >= k")));
            }
            centroids[id] = c;
        }
        if centroids.iter().any(Vec::is_empty) {
            return Err(Error::parse("k-means sidecar", "missing centroid"));
        }
        Ok(Self {
            k: json.k,
            centroids,
            feature_scale: FeatureScale {
                mean: json.feature_mean,
                std: json.feature_std,
            },
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone)]
pub struct Segmentation {
    pub class_map: ClassMap,
    pub model: KMeansModel,
    pub objective: Vec<f64>,
}

/// Patch grid `(columns, rows)`; trailing pixels that do not fill a patch
/// are ignored.
pub fn patch_grid(image: &RgbImage, patch_size: usize) -> (usize, usize) {
    (image.width() / patch_size, image.height() / patch_size)
}

/// Features of every patch in row-major patch order. Patches are processed
/// concurrently; placement is by index, so the result does not depend on
/// scheduling.
pub fn extract_features(
    image: &RgbImage,
    bank: &FilterBank,
    patch_size: usize,
    hue_bins: usize,
) -> Result<Vec<PatchFeature>> {
    if patch_size < bank.kernel_size() {
        return Err(Error::param(format!(
            "patch size {patch_size} is smaller than the kernel size {}",
            bank.kernel_size()
        )));
    }
    let (cols, rows) = patch_grid(image, patch_size);
    if cols == 0 || rows == 0 {
        return Err(Error::param("image is smaller than one patch"));
    }
    let plane = Plane::from_rgb(image);
    (0..cols * rows)
        .into_par_iter()
        .map(|i| {
            let rect = Rect::new((i % cols) * patch_size, (i / cols) * patch_size, patch_size, patch_size);
            patch_feature(image, &plane, bank, rect, hue_bins)
        })
        .collect()
}

/// Standardizes raw feature rows and clusters them.
pub fn cluster_features(
    features: &[Vec<f64>],
    k: usize,
    seed: u64,
    options: KMeansOptions,
) -> Result<(Vec<usize>, KMeansModel, Vec<f64>)> {
    if k > features.len() {
        return Err(Error::TooFewSamples {
            k,
            available: features.len(),
        });
    }
    let scale = FeatureScale::fit(features)?;
    let z: Vec<Vec<f64>> = features.iter().map(|r| scale.apply(r)).collect();
    let fit = kmeans(&z, k, seed, options)?;
    Ok((
        fit.assignments,
        KMeansModel {
            k,
            centroids: fit.centroids,
            feature_scale: scale,
        },
        fit.objective,
    ))
}

pub fn segment(image: &RgbImage, config: &SegmentConfig, seed: u64) -> Result<Segmentation> {
    let bank = FilterBank::new(&config.bank)?;
    let features = extract_features(image, &bank, config.patch_size, config.hue_bins)?;
    let rows: Vec<Vec<f64>> = features.iter().map(PatchFeature::to_vec).collect();
    let options = KMeansOptions {
        max_iterations: config.max_iterations,
        tolerance: config.tolerance,
    };
    let (assignments, model, objective) = cluster_features(&rows, config.k, seed, options)?;
    let (cols, grid_rows) = patch_grid(image, config.patch_size);
    Ok(Segmentation {
        class_map: ClassMap::new(cols, grid_rows, config.k, assignments)?,
        model,
        objective,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_one_is_all_zero() {
        let img = RgbImage::from_fn(48, 32, |x, y| [(x * 5) as u8, (y * 7) as u8, 90]);
        let seg = segment(
            &img,
            &SegmentConfig {
                k: 1,
                ..SegmentConfig::default()
            },
            7,
        )
        .unwrap();
        assert_eq!((seg.class_map.width(), seg.class_map.height()), (3, 2));
        assert!(seg.class_map.classes().iter().all(|&c| c == 0));
    }

    #[test]
    fn too_many_classes_is_an_error() {
        let img = RgbImage::from_fn(32, 32, |x, _| [(x * 8) as u8, 0, 0]);
        let cfg = SegmentConfig {
            k: 5,
            ..SegmentConfig::default()
        };
        assert!(matches!(segment(&img, &cfg, 1), Err(Error::TooFewSamples { .. })));
    }

    #[test]
    fn patch_smaller_than_kernel_is_rejected() {
        let img = RgbImage::from_fn(64, 64, |_, _| [0, 0, 0]);
        let cfg = SegmentConfig {
            patch_size: 8,
            ..SegmentConfig::default()
        };
        assert!(segment(&img, &cfg, 1).is_err());
    }

    #[test]
    fn sidecar_round_trip() {
        let model = KMeansModel {
            k: 2,
            centroids: vec![vec![0.5, -1.0], vec![2.0, 0.25]],
            feature_scale: FeatureScale {
                mean: vec![1.0, 2.0],
                std: vec![0.5, 3.0],
            },
        };
        let back = KMeansModel::from_json(&model.to_json().unwrap()).unwrap();
        assert_eq!(back, model);
        let v: serde_json::Value = serde_json::from_str(&model.to_json().unwrap()).unwrap();
        assert_eq!(v["centroids"]["1"][1], 0.25);
    }
}
