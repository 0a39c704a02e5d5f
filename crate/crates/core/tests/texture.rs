mod common;

use std::f64::consts::PI;

use common::{naive_convolution, purity, random_plane, textured_image, Texture};
use rand::Rng;
use terrasample::texture::features::{convolve_valid, patch_feature, quadrature_energy};
use terrasample::texture::segment::{cluster_features, extract_features};
use terrasample::texture::{
    filter_energy, make_gabor_kernel, segment, BankConfig, FilterBank, PatchFeature, Plane, Rect,
    SegmentConfig,
};

#[test]
fn filter_energy_matches_naive_convolution() {
    let mut rng = terrasample::rng::seeded(2024);
    for case in 0..10 {
        let (w, h) = (rng.gen_range(20..40), rng.gen_range(20..40));
        let plane = random_plane(w, h, case);
        let size = [5, 7, 9, 11][rng.gen_range(0..4)];
        let k = make_gabor_kernel(
            size,
            rng.gen_range(2.0..12.0),
            rng.gen_range(0.0..PI),
            rng.gen_range(1.0..5.0),
            rng.gen_range(0.3..1.0),
            rng.gen_range(0.0..PI),
        )
        .unwrap();
        let patch = Rect::new(rng.gen_range(0..5), rng.gen_range(0..5), 14, 13);
        let naive = naive_convolution(&plane, k.weights(), size, patch);
        let fast = convolve_valid(&plane, &k, patch).unwrap();
        assert_eq!(naive.len(), fast.len());
        for (a, b) in naive.iter().zip(&fast) {
            assert!((a - b).abs() < 1e-9);
        }
        let n = naive.len() as f64;
        let mean_abs = naive.iter().map(|v| v.abs()).sum::<f64>() / n;
        let mean = naive.iter().sum::<f64>() / n;
        let std = (naive.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        let (m, s) = filter_energy(&plane, &k, patch).unwrap();
        assert!((m - mean_abs).abs() < 1e-9);
        assert!((s - std).abs() < 1e-9);
    }
}

fn grating(w: usize, lambda: f64, theta: f64) -> Plane {
    let data = (0..w * w)
        .map(|i| {
            let (x, y) = ((i % w) as f64, (i / w) as f64);
            128.0 + 100.0 * (2.0 * PI * (x * theta.cos() + y * theta.sin()) / lambda).cos()
        })
        .collect();
    Plane::new(w, w, data).unwrap()
}

#[test]
fn rotating_a_grating_by_one_step_shifts_orientation_energies() {
    let bank = FilterBank::new(&BankConfig::default()).unwrap();
    let o = bank.orientations();
    let patch = Rect::new(16, 16, 32, 32);
    for (scale, &lambda) in BankConfig::default().wavelengths.iter().enumerate() {
        for base in 0..o {
            let theta = PI * base as f64 / o as f64;
            let energies = |t: f64| -> Vec<f64> {
                let plane = grating(64, lambda, t);
                (0..o)
                    .map(|i| {
                        let p = bank.pair(i, scale);
                        quadrature_energy(&plane, &p.even, &p.odd, patch).unwrap().0
                    })
                    .collect()
            };
            let a = energies(theta);
            let b = energies(theta + PI / o as f64);
            let norm = a.iter().map(|v| v * v).sum::<f64>().sqrt();
            let worst = (0..o).map(|i| (b[(i + 1) % o] - a[i]).abs()).fold(0.0, f64::max);
            assert!(worst < 0.05 * norm, "scale {scale} base {base}: {worst} vs {norm}");
        }
    }
}

#[test]
fn two_region_image_segments_purely() {
    // top half stripes, bottom half flat color
    let img = textured_image(128, 128, 1, |_, y| if y < 64 { Texture::Grating } else { Texture::Flat });
    let cfg = SegmentConfig {
        k: 2,
        ..SegmentConfig::default()
    };
    let seg = segment(&img, &cfg, 7).unwrap();
    let labels: Vec<usize> = (0..64).map(|i| usize::from(i / 8 >= 4)).collect();
    assert_eq!(purity(seg.class_map.classes(), &labels), 1.0);
}

#[test]
fn patch_order_does_not_change_the_class_map() {
    let img = textured_image(96, 96, 5, |x, y| match (x < 48, y < 48) {
        (true, _) => Texture::Checker,
        (false, true) => Texture::Grating,
        (false, false) => Texture::Flat,
    });
    let cfg = SegmentConfig {
        k: 3,
        ..SegmentConfig::default()
    };
    let seg = segment(&img, &cfg, 3).unwrap();

    let bank = FilterBank::new(&cfg.bank).unwrap();
    let plane = Plane::from_rgb(&img);
    let cols = 96 / 16;
    let mut slots: Vec<Option<Vec<f64>>> = vec![None; 36];
    for i in (0..36).rev() {
        let rect = Rect::new((i % cols) * 16, (i / cols) * 16, 16, 16);
        slots[i] = Some(patch_feature(&img, &plane, &bank, rect, 12).unwrap().to_vec());
    }
    let rows: Vec<Vec<f64>> = slots.into_iter().map(Option::unwrap).collect();
    let parallel: Vec<Vec<f64>> = extract_features(&img, &bank, 16, 12)
        .unwrap()
        .iter()
        .map(PatchFeature::to_vec)
        .collect();
    assert_eq!(rows, parallel);
    let (assign, _, _) = cluster_features(&rows, 3, 3, Default::default()).unwrap();
    assert_eq!(assign, seg.class_map.classes());
}

#[test]
fn standardized_features_have_unit_moments() {
    let img = textured_image(96, 64, 9, |x, _| if x < 48 { Texture::Checker } else { Texture::Flat });
    let bank = FilterBank::new(&BankConfig::default()).unwrap();
    let rows: Vec<Vec<f64>> = extract_features(&img, &bank, 16, 12)
        .unwrap()
        .iter()
        .map(PatchFeature::to_vec)
        .collect();
    let (_, model, _) = cluster_features(&rows, 2, 1, Default::default()).unwrap();
    let z: Vec<Vec<f64>> = rows.iter().map(|r| model.feature_scale.apply(r)).collect();
    let n = z.len() as f64;
    for d in 0..rows[0].len() {
        let mean = z.iter().map(|r| r[d]).sum::<f64>() / n;
        assert!(mean.abs() < 1e-9);
        if model.feature_scale.std[d] > 1e-12 {
            let std = (z.iter().map(|r| (r[d] - mean).powi(2)).sum::<f64>() / n).sqrt();
            assert!((std - 1.0).abs() < 1e-9);
        }
    }
    for hist in rows.iter().map(|r| &r[36..]) {
        assert!((hist.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

