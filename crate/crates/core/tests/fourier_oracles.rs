mod common;

use num_complex::Complex64;
use patchnoise::fourier::*;
use patchnoise::model::ToyModel;
use patchnoise::{derive_stream, ImageTensor, LabeledDataset, Plane, Probe, ToyConfig};

use common::random_plane;

/// Direct O(N^2) summation in centered indexing.
fn naive_dft(p: &Plane, i: i64, j: i64) -> Complex64 {
    let (h, w) = (p.height as f64, p.width as f64);
    let mut acc = Complex64::new(0.0, 0.0);
    for y in 0..p.height {
        for x in 0..p.width {
            let ang = -2.0 * std::f64::consts::PI * (i as f64 * y as f64 / h + j as f64 * x as f64 / w);
            acc += Complex64::from_polar(p.get(y, x), ang);
        }
    }
    acc / (h * w).sqrt()
}

#[test]
fn fft_matches_direct_summation() {
    for (h, w) in [(8, 8), (5, 7), (6, 3)] {
        let p = random_plane(h as u64 * 31 + w as u64, h, w);
        let spec = dft2(&p);
        for (i, j, v) in spec.iter() {
            assert!((v - naive_dft(&p, i, j)).norm() < 1e-9, "({i},{j}) on {h}x{w}");
        }
    }
}

#[test]
fn impulse_has_flat_spectrum() {
    let mut data = vec![0.0; 16];
    data[0] = 1.0;
    let spec = dft2(&Plane::new(4, 4, data).unwrap());
    for (_, _, v) in spec.iter() {
        assert!((v.norm() - 0.25).abs() < 1e-12);
    }
}

#[test]
fn constant_plane_is_dc_only() {
    let spec = dft2(&Plane::new(6, 5, vec![0.3; 30]).unwrap());
    for (i, j, v) in spec.iter() {
        let expected = if (i, j) == (0, 0) { 0.3 * 30f64.sqrt() } else { 0.0 };
        assert!((v - Complex64::new(expected, 0.0)).norm() < 1e-12);
    }
}

#[test]
fn round_trip_and_parseval() {
    let p = random_plane(3, 8, 8);
    let spec = dft2(&p);
    assert!((spec.norm() - p.norm()).abs() < 1e-9);
    let back = idft2(&spec).unwrap();
    for (a, b) in back.data.iter().zip(&p.data) {
        assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn idft_rejects_non_hermitian_spectrum() {
    let mut spec = dft2(&Plane::zeros(4, 4));
    spec.set(1, 0, Complex64::new(0.0, 1.0)).unwrap();
    assert!(idft2(&spec).is_err());
}

#[test]
fn basis_matches_hand_built_grating() {
    let u = fourier_basis(4, 4, 1, 0).unwrap();
    let mut raw: Vec<f64> = Vec::new();
    for y in 0..4 {
        for _x in 0..4 {
            raw.push((2.0 * std::f64::consts::PI * y as f64 / 4.0).cos());
        }
    }
    let n = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
    for (a, b) in u.data.iter().zip(&raw) {
        assert!((a - b / n).abs() < 1e-12);
    }
}

#[test]
fn dc_basis_is_constant() {
    let u = fourier_basis(4, 9, 0, 0).unwrap();
    for v in &u.data {
        assert!((v - 1.0 / 6.0).abs() < 1e-12);
    }
}

#[test]
fn every_basis_is_unit_with_narrow_support() {
    for (h, w) in [(8, 8), (5, 6)] {
        for (i, j) in half_plane_frequencies(h, w) {
            let u = fourier_basis(h, w, i, j).unwrap();
            assert!((u.norm() - 1.0).abs() < 1e-9);
            let support = dft2(&u).iter().filter(|(_, _, v)| v.norm() > 1e-9).count();
            assert!((1..=2).contains(&support), "({i},{j}) support {support}");
        }
    }
}

#[test]
fn half_plane_bases_are_orthonormal() {
    let freqs = half_plane_frequencies(6, 6);
    let bases: Vec<Plane> = freqs.iter().map(|&(i, j)| fourier_basis(6, 6, i, j).unwrap()).collect();
    for a in 0..bases.len() {
        for b in a + 1..bases.len() {
            assert!(bases[a].dot(&bases[b]).abs() < 1e-9, "{:?} vs {:?}", freqs[a], freqs[b]);
        }
    }
}

#[test]
fn half_plane_covers_each_conjugate_pair_once() {
    for (h, w) in [(4, 4), (5, 5), (4, 7)] {
        let half = half_plane_frequencies(h, w);
        let mut covered = std::collections::BTreeSet::new();
        for &(i, j) in &half {
            let ci = (-i + (h / 2) as i64).rem_euclid(h as i64) - (h / 2) as i64;
            let cj = (-j + (w / 2) as i64).rem_euclid(w as i64) - (w / 2) as i64;
            covered.insert((i, j));
            covered.insert((ci, cj));
        }
        assert_eq!(covered.len(), h * w);
        assert!(half.len() < h * w);
    }
}

#[test]
fn dc_perturbation_of_gray_image() {
    let img = ImageTensor::filled(32, 32, 1, 0.5);
    let u = fourier_basis(32, 32, 0, 0).unwrap();
    let mut rng = derive_stream(0, 0, "sign");
    // Find a stream whose sign draw is positive.
    while rng.clone().next_unit() < 0.5 {
        rng.next_u64();
    }
    let out = perturb_with_basis(&img, &u, 4.0, &mut rng).unwrap();
    assert!(out.data().iter().all(|&v| v == 0.625));
}

#[test]
fn zero_norm_perturbation_is_identity() {
    let img = common::random_images(1, 1, 8, 8, 3).remove(0);
    let u = fourier_basis(8, 8, 2, -3).unwrap();
    let out = perturb_with_basis(&img, &u, 0.0, &mut derive_stream(1, 1, "s")).unwrap();
    assert_eq!(out, img);
}

#[test]
fn perturbation_has_requested_norm() {
    for v in [4.0, 15.7] {
        for (i, j) in [(0, 0), (3, -5), (-16, -16), (15, 0)] {
            let u = fourier_basis(32, 32, i, j).unwrap();
            for sign in [-1.0, 1.0] {
                assert!((basis_perturbation(&u, v, sign).norm() - v).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn high_pass_zero_radius_is_identity() {
    let img = common::random_images(2, 1, 8, 8, 3).remove(0);
    let out = high_pass(&img, 0.0).unwrap();
    for (a, b) in out.data().iter().zip(img.data()) {
        assert!((a - b).abs() <= 1e-6);
    }
}

#[test]
fn huge_radius_gives_gray() {
    let img = common::random_images(3, 1, 8, 8, 1).remove(0);
    let out = high_pass(&img, 100.0).unwrap();
    assert!(out.data().iter().all(|&v| (v - 0.5).abs() < 1e-6));
}

#[test]
fn high_pass_matches_mask_and_subtract() {
    let p = random_plane(8, 8, 8);
    let hp = high_pass_plane(&p, 2.0).unwrap();
    // Independent low band: zero every coefficient outside radius 2 by
    // direct summation and invert by direct summation.
    let mut low = vec![0.0; 64];
    for y in 0..8 {
        for x in 0..8 {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in -4i64..4 {
                for j in -4i64..4 {
                    if (((i * i + j * j) as f64).sqrt()) < 2.0 {
                        let ang = 2.0 * std::f64::consts::PI * (i as f64 * y as f64 + j as f64 * x as f64) / 8.0;
                        acc += naive_dft(&p, i, j) * Complex64::from_polar(1.0, ang);
                    }
                }
            }
            low[y * 8 + x] = acc.re / 8.0;
        }
    }
    for ((h, v), l) in hp.data.iter().zip(&p.data).zip(&low) {
        assert!((h - (v - l + 0.5)).abs() < 1e-9);
    }
}

#[test]
fn bands_are_complementary() {
    let p = random_plane(9, 32, 32);
    for r in [0.0, 1.0, 2.5, 6.0, 30.0] {
        let hp = high_pass_plane(&p, r).unwrap();
        let lb = low_band_plane(&p, r).unwrap();
        let dc = if r > 0.0 { 0.5 } else { 0.0 };
        for k in 0..p.data.len() {
            assert!((hp.data[k] + lb.data[k] - dc - p.data[k]).abs() < 1e-9, "r = {r}");
        }
    }
}

fn identity_model() -> ToyModel {
    let mut filters = vec![0.0; 9];
    filters[4] = 1.0;
    let config = ToyConfig {
        input_offset: 0.0,
        ..ToyConfig::new(1, 1, 1, 2)
    };
    ToyModel::from_parts(config, filters, vec![0.0; 4]).unwrap()
}

fn mid_gray_dataset(n: usize) -> LabeledDataset {
    let mut rng = derive_stream(4, 0, "mid");
    let images = (0..n)
        .map(|_| {
            let d = (0..64).map(|_| (0.4 + 0.2 * rng.next_unit()) as f32).collect();
            ImageTensor::new(8, 8, 1, d).unwrap()
        })
        .collect();
    LabeledDataset::new(images, (0..n).map(|i| i % 2).collect(), 2).unwrap()
}

#[test]
fn identity_filter_first_layer_is_flat() {
    let model = identity_model();
    let ds = mid_gray_dataset(6);
    let v = 0.5;
    let freqs = half_plane_frequencies(8, 8);
    let map = sensitivity_heatmap(&model, &ds, &freqs, v, Probe::FirstLayer, 3).unwrap();
    let mean_norm = ds
        .images()
        .iter()
        .map(|img| img.data().iter().map(|&x| (x as f64).powi(2)).sum::<f64>().sqrt())
        .sum::<f64>()
        / 6.0;
    for c in &map.cells {
        // f32 storage of perturbed pixels bounds the agreement.
        assert!((c.value - v / mean_norm).abs() < 1e-5, "({},{}) {}", c.i, c.j, c.value);
        assert!((c.absolute.unwrap() - v).abs() < 1e-5);
    }
}

#[test]
fn zero_norm_heatmaps() {
    let model = identity_model();
    let ds = mid_gray_dataset(4);
    let freqs = frequencies_within(8, 8, 2);
    let fl = sensitivity_heatmap(&model, &ds, &freqs, 0.0, Probe::FirstLayer, 0).unwrap();
    assert!(fl.cells.iter().all(|c| c.value == 0.0));
    let te = sensitivity_heatmap(&model, &ds, &freqs, 0.0, Probe::TestError, 0).unwrap();
    // The zero head predicts class 0 for everything: clean error 0.5.
    assert!(te.cells.iter().all(|c| c.value == 0.5));
}

#[test]
fn heatmap_is_deterministic() {
    let model = ToyModel::init(2, ToyConfig::new(4, 1, 2, 2)).unwrap();
    let ds = mid_gray_dataset(4);
    let freqs = frequencies_within(8, 8, 3);
    let a = sensitivity_heatmap(&model, &ds, &freqs, 2.0, Probe::FirstLayer, 11).unwrap();
    let b = sensitivity_heatmap(&model, &ds, &freqs, 2.0, Probe::FirstLayer, 11).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
    assert_eq!(a.value(1, 2), a.value(-1, -2));
}
