use std::f64::consts::PI;

use proptest::prelude::*;
use stensor::fft::{self, FrequencyGrid};
use stensor::linalg::{dot, norm};
use stensor::synth::{add_noise, linear_symmetric, superpose, Profile, WaveSpec};
use stensor::ScalarField;

/// Fraction of spectral energy at frequencies not parallel to `k`.
fn off_line_energy(f: &ScalarField, k: &[f64]) -> f64 {
    let spec = fft::forward_real(f);
    let grid = FrequencyGrid::new(f.shape());
    let mut w = vec![0.0; f.ndim()];
    let (mut total, mut off) = (0.0, 0.0);
    for (i, c) in spec.iter().enumerate() {
        grid.omega(i, &mut w);
        let e = c.norm_sqr();
        total += e;
        let r = norm(&w);
        if r > 0.0 && (dot(&w, k).abs() / r - 1.0).abs() > 1e-9 {
            off += e;
        }
    }
    off / total
}

#[test]
fn on_grid_patterns_live_on_a_line() {
    for (dims, bins) in [
        (vec![32, 32], vec![3, 1]),
        (vec![32, 32], vec![4, -4]),
        (vec![16, 16, 16], vec![1, 2, 2]),
    ] {
        let spec = WaveSpec {
            phase: 0.3,
            ..WaveSpec::on_grid(&bins, &dims).unwrap()
        };
        let f = linear_symmetric(&dims, &spec, true).unwrap();
        let off = off_line_energy(&f, &spec.direction);
        assert!(off < 1e-10, "{dims:?} {bins:?}: {off}");
    }
}

#[test]
fn square_harmonics_alias_onto_bin_multiples() {
    // harmonics j·b wrap modulo the grid, so only the subgroup generated by b is occupied
    let dims = [32, 32];
    let bins = [3i64, 1];
    let spec = WaveSpec {
        profile: Profile::Square,
        phase: 0.3,
        ..WaveSpec::on_grid(&bins, &dims).unwrap()
    };
    let f = linear_symmetric(&dims, &spec, true).unwrap();
    let modulus = 32i64;
    let allowed: std::collections::HashSet<(i64, i64)> = (0..modulus)
        .map(|j| ((j * bins[0]).rem_euclid(modulus), (j * bins[1]).rem_euclid(modulus)))
        .collect();
    let spectrum = fft::forward_real(&f);
    let (mut total, mut off) = (0.0, 0.0);
    for (i, c) in spectrum.iter().enumerate() {
        let key = ((i % 32) as i64, (i / 32) as i64);
        total += c.norm_sqr();
        if !allowed.contains(&key) {
            off += c.norm_sqr();
        }
    }
    assert!(off / total < 1e-10);
    assert!(off_line_energy(&f, &spec.direction) > 1e-3);
}

#[test]
fn gauss_modulated_is_constant_across_the_wave() {
    let dims = [32, 32];
    let f = linear_symmetric(
        &dims,
        &WaveSpec {
            profile: Profile::GaussModulated,
            ..WaveSpec::cosine(vec![1.0, 0.0], PI / 4.0)
        },
        false,
    )
    .unwrap();
    for x in 0..32 {
        let v = f.get(&[x, 0]);
        for y in 1..32 {
            assert_eq!(f.get(&[x, y]), v);
        }
    }
}

#[test]
fn off_grid_periodic_pattern_rejected() {
    let spec = WaveSpec::cosine(vec![1.0, 0.0], 1.0);
    assert!(linear_symmetric(&[32, 32], &spec, true).is_err());
    assert!(linear_symmetric(&[32, 32], &spec, false).is_ok());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn superpose_commutes(s1 in any::<u64>(), s2 in any::<u64>()) {
        let z = ScalarField::zeros(&[8, 8]).unwrap();
        let a = add_noise(&z, 1.0, s1).unwrap();
        let b = add_noise(&z, 1.0, s2).unwrap();
        let ab = superpose(&[a.clone(), b.clone()]).unwrap();
        let ba = superpose(&[b, a]).unwrap();
        prop_assert_eq!(ab.values(), ba.values());
    }

    #[test]
    fn noise_is_reproducible(seed in any::<u64>(), sigma in 0.0..5.0f64) {
        let z = ScalarField::zeros(&[6, 5]).unwrap();
        let a = add_noise(&z, sigma, seed).unwrap();
        let b = add_noise(&z, sigma, seed).unwrap();
        prop_assert_eq!(a.values(), b.values());
    }
}

#[test]
fn noise_moments() {
    let z = ScalarField::zeros(&[128, 128]).unwrap();
    let f = add_noise(&z, 2.0, 42).unwrap();
    let n = f.len() as f64;
    let mean = f.values().iter().sum::<f64>() / n;
    let var = f.values().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    assert!(mean.abs() < 0.05, "{mean}");
    assert!((var.sqrt() - 2.0).abs() < 0.05, "{var}");
}

#[test]
fn axis_aligned_square_has_only_odd_harmonics() {
    let dims = [64, 64];
    let f = linear_symmetric(
        &dims,
        &WaveSpec {
            profile: Profile::Square,
            phase: 0.1,
            ..WaveSpec::on_grid(&[4, 0], &dims).unwrap()
        },
        true,
    )
    .unwrap();
    let spectrum = fft::forward_real(&f);
    let total: f64 = spectrum.iter().map(|c| c.norm_sqr()).sum();
    let mut stray = 0.0;
    for (i, c) in spectrum.iter().enumerate() {
        let (mx, my) = (fft::signed_bin(i % 64, 64), fft::signed_bin(i / 64, 64));
        let odd_harmonic = my == 0 && mx % 4 == 0 && (mx / 4) % 2 != 0;
        if !odd_harmonic {
            stray += c.norm_sqr();
        }
    }
    assert!(stray / total < 1e-10, "{}", stray / total);
}

#[test]
fn superpose_is_associative() {
    let z = ScalarField::zeros(&[16, 16]).unwrap();
    let [a, b, c] = [1u64, 2, 3].map(|s| add_noise(&z, 1.0, s).unwrap());
    let left = superpose(&[superpose(&[a.clone(), b.clone()]).unwrap(), c.clone()]).unwrap();
    let right = superpose(&[a, superpose(&[b, c]).unwrap()]).unwrap();
    for (x, y) in left.values().iter().zip(right.values()) {
        assert!((x - y).abs() <= 1e-15 * (1.0 + x.abs()));
    }
}

#[test]
fn unit_noise_variance_on_64_squared() {
    for seed in 0..8 {
        let f = add_noise(&ScalarField::zeros(&[64, 64]).unwrap(), 1.0, seed).unwrap();
        let n = f.len() as f64;
        let mean = f.values().iter().sum::<f64>() / n;
        let var = f.values().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((0.9..=1.1).contains(&var), "seed {seed}: {var}");
    }
}
