//! Deterministic synthetic images with known orientation content.
//!
//! # Noise generator
//!
//! [`add_noise`] is specified down to the bit so other implementations can
//! reproduce it:
//!
//! * Samples are grouped into rows along axis 0. Row `r` (flat index of the
//!   remaining axes) uses the key `row_seed = seed ^ r`.
//! * Uniform word `i` of a row is `mix(row_seed + (i + 1) · 0x9E3779B97F4A7C15)`
//!   with wrapping arithmetic, where `mix` is the SplitMix64 finaliser:
//!   `z ^= z >> 30; z *= 0xBF58476D1CE4E5B9; z ^= z >> 27; z *= 0x94D049BB133111EB; z ^= z >> 31`.
//! * Sample pair `p` (samples `2p` and `2p + 1`) takes words `2p` and `2p + 1`:
//!   `u1 = ((w0 >> 11) + 1) · 2⁻⁵³` in `(0, 1]`, `u2 = (w1 >> 11) · 2⁻⁵³`,
//!   then Box–Muller: `z0 = √(−2 ln u1)·cos(2π u2)`, `z1 = √(−2 ln u1)·sin(2π u2)`.
//! * Sample `2p` receives `σ·z0`, sample `2p + 1` receives `σ·z1`; a trailing
//!   odd sample uses `z0` of its pair.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
pub use crate::field::ScalarField;

/// Distance from an integer below which a bin index counts as on-grid.
const ON_GRID_TOL: f64 = 1e-9;

/// Envelope width in samples of the Gauss-modulated profile.
pub const GAUSS_ENVELOPE_SAMPLES: f64 = 8.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Profile {
    Cosine,
    Square,
    /// `exp(−τ²/(2s²))·cos(ω₀τ)` around the grid centre.
    GaussModulated,
}

impl std::str::FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cosine" | "cos" => Ok(Profile::Cosine),
            "square" => Ok(Profile::Square),
            "gauss_modulated" | "gauss" => Ok(Profile::GaussModulated),
            other => Err(Error::param(format!("unknown wave profile '{other}'"))),
        }
    }
}

/// A linearly symmetric pattern `f(r) = g(kᵀr)`.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveSpec {
    /// Unit direction `k`.
    pub direction: Vec<f64>,
    /// Frequency in rad/sample, in `(0, π)`.
    pub frequency: f64,
    pub profile: Profile,
    pub amplitude: f64,
    pub phase: f64,
}

impl WaveSpec {
    pub fn cosine(direction: Vec<f64>, frequency: f64) -> Self {
        WaveSpec {
            direction,
            frequency,
            profile: Profile::Cosine,
            amplitude: 1.0,
            phase: 0.0,
        }
    }

    /// A wave whose frequency vector is exactly the DFT bin `bins` of a grid
    /// with extents `dims`. Direction and frequency follow from the bin.
    pub fn on_grid(bins: &[i64], dims: &[usize]) -> Result<Self> {
        if bins.len() != dims.len() {
            return Err(Error::DimMismatch("bin vector and grid rank differ".into()));
        }
        let omega: Vec<f64> = bins
            .iter()
            .zip(dims)
            .map(|(&m, &d)| 2.0 * PI * m as f64 / d as f64)
            .collect();
        let frequency = crate::linalg::norm(&omega);
        if frequency == 0.0 {
            return Err(Error::param("bin vector must be nonzero"));
        }
        let direction = omega.iter().map(|w| w / frequency).collect();
        Ok(WaveSpec::cosine(direction, frequency))
    }

    /// Frequency vector `ω₀·k`.
    pub fn omega(&self) -> Vec<f64> {
        self.direction.iter().map(|k| k * self.frequency).collect()
    }

    pub fn validate(&self, dims: &[usize], periodic: bool) -> Result<()> {
        if self.direction.len() != dims.len() {
            return Err(Error::DimMismatch(format!(
                "wave direction has {} components for a {}-D grid",
                self.direction.len(),
                dims.len()
            )));
        }
        let n = crate::linalg::norm(&self.direction);
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::param(format!("wave direction must be unit, norm is {n}")));
        }
        if !(self.frequency > 0.0 && self.frequency < PI) {
            return Err(Error::param(format!(
                "wave frequency {} outside (0, π)",
                self.frequency
            )));
        }
        if !self.amplitude.is_finite() || !self.phase.is_finite() {
            return Err(Error::param("wave amplitude and phase must be finite"));
        }
        if periodic {
            for (axis, (w, &d)) in self.omega().iter().zip(dims).enumerate() {
                let bin = w * d as f64 / (2.0 * PI);
                if (bin - bin.round()).abs() > ON_GRID_TOL {
                    return Err(Error::param(format!(
                        "periodic wave is off-grid on axis {axis}: bin {bin}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Samples `amplitude · g(ω₀ kᵀr + phase)` on the integer grid.
pub fn linear_symmetric(dims: &[usize], spec: &WaveSpec, periodic: bool) -> Result<ScalarField> {
    spec.validate(dims, periodic)?;
    let centre: Vec<f64> = dims.iter().map(|&d| (d / 2) as f64).collect();
    let s2 = 2.0 * GAUSS_ENVELOPE_SAMPLES * GAUSS_ENVELOPE_SAMPLES;
    ScalarField::from_fn(dims, periodic, |c| {
        let proj: f64 = c.iter().zip(&spec.direction).map(|(&x, k)| x as f64 * k).sum();
        let arg = spec.frequency * proj + spec.phase;
        let g = match spec.profile {
            Profile::Cosine => arg.cos(),
            Profile::Square => {
                let v = arg.cos();
                if v.abs() < 1e-12 {
                    0.0
                } else {
                    v.signum()
                }
            }
            Profile::GaussModulated => {
                let tau: f64 = c
                    .iter()
                    .zip(&centre)
                    .zip(&spec.direction)
                    .map(|((&x, m), k)| (x as f64 - m) * k)
                    .sum();
                (-tau * tau / s2).exp() * (spec.frequency * tau + spec.phase).cos()
            }
        };
        spec.amplitude * g
    })
}

/// Pointwise sum.
pub fn superpose(fields: &[ScalarField]) -> Result<ScalarField> {
    let first = fields
        .first()
        .ok_or_else(|| Error::param("superpose needs at least one field"))?;
    let mut values = first.values().to_vec();
    let mut periodic = first.periodic();
    for f in &fields[1..] {
        if f.dims() != first.dims() {
            return Err(Error::DimMismatch(format!(
                "cannot superpose {:?} with {:?}",
                first.dims(),
                f.dims()
            )));
        }
        periodic &= f.periodic();
        for (a, b) in values.iter_mut().zip(f.values()) {
            *a += b;
        }
    }
    ScalarField::new(first.dims(), values, periodic)
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn splitmix_finalize(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform word `index` of the counter stream keyed by `key`.
#[inline]
pub fn counter_word(key: u64, index: u64) -> u64 {
    splitmix_finalize(key.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// Standard normal pair `p` of the stream keyed by `key`.
pub fn gaussian_pair(key: u64, pair: u64) -> (f64, f64) {
    const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
    let w0 = counter_word(key, 2 * pair);
    let w1 = counter_word(key, 2 * pair + 1);
    let u1 = ((w0 >> 11) + 1) as f64 * SCALE;
    let u2 = (w1 >> 11) as f64 * SCALE;
    let r = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (2.0 * PI * u2).sin_cos();
    (r * c, r * s)
}

/// Adds i.i.d. `N(0, σ²)` noise from the counter-based generator described
/// in the module docs.
pub fn add_noise(f: &ScalarField, sigma: f64, seed: u64) -> Result<ScalarField> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::param("noise sigma must be finite and nonnegative"));
    }
    if sigma == 0.0 {
        return Ok(f.clone());
    }
    let row_len = f.dims()[0];
    let mut values = f.values().to_vec();
    values.par_chunks_mut(row_len).enumerate().for_each(|(row, chunk)| {
        let key = seed ^ row as u64;
        for (p, pair) in chunk.chunks_mut(2).enumerate() {
            let (z0, z1) = gaussian_pair(key, p as u64);
            pair[0] += sigma * z0;
            if let Some(second) = pair.get_mut(1) {
                *second += sigma * z1;
            }
        }
    });
    ScalarField::new(f.dims(), values, f.periodic())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fft;

    fn cos_x(dims: &[usize], bins: i64) -> ScalarField {
        let mut b = vec![0; dims.len()];
        b[0] = bins;
        linear_symmetric(dims, &WaveSpec::on_grid(&b, dims).unwrap(), true).unwrap()
    }

    #[test]
    fn axis_cosine_matches_closed_form() {
        let f = cos_x(&[64, 64], 4);
        let w = 2.0 * PI * 4.0 / 64.0;
        for y in [0, 17, 63] {
            for x in [0, 5, 31, 63] {
                assert!((f.get(&[x, y]) - (w * x as f64).cos()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_along_orthogonal_direction() {
        for profile in [Profile::Cosine, Profile::Square, Profile::GaussModulated] {
            let spec = WaveSpec {
                profile,
                ..WaveSpec::on_grid(&[4, 0], &[64, 64]).unwrap()
            };
            let f = linear_symmetric(&[64, 64], &spec, profile != Profile::GaussModulated).unwrap();
            let mut worst = 0.0_f64;
            for y in 0..63 {
                for x in 0..64 {
                    worst = worst.max((f.get(&[x, y + 1]) - f.get(&[x, y])).abs());
                }
            }
            assert!(worst < 1e-12, "{profile:?}: {worst}");
        }
    }

    #[test]
    fn square_wave_has_only_odd_harmonics() {
        let spec = WaveSpec {
            profile: Profile::Square,
            ..WaveSpec::on_grid(&[4, 0], &[64, 64]).unwrap()
        };
        let f = linear_symmetric(&[64, 64], &spec, true).unwrap();
        let spec_f = fft::forward_real(&f);
        let total: f64 = spec_f.iter().map(|c| c.norm_sqr()).sum();
        let mut off = 0.0;
        for (i, c) in spec_f.iter().enumerate() {
            let (kx, ky) = (fft::signed_bin(i % 64, 64), fft::signed_bin(i / 64, 64));
            let harmonic = kx / 4;
            let allowed = ky == 0 && kx % 4 == 0 && harmonic % 2 != 0;
            if !allowed {
                off += c.norm_sqr();
            }
        }
        assert!(off < 1e-20 * total, "off-harmonic energy {off}");
    }

    #[test]
    fn off_grid_periodic_rejected() {
        let spec = WaveSpec::cosine(vec![1.0, 0.0], 0.3);
        assert!(linear_symmetric(&[64, 64], &spec, true).is_err());
        assert!(linear_symmetric(&[64, 64], &spec, false).is_ok());
        let bad = WaveSpec::cosine(vec![1.0, 0.0], 4.0);
        assert!(linear_symmetric(&[64, 64], &bad, false).is_err());
    }

    #[test]
    fn superpose_identities() {
        let f = cos_x(&[16, 16], 3);
        let zero = ScalarField::zeros(&[16, 16]).unwrap();
        assert_eq!(superpose(&[f.clone(), zero]).unwrap(), f);
        let neg = ScalarField::new(f.dims(), f.values().iter().map(|v| -v).collect(), true).unwrap();
        assert!(superpose(&[f.clone(), neg]).unwrap().values().iter().all(|&v| v == 0.0));
        let other = ScalarField::zeros(&[16, 8]).unwrap();
        assert!(superpose(&[f, other]).is_err());
        assert!(superpose(&[]).is_err());
    }

    #[test]
    fn noise_is_deterministic_and_unit_variance() {
        let f = ScalarField::zeros(&[64, 64]).unwrap();
        assert_eq!(add_noise(&f, 0.0, 9).unwrap(), f);
        let a = add_noise(&f, 1.0, 42).unwrap();
        let b = add_noise(&f, 1.0, 42).unwrap();
        assert_eq!(a, b);
        let n = a.len() as f64;
        let mean = a.values().iter().sum::<f64>() / n;
        let var = a.values().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((0.9..=1.1).contains(&var), "variance {var}");
        assert_ne!(add_noise(&f, 1.0, 43).unwrap(), a);
        assert!(add_noise(&f, -1.0, 0).is_err());
    }

    #[test]
    fn counter_stream_is_pinned() {
        // SplitMix64 seeded with 0: first outputs of the reference generator.
        assert_eq!(counter_word(0, 0), 0xE220_A839_7B1D_CDAF);
        assert_eq!(counter_word(0, 1), 0x6E78_9E6A_A1B9_65F4);
    }
}
