//! Directional filter banks applied in the DFT domain.
//!
//! Quadrature filters use a lognormal radial profile times a clipped cosine
//! power in angle, so they vanish on the half-space facing away from their
//! tune-in direction. Gabor filters are a single Gaussian lobe centred on
//! `ρ₀·n̂`; they leak a little into the opposite half-space.
//!
//! Every transfer function is zero at DC.

use std::f64::consts::{LN_2, PI};
use std::str::FromStr;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::{self, FrequencyGrid};
use crate::field::{ScalarField, Shape};
use crate::linalg::{dot, norm};
use crate::tessellation::DirectionSet;

pub const DEFAULT_CENTER_FREQUENCY: f64 = PI / 3.0;
pub const DEFAULT_BANDWIDTH_OCTAVES: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FilterKind {
    Quadrature,
    Gabor,
}

impl FromStr for FilterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quadrature" => Ok(FilterKind::Quadrature),
            "gabor" => Ok(FilterKind::Gabor),
            other => Err(Error::param(format!("unknown filter kind '{other}'"))),
        }
    }
}

/// How a complex filter output becomes the nonnegative sample `q`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ResponseMode {
    /// `|z|²`, a sample of spectral energy.
    #[default]
    Power,
    /// `|z|`
    Magnitude,
}

impl ResponseMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ResponseMode::Power => "power",
            ResponseMode::Magnitude => "magnitude",
        }
    }
}

impl FromStr for ResponseMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "power" => Ok(ResponseMode::Power),
            "magnitude" => Ok(ResponseMode::Magnitude),
            other => Err(Error::param(format!("unknown response mode '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FilterSpec {
    pub kind: FilterKind,
    /// Unit tune-in direction.
    pub direction: Vec<f64>,
    /// `ρ₀` in rad/sample, inside `(0, π)`.
    pub center_frequency: f64,
    /// Radial half-amplitude bandwidth in octaves.
    pub bandwidth_octaves: f64,
    /// Power of the angular cosine (quadrature only).
    pub angular_exponent: u32,
    pub label: String,
}

impl FilterSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.center_frequency > 0.0 && self.center_frequency < PI) {
            return Err(Error::param(format!(
                "center frequency {} outside (0, π)",
                self.center_frequency
            )));
        }
        if !(self.bandwidth_octaves > 0.0) || !self.bandwidth_octaves.is_finite() {
            return Err(Error::param("bandwidth must be a positive number of octaves"));
        }
        if self.angular_exponent < 1 {
            return Err(Error::param("angular exponent must be >= 1"));
        }
        if (norm(&self.direction) - 1.0).abs() > 1e-12 {
            return Err(Error::param(format!("filter '{}' direction is not unit", self.label)));
        }
        Ok(())
    }

    /// Standard deviation of the Gabor lobe. The half-amplitude points on
    /// the radial axis sit at `ρ₀ ± h` with `(ρ₀+h)/(ρ₀−h) = 2^B`.
    pub fn gabor_sigma(&self) -> f64 {
        let r = 2f64.powf(self.bandwidth_octaves);
        let half_width = self.center_frequency * (r - 1.0) / (r + 1.0);
        half_width / (2.0 * LN_2).sqrt()
    }

    /// Lognormal radial profile, `R(0) = 0`.
    pub fn radial(&self, rho: f64) -> f64 {
        if rho <= 0.0 {
            return 0.0;
        }
        let l = (rho / self.center_frequency).ln();
        let b = self.bandwidth_octaves;
        (-(4.0 / (b * b * LN_2)) * l * l).exp()
    }

    /// Transfer function value at frequency `omega` (rad/sample).
    pub fn transfer_at(&self, omega: &[f64]) -> f64 {
        let rho = norm(omega);
        if rho == 0.0 {
            return 0.0;
        }
        match self.kind {
            FilterKind::Quadrature => {
                let c = dot(&self.direction, omega) / rho;
                if c <= 0.0 {
                    0.0
                } else {
                    self.radial(rho) * c.powi(self.angular_exponent as i32)
                }
            }
            FilterKind::Gabor => {
                let sigma = self.gabor_sigma();
                let d2: f64 = omega
                    .iter()
                    .zip(&self.direction)
                    .map(|(w, n)| {
                        let d = w - self.center_frequency * n;
                        d * d
                    })
                    .sum();
                (-d2 / (2.0 * sigma * sigma)).exp()
            }
        }
    }
}

/// One filter per direction, sharing radial and angular parameters.
pub fn bank_from_directions(
    dirs: &DirectionSet,
    kind: FilterKind,
    center_frequency: f64,
    bandwidth_octaves: f64,
    angular_exponent: u32,
) -> Result<Vec<FilterSpec>> {
    let bank: Vec<FilterSpec> = dirs
        .directions()
        .iter()
        .zip(dirs.labels())
        .map(|(d, label)| FilterSpec {
            kind,
            direction: d.clone(),
            center_frequency,
            bandwidth_octaves,
            angular_exponent,
            label: label.clone(),
        })
        .collect();
    for f in &bank {
        f.validate()?;
    }
    Ok(bank)
}

fn synth_transfer(spec: &FilterSpec, grid: &FrequencyGrid) -> Result<Vec<Complex64>> {
    spec.validate()?;
    let shape = grid.shape();
    if spec.direction.len() != shape.ndim() {
        return Err(Error::DimMismatch(format!(
            "filter '{}' is {}-D, grid is {}-D",
            spec.label,
            spec.direction.len(),
            shape.ndim()
        )));
    }
    let mut omega = vec![0.0; shape.ndim()];
    Ok((0..shape.len())
        .map(|i| {
            grid.omega(i, &mut omega);
            Complex64::new(spec.transfer_at(&omega), 0.0)
        })
        .collect())
}

/// Samples a quadrature transfer function on the DFT grid.
pub fn synth_quadrature_transfer(spec: &FilterSpec, grid: &FrequencyGrid) -> Result<Vec<Complex64>> {
    if spec.kind != FilterKind::Quadrature {
        return Err(Error::param("synth_quadrature_transfer needs a quadrature spec"));
    }
    synth_transfer(spec, grid)
}

/// Samples a Gabor transfer function on the DFT grid.
pub fn synth_gabor_transfer(spec: &FilterSpec, grid: &FrequencyGrid) -> Result<Vec<Complex64>> {
    if spec.kind != FilterKind::Gabor {
        return Err(Error::param("synth_gabor_transfer needs a Gabor spec"));
    }
    synth_transfer(spec, grid)
}

/// Real transfer planes for every filter, for dumping.
pub fn transfer_planes(bank: &[FilterSpec], shape: &Shape) -> Result<Vec<Vec<f64>>> {
    let grid = FrequencyGrid::new(shape);
    bank.iter()
        .map(|s| Ok(synth_transfer(s, &grid)?.into_iter().map(|c| c.re).collect()))
        .collect()
}

/// Nonnegative per-pixel responses `q_k` of one filter.
#[derive(Clone, Debug, PartialEq)]
pub struct ResponseField {
    shape: Shape,
    values: Vec<f64>,
    label: String,
}

impl ResponseField {
    pub fn new(shape: Shape, values: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if values.len() != shape.len() {
            return Err(Error::DimMismatch("response plane does not match grid".into()));
        }
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::param("responses must be finite and nonnegative"));
        }
        Ok(ResponseField {
            shape,
            values,
            label: label.into(),
        })
    }

    /// The same value at every pixel.
    pub fn uniform(shape: &Shape, value: f64, label: impl Into<String>) -> Result<Self> {
        Self::new(shape.clone(), vec![value; shape.len()], label)
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

/// Filters `f` with every bank member and reduces each complex output to `q`.
pub fn apply_bank(f: &ScalarField, bank: &[FilterSpec], mode: ResponseMode) -> Result<Vec<ResponseField>> {
    Ok(apply_bank_complex(f, bank)?
        .into_iter()
        .zip(bank)
        .map(|(z, spec)| {
            let values = z
                .iter()
                .map(|c| match mode {
                    ResponseMode::Power => c.norm_sqr(),
                    ResponseMode::Magnitude => c.norm(),
                })
                .collect();
            ResponseField {
                shape: f.shape().clone(),
                values,
                label: spec.label.clone(),
            }
        })
        .collect())
}

/// Complex filter outputs before the magnitude step.
pub fn apply_bank_complex(f: &ScalarField, bank: &[FilterSpec]) -> Result<Vec<Vec<Complex64>>> {
    f.require_even("apply_bank")?;
    if bank.is_empty() {
        return Err(Error::param("filter bank is empty"));
    }
    let shape = f.shape();
    let grid = FrequencyGrid::new(shape);
    let spectrum = fft::forward_real(f);
    bank.par_iter()
        .map(|spec| {
            let h = synth_transfer(spec, &grid)?;
            let product: Vec<Complex64> = spectrum.iter().zip(&h).map(|(a, b)| a * b).collect();
            Ok(fft::inverse(product, shape))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{linear_symmetric, WaveSpec};
    use crate::tessellation::{half_circle, icosa6};

    fn quad(direction: Vec<f64>, p: u32) -> FilterSpec {
        FilterSpec {
            kind: FilterKind::Quadrature,
            direction,
            center_frequency: DEFAULT_CENTER_FREQUENCY,
            bandwidth_octaves: DEFAULT_BANDWIDTH_OCTAVES,
            angular_exponent: p,
            label: "q".into(),
        }
    }

    #[test]
    fn quadrature_point_values() {
        let s = quad(vec![1.0, 0.0], 1);
        let r0 = s.center_frequency;
        assert!((s.transfer_at(&[r0, 0.0]) - 1.0).abs() < 1e-15);
        assert_eq!(s.transfer_at(&[0.0, r0]), 0.0);
        assert_eq!(s.transfer_at(&[-r0, 0.3]), 0.0);
        let sixty = PI / 3.0;
        let v = s.transfer_at(&[r0 * sixty.cos(), r0 * sixty.sin()]);
        assert!((v - 0.5).abs() < 1e-12);
        assert_eq!(s.transfer_at(&[0.0, 0.0]), 0.0);
    }

    #[test]
    fn radial_half_amplitude_spans_bandwidth() {
        let s = quad(vec![1.0, 0.0], 1);
        let lo = s.center_frequency * 2f64.powf(-s.bandwidth_octaves / 2.0);
        let hi = s.center_frequency * 2f64.powf(s.bandwidth_octaves / 2.0);
        assert!((s.radial(lo) - 0.5).abs() < 1e-12);
        assert!((s.radial(hi) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn gabor_point_values() {
        let mut s = quad(vec![0.0, 1.0], 1);
        s.kind = FilterKind::Gabor;
        let r0 = s.center_frequency;
        assert!((s.transfer_at(&[0.0, r0]) - 1.0).abs() < 1e-15);
        let sigma = s.gabor_sigma();
        let leak = s.transfer_at(&[0.0, -r0]);
        assert!(leak > 0.0);
        assert!((leak - (-2.0 * r0 * r0 / (sigma * sigma)).exp()).abs() < 1e-15);
        // half amplitude at the octave edges along the axis
        let r = 2f64.powf(s.bandwidth_octaves);
        let h = r0 * (r - 1.0) / (r + 1.0);
        assert!((s.transfer_at(&[0.0, r0 + h]) - 0.5).abs() < 1e-12);
        assert!(((r0 + h) / (r0 - h) - r).abs() < 1e-12);
    }

    #[test]
    fn gabor_is_symmetric_about_its_axis() {
        // n̂ along z; two off-axis points related by a 90° turn about z
        let mut s = quad(vec![0.0, 0.0, 1.0], 1);
        s.kind = FilterKind::Gabor;
        let grid = FrequencyGrid::new(&Shape::new(&[16, 16, 16]).unwrap());
        let h = synth_gabor_transfer(&s, &grid).unwrap();
        let idx = |x: usize, y: usize, z: usize| x + 16 * (y + 16 * z);
        assert!((h[idx(2, 0, 3)].re - h[idx(0, 2, 3)].re).abs() < 1e-15);
        assert!((h[idx(2, 1, 3)].re - h[idx(15, 2, 3)].re).abs() < 1e-15);
        assert!(synth_quadrature_transfer(&s, &grid).is_err());
    }

    #[test]
    fn invalid_specs_rejected() {
        let mut s = quad(vec![1.0, 0.0], 1);
        s.center_frequency = PI;
        assert!(s.validate().is_err());
        let mut s = quad(vec![1.0, 0.0], 0);
        assert!(s.validate().is_err());
        s.angular_exponent = 1;
        s.bandwidth_octaves = 0.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn zero_image_gives_zero_responses() {
        let f = ScalarField::zeros(&[16, 16]).unwrap();
        let bank = bank_from_directions(&half_circle(4).unwrap(), FilterKind::Quadrature, 1.0, 2.0, 1).unwrap();
        for q in apply_bank(&f, &bank, ResponseMode::Power).unwrap() {
            assert!(q.values().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn bank_errors() {
        let f = ScalarField::zeros(&[16, 16]).unwrap();
        assert!(apply_bank(&f, &[], ResponseMode::Power).is_err());
        let odd = ScalarField::zeros(&[15, 16]).unwrap();
        let bank = bank_from_directions(&half_circle(4).unwrap(), FilterKind::Quadrature, 1.0, 2.0, 1).unwrap();
        assert!(apply_bank(&odd, &bank, ResponseMode::Power).is_err());
        let bank3 = bank_from_directions(&icosa6(), FilterKind::Quadrature, 1.0, 2.0, 1).unwrap();
        assert!(matches!(
            apply_bank(&f, &bank3, ResponseMode::Power),
            Err(Error::DimMismatch(_))
        ));
    }

    #[test]
    fn one_sided_filter_has_flat_modulus_on_pure_wave() {
        let dims = [32, 32];
        let wave = WaveSpec::on_grid(&[5, 2], &dims).unwrap();
        let f = linear_symmetric(&dims, &wave, true).unwrap();
        let bank = bank_from_directions(&half_circle(6).unwrap(), FilterKind::Quadrature, 1.0, 2.0, 2).unwrap();
        for z in apply_bank_complex(&f, &bank).unwrap() {
            let m: Vec<f64> = z.iter().map(|c| c.norm()).collect();
            let (lo, hi) = m.iter().fold((f64::MAX, 0.0_f64), |(a, b), &v| (a.min(v), b.max(v)));
            assert!(hi - lo < 1e-8, "ripple {}", hi - lo);
        }
    }
}
