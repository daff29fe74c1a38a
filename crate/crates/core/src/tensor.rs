//! Structure tensor constructions.
//!
//! * [`tensor_gk`]: frame-reconstruction from filter responses,
//!   `Σ_k q_k (α n_k n_kᵀ − β I)`. Can be indefinite.
//! * [`tensor_bg`]: direct sampling, `Σ_k q_k n_k n_kᵀ`. Always PSD for `q ≥ 0`.
//! * [`spectral_moment_tensor`]: `Σ_ω |F(ω)|² ω ωᵀ` over the DFT grid.
//! * [`dft_gradient_tensor`]: `Σ_r ∇f ∇fᵀ` with exact spectral derivatives;
//!   equal to the spectral moments by Parseval.
//! * [`gradient_tensor`]: the practical field version with Gaussian
//!   derivative filters and Gaussian outer smoothing.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::{self, FrequencyGrid};
use crate::field::{ScalarField, Shape};
use crate::filterbank::ResponseField;
use crate::linalg::{packed_index, packed_len, pairwise_sum, SymMat};
use crate::tessellation::{icosa6, DirectionSet};

/// How a [`TensorField`] was built.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Construction {
    Gk,
    Bg,
    Gradient,
    Spectral,
}

impl Construction {
    pub fn as_str(self) -> &'static str {
        match self {
            Construction::Gk => "gk",
            Construction::Bg => "bg",
            Construction::Gradient => "gradient",
            Construction::Spectral => "spectral",
        }
    }

    /// Constructions that are PSD for every valid input.
    pub fn is_psd_by_construction(self) -> bool {
        !matches!(self, Construction::Gk)
    }
}

impl fmt::Display for Construction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Construction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gk" => Ok(Construction::Gk),
            "bg" => Ok(Construction::Bg),
            "gradient" => Ok(Construction::Gradient),
            "spectral" => Ok(Construction::Spectral),
            other => Err(Error::param(format!("unknown construction '{other}'"))),
        }
    }
}

/// A symmetric `N × N` tensor per pixel, stored as `N(N+1)/2` planes in
/// packed upper-triangular order.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorField {
    shape: Shape,
    tensor_dim: usize,
    planes: Vec<Vec<f64>>,
    construction: Construction,
}

impl TensorField {
    pub fn new(shape: Shape, tensor_dim: usize, planes: Vec<Vec<f64>>, construction: Construction) -> Result<Self> {
        if tensor_dim < 2 {
            return Err(Error::param("tensor dimension must be >= 2"));
        }
        if planes.len() != packed_len(tensor_dim) {
            return Err(Error::DimMismatch(format!(
                "{} planes for {tensor_dim}-D tensors (need {})",
                planes.len(),
                packed_len(tensor_dim)
            )));
        }
        if planes.iter().any(|p| p.len() != shape.len()) {
            return Err(Error::DimMismatch("tensor plane does not match grid".into()));
        }
        if planes.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::param("tensor entries must be finite"));
        }
        Ok(TensorField {
            shape,
            tensor_dim,
            planes,
            construction,
        })
    }

    /// A single-pixel field holding one global tensor.
    pub fn global(t: &SymMat, construction: Construction) -> Result<Self> {
        let shape = Shape::new(&vec![1; t.dim()])?;
        let planes = t.packed().iter().map(|&v| vec![v]).collect();
        Self::new(shape, t.dim(), planes, construction)
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn tensor_dim(&self) -> usize {
        self.tensor_dim
    }

    pub fn planes(&self) -> &[Vec<f64>] {
        &self.planes
    }

    pub fn construction(&self) -> Construction {
        self.construction
    }

    pub fn pixel_count(&self) -> usize {
        self.shape.len()
    }

    pub fn at(&self, pixel: usize) -> SymMat {
        let data = self.planes.iter().map(|p| p[pixel]).collect();
        SymMat::from_packed(self.tensor_dim, data).expect("planes validated at construction")
    }

    /// Sum over all pixels, with a fixed reduction order.
    pub fn sum(&self) -> SymMat {
        let data = self.planes.iter().map(|p| pairwise_sum(p)).collect();
        SymMat::from_packed(self.tensor_dim, data).expect("finite sums")
    }

    /// Mean over all pixels.
    pub fn mean(&self) -> SymMat {
        self.sum().scaled(1.0 / self.pixel_count() as f64)
    }

    /// Keeps every `step`-th sample per axis.
    pub fn decimate(&self, step: usize) -> Result<TensorField> {
        let dims: Vec<usize> = self.shape.dims().iter().map(|d| d.div_ceil(step)).collect();
        let small = Shape::new(&dims)?;
        let mut coords = vec![0; dims.len()];
        let src: Vec<usize> = (0..small.len())
            .map(|i| {
                small.unravel(i, &mut coords);
                coords.iter_mut().for_each(|c| *c *= step);
                self.shape.ravel(&coords)
            })
            .collect();
        let planes = self
            .planes
            .iter()
            .map(|p| src.iter().map(|&s| p[s]).collect())
            .collect();
        TensorField::new(small, self.tensor_dim, planes, self.construction)
    }

    pub fn scaled(mut self, c: f64) -> TensorField {
        self.planes.iter_mut().flatten().for_each(|v| *v *= c);
        self
    }
}

/// Weights `α` and `β` of the frame reconstruction `Σ q_k (α n nᵀ − β I)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameCoefficients {
    pub alpha: f64,
    pub beta: f64,
}

impl FrameCoefficients {
    /// `α = 5/4`, `β = 1/4`, the values for the six icosahedral directions.
    pub const ICOSA6: FrameCoefficients = FrameCoefficients {
        alpha: 1.25,
        beta: 0.25,
    };

    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let c = FrameCoefficients { alpha, beta };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !(self.beta >= 0.0) || !self.alpha.is_finite() || !self.beta.is_finite() {
            return Err(Error::param(format!(
                "frame coefficients need alpha > 0 and beta >= 0, got ({}, {})",
                self.alpha, self.beta
            )));
        }
        Ok(())
    }

    /// Known defaults for a direction set. Only the icosahedral set has them.
    pub fn for_directions(dirs: &DirectionSet) -> Option<Self> {
        let ico = icosa6();
        let same = dirs.dim() == 3
            && dirs.len() == ico.len()
            && dirs
                .directions()
                .iter()
                .zip(ico.directions())
                .all(|(a, b)| a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12));
        same.then_some(Self::ICOSA6)
    }
}

fn check_responses(q: &[ResponseField], dirs: &DirectionSet) -> Result<Shape> {
    if q.len() != dirs.len() {
        return Err(Error::param(format!(
            "{} response fields for {} directions",
            q.len(),
            dirs.len()
        )));
    }
    let first = q
        .first()
        .ok_or_else(|| Error::param("no response fields"))?
        .shape()
        .clone();
    if q.iter().any(|r| r.shape() != &first) {
        return Err(Error::DimMismatch("response fields differ in shape".into()));
    }
    Ok(first)
}

/// `planes[ij][p] = Σ_k weight[ij][k] · q_k[p]`
fn weighted_planes(q: &[ResponseField], weights: &[Vec<f64>], pixels: usize) -> Vec<Vec<f64>> {
    weights
        .par_iter()
        .map(|w| {
            let mut plane = vec![0.0; pixels];
            for (qk, &wk) in q.iter().zip(w) {
                if wk == 0.0 {
                    continue;
                }
                for (acc, &v) in plane.iter_mut().zip(qk.values()) {
                    *acc += wk * v;
                }
            }
            plane
        })
        .collect()
}

/// `Σ_k q_k (α n_k n_kᵀ − β I)` per pixel.
pub fn tensor_gk(q: &[ResponseField], dirs: &DirectionSet, coef: FrameCoefficients) -> Result<TensorField> {
    coef.validate()?;
    let shape = check_responses(q, dirs)?;
    let n = dirs.dim();
    let mut weights = vec![vec![0.0; dirs.len()]; packed_len(n)];
    for (k, d) in dirs.directions().iter().enumerate() {
        for i in 0..n {
            for j in i..n {
                let id = if i == j { coef.beta } else { 0.0 };
                weights[packed_index(n, i, j)][k] = coef.alpha * d[i] * d[j] - id;
            }
        }
    }
    let planes = weighted_planes(q, &weights, shape.len());
    TensorField::new(shape, n, planes, Construction::Gk)
}

/// `Σ_k q_k n_k n_kᵀ` per pixel.
pub fn tensor_bg(q: &[ResponseField], dirs: &DirectionSet) -> Result<TensorField> {
    let shape = check_responses(q, dirs)?;
    let n = dirs.dim();
    let mut weights = vec![vec![0.0; dirs.len()]; packed_len(n)];
    for (k, d) in dirs.directions().iter().enumerate() {
        for i in 0..n {
            for j in i..n {
                weights[packed_index(n, i, j)][k] = d[i] * d[j];
            }
        }
    }
    let planes = weighted_planes(q, &weights, shape.len());
    TensorField::new(shape, n, planes, Construction::Bg)
}

/// Single-pixel responses, for evaluating the constructions on a bare `q` vector.
pub fn point_responses(q: &[f64]) -> Result<Vec<ResponseField>> {
    let shape = Shape::new(&[1])?;
    q.iter()
        .enumerate()
        .map(|(k, &v)| ResponseField::uniform(&shape, v, format!("q{}", k + 1)))
        .collect()
}

/// Second-order moments of the power spectrum, `Σ_ω |F(ω)|² ω ωᵀ`.
pub fn spectral_moment_tensor(f: &ScalarField) -> Result<SymMat> {
    f.require_even("spectral_moment_tensor")?;
    let spectrum = fft::forward_real(f);
    let grid = FrequencyGrid::new(f.shape());
    let n = f.ndim();
    let mut data = Vec::with_capacity(packed_len(n));
    for i in 0..n {
        for j in i..n {
            let terms: Vec<f64> = spectrum
                .par_iter()
                .enumerate()
                .map(|(b, c)| {
                    let mut w = vec![0.0; n];
                    grid.omega(b, &mut w);
                    c.norm_sqr() * w[i] * w[j]
                })
                .collect();
            data.push(pairwise_sum(&terms));
        }
    }
    SymMat::from_packed(n, data)
}

/// Exact gradient components `∂f/∂x_a`, computed by multiplying the
/// spectrum with `iω_a`. Complex because the Nyquist bin of an even grid
/// has no real-valued derivative.
pub fn spectral_gradient(f: &ScalarField) -> Result<Vec<Vec<Complex64>>> {
    f.require_even("spectral_gradient")?;
    let spectrum = fft::forward_real(f);
    let grid = FrequencyGrid::new(f.shape());
    let shape = f.shape();
    (0..f.ndim())
        .into_par_iter()
        .map(|axis| {
            let m = shape.dims()[axis];
            let stride = shape.strides()[axis];
            let freqs = grid.axis(axis);
            let d: Vec<Complex64> = spectrum
                .iter()
                .enumerate()
                .map(|(b, c)| c * Complex64::new(0.0, freqs[(b / stride) % m]))
                .collect();
            Ok(fft::inverse(d, shape))
        })
        .collect()
}

/// Per-pixel `Re(∇f ∇fᴴ)` from exact spectral derivatives.
pub fn dft_gradient_field(f: &ScalarField) -> Result<TensorField> {
    let g = spectral_gradient(f)?;
    let n = f.ndim();
    let mut planes = Vec::with_capacity(packed_len(n));
    for i in 0..n {
        for j in i..n {
            planes.push(g[i].par_iter().zip(&g[j]).map(|(a, b)| (a * b.conj()).re).collect());
        }
    }
    TensorField::new(f.shape().clone(), n, planes, Construction::Gradient)
}

/// `Σ_r ∇f ∇fᵀ` over the grid with exact spectral derivatives.
pub fn dft_gradient_tensor(f: &ScalarField) -> Result<SymMat> {
    Ok(dft_gradient_field(f)?.sum())
}

/// Boundary rule for spatial convolutions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Boundary {
    #[default]
    Periodic,
    /// Mirror with the edge sample repeated (`-1 → 0`, `-2 → 1`).
    Reflect,
}

impl FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "periodic" => Ok(Boundary::Periodic),
            "reflect" => Ok(Boundary::Reflect),
            other => Err(Error::param(format!("unknown boundary '{other}'"))),
        }
    }
}

impl Boundary {
    #[inline]
    fn resolve(self, x: i64, n: usize) -> usize {
        let n = n as i64;
        match self {
            Boundary::Periodic => x.rem_euclid(n) as usize,
            Boundary::Reflect => {
                let period = 2 * n;
                let r = x.rem_euclid(period);
                (if r < n { r } else { period - 1 - r }) as usize
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GradientOptions {
    pub boundary: Boundary,
    /// Evaluate products on a 2× band-limited upsampled grid.
    pub upsample: bool,
}

/// Sampled Gaussian on `[-⌈4σ⌉, ⌈4σ⌉]`, normalised to unit sum.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (4.0 * sigma).ceil() as i64;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|x| (-(x * x) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    k
}

/// Sampled Gaussian derivative, normalised so that it maps `f(x) = x` to 1.
pub fn gaussian_derivative_kernel(sigma: f64) -> Vec<f64> {
    let g = gaussian_kernel(sigma);
    let radius = (g.len() / 2) as i64;
    let mut d: Vec<f64> = g
        .iter()
        .zip(-radius..=radius)
        .map(|(v, x)| -(x as f64) * v / (sigma * sigma))
        .collect();
    let gain: f64 = -d.iter().zip(-radius..=radius).map(|(v, x)| v * x as f64).sum::<f64>();
    d.iter_mut().for_each(|v| *v /= gain);
    d
}

/// `out[x] = Σ_k in[x − k] · kernel[k]` along one axis.
pub fn convolve_axis(values: &[f64], shape: &Shape, axis: usize, kernel: &[f64], boundary: Boundary) -> Vec<f64> {
    let n = shape.dims()[axis];
    let stride = shape.strides()[axis];
    let radius = (kernel.len() / 2) as i64;
    (0..values.len())
        .into_par_iter()
        .map(|i| {
            let x = ((i / stride) % n) as i64;
            let base = i - (x as usize) * stride;
            kernel
                .iter()
                .zip(-radius..=radius)
                .map(|(h, k)| h * values[base + boundary.resolve(x - k, n) * stride])
                .sum()
        })
        .collect()
}

/// Gaussian-derivative gradients at scale `inner_scale`, outer products,
/// then Gaussian smoothing at `outer_scale` (0 disables smoothing).
pub fn gradient_tensor(
    f: &ScalarField,
    inner_scale: f64,
    outer_scale: f64,
    options: GradientOptions,
) -> Result<TensorField> {
    if !(inner_scale > 0.0) || !inner_scale.is_finite() {
        return Err(Error::param(format!("inner scale must be > 0, got {inner_scale}")));
    }
    if !(outer_scale >= 0.0) || !outer_scale.is_finite() {
        return Err(Error::param(format!("outer scale must be >= 0, got {outer_scale}")));
    }
    if options.upsample {
        let fine = upsample2x(f)?;
        let t = gradient_tensor(
            &fine,
            2.0 * inner_scale,
            2.0 * outer_scale,
            GradientOptions {
                upsample: false,
                ..options
            },
        )?;
        // one coarse sample is two fine samples: gradients double, products ×4
        return Ok(t.decimate(2)?.scaled(4.0));
    }

    let shape = f.shape();
    let n = f.ndim();
    let g = gaussian_kernel(inner_scale);
    let d = gaussian_derivative_kernel(inner_scale);
    let grads: Vec<Vec<f64>> = (0..n)
        .map(|a| {
            let mut v = f.values().to_vec();
            for axis in 0..n {
                let k = if axis == a { &d } else { &g };
                v = convolve_axis(&v, shape, axis, k, options.boundary);
            }
            v
        })
        .collect();

    let smooth = (outer_scale > 0.0).then(|| gaussian_kernel(outer_scale));
    let mut planes = Vec::with_capacity(packed_len(n));
    for i in 0..n {
        for j in i..n {
            let mut p: Vec<f64> = grads[i].iter().zip(&grads[j]).map(|(a, b)| a * b).collect();
            if let Some(k) = &smooth {
                for axis in 0..n {
                    p = convolve_axis(&p, shape, axis, k, options.boundary);
                }
            }
            planes.push(p);
        }
    }
    TensorField::new(shape.clone(), n, planes, Construction::Gradient)
}

/// Band-limited 2× upsampling by zero-padding the centred spectrum.
///
/// Nyquist bins are split evenly between `±M/2` of the larger grid, so the
/// output stays real and reproduces the input at even coordinates.
pub fn upsample2x(f: &ScalarField) -> Result<ScalarField> {
    f.require_even("upsample2x")?;
    let n = f.ndim();
    let coarse = f.shape();
    let fine_dims: Vec<usize> = coarse.dims().iter().map(|d| 2 * d).collect();
    let fine = Shape::new(&fine_dims)?;
    let spectrum = fft::forward_real(f);
    let mut padded = vec![Complex64::new(0.0, 0.0); fine.len()];
    let gain = (2f64.powi(n as i32)).sqrt();

    let mut coords = vec![0; n];
    let mut targets: Vec<usize> = Vec::with_capacity(1 << n);
    for (b, &c) in spectrum.iter().enumerate() {
        coarse.unravel(b, &mut coords);
        targets.clear();
        targets.push(0);
        for axis in 0..n {
            let m = coarse.dims()[axis];
            let big = fine_dims[axis];
            let stride = fine.strides()[axis];
            let s = fft::signed_bin(coords[axis], m);
            let wrap = |s: i64| (s.rem_euclid(big as i64)) as usize * stride;
            if 2 * s == -(m as i64) {
                let lo = wrap(s);
                let hi = wrap(-s);
                let prev = std::mem::take(&mut targets);
                for t in prev {
                    targets.push(t + lo);
                    targets.push(t + hi);
                }
            } else {
                let off = wrap(s);
                targets.iter_mut().for_each(|t| *t += off);
            }
        }
        let share = c * gain / targets.len() as f64;
        for &t in &targets {
            padded[t] += share;
        }
    }
    let out = fft::inverse(padded, &fine);
    ScalarField::new(&fine_dims, out.into_iter().map(|c| c.re).collect(), f.periodic())
}
