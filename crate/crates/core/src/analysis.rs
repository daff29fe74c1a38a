//! Eigen-interpretation of structure tensors: orientation, certainty,
//! near-zero eigenvalue counts and indefiniteness statistics.

use rayon::prelude::*;

use crate::error::Result;
use crate::linalg::{eig_sym, SymMat};
use crate::tensor::{Construction, TensorField};
use crate::tessellation::to_half_space;

pub const DEFAULT_RANK_TOL: f64 = 1e-3;
/// Default relative tolerance for counting a pixel as indefinite.
pub const DEFAULT_INDEFINITE_TOL: f64 = 1e-12;
pub const HISTOGRAM_BINS: usize = 20;
/// Range of min-eigenvalue / trace ratios covered by the histogram;
/// values outside are clamped into the end bins.
pub const HISTOGRAM_RANGE: (f64, f64) = (-1.0, 1.0);

/// Best-fit single orientation of a tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct OrientationEstimate {
    /// Top eigenvector, last nonzero coordinate positive.
    pub direction: Vec<f64>,
    /// `(λ₁ − λ₂)/(λ₁ + λ₂)`, or 0 when `λ₁ + λ₂ ≤ 0`.
    pub certainty: f64,
    /// `Σ_{i≥2} λᵢ`: residual energy off the fitted line. Negative values
    /// are possible for indefinite inputs and are reported unchanged.
    pub tls_error: f64,
    pub eigenvalues: Vec<f64>,
}

pub fn orientation(t: &SymMat) -> Result<OrientationEstimate> {
    let e = eig_sym(t)?;
    let mut direction = e.eigenvectors[0].clone();
    to_half_space(&mut direction);
    let l1 = e.eigenvalues[0];
    let l2 = e.eigenvalues[1];
    let certainty = if l1 + l2 > 0.0 {
        ((l1 - l2) / (l1 + l2)).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let tls_error = e.eigenvalues[1..].iter().sum();
    Ok(OrientationEstimate {
        direction,
        certainty,
        tls_error,
        eigenvalues: e.eigenvalues,
    })
}

/// How many eigenvalues sit near zero relative to the largest one.
#[derive(Clone, Debug, PartialEq)]
pub struct RankProfile {
    pub near_zero_count: usize,
    pub eigenvalues: Vec<f64>,
    pub threshold: f64,
    /// Set when `λ₁ ≤ 0`; `near_zero_count` is then `N`.
    pub degenerate: bool,
}

pub fn rank_profile(t: &SymMat, rel_tol: f64) -> Result<RankProfile> {
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(crate::error::Error::param(format!(
            "rank tolerance must lie in (0, 1), got {rel_tol}"
        )));
    }
    let e = eig_sym(t)?;
    let l1 = e.eigenvalues[0];
    if l1 <= 0.0 {
        return Ok(RankProfile {
            near_zero_count: t.dim(),
            eigenvalues: e.eigenvalues,
            threshold: 0.0,
            degenerate: true,
        });
    }
    let threshold = rel_tol * l1;
    let near_zero_count = e.eigenvalues.iter().filter(|&&l| l < threshold).count();
    Ok(RankProfile {
        near_zero_count,
        eigenvalues: e.eigenvalues,
        threshold,
        degenerate: false,
    })
}

/// Per-pixel orientation over a whole field.
pub fn orientation_field(tf: &TensorField) -> Result<Vec<OrientationEstimate>> {
    (0..tf.pixel_count())
        .into_par_iter()
        .map(|p| orientation(&tf.at(p)))
        .collect()
}

/// Smallest eigenvalue at every pixel.
pub fn min_eigenvalue_field(tf: &TensorField) -> Result<Vec<f64>> {
    (0..tf.pixel_count())
        .into_par_iter()
        .map(|p| Ok(eig_sym(&tf.at(p))?.min_eigenvalue()))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct IndefinitenessReport {
    pub construction: Construction,
    pub pixels: usize,
    /// Pixels with `λ_min < −tol·|trace|`.
    pub negative_pixels: usize,
    pub negative_fraction: f64,
    pub global_min_eigenvalue: f64,
    pub tol: f64,
    /// Counts of `λ_min / trace` over [`HISTOGRAM_RANGE`]; zero-trace pixels are counted at 0.
    pub histogram: Vec<usize>,
}

impl IndefinitenessReport {
    /// Lower edge of histogram bin `i`.
    pub fn bin_edge(i: usize) -> f64 {
        let (lo, hi) = HISTOGRAM_RANGE;
        lo + (hi - lo) * i as f64 / HISTOGRAM_BINS as f64
    }

    pub fn csv_header() -> Vec<String> {
        let mut h: Vec<String> = [
            "construction",
            "pixels",
            "negative_pixels",
            "negative_fraction",
            "global_min_eigenvalue",
            "tol",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        h.extend((0..HISTOGRAM_BINS).map(|i| format!("hist_{:+.2}", Self::bin_edge(i))));
        h
    }

    pub fn csv_row(&self) -> Vec<String> {
        let mut r = vec![
            self.construction.to_string(),
            self.pixels.to_string(),
            self.negative_pixels.to_string(),
            format!("{}", self.negative_fraction),
            format!("{:e}", self.global_min_eigenvalue),
            format!("{:e}", self.tol),
        ];
        r.extend(self.histogram.iter().map(|c| c.to_string()));
        r
    }
}

fn histogram_bin(ratio: f64) -> usize {
    let (lo, hi) = HISTOGRAM_RANGE;
    let x = ((ratio - lo) / (hi - lo) * HISTOGRAM_BINS as f64).floor();
    x.clamp(0.0, (HISTOGRAM_BINS - 1) as f64) as usize
}

pub fn indefiniteness_report(tf: &TensorField, tol: f64) -> Result<IndefinitenessReport> {
    let stats: Vec<(f64, f64)> = (0..tf.pixel_count())
        .into_par_iter()
        .map(|p| {
            let t = tf.at(p);
            Ok((eig_sym(&t)?.min_eigenvalue(), t.trace()))
        })
        .collect::<Result<_>>()?;
    let mut histogram = vec![0; HISTOGRAM_BINS];
    let mut negative_pixels = 0;
    let mut global_min = f64::INFINITY;
    for &(lmin, trace) in &stats {
        global_min = global_min.min(lmin);
        if lmin < -tol * trace.abs() {
            negative_pixels += 1;
        }
        let ratio = if trace != 0.0 { lmin / trace } else { 0.0 };
        histogram[histogram_bin(ratio)] += 1;
    }
    let pixels = stats.len();
    Ok(IndefinitenessReport {
        construction: tf.construction(),
        pixels,
        negative_pixels,
        negative_fraction: if pixels == 0 {
            0.0
        } else {
            negative_pixels as f64 / pixels as f64
        },
        global_min_eigenvalue: if pixels == 0 { 0.0 } else { global_min },
        tol,
        histogram,
    })
}

/// Angle between two orientations (sign-free), in radians.
pub fn orientation_error(a: &[f64], b: &[f64]) -> f64 {
    let c = crate::linalg::dot(a, b).abs() / (crate::linalg::norm(a) * crate::linalg::norm(b));
    c.min(1.0).acos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Shape;
    use crate::linalg::outer;
    use crate::tensor::{point_responses, tensor_bg, tensor_gk, FrameCoefficients};
    use crate::tessellation::icosa6;

    #[test]
    fn orientation_of_rank_one() {
        let n1 = icosa6().directions()[0].clone();
        let o = orientation(&outer(&n1)).unwrap();
        assert!(orientation_error(&o.direction, &n1) < 1e-10);
        assert!((o.certainty - 1.0).abs() < 1e-12);
        assert!(o.tls_error.abs() < 1e-12);
    }

    #[test]
    fn orientation_of_identity() {
        let a = orientation(&SymMat::identity(3)).unwrap();
        let b = orientation(&SymMat::identity(3)).unwrap();
        assert_eq!(a.certainty, 0.0);
        assert_eq!(a.direction, b.direction);
        assert!((a.tls_error - 2.0).abs() < 1e-15);
        assert_eq!(orientation(&SymMat::zeros(2)).unwrap().certainty, 0.0);
    }

    #[test]
    fn rank_profile_examples() {
        let k = |d: &[f64]| rank_profile(&SymMat::from_diagonal(d), 1e-6).unwrap().near_zero_count;
        assert_eq!(k(&[1.0, 0.0, 0.0]), 2);
        assert_eq!(k(&[1.0, 1.0, 0.0]), 1);
        assert_eq!(k(&[1.0, 1.0, 1.0]), 0);
        let z = rank_profile(&SymMat::zeros(3), 1e-3).unwrap();
        assert!(z.degenerate);
        assert_eq!(z.near_zero_count, 3);
        assert!(rank_profile(&SymMat::identity(2), 1.0).is_err());
        assert!(rank_profile(&SymMat::identity(2), 0.0).is_err());
    }

    #[test]
    fn rank_profile_exhaustive_binary_diagonals() {
        for n in 2..=4 {
            for mask in 1u32..(1 << n) {
                let d: Vec<f64> = (0..n).map(|i| ((mask >> i) & 1) as f64).collect();
                let zeros = d.iter().filter(|&&v| v == 0.0).count();
                let p = rank_profile(&SymMat::from_diagonal(&d), DEFAULT_RANK_TOL).unwrap();
                assert_eq!(p.near_zero_count, zeros, "{d:?}");
            }
        }
    }

    #[test]
    fn indefiniteness_reports() {
        let shape = Shape::new(&[4, 4]).unwrap();
        let q: Vec<_> = [1.0, 0.0, 0.25, 0.0, 0.25, 0.0]
            .iter()
            .map(|&v| crate::filterbank::ResponseField::uniform(&shape, v, "q").unwrap())
            .collect();
        let gk = tensor_gk(&q, &icosa6(), FrameCoefficients::ICOSA6).unwrap();
        let r = indefiniteness_report(&gk, DEFAULT_INDEFINITE_TOL).unwrap();
        assert_eq!(r.negative_fraction, 1.0);
        assert!(r.global_min_eigenvalue < 0.0);
        // all 16 pixels share λ_min / trace ≈ −0.2023/0.75 ≈ −0.270 → bin of [−0.3, −0.2)
        assert_eq!(r.histogram[histogram_bin(-0.27)], 16);
        assert_eq!(histogram_bin(-0.27), 7);

        let bg = tensor_bg(&q, &icosa6()).unwrap();
        let r = indefiniteness_report(&bg, DEFAULT_INDEFINITE_TOL).unwrap();
        assert_eq!(r.negative_fraction, 0.0);

        let zero = tensor_bg(&point_responses(&[0.0; 6]).unwrap(), &icosa6()).unwrap();
        let r = indefiniteness_report(&zero, DEFAULT_INDEFINITE_TOL).unwrap();
        assert_eq!(r.negative_fraction, 0.0);
        assert_eq!(r.global_min_eigenvalue, 0.0);
        assert_eq!(r.csv_row().len(), IndefinitenessReport::csv_header().len());
    }
}
