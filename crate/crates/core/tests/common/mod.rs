//! Test-only reference computations, independent of the Jacobi solver.
#![allow(dead_code)]

use stensor::SymMat;

/// Coefficients of `det(λI − T) = λ³ − c2 λ² + c1 λ − c0` for a 3x3 matrix.
fn char_poly3(t: &SymMat) -> (f64, f64, f64) {
    let m = t.to_dense();
    let c2 = m[0][0] + m[1][1] + m[2][2];
    let c1 = m[0][0] * m[1][1] - m[0][1] * m[1][0] + m[0][0] * m[2][2] - m[0][2] * m[2][0] + m[1][1] * m[2][2]
        - m[1][2] * m[2][1];
    let c0 = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    (c2, c1, c0)
}

fn bisect(p: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut plo = p(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let pm = p(mid);
        if pm == 0.0 {
            return mid;
        }
        if (pm < 0.0) == (plo < 0.0) {
            lo = mid;
            plo = pm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Eigenvalues of a symmetric 3x3 matrix with distinct eigenvalues, found
/// by bisection on the characteristic cubic between its critical points.
/// Sorted descending.
pub fn cubic_eigenvalues(t: &SymMat) -> [f64; 3] {
    assert_eq!(t.dim(), 3);
    let (c2, c1, c0) = char_poly3(t);
    let p = |l: f64| ((l - c2) * l + c1) * l - c0;
    // Gershgorin bound on the spectrum
    let m = t.to_dense();
    let r = (0..3)
        .map(|i| m[i][i].abs() + (0..3).filter(|&j| j != i).map(|j| m[i][j].abs()).sum::<f64>())
        .fold(0.0_f64, f64::max)
        + 1.0;
    // p'(λ) = 3λ² − 2 c2 λ + c1
    let disc = c2 * c2 - 3.0 * c1;
    assert!(disc > 0.0, "oracle needs distinct eigenvalues");
    let s = disc.sqrt();
    let (k1, k2) = ((c2 - s) / 3.0, (c2 + s) / 3.0);
    let mut roots = [bisect(p, -r, k1), bisect(p, k1, k2), bisect(p, k2, r)];
    roots.sort_by(|a, b| b.partial_cmp(a).unwrap());
    roots
}

/// Closed-form eigenvalues of a symmetric 2x2 matrix, descending.
pub fn eigenvalues2(t: &SymMat) -> [f64; 2] {
    let (a, b, d) = (t.get(0, 0), t.get(0, 1), t.get(1, 1));
    let mean = 0.5 * (a + d);
    let r = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    [mean + r, mean - r]
}

pub fn rel_frobenius(a: &SymMat, b: &SymMat) -> f64 {
    let scale = a.frobenius_norm().max(b.frobenius_norm()).max(f64::MIN_POSITIVE);
    a.distance(b) / scale
}
