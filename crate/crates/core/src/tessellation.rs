//! Tune-in direction sets that tessellate one half of the frequency space.

use std::f64::consts::PI;
use std::io::Write;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, outer, SymMat};

/// Unit-norm tolerance for stored directions.
pub const UNIT_TOL: f64 = 1e-12;
/// Two directions closer than this angle (rad) count as duplicate or antipodal.
pub const ANGLE_TOL: f64 = 1e-9;

/// The icosahedral constants `(a, b)`, computed from their radical forms.
pub fn icosa_constants() -> (f64, f64) {
    let s5 = 5f64.sqrt();
    let d = (10.0 + 2.0 * s5).sqrt();
    (2.0 / d, (1.0 + s5) / d)
}

/// An ordered list of unit direction vectors, one per filter.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectionSet {
    dim: usize,
    directions: Vec<Vec<f64>>,
    labels: Vec<String>,
}

/// A broken [`DirectionSet`] invariant.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    Empty,
    WrongDim { index: usize, len: usize },
    NotUnit { index: usize, norm: f64 },
    Duplicate { first: usize, second: usize },
    Antipodal { first: usize, second: usize },
    LabelCount { labels: usize, directions: usize },
}

impl DirectionSet {
    /// Builds a set without checking it. Use [`DirectionSet::validate`] or
    /// [`DirectionSet::new`] when the invariants matter.
    pub fn new_unchecked(dim: usize, directions: Vec<Vec<f64>>, labels: Vec<String>) -> Self {
        DirectionSet {
            dim,
            directions,
            labels,
        }
    }

    pub fn new(dim: usize, directions: Vec<Vec<f64>>, labels: Vec<String>) -> Result<Self> {
        let set = Self::new_unchecked(dim, directions, labels);
        match set.validate().first() {
            None => Ok(set),
            Some(v) => Err(Error::param(format!("invalid direction set: {v:?}"))),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn directions(&self) -> &[Vec<f64>] {
        &self.directions
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Lists every broken invariant; empty means the set is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.directions.is_empty() {
            out.push(Violation::Empty);
        }
        if self.labels.len() != self.directions.len() {
            out.push(Violation::LabelCount {
                labels: self.labels.len(),
                directions: self.directions.len(),
            });
        }
        for (index, d) in self.directions.iter().enumerate() {
            if d.len() != self.dim {
                out.push(Violation::WrongDim { index, len: d.len() });
                continue;
            }
            let n = norm(d);
            if (n - 1.0).abs() > UNIT_TOL {
                out.push(Violation::NotUnit { index, norm: n });
            }
        }
        for i in 0..self.directions.len() {
            for j in (i + 1)..self.directions.len() {
                let (u, v) = (&self.directions[i], &self.directions[j]);
                if u.len() != self.dim || v.len() != self.dim {
                    continue;
                }
                let c = dot(u, v) / (norm(u) * norm(v));
                // 1 - cos θ ≈ θ²/2
                let cos_tol = ANGLE_TOL * ANGLE_TOL / 2.0;
                if c >= 1.0 - cos_tol {
                    out.push(Violation::Duplicate { first: i, second: j });
                } else if c <= -1.0 + cos_tol {
                    out.push(Violation::Antipodal { first: i, second: j });
                }
            }
        }
        out
    }

    /// `Σ_k n_k n_kᵀ`
    pub fn frame_operator(&self) -> SymMat {
        let mut s = SymMat::zeros(self.dim);
        for d in &self.directions {
            s.add_scaled(&outer(d), 1.0);
        }
        s
    }

    /// Applies `rotation` (row-major `dim × dim`) to every direction.
    /// The result is not re-flipped into the half-space convention.
    pub fn rotated(&self, rotation: &[Vec<f64>]) -> DirectionSet {
        let directions = self
            .directions
            .iter()
            .map(|d| rotation.iter().map(|row| dot(row, d)).collect())
            .collect();
        DirectionSet::new_unchecked(self.dim, directions, self.labels.clone())
    }

    /// CSV dump: `label,n0,n1,...` with a header row.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["label".to_string()];
        header.extend((0..self.dim).map(|i| format!("n{i}")));
        w.write_record(&header)?;
        for (label, d) in self.labels.iter().zip(&self.directions) {
            let mut row = vec![label.clone()];
            row.extend(d.iter().map(|c| format!("{c:.17e}")));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Flips `v` so that its last nonzero coordinate is positive.
pub fn to_half_space(v: &mut [f64]) {
    if let Some(last) = v.iter().rev().find(|c| c.abs() > UNIT_TOL) {
        if *last < 0.0 {
            v.iter_mut().for_each(|c| *c = -*c);
        }
    }
}

/// The six icosahedral directions in 3-D.
pub fn icosa6() -> DirectionSet {
    let (a, b) = icosa_constants();
    let directions = vec![
        vec![a, 0.0, b],
        vec![-a, 0.0, b],
        vec![b, a, 0.0],
        vec![-b, a, 0.0],
        vec![0.0, b, a],
        vec![0.0, -b, a],
    ];
    let labels = (1..=6).map(|k| format!("n{k}")).collect();
    DirectionSet::new_unchecked(3, directions, labels)
}

/// `K` equally spaced 2-D directions at angles `kπ/K`.
pub fn half_circle(count: usize) -> Result<DirectionSet> {
    if count < 2 {
        return Err(Error::param(format!("half_circle needs K >= 2, got {count}")));
    }
    let directions = (0..count)
        .map(|k| {
            let theta = k as f64 * PI / count as f64;
            let (s, c) = theta.sin_cos();
            // exact axes where the angle allows it
            match (2 * k).cmp(&count) {
                std::cmp::Ordering::Equal => vec![0.0, 1.0],
                _ if k == 0 => vec![1.0, 0.0],
                _ => vec![c, s],
            }
        })
        .collect();
    let labels = (0..count)
        .map(|k| format!("theta{:.4}", k as f64 * 180.0 / count as f64))
        .collect();
    Ok(DirectionSet::new_unchecked(2, directions, labels))
}
