//! Regular N-D sample grids.
//!
//! Axis 0 varies fastest: the sample at coordinates `(x0, x1, ..)` lives at
//! `x0 + d0 * (x1 + d1 * (x2 + ..))`. For 2-D images that is ordinary
//! row-major order with `x` along a row.

use crate::error::{Error, Result};

pub const MIN_EXTENT: usize = 4;

/// Shape of an N-D grid.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Shape {
    dims: Vec<usize>,
    strides: Vec<usize>,
}

impl Shape {
    pub fn new(dims: &[usize]) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::param("grid needs at least one axis"));
        }
        let mut strides = Vec::with_capacity(dims.len());
        let mut acc: usize = 1;
        for &d in dims {
            if d == 0 {
                return Err(Error::param("grid with zero extent"));
            }
            strides.push(acc);
            acc = acc
                .checked_mul(d)
                .ok_or_else(|| Error::param("grid size overflows usize"))?;
        }
        Ok(Shape {
            dims: dims.to_vec(),
            strides,
        })
    }

    #[inline]
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    #[inline]
    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    #[inline]
    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Per-axis coordinates of a flat index.
    pub fn unravel(&self, mut flat: usize, out: &mut [usize]) {
        for (o, &d) in out.iter_mut().zip(&self.dims) {
            *o = flat % d;
            flat /= d;
        }
    }

    pub fn ravel(&self, coords: &[usize]) -> usize {
        coords.iter().zip(&self.strides).map(|(c, s)| c * s).sum()
    }

    pub fn all_even(&self) -> bool {
        self.dims.iter().all(|d| d % 2 == 0)
    }
}

/// A real-valued image `f(r)` on an integer grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    shape: Shape,
    values: Vec<f64>,
    periodic: bool,
}

impl ScalarField {
    pub fn new(dims: &[usize], values: Vec<f64>, periodic: bool) -> Result<Self> {
        let shape = Shape::new(dims)?;
        if dims.len() < 2 {
            return Err(Error::param("images need at least two axes"));
        }
        if let Some(d) = dims.iter().find(|&&d| d < MIN_EXTENT) {
            return Err(Error::param(format!(
                "every axis needs at least {MIN_EXTENT} samples, got {d}"
            )));
        }
        if values.len() != shape.len() {
            return Err(Error::DimMismatch(format!(
                "{} values for a grid of {} samples",
                values.len(),
                shape.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("image samples must be finite"));
        }
        Ok(ScalarField {
            shape,
            values,
            periodic,
        })
    }

    pub fn zeros(dims: &[usize]) -> Result<Self> {
        let n = Shape::new(dims)?.len();
        Self::new(dims, vec![0.0; n], true)
    }

    pub fn constant(dims: &[usize], value: f64) -> Result<Self> {
        let n = Shape::new(dims)?.len();
        Self::new(dims, vec![value; n], true)
    }

    /// Samples `f` at every grid point.
    pub fn from_fn(dims: &[usize], periodic: bool, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let shape = Shape::new(dims)?;
        let mut coords = vec![0; dims.len()];
        let values = (0..shape.len())
            .map(|i| {
                shape.unravel(i, &mut coords);
                f(&coords)
            })
            .collect();
        Self::new(dims, values, periodic)
    }

    #[inline]
    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    #[inline]
    pub fn dims(&self) -> &[usize] {
        self.shape.dims()
    }

    #[inline]
    pub fn ndim(&self) -> usize {
        self.shape.ndim()
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn periodic(&self) -> bool {
        self.periodic
    }

    pub fn with_periodic(mut self, periodic: bool) -> Self {
        self.periodic = periodic;
        self
    }

    pub fn get(&self, coords: &[usize]) -> f64 {
        self.values[self.shape.ravel(coords)]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub(crate) fn require_even(&self, what: &str) -> Result<()> {
        if self.shape.all_even() {
            Ok(())
        } else {
            Err(Error::param(format!(
                "{what} needs even extents, got {:?}",
                self.dims()
            )))
        }
    }
}
