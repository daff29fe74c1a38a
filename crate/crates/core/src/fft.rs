//! Unitary N-D DFT on top of `rustfft`, plus the matching frequency grid.
//!
//! Both directions are scaled by `1/√(d0·d1·…)`, so Parseval holds as an
//! exact identity: `Σ|f|² = Σ|F|²`.

use std::f64::consts::PI;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::field::{ScalarField, Shape};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// In-place unitary DFT over every axis of `data`.
pub fn fft_nd(data: &mut [Complex64], shape: &Shape, direction: Direction) {
    assert_eq!(data.len(), shape.len(), "buffer does not match shape");
    let mut planner = FftPlanner::<f64>::new();
    for axis in 0..shape.ndim() {
        let n = shape.dims()[axis];
        let plan = match direction {
            Direction::Forward => planner.plan_fft_forward(n),
            Direction::Inverse => planner.plan_fft_inverse(n),
        };
        transform_axis(data, shape, axis, plan.as_ref());
    }
    let scale = 1.0 / (shape.len() as f64).sqrt();
    data.par_iter_mut().for_each(|c| *c *= scale);
}

fn transform_axis(data: &mut [Complex64], shape: &Shape, axis: usize, plan: &dyn Fft<f64>) {
    let n = shape.dims()[axis];
    let stride = shape.strides()[axis];
    if stride == 1 {
        data.par_chunks_mut(n).for_each(|line| plan.process(line));
        return;
    }
    // Lines along `axis`: for a block of size stride*n, there are `stride`
    // interleaved lines starting at offsets 0..stride.
    let block = stride * n;
    data.par_chunks_mut(block).for_each(|chunk| {
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        for start in 0..stride {
            for (k, c) in line.iter_mut().enumerate() {
                *c = chunk[start + k * stride];
            }
            plan.process(&mut line);
            for (k, c) in line.iter().enumerate() {
                chunk[start + k * stride] = *c;
            }
        }
    });
}

/// Forward unitary DFT of a real image.
pub fn forward_real(f: &ScalarField) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_nd(&mut buf, f.shape(), Direction::Forward);
    buf
}

pub fn inverse(mut spectrum: Vec<Complex64>, shape: &Shape) -> Vec<Complex64> {
    fft_nd(&mut spectrum, shape, Direction::Inverse);
    spectrum
}

/// Angular frequency (rad/sample) of DFT bin `j` on an axis of length `m`:
/// bins `0..m/2` are nonnegative, the rest wrap to `[-π, 0)`.
#[inline]
pub fn bin_frequency(j: usize, m: usize) -> f64 {
    let signed = if 2 * j < m { j as f64 } else { j as f64 - m as f64 };
    2.0 * PI * signed / m as f64
}

/// Integer bin offset in `[-m/2, m/2)`.
#[inline]
pub fn signed_bin(j: usize, m: usize) -> i64 {
    if 2 * j < m {
        j as i64
    } else {
        j as i64 - m as i64
    }
}

/// Per-axis frequency tables for a grid.
#[derive(Clone, Debug)]
pub struct FrequencyGrid {
    shape: Shape,
    axes: Vec<Vec<f64>>,
}

impl FrequencyGrid {
    pub fn new(shape: &Shape) -> Self {
        let axes = shape
            .dims()
            .iter()
            .map(|&m| (0..m).map(|j| bin_frequency(j, m)).collect())
            .collect();
        FrequencyGrid {
            shape: shape.clone(),
            axes,
        }
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn axis(&self, axis: usize) -> &[f64] {
        &self.axes[axis]
    }

    /// Writes the frequency vector of flat bin `flat` into `out`.
    pub fn omega(&self, flat: usize, out: &mut [f64]) {
        let mut rest = flat;
        for (axis, o) in out.iter_mut().enumerate() {
            let m = self.shape.dims()[axis];
            *o = self.axes[axis][rest % m];
            rest /= m;
        }
    }
}
