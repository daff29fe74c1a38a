//! Structure tensors from directional filter responses and gradients.
//!
//! The crate builds the frame-corrected tensor `Σ q_k (α n_k n_kᵀ − β I)`
//! and the directly sampled tensor `Σ q_k n_k n_kᵀ` from filter-bank
//! magnitudes, the spectral-moment and gradient tensors of an image, and
//! interprets them by eigenanalysis (total-least-squares line fit to the
//! power spectrum).
//!
//! Module map:
//!
//! * [`linalg`]: packed symmetric matrices, Jacobi eigensolver.
//! * [`tessellation`]: tune-in direction sets.
//! * [`filterbank`]: quadrature and Gabor filters in the DFT domain.
//! * [`tensor`]: the tensor constructions and band-limited upsampling.
//! * [`analysis`]: orientation, certainty, rank and indefiniteness measures.
//! * [`synth`]: synthetic linearly symmetric test images and noise.
//! * [`io`]: PGM/PPM, the `STF1` raw raster and CSV output.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod error;
pub mod fft;
pub mod field;
pub mod filterbank;
pub mod io;
pub mod linalg;
pub mod repro;
pub mod synth;
pub mod tensor;
pub mod tessellation;

pub use error::{Error, Result};
pub use field::{ScalarField, Shape};
pub use linalg::{EigenDecomp, SymMat};
pub use tensor::{Construction, FrameCoefficients, TensorField};
pub use tessellation::DirectionSet;
