//! The icosahedral indefiniteness example: six filters, three of them
//! excited, evaluated with both tensor constructions.

use crate::error::Result;
use crate::linalg::{eig_sym, SymMat};
use crate::tensor::{point_responses, tensor_bg, tensor_gk, FrameCoefficients};
use crate::tessellation::icosa6;

/// Filter magnitudes `q₁ = 1, q₃ = q₅ = 1/4`, others zero.
pub const COUNTEREXAMPLE_Q: [f64; 6] = [1.0, 0.0, 0.25, 0.0, 0.25, 0.0];

#[derive(Clone, Debug)]
pub struct ConstructionSummary {
    pub tensor: SymMat,
    pub eigenvalues: Vec<f64>,
    pub trace: f64,
    pub negative_count: usize,
    pub psd: bool,
}

#[derive(Clone, Debug)]
pub struct CounterexampleReport {
    pub q: Vec<f64>,
    pub coefficients: FrameCoefficients,
    pub gk: ConstructionSummary,
    pub bg: ConstructionSummary,
}

impl CounterexampleReport {
    /// The frame tensor has at least two negative eigenvalues and the
    /// directly sampled one is PSD.
    pub fn holds(&self) -> bool {
        self.gk.negative_count >= 2 && self.bg.psd
    }
}

/// PSD tolerance relative to the trace.
pub const PSD_RTOL: f64 = 1e-12;

fn summarize(t: SymMat) -> Result<ConstructionSummary> {
    let e = eig_sym(&t)?;
    let trace = t.trace();
    let tol = PSD_RTOL * trace.abs();
    let negative_count = e.eigenvalues.iter().filter(|&&l| l < -tol).count();
    Ok(ConstructionSummary {
        psd: e.min_eigenvalue() >= -tol,
        eigenvalues: e.eigenvalues,
        trace,
        negative_count,
        tensor: t,
    })
}

pub fn counterexample(q: &[f64], coefficients: FrameCoefficients) -> Result<CounterexampleReport> {
    let dirs = icosa6();
    let responses = point_responses(q)?;
    let gk = tensor_gk(&responses, &dirs, coefficients)?.at(0);
    let bg = tensor_bg(&responses, &dirs)?.at(0);
    Ok(CounterexampleReport {
        q: q.to_vec(),
        coefficients,
        gk: summarize(gk)?,
        bg: summarize(bg)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_counterexample_holds() {
        let r = counterexample(&COUNTEREXAMPLE_Q, FrameCoefficients::ICOSA6).unwrap();
        assert!(r.holds());
        assert_eq!(r.gk.negative_count, 2);
        assert!((r.gk.trace - 0.75).abs() < 1e-12);
        assert!((r.bg.trace - 1.5).abs() < 1e-12);
    }
}
