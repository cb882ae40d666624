use std::f64::consts::PI;

use crate::error::Result;
use crate::ledger::CostLedger;
use crate::linalg::{SymmetricMatrix, Vector};
use crate::problem::{check_len, LinearProblem};

/// x'' + (ω² + ε cos 2t) x = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MathieuProblem {
    pub omega: f64,
    pub eps: f64,
}

impl MathieuProblem {
    pub fn new(omega: f64, eps: f64) -> Self {
        Self { omega, eps }
    }

    pub fn coefficient(&self, t: f64) -> f64 {
        self.omega * self.omega + self.eps * (2.0 * t).cos()
    }
}

impl LinearProblem for MathieuProblem {
    fn dim(&self) -> usize {
        1
    }

    fn eval(&self, t: f64) -> Result<SymmetricMatrix> {
        Ok(SymmetricMatrix::scalar(self.coefficient(t)))
    }

    fn apply(&self, t: f64, v: &Vector, ledger: &CostLedger) -> Result<Vector> {
        check_len(1, v)?;
        ledger.add_matvec(1);
        Ok(v * self.coefficient(t))
    }

    fn spectral_radius_estimate(&self, t: f64) -> Option<f64> {
        Some(self.coefficient(t).abs())
    }

    fn cache_key(&self) -> Option<String> {
        Some(format!("mathieu:omega={:?}:eps={:?}", self.omega, self.eps))
    }

    fn period(&self) -> Option<f64> {
        Some(PI)
    }
}
