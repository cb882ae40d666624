//! The problem abstraction x'' + M(t)x = 0.

use crate::error::{Error, Result};
use crate::ledger::CostLedger;
use crate::linalg::{SymmetricMatrix, Vector};

/// Time-to-coefficient map M(t) of a linear second-order system.
///
/// The dense evaluator is required. Operator-form problems override
/// [`LinearProblem::apply`] and, when they can evaluate a weighted sum of
/// M at several times in a single pass, [`LinearProblem::apply_combination`].
pub trait LinearProblem: Send + Sync {
    fn dim(&self) -> usize;

    /// Dense M(t). Not charged to the cost ledger.
    fn eval(&self, t: f64) -> Result<SymmetricMatrix>;

    /// M(t)·v, one 𝒱.
    fn apply(&self, t: f64, v: &Vector, ledger: &CostLedger) -> Result<Vector> {
        check_len(self.dim(), v)?;
        Ok(self.eval(t)?.apply(v, ledger))
    }

    /// (Σⱼ wⱼ M(tⱼ))·v. The default forms the dense combination (free) and
    /// applies it once, costing one 𝒱.
    fn apply_combination(&self, terms: &[(f64, f64)], v: &Vector, ledger: &CostLedger) -> Result<Vector> {
        check_len(self.dim(), v)?;
        let mats = terms
            .iter()
            .map(|&(t, _)| self.eval(t))
            .collect::<Result<Vec<_>>>()?;
        let combo: Vec<(f64, &SymmetricMatrix)> = terms.iter().zip(&mats).map(|(&(_, w), m)| (w, m)).collect();
        Ok(SymmetricMatrix::combination(&combo).apply(v, ledger))
    }

    /// Cheap upper bound on ρ(M(t)).
    fn spectral_radius_estimate(&self, t: f64) -> Option<f64> {
        self.eval(t).ok().map(|m| m.gershgorin_radius())
    }

    /// Stable identifier used to cache reference solutions.
    fn cache_key(&self) -> Option<String> {
        None
    }

    /// Period of M(t), when periodic.
    fn period(&self) -> Option<f64> {
        None
    }
}

pub(crate) fn check_len(dim: usize, v: &Vector) -> Result<()> {
    if v.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: v.len(),
        });
    }
    Ok(())
}

/// Problem defined by a closure; handy for tests and ad-hoc systems.
pub struct FnProblem<F> {
    dim: usize,
    f: F,
    key: Option<String>,
}

impl<F> FnProblem<F>
where
    F: Fn(f64) -> SymmetricMatrix + Send + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f, key: None }
    }

    pub fn with_key(mut self, key: impl Into<String>) -> Self {
        self.key = Some(key.into());
        self
    }
}

impl<F> LinearProblem for FnProblem<F>
where
    F: Fn(f64) -> SymmetricMatrix + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, t: f64) -> Result<SymmetricMatrix> {
        let m = (self.f)(t);
        if m.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: m.dim(),
            });
        }
        Ok(m)
    }

    fn cache_key(&self) -> Option<String> {
        self.key.clone()
    }
}

/// Time-independent M.
pub struct ConstantProblem(pub SymmetricMatrix);

impl LinearProblem for ConstantProblem {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn eval(&self, _t: f64) -> Result<SymmetricMatrix> {
        Ok(self.0.clone())
    }
}
