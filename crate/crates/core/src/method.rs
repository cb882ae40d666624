//! A uniform handle over every integrator in the crate.

use std::fmt;
use std::str::FromStr;

use crate::baseline::{gauss_legendre_irk_step, rk4_step, ImplicitRkConfig};
use crate::decomposition::{DecompositionScheme, Truncation};
use crate::error::{Error, Result};
use crate::ledger::CostLedger;
use crate::linalg::{FundamentalMatrix, PhasePoint};
use crate::problem::LinearProblem;
use crate::splitting::{check_stability, step_psi_matrix, step_psi_vector, tableau_psi11, DEFAULT_STABILITY_THRESHOLD};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Magnus-decomposition Υ₁⁽⁴·ᑫ⁾ / Υ₂⁽⁶·ᑫ⁾.
    Upsilon(DecompositionScheme),
    /// 11-stage sixth-order Magnus splitting.
    Psi11,
    Rk4,
    /// Gauss–Legendre with fixed-point sweeps.
    Rkgl(ImplicitRkConfig),
}

impl Method {
    pub fn upsilon(p: u32, truncation: Truncation) -> Result<Self> {
        Ok(Method::Upsilon(DecompositionScheme::new(p, truncation)?))
    }

    /// Gauss–Legendre of order 4 or 6 with the default sweep count.
    pub fn rkgl(order: usize) -> Result<Self> {
        if !order.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!("Gauss-Legendre order must be even, got {order}")));
        }
        Ok(Method::Rkgl(ImplicitRkConfig::with_default_iterations(order / 2)?))
    }

    pub fn label(&self) -> String {
        match self {
            Method::Upsilon(s) => s.label(),
            Method::Psi11 => "psi11".into(),
            Method::Rk4 => "rk4".into(),
            Method::Rkgl(c) => format!("rkgl{}rho{}", c.order(), c.iterations),
        }
    }

    pub fn order(&self) -> u32 {
        match self {
            Method::Upsilon(s) => s.order.p(),
            Method::Psi11 => 6,
            Method::Rk4 => 4,
            Method::Rkgl(c) => c.order() as u32,
        }
    }

    /// Decomposition methods build r×r matrix functions and are therefore
    /// matrix-mode only.
    pub fn supports_vector(&self) -> bool {
        !matches!(self, Method::Upsilon(_))
    }

    /// Advances Φ over `steps` steps of size h from t0.
    pub fn propagate_matrix(
        &self,
        problem: &dyn LinearProblem,
        phi: &mut FundamentalMatrix,
        t0: f64,
        h: f64,
        steps: usize,
        ledger: &CostLedger,
    ) -> Result<()> {
        match self {
            Method::Upsilon(s) => s.propagate(phi, problem, t0, h, steps, true, ledger),
            Method::Psi11 => {
                check_stability(problem, t0, h, DEFAULT_STABILITY_THRESHOLD);
                let tab = tableau_psi11()?;
                for n in 0..steps {
                    step_psi_matrix(&tab, phi, problem, t0 + n as f64 * h, h, ledger)?;
                }
                Ok(())
            }
            Method::Rk4 => {
                for n in 0..steps {
                    rk4_step(phi, problem, t0 + n as f64 * h, h, ledger)?;
                }
                Ok(())
            }
            Method::Rkgl(c) => {
                for n in 0..steps {
                    gauss_legendre_irk_step(c, phi, problem, t0 + n as f64 * h, h, ledger)?;
                }
                Ok(())
            }
        }
    }

    /// Advances a phase point; only matrix-vector products are used.
    pub fn propagate_vector(
        &self,
        problem: &dyn LinearProblem,
        z: &mut PhasePoint,
        t0: f64,
        h: f64,
        steps: usize,
        ledger: &CostLedger,
    ) -> Result<()> {
        match self {
            Method::Upsilon(_) => Err(Error::Unsupported(format!(
                "{} propagates fundamental matrices only; use matrix mode",
                self.label()
            ))),
            Method::Psi11 => {
                check_stability(problem, t0, h, DEFAULT_STABILITY_THRESHOLD);
                let tab = tableau_psi11()?;
                for n in 0..steps {
                    step_psi_vector(&tab, z, problem, t0 + n as f64 * h, h, ledger)?;
                }
                Ok(())
            }
            Method::Rk4 => {
                for n in 0..steps {
                    rk4_step(z, problem, t0 + n as f64 * h, h, ledger)?;
                }
                Ok(())
            }
            Method::Rkgl(c) => {
                for n in 0..steps {
                    gauss_legendre_irk_step(c, z, problem, t0 + n as f64 * h, h, ledger)?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for Method {
    type Err = Error;

    /// Accepts the labels produced by [`Method::label`], plus `rkgl4`/`rkgl6`
    /// for the default sweep counts.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::InvalidArgument(format!(
                "unknown method '{s}' (expected upsilon<p>q<q|exact>, psi11, rk4, rkgl<order>[rho<n>])"
            ))
        };
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "psi11" => return Ok(Method::Psi11),
            "rk4" => return Ok(Method::Rk4),
            _ => {}
        }
        if let Some(rest) = s.strip_prefix("upsilon") {
            let (p, q) = rest.split_once('q').ok_or_else(bad)?;
            let p: u32 = p.parse().map_err(|_| bad())?;
            let trunc = if q == "exact" {
                Truncation::Exact
            } else {
                Truncation::series(q.parse().map_err(|_| bad())?)?
            };
            return Method::upsilon(p, trunc);
        }
        if let Some(rest) = s.strip_prefix("rkgl") {
            let (order, rho) = match rest.split_once("rho") {
                Some((o, r)) => (o, Some(r)),
                None => (rest, None),
            };
            let order: usize = order.parse().map_err(|_| bad())?;
            return match rho {
                None => Method::rkgl(order),
                Some(r) => {
                    if !order.is_multiple_of(2) {
                        return Err(bad());
                    }
                    Ok(Method::Rkgl(ImplicitRkConfig::new(order / 2, r.parse().map_err(|_| bad())?)?))
                }
            };
        }
        Err(bad())
    }
}
