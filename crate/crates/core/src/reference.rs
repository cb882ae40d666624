//! Reference solutions by step halving with the most accurate propagators
//! available: the sixth-order Magnus oracle for fundamental matrices (dense
//! exponential, small r) and the splitting method for state vectors.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use log::{debug, warn};

use crate::decomposition::{DecompositionScheme, Truncation};
use crate::error::{Error, Result};
use crate::ledger::CostLedger;
use crate::linalg::{FundamentalMatrix, PhasePoint};
use crate::magnus::{propagate_oracle, ORACLE_MAX_DIM};
use crate::problem::LinearProblem;
use crate::splitting::{step_psi_vector, tableau_psi11};

/// Absolute L1 tolerance per entry.
pub const DEFAULT_TOLERANCE: f64 = 1e-12;
pub const MAX_HALVINGS: usize = 20;
/// A reference whose step-halving differences start growing is accepted if
/// the best difference is within this factor of the tolerance.
pub const ROUNDOFF_SLACK: f64 = 1e3;

/// Initial step: at most 0.1 and at most 1/√ρ̂(M(t0)).
fn initial_steps(problem: &dyn LinearProblem, t0: f64, t1: f64) -> usize {
    let mut h = 0.1f64;
    if let Some(rho) = problem.spectral_radius_estimate(t0) {
        if rho > 0.0 {
            h = h.min(1.0 / rho.sqrt());
        }
    }
    ((t1 - t0) / h).ceil().max(1.0) as usize
}

fn halve_until<T: Clone, D>(
    problem: &dyn LinearProblem,
    t0: f64,
    t1: f64,
    threshold: impl Fn(&T) -> f64,
    mut run: impl FnMut(usize) -> Result<T>,
    distance: D,
) -> Result<T>
where
    D: Fn(&T, &T) -> f64,
{
    if !(t1 > t0) {
        return Err(Error::InvalidArgument(format!("reference interval [{t0}, {t1}] is empty")));
    }
    let mut steps = initial_steps(problem, t0, t1);
    let mut prev = run(steps)?;
    let mut history = Vec::new();
    let mut best: Option<(f64, T)> = None;
    for _ in 0..MAX_HALVINGS {
        steps *= 2;
        let next = run(steps)?;
        let diff = distance(&prev, &next);
        history.push(diff);
        debug!("reference: {steps} steps, difference {diff:.3e}");
        if diff <= threshold(&next) {
            return Ok(next);
        }
        if let [.., a, b, c] = history[..] {
            if c > b && b > a {
                // round-off dominates; halving further only hurts
                if let Some((d, value)) = best.take() {
                    if d <= ROUNDOFF_SLACK * threshold(&value) {
                        warn!("reference limited by round-off: best difference {d:.3e} (tolerance not reached)");
                        return Ok(value);
                    }
                }
                break;
            }
        }
        prev = next.clone();
        if best.as_ref().is_none_or(|(d, _)| diff < *d) {
            best = Some((diff, next));
        }
    }
    Err(Error::ReferenceNotConverged {
        halvings: history.len(),
        history,
    })
}

/// Φ(t1, t0) computed to within `tolerance` per entry (scaled by the largest
/// entry when that exceeds one).
pub fn compute_reference_matrix(
    problem: &dyn LinearProblem,
    t0: f64,
    t1: f64,
    tolerance: f64,
) -> Result<FundamentalMatrix> {
    let r = problem.dim();
    let entries = (2 * r * 2 * r) as f64;
    let fallback = DecompositionScheme::new(6, Truncation::Exact)?;
    halve_until(
        problem,
        t0,
        t1,
        |phi: &FundamentalMatrix| tolerance * entries * phi.max_abs().max(1.0),
        |steps| {
            let h = (t1 - t0) / steps as f64;
            let mut phi = FundamentalMatrix::identity(r);
            if r <= ORACLE_MAX_DIM {
                propagate_oracle(problem, &mut phi, t0, h, steps)?;
            } else {
                fallback.propagate(&mut phi, problem, t0, h, steps, true, &CostLedger::new())?;
            }
            Ok(phi)
        },
        |a, b| a.l1_distance(b),
    )
}

/// The state at t1 starting from `z0` at t0.
pub fn compute_reference_vector(
    problem: &dyn LinearProblem,
    z0: &PhasePoint,
    t0: f64,
    t1: f64,
    tolerance: f64,
) -> Result<PhasePoint> {
    let tab = tableau_psi11()?;
    let entries = (2 * problem.dim()) as f64;
    halve_until(
        problem,
        t0,
        t1,
        |z: &PhasePoint| tolerance * entries * z.q.amax().max(z.p.amax()).max(1.0),
        |steps| {
            let h = (t1 - t0) / steps as f64;
            let mut z = z0.clone();
            let ledger = CostLedger::new();
            for n in 0..steps {
                step_psi_vector(&tab, &mut z, problem, t0 + n as f64 * h, h, &ledger)?;
            }
            Ok(z)
        },
        |a, b| a.l1_distance(b),
    )
}

/// Memoizes reference solutions of problems that expose a cache key. Safe for
/// concurrent use; two workers racing on the same key may both compute it.
#[derive(Default)]
pub struct ReferenceCache {
    matrices: Mutex<HashMap<String, Arc<FundamentalMatrix>>>,
    vectors: Mutex<HashMap<String, Arc<PhasePoint>>>,
}

impl ReferenceCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Process-wide cache.
    pub fn global() -> &'static ReferenceCache {
        static CACHE: OnceLock<ReferenceCache> = OnceLock::new();
        CACHE.get_or_init(ReferenceCache::new)
    }

    pub fn matrix(
        &self,
        problem: &dyn LinearProblem,
        t0: f64,
        t1: f64,
        tolerance: f64,
    ) -> Result<Arc<FundamentalMatrix>> {
        let Some(key) = problem.cache_key() else {
            return compute_reference_matrix(problem, t0, t1, tolerance).map(Arc::new);
        };
        let key = format!("{key}|{t0:?}|{t1:?}|{tolerance:?}");
        if let Some(hit) = self.matrices.lock().unwrap().get(&key) {
            return Ok(hit.clone());
        }
        let phi = Arc::new(compute_reference_matrix(problem, t0, t1, tolerance)?);
        self.matrices.lock().unwrap().insert(key, phi.clone());
        Ok(phi)
    }

    pub fn vector(
        &self,
        problem: &dyn LinearProblem,
        z0: &PhasePoint,
        t0: f64,
        t1: f64,
        tolerance: f64,
    ) -> Result<Arc<PhasePoint>> {
        let Some(key) = problem.cache_key() else {
            return compute_reference_vector(problem, z0, t0, t1, tolerance).map(Arc::new);
        };
        let mut fingerprint: u64 = 0xcbf29ce484222325;
        for x in z0.q.iter().chain(z0.p.iter()) {
            fingerprint = (fingerprint ^ x.to_bits()).wrapping_mul(0x100000001b3);
        }
        let key = format!("{key}|{fingerprint:016x}|{t0:?}|{t1:?}|{tolerance:?}");
        if let Some(hit) = self.vectors.lock().unwrap().get(&key) {
            return Ok(hit.clone());
        }
        let z = Arc::new(compute_reference_vector(problem, z0, t0, t1, tolerance)?);
        self.vectors.lock().unwrap().insert(key, z.clone());
        Ok(z)
    }

    pub fn len(&self) -> usize {
        self.matrices.lock().unwrap().len() + self.vectors.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Cached Φ(t1, t0) through the global cache.
pub fn reference_solution(
    problem: &dyn LinearProblem,
    t0: f64,
    t1: f64,
    tolerance: f64,
) -> Result<Arc<FundamentalMatrix>> {
    ReferenceCache::global().matrix(problem, t0, t1, tolerance)
}
