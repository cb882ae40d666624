use std::f64::consts::PI;

use num_complex::Complex64;

use super::{ExperimentSpec, ResultRow};
use crate::decomposition::{DecompositionScheme, Truncation};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::ledger::CostLedger;
use crate::linalg::{symplecticity_defect, FundamentalMatrix};
use crate::method::Method;
use crate::problem::LinearProblem;
use crate::problems::MathieuProblem;
use crate::reference::ReferenceCache;

/// Errors below this are treated as roundoff when fitting slopes.
pub const ROUNDOFF_FLOOR: f64 = 1e-12;
/// Errors are clipped here before the log-log interpolation of the best-q
/// ranking.
pub const BEST_Q_ERROR_FLOOR: f64 = 1e-15;
/// Number of step doublings per cell in the best-q search.
const BEST_Q_REFINEMENTS: u32 = 6;

/// `start, start + step, …` up to `stop` inclusive (within rounding).
pub fn omega_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || stop < start {
        return Err(Error::InvalidArgument("omega grid needs step > 0 and stop >= start".into()));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| start + i as f64 * step).collect())
}

fn monodromy_row(
    problem: &dyn LinearProblem,
    method: &Method,
    steps: usize,
    t1: f64,
    reference: &FundamentalMatrix,
) -> ResultRow {
    let h = t1 / steps as f64;
    let ledger = CostLedger::new();
    let mut phi = FundamentalMatrix::identity(problem.dim());
    match method.propagate_matrix(problem, &mut phi, 0.0, h, steps, &ledger) {
        Ok(()) => ResultRow {
            method: method.label(),
            h,
            steps,
            cost_c: ledger.matmat(),
            cost_v: ledger.matvec(),
            error_l1: phi.l1_distance(reference),
            defect: symplecticity_defect(&phi),
            wall_ms: 0.0,
            failure: None,
            numerical_failure: false,
        },
        Err(e) => ResultRow::failed(method, h, steps, &ledger, &e),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OmegaRow {
    pub omega: f64,
    pub row: ResultRow,
}

/// Mathieu monodromy error over [0, π] for every (ω, method) at fixed h.
pub fn error_vs_omega(
    methods: &[Method],
    eps: f64,
    h: f64,
    omegas: &[f64],
    tolerance: f64,
    execution: Execution,
    cache: &ReferenceCache,
) -> Result<Vec<OmegaRow>> {
    let steps = ExperimentSpec::steps_for_sizes(0.0, PI, &[h])?[0];
    if methods.is_empty() || omegas.is_empty() {
        return Err(Error::InvalidArgument("omega sweep needs methods and omegas".into()));
    }
    let cells: Vec<(f64, Method)> = omegas
        .iter()
        .flat_map(|&w| methods.iter().map(move |&m| (w, m)))
        .collect();
    Ok(execution.map(&cells, |&(omega, method)| {
        let problem = MathieuProblem::new(omega, eps);
        let row = match cache.matrix(&problem, 0.0, PI, tolerance) {
            Ok(reference) => monodromy_row(&problem, &method, steps, PI, &reference),
            Err(e) => ResultRow::failed(&method, PI / steps as f64, steps, &CostLedger::new(), &e),
        };
        OmegaRow { omega, row }
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestQRow {
    pub p: u32,
    pub eps: f64,
    pub omega: f64,
    /// Common cost (in 𝒞) at which the truncations are compared.
    pub budget: f64,
    /// The two q with the smallest error at `budget`.
    pub best: Vec<u32>,
    /// (q, error at `budget`); NaN when the runs failed.
    pub errors: Vec<(u32, f64)>,
}

/// (cost, error) for n0·2^k steps, k = 0..BEST_Q_REFINEMENTS.
fn error_curve(problem: &MathieuProblem, method: &Method, n0: usize, reference: &FundamentalMatrix) -> Vec<(f64, f64)> {
    (0..=BEST_Q_REFINEMENTS)
        .filter_map(|k| {
            let row = monodromy_row(problem, method, n0 << k, PI, reference);
            (row.failure.is_none() && row.error_l1.is_finite())
                .then(|| (row.cost_c as f64, row.error_l1.max(BEST_Q_ERROR_FLOOR)))
        })
        .collect()
}

/// Log-log interpolation of the error at `cost`; NaN outside the curve.
fn error_at_cost(curve: &[(f64, f64)], cost: f64) -> f64 {
    for w in curve.windows(2) {
        let ((c0, e0), (c1, e1)) = (w[0], w[1]);
        if c0 <= cost && cost <= c1 {
            let s = (cost.ln() - c0.ln()) / (c1.ln() - c0.ln());
            return (e0.ln() + s * (e1.ln() - e0.ln())).exp();
        }
    }
    f64::NAN
}

/// For each (p, ε, ω), ranks the series truncations q by the Mathieu
/// monodromy error they reach at a common cost budget. Each q is run with
/// n0·2^k steps, n0 chosen so that h·√ρ(M) ≤ π; the budget is the largest
/// cost among the q at the middle refinement, so every curve covers it.
pub fn best_q_table(
    p_set: &[u32],
    eps_set: &[f64],
    omega_set: &[f64],
    q_set: &[u32],
    tolerance: f64,
    execution: Execution,
    cache: &ReferenceCache,
) -> Result<Vec<BestQRow>> {
    if q_set.len() < 2 {
        return Err(Error::InvalidArgument("ranking needs at least two q values".into()));
    }
    let schemes: Vec<Vec<Method>> = p_set
        .iter()
        .map(|&p| {
            q_set
                .iter()
                .map(|&q| Ok(Method::Upsilon(DecompositionScheme::new(p, Truncation::series(q)?)?)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut cells = Vec::new();
    for (pi, &p) in p_set.iter().enumerate() {
        for &eps in eps_set {
            for &omega in omega_set {
                for (qi, &q) in q_set.iter().enumerate() {
                    cells.push((p, eps, omega, q, schemes[pi][qi]));
                }
            }
        }
    }
    let curves = execution.map(&cells, |&(_, eps, omega, _, method)| {
        let problem = MathieuProblem::new(omega, eps);
        let Ok(reference) = cache.matrix(&problem, 0.0, PI, tolerance) else {
            return Vec::new();
        };
        let n0 = ((omega * omega + eps.abs()).sqrt().ceil() as usize).max(4);
        error_curve(&problem, &method, n0, &reference)
    });
    let mid = BEST_Q_REFINEMENTS as usize / 2;
    Ok(cells
        .chunks(q_set.len())
        .zip(curves.chunks(q_set.len()))
        .map(|(cell, group)| {
            let (p, eps, omega) = (cell[0].0, cell[0].1, cell[0].2);
            let budget = group
                .iter()
                .filter_map(|c| c.get(mid).map(|x| x.0))
                .fold(f64::NAN, f64::max);
            let errors: Vec<(u32, f64)> = q_set
                .iter()
                .zip(group)
                .map(|(&q, curve)| (q, error_at_cost(curve, budget)))
                .collect();
            let mut ranked: Vec<(u32, f64)> = errors.iter().copied().filter(|e| !e.1.is_nan()).collect();
            ranked.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            BestQRow {
                p,
                eps,
                omega,
                budget,
                best: ranked.iter().take(2).map(|e| e.0).collect(),
                errors,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub eigenvalues: Vec<Complex64>,
    pub max_modulus: f64,
    /// max |λ| ≤ 1 + 1e-8.
    pub stable: bool,
    /// Every λ has a partner μ with |λμ − 1| ≤ 1e-6.
    pub reciprocal_pairs: bool,
    pub monodromy: FundamentalMatrix,
}

/// Spectrum of the numerical monodromy matrix over one period.
pub fn stability_analysis(problem: &dyn LinearProblem, method: &Method, h: f64) -> Result<StabilityReport> {
    let period = problem
        .period()
        .ok_or_else(|| Error::InvalidArgument("stability analysis needs a periodic problem".into()))?;
    let steps = ExperimentSpec::steps_for_sizes(0.0, period, &[h])?[0];
    let h = period / steps as f64;
    let mut phi = FundamentalMatrix::identity(problem.dim());
    method.propagate_matrix(problem, &mut phi, 0.0, h, steps, &CostLedger::new())?;
    let eigenvalues = phi.eigenvalues();
    let max_modulus = eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let reciprocal_pairs = eigenvalues
        .iter()
        .all(|l| eigenvalues.iter().any(|m| (l * m - 1.0).norm() <= 1e-6));
    Ok(StabilityReport {
        eigenvalues,
        max_modulus,
        stable: max_modulus <= 1.0 + 1e-8,
        reciprocal_pairs,
        monodromy: phi,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderEstimate {
    /// Least-squares slope of log(error) against log(h); None when fewer
    /// than two points lie above the roundoff floor.
    pub slope: Option<f64>,
    /// (h, error) for every run.
    pub points: Vec<(f64, f64)>,
}

/// Fits the observed order of `method` on the fundamental matrix over
/// [t0, t1] for a geometric sequence of step counts.
pub fn convergence_order(
    problem: &dyn LinearProblem,
    method: &Method,
    steps: &[usize],
    t0: f64,
    t1: f64,
    tolerance: f64,
    cache: &ReferenceCache,
) -> Result<OrderEstimate> {
    if steps.len() < 4 {
        return Err(Error::InvalidArgument("order estimation needs at least four step sizes".into()));
    }
    let ratio = steps[1] as f64 / steps[0] as f64;
    if steps.contains(&0) || ratio <= 1.0 || steps.windows(2).any(|w| (w[1] as f64 / w[0] as f64 - ratio).abs() > 1e-9) {
        return Err(Error::InvalidArgument("step counts must form an increasing geometric sequence".into()));
    }
    let reference = cache.matrix(problem, t0, t1, tolerance)?;
    let mut points = Vec::with_capacity(steps.len());
    for &n in steps {
        let h = (t1 - t0) / n as f64;
        let mut phi = FundamentalMatrix::identity(problem.dim());
        method.propagate_matrix(problem, &mut phi, t0, h, n, &CostLedger::new())?;
        points.push((h, phi.l1_distance(&reference)));
    }
    let used: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.1 >= ROUNDOFF_FLOOR)
        .map(|&(h, e)| (h.ln(), e.ln()))
        .collect();
    let slope = (used.len() >= 2).then(|| {
        let n = used.len() as f64;
        let mx = used.iter().map(|p| p.0).sum::<f64>() / n;
        let my = used.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = used.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = used.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    });
    Ok(OrderEstimate { slope, points })
}
