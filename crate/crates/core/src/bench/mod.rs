//! Experiment harness: error-versus-cost runs, parameter sweeps and
//! spectral/convergence diagnostics, with CSV output.

mod analysis;
mod config;
mod csv;

use std::time::Instant;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::ledger::CostLedger;
use crate::linalg::{symplecticity_defect, FundamentalMatrix};
use crate::method::Method;
use crate::reference::{ReferenceCache, DEFAULT_TOLERANCE};

pub use analysis::{
    best_q_table, convergence_order, error_vs_omega, omega_grid, stability_analysis, BestQRow, OmegaRow,
    OrderEstimate, StabilityReport, BEST_Q_ERROR_FLOOR, ROUNDOFF_FLOOR,
};
pub use config::{parse_key_values, parse_list, parse_real, KeyValues, Mode, ProblemConfig};
pub use csv::{format_real, write_best_q_csv, write_omega_csv, write_rows_csv, CSV_HEADER};

/// Everything needed to reproduce one error-versus-cost run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub problem: ProblemConfig,
    pub methods: Vec<Method>,
    pub steps: Vec<usize>,
    pub t0: f64,
    pub t1: f64,
    pub mode: Mode,
    pub tolerance: f64,
    pub execution: Execution,
    /// Record wall-clock time per cell; off by default so that output is
    /// reproducible byte for byte.
    pub timing: bool,
}

impl ExperimentSpec {
    pub fn new(problem: ProblemConfig, methods: Vec<Method>, steps: Vec<usize>) -> Result<Self> {
        let t1 = problem.default_t1();
        let spec = Self {
            problem,
            methods,
            steps,
            t0: 0.0,
            t1,
            mode: Mode::Matrix,
            tolerance: DEFAULT_TOLERANCE,
            execution: Execution::default(),
            timing: false,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::InvalidArgument("no methods given".into()));
        }
        if self.steps.is_empty() || self.steps.contains(&0) {
            return Err(Error::InvalidArgument("step counts must be given and at least 1".into()));
        }
        if !(self.t1 > self.t0) {
            return Err(Error::InvalidArgument(format!("empty interval [{}, {}]", self.t0, self.t1)));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidArgument("tolerance must be positive".into()));
        }
        if self.mode == Mode::Vector {
            if let Some(m) = self.methods.iter().find(|m| !m.supports_vector()) {
                return Err(Error::InvalidArgument(format!("{m} has no vector mode")));
            }
        }
        Ok(())
    }

    /// Step counts from step sizes; each h must divide the interval.
    pub fn steps_for_sizes(t0: f64, t1: f64, sizes: &[f64]) -> Result<Vec<usize>> {
        sizes
            .iter()
            .map(|&h| {
                let n = (t1 - t0) / h;
                if !(h > 0.0) || n.round() < 1.0 || (n - n.round()).abs() > 1e-9 * n.max(1.0) {
                    Err(Error::InvalidArgument(format!(
                        "step size {h} does not divide [{t0}, {t1}] into a whole number of steps"
                    )))
                } else {
                    Ok(n.round() as usize)
                }
            })
            .collect()
    }

    /// Builds a spec from `key=value` pairs. Recognized keys: the problem
    /// keys, `methods`, `steps` or `h` (comma-separated lists), `t0`, `t1`,
    /// `mode`, `tolerance`, `execution`, `timing`.
    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        let problem = ProblemConfig::from_key_values(kv)?;
        let methods = parse_list(
            kv.get("methods").map(String::as_str).ok_or_else(|| Error::InvalidArgument("methods missing".into()))?,
            |m| m.parse::<Method>(),
        )?;
        let t0 = kv.get("t0").map(|v| parse_real(v)).unwrap_or(Ok(0.0))?;
        let t1 = kv.get("t1").map(|v| parse_real(v)).unwrap_or(Ok(problem.default_t1()))?;
        let steps = match (kv.get("steps"), kv.get("h")) {
            (Some(_), Some(_)) => return Err(Error::InvalidArgument("give either steps or h, not both".into())),
            (Some(s), None) => parse_list(s, |x| {
                x.parse::<usize>()
                    .map_err(|_| Error::InvalidArgument(format!("bad step count '{x}'")))
            })?,
            (None, Some(h)) => Self::steps_for_sizes(t0, t1, &parse_list(h, parse_real)?)?,
            (None, None) => return Err(Error::InvalidArgument("steps or h missing".into())),
        };
        let spec = Self {
            problem,
            methods,
            steps,
            t0,
            t1,
            mode: kv.get("mode").map(|m| m.parse()).unwrap_or(Ok(Mode::Matrix))?,
            tolerance: kv.get("tolerance").map(|v| parse_real(v)).unwrap_or(Ok(DEFAULT_TOLERANCE))?,
            execution: kv.get("execution").map(|e| e.parse()).unwrap_or(Ok(Execution::default()))?,
            timing: kv.get("timing").is_some_and(|v| v == "true" || v == "1"),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Reproducible description; `execution` and `timing` are left out since
    /// they do not affect the data.
    pub fn to_key_values(&self) -> KeyValues {
        let mut kv = self.problem.to_key_values();
        kv.insert(
            "methods".into(),
            self.methods.iter().map(Method::label).collect::<Vec<_>>().join(","),
        );
        kv.insert(
            "steps".into(),
            self.steps.iter().map(usize::to_string).collect::<Vec<_>>().join(","),
        );
        kv.insert("t0".into(), format!("{:?}", self.t0));
        kv.insert("t1".into(), format!("{:?}", self.t1));
        kv.insert("mode".into(), self.mode.to_string());
        kv.insert("tolerance".into(), format!("{:?}", self.tolerance));
        kv
    }

    fn cells(&self) -> Vec<(Method, usize)> {
        self.methods
            .iter()
            .flat_map(|&m| self.steps.iter().map(move |&n| (m, n)))
            .collect()
    }
}

/// One (method, step size) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub method: String,
    pub h: f64,
    pub steps: usize,
    pub cost_c: u64,
    pub cost_v: u64,
    pub error_l1: f64,
    /// Symplecticity defect of the propagated Φ; NaN in vector mode.
    pub defect: f64,
    pub wall_ms: f64,
    pub failure: Option<String>,
    /// Whether the failure was numerical (as opposed to a bad request).
    pub numerical_failure: bool,
}

impl ResultRow {
    fn failed(method: &Method, h: f64, steps: usize, ledger: &CostLedger, e: &Error) -> Self {
        Self {
            method: method.label(),
            h,
            steps,
            cost_c: ledger.matmat(),
            cost_v: ledger.matvec(),
            error_l1: f64::NAN,
            defect: f64::NAN,
            wall_ms: 0.0,
            failure: Some(e.to_string()),
            numerical_failure: e.is_numerical(),
        }
    }
}

/// Result of a harness run: the rows plus reference metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub rows: Vec<ResultRow>,
    pub metadata: Vec<String>,
}

impl RunOutput {
    pub fn any_numerical_failure(&self) -> bool {
        self.rows.iter().any(|r| r.numerical_failure)
    }

    pub fn any_failure(&self) -> bool {
        self.rows.iter().any(|r| r.failure.is_some())
    }
}

fn elapsed_ms(start: Instant, timing: bool) -> f64 {
    if timing {
        start.elapsed().as_secs_f64() * 1e3
    } else {
        0.0
    }
}

/// Propagates Φ from the identity with every (method, h) and measures the L1
/// error against the reference fundamental matrix at t1.
pub fn run_fundamental(spec: &ExperimentSpec, cache: &ReferenceCache) -> Result<RunOutput> {
    spec.validate()?;
    if spec.mode != Mode::Matrix {
        return Err(Error::InvalidArgument("run_fundamental needs matrix mode".into()));
    }
    let problem = spec.problem.build()?;
    let reference = cache.matrix(problem.as_ref(), spec.t0, spec.t1, spec.tolerance)?;
    let r = problem.dim();
    let rows = spec.execution.map(&spec.cells(), |&(method, steps)| {
        let h = (spec.t1 - spec.t0) / steps as f64;
        let ledger = CostLedger::new();
        let start = Instant::now();
        let mut phi = FundamentalMatrix::identity(r);
        match method.propagate_matrix(problem.as_ref(), &mut phi, spec.t0, h, steps, &ledger) {
            Ok(()) => ResultRow {
                method: method.label(),
                h,
                steps,
                cost_c: ledger.matmat(),
                cost_v: ledger.matvec(),
                error_l1: phi.l1_distance(&reference),
                defect: symplecticity_defect(&phi),
                wall_ms: elapsed_ms(start, spec.timing),
                failure: None,
                numerical_failure: false,
            },
            Err(e) => ResultRow::failed(&method, h, steps, &ledger, &e),
        }
    });
    Ok(RunOutput {
        rows,
        metadata: vec!["reference=magnus6-step-halving".into(), "error=L1 of fundamental matrix".into()],
    })
}

/// Propagates the problem's initial state and measures the L1 error of the
/// positions at t1, against the analytic solution when one is known.
pub fn run_vector(spec: &ExperimentSpec, cache: &ReferenceCache) -> Result<RunOutput> {
    spec.validate()?;
    if spec.mode != Mode::Vector {
        return Err(Error::InvalidArgument("run_vector needs vector mode".into()));
    }
    let problem = spec.problem.build()?;
    let z0 = spec.problem.initial_state()?;
    let (reference, source) = match spec.problem.analytic_positions(spec.t1)? {
        Some(q) => (q, "analytic"),
        None => (
            cache.vector(problem.as_ref(), &z0, spec.t0, spec.t1, spec.tolerance)?.q.clone(),
            "psi11-step-halving",
        ),
    };
    let rows = spec.execution.map(&spec.cells(), |&(method, steps)| {
        let h = (spec.t1 - spec.t0) / steps as f64;
        let ledger = CostLedger::new();
        let start = Instant::now();
        let mut z = z0.clone();
        match method.propagate_vector(problem.as_ref(), &mut z, spec.t0, h, steps, &ledger) {
            Ok(()) => ResultRow {
                method: method.label(),
                h,
                steps,
                cost_c: ledger.matmat(),
                cost_v: ledger.matvec(),
                error_l1: (&z.q - &reference).lp_norm(1),
                defect: f64::NAN,
                wall_ms: elapsed_ms(start, spec.timing),
                failure: None,
                numerical_failure: false,
            },
            Err(e) => ResultRow::failed(&method, h, steps, &ledger, &e),
        }
    });
    Ok(RunOutput {
        rows,
        metadata: vec![format!("reference={source}"), "error=L1 of positions".into()],
    })
}

/// Dispatches on the spec's mode.
pub fn run(spec: &ExperimentSpec, cache: &ReferenceCache) -> Result<RunOutput> {
    match spec.mode {
        Mode::Matrix => run_fundamental(spec, cache),
        Mode::Vector => run_vector(spec, cache),
    }
}
