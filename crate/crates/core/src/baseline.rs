//! Runge–Kutta baselines on the first-order form z' = A(t)z with
//! A = [[0, I], [−M(t), 0]]: classical RK4 and the implicit Gauss–Legendre
//! methods with a fixed number of fixed-point sweeps.

use crate::error::{Error, Result};
use crate::ledger::CostLedger;
use crate::linalg::{add_scaled, FundamentalMatrix, PhasePoint};
use crate::problem::LinearProblem;

/// Stage norm growth (relative to the current state) that counts as
/// divergence of the fixed-point solve.
const DIVERGENCE_RATIO: f64 = 1e6;

/// A state the RK baselines can advance: either a phase point or the
/// fundamental matrix.
pub trait LinearState: Clone {
    fn dim(&self) -> usize;
    /// A(t)·self: one 𝒱 for vectors, two 𝒞 for the fundamental matrix.
    fn apply_a(&self, problem: &dyn LinearProblem, t: f64, ledger: &CostLedger) -> Result<Self>;
    fn axpy(&mut self, alpha: f64, x: &Self);
    fn norm_l1(&self) -> f64;
    fn zeroed(&self) -> Self;
}

impl LinearState for PhasePoint {
    fn dim(&self) -> usize {
        self.q.len()
    }

    fn apply_a(&self, problem: &dyn LinearProblem, t: f64, ledger: &CostLedger) -> Result<Self> {
        let mq = problem.apply(t, &self.q, ledger)?;
        Ok(PhasePoint {
            q: self.p.clone(),
            p: -mq,
        })
    }

    fn axpy(&mut self, alpha: f64, x: &Self) {
        self.q.axpy(alpha, &x.q, 1.0);
        self.p.axpy(alpha, &x.p, 1.0);
    }

    fn norm_l1(&self) -> f64 {
        self.l1()
    }

    fn zeroed(&self) -> Self {
        PhasePoint::zeros(self.q.len())
    }
}

impl LinearState for FundamentalMatrix {
    fn dim(&self) -> usize {
        self.r()
    }

    fn apply_a(&self, problem: &dyn LinearProblem, t: f64, ledger: &CostLedger) -> Result<Self> {
        let m = problem.eval(t)?;
        ledger.add_matmat(2);
        let m = m.as_mat();
        Ok(FundamentalMatrix {
            b11: self.b21.clone(),
            b12: self.b22.clone(),
            b21: -(m * &self.b11),
            b22: -(m * &self.b12),
        })
    }

    fn axpy(&mut self, alpha: f64, x: &Self) {
        add_scaled(&mut self.b11, alpha, &x.b11);
        add_scaled(&mut self.b12, alpha, &x.b12);
        add_scaled(&mut self.b21, alpha, &x.b21);
        add_scaled(&mut self.b22, alpha, &x.b22);
    }

    fn norm_l1(&self) -> f64 {
        self.l1()
    }

    fn zeroed(&self) -> Self {
        let r = self.r();
        FundamentalMatrix {
            b11: crate::linalg::Mat::zeros(r, r),
            b12: crate::linalg::Mat::zeros(r, r),
            b21: crate::linalg::Mat::zeros(r, r),
            b22: crate::linalg::Mat::zeros(r, r),
        }
    }
}

fn check_dim<S: LinearState>(state: &S, problem: &dyn LinearProblem) -> Result<()> {
    if state.dim() != problem.dim() {
        return Err(Error::DimensionMismatch {
            expected: problem.dim(),
            found: state.dim(),
        });
    }
    Ok(())
}

/// Classical four-stage RK4.
pub fn rk4_step<S: LinearState>(
    state: &mut S,
    problem: &dyn LinearProblem,
    t_n: f64,
    h: f64,
    ledger: &CostLedger,
) -> Result<()> {
    check_dim(state, problem)?;
    let k1 = state.apply_a(problem, t_n, ledger)?;
    let mut y = state.clone();
    y.axpy(0.5 * h, &k1);
    let k2 = y.apply_a(problem, t_n + 0.5 * h, ledger)?;
    let mut y = state.clone();
    y.axpy(0.5 * h, &k2);
    let k3 = y.apply_a(problem, t_n + 0.5 * h, ledger)?;
    let mut y = state.clone();
    y.axpy(h, &k3);
    let k4 = y.apply_a(problem, t_n + h, ledger)?;
    state.axpy(h / 6.0, &k1);
    state.axpy(h / 3.0, &k2);
    state.axpy(h / 3.0, &k3);
    state.axpy(h / 6.0, &k4);
    Ok(())
}

/// Gauss–Legendre collocation tableau.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendreTableau {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

impl GaussLegendreTableau {
    pub fn new(stages: usize) -> Result<Self> {
        match stages {
            2 => {
                let s3 = 3f64.sqrt();
                Ok(Self {
                    a: vec![vec![0.25, 0.25 - s3 / 6.0], vec![0.25 + s3 / 6.0, 0.25]],
                    b: vec![0.5, 0.5],
                    c: vec![0.5 - s3 / 6.0, 0.5 + s3 / 6.0],
                })
            }
            3 => {
                let s15 = 15f64.sqrt();
                Ok(Self {
                    a: vec![
                        vec![5.0 / 36.0, 2.0 / 9.0 - s15 / 15.0, 5.0 / 36.0 - s15 / 30.0],
                        vec![5.0 / 36.0 + s15 / 24.0, 2.0 / 9.0, 5.0 / 36.0 - s15 / 24.0],
                        vec![5.0 / 36.0 + s15 / 30.0, 2.0 / 9.0 + s15 / 15.0, 5.0 / 36.0],
                    ],
                    b: vec![5.0 / 18.0, 4.0 / 9.0, 5.0 / 18.0],
                    c: vec![0.5 - s15 / 10.0, 0.5, 0.5 + s15 / 10.0],
                })
            }
            _ => Err(Error::InvalidArgument(format!(
                "Gauss-Legendre methods with {stages} stages are not provided (use 2 or 3)"
            ))),
        }
    }

    pub fn stages(&self) -> usize {
        self.b.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ImplicitRkConfig {
    pub stages: usize,
    pub iterations: usize,
}

impl ImplicitRkConfig {
    /// ρ = 4 for two stages and ρ = 6 for three.
    pub fn with_default_iterations(stages: usize) -> Result<Self> {
        let iterations = match stages {
            2 => 4,
            3 => 6,
            _ => return Err(Error::InvalidArgument(format!("unsupported stage count {stages}"))),
        };
        Self::new(stages, iterations)
    }

    pub fn new(stages: usize, iterations: usize) -> Result<Self> {
        if iterations == 0 {
            return Err(Error::InvalidArgument("at least one fixed-point sweep is required".into()));
        }
        GaussLegendreTableau::new(stages)?;
        Ok(Self { stages, iterations })
    }

    pub fn order(&self) -> usize {
        2 * self.stages
    }
}

/// Gauss–Legendre step with exactly `iterations` fixed-point sweeps on
/// the stage slopes, starting from zero slopes (so the first sweep yields the
/// explicit Euler predictor).
pub fn gauss_legendre_irk_step<S: LinearState>(
    config: &ImplicitRkConfig,
    state: &mut S,
    problem: &dyn LinearProblem,
    t_n: f64,
    h: f64,
    ledger: &CostLedger,
) -> Result<()> {
    check_dim(state, problem)?;
    let tab = GaussLegendreTableau::new(config.stages)?;
    let s = tab.stages();
    let base = state.norm_l1().max(f64::MIN_POSITIVE);
    let mut slopes: Vec<S> = vec![state.zeroed(); s];
    for _ in 0..config.iterations {
        // Gauss–Seidel ordering: stage i already sees the refreshed slopes
        // of stages j < i from the current sweep.
        for i in 0..s {
            let mut y = state.clone();
            for (j, k) in slopes.iter().enumerate() {
                y.axpy(h * tab.a[i][j], k);
            }
            let ratio = y.norm_l1() / base;
            if !ratio.is_finite() || ratio > DIVERGENCE_RATIO {
                return Err(Error::Divergence { ratio });
            }
            slopes[i] = y.apply_a(problem, t_n + tab.c[i] * h, ledger)?;
        }
    }
    for (bi, k) in tab.b.iter().zip(&slopes) {
        state.axpy(h * bi, k);
    }
    Ok(())
}
