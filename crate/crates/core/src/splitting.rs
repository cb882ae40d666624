//! Magnus-splitting integrators: drift/kick compositions whose kicks are
//! weighted combinations of M at the three Gauss–Legendre nodes.

use log::warn;

use crate::error::{Error, Result};
use crate::ledger::CostLedger;
use crate::linalg::{FundamentalMatrix, PhasePoint, ShearState, SymmetricMatrix};
use crate::magnus::{gl_nodes, sample_nodes, GL_WEIGHTS};
use crate::problem::{check_len, LinearProblem};

/// Drift coefficients a₁..a₆ of the 11-stage sixth-order method; a₇..a₁₂
/// follow by a₁₃₋ᵢ = aᵢ.
const PSI11_A: [f64; 6] = [
    0.04648745479086313,
    -0.06069167116564293,
    0.21846652646340681,
    0.16805357948309270,
    0.31439236417035348,
    -0.18670825374207319,
];

/// Kick weights for rows 1..6; rows 7..11 follow by b₆₊ᵢ,ⱼ = b₆₋ᵢ,₄₋ⱼ.
const PSI11_B: [[f64; 3]; 6] = [
    [0.152309756970167, 0.078927889445323, -0.046907162912825],
    [0.006406269275594, -0.091413523927685, 0.043950351354379],
    [0.086778862327312, 0.051027214890409, -0.004050397550970],
    [0.066634120201024, 0.148499347182669, -0.011368920251338],
    [-0.020231991304321, 0.030206484536889, -0.021734660147529],
    [0.025991549816284, 0.009949620189233, 0.025991549816284],
];

const A_SUM_TOL: f64 = 1e-13;
const B_SUM_TOL: f64 = 1e-12;

/// Default h·√ρ̂(M) above which vector-mode runs log a stability warning.
pub const DEFAULT_STABILITY_THRESHOLD: f64 = 2.5;

/// m-stage composition: drifts a₁..a_{m+1}, kicks with
/// Cᵢ = −(bᵢ,₁M₁ + bᵢ,₂M₂ + bᵢ,₃M₃).
#[derive(Debug, Clone, PartialEq)]
pub struct SplittingTableau {
    pub a: Vec<f64>,
    pub b: Vec<[f64; 3]>,
    pub nodes: [f64; 3],
}

impl SplittingTableau {
    /// Checks lengths, the two mirror symmetries and the consistency sums.
    pub fn new(a: Vec<f64>, b: Vec<[f64; 3]>) -> Result<Self> {
        let t = Self { a, b, nodes: gl_nodes() };
        t.validate()?;
        Ok(t)
    }

    pub fn stages(&self) -> usize {
        self.b.len()
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.b.len();
        if self.a.len() != m + 1 {
            return Err(Error::InvalidTableau(format!(
                "{} drifts for {} kicks; expected {}",
                self.a.len(),
                m,
                m + 1
            )));
        }
        for i in 0..=m {
            if self.a[i] != self.a[m - i] {
                return Err(Error::InvalidTableau(format!("drift a{} breaks time symmetry", i + 1)));
            }
        }
        for i in 0..m {
            for j in 0..3 {
                if self.b[i][j] != self.b[m - 1 - i][2 - j] {
                    return Err(Error::InvalidTableau(format!(
                        "kick weight b{},{} breaks the mirror symmetry",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        let a_sum: f64 = self.a.iter().sum();
        if (a_sum - 1.0).abs() > A_SUM_TOL {
            return Err(Error::InvalidTableau(format!("drifts sum to {a_sum}, not 1")));
        }
        for j in 0..3 {
            let s: f64 = self.b.iter().map(|row| row[j]).sum();
            if (s - GL_WEIGHTS[j]).abs() > B_SUM_TOL {
                return Err(Error::InvalidTableau(format!(
                    "kick column {} sums to {s}, expected {}",
                    j + 1,
                    GL_WEIGHTS[j]
                )));
            }
        }
        Ok(())
    }

    /// Dense kick matrices C₁..C_m for one step.
    pub fn kick_matrices(&self, samples: &[SymmetricMatrix; 3]) -> Vec<SymmetricMatrix> {
        self.b
            .iter()
            .map(|w| {
                SymmetricMatrix::combination(&[(-w[0], &samples[0]), (-w[1], &samples[1]), (-w[2], &samples[2])])
            })
            .collect()
    }
}

/// The 11-stage sixth-order Magnus-splitting tableau.
pub fn tableau_psi11() -> Result<SplittingTableau> {
    let mut a = PSI11_A.to_vec();
    a.extend(PSI11_A.iter().rev());
    let mut b = PSI11_B.to_vec();
    for i in 1..=5 {
        let src = PSI11_B[5 - i];
        b.push([src[2], src[1], src[0]]);
    }
    SplittingTableau::new(a, b)
}

/// Applies the i-th kick of a composition to a state.
pub trait KickSet<S> {
    fn len(&self) -> usize;
    fn kick(&self, i: usize, state: &mut S, h: f64, ledger: &CostLedger) -> Result<()>;
}

/// Precomputed dense kick matrices; works for any shear state.
pub struct DenseKicks(pub Vec<SymmetricMatrix>);

impl<S: ShearState> KickSet<S> for DenseKicks {
    fn len(&self) -> usize {
        self.0.len()
    }

    fn kick(&self, i: usize, state: &mut S, h: f64, ledger: &CostLedger) -> Result<()> {
        state.kick(&self.0[i], h, ledger);
        Ok(())
    }
}

/// Kicks evaluated through the problem's operator form; each kick is one
/// combined application Σⱼ(−bᵢⱼ)M(tⱼ)·q.
pub struct OperatorKicks<'a> {
    pub problem: &'a dyn LinearProblem,
    pub times: [f64; 3],
    pub weights: &'a [[f64; 3]],
}

impl KickSet<PhasePoint> for OperatorKicks<'_> {
    fn len(&self) -> usize {
        self.weights.len()
    }

    fn kick(&self, i: usize, state: &mut PhasePoint, h: f64, ledger: &CostLedger) -> Result<()> {
        let w = &self.weights[i];
        let terms = [
            (self.times[0], -w[0]),
            (self.times[1], -w[1]),
            (self.times[2], -w[2]),
        ];
        let y = self.problem.apply_combination(&terms, &state.q, ledger)?;
        state.p.axpy(h, &y, 1.0);
        Ok(())
    }
}

/// Drift a₁, kick C₁, drift a₂, …, kick C_m, drift a_{m+1}.
pub fn generic_composition<S, K>(a: &[f64], kicks: &K, state: &mut S, h: f64, ledger: &CostLedger) -> Result<()>
where
    S: ShearState,
    K: KickSet<S>,
{
    if a.len() != kicks.len() + 1 {
        return Err(Error::LengthMismatch(format!(
            "{} drift coefficients for {} kicks",
            a.len(),
            kicks.len()
        )));
    }
    state.drift(h * a[0]);
    for i in 0..kicks.len() {
        kicks.kick(i, state, h, ledger)?;
        state.drift(h * a[i + 1]);
    }
    Ok(())
}

/// One step in vector mode through the operator (or default dense) kick.
pub fn step_psi_vector(
    tableau: &SplittingTableau,
    state: &mut PhasePoint,
    problem: &dyn LinearProblem,
    t_n: f64,
    h: f64,
    ledger: &CostLedger,
) -> Result<()> {
    check_len(problem.dim(), &state.q)?;
    check_len(problem.dim(), &state.p)?;
    let c = tableau.nodes;
    let kicks = OperatorKicks {
        problem,
        times: [t_n + c[0] * h, t_n + c[1] * h, t_n + c[2] * h],
        weights: &tableau.b,
    };
    generic_composition(&tableau.a, &kicks, state, h, ledger)
}

/// One step on a fundamental matrix (2 𝒞 per kick).
pub fn step_psi_matrix(
    tableau: &SplittingTableau,
    phi: &mut FundamentalMatrix,
    problem: &dyn LinearProblem,
    t_n: f64,
    h: f64,
    ledger: &CostLedger,
) -> Result<()> {
    if phi.r() != problem.dim() {
        return Err(Error::DimensionMismatch {
            expected: problem.dim(),
            found: phi.r(),
        });
    }
    let samples = sample_nodes(problem, t_n, h)?;
    let kicks = DenseKicks(tableau.kick_matrices(&samples.m));
    generic_composition(&tableau.a, &kicks, phi, h, ledger)
}

/// Logs a warning when h·√ρ̂(M(t)) exceeds `threshold`.
pub fn check_stability(problem: &dyn LinearProblem, t: f64, h: f64, threshold: f64) -> bool {
    match problem.spectral_radius_estimate(t) {
        Some(rho) if h.abs() * rho.max(0.0).sqrt() > threshold => {
            warn!(
                "h·√ρ(M) = {:.3} exceeds {threshold}; explicit splitting may be unstable",
                h.abs() * rho.sqrt()
            );
            false
        }
        _ => true,
    }
}
