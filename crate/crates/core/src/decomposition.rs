//! Magnus-decomposition integrators Υ₁⁽⁴·ᑫ⁾ and Υ₂⁽⁶·ᑫ⁾.
//!
//! Each step is a product of symmetric lower/upper shears. The block
//! exponential exp(h[[0, I], [D, 0]]) is factored as L(R)·U(Q)·L(R) with
//! Q = sinh(h√D)/√D and R = √D·tanh(h√D/2), both replaced by truncated
//! series in D. The exact variants instead evaluate the block exponential
//! through an eigendecomposition of D.

use log::warn;

use crate::error::{Error, Result};
use crate::ledger::CostLedger;
use crate::linalg::{matrix_poly_eval, sym_eigendecomposition, PowerCache, ShearState, SymmetricMatrix};
use crate::magnus::{combos, sample_nodes, Combos, NodeSamples};
use crate::problem::LinearProblem;

/// sinh series: coefficient of Dʲh²ʲ⁺¹ is 1/(2j+1)!.
const Q_COEFFS: [f64; 7] = [
    1.0,
    1.0 / 6.0,
    1.0 / 120.0,
    1.0 / 5040.0,
    1.0 / 362880.0,
    1.0 / 39916800.0,
    1.0 / 6227020800.0,
];

/// √D·tanh(h√D/2) series: coefficient of Dʲh²ʲ⁻¹, j = 1..6.
const R_COEFFS: [f64; 6] = [
    1.0 / 2.0,
    -1.0 / 24.0,
    1.0 / 240.0,
    -17.0 / 40320.0,
    31.0 / 725760.0,
    -691.0 / 159667200.0,
];

pub const SUPPORTED_Q: [u32; 4] = [6, 8, 10, 12];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Truncation {
    Series(u32),
    Exact,
}

impl Truncation {
    pub fn series(q: u32) -> Result<Self> {
        if !SUPPORTED_Q.contains(&q) {
            return Err(Error::InvalidArgument(format!(
                "series truncation q must be one of {SUPPORTED_Q:?}, got {q}"
            )));
        }
        Ok(Truncation::Series(q))
    }
}

impl std::fmt::Display for Truncation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Truncation::Series(q) => write!(f, "{q}"),
            Truncation::Exact => f.write_str("exact"),
        }
    }
}

/// Truncated Q⁽ᑫ⁺²⁾ and R⁽ᑫ⁾ for one D.
#[derive(Debug, Clone)]
pub struct QRPair {
    pub q: SymmetricMatrix,
    pub r: SymmetricMatrix,
    /// False when the Gershgorin estimate of h·ρ(√D) reaches π.
    pub within_radius: bool,
}

/// Series for Q and R sharing the powers D², …, D^{q/2}
/// (q/2 − 1 = ⌊(q−1)/2⌋ products).
pub fn qr_series(d: &SymmetricMatrix, h: f64, q: u32, ledger: &CostLedger) -> Result<QRPair> {
    if !q.is_multiple_of(2) || !(6..=12).contains(&q) {
        return Err(Error::InvalidArgument(format!("q must be even in 6..=12, got {q}")));
    }
    let within_radius = h.abs() * d.gershgorin_radius().sqrt() < std::f64::consts::PI;
    if !within_radius {
        warn!(
            "h·ρ(√D) ≈ {:.3} is not below π; the shear factorization of the exponential is outside its range",
            h.abs() * d.gershgorin_radius().sqrt()
        );
    }
    let top = (q / 2) as usize;
    let mut cache = PowerCache::new(d.clone());
    let h2 = h * h;

    let mut q_coeffs = Vec::with_capacity(top + 1);
    let mut hp = h;
    for c in &Q_COEFFS[..=top] {
        q_coeffs.push(c * hp);
        hp *= h2;
    }
    let mut r_coeffs = Vec::with_capacity(top + 1);
    r_coeffs.push(0.0);
    let mut hp = h;
    for c in &R_COEFFS[..top] {
        r_coeffs.push(c * hp);
        hp *= h2;
    }
    // evaluating R first fills the cache up to D^{q/2}; Q reuses it
    let r = matrix_poly_eval(&mut cache, &r_coeffs, ledger)?;
    let q = matrix_poly_eval(&mut cache, &q_coeffs, ledger)?;
    Ok(QRPair { q, r, within_radius })
}

/// The three blocks of exp(h[[0, I], [C, 0]]) = [[ch, sh], [csh, ch]] with
/// ch = cosh(h√C), sh = sinh(h√C)/√C, csh = √C·sinh(h√C).
#[derive(Debug, Clone)]
pub struct BlockExponential {
    pub ch: SymmetricMatrix,
    pub sh: SymmetricMatrix,
    pub csh: SymmetricMatrix,
}

fn cosh_sqrt(lam: f64, h: f64) -> f64 {
    if lam >= 0.0 {
        (h * lam.sqrt()).cosh()
    } else {
        (h * (-lam).sqrt()).cos()
    }
}

fn sinhc_sqrt(lam: f64, h: f64) -> f64 {
    if lam == 0.0 {
        h
    } else if lam > 0.0 {
        let s = lam.sqrt();
        (h * s).sinh() / s
    } else {
        let s = (-lam).sqrt();
        (h * s).sin() / s
    }
}

fn sqrt_sinh(lam: f64, h: f64) -> f64 {
    if lam >= 0.0 {
        let s = lam.sqrt();
        s * (h * s).sinh()
    } else {
        let s = (-lam).sqrt();
        -s * (h * s).sin()
    }
}

/// Closed-form block exponential via C = VΛVᵀ. The three reconstructions
/// are charged one 𝒞 each.
pub fn exact_block_exponential(c: &SymmetricMatrix, h: f64, ledger: &CostLedger) -> Result<BlockExponential> {
    let eig = sym_eigendecomposition(c)?;
    ledger.add_matmat(3);
    Ok(BlockExponential {
        ch: eig.reconstruct_with(|l| cosh_sqrt(l, h)),
        sh: eig.reconstruct_with(|l| sinhc_sqrt(l, h)),
        csh: eig.reconstruct_with(|l| sqrt_sinh(l, h)),
    })
}

impl BlockExponential {
    pub fn apply<S: ShearState>(&self, state: &mut S, ledger: &CostLedger) {
        state.apply_blocks(&self.ch, &self.sh, &self.csh, &self.ch, ledger);
    }
}

/// Coefficients (C₁, C₂, D₁) of the fourth-order scheme.
pub fn coeffs4(combos: &Combos, samples: &NodeSamples) -> (SymmetricMatrix, SymmetricMatrix, SymmetricMatrix) {
    let s15 = 15f64.sqrt();
    // c1 is applied first; this sign gives the fourth-order commutator term
    let c1 = SymmetricMatrix::combination(&[(-s15 / 36.0, &combos.k), (5.0 / 36.0, &combos.l)]);
    let c2 = SymmetricMatrix::combination(&[(s15 / 36.0, &combos.k), (5.0 / 36.0, &combos.l)]);
    let d1 = -&samples.m[1];
    (c1, c2, d1)
}

/// Coefficients (C₁, C₂, D₁, D₂) of the sixth-order scheme. Forms F
/// (one 𝒞) if it is not cached yet.
pub fn coeffs6(
    combos: &mut Combos,
    samples: &NodeSamples,
    ledger: &CostLedger,
) -> (SymmetricMatrix, SymmetricMatrix, SymmetricMatrix, SymmetricMatrix) {
    let s15 = 15f64.sqrt();
    let f = combos.f(ledger).clone();
    let c1 = SymmetricMatrix::combination(&[
        (-s15 / 180.0, &combos.k),
        (1.0 / 18.0, &combos.l),
        (1.0 / 12960.0, &f),
    ]);
    let c2 = SymmetricMatrix::combination(&[
        (s15 / 180.0, &combos.k),
        (1.0 / 18.0, &combos.l),
        (1.0 / 12960.0, &f),
    ]);
    let kd = 4.0 / (3.0 * s15);
    let m2 = &samples.m[1];
    let d1 = SymmetricMatrix::combination(&[(-1.0, m2), (-kd, &combos.k), (1.0 / 6.0, &combos.l)]);
    let d2 = SymmetricMatrix::combination(&[(-1.0, m2), (kd, &combos.k), (1.0 / 6.0, &combos.l)]);
    (c1, c2, d1, d2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DecompositionOrder {
    Four,
    Six,
}

impl DecompositionOrder {
    pub fn from_p(p: u32) -> Result<Self> {
        match p {
            4 => Ok(Self::Four),
            6 => Ok(Self::Six),
            _ => Err(Error::InvalidArgument(format!("decomposition order must be 4 or 6, got {p}"))),
        }
    }

    pub fn p(self) -> u32 {
        match self {
            Self::Four => 4,
            Self::Six => 6,
        }
    }
}

/// One factor of a decomposition step, applied in sequence.
#[derive(Debug, Clone)]
enum Factor {
    Lower(SymmetricMatrix),
    Upper(SymmetricMatrix),
    Exp(BlockExponential),
}

/// Υ₁⁽⁴·ᑫ⁾ (one block exponential) or Υ₂⁽⁶·ᑫ⁾ (two half-step exponentials).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DecompositionScheme {
    pub order: DecompositionOrder,
    pub truncation: Truncation,
}

impl DecompositionScheme {
    pub fn new(p: u32, truncation: Truncation) -> Result<Self> {
        let order = DecompositionOrder::from_p(p)?;
        if let Truncation::Series(q) = truncation {
            Truncation::series(q)?;
        }
        Ok(Self { order, truncation })
    }

    pub fn label(&self) -> String {
        format!("upsilon{}q{}", self.order.p(), self.truncation)
    }

    /// Per-step cost in 𝒞 quoted alongside the methods, (1 + q/2) and
    /// (7 + q) for the series variants.
    pub fn advertised_cost(&self) -> f64 {
        match (self.order, self.truncation) {
            (DecompositionOrder::Four, Truncation::Series(q)) => 1.0 + q as f64 / 2.0,
            (DecompositionOrder::Six, Truncation::Series(q)) => 7.0 + q as f64,
            (DecompositionOrder::Four, Truncation::Exact) => 17.0 + 1.0 / 3.0,
            (DecompositionOrder::Six, Truncation::Exact) => 32.0 + 2.0 / 3.0,
        }
    }

    fn factors(&self, samples: &NodeSamples, ledger: &CostLedger) -> Result<Vec<Factor>> {
        let h = samples.h;
        let mut cmb = combos(samples);
        match self.order {
            DecompositionOrder::Four => {
                let (c1, c2, d1) = coeffs4(&cmb, samples);
                Ok(match self.truncation {
                    Truncation::Series(q) => {
                        let qr = qr_series(&d1, h, q, ledger)?;
                        vec![
                            Factor::Lower(SymmetricMatrix::combination(&[(h, &c1), (1.0, &qr.r)])),
                            Factor::Upper(qr.q),
                            Factor::Lower(SymmetricMatrix::combination(&[(h, &c2), (1.0, &qr.r)])),
                        ]
                    }
                    Truncation::Exact => vec![
                        Factor::Lower(c1.scale(h)),
                        Factor::Exp(exact_block_exponential(&d1, h, ledger)?),
                        Factor::Lower(c2.scale(h)),
                    ],
                })
            }
            DecompositionOrder::Six => {
                let (c1, c2, d1, d2) = coeffs6(&mut cmb, samples, ledger);
                let half = 0.5 * h;
                Ok(match self.truncation {
                    Truncation::Series(q) => {
                        let qr1 = qr_series(&d1, half, q, ledger)?;
                        let qr2 = qr_series(&d2, half, q, ledger)?;
                        vec![
                            Factor::Lower(SymmetricMatrix::combination(&[(h, &c1), (1.0, &qr1.r)])),
                            Factor::Upper(qr1.q),
                            Factor::Lower(&qr1.r + &qr2.r),
                            Factor::Upper(qr2.q),
                            Factor::Lower(SymmetricMatrix::combination(&[(h, &c2), (1.0, &qr2.r)])),
                        ]
                    }
                    Truncation::Exact => vec![
                        Factor::Lower(c1.scale(h)),
                        Factor::Exp(exact_block_exponential(&d1, half, ledger)?),
                        Factor::Exp(exact_block_exponential(&d2, half, ledger)?),
                        Factor::Lower(c2.scale(h)),
                    ],
                })
            }
        }
    }

    /// One self-contained step from t_n to t_n + h (no cross-step fusion).
    pub fn step<S: ShearState>(
        &self,
        state: &mut S,
        problem: &dyn LinearProblem,
        t_n: f64,
        h: f64,
        ledger: &CostLedger,
    ) -> Result<()> {
        check_dim(state.dim(), problem.dim())?;
        let samples = sample_nodes(problem, t_n, h)?;
        for f in self.factors(&samples, ledger)? {
            apply_factor(state, f, ledger);
        }
        Ok(())
    }

    /// `steps` steps of size h from t0. With `fuse`, the trailing lower shear
    /// of each step is merged with the leading lower shear of the next, which
    /// saves one shear application per step.
    pub fn propagate<S: ShearState>(
        &self,
        state: &mut S,
        problem: &dyn LinearProblem,
        t0: f64,
        h: f64,
        steps: usize,
        fuse: bool,
        ledger: &CostLedger,
    ) -> Result<()> {
        check_dim(state.dim(), problem.dim())?;
        let mut pending: Option<SymmetricMatrix> = None;
        for n in 0..steps {
            let samples = sample_nodes(problem, t0 + n as f64 * h, h)?;
            let mut factors = self.factors(&samples, ledger)?;
            if fuse {
                if let (Some(prev), Some(Factor::Lower(first))) = (pending.take(), factors.first_mut()) {
                    *first = &prev + first;
                }
                if let Some(Factor::Lower(_)) = factors.last() {
                    if let Some(Factor::Lower(last)) = factors.pop() {
                        pending = Some(last);
                    }
                }
            }
            for f in factors {
                apply_factor(state, f, ledger);
            }
        }
        if let Some(last) = pending {
            state.lower(&last, ledger);
        }
        Ok(())
    }
}

fn apply_factor<S: ShearState>(state: &mut S, f: Factor, ledger: &CostLedger) {
    match f {
        Factor::Lower(s) => state.lower(&s, ledger),
        Factor::Upper(q) => state.upper(&q, ledger),
        Factor::Exp(e) => e.apply(state, ledger),
    }
}

fn check_dim(state: usize, problem: usize) -> Result<()> {
    if state != problem {
        return Err(Error::DimensionMismatch {
            expected: problem,
            found: state,
        });
    }
    Ok(())
}
