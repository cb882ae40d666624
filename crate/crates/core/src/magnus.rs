//! Gauss–Legendre sampling of M(t), the K/L/F combinations used by the
//! decomposition schemes, and a sixth-order Magnus approximation
//! exp(Ω⁽⁶⁾) evaluated with a dense exponential. The latter is slow but
//! independent of the factorized integrators, so it serves as their oracle.

use crate::error::{Error, Result};
use crate::ledger::CostLedger;
use crate::linalg::{expm_block_balanced, FundamentalMatrix, Mat, SymmetricMatrix};
use crate::problem::LinearProblem;

/// Largest r accepted by the dense oracle (the exponential is 2r×2r).
pub const ORACLE_MAX_DIM: usize = 64;

/// Nodes of the three-point Gauss–Legendre rule on [0, 1].
pub fn gl_nodes() -> [f64; 3] {
    let s = 15f64.sqrt();
    [(5.0 - s) / 10.0, 0.5, (5.0 + s) / 10.0]
}

/// Matching quadrature weights.
pub const GL_WEIGHTS: [f64; 3] = [5.0 / 18.0, 4.0 / 9.0, 5.0 / 18.0];

/// M sampled at t_n + cᵢh.
#[derive(Debug, Clone)]
pub struct NodeSamples {
    pub t_n: f64,
    pub h: f64,
    pub m: [SymmetricMatrix; 3],
}

impl NodeSamples {
    pub fn new(t_n: f64, h: f64, m: [SymmetricMatrix; 3]) -> Result<Self> {
        if h == 0.0 {
            return Err(Error::InvalidArgument("step size must be nonzero".into()));
        }
        let d = m[0].dim();
        for mi in &m[1..] {
            if mi.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: mi.dim(),
                });
            }
        }
        Ok(Self { t_n, h, m })
    }

    pub fn dim(&self) -> usize {
        self.m[0].dim()
    }

    pub fn times(&self) -> [f64; 3] {
        let c = gl_nodes();
        [
            self.t_n + c[0] * self.h,
            self.t_n + c[1] * self.h,
            self.t_n + c[2] * self.h,
        ]
    }
}

/// Three dense evaluations of M; evaluations are free in the cost model.
pub fn sample_nodes(problem: &dyn LinearProblem, t_n: f64, h: f64) -> Result<NodeSamples> {
    if h == 0.0 {
        return Err(Error::InvalidArgument("step size must be nonzero".into()));
    }
    let c = gl_nodes();
    let m = [
        problem.eval(t_n + c[0] * h)?,
        problem.eval(t_n + c[1] * h)?,
        problem.eval(t_n + c[2] * h)?,
    ];
    NodeSamples::new(t_n, h, m)
}

/// K = M₁ − M₃, L = −M₁ + 2M₂ − M₃ and the lazily formed F = h²K².
#[derive(Debug, Clone)]
pub struct Combos {
    pub k: SymmetricMatrix,
    pub l: SymmetricMatrix,
    h: f64,
    f: Option<SymmetricMatrix>,
}

impl Combos {
    /// F = h²K², formed on first use at the price of one 𝒞.
    pub fn f(&mut self, ledger: &CostLedger) -> &SymmetricMatrix {
        if self.f.is_none() {
            let k2 = self.k.mul_commuting(&self.k, ledger);
            self.f = Some(k2.scale(self.h * self.h));
        }
        self.f.as_ref().unwrap()
    }

    pub fn f_computed(&self) -> bool {
        self.f.is_some()
    }
}

pub fn combos(samples: &NodeSamples) -> Combos {
    let [m1, m2, m3] = &samples.m;
    Combos {
        k: m1 - m3,
        l: SymmetricMatrix::combination(&[(-1.0, m1), (2.0, m2), (-1.0, m3)]),
        h: samples.h,
        f: None,
    }
}

/// A 2r×2r matrix held as four optional r×r blocks; `None` is a zero block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMatrix {
    r: usize,
    blocks: [Option<Mat>; 4],
}

impl BlockMatrix {
    pub fn zero(r: usize) -> Self {
        Self {
            r,
            blocks: [None, None, None, None],
        }
    }

    pub fn from_blocks(r: usize, blocks: [Option<Mat>; 4]) -> Self {
        Self { r, blocks }
    }

    pub fn r(&self) -> usize {
        self.r
    }

    /// Block (i, j) with i, j ∈ {0, 1}.
    pub fn block(&self, i: usize, j: usize) -> Option<&Mat> {
        self.blocks[2 * i + j].as_ref()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            r: self.r,
            blocks: self.blocks.clone().map(|b| b.map(|m| m * s)),
        }
    }

    fn combine(&self, other: &Self, sign: f64) -> Self {
        let mut out = Self::zero(self.r);
        for k in 0..4 {
            out.blocks[k] = match (&self.blocks[k], &other.blocks[k]) {
                (None, None) => None,
                (Some(a), None) => Some(a.clone()),
                (None, Some(b)) => Some(b * sign),
                (Some(a), Some(b)) => Some(a + b * sign),
            };
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        self.combine(other, 1.0)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.combine(other, -1.0)
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.r);
        for i in 0..2 {
            for j in 0..2 {
                let mut acc: Option<Mat> = None;
                for k in 0..2 {
                    if let (Some(a), Some(b)) = (self.block(i, k), other.block(k, j)) {
                        let p = a * b;
                        acc = Some(match acc {
                            None => p,
                            Some(s) => s + p,
                        });
                    }
                }
                out.blocks[2 * i + j] = acc;
            }
        }
        out
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self.mul(other).sub(&other.mul(self))
    }

    pub fn to_dense(&self) -> Mat {
        let r = self.r;
        let mut m = Mat::zeros(2 * r, 2 * r);
        for i in 0..2 {
            for j in 0..2 {
                if let Some(b) = self.block(i, j) {
                    m.view_mut((i * r, j * r), (r, r)).copy_from(b);
                }
            }
        }
        m
    }
}

/// α₁ = hA₂, α₂ = (√15h/3)(A₃ − A₁), α₃ = (10h/3)(A₃ − 2A₂ + A₁) with
/// Aᵢ = [[0, I], [−Mᵢ, 0]].
pub fn alphas(samples: &NodeSamples) -> [BlockMatrix; 3] {
    let r = samples.dim();
    let h = samples.h;
    let [m1, m2, m3] = &samples.m;
    let s15 = 15f64.sqrt();

    let a1 = BlockMatrix::from_blocks(
        r,
        [
            None,
            Some(Mat::identity(r, r) * h),
            Some(m2.as_mat() * (-h)),
            None,
        ],
    );
    let d2 = m3 - m1;
    let a2 = BlockMatrix::from_blocks(r, [None, None, Some(d2.as_mat() * (-s15 * h / 3.0)), None]);
    let d3 = SymmetricMatrix::combination(&[(1.0, m3), (-2.0, m2), (1.0, m1)]);
    let a3 = BlockMatrix::from_blocks(r, [None, None, Some(d3.as_mat() * (-10.0 * h / 3.0)), None]);
    [a1, a2, a3]
}

/// Ω⁽⁶⁾ = α₁ + α₃/12 − [12]/12 + [23]/240 + [113]/360 − [212]/240 + [1112]/720,
/// where [ij…kl] = [αᵢ, [αⱼ, […, [αₖ, αₗ]…]]].
pub fn omega6(samples: &NodeSamples) -> BlockMatrix {
    let [a1, a2, a3] = alphas(samples);
    let c12 = a1.commutator(&a2);
    let c23 = a2.commutator(&a3);
    let c13 = a1.commutator(&a3);
    let c113 = a1.commutator(&c13);
    let c212 = a2.commutator(&c12);
    let c112 = a1.commutator(&c12);
    let c1112 = a1.commutator(&c112);

    a1.add(&a3.scale(1.0 / 12.0))
        .sub(&c12.scale(1.0 / 12.0))
        .add(&c23.scale(1.0 / 240.0))
        .add(&c113.scale(1.0 / 360.0))
        .sub(&c212.scale(1.0 / 240.0))
        .add(&c1112.scale(1.0 / 720.0))
}

/// exp(Ω⁽⁶⁾) as a one-step propagator.
pub fn omega6_oracle(samples: &NodeSamples) -> Result<FundamentalMatrix> {
    if samples.dim() > ORACLE_MAX_DIM {
        return Err(Error::TooLarge {
            dim: samples.dim(),
            max: ORACLE_MAX_DIM,
        });
    }
    FundamentalMatrix::from_dense(&expm_block_balanced(&omega6(samples).to_dense()))
}

/// Advances Φ by `steps` oracle steps of size h starting at t0.
pub fn propagate_oracle(
    problem: &dyn LinearProblem,
    phi: &mut FundamentalMatrix,
    t0: f64,
    h: f64,
    steps: usize,
) -> Result<()> {
    if phi.r() != problem.dim() {
        return Err(Error::DimensionMismatch {
            expected: problem.dim(),
            found: phi.r(),
        });
    }
    let mut dense = phi.to_dense();
    for n in 0..steps {
        let samples = sample_nodes(problem, t0 + n as f64 * h, h)?;
        let step = omega6_oracle(&samples)?;
        dense = step.to_dense() * dense;
    }
    *phi = FundamentalMatrix::from_dense(&dense)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{l1_norm, symplectic_j, symplecticity_defect};
    use crate::problem::FnProblem;

    fn scalar_samples(vals: [f64; 3], h: f64) -> NodeSamples {
        NodeSamples::new(0.0, h, vals.map(SymmetricMatrix::scalar)).unwrap()
    }

    fn mathieu(omega: f64, eps: f64) -> impl LinearProblem {
        FnProblem::new(1, move |t: f64| SymmetricMatrix::scalar(omega * omega + eps * (2.0 * t).cos()))
    }

    #[test]
    fn nodes() {
        let c = gl_nodes();
        assert_eq!(c[1], 0.5);
        assert!((c[0] + c[2] - 1.0).abs() <= f64::EPSILON);
        assert!((c[0] - 0.112701665379258).abs() < 1e-15);
    }

    #[test]
    fn autonomous_sampling_gives_zero_combos() {
        let p = mathieu(1.0, 0.0);
        let s = sample_nodes(&p, 0.7, 0.3).unwrap();
        for m in &s.m {
            assert_eq!(m.get(0, 0), 1.0);
        }
        let ledger = CostLedger::new();
        let mut c = combos(&s);
        assert_eq!(c.k.get(0, 0), 0.0);
        assert_eq!(c.l.get(0, 0), 0.0);
        assert_eq!(c.f(&ledger).get(0, 0), 0.0);
    }

    #[test]
    fn mathieu_midpoint_sample() {
        let p = mathieu(1.0, 1.0);
        let h = std::f64::consts::FRAC_PI_2;
        let s = sample_nodes(&p, 0.0, h).unwrap();
        assert!((s.m[1].get(0, 0) - (1.0 + (2.0 * 0.5 * h).cos())).abs() < 1e-15);
        assert!((s.m[1].get(0, 0) - 1.0).abs() < 1e-15);
        assert!(sample_nodes(&p, 0.0, 0.0).is_err());
    }

    #[test]
    fn scalar_combos_and_lazy_f() {
        let s = scalar_samples([1.0, 2.0, 3.0], 1.0);
        let ledger = CostLedger::new();
        let mut c = combos(&s);
        assert_eq!(c.k.get(0, 0), -2.0);
        assert_eq!(c.l.get(0, 0), 0.0);
        assert!(!c.f_computed());
        assert_eq!(c.f(&ledger).get(0, 0), 4.0);
        assert_eq!(c.f(&ledger).get(0, 0), 4.0);
        assert_eq!(ledger.matmat(), 1);
    }

    #[test]
    fn mathieu_k_combo() {
        let p = mathieu(0.0, 1.0);
        let s = sample_nodes(&p, 0.0, 1.0).unwrap();
        let c = gl_nodes();
        let k = combos(&s).k.get(0, 0);
        assert!((k - ((2.0 * c[0]).cos() - (2.0 * c[2]).cos())).abs() < 1e-15);
    }

    #[test]
    fn alpha_structure() {
        let s = scalar_samples([1.0, 2.0, 3.0], 1.0);
        let [a1, a2, a3] = alphas(&s);
        assert_eq!(a1.block(0, 1).unwrap()[(0, 0)], 1.0);
        assert!(a2.block(0, 1).is_none());
        assert_eq!(a3.block(1, 0).unwrap()[(0, 0)], 0.0);
        let auto = scalar_samples([4.0, 4.0, 4.0], 0.25);
        let [a1, a2, a3] = alphas(&auto);
        assert_eq!(a1.block(0, 1).unwrap()[(0, 0)], 0.25);
        assert_eq!(a2.block(1, 0).unwrap()[(0, 0)], 0.0);
        assert_eq!(a3.block(1, 0).unwrap()[(0, 0)], 0.0);
    }

    #[test]
    fn scalar_commutator_by_hand() {
        let (a, b) = (1.7, -0.4);
        let x = BlockMatrix::from_blocks(
            1,
            [None, Some(Mat::from_element(1, 1, 1.0)), Some(Mat::from_element(1, 1, -a)), None],
        );
        let y = BlockMatrix::from_blocks(1, [None, None, Some(Mat::from_element(1, 1, -b)), None]);
        let c = x.commutator(&y).to_dense();
        assert_eq!(c, Mat::from_row_slice(2, 2, &[-b, 0.0, 0.0, b]));
    }

    #[test]
    fn omega_is_hamiltonian() {
        let p = FnProblem::new(3, |t: f64| {
            SymmetricMatrix::from_fn(3, |i, j| ((i + 1) * (j + 2)) as f64 * (t + i as f64).cos() + (i == j) as u8 as f64 * 4.0)
        });
        let s = sample_nodes(&p, 0.3, 0.4).unwrap();
        let om = omega6(&s).to_dense();
        let j = symplectic_j(3);
        let resid = om.transpose() * &j + &j * &om;
        assert!(l1_norm(&resid) <= 1e-12 * l1_norm(&om));
        let phi = omega6_oracle(&s).unwrap();
        assert!(symplecticity_defect(&phi) <= 1e-11);
    }

    #[test]
    fn autonomous_oracle_is_rotation() {
        for &(w, h) in &[(1.0, 0.3), (3.0, 0.1), (0.5, 1.2)] {
            let s = scalar_samples([w * w; 3], h);
            let phi = omega6_oracle(&s).unwrap();
            let (c, sn) = ((w * h).cos(), (w * h).sin());
            let exact = Mat::from_row_slice(2, 2, &[c, sn / w, -w * sn, c]);
            assert!(l1_norm(&(phi.to_dense() - exact)) < 1e-13);
        }
    }

    #[test]
    fn oracle_local_order_seven() {
        // one oracle step against a fine oracle propagation of the same interval
        let p = mathieu(1.0, 1.0);
        let err = |h: f64| {
            let s = sample_nodes(&p, 0.0, h).unwrap();
            let one = omega6_oracle(&s).unwrap();
            let mut fine = FundamentalMatrix::identity(1);
            propagate_oracle(&p, &mut fine, 0.0, h / 64.0, 64).unwrap();
            one.l1_distance(&fine)
        };
        let ratio = err(0.4) / err(0.2);
        assert!((100.0..160.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn oracle_refuses_large_dimension() {
        let m = SymmetricMatrix::identity(ORACLE_MAX_DIM + 1);
        let s = NodeSamples::new(0.0, 0.1, [m.clone(), m.clone(), m]).unwrap();
        assert!(matches!(omega6_oracle(&s), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn combos_linear_in_samples() {
        let a = [1.0, -2.0, 0.5];
        let b = [0.25, 3.0, -1.0];
        let sum = [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
        let ca = combos(&scalar_samples(a, 0.1));
        let cb = combos(&scalar_samples(b, 0.1));
        let cs = combos(&scalar_samples(sum, 0.1));
        assert!((cs.k.get(0, 0) - ca.k.get(0, 0) - cb.k.get(0, 0)).abs() < 1e-15);
        assert!((cs.l.get(0, 0) - ca.l.get(0, 0) - cb.l.get(0, 0)).abs() < 1e-15);
    }
}
