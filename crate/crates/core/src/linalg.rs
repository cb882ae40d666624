//! Dense linear algebra on top of `nalgebra`: symmetric coefficient
//! matrices, the 2r×2r fundamental matrix kept as four r×r blocks, phase
//! points, and the shear updates that every integrator is built from.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ledger::CostLedger;

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Entrywise L1 norm (sum of absolute values).
pub fn l1_norm(m: &Mat) -> f64 {
    m.iter().map(|x| x.abs()).sum()
}

pub fn l1_norm_vec(v: &Vector) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

/// acc += w·m
pub fn add_scaled(acc: &mut Mat, w: f64, m: &Mat) {
    acc.zip_apply(m, |a, b| *a += w * b);
}

/// Dense real symmetric matrix. Construction symmetrizes, so
/// `m[(i, j)] == m[(j, i)]` holds bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix(Mat);

impl SymmetricMatrix {
    /// Symmetrizes `m` as (m + mᵀ)/2.
    pub fn new(m: Mat) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        if m.nrows() == 0 {
            return Err(Error::InvalidArgument("matrix dimension must be >= 1".into()));
        }
        Ok(Self::symmetrized(m))
    }

    fn symmetrized(mut m: Mat) -> Self {
        let n = m.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
                m[(i, j)] = avg;
                m[(j, i)] = avg;
            }
        }
        SymmetricMatrix(m)
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        Self::symmetrized(Mat::from_fn(dim, dim, &mut f))
    }

    pub fn zeros(dim: usize) -> Self {
        SymmetricMatrix(Mat::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        SymmetricMatrix(Mat::identity(dim, dim))
    }

    pub fn scalar(value: f64) -> Self {
        SymmetricMatrix(Mat::from_element(1, 1, value))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        SymmetricMatrix(Mat::from_diagonal(&Vector::from_column_slice(diag)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_mat(&self) -> &Mat {
        &self.0
    }

    pub fn into_mat(self) -> Mat {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..i).all(|j| self.0[(i, j)] == self.0[(j, i)]))
    }

    pub fn l1(&self) -> f64 {
        l1_norm(&self.0)
    }

    pub fn scale(&self, s: f64) -> Self {
        SymmetricMatrix(&self.0 * s)
    }

    /// Σ wᵢ·Mᵢ. Free in the cost model.
    pub fn combination(terms: &[(f64, &SymmetricMatrix)]) -> Self {
        let dim = terms.first().map(|(_, m)| m.dim()).unwrap_or(1);
        let mut acc = Mat::zeros(dim, dim);
        for (w, m) in terms {
            if *w != 0.0 {
                add_scaled(&mut acc, *w, &m.0);
            }
        }
        SymmetricMatrix(acc)
    }

    /// Adds `s·I` in place.
    pub fn add_identity(&mut self, s: f64) {
        for i in 0..self.dim() {
            self.0[(i, i)] += s;
        }
    }

    /// Product of two commuting symmetric matrices (powers of one matrix),
    /// resymmetrized to remove rounding asymmetry. Charges one 𝒞.
    pub fn mul_commuting(&self, other: &SymmetricMatrix, ledger: &CostLedger) -> Self {
        ledger.add_matmat(1);
        Self::symmetrized(&self.0 * &other.0)
    }

    /// Matrix-vector product, one 𝒱.
    pub fn apply(&self, v: &Vector, ledger: &CostLedger) -> Vector {
        ledger.add_matvec(1);
        &self.0 * v
    }

    /// Gershgorin bound on the spectral radius.
    pub fn gershgorin_radius(&self) -> f64 {
        self.0
            .row_iter()
            .map(|row| row.iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Add for &SymmetricMatrix {
    type Output = SymmetricMatrix;
    fn add(self, rhs: &SymmetricMatrix) -> SymmetricMatrix {
        SymmetricMatrix(&self.0 + &rhs.0)
    }
}

impl std::ops::Sub for &SymmetricMatrix {
    type Output = SymmetricMatrix;
    fn sub(self, rhs: &SymmetricMatrix) -> SymmetricMatrix {
        SymmetricMatrix(&self.0 - &rhs.0)
    }
}

impl std::ops::Neg for &SymmetricMatrix {
    type Output = SymmetricMatrix;
    fn neg(self) -> SymmetricMatrix {
        SymmetricMatrix(-&self.0)
    }
}

/// Eigenpairs of a symmetric matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Mat,
}

impl SymEigen {
    /// V·diag(f(λ))·Vᵀ. The two products are not charged; callers account
    /// for reconstruction cost themselves.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> SymmetricMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (j, &lam) in self.values.iter().enumerate() {
            let fj = f(lam);
            for i in 0..n {
                scaled[(i, j)] *= fj;
            }
        }
        SymmetricMatrix::symmetrized(scaled * self.vectors.transpose())
    }
}

const EIGEN_EPS: f64 = 1e-15;

pub fn max_eigen_iterations(dim: usize) -> usize {
    100 * dim.max(4)
}

/// Symmetric eigendecomposition (Householder tridiagonalization followed by
/// implicit QR, as implemented by nalgebra).
pub fn sym_eigendecomposition(c: &SymmetricMatrix) -> Result<SymEigen> {
    let iterations = max_eigen_iterations(c.dim());
    let eig = SymmetricEigen::try_new(c.0.clone(), EIGEN_EPS, iterations)
        .ok_or(Error::EigenNonConvergence { iterations })?;
    let n = c.dim();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = Mat::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(SymEigen { values, vectors })
}

/// Cache of powers C, C², C³, … of one symmetric matrix. Each new power
/// costs one 𝒞.
#[derive(Debug, Clone)]
pub struct PowerCache {
    powers: Vec<SymmetricMatrix>,
}

impl PowerCache {
    pub fn new(base: SymmetricMatrix) -> Self {
        Self { powers: vec![base] }
    }

    pub fn base(&self) -> &SymmetricMatrix {
        &self.powers[0]
    }

    pub fn dim(&self) -> usize {
        self.powers[0].dim()
    }

    /// Highest power currently cached.
    pub fn highest(&self) -> usize {
        self.powers.len()
    }

    /// C^k for k ≥ 1.
    pub fn power(&mut self, k: usize, ledger: &CostLedger) -> &SymmetricMatrix {
        assert!(k >= 1, "power index starts at 1");
        while self.powers.len() < k {
            let next = self.powers[self.powers.len() - 1].mul_commuting(&self.powers[0], ledger);
            self.powers.push(next);
        }
        &self.powers[k - 1]
    }
}

/// Σₖ coeffₖ·Cᵏ with C⁰ = I, reusing (and extending) the power cache.
pub fn matrix_poly_eval(
    cache: &mut PowerCache,
    coefficients: &[f64],
    ledger: &CostLedger,
) -> Result<SymmetricMatrix> {
    if coefficients.is_empty() {
        return Err(Error::InvalidArgument("polynomial needs at least one coefficient".into()));
    }
    let dim = cache.dim();
    let mut acc = SymmetricMatrix::zeros(dim);
    acc.add_identity(coefficients[0]);
    for (k, &c) in coefficients.iter().enumerate().skip(1) {
        if c == 0.0 {
            continue;
        }
        let pk = cache.power(k, ledger);
        add_scaled(&mut acc.0, c, &pk.0);
    }
    Ok(acc)
}

/// State that can be advanced by symplectic shears.
///
/// `kick(C, h)` applies [[I,0],[hC,I]], `upper(Q)` applies [[I,Q],[0,I]] and
/// `drift(τ)` applies [[I,τI],[0,I]] (a free scalar update).
pub trait ShearState: Clone {
    fn dim(&self) -> usize;
    fn kick(&mut self, c: &SymmetricMatrix, h: f64, ledger: &CostLedger);
    fn upper(&mut self, q: &SymmetricMatrix, ledger: &CostLedger);
    fn drift(&mut self, tau: f64);
    /// Left-multiplies by [[e11, e12], [e21, e22]].
    fn apply_blocks(
        &mut self,
        e11: &SymmetricMatrix,
        e12: &SymmetricMatrix,
        e21: &SymmetricMatrix,
        e22: &SymmetricMatrix,
        ledger: &CostLedger,
    );

    /// [[I,0],[S,I]].
    fn lower(&mut self, s: &SymmetricMatrix, ledger: &CostLedger) {
        self.kick(s, 1.0, ledger)
    }
}

/// 2r×2r propagator stored as four r×r blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalMatrix {
    pub b11: Mat,
    pub b12: Mat,
    pub b21: Mat,
    pub b22: Mat,
}

impl FundamentalMatrix {
    pub fn identity(r: usize) -> Self {
        Self {
            b11: Mat::identity(r, r),
            b12: Mat::zeros(r, r),
            b21: Mat::zeros(r, r),
            b22: Mat::identity(r, r),
        }
    }

    pub fn from_blocks(b11: Mat, b12: Mat, b21: Mat, b22: Mat) -> Result<Self> {
        let r = b11.nrows();
        for b in [&b11, &b12, &b21, &b22] {
            if b.nrows() != r || b.ncols() != r {
                return Err(Error::DimensionMismatch {
                    expected: r,
                    found: b.nrows().max(b.ncols()),
                });
            }
        }
        Ok(Self { b11, b12, b21, b22 })
    }

    pub fn from_dense(m: &Mat) -> Result<Self> {
        let n = m.nrows();
        if n != m.ncols() || !n.is_multiple_of(2) || n == 0 {
            return Err(Error::InvalidArgument(format!(
                "fundamental matrix must be 2r×2r, got {}×{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let r = n / 2;
        Ok(Self {
            b11: m.view((0, 0), (r, r)).into_owned(),
            b12: m.view((0, r), (r, r)).into_owned(),
            b21: m.view((r, 0), (r, r)).into_owned(),
            b22: m.view((r, r), (r, r)).into_owned(),
        })
    }

    pub fn r(&self) -> usize {
        self.b11.nrows()
    }

    pub fn to_dense(&self) -> Mat {
        let r = self.r();
        let mut m = Mat::zeros(2 * r, 2 * r);
        m.view_mut((0, 0), (r, r)).copy_from(&self.b11);
        m.view_mut((0, r), (r, r)).copy_from(&self.b12);
        m.view_mut((r, 0), (r, r)).copy_from(&self.b21);
        m.view_mut((r, r), (r, r)).copy_from(&self.b22);
        m
    }

    pub fn l1(&self) -> f64 {
        l1_norm(&self.b11) + l1_norm(&self.b12) + l1_norm(&self.b21) + l1_norm(&self.b22)
    }

    pub fn l1_distance(&self, other: &FundamentalMatrix) -> f64 {
        l1_norm(&(&self.b11 - &other.b11))
            + l1_norm(&(&self.b12 - &other.b12))
            + l1_norm(&(&self.b21 - &other.b21))
            + l1_norm(&(&self.b22 - &other.b22))
    }

    pub fn max_abs(&self) -> f64 {
        [&self.b11, &self.b12, &self.b21, &self.b22]
            .iter()
            .flat_map(|b| b.iter())
            .fold(0.0, |acc, x| acc.max(x.abs()))
    }

    /// Left-multiplies by a general block matrix [[e11,e12],[e21,e22]];
    /// eight 𝒞.
    pub fn left_mul_blocks(&mut self, e11: &Mat, e12: &Mat, e21: &Mat, e22: &Mat, ledger: &CostLedger) {
        ledger.add_matmat(8);
        let n11 = e11 * &self.b11 + e12 * &self.b21;
        let n12 = e11 * &self.b12 + e12 * &self.b22;
        let n21 = e21 * &self.b11 + e22 * &self.b21;
        let n22 = e21 * &self.b12 + e22 * &self.b22;
        self.b11 = n11;
        self.b12 = n12;
        self.b21 = n21;
        self.b22 = n22;
    }

    /// Left-multiplies by a dense 2r×2r matrix (diagnostic use, uncharged).
    pub fn left_mul_dense(&self, e: &Mat) -> Result<Self> {
        Self::from_dense(&(e * self.to_dense()))
    }

    /// Spectrum of the 2r×2r matrix.
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        self.to_dense().complex_eigenvalues().iter().copied().collect()
    }
}

impl ShearState for FundamentalMatrix {
    fn dim(&self) -> usize {
        self.r()
    }

    fn kick(&mut self, c: &SymmetricMatrix, h: f64, ledger: &CostLedger) {
        ledger.add_matmat(2);
        self.b21.gemm(h, &c.0, &self.b11, 1.0);
        self.b22.gemm(h, &c.0, &self.b12, 1.0);
    }

    fn upper(&mut self, q: &SymmetricMatrix, ledger: &CostLedger) {
        ledger.add_matmat(2);
        self.b11.gemm(1.0, &q.0, &self.b21, 1.0);
        self.b12.gemm(1.0, &q.0, &self.b22, 1.0);
    }

    fn drift(&mut self, tau: f64) {
        add_scaled(&mut self.b11, tau, &self.b21);
        add_scaled(&mut self.b12, tau, &self.b22);
    }

    fn apply_blocks(
        &mut self,
        e11: &SymmetricMatrix,
        e12: &SymmetricMatrix,
        e21: &SymmetricMatrix,
        e22: &SymmetricMatrix,
        ledger: &CostLedger,
    ) {
        self.left_mul_blocks(&e11.0, &e12.0, &e21.0, &e22.0, ledger);
    }
}

/// J = [[0, I], [−I, 0]].
pub fn symplectic_j(r: usize) -> Mat {
    let mut j = Mat::zeros(2 * r, 2 * r);
    for i in 0..r {
        j[(i, r + i)] = 1.0;
        j[(r + i, i)] = -1.0;
    }
    j
}

/// ‖ΦᵀJΦ − J‖₁.
pub fn symplecticity_defect(phi: &FundamentalMatrix) -> f64 {
    let j = symplectic_j(phi.r());
    let d = phi.to_dense();
    l1_norm(&(d.transpose() * &j * &d - j))
}

/// Phase-space point z = (q, p).
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub q: Vector,
    pub p: Vector,
}

impl PhasePoint {
    pub fn new(q: Vector, p: Vector) -> Result<Self> {
        if q.len() != p.len() {
            return Err(Error::DimensionMismatch {
                expected: q.len(),
                found: p.len(),
            });
        }
        Ok(Self { q, p })
    }

    pub fn zeros(r: usize) -> Self {
        Self {
            q: Vector::zeros(r),
            p: Vector::zeros(r),
        }
    }

    pub fn l1_distance(&self, other: &PhasePoint) -> f64 {
        l1_norm_vec(&(&self.q - &other.q)) + l1_norm_vec(&(&self.p - &other.p))
    }

    pub fn l1(&self) -> f64 {
        l1_norm_vec(&self.q) + l1_norm_vec(&self.p)
    }

    pub fn scaled_add(&self, alpha: f64, other: &PhasePoint, beta: f64) -> PhasePoint {
        PhasePoint {
            q: &self.q * alpha + &other.q * beta,
            p: &self.p * alpha + &other.p * beta,
        }
    }
}

impl ShearState for PhasePoint {
    fn dim(&self) -> usize {
        self.q.len()
    }

    fn kick(&mut self, c: &SymmetricMatrix, h: f64, ledger: &CostLedger) {
        let y = c.apply(&self.q, ledger);
        self.p.axpy(h, &y, 1.0);
    }

    fn upper(&mut self, q: &SymmetricMatrix, ledger: &CostLedger) {
        ledger.add_matvec(1);
        self.q.gemv(1.0, &q.0, &self.p, 1.0);
    }

    fn drift(&mut self, tau: f64) {
        self.q.axpy(tau, &self.p, 1.0);
    }

    fn apply_blocks(
        &mut self,
        e11: &SymmetricMatrix,
        e12: &SymmetricMatrix,
        e21: &SymmetricMatrix,
        e22: &SymmetricMatrix,
        ledger: &CostLedger,
    ) {
        ledger.add_matvec(4);
        let q = &e11.0 * &self.q + &e12.0 * &self.p;
        let p = &e21.0 * &self.q + &e22.0 * &self.p;
        self.q = q;
        self.p = p;
    }
}

/// Dense matrix exponential (Padé scaling-and-squaring from nalgebra).
pub fn expm(m: &Mat) -> Mat {
    m.exp()
}

/// exp of a 2r×2r matrix after balancing its off-diagonal blocks with
/// diag(γI, I), γ a power of two so the rescaling is exact. Generators of
/// x'' + Mx = 0 have blocks of size h and h‖M‖; without balancing the
/// scaling-and-squaring step count follows h‖M‖ rather than h√‖M‖ and
/// accuracy degrades by up to ‖M‖.
pub fn expm_block_balanced(m: &Mat) -> Mat {
    let r = m.nrows() / 2;
    let n12 = l1_norm(&m.view((0, r), (r, r)).into_owned());
    let n21 = l1_norm(&m.view((r, 0), (r, r)).into_owned());
    if r == 0 || n12 == 0.0 || n21 == 0.0 {
        return expm(m);
    }
    let gamma = (0.5 * (n21 / n12).log2()).round().exp2();
    let mut b = m.clone();
    b.view_mut((0, r), (r, r)).scale_mut(gamma);
    b.view_mut((r, 0), (r, r)).scale_mut(1.0 / gamma);
    let mut e = expm(&b);
    e.view_mut((0, r), (r, r)).scale_mut(1.0 / gamma);
    e.view_mut((r, 0), (r, r)).scale_mut(gamma);
    e
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random_symmetric(dim: usize, seed: &[f64]) -> SymmetricMatrix {
        SymmetricMatrix::from_fn(dim, |i, j| {
            let k = (i * 31 + j * 17 + i * j) % seed.len();
            seed[k] * ((i + 2 * j + 1) as f64).sin()
        })
    }

    #[test]
    fn construction_symmetrizes() {
        let m = Mat::from_row_slice(2, 2, &[1.0, 2.0, 4.0, 3.0]);
        let s = SymmetricMatrix::new(m).unwrap();
        assert_eq!(s.get(0, 1), 3.0);
        assert_eq!(s.get(1, 0), 3.0);
        assert!(s.is_symmetric());
        assert!(SymmetricMatrix::new(Mat::zeros(2, 3)).is_err());
        assert!(SymmetricMatrix::new(Mat::zeros(0, 0)).is_err());
    }

    #[test]
    fn eigen_zero_matrix() {
        let e = sym_eigendecomposition(&SymmetricMatrix::zeros(2)).unwrap();
        assert_eq!(e.values, vec![0.0, 0.0]);
        assert!(l1_norm(&(e.vectors.abs() - Mat::identity(2, 2))) < 1e-15);
    }

    #[test]
    fn eigen_diagonal() {
        let e = sym_eigendecomposition(&SymmetricMatrix::from_diagonal(&[4.0, 1.0])).unwrap();
        assert_eq!(e.values, vec![1.0, 4.0]);
        // a permutation of the identity, up to sign
        let abs = e.vectors.abs();
        assert_eq!(abs, Mat::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
    }

    #[test]
    fn eigen_two_by_two() {
        let c = SymmetricMatrix::new(Mat::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0])).unwrap();
        let e = sym_eigendecomposition(&c).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!((e.values[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn balanced_exponential_of_stiff_rotation() {
        // exp of [[0, h], [−hω², 0]] is a rotation by hω
        let (h, w) = (1e-3, 700.0);
        let m = Mat::from_row_slice(2, 2, &[0.0, h, -h * w * w, 0.0]);
        let e = expm_block_balanced(&m);
        let (c, s) = ((h * w).cos(), (h * w).sin());
        let exact = Mat::from_row_slice(2, 2, &[c, s / w, -w * s, c]);
        assert!(l1_norm(&(e - &exact)) < 1e-13 * w);
        assert_eq!(expm_block_balanced(&Mat::zeros(2, 2)), Mat::identity(2, 2));
    }

    #[test]
    fn defect_examples() {
        assert_eq!(symplecticity_defect(&FundamentalMatrix::identity(3)), 0.0);

        let r = Mat::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let phi = FundamentalMatrix::from_blocks(Mat::identity(2, 2), Mat::zeros(2, 2), r, Mat::identity(2, 2))
            .unwrap();
        assert!((symplecticity_defect(&phi) - 2.0).abs() < 1e-15);

        let ledger = CostLedger::new();
        let s = SymmetricMatrix::new(Mat::from_row_slice(2, 2, &[0.3, -1.2, -1.2, 2.5])).unwrap();
        let mut phi = FundamentalMatrix::identity(2);
        phi.lower(&s, &ledger);
        assert!(symplecticity_defect(&phi) < 1e-15);
    }

    #[test]
    fn poly_eval_examples() {
        let ledger = CostLedger::new();
        let mut cache = PowerCache::new(random_symmetric(3, &[1.0, 2.0]));
        let p = matrix_poly_eval(&mut cache, &[2.5], &ledger).unwrap();
        assert_eq!(p, {
            let mut i = SymmetricMatrix::zeros(3);
            i.add_identity(2.5);
            i
        });
        assert_eq!(ledger.matmat(), 0);

        let mut cache = PowerCache::new(SymmetricMatrix::identity(2));
        let p = matrix_poly_eval(&mut cache, &[1.0, 1.0, 1.0], &ledger).unwrap();
        assert_eq!(p.as_mat(), &(Mat::identity(2, 2) * 3.0));

        let mut cache = PowerCache::new(SymmetricMatrix::scalar(2.0));
        let p = matrix_poly_eval(&mut cache, &[0.0, 1.0, 1.0], &ledger).unwrap();
        assert_eq!(p.get(0, 0), 6.0);

        assert!(matrix_poly_eval(&mut cache, &[], &ledger).is_err());
    }

    #[test]
    fn poly_eval_counts_new_powers_only() {
        for k in 1..8 {
            let ledger = CostLedger::new();
            let mut cache = PowerCache::new(random_symmetric(4, &[0.5, -0.25, 1.0]));
            let mut coeffs = vec![0.0; k + 1];
            coeffs[k] = 1.0;
            let p = matrix_poly_eval(&mut cache, &coeffs, &ledger).unwrap();
            assert_eq!(ledger.matmat() as usize, k - 1);
            assert!(p.is_symmetric());
            // a second evaluation reuses the cache
            matrix_poly_eval(&mut cache, &coeffs, &ledger).unwrap();
            assert_eq!(ledger.matmat() as usize, k - 1);
        }
    }

    #[test]
    fn phase_point_shears_charge_matvec() {
        let ledger = CostLedger::new();
        let mut z = PhasePoint::new(Vector::from_vec(vec![1.0, 2.0]), Vector::from_vec(vec![0.5, -1.0])).unwrap();
        z.lower(&SymmetricMatrix::identity(2), &ledger);
        z.upper(&SymmetricMatrix::identity(2), &ledger);
        z.drift(2.0);
        assert_eq!(ledger.matvec(), 2);
        assert_eq!(ledger.matmat(), 0);
        assert_eq!(z.p, Vector::from_vec(vec![1.5, 1.0]));
        assert!(PhasePoint::new(Vector::zeros(2), Vector::zeros(3)).is_err());
    }

    proptest! {
        #[test]
        fn shear_factors_are_symplectic(
            r in 1usize..6,
            vals in proptest::collection::vec(-5.0f64..5.0, 36),
            which in 0u8..2,
        ) {
            let s = SymmetricMatrix::from_fn(r, |i, j| vals[i * 6 + j]);
            let ledger = CostLedger::new();
            let mut phi = FundamentalMatrix::identity(r);
            if which == 0 { phi.lower(&s, &ledger) } else { phi.upper(&s, &ledger) }
            prop_assert!(symplecticity_defect(&phi) <= 1e-14 * r as f64);
        }

        #[test]
        fn eigen_round_trip(
            r in 1usize..=64,
            vals in proptest::collection::vec(-10.0f64..10.0, 64),
        ) {
            let c = SymmetricMatrix::from_fn(r, |i, j| vals[(i * 7 + j * 3) % 64] + vals[(i + j) % 64]);
            let e = sym_eigendecomposition(&c).unwrap();
            let lam = Mat::from_diagonal(&Vector::from_vec(e.values.clone()));
            let back = &e.vectors * lam * e.vectors.transpose();
            prop_assert!(l1_norm(&(back - c.as_mat())) <= 1e-12 * (1.0 + c.l1()));
            let orth = e.vectors.transpose() * &e.vectors - Mat::identity(r, r);
            prop_assert!(l1_norm(&orth) <= 1e-12 * r as f64);
        }
    }
}
