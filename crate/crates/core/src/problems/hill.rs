use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{Mat, SymmetricMatrix};
use crate::problem::LinearProblem;

/// Symmetric Pascal matrix: unit first row and column, and
/// D[i][j] = D[i-1][j] + D[i][j-1].
pub fn pascal_matrix(r: usize) -> Result<SymmetricMatrix> {
    if r == 0 {
        return Err(Error::InvalidArgument("Pascal matrix needs r >= 1".into()));
    }
    let mut d = Mat::from_element(r, r, 1.0);
    for i in 1..r {
        for j in 1..r {
            d[(i, j)] = d[(i - 1, j)] + d[(i, j - 1)];
        }
    }
    SymmetricMatrix::new(d)
}

/// Matrix Hill equation x'' + (A + εI cos 2t + (ε/10)I cos 4t) x = 0 with
/// A = r²I + D and D the r×r Pascal matrix.
#[derive(Debug, Clone)]
pub struct HillPascalProblem {
    r: usize,
    eps: f64,
    a: SymmetricMatrix,
}

impl HillPascalProblem {
    pub fn new(r: usize, eps: f64) -> Result<Self> {
        let mut a = pascal_matrix(r)?;
        a.add_identity((r * r) as f64);
        Ok(Self { r, eps, a })
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// The constant part A.
    pub fn constant_part(&self) -> &SymmetricMatrix {
        &self.a
    }
}

impl LinearProblem for HillPascalProblem {
    fn dim(&self) -> usize {
        self.r
    }

    fn eval(&self, t: f64) -> Result<SymmetricMatrix> {
        let shift = self.eps * (2.0 * t).cos() + 0.1 * self.eps * (4.0 * t).cos();
        let mut m = self.a.clone();
        m.add_identity(shift);
        Ok(m)
    }

    fn cache_key(&self) -> Option<String> {
        Some(format!("hill:r={}:eps={:?}", self.r, self.eps))
    }

    fn period(&self) -> Option<f64> {
        Some(PI)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sym_eigendecomposition;

    #[test]
    fn pascal_examples() {
        assert_eq!(pascal_matrix(1).unwrap().get(0, 0), 1.0);
        let d3 = pascal_matrix(3).unwrap();
        let expected = [[1.0, 1.0, 1.0], [1.0, 2.0, 3.0], [1.0, 3.0, 6.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(d3.get(i, j), expected[i][j]);
            }
        }
        assert_eq!(pascal_matrix(5).unwrap().get(4, 4), 70.0);
        assert!(pascal_matrix(0).is_err());
    }

    #[test]
    fn hill_evaluation() {
        let p = HillPascalProblem::new(5, 5.0).unwrap();
        let m0 = p.eval(0.0).unwrap();
        let m = p.eval(PI / 4.0).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let a = p.constant_part().get(i, j);
                let id = if i == j { 1.0 } else { 0.0 };
                assert!((m0.get(i, j) - (a + 5.5 * id)).abs() < 1e-13);
                assert!((m.get(i, j) - (a - 0.5 * id)).abs() < 1e-13);
            }
        }
        assert_eq!(p.constant_part().get(0, 0), 26.0);
    }

    #[test]
    fn hill_is_pi_periodic_and_positive() {
        let p = HillPascalProblem::new(7, 0.7).unwrap();
        for k in 0..10 {
            let t = 0.37 * k as f64;
            let (a, b) = (p.eval(t).unwrap(), p.eval(t + PI).unwrap());
            assert!(a.is_symmetric());
            for i in 0..7 {
                for j in 0..7 {
                    assert!((a.get(i, j) - b.get(i, j)).abs() <= 1e-12);
                }
            }
        }
        let eig = sym_eigendecomposition(p.constant_part()).unwrap();
        assert!(eig.values[0] > 0.0);
    }
}
