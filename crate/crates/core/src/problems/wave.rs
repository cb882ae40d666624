use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::ledger::CostLedger;
use crate::linalg::{Mat, PhasePoint, SymmetricMatrix, Vector};
use crate::problem::{check_len, LinearProblem};

/// Spatial discretization of ∂ₓ² on the periodic grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Discretization {
    Spectral,
    Fd2,
}

impl fmt::Display for Discretization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Discretization::Spectral => "spectral",
            Discretization::Fd2 => "fd2",
        })
    }
}

impl FromStr for Discretization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spectral" => Ok(Discretization::Spectral),
            "fd2" => Ok(Discretization::Fd2),
            other => Err(Error::InvalidArgument(format!(
                "unknown discretization '{other}' (expected spectral or fd2)"
            ))),
        }
    }
}

/// Trapped wave equation ∂ₜ²u = ∂ₓ²u − (x² + ε cos(δt) x²) u on a periodic
/// grid of N points x_i = x0 + iΔx, giving M(t) = −D₂ + diag(x² + g(x, t)).
pub struct WaveProblem {
    n: usize,
    x0: f64,
    xn: f64,
    delta: f64,
    eps: f64,
    sigma: f64,
    disc: Discretization,
    grid: Vector,
    x2: Vector,
    /// −k² per FFT bin (spectral only).
    symbol: Vec<f64>,
    forward: Option<Arc<dyn Fft<f64>>>,
    inverse: Option<Arc<dyn Fft<f64>>>,
    /// Dense −D₂, built once.
    neg_d2: Mat,
}

impl fmt::Debug for WaveProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WaveProblem")
            .field("n", &self.n)
            .field("x0", &self.x0)
            .field("xn", &self.xn)
            .field("delta", &self.delta)
            .field("eps", &self.eps)
            .field("sigma", &self.sigma)
            .field("disc", &self.disc)
            .finish()
    }
}

impl WaveProblem {
    pub fn new(n: usize, x0: f64, xn: f64, delta: f64, eps: f64, disc: Discretization) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidArgument(format!("wave grid needs at least 3 points, got {n}")));
        }
        if disc == Discretization::Spectral && !n.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "spectral discretization needs a power-of-two grid, got {n}"
            )));
        }
        if !(xn > x0) {
            return Err(Error::InvalidArgument(format!("empty domain [{x0}, {xn}]")));
        }
        let len = xn - x0;
        let dx = len / n as f64;
        let grid = Vector::from_fn(n, |i, _| x0 + i as f64 * dx);
        let x2 = grid.map(|x| x * x);

        let mut symbol = Vec::new();
        let (mut forward, mut inverse) = (None, None);
        let mut neg_d2 = Mat::zeros(n, n);
        match disc {
            Discretization::Spectral => {
                symbol = (0..n)
                    .map(|j| {
                        let m = if j < n / 2 { j as f64 } else { j as f64 - n as f64 };
                        let k = 2.0 * PI * m / len;
                        -k * k
                    })
                    .collect();
                let mut planner = FftPlanner::new();
                forward = Some(planner.plan_fft_forward(n));
                inverse = Some(planner.plan_fft_inverse(n));
                // D₂[j, l] = (1/N) Σ_m (−k_m²) cos(k_m (j − l) Δx), a function of j − l only.
                let col: Vec<f64> = (0..n)
                    .map(|d| {
                        symbol
                            .iter()
                            .enumerate()
                            .map(|(j, &s)| s * (2.0 * PI * (j * d % n) as f64 / n as f64).cos())
                            .sum::<f64>()
                            / n as f64
                    })
                    .collect();
                for j in 0..n {
                    for l in 0..n {
                        let d = (j + n - l) % n;
                        // cos is even, so use the smaller representative for exact symmetry.
                        neg_d2[(j, l)] = -col[d.min(n - d)];
                    }
                }
            }
            Discretization::Fd2 => {
                let c = 1.0 / (dx * dx);
                for i in 0..n {
                    neg_d2[(i, i)] += 2.0 * c;
                    neg_d2[(i, (i + 1) % n)] -= c;
                    neg_d2[(i, (i + n - 1) % n)] -= c;
                }
            }
        }
        Ok(Self {
            n,
            x0,
            xn,
            delta,
            eps,
            sigma: 1.0,
            disc,
            grid,
            x2,
            symbol,
            forward,
            inverse,
            neg_d2,
        })
    }

    /// N = 128 on [−10, 10] with the spectral discretization.
    pub fn standard(delta: f64, eps: f64) -> Result<Self> {
        Self::new(128, -10.0, 10.0, delta, eps, Discretization::Spectral)
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn grid(&self) -> &Vector {
        &self.grid
    }

    pub fn discretization(&self) -> Discretization {
        self.disc
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x0, self.xn)
    }

    /// Multiplier of x² in the potential: 1 + ε cos(δt).
    fn potential_factor(&self, t: f64) -> f64 {
        1.0 + self.eps * (self.delta * t).cos()
    }

    /// −D₂ v without touching the ledger.
    fn neg_d2_apply(&self, v: &Vector) -> Vector {
        match self.disc {
            Discretization::Spectral => {
                let (fwd, inv) = (self.forward.as_ref().unwrap(), self.inverse.as_ref().unwrap());
                let mut buf: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
                fwd.process(&mut buf);
                let scale = 1.0 / self.n as f64;
                for (b, s) in buf.iter_mut().zip(&self.symbol) {
                    *b *= -s * scale;
                }
                inv.process(&mut buf);
                Vector::from_iterator(self.n, buf.iter().map(|c| c.re))
            }
            Discretization::Fd2 => {
                let n = self.n;
                let dx = (self.xn - self.x0) / n as f64;
                let c = 1.0 / (dx * dx);
                Vector::from_fn(n, |i, _| c * (2.0 * v[i] - v[(i + 1) % n] - v[(i + n - 1) % n]))
            }
        }
    }

    /// σ cos(t) e^{−x²/2} on the grid: the exact solution when ε = 0 (up to
    /// discretization error).
    pub fn analytic_g0(&self, t: f64) -> Vector {
        let c = self.sigma * t.cos();
        self.x2.map(|x2| c * (-0.5 * x2).exp())
    }

    /// u(x, 0) = σ e^{−x²/2}, u_t(x, 0) = 0.
    pub fn initial_state(&self) -> PhasePoint {
        PhasePoint {
            q: self.analytic_g0(0.0),
            p: Vector::zeros(self.n),
        }
    }
}

impl LinearProblem for WaveProblem {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval(&self, t: f64) -> Result<SymmetricMatrix> {
        let mut m = self.neg_d2.clone();
        let f = self.potential_factor(t);
        for i in 0..self.n {
            m[(i, i)] += f * self.x2[i];
        }
        SymmetricMatrix::new(m)
    }

    fn apply(&self, t: f64, v: &Vector, ledger: &CostLedger) -> Result<Vector> {
        self.apply_combination(&[(t, 1.0)], v, ledger)
    }

    fn apply_combination(&self, terms: &[(f64, f64)], v: &Vector, ledger: &CostLedger) -> Result<Vector> {
        check_len(self.n, v)?;
        let wsum: f64 = terms.iter().map(|&(_, w)| w).sum();
        let fsum: f64 = terms.iter().map(|&(t, w)| w * self.potential_factor(t)).sum();
        ledger.add_matvec(1);
        let mut out = self.neg_d2_apply(v);
        out *= wsum;
        for i in 0..self.n {
            out[i] += fsum * self.x2[i] * v[i];
        }
        Ok(out)
    }

    fn spectral_radius_estimate(&self, t: f64) -> Option<f64> {
        let len = self.xn - self.x0;
        let dx = len / self.n as f64;
        let d2 = match self.disc {
            Discretization::Spectral => (PI * self.n as f64 / len).powi(2),
            Discretization::Fd2 => 4.0 / (dx * dx),
        };
        let xmax = self.x2.max();
        Some(d2 + xmax * self.potential_factor(t).abs())
    }

    fn cache_key(&self) -> Option<String> {
        Some(format!(
            "wave:n={}:x0={:?}:xn={:?}:delta={:?}:eps={:?}:disc={}",
            self.n, self.x0, self.xn, self.delta, self.eps, self.disc
        ))
    }

    fn period(&self) -> Option<f64> {
        (self.eps != 0.0 && self.delta != 0.0).then(|| 2.0 * PI / self.delta.abs())
    }
}
