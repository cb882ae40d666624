//! Plain-text `key=value` configuration shared by the library harness and
//! the command-line tool.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{PhasePoint, Vector};
use crate::problem::LinearProblem;
use crate::problems::{Discretization, HillPascalProblem, MathieuProblem, WaveProblem};

pub type KeyValues = BTreeMap<String, String>;

/// Parses `key=value` lines; blank lines and `#` comments are ignored.
pub fn parse_key_values(text: &str) -> Result<KeyValues> {
    let mut out = KeyValues::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::InvalidArgument(format!("line {}: expected key=value, got '{line}'", n + 1)))?;
        let k = k.trim().replace('-', "_");
        if k.is_empty() {
            return Err(Error::InvalidArgument(format!("line {}: empty key", n + 1)));
        }
        out.insert(k, v.trim().to_string());
    }
    Ok(out)
}

/// Reads a real number; accepts `pi`, `pi/20`, `2*pi`, `2pi` and `1/3` forms.
pub fn parse_real(s: &str) -> Result<f64> {
    let bad = || Error::InvalidArgument(format!("cannot parse '{s}' as a number"));
    let t = s.trim().to_ascii_lowercase();
    let atom = |a: &str| -> Result<f64> {
        let a = a.trim();
        if a == "pi" {
            return Ok(PI);
        }
        if let Some(c) = a.strip_suffix("pi") {
            let c = c.trim().trim_end_matches('*');
            return Ok(c.trim().parse::<f64>().map_err(|_| bad())? * PI);
        }
        a.parse::<f64>().map_err(|_| bad())
    };
    let value = match t.split_once('/') {
        Some((num, den)) => atom(num)? / atom(den)?,
        None => atom(&t)?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(bad())
    }
}

pub fn parse_list<T>(s: &str, item: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty()).map(item).collect()
}

fn get_real(kv: &KeyValues, key: &str, default: f64) -> Result<f64> {
    kv.get(key).map(|v| parse_real(v)).unwrap_or(Ok(default))
}

fn get_usize(kv: &KeyValues, key: &str, default: usize) -> Result<usize> {
    match kv.get(key) {
        None => Ok(default),
        Some(v) => v
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("{key}: expected a non-negative integer, got '{v}'"))),
    }
}

/// Which benchmark problem to build, with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum ProblemConfig {
    Mathieu { omega: f64, eps: f64 },
    Hill { r: usize, eps: f64 },
    Wave { n: usize, x0: f64, xn: f64, delta: f64, eps: f64, disc: Discretization },
}

impl ProblemConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ProblemConfig::Mathieu { .. } => "mathieu",
            ProblemConfig::Hill { .. } => "hill",
            ProblemConfig::Wave { .. } => "wave",
        }
    }

    pub fn build(&self) -> Result<Box<dyn LinearProblem>> {
        Ok(match *self {
            ProblemConfig::Mathieu { omega, eps } => Box::new(MathieuProblem::new(omega, eps)),
            ProblemConfig::Hill { r, eps } => Box::new(HillPascalProblem::new(r, eps)?),
            ProblemConfig::Wave { n, x0, xn, delta, eps, disc } => Box::new(WaveProblem::new(n, x0, xn, delta, eps, disc)?),
        })
    }

    /// Starting state for vector-mode runs: the Gaussian for the wave
    /// problem, q = (1, …, 1), p = 0 otherwise.
    pub fn initial_state(&self) -> Result<PhasePoint> {
        Ok(match *self {
            ProblemConfig::Wave { n, x0, xn, delta, eps, disc } => WaveProblem::new(n, x0, xn, delta, eps, disc)?.initial_state(),
            ProblemConfig::Mathieu { .. } => PhasePoint::new(Vector::from_element(1, 1.0), Vector::zeros(1))?,
            ProblemConfig::Hill { r, .. } => PhasePoint::new(Vector::from_element(r, 1.0), Vector::zeros(r))?,
        })
    }

    /// Exact solution at `t` for the vector initial state, when known.
    pub fn analytic_positions(&self, t: f64) -> Result<Option<Vector>> {
        Ok(match *self {
            ProblemConfig::Wave { n, x0, xn, delta, eps, disc } if eps == 0.0 => {
                Some(WaveProblem::new(n, x0, xn, delta, eps, disc)?.analytic_g0(t))
            }
            _ => None,
        })
    }

    /// Default interval end: one period of the coefficients (π) for Mathieu
    /// and Hill, 20π/δ for the wave problem.
    pub fn default_t1(&self) -> f64 {
        match *self {
            ProblemConfig::Wave { delta, .. } if delta != 0.0 => 20.0 * PI / delta.abs(),
            ProblemConfig::Wave { .. } => 20.0 * PI,
            _ => PI,
        }
    }

    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        let problem = kv.get("problem").map(String::as_str).unwrap_or("mathieu");
        match problem {
            "mathieu" => Ok(ProblemConfig::Mathieu {
                omega: get_real(kv, "omega", 1.0)?,
                eps: get_real(kv, "eps", 1.0)?,
            }),
            "hill" => {
                let r = get_usize(kv, "r", 5)?;
                Ok(ProblemConfig::Hill {
                    r,
                    eps: get_real(kv, "eps", r as f64)?,
                })
            }
            "wave" => Ok(ProblemConfig::Wave {
                n: get_usize(kv, "n_grid", 128)?,
                x0: get_real(kv, "x0", -10.0)?,
                xn: get_real(kv, "xn", 10.0)?,
                delta: get_real(kv, "delta", 1.0)?,
                eps: get_real(kv, "eps", 0.5)?,
                disc: kv.get("disc").map(|d| d.parse()).unwrap_or(Ok(Discretization::Spectral))?,
            }),
            other => Err(Error::InvalidArgument(format!(
                "unknown problem '{other}' (expected mathieu, hill or wave)"
            ))),
        }
    }

    pub fn to_key_values(&self) -> KeyValues {
        let mut kv = KeyValues::new();
        kv.insert("problem".into(), self.name().into());
        match *self {
            ProblemConfig::Mathieu { omega, eps } => {
                kv.insert("omega".into(), format!("{omega:?}"));
                kv.insert("eps".into(), format!("{eps:?}"));
            }
            ProblemConfig::Hill { r, eps } => {
                kv.insert("r".into(), r.to_string());
                kv.insert("eps".into(), format!("{eps:?}"));
            }
            ProblemConfig::Wave { n, x0, xn, delta, eps, disc } => {
                kv.insert("n_grid".into(), n.to_string());
                kv.insert("x0".into(), format!("{x0:?}"));
                kv.insert("xn".into(), format!("{xn:?}"));
                kv.insert("delta".into(), format!("{delta:?}"));
                kv.insert("eps".into(), format!("{eps:?}"));
                kv.insert("disc".into(), disc.to_string());
            }
        }
        kv
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Matrix,
    Vector,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Matrix => "matrix",
            Mode::Vector => "vector",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "matrix" => Ok(Mode::Matrix),
            "vector" => Ok(Mode::Vector),
            _ => Err(Error::InvalidArgument(format!("unknown mode '{s}' (expected matrix or vector)"))),
        }
    }
}
