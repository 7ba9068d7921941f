//! Symmetric norms and symmetric anti-norms evaluated through the spectrum.
//!
//! Every catalog entry depends only on the eigenvalue multiset of a positive
//! semidefinite argument, so evaluation reduces to a function of the ascending
//! spectrum.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::linalg::{CMatrix, HermMatrix, PosDefMatrix};

/// Eigenvalues below this fraction of the largest one count as zero when a
/// functional needs to decide invertibility.
pub const RANK_FLOOR: f64 = 1e-14;

/// Negative eigenvalues of a "PSD" argument beyond this fraction of the scale are rejected.
const PSD_TOLERANCE: f64 = 1e-12;

/// Whether a functional is subadditive (norm), superadditive (anti-norm), or both.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormClass {
    Norm,
    AntiNorm,
    Both,
}

impl NormClass {
    pub fn is_norm(self) -> bool {
        matches!(self, NormClass::Norm | NormClass::Both)
    }

    pub fn is_antinorm(self) -> bool {
        matches!(self, NormClass::AntiNorm | NormClass::Both)
    }
}

/// Catalog of symmetric (anti-)norms on positive semidefinite matrices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum NormSpec {
    /// Sum of the `k` largest eigenvalues.
    #[serde(rename = "kyfan")]
    KyFanNorm { k: usize },
    /// Sum of the `k` smallest eigenvalues.
    #[serde(rename = "kyfan-anti")]
    KyFanAntiNorm { k: usize },
    /// `(sum lambda^p)^{1/p}`, `0 < p < 1`.
    #[serde(rename = "schatten-quasi")]
    SchattenQuasi { p: f64 },
    /// `(sum lambda^{-p})^{-1/p}`, zero on singular arguments.
    #[serde(rename = "negative-schatten")]
    NegativeSchatten { p: f64 },
    /// Geometric mean of the `k` smallest eigenvalues.
    #[serde(rename = "minkowski")]
    MinkowskiK { k: usize },
    #[serde(rename = "trace")]
    Trace,
    #[serde(rename = "operator")]
    OperatorNorm,
    #[serde(rename = "lambda-min")]
    SmallestEigenvalue,
    /// `||A^{-1}||^{-1}` for a norm-tagged base.
    #[serde(rename = "derived")]
    Derived { base: Box<NormSpec> },
}

impl NormSpec {
    pub fn class(&self) -> NormClass {
        match self {
            NormSpec::KyFanNorm { .. } | NormSpec::OperatorNorm => NormClass::Norm,
            NormSpec::Trace => NormClass::Both,
            NormSpec::KyFanAntiNorm { .. }
            | NormSpec::SchattenQuasi { .. }
            | NormSpec::NegativeSchatten { .. }
            | NormSpec::MinkowskiK { .. }
            | NormSpec::SmallestEigenvalue
            | NormSpec::Derived { .. } => NormClass::AntiNorm,
        }
    }

    pub fn derived(base: NormSpec) -> Self {
        NormSpec::Derived {
            base: Box::new(base),
        }
    }

    /// Check the parameters against the evaluation dimension.
    pub fn validate(&self, dim: usize) -> Result<()> {
        let check_k = |k: usize| {
            if k == 0 || k > dim {
                Err(LabError::InvalidParameter(format!(
                    "{self}: k must lie in 1..={dim}, got {k}"
                )))
            } else {
                Ok(())
            }
        };
        match self {
            NormSpec::KyFanNorm { k } | NormSpec::KyFanAntiNorm { k } | NormSpec::MinkowskiK { k } => {
                check_k(*k)
            }
            NormSpec::SchattenQuasi { p } => {
                if *p > 0.0 && *p < 1.0 {
                    Ok(())
                } else {
                    Err(LabError::InvalidParameter(format!(
                        "Schatten quasi-norm needs 0 < p < 1, got {p}"
                    )))
                }
            }
            NormSpec::NegativeSchatten { p } => {
                if *p > 0.0 && p.is_finite() {
                    Ok(())
                } else {
                    Err(LabError::InvalidParameter(format!(
                        "negative Schatten anti-norm needs p > 0, got {p}"
                    )))
                }
            }
            NormSpec::Derived { base } => {
                if !base.class().is_norm() {
                    return Err(LabError::InvalidParameter(format!(
                        "derived anti-norm needs a norm-tagged base, got {base}"
                    )));
                }
                base.validate(dim)
            }
            NormSpec::Trace | NormSpec::OperatorNorm | NormSpec::SmallestEigenvalue => Ok(()),
        }
    }

    /// Evaluate on an ascending spectrum of a PSD matrix.
    pub fn eval_spectrum(&self, ascending: &[f64]) -> Result<f64> {
        let dim = ascending.len();
        self.validate(dim)?;
        let lambda: Vec<f64> = ascending.iter().map(|v| v.max(0.0)).collect();
        let top = lambda[dim - 1];
        let singular = lambda[0] <= RANK_FLOOR * top || top == 0.0;
        let value = match self {
            NormSpec::KyFanNorm { k } => lambda[dim - k..].iter().sum(),
            NormSpec::KyFanAntiNorm { k } => lambda[..*k].iter().sum(),
            NormSpec::SchattenQuasi { p } => {
                lambda.iter().map(|v| v.powf(*p)).sum::<f64>().powf(1.0 / p)
            }
            NormSpec::NegativeSchatten { p } => {
                if singular {
                    0.0
                } else {
                    lambda.iter().map(|v| v.powf(-p)).sum::<f64>().powf(-1.0 / p)
                }
            }
            NormSpec::MinkowskiK { k } => {
                let smallest = &lambda[..*k];
                if smallest[0] <= RANK_FLOOR * top || top == 0.0 {
                    0.0
                } else {
                    // mean of logs avoids underflow of the product
                    (smallest.iter().map(|v| v.ln()).sum::<f64>() / *k as f64).exp()
                }
            }
            NormSpec::Trace => lambda.iter().sum(),
            NormSpec::OperatorNorm => top,
            NormSpec::SmallestEigenvalue => lambda[0],
            NormSpec::Derived { base } => {
                if singular {
                    0.0
                } else {
                    let inverse: Vec<f64> = lambda.iter().rev().map(|v| 1.0 / v).collect();
                    1.0 / base.eval_spectrum(&inverse)?
                }
            }
        };
        Ok(value)
    }
}

impl fmt::Display for NormSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormSpec::KyFanNorm { k } => write!(f, "kyfan:{k}"),
            NormSpec::KyFanAntiNorm { k } => write!(f, "kyfan-anti:{k}"),
            NormSpec::SchattenQuasi { p } => write!(f, "schatten-quasi:{p}"),
            NormSpec::NegativeSchatten { p } => write!(f, "negative-schatten:{p}"),
            NormSpec::MinkowskiK { k } => write!(f, "minkowski:{k}"),
            NormSpec::Trace => write!(f, "trace"),
            NormSpec::OperatorNorm => write!(f, "operator"),
            NormSpec::SmallestEigenvalue => write!(f, "lambda-min"),
            NormSpec::Derived { base } => write!(f, "derived:{base}"),
        }
    }
}

impl FromStr for NormSpec {
    type Err = LabError;

    /// Parses `trace`, `operator`, `lambda-min`, `kyfan:K`, `kyfan-anti:K`,
    /// `schatten-quasi:P`, `negative-schatten:P`, `minkowski:K`, `derived:<norm>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        let need = |what: &str| {
            arg.ok_or_else(|| LabError::InvalidParameter(format!("`{head}` needs `:{what}`")))
        };
        let int = |a: &str| {
            a.parse::<usize>()
                .map_err(|_| LabError::InvalidParameter(format!("bad integer `{a}` in `{s}`")))
        };
        let real = |a: &str| {
            a.parse::<f64>()
                .map_err(|_| LabError::InvalidParameter(format!("bad number `{a}` in `{s}`")))
        };
        let spec = match head {
            "trace" => NormSpec::Trace,
            "operator" | "op" => NormSpec::OperatorNorm,
            "lambda-min" | "min-eig" => NormSpec::SmallestEigenvalue,
            "kyfan" => NormSpec::KyFanNorm { k: int(need("K")?)? },
            "kyfan-anti" => NormSpec::KyFanAntiNorm { k: int(need("K")?)? },
            "schatten-quasi" => NormSpec::SchattenQuasi { p: real(need("P")?)? },
            "negative-schatten" | "neg-schatten" => NormSpec::NegativeSchatten { p: real(need("P")?)? },
            "minkowski" => NormSpec::MinkowskiK { k: int(need("K")?)? },
            "derived" => NormSpec::derived(need("NORM")?.parse()?),
            other => {
                return Err(LabError::InvalidParameter(format!("unknown norm `{other}`")));
            }
        };
        Ok(spec)
    }
}

/// Evaluate a catalog functional on a positive definite matrix.
pub fn eval_norm(spec: &NormSpec, p: &PosDefMatrix) -> Result<f64> {
    spec.eval_spectrum(p.spectrum())
}

/// Evaluate on a positive semidefinite (possibly singular) Hermitian matrix.
///
/// Eigenvalues within roundoff of zero are treated as exact zeros.
pub fn eval_norm_psd(spec: &NormSpec, h: &HermMatrix) -> Result<f64> {
    let eig = h.eigenvalues();
    let scale = eig.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
    if eig[0] < -PSD_TOLERANCE * scale {
        return Err(LabError::NotPositiveDefinite {
            min_eigenvalue: eig[0],
        });
    }
    let top = eig.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let cleaned: Vec<f64> = eig
        .iter()
        .map(|&v| if v.abs() <= PSD_TOLERANCE * top { 0.0 } else { v })
        .collect();
    spec.eval_spectrum(&cleaned)
}

/// `||P^{-1}||^{-1}` for a norm-tagged entry; zero when `P` is numerically singular.
pub fn derived_antinorm(spec: &NormSpec, p: &PosDefMatrix) -> Result<f64> {
    NormSpec::derived(spec.clone()).eval_spectrum(p.spectrum())
}

/// Compression `V* C V` onto the range of an isometry `V` (columns orthonormal).
pub fn compress(c: &HermMatrix, isometry: &CMatrix) -> Result<HermMatrix> {
    c.congruence(isometry)
}
