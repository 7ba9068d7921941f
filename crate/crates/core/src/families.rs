//! The four functional families and the variational functional.
//!
//! * Lieb: `||{Phi(A^p)^{1/2} Psi(B^q) Phi(A^p)^{1/2}}^s||`
//! * MeanFamily: `||{Phi(A^p) sigma Psi(B^q)}^s||`
//! * Epstein: `||Phi(A^p)^s||`
//! * LogExp: `||exp{Phi(log A) + Psi(log B)}||` for unital pairs

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::linalg::{max_abs_entry, CMatrix, HermMatrix, PosDefMatrix};
use crate::means::MeanSpec;
use crate::norms::NormSpec;
use crate::posmaps::{strict_positivity, MapSpec};

/// Relative eigenvalue floor of the inner matrix before `x^s` is applied.
pub const INNER_FLOOR: f64 = 1e-13;

/// Maximum entrywise deviation of `Phi(I) + Psi(I)` from `I` accepted by LogExp.
pub const UNITALITY_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterPoint {
    pub p: f64,
    pub q: f64,
    pub s: f64,
}

impl ParameterPoint {
    pub fn new(p: f64, q: f64, s: f64) -> Self {
        Self { p, q, s }
    }
}

impl fmt::Display for ParameterPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(p, q, s) = ({}, {}, {})", self.p, self.q, self.s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    Lieb,
    #[serde(rename = "mean")]
    MeanFamily,
    Epstein,
    #[serde(rename = "logexp")]
    LogExp,
}

impl FamilyKind {
    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::Lieb => "lieb",
            FamilyKind::MeanFamily => "mean",
            FamilyKind::Epstein => "epstein",
            FamilyKind::LogExp => "logexp",
        }
    }

    pub fn takes_b(self) -> bool {
        self != FamilyKind::Epstein
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for FamilyKind {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lieb" => Ok(FamilyKind::Lieb),
            "mean" | "mean-family" => Ok(FamilyKind::MeanFamily),
            "epstein" => Ok(FamilyKind::Epstein),
            "logexp" | "log-exp" => Ok(FamilyKind::LogExp),
            other => Err(LabError::InvalidParameter(format!("unknown family `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub family: FamilyKind,
    pub phi: MapSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi: Option<MapSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<MeanSpec>,
    pub norm: NormSpec,
    pub params: ParameterPoint,
}

impl FamilySpec {
    pub fn lieb(phi: MapSpec, psi: MapSpec, norm: NormSpec, params: ParameterPoint) -> Result<Self> {
        Self {
            family: FamilyKind::Lieb,
            phi,
            psi: Some(psi),
            mean: None,
            norm,
            params,
        }
        .checked()
    }

    pub fn mean_family(
        phi: MapSpec,
        psi: MapSpec,
        mean: MeanSpec,
        norm: NormSpec,
        params: ParameterPoint,
    ) -> Result<Self> {
        Self {
            family: FamilyKind::MeanFamily,
            phi,
            psi: Some(psi),
            mean: Some(mean),
            norm,
            params,
        }
        .checked()
    }

    pub fn epstein(phi: MapSpec, norm: NormSpec, p: f64, s: f64) -> Result<Self> {
        Self {
            family: FamilyKind::Epstein,
            phi,
            psi: None,
            mean: None,
            norm,
            params: ParameterPoint::new(p, 0.0, s),
        }
        .checked()
    }

    /// Log-exp family; `params` is unused and stored as `(0, 0, 1)`.
    pub fn logexp(phi: MapSpec, psi: MapSpec, norm: NormSpec) -> Result<Self> {
        Self {
            family: FamilyKind::LogExp,
            phi,
            psi: Some(psi),
            mean: None,
            norm,
            params: ParameterPoint::new(0.0, 0.0, 1.0),
        }
        .checked()
    }

    fn checked(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    /// Input dimensions `(n, m)`; `m` is absent for Epstein.
    pub fn input_dims(&self) -> (usize, Option<usize>) {
        (self.phi.in_dim, self.psi.as_ref().map(|m| m.in_dim))
    }

    pub fn output_dim(&self) -> usize {
        self.phi.out_dim
    }

    pub fn validate(&self) -> Result<()> {
        let ParameterPoint { p, q, s } = self.params;
        if ![p, q, s].iter().all(|v| v.is_finite()) {
            return Err(LabError::InvalidParameter(format!("non-finite parameters {}", self.params)));
        }
        match self.family {
            FamilyKind::Lieb | FamilyKind::MeanFamily => {
                if p == 0.0 && q == 0.0 {
                    return Err(LabError::InvalidParameter("(p, q) must not be (0, 0)".into()));
                }
                if s == 0.0 {
                    return Err(LabError::InvalidParameter("s must be non-zero".into()));
                }
            }
            FamilyKind::Epstein => {
                if p == 0.0 || s == 0.0 {
                    return Err(LabError::InvalidParameter("Epstein needs p != 0 and s != 0".into()));
                }
            }
            FamilyKind::LogExp => {}
        }
        match (self.family, &self.psi) {
            (FamilyKind::Epstein, Some(_)) => {
                return Err(LabError::InvalidParameter("Epstein takes a single map".into()))
            }
            (FamilyKind::Epstein, None) => {}
            (_, None) => {
                return Err(LabError::InvalidParameter(format!("{} family needs `psi`", self.family)))
            }
            (_, Some(psi)) => {
                if psi.out_dim != self.phi.out_dim {
                    return Err(LabError::DimensionMismatch {
                        expected: self.phi.out_dim,
                        found: psi.out_dim,
                    });
                }
            }
        }
        match (self.family, &self.mean) {
            (FamilyKind::MeanFamily, None) => {
                return Err(LabError::InvalidParameter("mean family needs `mean`".into()))
            }
            (FamilyKind::MeanFamily, Some(mean)) => mean.validate()?,
            (_, Some(_)) => {
                return Err(LabError::InvalidParameter(format!(
                    "{} family takes no `mean`",
                    self.family
                )))
            }
            (_, None) => {}
        }
        self.norm.validate(self.output_dim())?;
        match self.family {
            FamilyKind::LogExp => {
                let psi = self.psi.as_ref().expect("checked above");
                let total = self.phi.unit_image().add(&psi.unit_image())?;
                let deviation = max_abs_entry(&(total.matrix() - CMatrix::identity(total.dim(), total.dim())));
                if deviation > UNITALITY_TOLERANCE {
                    return Err(LabError::UnitalityViolation { deviation });
                }
            }
            _ => {
                strict_positivity(&self.phi)?;
                if let Some(psi) = &self.psi {
                    strict_positivity(psi)?;
                }
            }
        }
        Ok(())
    }

    /// Same family with different parameters.
    pub fn with_params(&self, params: ParameterPoint) -> Result<Self> {
        Self { params, ..self.clone() }.checked()
    }

    /// Matrix whose spectrum, transformed by `x^s` (or `exp` for LogExp), is fed to the norm.
    pub fn inner_matrix(&self, a: &PosDefMatrix, b: Option<&PosDefMatrix>) -> Result<HermMatrix> {
        let ParameterPoint { p, q, .. } = self.params;
        let missing = || LabError::InvalidParameter(format!("{} family needs B", self.family));
        let psi = || self.psi.as_ref().expect("validated");
        match self.family {
            FamilyKind::Epstein => self.phi.apply(a.power(p).as_herm()),
            FamilyKind::Lieb => {
                let c = self.phi.apply_pd(&a.power(p))?;
                let d = psi().apply(b.ok_or_else(missing)?.power(q).as_herm())?;
                lieb_core(&c, &d)
            }
            FamilyKind::MeanFamily => {
                let c = self.phi.apply_pd(&a.power(p))?;
                let d = psi().apply_pd(&b.ok_or_else(missing)?.power(q))?;
                Ok(self.mean.as_ref().expect("validated").eval(&c, &d)?.as_herm().clone())
            }
            FamilyKind::LogExp => {
                let left = self.phi.apply(&a.log())?;
                let right = psi().apply(&b.ok_or_else(missing)?.log())?;
                left.add(&right)
            }
        }
    }

    /// Ascending spectrum handed to the norm.
    pub fn transformed_spectrum(&self, a: &PosDefMatrix, b: Option<&PosDefMatrix>) -> Result<Vec<f64>> {
        let inner = self.inner_matrix(a, b)?;
        match self.family {
            FamilyKind::LogExp => Ok(inner.eigenvalues().into_iter().map(f64::exp).collect()),
            _ => powered_spectrum(&inner, self.params.s),
        }
    }

    /// Evaluate the functional; `b` is ignored by Epstein.
    pub fn eval(&self, a: &PosDefMatrix, b: Option<&PosDefMatrix>) -> Result<f64> {
        let (n, m) = self.input_dims();
        if a.dim() != n {
            return Err(LabError::DimensionMismatch {
                expected: n,
                found: a.dim(),
            });
        }
        if let (Some(m), Some(b)) = (m, b) {
            if b.dim() != m {
                return Err(LabError::DimensionMismatch {
                    expected: m,
                    found: b.dim(),
                });
            }
        }
        self.norm.eval_spectrum(&self.transformed_spectrum(a, b)?)
    }
}

/// `C^{1/2} D C^{1/2}`, Hermitized.
pub fn lieb_core(c: &PosDefMatrix, d: &HermMatrix) -> Result<HermMatrix> {
    if c.dim() != d.dim() {
        return Err(LabError::DimensionMismatch {
            expected: c.dim(),
            found: d.dim(),
        });
    }
    let root = c.sqrt();
    Ok(HermMatrix::hermitize(root.matrix() * d.matrix() * root.matrix()))
}

/// Eigenvalues of `inner^s`, ascending, after flooring at `INNER_FLOOR * lambda_max`.
pub fn powered_spectrum(inner: &HermMatrix, s: f64) -> Result<Vec<f64>> {
    let eig = inner.eigenvalues();
    let (lo, hi) = (eig[0], eig[eig.len() - 1]);
    let floor = INNER_FLOOR * hi;
    if !(hi > 0.0) || lo < -floor {
        return Err(LabError::IndefiniteInner {
            min_eigenvalue: lo,
            max_eigenvalue: hi,
        });
    }
    let mut out: Vec<f64> = eig.iter().map(|&v| v.max(floor).powf(s)).collect();
    out.sort_by(f64::total_cmp);
    Ok(out)
}

fn check_map_input(spec: &FamilySpec, kind: FamilyKind) -> Result<()> {
    if spec.family != kind {
        return Err(LabError::InvalidParameter(format!(
            "expected a {kind} family, got {}",
            spec.family
        )));
    }
    spec.validate()
}

pub fn eval_lieb(spec: &FamilySpec, a: &PosDefMatrix, b: &PosDefMatrix) -> Result<f64> {
    check_map_input(spec, FamilyKind::Lieb)?;
    spec.eval(a, Some(b))
}

pub fn eval_mean_family(spec: &FamilySpec, a: &PosDefMatrix, b: &PosDefMatrix) -> Result<f64> {
    check_map_input(spec, FamilyKind::MeanFamily)?;
    spec.eval(a, Some(b))
}

pub fn eval_epstein(spec: &FamilySpec, a: &PosDefMatrix) -> Result<f64> {
    check_map_input(spec, FamilyKind::Epstein)?;
    spec.eval(a, None)
}

pub fn eval_logexp(spec: &FamilySpec, a: &PosDefMatrix, b: &PosDefMatrix) -> Result<f64> {
    check_map_input(spec, FamilyKind::LogExp)?;
    spec.eval(a, Some(b))
}

fn check_r(r: f64) -> Result<()> {
    if (1.0..=2.0).contains(&r) {
        Ok(())
    } else {
        Err(LabError::InvalidParameter(format!("variational exponent r must lie in [1, 2], got {r}")))
    }
}

/// `(1/r) Tr{C B^{1-r} + (r-1) B}` with `C = Phi(A^p)`.
pub fn variational_value(phi: &MapSpec, p: f64, r: f64, a: &PosDefMatrix, b: &PosDefMatrix) -> Result<f64> {
    check_r(r)?;
    let c = phi.apply(a.power(p).as_herm())?;
    variational_objective(&c, r, b)
}

fn variational_objective(c: &HermMatrix, r: f64, b: &PosDefMatrix) -> Result<f64> {
    if c.dim() != b.dim() {
        return Err(LabError::DimensionMismatch {
            expected: c.dim(),
            found: b.dim(),
        });
    }
    let cross = (c.matrix() * b.power(1.0 - r).matrix()).trace().re;
    Ok((cross + (r - 1.0) * b.as_herm().trace()) / r)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariationalOutcome {
    pub value: f64,
    pub target: f64,
    pub relative_gap: f64,
    pub iterations: usize,
}

/// Relative accuracy `variational_min` must reach against `Tr Phi(A^p)^{1/r}`.
pub const VARIATIONAL_TOLERANCE: f64 = 1e-6;

/// Minimize the variational functional over `B = exp(M)`, `M` Hermitian, starting at `M = 0`.
///
/// Quasi-Newton descent with exact gradients; `budget` caps the number of iterations.
pub fn variational_min(phi: &MapSpec, p: f64, r: f64, a: &PosDefMatrix, budget: usize) -> Result<VariationalOutcome> {
    check_r(r)?;
    let c = phi.apply(a.power(p).as_herm())?;
    let target: f64 = c.eigenvalues().iter().map(|v| v.max(0.0).powf(1.0 / r)).sum();
    let l = c.dim();
    let objective = |x: &[f64]| variational_with_gradient(&c, r, &hermitian_from_params(l, x));
    let (x, iterations) = bfgs(&objective, vec![0.0; l * l], budget);
    let value = objective(&x).0;
    let relative_gap = (value - target).abs() / target.abs().max(f64::MIN_POSITIVE);
    if relative_gap <= VARIATIONAL_TOLERANCE {
        Ok(VariationalOutcome {
            value,
            target,
            relative_gap,
            iterations,
        })
    } else {
        Err(LabError::BudgetExhausted {
            iterations,
            best: value,
            target,
            gap: relative_gap,
        })
    }
}

/// Real coordinates: diagonal first, then (re, im) of each strict upper entry.
fn hermitian_from_params(l: usize, x: &[f64]) -> HermMatrix {
    let mut m = CMatrix::zeros(l, l);
    for i in 0..l {
        m[(i, i)] = crate::linalg::c64(x[i], 0.0);
    }
    let mut k = l;
    for i in 0..l {
        for j in i + 1..l {
            let z = crate::linalg::c64(x[k], x[k + 1]);
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
            k += 2;
        }
    }
    HermMatrix::hermitize(m)
}

/// Objective at `B = exp(M)` and its gradient in the coordinates of [`hermitian_from_params`].
///
/// `d/dM Tr C e^{(1-r)M}` uses first divided differences of `x -> e^{(1-r)x}`.
fn variational_with_gradient(c: &HermMatrix, r: f64, m: &HermMatrix) -> (f64, Vec<f64>) {
    let l = m.dim();
    let spec = m.spectral();
    let lam = &spec.eigenvalues;
    let u = &spec.basis;
    let g = |x: f64| ((1.0 - r) * x).exp();
    let c_tilde = u.adjoint() * c.matrix() * u;
    let mut inner = CMatrix::zeros(l, l);
    let mut value = 0.0;
    for i in 0..l {
        value += c_tilde[(i, i)].re * g(lam[i]) + (r - 1.0) * lam[i].exp();
        for j in 0..l {
            let d = lam[i] - lam[j];
            let gamma = if d.abs() > 1e-9 * (1.0 + lam[i].abs()) {
                (g(lam[i]) - g(lam[j])) / d
            } else {
                (1.0 - r) * g(0.5 * (lam[i] + lam[j]))
            };
            inner[(i, j)] = c_tilde[(i, j)] * gamma;
        }
        inner[(i, i)] += crate::linalg::c64((r - 1.0) * lam[i].exp(), 0.0);
    }
    let full = u * inner * u.adjoint();
    let mut grad = vec![0.0; l * l];
    for i in 0..l {
        grad[i] = full[(i, i)].re / r;
    }
    let mut k = l;
    for i in 0..l {
        for j in i + 1..l {
            grad[k] = 2.0 * full[(i, j)].re / r;
            grad[k + 1] = 2.0 * full[(i, j)].im / r;
            k += 2;
        }
    }
    (value / r, grad)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Value and gradient.
type Objective<'a> = dyn Fn(&[f64]) -> (f64, Vec<f64>) + 'a;

fn bfgs(f: &Objective<'_>, mut x: Vec<f64>, budget: usize) -> (Vec<f64>, usize) {
    let n = x.len();
    let mut h = vec![vec![0.0; n]; n];
    for (i, row) in h.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let (mut fx, mut g) = f(&x);
    for iter in 0..budget {
        let gnorm = g.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if gnorm <= 1e-11 * fx.abs().max(1.0) {
            return (x, iter);
        }
        let mut d: Vec<f64> = h.iter().map(|row| -dot(row, &g)).collect();
        if dot(&d, &g) >= 0.0 {
            for row in h.iter_mut() {
                row.iter_mut().for_each(|v| *v = 0.0);
            }
            for (i, row) in h.iter_mut().enumerate() {
                row[i] = 1.0;
            }
            d = g.iter().map(|v| -v).collect();
        }
        let slope = dot(&d, &g);
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + step * di).collect();
            let (ft, gt) = f(&trial);
            if ft.is_finite() && ft <= fx + 1e-4 * step * slope {
                accepted = Some((trial, ft, gt));
                break;
            }
            step *= 0.5;
        }
        let Some((x_new, f_new, g_new)) = accepted else {
            return (x, iter);
        };
        if fx - f_new <= 4.0 * f64::EPSILON * fx.abs() {
            return (x_new, iter + 1);
        }
        let sv: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&sv, &yv);
        if sy > 1e-14 {
            let hy: Vec<f64> = h.iter().map(|row| dot(row, &yv)).collect();
            let yhy = dot(&yv, &hy);
            let rho = 1.0 / sy;
            for i in 0..n {
                for j in 0..n {
                    h[i][j] += rho * ((1.0 + rho * yhy) * sv[i] * sv[j] - hy[i] * sv[j] - sv[i] * hy[j]);
                }
            }
        }
        x = x_new;
        fx = f_new;
        g = g_new;
    }
    (x, budget)
}
