//! Kubo-Ando operator means through their representing functions.
//!
//! `A sigma B = A^{1/2} f(A^{-1/2} B A^{-1/2}) A^{1/2}` where `f` is operator
//! monotone with `f(1) = 1`. The transposed and adjoint constructions and the
//! plain sum are layered on top.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::linalg::{HermMatrix, PosDefMatrix};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MeanKind {
    Arithmetic,
    Harmonic,
    /// `x^t`, `t` in [0, 1]; `t = 1/2` is the geometric mean.
    WeightedGeometric(f64),
    /// `((1 + x^r)/2)^{1/r}`, `r` in [-1, 1] \ {0}.
    PowerMean(f64),
    /// `A + B`; not a mean, kept for the sum combiner.
    Sum,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeanModifier {
    /// `A sigma' B = B sigma A`.
    Transposed,
    /// `A sigma* B = (A^{-1} sigma B^{-1})^{-1}`.
    Adjoint,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanSpec {
    pub kind: MeanKind,
    pub modifier: Option<MeanModifier>,
}

impl MeanKind {
    /// Representing function; `None` for the non-normalized sum.
    pub fn representing(&self, x: f64) -> Option<f64> {
        Some(match *self {
            MeanKind::Arithmetic => 0.5 * (1.0 + x),
            MeanKind::Harmonic => 2.0 * x / (1.0 + x),
            MeanKind::WeightedGeometric(t) => x.powf(t),
            MeanKind::PowerMean(r) => (0.5 * (1.0 + x.powf(r))).powf(1.0 / r),
            MeanKind::Sum => return None,
        })
    }

    pub fn is_normalized(&self) -> bool {
        !matches!(self, MeanKind::Sum)
    }
}

impl MeanSpec {
    pub fn new(kind: MeanKind, modifier: Option<MeanModifier>) -> Result<Self> {
        let spec = Self { kind, modifier };
        spec.validate()?;
        Ok(spec)
    }

    pub fn plain(kind: MeanKind) -> Self {
        Self { kind, modifier: None }
    }

    pub fn arithmetic() -> Self {
        Self::plain(MeanKind::Arithmetic)
    }

    pub fn geometric() -> Self {
        Self::plain(MeanKind::WeightedGeometric(0.5))
    }

    pub fn harmonic() -> Self {
        Self::plain(MeanKind::Harmonic)
    }

    pub fn sum() -> Self {
        Self::plain(MeanKind::Sum)
    }

    /// Parameter ranges plus the normalization `f(1) = 1`, `f > 0` on a probe grid.
    pub fn validate(&self) -> Result<()> {
        match self.kind {
            MeanKind::WeightedGeometric(t) if !(0.0..=1.0).contains(&t) => {
                return Err(LabError::InvalidParameter(format!(
                    "weighted geometric mean needs t in [0, 1], got {t}"
                )));
            }
            MeanKind::PowerMean(r) if !(-1.0..=1.0).contains(&r) || r == 0.0 => {
                return Err(LabError::InvalidParameter(format!(
                    "power mean needs r in [-1, 1] with r != 0, got {r}"
                )));
            }
            MeanKind::Sum if self.modifier.is_some() => {
                return Err(LabError::InvalidParameter(
                    "the sum combiner takes no modifier".into(),
                ));
            }
            _ => {}
        }
        if let Some(one) = self.kind.representing(1.0) {
            if (one - 1.0).abs() > 1e-14 {
                return Err(LabError::InvalidParameter(format!(
                    "representing function has f(1) = {one}"
                )));
            }
            for x in [1e-3, 0.1, 0.5, 2.0, 10.0, 1e3] {
                let fx = self.kind.representing(x).unwrap_or(0.0);
                if !(fx > 0.0 && fx.is_finite()) {
                    return Err(LabError::InvalidParameter(format!(
                        "representing function is not positive at {x}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn is_kubo_ando(&self) -> bool {
        self.kind.is_normalized()
    }

    pub fn eval(&self, a: &PosDefMatrix, b: &PosDefMatrix) -> Result<PosDefMatrix> {
        eval_mean(self, a, b)
    }
}

impl fmt::Display for MeanSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            MeanKind::Arithmetic => write!(f, "arithmetic")?,
            MeanKind::Harmonic => write!(f, "harmonic")?,
            MeanKind::WeightedGeometric(0.5) => write!(f, "geometric")?,
            MeanKind::WeightedGeometric(t) => write!(f, "geometric:{t}")?,
            MeanKind::PowerMean(r) => write!(f, "power:{r}")?,
            MeanKind::Sum => write!(f, "sum")?,
        }
        match self.modifier {
            Some(MeanModifier::Transposed) => write!(f, "+transposed"),
            Some(MeanModifier::Adjoint) => write!(f, "+adjoint"),
            None => Ok(()),
        }
    }
}

impl FromStr for MeanSpec {
    type Err = LabError;

    /// `arithmetic`, `harmonic`, `geometric[:T]`, `power:R`, `sum`, optionally
    /// suffixed by `+transposed` or `+adjoint`.
    fn from_str(s: &str) -> Result<Self> {
        let (body, modifier) = match s.trim().split_once('+') {
            Some((b, "transposed")) => (b, Some(MeanModifier::Transposed)),
            Some((b, "adjoint")) => (b, Some(MeanModifier::Adjoint)),
            Some((_, other)) => {
                return Err(LabError::InvalidParameter(format!("unknown mean modifier `{other}`")));
            }
            None => (s.trim(), None),
        };
        let (head, arg) = match body.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (body, None),
        };
        let real = |a: Option<&str>, default: Option<f64>| -> Result<f64> {
            match (a, default) {
                (Some(a), _) => a
                    .parse::<f64>()
                    .map_err(|_| LabError::InvalidParameter(format!("bad number `{a}` in `{s}`"))),
                (None, Some(d)) => Ok(d),
                (None, None) => Err(LabError::InvalidParameter(format!("`{head}` needs a parameter"))),
            }
        };
        let kind = match head {
            "arithmetic" => MeanKind::Arithmetic,
            "harmonic" => MeanKind::Harmonic,
            "geometric" => MeanKind::WeightedGeometric(real(arg, Some(0.5))?),
            "power" => MeanKind::PowerMean(real(arg, None)?),
            "sum" => MeanKind::Sum,
            other => return Err(LabError::InvalidParameter(format!("unknown mean `{other}`"))),
        };
        MeanSpec::new(kind, modifier)
    }
}

#[derive(Serialize, Deserialize)]
struct MeanJson {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    modifier: Option<MeanModifier>,
}

impl Serialize for MeanSpec {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let (kind, t, r) = match self.kind {
            MeanKind::Arithmetic => ("arithmetic", None, None),
            MeanKind::Harmonic => ("harmonic", None, None),
            MeanKind::WeightedGeometric(t) => ("geometric", Some(t), None),
            MeanKind::PowerMean(r) => ("power", None, Some(r)),
            MeanKind::Sum => ("sum", None, None),
        };
        MeanJson {
            kind: kind.to_string(),
            t,
            r,
            modifier: self.modifier,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for MeanSpec {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let raw = MeanJson::deserialize(deserializer)?;
        let kind = match raw.kind.as_str() {
            "arithmetic" => MeanKind::Arithmetic,
            "harmonic" => MeanKind::Harmonic,
            "geometric" => MeanKind::WeightedGeometric(raw.t.unwrap_or(0.5)),
            "power" => MeanKind::PowerMean(raw.r.ok_or_else(|| D::Error::custom("power mean needs `r`"))?),
            "sum" => MeanKind::Sum,
            other => return Err(D::Error::custom(format!("unknown mean kind `{other}`"))),
        };
        MeanSpec::new(kind, raw.modifier).map_err(D::Error::custom)
    }
}

/// `A^{1/2} f(A^{-1/2} B A^{-1/2}) A^{1/2}` for a representing function `f`.
fn through_representing<F: Fn(f64) -> f64>(
    f: F,
    a: &PosDefMatrix,
    b: &PosDefMatrix,
) -> Result<PosDefMatrix> {
    if a.dim() != b.dim() {
        return Err(LabError::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let half = a.sqrt();
    let inv_half = a.power(-0.5);
    let inner = PosDefMatrix::new(b.as_herm().congruence(inv_half.matrix())?)?;
    let mapped = inner.apply(f)?;
    PosDefMatrix::new(mapped.congruence(half.matrix())?)
}

fn eval_kind(kind: MeanKind, a: &PosDefMatrix, b: &PosDefMatrix) -> Result<PosDefMatrix> {
    match kind {
        MeanKind::Sum => PosDefMatrix::new(a.as_herm().add(b.as_herm())?),
        MeanKind::Arithmetic => PosDefMatrix::new(a.as_herm().add(b.as_herm())?.scaled(0.5)),
        _ => through_representing(|x| kind.representing(x).expect("normalized kind"), a, b),
    }
}

/// Evaluate `A sigma B` including the transposed/adjoint modifiers.
pub fn eval_mean(spec: &MeanSpec, a: &PosDefMatrix, b: &PosDefMatrix) -> Result<PosDefMatrix> {
    if a.dim() != b.dim() {
        return Err(LabError::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    match spec.modifier {
        None => eval_kind(spec.kind, a, b),
        Some(MeanModifier::Transposed) => eval_kind(spec.kind, b, a),
        Some(MeanModifier::Adjoint) => {
            Ok(eval_kind(spec.kind, &a.inverse(), &b.inverse())?.inverse())
        }
    }
}

/// A user-supplied representing function.
///
/// Operator monotonicity is not certified; results carry `verified = false`.
#[derive(Clone)]
pub struct CustomMean {
    pub name: String,
    pub f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl CustomMean {
    pub const VERIFIED: bool = false;

    pub fn new(name: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        let mean = Self {
            name: name.into(),
            f: Arc::new(f),
        };
        let one = (mean.f)(1.0);
        if (one - 1.0).abs() > 1e-12 {
            return Err(LabError::InvalidParameter(format!(
                "custom mean `{}` has f(1) = {one}",
                mean.name
            )));
        }
        Ok(mean)
    }

    pub fn eval(&self, a: &PosDefMatrix, b: &PosDefMatrix) -> Result<PosDefMatrix> {
        through_representing(|x| (self.f)(x), a, b)
    }
}

impl fmt::Debug for CustomMean {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CustomMean({}, unverified operator monotonicity)", self.name)
    }
}

/// Matrix power mean `((A^p + B^p)/2)^{1/p}`; `p = 0` gives `exp((log A + log B)/2)`.
pub fn power_mean(a: &PosDefMatrix, b: &PosDefMatrix, p: f64) -> Result<PosDefMatrix> {
    if a.dim() != b.dim() {
        return Err(LabError::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    if p == 0.0 {
        let avg = a.log().add(&b.log())?.scaled(0.5);
        return Ok(avg.exp());
    }
    let mid = HermMatrix::combine(0.5, a.power(p).as_herm(), b.power(p).as_herm())?;
    Ok(PosDefMatrix::new(mid)?.power(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_entry, random_posdef, stream_rng};

    fn close(a: &PosDefMatrix, b: &PosDefMatrix, tol: f64) -> bool {
        let scale = a.max_eigenvalue().max(b.max_eigenvalue()).max(1.0);
        max_abs_entry(&(a.matrix() - b.matrix())) <= tol * scale
    }

    fn all_kinds() -> Vec<MeanSpec> {
        vec![
            MeanSpec::arithmetic(),
            MeanSpec::harmonic(),
            MeanSpec::geometric(),
            MeanSpec::plain(MeanKind::WeightedGeometric(0.3)),
            MeanSpec::plain(MeanKind::PowerMean(0.5)),
            MeanSpec::plain(MeanKind::PowerMean(-0.7)),
        ]
    }

    #[test]
    fn arithmetic_example() {
        let a = PosDefMatrix::from_diag(&[1.0, 3.0]).unwrap();
        let b = PosDefMatrix::from_diag(&[3.0, 1.0]).unwrap();
        let m = eval_mean(&MeanSpec::arithmetic(), &a, &b).unwrap();
        assert!(close(&m, &PosDefMatrix::from_diag(&[2.0, 2.0]).unwrap(), 1e-15));
    }

    #[test]
    fn geometric_of_scalars() {
        let a = PosDefMatrix::from_diag(&[4.0, 4.0]).unwrap();
        let b = PosDefMatrix::identity(2);
        let m = eval_mean(&MeanSpec::geometric(), &a, &b).unwrap();
        assert!(close(&m, &PosDefMatrix::from_diag(&[2.0, 2.0]).unwrap(), 1e-14));
    }

    #[test]
    fn commuting_inputs_follow_scalar_formula() {
        let av = [0.3, 2.0, 5.0];
        let bv = [1.7, 0.4, 5.0];
        let a = PosDefMatrix::from_diag(&av).unwrap();
        let b = PosDefMatrix::from_diag(&bv).unwrap();
        for spec in all_kinds() {
            let m = eval_mean(&spec, &a, &b).unwrap();
            // scalar oracle: a * f(b / a) entrywise
            let want: Vec<f64> = av
                .iter()
                .zip(&bv)
                .map(|(x, y)| x * spec.kind.representing(y / x).unwrap())
                .collect();
            let expect = HermMatrix::from_diag(&want);
            assert!(
                max_abs_entry(&(m.matrix() - expect.matrix())) < 1e-13,
                "{spec}"
            );
        }
    }

    #[test]
    fn normalization_identities() {
        let mut rng = stream_rng(5, 0);
        let a = random_posdef(&mut rng, 3, 0.1, 10.0);
        let b = random_posdef(&mut rng, 3, 0.1, 10.0);
        for spec in all_kinds() {
            assert!(close(&eval_mean(&spec, &a, &a).unwrap(), &a, 1e-12), "{spec}");
        }
        let p1 = eval_mean(&MeanSpec::plain(MeanKind::PowerMean(1.0)), &a, &b).unwrap();
        assert!(close(&p1, &eval_mean(&MeanSpec::arithmetic(), &a, &b).unwrap(), 1e-12));
        let pm1 = eval_mean(&MeanSpec::plain(MeanKind::PowerMean(-1.0)), &a, &b).unwrap();
        assert!(close(&pm1, &eval_mean(&MeanSpec::harmonic(), &a, &b).unwrap(), 1e-12));
    }

    #[test]
    fn adjoint_of_arithmetic_is_harmonic() {
        let mut rng = stream_rng(6, 0);
        for _ in 0..20 {
            let a = random_posdef(&mut rng, 3, 0.1, 10.0);
            let b = random_posdef(&mut rng, 3, 0.1, 10.0);
            let adj = MeanSpec::new(MeanKind::Arithmetic, Some(MeanModifier::Adjoint)).unwrap();
            let got = eval_mean(&adj, &a, &b).unwrap();
            let want = eval_mean(&MeanSpec::harmonic(), &a, &b).unwrap();
            assert!(close(&got, &want, 1e-9));
        }
    }

    #[test]
    fn transposed_swaps_arguments_exactly() {
        let mut rng = stream_rng(7, 0);
        let a = random_posdef(&mut rng, 3, 0.1, 10.0);
        let b = random_posdef(&mut rng, 3, 0.1, 10.0);
        let t = MeanSpec::new(MeanKind::WeightedGeometric(0.3), Some(MeanModifier::Transposed)).unwrap();
        let got = eval_mean(&t, &a, &b).unwrap();
        let want = eval_mean(&MeanSpec::plain(MeanKind::WeightedGeometric(0.3)), &b, &a).unwrap();
        assert_eq!(got.matrix(), want.matrix());
    }

    #[test]
    fn symmetric_means_lie_between_harmonic_and_arithmetic() {
        let mut rng = stream_rng(8, 0);
        for _ in 0..30 {
            let a = random_posdef(&mut rng, 3, 0.1, 10.0);
            let b = random_posdef(&mut rng, 3, 0.1, 10.0);
            let lo = eval_mean(&MeanSpec::harmonic(), &a, &b).unwrap();
            let hi = eval_mean(&MeanSpec::arithmetic(), &a, &b).unwrap();
            for spec in all_kinds().into_iter().filter(|s| s.kind != MeanKind::WeightedGeometric(0.3)) {
                let m = eval_mean(&spec, &a, &b).unwrap();
                let tol = 1e-10 * hi.max_eigenvalue();
                assert!(crate::linalg::loewner_leq(lo.as_herm(), m.as_herm(), tol).unwrap().holds);
                assert!(crate::linalg::loewner_leq(m.as_herm(), hi.as_herm(), tol).unwrap().holds);
            }
        }
    }

    #[test]
    fn invalid_parameters() {
        assert!(MeanSpec::new(MeanKind::WeightedGeometric(1.5), None).is_err());
        assert!(MeanSpec::new(MeanKind::PowerMean(0.0), None).is_err());
        assert!(MeanSpec::new(MeanKind::PowerMean(2.0), None).is_err());
        assert!(MeanSpec::new(MeanKind::Sum, Some(MeanModifier::Adjoint)).is_err());
        let a = PosDefMatrix::identity(2);
        let b = PosDefMatrix::identity(3);
        assert!(eval_mean(&MeanSpec::arithmetic(), &a, &b).is_err());
    }

    #[test]
    fn parse_and_json() {
        let m: MeanSpec = "power:0.5+adjoint".parse().unwrap();
        assert_eq!(m.kind, MeanKind::PowerMean(0.5));
        assert_eq!(m.modifier, Some(MeanModifier::Adjoint));
        assert_eq!(m.to_string(), "power:0.5+adjoint");
        let text = serde_json::to_string(&m).unwrap();
        assert_eq!(text, r#"{"kind":"power","r":0.5,"modifier":"adjoint"}"#);
        let back: MeanSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
        let g: MeanSpec = serde_json::from_str(r#"{"kind":"geometric"}"#).unwrap();
        assert_eq!(g, MeanSpec::geometric());
        assert!(serde_json::from_str::<MeanSpec>(r#"{"kind":"power","r":3.0}"#).is_err());
    }

    #[test]
    fn custom_mean_matches_builtin() {
        let custom = CustomMean::new("sqrt", |x: f64| x.sqrt()).unwrap();
        const { assert!(!CustomMean::VERIFIED) };
        let mut rng = stream_rng(9, 0);
        let a = random_posdef(&mut rng, 2, 0.1, 10.0);
        let b = random_posdef(&mut rng, 2, 0.1, 10.0);
        let got = custom.eval(&a, &b).unwrap();
        let want = eval_mean(&MeanSpec::geometric(), &a, &b).unwrap();
        assert!(close(&got, &want, 1e-12));
        assert!(CustomMean::new("bad", |x: f64| 2.0 * x).is_err());
    }

    #[test]
    fn power_mean_examples() {
        let mut rng = stream_rng(10, 0);
        let a = random_posdef(&mut rng, 3, 0.1, 10.0);
        let b = random_posdef(&mut rng, 3, 0.1, 10.0);
        let p1 = power_mean(&a, &b, 1.0).unwrap();
        assert!(close(&p1, &eval_mean(&MeanSpec::arithmetic(), &a, &b).unwrap(), 1e-13));
        let pm1 = power_mean(&a, &b, -1.0).unwrap();
        let harmonic = PosDefMatrix::new(a.inverse().as_herm().add(b.inverse().as_herm()).unwrap())
            .unwrap()
            .inverse()
            .scaled(2.0)
            .unwrap();
        assert!(close(&pm1, &harmonic, 1e-12));

        let c = PosDefMatrix::from_diag(&[1.0, 4.0]).unwrap();
        let d = PosDefMatrix::from_diag(&[4.0, 1.0]).unwrap();
        let g = power_mean(&c, &d, 0.0).unwrap();
        assert!(close(&g, &PosDefMatrix::from_diag(&[2.0, 2.0]).unwrap(), 1e-14));
    }

    #[test]
    fn power_mean_is_continuous_at_zero() {
        let mut rng = stream_rng(11, 0);
        for _ in 0..20 {
            let a = random_posdef(&mut rng, 3, 0.1, 10.0);
            let b = random_posdef(&mut rng, 3, 0.1, 10.0);
            let at_zero = power_mean(&a, &b, 0.0).unwrap();
            for p in [1e-6, -1e-6, 5e-7] {
                let near = power_mean(&a, &b, p).unwrap();
                let rel = max_abs_entry(&(near.matrix() - at_zero.matrix())) / at_zero.max_eigenvalue();
                assert!(rel < 1e-5, "p = {p}: {rel}");
            }
        }
    }
}
