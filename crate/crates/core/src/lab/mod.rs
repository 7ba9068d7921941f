//! Randomized joint concavity/convexity testing.
//!
//! Every comparison is classified with the same policy: with
//! `scale = max(1, |lhs|, |rhs|)`, a violation up to `SLACK * scale` is noise,
//! one above `CLAIM_THRESHOLD * scale` is a claim, anything between is
//! inconclusive.

mod hunt;
mod loewner;
mod regions;
mod sweep;
mod verify;

pub use hunt::{hunt_counterexample, HuntConfig, HuntOutcome, HuntReport, STRUCTURED_EPS};
pub use loewner::{hunt_loewner, loewner_midpoint_test, LoewnerExpr, LoewnerHunt, LoewnerReport, LoewnerWitness};
pub use regions::{class_label, region_member, theorem_name, Claim, NormRequirement, TheoremId};
pub use sweep::{sweep, CellVerdict, SweepCell, SweepResult, SWEEP_CSV_HEADER};
pub use verify::{canonical_family, verify, verify_dominance, VerifyOptions};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::families::FamilySpec;
use crate::linalg::{random_posdef, stream_rng, HermMatrix, PosDefMatrix, SamplerConfig};

/// Numerical slack relative to `max(1, |lhs|, |rhs|)`.
pub const SLACK: f64 = 1e-8;
/// Violation claim threshold relative to `max(1, |lhs|, |rhs|)`.
pub const CLAIM_THRESHOLD: f64 = 1e-4;
/// Default mixing weights; one uniform weight per trial is added on top.
pub const DEFAULT_LAMBDAS: [f64; 3] = [0.5, 0.25, 0.9];
/// Fraction of failed trials above which a run is inconclusive.
pub const FAILURE_FRACTION: f64 = 0.01;
/// Relative agreement required when a certificate is replayed.
pub const REPLAY_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Concave,
    Convex,
}

impl Direction {
    pub fn flipped(self) -> Self {
        match self {
            Direction::Concave => Direction::Convex,
            Direction::Convex => Direction::Concave,
        }
    }

    /// Signed violation: concave `rhs - lhs`, convex `lhs - rhs`.
    pub fn violation(self, lhs: f64, rhs: f64) -> f64 {
        match self {
            Direction::Concave => rhs - lhs,
            Direction::Convex => lhs - rhs,
        }
    }
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Direction::Concave => "concave",
            Direction::Convex => "convex",
        })
    }
}

impl std::str::FromStr for Direction {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "concave" => Ok(Direction::Concave),
            "convex" => Ok(Direction::Convex),
            other => Err(LabError::InvalidParameter(format!("direction must be concave or convex, got `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Violated,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Violated => "VIOLATED",
            Verdict::Inconclusive => "INCONCLUSIVE",
        })
    }
}

pub fn comparison_scale(lhs: f64, rhs: f64) -> f64 {
    1f64.max(lhs.abs()).max(rhs.abs())
}

/// Classify a relative violation.
pub fn classify(relative_violation: f64) -> Verdict {
    if relative_violation <= SLACK {
        Verdict::Pass
    } else if relative_violation > CLAIM_THRESHOLD {
        Verdict::Violated
    } else {
        Verdict::Inconclusive
    }
}

/// Inputs of one mixed comparison; the `b` entries are absent for Epstein.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateInputs {
    pub a1: PosDefMatrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b1: Option<PosDefMatrix>,
    pub a2: PosDefMatrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b2: Option<PosDefMatrix>,
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Comparison {
    pub lhs: f64,
    pub rhs: f64,
}

impl CertificateInputs {
    /// Re-derive every matrix from its entries so evaluation depends only on serialized data.
    pub(crate) fn canonical(self) -> Result<Self> {
        let canon = |m: PosDefMatrix| PosDefMatrix::from_matrix(m.matrix().clone());
        Ok(Self {
            a1: canon(self.a1)?,
            b1: self.b1.map(canon).transpose()?,
            a2: canon(self.a2)?,
            b2: self.b2.map(canon).transpose()?,
        })
    }

    pub(crate) fn regularized(&self, eps: f64) -> Result<Self> {
        let reg = |m: &PosDefMatrix| PosDefMatrix::regularize(m.as_herm(), eps);
        Ok(Self {
            a1: reg(&self.a1)?,
            b1: self.b1.as_ref().map(reg).transpose()?,
            a2: reg(&self.a2)?,
            b2: self.b2.as_ref().map(reg).transpose()?,
        })
    }

    /// `F(lambda A1 + (1-lambda) A2, ...)` against `lambda F(A1, B1) + (1-lambda) F(A2, B2)`.
    pub(crate) fn compare(&self, family: &FamilySpec, lambda: f64) -> Result<Comparison> {
        let f1 = family.eval(&self.a1, self.b1.as_ref())?;
        let f2 = family.eval(&self.a2, self.b2.as_ref())?;
        self.compare_with(family, lambda, f1, f2)
    }

    fn compare_with(&self, family: &FamilySpec, lambda: f64, f1: f64, f2: f64) -> Result<Comparison> {
        let a = PosDefMatrix::combine(lambda, &self.a1, &self.a2)?;
        let b = match (&self.b1, &self.b2) {
            (Some(b1), Some(b2)) => Some(PosDefMatrix::combine(lambda, b1, b2)?),
            _ => None,
        };
        let lhs = family.eval(&a, b.as_ref())?;
        let rhs = lambda * f1 + (1.0 - lambda) * f2;
        if !lhs.is_finite() || !rhs.is_finite() {
            return Err(LabError::NonFiniteFunction { eigenvalue: f64::NAN });
        }
        Ok(Comparison { lhs, rhs })
    }
}

/// A replayable witness that a family is not concave (or not convex).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub family: FamilySpec,
    pub inputs: CertificateInputs,
    pub lambda: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub violation: f64,
    pub direction: Direction,
    /// Values refer to `-F` instead of `F`.
    #[serde(default)]
    pub negated: bool,
    pub seed: u64,
    pub stream: u64,
    pub regularization_eps: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplayCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub lhs_relative_error: f64,
    pub rhs_relative_error: f64,
    pub violation: f64,
    pub reproduced: bool,
    pub still_violated: bool,
}

fn relative_error(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(got.abs()).max(f64::MIN_POSITIVE)
}

impl Certificate {
    pub fn relative_violation(&self) -> f64 {
        self.violation / comparison_scale(self.lhs, self.rhs)
    }

    /// Re-evaluate the stored inputs.
    pub fn replay(&self) -> Result<ReplayCheck> {
        self.family.validate()?;
        let inputs = self.inputs.clone().canonical()?;
        let cmp = inputs.compare(&self.family, self.lambda)?;
        let sign = if self.negated { -1.0 } else { 1.0 };
        let (lhs, rhs) = (sign * cmp.lhs, sign * cmp.rhs);
        let lhs_relative_error = relative_error(lhs, self.lhs);
        let rhs_relative_error = relative_error(rhs, self.rhs);
        let violation = self.direction.violation(lhs, rhs);
        Ok(ReplayCheck {
            lhs,
            rhs,
            lhs_relative_error,
            rhs_relative_error,
            violation,
            reproduced: lhs_relative_error <= REPLAY_TOLERANCE && rhs_relative_error <= REPLAY_TOLERANCE,
            still_violated: violation > CLAIM_THRESHOLD * comparison_scale(lhs, rhs),
        })
    }

    /// The same witness read for `-F` in the opposite direction.
    pub fn dual(&self) -> Self {
        Self {
            lhs: -self.lhs,
            rhs: -self.rhs,
            direction: self.direction.flipped(),
            negated: !self.negated,
            ..self.clone()
        }
    }

    /// `dual` is an involution and preserves the violation.
    pub fn check_duality(&self) -> Result<()> {
        let dual = self.dual();
        let dual_violation = dual.direction.violation(dual.lhs, dual.rhs);
        if dual.dual() != *self || dual_violation != self.violation {
            return Err(LabError::Precondition(format!(
                "certificate duality broken: violation {} vs dual {}",
                self.violation, dual_violation
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub direction: Direction,
    pub trials: usize,
    pub comparisons: usize,
    /// Largest `violation / max(1, |lhs|, |rhs|)` seen (negative when every comparison had room).
    pub worst_violation: f64,
    pub worst_lhs: f64,
    pub worst_rhs: f64,
    pub worst_case: Option<Certificate>,
    pub verdict: Verdict,
    pub tolerance_used: f64,
    pub claim_threshold: f64,
    pub failures: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failure_messages: Vec<String>,
    pub seed: u64,
}

impl TestReport {
    fn empty(direction: Direction, seed: u64) -> Self {
        Self {
            direction,
            trials: 0,
            comparisons: 0,
            worst_violation: f64::NEG_INFINITY,
            worst_lhs: 0.0,
            worst_rhs: 0.0,
            worst_case: None,
            verdict: Verdict::Pass,
            tolerance_used: SLACK,
            claim_threshold: CLAIM_THRESHOLD,
            failures: 0,
            failure_messages: Vec::new(),
            seed,
        }
    }

    fn finish(mut self) -> Self {
        let failed_fraction = if self.trials == 0 { 0.0 } else { self.failures as f64 / self.trials as f64 };
        self.verdict = if failed_fraction > FAILURE_FRACTION || (self.trials > 0 && self.comparisons == 0) {
            Verdict::Inconclusive
        } else {
            classify(self.worst_violation.max(0.0))
        };
        if self.verdict != Verdict::Violated {
            self.worst_case = None;
        }
        if !self.worst_violation.is_finite() {
            self.worst_violation = 0.0;
        }
        self
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Midpoint-test configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MidpointConfig {
    pub trials: usize,
    pub lambdas: Vec<f64>,
    pub random_lambda: bool,
    pub sampler: SamplerConfig,
}

impl MidpointConfig {
    /// Default weights, eigenvalues log-uniform in `[0.1, 10]`.
    pub fn new(trials: usize, dim: usize, seed: u64) -> Self {
        Self {
            trials,
            lambdas: DEFAULT_LAMBDAS.to_vec(),
            random_lambda: true,
            sampler: SamplerConfig::new(dim, seed),
        }
    }

    pub fn for_family(family: &FamilySpec, trials: usize, seed: u64) -> Self {
        Self::new(trials, family.input_dims().0, seed)
    }
}

pub(crate) fn sample_inputs(family: &FamilySpec, sampler: &SamplerConfig, rng: &mut impl rand::Rng) -> Result<CertificateInputs> {
    let (n, m) = family.input_dims();
    let (lo, hi) = (sampler.eig_low, sampler.eig_high);
    CertificateInputs {
        a1: random_posdef(rng, n, lo, hi),
        b1: m.map(|m| random_posdef(rng, m, lo, hi)),
        a2: random_posdef(rng, n, lo, hi),
        b2: m.map(|m| random_posdef(rng, m, lo, hi)),
    }
    .canonical()
}

struct TrialResult {
    comparisons: Vec<(f64, Comparison)>,
    inputs: CertificateInputs,
    error: Option<String>,
}

/// Randomized midpoint test; trial `k` draws from stream `k` of `sampler.seed`.
pub fn midpoint_test(family: &FamilySpec, direction: Direction, config: &MidpointConfig) -> Result<TestReport> {
    family.validate()?;
    config.sampler.validate()?;
    let n = family.input_dims().0;
    if config.sampler.dim != n {
        return Err(LabError::DimensionMismatch {
            expected: n,
            found: config.sampler.dim,
        });
    }
    if let Some(bad) = config.lambdas.iter().find(|l| !(**l > 0.0 && **l < 1.0)) {
        return Err(LabError::InvalidParameter(format!("mixing weight {bad} is outside (0, 1)")));
    }
    let seed = config.sampler.seed;
    let results: Vec<TrialResult> = (0..config.trials as u64)
        .into_par_iter()
        .map(|k| {
            use rand::Rng;
            let mut rng = stream_rng(seed, config.sampler.stream_index.wrapping_add(k));
            let inputs = match sample_inputs(family, &config.sampler, &mut rng) {
                Ok(i) => i,
                Err(e) => {
                    return TrialResult {
                        comparisons: Vec::new(),
                        inputs: CertificateInputs {
                            a1: PosDefMatrix::identity(n),
                            b1: None,
                            a2: PosDefMatrix::identity(n),
                            b2: None,
                        },
                        error: Some(e.to_string()),
                    }
                }
            };
            let mut lambdas = config.lambdas.clone();
            if config.random_lambda {
                lambdas.push(rng.random_range(0.0..1.0f64).clamp(1e-3, 1.0 - 1e-3));
            }
            let values = family
                .eval(&inputs.a1, inputs.b1.as_ref())
                .and_then(|f1| Ok((f1, family.eval(&inputs.a2, inputs.b2.as_ref())?)));
            let mut comparisons = Vec::new();
            let mut error = None;
            match values {
                Ok((f1, f2)) => {
                    for lambda in lambdas {
                        match inputs.compare_with(family, lambda, f1, f2) {
                            Ok(c) => comparisons.push((lambda, c)),
                            Err(e) => {
                                error = Some(e.to_string());
                                break;
                            }
                        }
                    }
                }
                Err(e) => error = Some(e.to_string()),
            }
            TrialResult {
                comparisons,
                inputs,
                error,
            }
        })
        .collect();

    let mut report = TestReport::empty(direction, seed);
    report.trials = config.trials;
    let mut worst: Option<(usize, f64)> = None;
    for (k, trial) in results.iter().enumerate() {
        if let Some(msg) = &trial.error {
            report.failures += 1;
            if report.failure_messages.len() < 5 {
                report.failure_messages.push(format!("trial {k}: {msg}"));
            }
            continue;
        }
        for (lambda, cmp) in &trial.comparisons {
            report.comparisons += 1;
            let rel = direction.violation(cmp.lhs, cmp.rhs) / comparison_scale(cmp.lhs, cmp.rhs);
            if rel > report.worst_violation {
                report.worst_violation = rel;
                report.worst_lhs = cmp.lhs;
                report.worst_rhs = cmp.rhs;
                worst = Some((k, *lambda));
            }
        }
    }
    if let Some((k, lambda)) = worst {
        let trial = &results[k];
        report.worst_case = Some(Certificate {
            family: family.clone(),
            inputs: trial.inputs.clone(),
            lambda,
            lhs: report.worst_lhs,
            rhs: report.worst_rhs,
            violation: direction.violation(report.worst_lhs, report.worst_rhs),
            direction,
            negated: false,
            seed,
            stream: config.sampler.stream_index.wrapping_add(k as u64),
            regularization_eps: 0.0,
        });
    }
    Ok(report.finish())
}

/// Base point and direction of a one-dimensional scan `x -> F(A + xH, B + xK)`.
#[derive(Clone, Debug)]
pub struct Segment {
    pub a: PosDefMatrix,
    pub b: Option<PosDefMatrix>,
    pub h: HermMatrix,
    pub k: Option<HermMatrix>,
}

impl Segment {
    fn point(&self, x: f64) -> Result<(PosDefMatrix, Option<PosDefMatrix>)> {
        let a = PosDefMatrix::new(self.a.as_herm().add(&self.h.scaled(x))?)?;
        let b = match (&self.b, &self.k) {
            (Some(b), Some(k)) => Some(PosDefMatrix::new(b.as_herm().add(&k.scaled(x))?)?),
            (Some(b), None) => Some(b.clone()),
            (None, _) => None,
        };
        Ok((a, b))
    }

    /// Largest `r <= radius` (halving) such that both endpoints stay PD with margin.
    pub fn admissible_radius(&self, radius: f64) -> Result<f64> {
        let mut r = radius;
        for _ in 0..60 {
            let ok = [-r, r].iter().all(|&x| {
                self.point(x)
                    .map(|(a, b)| {
                        let margin = |m: &PosDefMatrix| m.min_eigenvalue() > 1e-10 * m.max_eigenvalue();
                        margin(&a) && b.as_ref().is_none_or(margin)
                    })
                    .unwrap_or(false)
            });
            if ok {
                return Ok(r);
            }
            r *= 0.5;
        }
        Err(LabError::EmptyRange(format!("no PD neighbourhood found within radius {radius}")))
    }
}

/// Profile `(x, F(A + xH, B + xK))` on `steps + 1` equispaced points of `[-r, r]`.
pub fn segment_profile(family: &FamilySpec, segment: &Segment, radius: f64, steps: usize) -> Result<Vec<(f64, f64)>> {
    family.validate()?;
    if steps < 2 {
        return Err(LabError::InvalidParameter("segment scan needs at least 2 steps".into()));
    }
    let r = segment.admissible_radius(radius)?;
    (0..=steps)
        .map(|i| {
            let x = -r + 2.0 * r * i as f64 / steps as f64;
            let (a, b) = segment.point(x)?;
            Ok((x, family.eval(&a, b.as_ref())?))
        })
        .collect()
}

/// Midpoint second differences along the segment, classified like [`midpoint_test`].
pub fn segment_test(
    family: &FamilySpec,
    direction: Direction,
    segment: &Segment,
    radius: f64,
    steps: usize,
) -> Result<TestReport> {
    let profile = segment_profile(family, segment, radius, steps)?;
    let mut report = TestReport::empty(direction, 0);
    report.trials = profile.len() - 2;
    for w in profile.windows(3) {
        let (lhs, rhs) = (w[1].1, 0.5 * (w[0].1 + w[2].1));
        report.comparisons += 1;
        let rel = direction.violation(lhs, rhs) / comparison_scale(lhs, rhs);
        if rel > report.worst_violation {
            report.worst_violation = rel;
            report.worst_lhs = lhs;
            report.worst_rhs = rhs;
        }
    }
    let mut report = report.finish();
    report.worst_case = None;
    Ok(report)
}
