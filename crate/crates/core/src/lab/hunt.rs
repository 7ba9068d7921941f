//! Counterexample search producing replayable certificates.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{comparison_scale, sample_inputs, Certificate, CertificateInputs, Direction, CLAIM_THRESHOLD};
use crate::error::{LabError, Result};
use crate::families::FamilySpec;
use crate::linalg::{
    complex_gaussian, haar_unitary, random_posdef, stream_rng, HermMatrix, PosDefMatrix, SamplerConfig,
    DEFAULT_REGULARIZATION,
};

/// Near-singular scales used by structured candidates.
pub const STRUCTURED_EPS: [f64; 3] = [1e-1, 1e-2, 1e-3];

const REFINE_STREAM_BASE: u64 = 1 << 62;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HuntConfig {
    pub budget: usize,
    pub refine: bool,
    pub structured: bool,
    pub seed: u64,
    pub chunk: usize,
    pub eig_low: f64,
    pub eig_high: f64,
    pub regularization_eps: f64,
    pub refine_steps: usize,
}

impl HuntConfig {
    pub fn new(budget: usize, seed: u64) -> Self {
        Self {
            budget,
            refine: true,
            structured: true,
            seed,
            chunk: 2048,
            eig_low: crate::linalg::DEFAULT_EIG_LOW,
            eig_high: crate::linalg::DEFAULT_EIG_HIGH,
            regularization_eps: DEFAULT_REGULARIZATION,
            refine_steps: 300,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HuntReport {
    pub trials_used: usize,
    /// Largest relative violation seen, possibly below the claim threshold.
    pub best_violation: f64,
    pub best_candidate: Option<Certificate>,
    /// Raw hits that did not survive refinement or the stability re-check.
    pub unstable_hits: usize,
    pub failures: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "lowercase")]
pub enum HuntOutcome {
    Found { certificate: Certificate, trials_used: usize },
    Exhausted(HuntReport),
}

impl HuntOutcome {
    pub fn certificate(&self) -> Option<&Certificate> {
        match self {
            HuntOutcome::Found { certificate, .. } => Some(certificate),
            HuntOutcome::Exhausted(_) => None,
        }
    }
}

#[derive(Clone)]
struct Candidate {
    inputs: CertificateInputs,
    lambda: f64,
    lhs: f64,
    rhs: f64,
    relative: f64,
}

fn rotate(rng: &mut impl Rng, d: &[f64], haar: bool) -> PosDefMatrix {
    let diag = PosDefMatrix::from_diag(d).expect("positive diagonal");
    if haar {
        let u = haar_unitary(rng, d.len());
        diag.conjugate_by(&u).expect("unitary")
    } else {
        diag
    }
}

fn near_singular(rng: &mut impl Rng, dim: usize, eps: f64) -> PosDefMatrix {
    let d: Vec<f64> = (0..dim)
        .map(|i| {
            let jitter = rng.random_range(0.5..2.0);
            if i == 0 {
                jitter
            } else {
                eps * jitter
            }
        })
        .collect();
    let haar = rng.random_bool(0.5);
    rotate(rng, &d, haar)
}

fn commuting_pair(rng: &mut impl Rng, dim: usize, lo: f64, hi: f64) -> (PosDefMatrix, PosDefMatrix) {
    let u = haar_unitary(rng, dim);
    let draw = |rng: &mut dyn rand::RngCore| -> Vec<f64> {
        (0..dim).map(|_| (lo.ln() + (hi.ln() - lo.ln()) * rng.random::<f64>()).exp()).collect()
    };
    let (d1, d2) = (draw(rng), draw(rng));
    let conj = |d: &[f64]| PosDefMatrix::from_diag(d).expect("positive").conjugate_by(&u).expect("unitary");
    (conj(&d1), conj(&d2))
}

fn candidate_inputs(family: &FamilySpec, config: &HuntConfig, k: u64, rng: &mut impl Rng) -> Result<CertificateInputs> {
    let (n, m) = family.input_dims();
    let kind = if config.structured { k % 4 } else { 0 };
    let inputs = match kind {
        0 => {
            let mut sampler = SamplerConfig::new(n, config.seed);
            sampler.eig_low = config.eig_low;
            sampler.eig_high = config.eig_high;
            return sample_inputs(family, &sampler, rng);
        }
        1 => CertificateInputs {
            a1: random_posdef(rng, n, 1e-3, 1e3),
            b1: m.map(|m| random_posdef(rng, m, 1e-3, 1e3)),
            a2: random_posdef(rng, n, 1e-3, 1e3),
            b2: m.map(|m| random_posdef(rng, m, 1e-3, 1e3)),
        },
        2 => {
            let eps = STRUCTURED_EPS[((k / 4) % STRUCTURED_EPS.len() as u64) as usize];
            CertificateInputs {
                a1: near_singular(rng, n, eps),
                b1: m.map(|m| near_singular(rng, m, eps)),
                a2: near_singular(rng, n, eps),
                b2: m.map(|m| near_singular(rng, m, eps)),
            }
        }
        _ => {
            let (a1, a2) = commuting_pair(rng, n, 1e-2, 1e2);
            let (b1, b2) = match m {
                Some(m) => {
                    let (b1, b2) = commuting_pair(rng, m, 1e-2, 1e2);
                    (Some(b1), Some(b2))
                }
                None => (None, None),
            };
            CertificateInputs { a1, b1, a2, b2 }
        }
    };
    inputs.canonical()
}

fn evaluate(family: &FamilySpec, direction: Direction, inputs: CertificateInputs, lambdas: &[f64]) -> Result<Candidate> {
    let f1 = family.eval(&inputs.a1, inputs.b1.as_ref())?;
    let f2 = family.eval(&inputs.a2, inputs.b2.as_ref())?;
    let mut best: Option<Candidate> = None;
    for &lambda in lambdas {
        let cmp = inputs.compare_with(family, lambda, f1, f2)?;
        let relative = direction.violation(cmp.lhs, cmp.rhs) / comparison_scale(cmp.lhs, cmp.rhs);
        if best.as_ref().is_none_or(|b| relative > b.relative) {
            best = Some(Candidate {
                inputs: inputs.clone(),
                lambda,
                lhs: cmp.lhs,
                rhs: cmp.rhs,
                relative,
            });
        }
    }
    best.ok_or_else(|| LabError::InvalidParameter("no mixing weights".into()))
}

fn perturb(rng: &mut impl Rng, m: &PosDefMatrix, step: f64) -> Option<PosDefMatrix> {
    let dim = m.dim();
    let g = HermMatrix::hermitize(complex_gaussian(rng, dim, dim));
    let scale = step * m.max_eigenvalue();
    let out = m.as_herm().add(&g.scaled(scale)).ok()?;
    let out = PosDefMatrix::new(out).ok()?;
    (out.min_eigenvalue() > 1e-9 * out.max_eigenvalue()).then_some(out)
}

/// Random-perturbation hill climb on the relative violation.
fn refine(family: &FamilySpec, direction: Direction, start: Candidate, steps: usize, rng: &mut impl Rng) -> Candidate {
    let mut best = start;
    let mut step = 0.1;
    let mut misses = 0;
    for _ in 0..steps {
        let inputs = &best.inputs;
        let proposal = (|| {
            let a1 = perturb(rng, &inputs.a1, step)?;
            let a2 = perturb(rng, &inputs.a2, step)?;
            let b1 = match &inputs.b1 {
                Some(b) => Some(perturb(rng, b, step)?),
                None => None,
            };
            let b2 = match &inputs.b2 {
                Some(b) => Some(perturb(rng, b, step)?),
                None => None,
            };
            CertificateInputs { a1, b1, a2, b2 }.canonical().ok()
        })();
        let lambda = (best.lambda + step * rng.random_range(-0.5..0.5)).clamp(0.02, 0.98);
        let improved = proposal
            .and_then(|inputs| evaluate(family, direction, inputs, &[lambda]).ok())
            .filter(|c| c.relative > best.relative);
        match improved {
            Some(c) => {
                best = c;
                misses = 0;
            }
            None => {
                misses += 1;
                if misses >= 20 {
                    step *= 0.5;
                    misses = 0;
                    if step < 1e-6 {
                        break;
                    }
                }
            }
        }
    }
    best
}

/// Regularize at `eps`, re-check at `eps / 10`; only a violation surviving both is certified.
fn stabilize(
    family: &FamilySpec,
    direction: Direction,
    candidate: &Candidate,
    config: &HuntConfig,
    stream: u64,
) -> Option<Certificate> {
    let eps = config.regularization_eps;
    let at = |e: f64| -> Option<Candidate> {
        let inputs = candidate.inputs.regularized(e).ok()?.canonical().ok()?;
        evaluate(family, direction, inputs, &[candidate.lambda]).ok()
    };
    let primary = at(eps)?;
    let finer = at(eps / 10.0)?;
    if primary.relative <= CLAIM_THRESHOLD || finer.relative <= CLAIM_THRESHOLD {
        return None;
    }
    let cert = Certificate {
        family: family.clone(),
        inputs: primary.inputs,
        lambda: primary.lambda,
        lhs: primary.lhs,
        rhs: primary.rhs,
        violation: direction.violation(primary.lhs, primary.rhs),
        direction,
        negated: false,
        seed: config.seed,
        stream,
        regularization_eps: eps,
    };
    let replay = cert.replay().ok()?;
    (replay.reproduced && replay.still_violated && cert.check_duality().is_ok()).then_some(cert)
}

fn to_certificate(family: &FamilySpec, direction: Direction, c: &Candidate, seed: u64, stream: u64) -> Certificate {
    Certificate {
        family: family.clone(),
        inputs: c.inputs.clone(),
        lambda: c.lambda,
        lhs: c.lhs,
        rhs: c.rhs,
        violation: direction.violation(c.lhs, c.rhs),
        direction,
        negated: false,
        seed,
        stream,
        regularization_eps: 0.0,
    }
}

/// Search for a certified violation of `direction`.
///
/// Trials run in parallel chunks and are scanned in index order, so the first
/// certified trial is the same for every thread count.
pub fn hunt_counterexample(family: &FamilySpec, direction: Direction, config: &HuntConfig) -> Result<HuntOutcome> {
    family.validate()?;
    if config.chunk == 0 {
        return Err(LabError::InvalidParameter("hunt chunk size must be positive".into()));
    }
    let mut report = HuntReport {
        trials_used: 0,
        best_violation: f64::NEG_INFINITY,
        best_candidate: None,
        unstable_hits: 0,
        failures: 0,
    };
    let mut start = 0usize;
    while start < config.budget {
        let end = (start + config.chunk).min(config.budget);
        let results: Vec<Result<Candidate>> = (start as u64..end as u64)
            .into_par_iter()
            .map(|k| {
                let mut rng = stream_rng(config.seed, k);
                let inputs = candidate_inputs(family, config, k, &mut rng)?;
                let lambdas = [0.5, rng.random_range(0.05..0.95)];
                evaluate(family, direction, inputs, &lambdas)
            })
            .collect();
        for (offset, result) in results.into_iter().enumerate() {
            let k = (start + offset) as u64;
            report.trials_used = start + offset + 1;
            let candidate = match result {
                Ok(c) => c,
                Err(_) => {
                    report.failures += 1;
                    continue;
                }
            };
            if candidate.relative > report.best_violation {
                report.best_violation = candidate.relative;
                report.best_candidate = Some(to_certificate(family, direction, &candidate, config.seed, k));
            }
            if candidate.relative <= CLAIM_THRESHOLD {
                continue;
            }
            let refined = if config.refine {
                let mut rng = stream_rng(config.seed, REFINE_STREAM_BASE + k);
                refine(family, direction, candidate.clone(), config.refine_steps, &mut rng)
            } else {
                candidate.clone()
            };
            let certified = stabilize(family, direction, &refined, config, k)
                .or_else(|| stabilize(family, direction, &candidate, config, k));
            match certified {
                Some(certificate) => {
                    return Ok(HuntOutcome::Found {
                        certificate,
                        trials_used: report.trials_used,
                    })
                }
                None => report.unstable_hits += 1,
            }
        }
        start = end;
    }
    if !report.best_violation.is_finite() {
        report.best_violation = 0.0;
    }
    Ok(HuntOutcome::Exhausted(report))
}
