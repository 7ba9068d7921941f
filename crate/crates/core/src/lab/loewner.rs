//! Loewner-order midpoint and dominance tests.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{classify, Verdict, CLAIM_THRESHOLD, SLACK};
use crate::error::{LabError, Result};
use crate::linalg::{complex_gaussian, random_posdef, stream_rng, HermMatrix, PosDefMatrix, SamplerConfig};
use crate::means::{power_mean, MeanSpec};
use crate::posmaps::MapSpec;

/// Matrix-valued expressions whose Loewner-order behaviour is tested.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LoewnerExpr {
    /// `A -> Phi(A^{-p})^{-1}` is operator concave (`0 <= p <= 1`).
    HatPower { map: MapSpec, p: f64 },
    /// `(A, B) -> A sigma B` is jointly operator concave.
    MeanConcavity { mean: MeanSpec },
    /// `((A^p+B^p)/2)^{1/p} <= ((A^q+B^q)/2)^{1/q}`.
    PowerMeanDominance { p: f64, q: f64 },
}

impl LoewnerExpr {
    fn validate(&self) -> Result<()> {
        match self {
            LoewnerExpr::HatPower { map, p } => {
                if !p.is_finite() {
                    return Err(LabError::InvalidParameter(format!("non-finite p {p}")));
                }
                crate::posmaps::strict_positivity(map)
            }
            LoewnerExpr::MeanConcavity { mean } => mean.validate(),
            LoewnerExpr::PowerMeanDominance { p, q } => {
                if p.is_finite() && q.is_finite() {
                    Ok(())
                } else {
                    Err(LabError::InvalidParameter(format!("non-finite exponents ({p}, {q})")))
                }
            }
        }
    }

    /// Number of matrices in one test input.
    fn arity(&self) -> usize {
        match self {
            LoewnerExpr::HatPower { .. } => 2,
            LoewnerExpr::MeanConcavity { .. } => 4,
            LoewnerExpr::PowerMeanDominance { .. } => 2,
        }
    }

    fn input_dim(&self, dim: usize) -> usize {
        match self {
            LoewnerExpr::HatPower { map, .. } => map.in_dim,
            _ => dim,
        }
    }

    fn mixes(&self) -> bool {
        !matches!(self, LoewnerExpr::PowerMeanDominance { .. })
    }

    /// `(small, big)` for which the claim reads `small <= big`.
    pub fn sides(&self, inputs: &[PosDefMatrix], lambda: f64) -> Result<(HermMatrix, HermMatrix)> {
        match self {
            LoewnerExpr::HatPower { map, p } => {
                let f = |a: &PosDefMatrix| map.hat(&a.power(*p));
                let mixed = PosDefMatrix::combine(lambda, &inputs[0], &inputs[1])?;
                let big = f(&mixed)?;
                let small = PosDefMatrix::combine(lambda, &f(&inputs[0])?, &f(&inputs[1])?)?;
                Ok((small.as_herm().clone(), big.as_herm().clone()))
            }
            LoewnerExpr::MeanConcavity { mean } => {
                let a = PosDefMatrix::combine(lambda, &inputs[0], &inputs[2])?;
                let b = PosDefMatrix::combine(lambda, &inputs[1], &inputs[3])?;
                let big = mean.eval(&a, &b)?;
                let small = HermMatrix::combine(
                    lambda,
                    mean.eval(&inputs[0], &inputs[1])?.as_herm(),
                    mean.eval(&inputs[2], &inputs[3])?.as_herm(),
                )?;
                Ok((small, big.as_herm().clone()))
            }
            LoewnerExpr::PowerMeanDominance { p, q } => {
                let small = power_mean(&inputs[0], &inputs[1], *p)?;
                let big = power_mean(&inputs[0], &inputs[1], *q)?;
                Ok((small.as_herm().clone(), big.as_herm().clone()))
            }
        }
    }

    /// `(-lambda_min(big - small) / scale, lambda_min, scale)`.
    pub fn violation(&self, inputs: &[PosDefMatrix], lambda: f64) -> Result<(f64, f64, f64)> {
        let (small, big) = self.sides(inputs, lambda)?;
        let gap = big.sub(&small)?.min_eigenvalue();
        let scale = 1f64
            .max(small.eigenvalues().iter().fold(0.0f64, |m, v| m.max(v.abs())))
            .max(big.eigenvalues().iter().fold(0.0f64, |m, v| m.max(v.abs())));
        Ok((-gap / scale, gap, scale))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoewnerWitness {
    pub expr: LoewnerExpr,
    pub inputs: Vec<PosDefMatrix>,
    pub lambda: f64,
    /// `lambda_min(big - small)`; negative for a violation.
    pub min_eigenvalue: f64,
    /// `-min_eigenvalue / scale`.
    pub violation: f64,
    pub scale: f64,
    pub seed: u64,
    pub stream: u64,
}

impl LoewnerWitness {
    pub fn replay(&self) -> Result<f64> {
        let inputs: Vec<PosDefMatrix> = self
            .inputs
            .iter()
            .map(|m| PosDefMatrix::from_matrix(m.matrix().clone()))
            .collect::<Result<_>>()?;
        Ok(self.expr.violation(&inputs, self.lambda)?.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoewnerReport {
    pub expr: LoewnerExpr,
    pub trials: usize,
    pub worst_violation: f64,
    pub witness: Option<LoewnerWitness>,
    pub verdict: Verdict,
    pub tolerance_used: f64,
    pub claim_threshold: f64,
    pub failures: usize,
    pub seed: u64,
}

struct Draw {
    inputs: Vec<PosDefMatrix>,
    lambda: f64,
    outcome: Result<(f64, f64, f64)>,
}

fn canonical(m: PosDefMatrix) -> PosDefMatrix {
    PosDefMatrix::from_matrix(m.matrix().clone()).expect("sampled matrices are PD")
}

fn draw(expr: &LoewnerExpr, dim: usize, lo: f64, hi: f64, rng: &mut impl Rng) -> Draw {
    let n = expr.input_dim(dim);
    let inputs: Vec<PosDefMatrix> = (0..expr.arity()).map(|_| canonical(random_posdef(rng, n, lo, hi))).collect();
    let lambda = if expr.mixes() { 0.5 } else { 1.0 };
    let outcome = expr.violation(&inputs, lambda);
    Draw { inputs, lambda, outcome }
}

/// Loewner-order test over `trials` random inputs; trial `k` uses stream `k`.
pub fn loewner_midpoint_test(expr: &LoewnerExpr, trials: usize, sampler: &SamplerConfig) -> Result<LoewnerReport> {
    expr.validate()?;
    sampler.validate()?;
    let draws: Vec<Draw> = (0..trials as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(sampler.seed, sampler.stream_index.wrapping_add(k));
            draw(expr, sampler.dim, sampler.eig_low, sampler.eig_high, &mut rng)
        })
        .collect();
    let mut worst = f64::NEG_INFINITY;
    let mut witness = None;
    let mut failures = 0;
    for (k, d) in draws.into_iter().enumerate() {
        match d.outcome {
            Ok((rel, gap, scale)) => {
                if rel > worst {
                    worst = rel;
                    witness = Some(LoewnerWitness {
                        expr: expr.clone(),
                        inputs: d.inputs,
                        lambda: d.lambda,
                        min_eigenvalue: gap,
                        violation: rel,
                        scale,
                        seed: sampler.seed,
                        stream: sampler.stream_index.wrapping_add(k as u64),
                    });
                }
            }
            Err(_) => failures += 1,
        }
    }
    let failed = trials > 0 && failures as f64 / trials as f64 > super::FAILURE_FRACTION;
    let verdict = if failed { Verdict::Inconclusive } else { classify(worst.max(0.0)) };
    Ok(LoewnerReport {
        expr: expr.clone(),
        trials,
        worst_violation: if worst.is_finite() { worst } else { 0.0 },
        witness: if verdict == Verdict::Violated { witness } else { None },
        verdict,
        tolerance_used: SLACK,
        claim_threshold: CLAIM_THRESHOLD,
        failures,
        seed: sampler.seed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "lowercase")]
pub enum LoewnerHunt {
    Found { witness: LoewnerWitness, trials_used: usize },
    Exhausted { trials_used: usize, best_violation: f64 },
}

fn perturb(rng: &mut impl Rng, m: &PosDefMatrix, step: f64) -> Option<PosDefMatrix> {
    let g = HermMatrix::hermitize(complex_gaussian(rng, m.dim(), m.dim()));
    let out = m.as_herm().add(&g.scaled(step * m.max_eigenvalue())).ok()?;
    let out = PosDefMatrix::from_matrix(out.into_matrix()).ok()?;
    (out.min_eigenvalue() > 1e-9 * out.max_eigenvalue()).then_some(out)
}

/// Search for a Loewner violation above the claim threshold.
///
/// Candidates alternate between the default range, a wide `[1e-3, 1e3]` range
/// and near-rank-one pairs; hits are refined by a perturbation hill climb.
pub fn hunt_loewner(expr: &LoewnerExpr, dim: usize, budget: usize, seed: u64) -> Result<LoewnerHunt> {
    expr.validate()?;
    const CHUNK: usize = 2048;
    let mut best = f64::NEG_INFINITY;
    let mut start = 0;
    while start < budget {
        let end = (start + CHUNK).min(budget);
        let draws: Vec<Draw> = (start as u64..end as u64)
            .into_par_iter()
            .map(|k| {
                let mut rng = stream_rng(seed, k);
                let (lo, hi) = match k % 3 {
                    0 => (0.1, 10.0),
                    1 => (1e-3, 1e3),
                    _ => (1e-4, 1.0),
                };
                draw(expr, dim, lo, hi, &mut rng)
            })
            .collect();
        for (offset, d) in draws.into_iter().enumerate() {
            let k = start + offset;
            let Ok((rel, _, _)) = d.outcome else { continue };
            best = best.max(rel);
            if rel <= CLAIM_THRESHOLD {
                continue;
            }
            let mut rng = stream_rng(seed, (1 << 62) + k as u64);
            let mut current = (d.inputs, rel);
            let mut step = 0.05;
            for _ in 0..200 {
                let proposal: Option<Vec<PosDefMatrix>> = current.0.iter().map(|m| perturb(&mut rng, m, step)).collect();
                match proposal.and_then(|p| expr.violation(&p, d.lambda).ok().map(|v| (p, v.0))) {
                    Some((p, v)) if v > current.1 => current = (p, v),
                    _ => step *= 0.9,
                }
            }
            let (rel, gap, scale) = expr.violation(&current.0, d.lambda)?;
            if rel > CLAIM_THRESHOLD {
                let witness = LoewnerWitness {
                    expr: expr.clone(),
                    inputs: current.0,
                    lambda: d.lambda,
                    min_eigenvalue: gap,
                    violation: rel,
                    scale,
                    seed,
                    stream: k as u64,
                };
                if witness.replay()? > CLAIM_THRESHOLD {
                    return Ok(LoewnerHunt::Found {
                        witness,
                        trials_used: k + 1,
                    });
                }
            }
        }
        start = end;
    }
    Ok(LoewnerHunt::Exhausted {
        trials_used: budget,
        best_violation: if best.is_finite() { best } else { 0.0 },
    })
}
