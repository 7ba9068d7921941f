//! Region-aware verification of the catalogued claims.

use serde::{Deserialize, Serialize};

use super::loewner::{loewner_midpoint_test, LoewnerExpr, LoewnerReport};
use super::regions::TheoremId;
use super::{midpoint_test, MidpointConfig, TestReport};
use crate::error::{LabError, Result};
use crate::families::{FamilyKind, FamilySpec, ParameterPoint};
use crate::linalg::SamplerConfig;
use crate::means::MeanSpec;
use crate::posmaps::{sample_kraus, MapSpec};

const PHI_STREAM: u64 = 1_000_001;
const PSI_STREAM: u64 = 1_000_002;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub trials: usize,
    pub seed: u64,
    /// Run even when the point lies outside the region.
    pub force: bool,
    /// `(n, m, l)`: sizes of `A`, `B` and the output.
    pub dims: (usize, usize, usize),
}

impl VerifyOptions {
    pub fn new(trials: usize, seed: u64) -> Self {
        Self {
            trials,
            seed,
            force: false,
            dims: (3, 3, 3),
        }
    }
}

/// The family a claim is checked on by default: rank-2 random CP maps
/// (identity maps where the claim requires them) and the simplest admissible norm.
pub fn canonical_family(theorem: TheoremId, point: ParameterPoint, dims: (usize, usize, usize), seed: u64) -> Result<FamilySpec> {
    let claim = theorem
        .claim()
        .ok_or_else(|| LabError::Precondition(format!("{theorem} is a Loewner-order statement, not a functional family")))?;
    let (n, m, l) = dims;
    let (phi, psi, l) = if claim.identity_maps {
        (MapSpec::identity(n), MapSpec::identity(n), n)
    } else {
        (sample_kraus(n, l, 2, seed, PHI_STREAM)?, sample_kraus(m, l, 2, seed, PSI_STREAM)?, l)
    };
    let norm = claim.norm.canonical(l);
    match claim.family {
        FamilyKind::Lieb => FamilySpec::lieb(phi, psi, norm, point),
        FamilyKind::MeanFamily => FamilySpec::mean_family(phi, psi, MeanSpec::geometric(), norm, point),
        FamilyKind::Epstein => FamilySpec::epstein(phi, norm, point.p, point.s),
        FamilyKind::LogExp => FamilySpec::logexp(phi, psi, norm),
    }
}

/// Midpoint test of `family` in the direction the theorem claims.
///
/// A family outside the claim's scope is always a precondition error; a point
/// outside the region is one unless `force` is set.
pub fn verify(theorem: TheoremId, family: &FamilySpec, options: &VerifyOptions) -> Result<TestReport> {
    let claim = theorem
        .claim()
        .ok_or_else(|| LabError::Precondition(format!("{theorem} is checked with verify_dominance")))?;
    claim.check_family(theorem, family).map_err(LabError::Precondition)?;
    if !options.force {
        theorem.explain(family.params).map_err(LabError::Precondition)?;
    }
    let config = MidpointConfig::for_family(family, options.trials, options.seed);
    midpoint_test(family, claim.direction, &config)
}

/// Power-mean dominance check for the Loewner-order lemma at `(p, q)`.
pub fn verify_dominance(point: ParameterPoint, dim: usize, options: &VerifyOptions) -> Result<LoewnerReport> {
    if !options.force {
        TheoremId::L5_4.explain(point).map_err(LabError::Precondition)?;
    }
    let expr = LoewnerExpr::PowerMeanDominance { p: point.p, q: point.q };
    loewner_midpoint_test(&expr, options.trials, &SamplerConfig::new(dim, options.seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lab::Verdict;
    use crate::norms::NormSpec;

    #[test]
    fn lieb_inside_region_passes() {
        let point = ParameterPoint::new(0.7, 0.7, 1.0 / 1.4);
        let family = canonical_family(TheoremId::T1_1_1, point, (3, 3, 3), 11).unwrap();
        let r = verify(TheoremId::T1_1_1, &family, &VerifyOptions::new(200, 11)).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{}", r.worst_violation);
    }

    #[test]
    fn off_region_needs_force() {
        let point = ParameterPoint::new(1.0, 1.0, 0.75);
        let family = canonical_family(TheoremId::T1_1_1, point, (2, 2, 2), 1).unwrap();
        let err = verify(TheoremId::T1_1_1, &family, &VerifyOptions::new(10, 1)).unwrap_err();
        assert!(err.to_string().contains("s ≤ 1/(p+q) violated"), "{err}");
        let mut opts = VerifyOptions::new(10, 1);
        opts.force = true;
        assert!(verify(TheoremId::T1_1_1, &family, &opts).is_ok());
    }

    #[test]
    fn wrong_norm_is_precondition() {
        let point = ParameterPoint::new(0.5, 0.5, 1.0);
        let family = canonical_family(TheoremId::T1_1_1, point, (2, 2, 2), 1).unwrap();
        let family = FamilySpec {
            norm: NormSpec::OperatorNorm,
            ..family
        };
        let mut opts = VerifyOptions::new(10, 1);
        opts.force = true;
        assert!(verify(TheoremId::T1_1_1, &family, &opts).unwrap_err().is_precondition());
    }

    #[test]
    fn identity_claims_use_identity_maps() {
        let family = canonical_family(TheoremId::T5_2_1, ParameterPoint::new(0.5, 0.5, 1.0), (3, 2, 4), 1).unwrap();
        assert_eq!(family.input_dims(), (3, Some(3)));
        assert_eq!(family.output_dim(), 3);
    }

    #[test]
    fn dominance_inside_region() {
        let r = verify_dominance(ParameterPoint::new(0.5, 1.0, 1.0), 3, &VerifyOptions::new(200, 2)).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{}", r.worst_violation);
    }
}
