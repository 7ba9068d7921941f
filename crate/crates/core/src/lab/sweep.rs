//! Parameter-grid sweeps.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{midpoint_test, Direction, MidpointConfig, Verdict};
use crate::error::{LabError, Result};
use crate::families::{FamilySpec, ParameterPoint};
use crate::linalg::SamplerConfig;

pub const SWEEP_CSV_HEADER: &str = "p,q,s,verdict,worst_concave_violation,worst_convex_violation,trials,failures";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellVerdict {
    ConcavePass,
    ConvexPass,
    BothPass,
    BothViolated,
    Inconclusive,
}

impl CellVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            CellVerdict::ConcavePass => "concave-pass",
            CellVerdict::ConvexPass => "convex-pass",
            CellVerdict::BothPass => "both-pass",
            CellVerdict::BothViolated => "both-violated",
            CellVerdict::Inconclusive => "inconclusive",
        }
    }

    fn from_pair(concave: Verdict, convex: Verdict) -> Self {
        use Verdict::*;
        match (concave, convex) {
            (Pass, Pass) => CellVerdict::BothPass,
            (Pass, Violated) => CellVerdict::ConcavePass,
            (Violated, Pass) => CellVerdict::ConvexPass,
            (Violated, Violated) => CellVerdict::BothViolated,
            _ => CellVerdict::Inconclusive,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub point: ParameterPoint,
    pub verdict: CellVerdict,
    pub worst_concave_violation: Option<f64>,
    pub worst_convex_violation: Option<f64>,
    pub trials: usize,
    pub failures: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub template: FamilySpec,
    pub seed: u64,
    pub trials_per_cell: usize,
    pub cells: Vec<SweepCell>,
}

fn cell_value(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(SWEEP_CSV_HEADER);
        out.push('\n');
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                c.point.p,
                c.point.q,
                c.point.s,
                c.verdict.as_str(),
                cell_value(c.worst_concave_violation),
                cell_value(c.worst_convex_violation),
                c.trials,
                c.failures
            );
        }
        out
    }
}

fn run_cell(template: &FamilySpec, point: ParameterPoint, trials: usize, sampler: &SamplerConfig) -> Result<SweepCell> {
    let family = template.with_params(point)?;
    let config = MidpointConfig {
        sampler: sampler.clone(),
        ..MidpointConfig::new(trials, sampler.dim, sampler.seed)
    };
    let concave = midpoint_test(&family, Direction::Concave, &config)?;
    let convex = midpoint_test(&family, Direction::Convex, &config)?;
    Ok(SweepCell {
        point,
        verdict: CellVerdict::from_pair(concave.verdict, convex.verdict),
        worst_concave_violation: Some(concave.worst_violation),
        worst_convex_violation: Some(convex.worst_violation),
        trials,
        failures: concave.failures + convex.failures,
        error: None,
    })
}

/// Runs concave and convex midpoint tests at every grid point, p-major.
///
/// Cells whose family cannot be built or evaluated are reported as
/// inconclusive with empty violation fields. An empty grid gives no cells.
pub fn sweep(
    template: &FamilySpec,
    p_grid: &[f64],
    q_grid: &[f64],
    s_grid: &[f64],
    trials_per_cell: usize,
    sampler: &SamplerConfig,
) -> Result<SweepResult> {
    sampler.validate()?;
    if let Some(bad) = p_grid.iter().chain(q_grid).chain(s_grid).find(|v| !v.is_finite()) {
        return Err(LabError::InvalidParameter(format!("non-finite grid value {bad}")));
    }
    let mut cells = Vec::with_capacity(p_grid.len() * q_grid.len() * s_grid.len());
    for &p in p_grid {
        for &q in q_grid {
            for &s in s_grid {
                let point = ParameterPoint::new(p, q, s);
                let cell = run_cell(template, point, trials_per_cell, sampler).unwrap_or_else(|e| SweepCell {
                    point,
                    verdict: CellVerdict::Inconclusive,
                    worst_concave_violation: None,
                    worst_convex_violation: None,
                    trials: trials_per_cell,
                    failures: trials_per_cell,
                    error: Some(e.to_string()),
                });
                cells.push(cell);
            }
        }
    }
    Ok(SweepResult {
        template: template.clone(),
        seed: sampler.seed,
        trials_per_cell,
        cells,
    })
}
