//! Run configuration and family construction from flags.

use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use conclab::lab::canonical_family;
use conclab::posmaps::{normalize_unital_pair, sample_kraus};
use conclab::{Direction, FamilyKind, FamilySpec, MapSpec, MeanSpec, NormSpec, ParameterPoint, TheoremId};
use serde::{Deserialize, Serialize};

/// Kraus streams shared with the library's canonical families.
const PHI_STREAM: u64 = 1_000_001;
const PSI_STREAM: u64 = 1_000_002;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Eval,
    Verify,
    Sweep,
    Hunt,
    Regions,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum MapChoice {
    /// Identity maps (forces n = m = l).
    Identity,
    /// Random rank-2 completely positive maps.
    Kraus,
    /// Transpose followed by random Kraus pieces (positive, not CP).
    TransposeKraus,
    /// `[[1, 0], [1, eps]]` conjugation on 2x2 (eps = 0.1).
    XEps,
    /// `[[I, 0], [I, eps I]]` conjugation on 4x4 (eps = 0.1).
    XEpsBlock,
    /// `X = [I; I]`, so that `Phi(diag(A, B)) = A + B`.
    BlockSum,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Grids {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub s: Vec<f64>,
}

/// Fully resolved run configuration; embedded in every output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub family: Option<FamilySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theorem_id: Option<TheoremId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grids: Option<Grids>,
    pub trials: usize,
    pub dims: (usize, usize, usize),
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<String>,
    pub format: Format,
    #[serde(default)]
    pub force: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Direction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &str) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {path}"))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {path}"))
    }
}

/// Parses `n,m,l` (or a single `n` for all three).
pub fn parse_dims(text: &str) -> Result<(usize, usize, usize)> {
    let parts: Vec<usize> = text
        .split(',')
        .map(|p| p.trim().parse::<usize>().with_context(|| format!("bad dimension `{p}`")))
        .collect::<Result<_>>()?;
    match parts[..] {
        [n] => Ok((n, n, n)),
        [n, m, l] => Ok((n, m, l)),
        _ => bail!("--dims expects n,m,l"),
    }
}

/// Parses `lo:hi:step` (inclusive) or a comma list; an empty string is an empty grid.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    let num = |t: &str| f64::from_str(t.trim()).with_context(|| format!("bad grid value `{t}`"));
    if let [lo, hi, step] = text.split(':').collect::<Vec<_>>()[..] {
        let (lo, hi, step) = (num(lo)?, num(hi)?, num(step)?);
        if !(step > 0.0) {
            bail!("grid step must be positive");
        }
        let count = ((hi - lo) / step + 1e-9).floor();
        if count < 0.0 {
            return Ok(Vec::new());
        }
        return Ok((0..=count as usize).map(|i| lo + step * i as f64).collect());
    }
    text.split(',').map(num).collect()
}

/// Flag-level choices that shape a family.
#[derive(Clone, Debug, Default)]
pub struct FamilyFlags {
    pub family: Option<FamilyKind>,
    pub maps: Option<MapChoice>,
    pub norm: Option<NormSpec>,
    pub mean: Option<MeanSpec>,
}

fn build_map(choice: MapChoice, in_dim: usize, out_dim: usize, seed: u64, stream: u64) -> Result<MapSpec> {
    Ok(match choice {
        MapChoice::Identity => MapSpec::identity(in_dim),
        MapChoice::Kraus => sample_kraus(in_dim, out_dim, 2, seed, stream)?,
        MapChoice::TransposeKraus => {
            MapSpec::transpose_then_kraus(sample_kraus(in_dim, out_dim, 2, seed, stream)?.kraus_pieces())?
        }
        MapChoice::XEps => MapSpec::x_eps(0.1),
        MapChoice::XEpsBlock => MapSpec::x_eps_block(0.1),
        MapChoice::BlockSum => MapSpec::block_sum(out_dim),
    })
}

fn default_norm(kind: FamilyKind) -> NormSpec {
    match kind {
        FamilyKind::MeanFamily => NormSpec::KyFanAntiNorm { k: 1 },
        _ => NormSpec::Trace,
    }
}

/// Family from flags alone.
pub fn family_from_flags(
    flags: &FamilyFlags,
    point: ParameterPoint,
    dims: (usize, usize, usize),
    seed: u64,
) -> Result<FamilySpec> {
    let kind = flags.family.unwrap_or(FamilyKind::Lieb);
    let choice = flags.maps.unwrap_or(MapChoice::Kraus);
    let (n, m, l) = if choice == MapChoice::Identity { (dims.0, dims.0, dims.0) } else { dims };
    let phi = build_map(choice, n, l, seed, PHI_STREAM)?;
    let psi = build_map(choice, m, l, seed, PSI_STREAM)?;
    let norm = flags.norm.clone().unwrap_or_else(|| default_norm(kind));
    Ok(match kind {
        FamilyKind::Lieb => FamilySpec::lieb(phi, psi, norm, point)?,
        FamilyKind::MeanFamily => {
            let mean = flags.mean.unwrap_or_else(MeanSpec::geometric);
            FamilySpec::mean_family(phi, psi, mean, norm, point)?
        }
        FamilyKind::Epstein => FamilySpec::epstein(phi, norm, point.p, point.s)?,
        FamilyKind::LogExp => {
            let (phi, psi) = normalize_unital_pair(&phi, &psi)?;
            FamilySpec::logexp(phi, psi, norm)?
        }
    })
}

/// Canonical family of a theorem with any flag overrides applied.
pub fn family_for_theorem(
    theorem: TheoremId,
    flags: &FamilyFlags,
    point: ParameterPoint,
    dims: (usize, usize, usize),
    seed: u64,
) -> Result<FamilySpec> {
    let claim = theorem.claim().ok_or_else(|| anyhow!("{theorem} has no functional family"))?;
    if flags.family.is_some_and(|k| k != claim.family) || flags.maps.is_some() {
        let flags = FamilyFlags {
            family: Some(flags.family.unwrap_or(claim.family)),
            norm: flags.norm.clone().or_else(|| Some(claim.norm.canonical(dims.2))),
            ..flags.clone()
        };
        return family_from_flags(&flags, point, dims, seed);
    }
    let mut family = canonical_family(theorem, point, dims, seed)?;
    if let Some(norm) = &flags.norm {
        family.norm = norm.clone();
    }
    if let (Some(mean), FamilyKind::MeanFamily) = (&flags.mean, family.family) {
        family.mean = Some(*mean);
    }
    family.validate()?;
    Ok(family)
}
