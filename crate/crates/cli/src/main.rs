//! `conclab`: evaluate, verify, sweep and hunt joint concavity/convexity claims.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;

use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use conclab::lab::{
    hunt_counterexample, sweep, theorem_name, verify, verify_dominance, HuntConfig, HuntOutcome, VerifyOptions,
};
use conclab::linalg::MatrixJson;
use conclab::{
    Certificate, Direction, FamilyKind, FamilySpec, LabError, MeanSpec, NormSpec, ParameterPoint, PosDefMatrix,
    SamplerConfig, TheoremId, Verdict, VERSION,
};
use serde::{Deserialize, Serialize};

use config::{family_for_theorem, family_from_flags, parse_dims, parse_grid, Command, FamilyFlags, Format, Grids, MapChoice, RunConfig};

const EXIT_PASS: u8 = 0;
const EXIT_INTERNAL: u8 = 1;
const EXIT_VIOLATED: u8 = 2;
const EXIT_INCONCLUSIVE: u8 = 3;
const EXIT_PRECONDITION: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "conclab", version, about = "Joint concavity/convexity laboratory for matrix functionals")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Evaluate a functional on matrices read from a JSON file.
    Eval {
        #[command(flatten)]
        common: Common,
        /// JSON file with `a` (and `b`) in the matrix format.
        #[arg(long)]
        matrices: String,
    },
    /// Midpoint-test a theorem at a parameter point.
    Verify {
        /// Theorem id, e.g. T1.1-1, T2.2, T3.2, L5.4.
        theorem: TheoremId,
        #[command(flatten)]
        common: Common,
        /// Run even if the point lies outside the theorem's region.
        #[arg(long)]
        force: bool,
    },
    /// Midpoint-test both directions over a parameter grid and write CSV.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// `lo:hi:step` or a comma list.
        #[arg(long, default_value = "")]
        p_grid: String,
        #[arg(long, default_value = "0")]
        q_grid: String,
        #[arg(long, default_value = "")]
        s_grid: String,
    },
    /// Search for a replayable counterexample certificate.
    Hunt {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_direction)]
        direction: Option<Direction>,
        #[arg(long)]
        budget: Option<usize>,
        /// Re-validate a certificate file instead of searching.
        #[arg(long)]
        replay: Option<String>,
    },
    /// Show theorem regions, or membership of a point.
    Regions {
        #[arg(long, allow_hyphen_values = true)]
        p: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        q: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        s: Option<f64>,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// JSON run configuration; explicit flags override its fields.
    #[arg(long)]
    config: Option<String>,
    #[arg(long)]
    family: Option<FamilyKind>,
    #[arg(long, allow_hyphen_values = true)]
    p: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    q: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    s: Option<f64>,
    /// Norm or anti-norm, e.g. `trace`, `kyfan:2`, `kyfan-anti:1`, `schatten-quasi:0.5`.
    #[arg(long, alias = "antinorm")]
    norm: Option<NormSpec>,
    /// Operator mean, e.g. `geometric`, `power:0.5`, `harmonic`.
    #[arg(long)]
    mean: Option<MeanSpec>,
    #[arg(long, value_enum)]
    maps: Option<MapChoice>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// `n,m,l`.
    #[arg(long)]
    dims: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

fn parse_direction(s: &str) -> Result<Direction, String> {
    match s {
        "concave" => Ok(Direction::Concave),
        "convex" => Ok(Direction::Convex),
        _ => Err(format!("expected `concave` or `convex`, got `{s}`")),
    }
}

/// Self-describing output wrapper.
#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    version: &'static str,
    seed: u64,
    config: &'a RunConfig,
    #[serde(flatten)]
    result: T,
}

#[derive(Deserialize, Serialize)]
struct MatrixFile {
    a: MatrixJson,
    #[serde(default)]
    b: Option<MatrixJson>,
}

struct Run {
    config: RunConfig,
    flags: FamilyFlags,
    point: ParameterPoint,
}

fn resolve(common: &Common, command: Command, default_trials: usize, default_format: Format) -> Result<Run> {
    let base = common.config.as_deref().map(RunConfig::load).transpose()?;
    let base_point = base.as_ref().and_then(|c| c.family.as_ref()).map(|f| f.params);
    let point = ParameterPoint::new(
        common.p.or(base_point.map(|p| p.p)).unwrap_or(1.0),
        common.q.or(base_point.map(|p| p.q)).unwrap_or(if common.family == Some(FamilyKind::Epstein) { 0.0 } else { 1.0 }),
        common.s.or(base_point.map(|p| p.s)).unwrap_or(1.0),
    );
    let dims = match &common.dims {
        Some(d) => parse_dims(d)?,
        None => base.as_ref().map(|c| c.dims).unwrap_or((2, 2, 2)),
    };
    let config = RunConfig {
        command,
        family: base.as_ref().and_then(|c| c.family.clone()),
        theorem_id: base.as_ref().and_then(|c| c.theorem_id),
        grids: base.as_ref().and_then(|c| c.grids.clone()),
        trials: common.trials.or(base.as_ref().map(|c| c.trials)).unwrap_or(default_trials),
        dims,
        seed: common.seed.or(base.as_ref().map(|c| c.seed)).unwrap_or(0),
        output_path: common.out.clone().or(base.as_ref().and_then(|c| c.output_path.clone())),
        format: common.format.or(base.as_ref().map(|c| c.format)).unwrap_or(default_format),
        force: base.as_ref().is_some_and(|c| c.force),
        direction: base.as_ref().and_then(|c| c.direction),
        budget: base.as_ref().and_then(|c| c.budget),
    };
    let flags = FamilyFlags {
        family: common.family,
        maps: common.maps,
        norm: common.norm.clone(),
        mean: common.mean,
    };
    Ok(Run { config, flags, point })
}

fn overrides_family(common: &Common) -> bool {
    common.family.is_some()
        || common.maps.is_some()
        || common.norm.is_some()
        || common.mean.is_some()
        || common.p.is_some()
        || common.q.is_some()
        || common.s.is_some()
        || common.dims.is_some()
}

/// The family from the config file unless flags say otherwise.
fn plain_family(run: &Run, common: &Common) -> Result<FamilySpec> {
    match (&run.config.family, overrides_family(common)) {
        (Some(f), false) => Ok(f.clone()),
        (Some(f), true) if common.family.is_none() && common.maps.is_none() && common.dims.is_none() => {
            let mut f = f.with_params(run.point)?;
            if let Some(norm) = &common.norm {
                f.norm = norm.clone();
            }
            if let Some(mean) = &common.mean {
                f.mean = Some(*mean);
            }
            f.validate()?;
            Ok(f)
        }
        _ => family_from_flags(&run.flags, run.point, run.config.dims, run.config.seed),
    }
}

fn emit(text: &str, out: Option<&str>) -> Result<()> {
    match out {
        Some(path) => write_atomic(Path::new(path), text),
        None => {
            let mut stdout = std::io::stdout().lock();
            let written = stdout.write_all(text.as_bytes()).and_then(|()| {
                if text.ends_with('\n') {
                    Ok(())
                } else {
                    stdout.write_all(b"\n")
                }
            });
            match written {
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                other => Ok(other?),
            }
        }
    }
}

/// Write to a sibling temp file, then rename over the target.
fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| anyhow!("output path has no file name"))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
        f.write_all(text.as_bytes())?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))
}

fn to_json<T: Serialize>(config: &RunConfig, result: T) -> Result<String> {
    Ok(serde_json::to_string_pretty(&Envelope {
        version: VERSION,
        seed: config.seed,
        config,
        result,
    })?)
}

fn verdict_code(v: Verdict) -> u8 {
    match v {
        Verdict::Pass => EXIT_PASS,
        Verdict::Violated => EXIT_VIOLATED,
        Verdict::Inconclusive => EXIT_INCONCLUSIVE,
    }
}

fn load_matrix(m: &MatrixJson, what: &str) -> Result<PosDefMatrix> {
    let raw = m.to_matrix().with_context(|| format!("matrix `{what}`"))?;
    PosDefMatrix::from_matrix(raw).with_context(|| format!("matrix `{what}`"))
}

fn cmd_eval(common: Common, matrices: String) -> Result<u8> {
    let mut run = resolve(&common, Command::Eval, 0, Format::Text)?;
    let text = std::fs::read_to_string(&matrices).with_context(|| format!("reading {matrices}"))?;
    let file: MatrixFile = serde_json::from_str(&text).with_context(|| format!("parsing {matrices}"))?;
    let a = load_matrix(&file.a, "a")?;
    let b = file.b.as_ref().map(|b| load_matrix(b, "b")).transpose()?;
    if common.dims.is_none() && run.config.family.is_none() {
        let n = a.dim();
        let m = b.as_ref().map_or(n, |b| b.dim());
        run.config.dims = (n, m, n.max(m));
    }
    let family = plain_family(&run, &common)?;
    let value = family.eval(&a, b.as_ref())?;
    run.config.family = Some(family);
    let rendered = format!("{value:.14e}");
    let out = match run.config.format {
        Format::Json => to_json(&run.config, serde_json::json!({ "value": value, "display": rendered }))?,
        _ => rendered,
    };
    emit(&out, run.config.output_path.as_deref())?;
    Ok(EXIT_PASS)
}

#[derive(Serialize)]
struct VerifyResult<T: Serialize> {
    theorem: String,
    statement: &'static str,
    report: T,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
}

const ON_REGION_NOTE: &str = "on-region violation: replay the worst case with `hunt --replay`, \
     rerun with a different seed, and re-hunt at the same point; a certificate that survives regularization \
     and replay is a refutation, one that does not points to a numerical defect";

fn cmd_verify(theorem: TheoremId, common: Common, force: bool) -> Result<u8> {
    let mut run = resolve(&common, Command::Verify, 1000, Format::Json)?;
    run.config.theorem_id = Some(theorem);
    run.config.force |= force;
    let options = VerifyOptions {
        trials: run.config.trials,
        seed: run.config.seed,
        force: run.config.force,
        dims: run.config.dims,
    };
    let on_region = theorem.member(run.point);
    if theorem == TheoremId::L5_4 {
        let report = verify_dominance(run.point, run.config.dims.0, &options)?;
        let code = verdict_code(report.verdict);
        let note = (on_region && report.verdict == Verdict::Violated).then(|| ON_REGION_NOTE.to_string());
        let result = VerifyResult {
            theorem: theorem_name(theorem),
            statement: theorem.statement(),
            report,
            note,
        };
        emit(&to_json(&run.config, result)?, run.config.output_path.as_deref())?;
        return Ok(code);
    }
    let family = match (&run.config.family, overrides_family(&common)) {
        (Some(f), false) => f.clone(),
        _ => family_for_theorem(theorem, &run.flags, run.point, run.config.dims, run.config.seed)?,
    };
    let report = verify(theorem, &family, &options)?;
    run.config.family = Some(family);
    let code = verdict_code(report.verdict);
    let note = (on_region && report.verdict == Verdict::Violated).then(|| ON_REGION_NOTE.to_string());
    let result = VerifyResult {
        theorem: theorem_name(theorem),
        statement: theorem.statement(),
        report,
        note,
    };
    emit(&to_json(&run.config, result)?, run.config.output_path.as_deref())?;
    Ok(code)
}

fn cmd_sweep(common: Common, p_grid: String, q_grid: String, s_grid: String) -> Result<u8> {
    let mut run = resolve(&common, Command::Sweep, 200, Format::Csv)?;
    let grids = match (&run.config.grids, common.config.is_some() && p_grid.is_empty() && s_grid.is_empty()) {
        (Some(g), true) => g.clone(),
        _ => Grids {
            p: parse_grid(&p_grid)?,
            q: parse_grid(&q_grid)?,
            s: parse_grid(&s_grid)?,
        },
    };
    let template = plain_family(&run, &common)?;
    let sampler = SamplerConfig::new(template.input_dims().0, run.config.seed);
    let result = sweep(&template, &grids.p, &grids.q, &grids.s, run.config.trials, &sampler)?;
    run.config.family = Some(template);
    run.config.grids = Some(grids);
    match run.config.format {
        Format::Json => emit(&to_json(&run.config, &result)?, run.config.output_path.as_deref())?,
        _ => {
            emit(&result.to_csv(), run.config.output_path.as_deref())?;
            if let Some(path) = &run.config.output_path {
                let meta = format!("{path}.meta.json");
                write_atomic(Path::new(&meta), &to_json(&run.config, serde_json::json!({ "cells": result.cells.len() }))?)?;
            }
        }
    }
    Ok(EXIT_PASS)
}

fn read_certificate(path: &str) -> Result<Certificate> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
    let value: serde_json::Value = serde_json::from_str(&text).with_context(|| format!("parsing {path}"))?;
    let cert = value.get("certificate").cloned().unwrap_or(value);
    serde_json::from_value(cert).with_context(|| format!("{path} holds no certificate"))
}

fn cmd_hunt(common: Common, direction: Option<Direction>, budget: Option<usize>, replay: Option<String>) -> Result<u8> {
    let mut run = resolve(&common, Command::Hunt, 0, Format::Json)?;
    if let Some(path) = replay {
        let cert = read_certificate(&path)?;
        let check = cert.replay()?;
        let duality = cert.check_duality().map_err(|e| e.to_string()).err();
        let ok = check.reproduced && check.still_violated && duality.is_none();
        run.config.family = Some(cert.family.clone());
        let result = serde_json::json!({ "replay": check, "duality_error": duality, "valid": ok });
        emit(&to_json(&run.config, result)?, run.config.output_path.as_deref())?;
        return Ok(if ok { EXIT_PASS } else { EXIT_INCONCLUSIVE });
    }
    let direction = direction.or(run.config.direction).unwrap_or(Direction::Concave);
    let budget = budget.or(run.config.budget).unwrap_or(10_000);
    let family = plain_family(&run, &common)?;
    let outcome = hunt_counterexample(&family, direction, &HuntConfig::new(budget, run.config.seed))?;
    run.config.family = Some(family);
    run.config.direction = Some(direction);
    run.config.budget = Some(budget);
    let code = match &outcome {
        HuntOutcome::Found { .. } => EXIT_VIOLATED,
        HuntOutcome::Exhausted(_) => EXIT_PASS,
    };
    emit(&to_json(&run.config, &outcome)?, run.config.output_path.as_deref())?;
    Ok(code)
}

fn cmd_regions(p: Option<f64>, q: Option<f64>, s: Option<f64>, format: Option<Format>) -> Result<u8> {
    let point = match (p, q, s) {
        (None, None, None) => None,
        (Some(p), q, s) => Some(ParameterPoint::new(p, q.unwrap_or(0.0), s.unwrap_or(1.0))),
        _ => bail!("--p is required when --q or --s is given"),
    };
    let rows: Vec<serde_json::Value> = TheoremId::ALL
        .iter()
        .map(|t| {
            let membership = point.map(|pt| t.explain(pt));
            serde_json::json!({
                "id": t.as_str(),
                "name": theorem_name(*t),
                "statement": t.statement(),
                "member": membership.as_ref().map(|m| m.is_ok()),
                "reason": membership.and_then(|m| m.err()),
            })
        })
        .collect();
    if format == Some(Format::Json) {
        let doc = serde_json::json!({ "version": VERSION, "point": point, "regions": rows });
        emit(&serde_json::to_string_pretty(&doc)?, None)?;
        return Ok(EXIT_PASS);
    }
    let mut text = String::new();
    for t in TheoremId::ALL {
        let line = match point {
            None => format!("{:<22} {}", t.as_str(), t.statement()),
            Some(pt) => match t.explain(pt) {
                Ok(()) => format!("{:<22} member", t.as_str()),
                Err(reason) => format!("{:<22} outside: {reason}", t.as_str()),
            },
        };
        text.push_str(&line);
        text.push('\n');
    }
    emit(&text, None)?;
    Ok(EXIT_PASS)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<LabError>() {
        Some(e) if e.is_precondition() => EXIT_PRECONDITION,
        _ => EXIT_INTERNAL,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Cmd::Eval { common, matrices } => cmd_eval(common, matrices),
        Cmd::Verify { theorem, common, force } => cmd_verify(theorem, common, force),
        Cmd::Sweep {
            common,
            p_grid,
            q_grid,
            s_grid,
        } => cmd_sweep(common, p_grid, q_grid, s_grid),
        Cmd::Hunt {
            common,
            direction,
            budget,
            replay,
        } => cmd_hunt(common, direction, budget, replay),
        Cmd::Regions { p, q, s, format } => cmd_regions(p, q, s, format),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            let code = exit_code(&err);
            let root = err.chain().find_map(|e| e.downcast_ref::<LabError>());
            match root {
                Some(LabError::Precondition(msg)) => eprintln!("error: {msg}"),
                _ => eprintln!("error: {err:#}"),
            }
            ExitCode::from(code)
        }
    }
}
