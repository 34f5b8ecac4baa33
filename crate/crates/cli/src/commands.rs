//! The six commands. Each writes its report pair and returns a `Check` error when a check fails.

use std::fs;
use std::path::PathBuf;

use oflx::budget::budget;
use oflx::snapshot::{read_snapshot, write_snapshot};
use oflx::structure::{bulk_condition_study, boundary_modulus, strip_norm_study};
use oflx::TimeSeries;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::lemmas::{lemma_suite, Check, SuiteParams};
use crate::report::{digest_file, num, opt, write_pair, InputDigest, Report, Table};

/// What a command wrote.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub json: PathBuf,
    pub csv: PathBuf,
    pub passed: bool,
}

fn prefix(cfg: &RunConfig, command: &str) -> PathBuf {
    cfg.output.clone().unwrap_or_else(|| PathBuf::from(format!("oflx_{command}")))
}

fn load_series(cfg: &RunConfig) -> CliResult<(TimeSeries, Vec<InputDigest>)> {
    if cfg.inputs.is_empty() {
        return Err(CliError::Usage("no input snapshots given (use --input or \"inputs\" in the config)".into()));
    }
    let digests = cfg.inputs.iter().map(|p| digest_file(p)).collect::<CliResult<Vec<_>>>()?;
    let snaps = cfg.inputs.iter().map(|p| read_snapshot(p)).collect::<oflx::Result<Vec<_>>>()?;
    Ok((TimeSeries::new(snaps)?, digests))
}

fn need_epsilons(cfg: &RunConfig, command: &str) -> CliResult<()> {
    if cfg.epsilons.is_empty() {
        return Err(CliError::Usage(format!("{command} needs an epsilon ladder (--epsilons)")));
    }
    Ok(())
}

fn finish<T: Serialize>(cfg: &RunConfig, command: &str, inputs: Vec<InputDigest>, passed: bool, result: T, table: &Table) -> CliResult<Outcome> {
    let json = Report::new(command, cfg, inputs, passed, result).to_json()?;
    let (json, csv) = write_pair(&prefix(cfg, command), &json, table)?;
    Ok(Outcome { json, csv, passed })
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct GenResult {
    files: Vec<InputDigest>,
    times: Vec<f64>,
}

/// Generates the configured field at `times` into `snap_NNNN.oflx` files plus sidecars.
///
/// The report goes to `<dir>/gen.json` and `<dir>/gen.csv`.
pub fn cmd_gen(cfg: &RunConfig) -> CliResult<Outcome> {
    let spec = cfg.field.as_ref().ok_or_else(|| CliError::Usage("gen needs a \"field\" in the config".into()))?;
    let series = spec.series(&cfg.times)?;
    let dir = cfg.output.clone().unwrap_or_else(|| PathBuf::from("snapshots"));
    fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let source = serde_json::json!({ "field": spec, "times": cfg.times });
    let mut files = Vec::new();
    let mut table = Table::new(&["file", "time", "sha256"]);
    for (s, snap) in series.snapshots().iter().enumerate() {
        let path = dir.join(format!("snap_{s:04}.oflx"));
        write_snapshot(&path, snap, source.clone())?;
        let d = digest_file(&path)?;
        table.push(vec![d.path.clone(), num(snap.time()), d.sha256.clone()]);
        files.push(d);
    }
    let json = Report::new("gen", cfg, Vec::new(), true, GenResult { files, times: cfg.times.clone() }).to_json()?;
    let (json, csv) = write_pair(&dir.join("gen"), &json, &table)?;
    Ok(Outcome { json, csv, passed: true })
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct SnapshotChecks {
    path: String,
    time: f64,
    checks: Vec<Check>,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct VerifyResult {
    params: SuiteParams,
    snapshots: Vec<SnapshotChecks>,
}

/// Lemma suite on every input snapshot; fails when any identity fails.
pub fn cmd_verify(cfg: &RunConfig) -> CliResult<Outcome> {
    let (series, digests) = load_series(cfg)?;
    let params = SuiteParams::resolve(series.grid(), cfg.epsilons.first().copied(), cfg.gamma, cfg.engine);
    let mut snapshots = Vec::new();
    let mut table = Table::new(&["path", "time", "check", "value", "tolerance", "passed"]);
    for (f, d) in series.snapshots().iter().zip(&digests) {
        let checks = lemma_suite(f, &params, &cfg.tolerance_profile)?;
        for c in &checks {
            table.push(vec![d.path.clone(), num(f.time()), c.name.clone(), num(c.value), num(c.tolerance), c.passed.to_string()]);
        }
        snapshots.push(SnapshotChecks { path: d.path.clone(), time: f.time(), checks });
    }
    let failed: Vec<String> = snapshots
        .iter()
        .flat_map(|s| s.checks.iter().filter(|c| !c.passed).map(move |c| format!("{} at t = {}", c.name, s.time)))
        .collect();
    let out = finish(cfg, "verify", digests, failed.is_empty(), VerifyResult { params, snapshots }, &table)?;
    fail_if(out, || failed.join(", "))
}

fn fail_if(out: Outcome, msg: impl FnOnce() -> String) -> CliResult<Outcome> {
    if out.passed {
        Ok(out)
    } else {
        Err(CliError::Check(format!("{} (report: {})", msg(), out.json.display())))
    }
}

/// Structure-function ladders and the bulk-condition verdict.
pub fn cmd_structure(cfg: &RunConfig) -> CliResult<Outcome> {
    let (series, digests) = load_series(cfg)?;
    let g = series.grid();
    let base = cfg.scale_base.unwrap_or(2.0 * g.hx.min(g.hy).min(g.hz));
    let rep = bulk_condition_study(&series, &cfg.directions, cfg.scale_count, base)?;
    let mut table = Table::new(&["direction", "offset", "scale", "s3", "s3OverY"]);
    for d in &rep.per_direction {
        let dir = d.direction.map(|x| x.to_string()).join(" ");
        for m in 0..d.scales.len() {
            let off = d.offsets[m].map(|x| x.to_string()).join(" ");
            table.push(vec![dir.clone(), off, num(d.scales[m]), num(d.s3[m]), num(d.s3_over_y[m])]);
        }
    }
    finish(cfg, "structure", digests, true, rep, &table)
}

/// Mollified energy budget; fails when an identity residual exceeds its tolerance relative to the flux scale.
pub fn cmd_budget(cfg: &RunConfig) -> CliResult<Outcome> {
    need_epsilons(cfg, "budget")?;
    let (series, digests) = load_series(cfg)?;
    let t = cfg.t.unwrap_or(series.horizon());
    let rep = budget(&series, &cfg.epsilons, t, cfg.engine)?;
    let tol = cfg.tolerance_profile.identity_residual;
    let mut table = Table::new(&[
        "epsilon",
        "lhsBoundary",
        "lhsTime",
        "crossTerm",
        "transport",
        "transportIbp",
        "rEpsTerm",
        "defectTerm",
        "weakResidualMollified",
        "identityResidual",
        "lhsGap",
        "fluxScale",
    ]);
    let mut bad = Vec::new();
    for r in &rep.rows {
        if !(r.identity_residual.abs() <= tol * r.flux_scale) {
            bad.push(format!("identityResidual = {:e} at epsilon = {} exceeds {tol:e} x fluxScale = {:e}", r.identity_residual, r.epsilon, r.flux_scale));
        }
        table.push(
            [
                r.epsilon,
                r.lhs_boundary,
                r.lhs_time,
                r.cross_term,
                r.transport,
                r.transport_ibp,
                r.r_eps_term,
                r.defect_term,
                r.weak_residual_mollified,
                r.identity_residual,
                r.lhs_gap,
                r.flux_scale,
            ]
            .map(num)
            .to_vec(),
        );
    }
    let out = finish(cfg, "budget", digests, bad.is_empty(), rep, &table)?;
    fail_if(out, || bad.join("; "))
}

/// Near-boundary strip norms for each ε.
pub fn cmd_strip(cfg: &RunConfig) -> CliResult<Outcome> {
    need_epsilons(cfg, "strip")?;
    let (series, digests) = load_series(cfg)?;
    let rep = strip_norm_study(&series, &cfg.epsilons)?;
    let mut table = Table::new(&["epsilon", "axis", "offsetNodes", "zeroExtended", "extended"]);
    for r in &rep.rows {
        table.push(vec![num(r.epsilon), r.axis.to_string(), r.offset_nodes.to_string(), num(r.zero_extended), num(r.extended)]);
    }
    finish(cfg, "strip", digests, true, rep, &table)
}

/// Boundary modulus of continuity per snapshot.
pub fn cmd_modulus(cfg: &RunConfig) -> CliResult<Outcome> {
    let delta = cfg.delta.ok_or_else(|| CliError::Usage("modulus needs a layer depth (--delta)".into()))?;
    let (series, digests) = load_series(cfg)?;
    let rep = boundary_modulus(&series, delta)?;
    let mut table = Table::new(&["time", "radius", "w", "slope"]);
    for (s, t) in rep.times.iter().enumerate() {
        for (m, r) in rep.radii.iter().enumerate() {
            table.push(vec![num(*t), num(*r), num(rep.values[s][m]), opt(rep.slopes[s])]);
        }
    }
    finish(cfg, "modulus", digests, true, rep, &table)
}

/// Runs `command` by name.
pub fn run(command: &str, cfg: &RunConfig) -> CliResult<Outcome> {
    match command {
        "gen" => cmd_gen(cfg),
        "verify" => cmd_verify(cfg),
        "structure" => cmd_structure(cfg),
        "budget" => cmd_budget(cfg),
        "strip" => cmd_strip(cfg),
        "modulus" => cmd_modulus(cfg),
        other => Err(CliError::Usage(format!("unknown command {other:?}"))),
    }
}
