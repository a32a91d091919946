//! Subcommand implementations.
//!
//! Every command returns `Ok(true)` when all scientific checks pass,
//! `Ok(false)` for a clean run whose checks failed (exit 1), and `Err`
//! for configuration (exit 2) or I/O (exit 3) problems.

use std::fs;
use std::path::Path;

use gpptest::asymptotics::{are_delta, psi_cached};
use gpptest::exceedance::simulate;
use gpptest::mc;
use gpptest::{ExperimentConfig, RandomStream};

use crate::emit::{format_real, now_rfc3339, Csv, OutputRecord, RunManifest};
use crate::{emit, AreCurveArgs, CmdError, RunArgs};

fn load_config(args: &RunArgs) -> Result<ExperimentConfig, CmdError> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| CmdError::Io(format!("cannot read {}: {e}", args.config.display())))?;
    let mut cfg = ExperimentConfig::from_toml_str(&text)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(replications) = args.replications {
        cfg.replications = replications;
    }
    if let Some(n) = args.n {
        cfg.n = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn base_manifest(command: String, started_at: String, threads: usize) -> RunManifest {
    RunManifest {
        tool: "gpptest",
        version: env!("CARGO_PKG_VERSION"),
        command,
        started_at,
        finished_at: String::new(),
        seed: None,
        threads,
        config_toml: None,
        outputs: Vec::new(),
        summary: serde_json::Value::Null,
    }
}

fn finish_manifest(
    mut manifest: RunManifest,
    outputs: Vec<OutputRecord>,
    summary: serde_json::Value,
    out: &Path,
) -> Result<(), CmdError> {
    manifest.outputs = outputs;
    manifest.summary = summary;
    manifest.finished_at = now_rfc3339();
    manifest.write_alongside(out)?;
    Ok(())
}

/// `are-curve`: tabulate the relative-efficiency curve of the omnibus test
/// over a roughness grid.
pub fn cmd_are_curve(args: &AreCurveArgs, threads: usize) -> Result<bool, CmdError> {
    if !(args.delta_min >= 0.0 && args.delta_min < args.delta_max) {
        return Err(CmdError::Config(format!(
            "the roughness range needs 0 <= delta-min < delta-max; got [{}, {}]",
            args.delta_min, args.delta_max
        )));
    }
    if args.steps < 2 {
        return Err(CmdError::Config(format!(
            "the curve needs at least 2 grid points; got {}",
            args.steps
        )));
    }
    let started_at = now_rfc3339();
    let mut csv = Csv::new(&["delta", "psi", "are"]);
    for i in 0..args.steps {
        let delta =
            args.delta_min + (args.delta_max - args.delta_min) * i as f64 / (args.steps - 1) as f64;
        let psi = psi_cached(delta)?;
        let are = are_delta(delta)?;
        csv.row(&[format_real(delta), format_real(psi), format_real(are)]);
    }
    let record = emit::write_tracked(&args.out, &csv.into_bytes())?;
    let manifest = base_manifest(
        format!(
            "are-curve --delta-min {} --delta-max {} --steps {}",
            args.delta_min, args.delta_max, args.steps
        ),
        started_at,
        threads,
    );
    finish_manifest(
        manifest,
        vec![record],
        serde_json::json!({ "rows": args.steps }),
        &args.out,
    )?;
    Ok(true)
}

fn require_out<'a>(args: &'a RunArgs, command: &str) -> Result<&'a Path, CmdError> {
    args.out
        .as_deref()
        .ok_or_else(|| CmdError::Config(format!("{command} requires --out PATH")))
}

/// `power` (and `size` via `force_null`): estimate rejection rates over
/// the configured grid and compare them with asymptotic predictions.
pub fn cmd_power(args: &RunArgs, threads: usize, force_null: bool) -> Result<bool, CmdError> {
    let out = require_out(args, if force_null { "size" } else { "power" })?;
    let mut cfg = load_config(args)?;
    if force_null {
        cfg.xi = 0.0;
        cfg.xis = None;
    }
    let started_at = now_rfc3339();
    let cells = mc::power_curve(&cfg)?;

    let mut csv = Csv::new(&[
        "xi",
        "test",
        "estimate",
        "ci_low",
        "ci_high",
        "prediction",
        "R_effective",
    ]);
    let mut cell_reports = Vec::new();
    let mut errors = Vec::new();
    let mut all_within = true;
    for cell in &cells {
        let label = format!("{}:{:?}", cell.test.label(), cell.side).to_lowercase();
        match (&cell.summary, &cell.error) {
            (Some(s), _) => {
                csv.row(&[
                    format_real(cell.xi),
                    label.clone(),
                    format_real(s.estimate),
                    format_real(s.ci_low),
                    format_real(s.ci_high),
                    format_real(s.asymptotic_prediction),
                    s.r_effective.to_string(),
                ]);
                all_within &= s.within_tolerance;
                cell_reports.push(serde_json::json!({
                    "xi": cell.xi,
                    "test": label,
                    "estimate": s.estimate,
                    "ci_low": s.ci_low,
                    "ci_high": s.ci_high,
                    "prediction": s.asymptotic_prediction,
                    "r_effective": s.r_effective,
                    "within_tolerance": s.within_tolerance,
                }));
            }
            (None, Some(message)) => {
                all_within = false;
                errors.push(serde_json::json!({
                    "xi": cell.xi,
                    "test": label,
                    "message": message,
                }));
            }
            (None, None) => unreachable!("a power cell carries a summary or an error"),
        }
    }
    let record = emit::write_tracked(out, &csv.into_bytes())?;
    let mut manifest = base_manifest(
        if force_null {
            "size".into()
        } else {
            "power".into()
        },
        started_at,
        threads,
    );
    manifest.seed = Some(cfg.seed);
    manifest.config_toml = Some(cfg.to_toml_string()?);
    finish_manifest(
        manifest,
        vec![record],
        serde_json::json!({
            "cells": cell_reports,
            "errors": errors,
            "all_within_tolerance": all_within,
        }),
        out,
    )?;
    Ok(all_within)
}

/// `lan-check`: empirical moments of the log-likelihood ratio against the
/// predicted normal limit, as a JSON report.
pub fn cmd_lan_check(args: &RunArgs, threads: usize) -> Result<bool, CmdError> {
    let cfg = load_config(args)?;
    let started_at = now_rfc3339();
    let report = mc::lan_empirical_check(&cfg)?;
    let passed = report.passed();
    let envelope = serde_json::json!({
        "passed": passed,
        "report": report,
    });
    let text = serde_json::to_string_pretty(&envelope)
        .map_err(|e| CmdError::Io(format!("cannot serialize report: {e}")))?;
    match &args.out {
        Some(out) => {
            let record = emit::write_tracked(out, text.as_bytes())?;
            let mut manifest = base_manifest("lan-check".into(), started_at, threads);
            manifest.seed = Some(cfg.seed);
            manifest.config_toml = Some(cfg.to_toml_string()?);
            finish_manifest(
                manifest,
                vec![record],
                serde_json::json!({ "passed": passed }),
                out,
            )?;
        }
        None => println!("{text}"),
    }
    Ok(passed)
}

/// `simulate`: export raw exceedance data, one row per exceedance value.
pub fn cmd_simulate(args: &RunArgs, threads: usize) -> Result<bool, CmdError> {
    let out = require_out(args, "simulate")?;
    let cfg = load_config(args)?;
    let started_at = now_rfc3339();
    let exp = mc::resolve(&cfg)?;
    let mut csv = Csv::new(&["replication", "tau", "y_index", "y_value"]);
    let mut total_exceedances = 0usize;
    for r in 0..cfg.replications {
        let mut rng = RandomStream::substream(cfg.seed, r as u64);
        let sample = simulate(cfg.n, exp.c, &exp.model, &exp.law, &mut rng)?;
        let tau = sample.tau();
        total_exceedances += tau;
        for (k, y) in sample.ys.iter().enumerate() {
            csv.row(&[
                (r + 1).to_string(),
                tau.to_string(),
                (k + 1).to_string(),
                format_real(*y),
            ]);
        }
    }
    let record = emit::write_tracked(out, &csv.into_bytes())?;
    let mut manifest = base_manifest("simulate".into(), started_at, threads);
    manifest.seed = Some(cfg.seed);
    manifest.config_toml = Some(cfg.to_toml_string()?);
    finish_manifest(
        manifest,
        vec![record],
        serde_json::json!({
            "replications": cfg.replications,
            "n": cfg.n,
            "threshold": exp.c,
            "theta": exp.theta,
            "total_exceedances": total_exceedances,
        }),
        out,
    )?;
    Ok(true)
}

/// `validate-generator`: check the generator specification's invariants
/// and report the findings (human-readable on stdout, JSON with --out).
pub fn cmd_validate_generator(args: &RunArgs, threads: usize) -> Result<bool, CmdError> {
    let cfg = load_config(args)?;
    let started_at = now_rfc3339();
    let model = cfg.generator.build()?;
    // Floor the Monte Carlo budget: configs tuned for data export may use
    // very few replications, which would make the 3-standard-error mean
    // tolerance too loose to catch anything.
    let mc_samples = cfg.replications.max(4_000);
    let report = model.validate_report(cfg.grid_size, mc_samples, cfg.seed)?;
    let passed = report.passed();

    println!("generator: {:?}", cfg.generator);
    println!(
        "  per-node means:     max |mean - 1| = {:.3e} (tolerance {:.3e}, {})",
        report.max_mean_deviation,
        report.mean_tolerance,
        if report.means_within_tolerance {
            "ok"
        } else {
            "VIOLATED"
        }
    );
    println!(
        "  range [0, bound]:   {} violation(s)",
        report.bound_violations
    );
    println!(
        "  infimum mean:       {} ({})",
        report.inf_mean,
        if report.inf_mean_positive {
            "positive"
        } else {
            "VIOLATED: tests have no power"
        }
    );
    println!(
        "  verdict:            {}",
        if passed { "PASS" } else { "FAIL" }
    );

    if let Some(out) = &args.out {
        let envelope = serde_json::json!({
            "passed": passed,
            "report": report,
        });
        let text = serde_json::to_string_pretty(&envelope)
            .map_err(|e| CmdError::Io(format!("cannot serialize report: {e}")))?;
        let record = emit::write_tracked(out, text.as_bytes())?;
        let mut manifest = base_manifest("validate-generator".into(), started_at, threads);
        manifest.seed = Some(cfg.seed);
        manifest.config_toml = Some(cfg.to_toml_string()?);
        finish_manifest(
            manifest,
            vec![record],
            serde_json::json!({ "passed": passed }),
            out,
        )?;
    }
    Ok(passed)
}
