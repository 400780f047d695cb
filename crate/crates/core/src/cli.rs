//! Command-line front end: `profile`, `critical`, `verify` and `plotdata`.
//!
//! Every command validates its configuration (and for `plotdata` reads its
//! inputs) before the output directory is created, so a rejected run leaves
//! no files behind. Exit codes: 0 success, 2 configuration or input error,
//! 3 numerical failure.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{Command, OracleKind, RunConfig};
use crate::diagnostics::{self, Check, ComparisonMode, Report, Verdict};
use crate::error::{Error, Result};
use crate::io::{read_csv, write_csv};
use crate::oracles::{self, Branch, ClosedFormProfile};
use crate::potential::{IqVariant, RadialKind};
use crate::radial::RadialProfile;

#[derive(Debug, Parser)]
#[command(name = "deadcore", version, about = "Radial comparison minimizers, dead cores and field diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Upper and lower comparison profiles and the dead-core report for each R.
    Profile(Common),
    /// Bisection for the smallest radius with a dead core.
    Critical(Common),
    /// Field solve followed by the configured checks.
    Verify(Common),
    /// Downsampled overlay and heat-map data with gnuplot scripts.
    Plotdata(Common),
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides `[run] seed`.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::Domain(_)
        | Error::Data(_)
        | Error::Geometry(_)
        | Error::EmptyRegion(_)
        | Error::Io(_)
        | Error::Json(_) => 2,
        Error::NonConvergence(_) | Error::Bracket(_) | Error::Precondition(_) | Error::Resource(_) => 3,
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code. Errors are printed to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let (command, common) = match cli.command {
        Cmd::Profile(c) => (Command::Profile, c),
        Cmd::Critical(c) => (Command::Critical, c),
        Cmd::Verify(c) => (Command::Verify, c),
        Cmd::Plotdata(c) => (Command::Plotdata, c),
    };
    match execute(command, &common) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(command: Command, common: &Common) -> Result<i32> {
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    cfg.require(command)?;
    if let Some(threads) = common.threads {
        if threads == 0 {
            return Err(Error::Config("--threads must be positive".into()));
        }
        // A second call in the same process keeps the existing pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    match command {
        Command::Profile => cmd_profile(&cfg, &common.out),
        Command::Critical => cmd_critical(&cfg, &common.out),
        Command::Verify => cmd_verify(&cfg, &common.out),
        Command::Plotdata => cmd_plotdata(&cfg, &common.out),
    }
}

fn create_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn write_resolved(cfg: &RunConfig, command: Command, dir: &Path) -> Result<()> {
    std::fs::write(dir.join("config.resolved.ini"), cfg.to_ini(command))?;
    Ok(())
}

fn write_profile(path: &Path, profile: &RadialProfile) -> Result<()> {
    let rows = profile.grid.radii().iter().zip(&profile.values).map(|(&r, &h)| vec![r, h]);
    write_csv(path, "r,h", rows)
}

/// Writes `profile_upper.csv`, `profile_lower.csv` and `dead_core.json`; a
/// sweep over several `R` suffixes the CSV names with the sweep index.
pub fn cmd_profile(cfg: &RunConfig, out: &Path) -> Result<i32> {
    let p = cfg.radial_potential();
    let solver = cfg.solver_for(Command::Profile);
    let results: Vec<_> = cfg
        .radii
        .par_iter()
        .map(|&r| {
            let pair = solver.comparison_pair(&p, cfg.n, r)?;
            let report = solver.dead_core_report(&pair, &p)?;
            Ok((pair, report))
        })
        .collect::<Result<_>>()?;
    create_out(out)?;
    let single = results.len() == 1;
    let mut entries = Vec::with_capacity(results.len());
    for (k, (pair, report)) in results.iter().enumerate() {
        let suffix = if single { String::new() } else { format!("_{k}") };
        let upper = format!("profile_upper{suffix}.csv");
        let lower = format!("profile_lower{suffix}.csv");
        write_profile(&out.join(&upper), &pair.upper)?;
        write_profile(&out.join(&lower), &pair.lower)?;
        let mut entry = report.to_json();
        entry["upper_csv"] = json!(upper);
        entry["lower_csv"] = json!(lower);
        entry["ordering_gap"] = json!(pair.ordering_gap());
        entries.push(entry);
    }
    let doc = json!({ "config": cfg.resolved_json(Command::Profile), "results": entries });
    write_json(&out.join("dead_core.json"), &doc)?;
    write_resolved(cfg, Command::Profile, out)?;
    Ok(0)
}

/// Closed-form critical radius when one is known: `√(2e)·q` for the
/// characteristic potential with `n = 2`, `I_q` with the `1/√(2W)`
/// normalization when `n = 1`.
pub fn theory_critical_radius(cfg: &RunConfig) -> Result<Option<(f64, &'static str)>> {
    if cfg.n == 2 && cfg.kind == RadialKind::Characteristic {
        return Ok(Some((oracles::critical_radius_n2_characteristic(cfg.q), "sqrt(2e) q")));
    }
    if cfg.n == 1 {
        let iq = cfg.radial_potential().iq(IqVariant::Sqrt2W)?;
        if iq.is_finite() {
            return Ok(Some((iq.value, "integral of 1/sqrt(2W) over [0, q]")));
        }
    }
    Ok(None)
}

/// Writes `critical.json`.
pub fn cmd_critical(cfg: &RunConfig, out: &Path) -> Result<i32> {
    let p = cfg.radial_potential();
    let divergent = || Error::Precondition("I_q divergent: no dead core exists".into());
    let iq = match p.iq(IqVariant::SqrtW) {
        Err(Error::Precondition(_)) => return Err(divergent()),
        other => other?,
    };
    if !iq.is_finite() {
        return Err(divergent());
    }
    let solver = cfg.solver_for(Command::Critical);
    let tol = cfg.critical_tol.unwrap_or(1e-3 * cfg.q.max(1.0));
    let c = solver.critical_radius(&p, cfg.n, tol)?;
    let theory = theory_critical_radius(cfg)?;
    let iq2 = p.iq(IqVariant::Sqrt2W)?;
    create_out(out)?;
    let doc = json!({
        "config": cfg.resolved_json(Command::Critical),
        "critical_radius": c.estimate,
        "bracket": [c.bracket.0, c.bracket.1],
        "bracket_width": c.bracket.1 - c.bracket.0,
        "tolerance": tol,
        "solves": c.solves,
        "iq_sqrt_w": iq.value,
        "iq_sqrt2w": iq2.value,
        "theorem2_threshold": (4.0 * cfg.n as f64 + std::f64::consts::SQRT_2) * iq.value,
        "theory": theory.map(|t| t.0),
        "theory_formula": theory.map(|t| t.1),
        "relative_error": theory.map(|t| c.estimate / t.0 - 1.0),
    });
    write_json(&out.join("critical.json"), &doc)?;
    write_resolved(cfg, Command::Critical, out)?;
    Ok(0)
}

fn failed_check(name: &str, params: Value, e: &Error) -> Check {
    Check {
        name: name.into(),
        params,
        residuals: json!({ "error": e.to_string() }),
        tolerance: 0.0,
        verdict: Verdict::Inconclusive,
    }
}

/// Writes `field.csv`, `field.json` and `report.json`. Returns exit code 3
/// when the field solve did not converge; the report is written either way.
pub fn cmd_verify(cfg: &RunConfig, out: &Path) -> Result<i32> {
    let problem = cfg.field_problem()?;
    let geometry = &problem.geometry;
    for ball in &cfg.checks.interior_balls {
        if geometry.distance_to_boundary(ball.center) < ball.radius {
            return Err(Error::Config(format!(
                "[checks] interior ball at {:?} with radius {} leaves the domain",
                ball.center, ball.radius
            )));
        }
    }
    let spec = &problem.spec;
    let (field, stats) = problem.solve_cascade(&cfg.cascade_options())?;
    let last = stats.last().expect("cascade runs at least one solve");
    let converged = last.converged;

    let mut report = Report::new(cfg.resolved_json(Command::Verify));
    report.push(Check {
        name: "field_solve".into(),
        params: json!({ "cells": problem.cells, "stages": stats.len() }),
        residuals: json!({
            "iterations": last.iterations,
            "final_energy": last.final_energy,
            "last_energy_decrease": last.last_energy_decrease,
            "max_constraint_violation_before_projection": last.max_constraint_violation_before_projection,
        }),
        tolerance: cfg.cascade.solve.tol,
        verdict: if converged { Verdict::Pass } else { Verdict::Inconclusive },
    });

    let p = cfg.radial_potential();
    let solver = cfg.solver_for(Command::Verify);
    let balls: Vec<_> = cfg
        .checks
        .interior_balls
        .iter()
        .map(|b| (b, ComparisonMode::Interior))
        .chain(cfg.checks.boundary_balls.iter().map(|b| (b, ComparisonMode::Boundary)))
        .collect();
    let comparisons: Vec<Check> = balls
        .par_iter()
        .map(|(ball, mode)| {
            let params = json!({ "center": ball.center, "radius": ball.radius, "mode": mode });
            solver
                .comparison_pair(&p, cfg.n, ball.radius)
                .and_then(|pair| diagnostics::verify_comparison(&field, &pair, ball.center, ball.radius, *mode))
                .map(|v| v.to_check())
                .unwrap_or_else(|e| failed_check("comparison", params, &e))
        })
        .collect();
    for c in comparisons {
        report.push(c);
    }

    let center = cfg.checks.pohozaev_center;
    if !cfg.checks.pohozaev_radii.is_empty() {
        let radii = &cfg.checks.pohozaev_radii;
        report.push(
            diagnostics::pohozaev_field(&field, spec, center, radii)
                .map(|s| s.to_check(cfg.checks.pohozaev_tolerance))
                .unwrap_or_else(|e| failed_check("pohozaev", json!({ "center": center, "radii": radii }), &e)),
        );
    }
    if !cfg.checks.monotonicity_radii.is_empty() {
        let radii = &cfg.checks.monotonicity_radii;
        report.push(
            diagnostics::monotonicity_field(&field, spec, center, radii)
                .map(|s| s.to_check())
                .unwrap_or_else(|e| failed_check("monotonicity", json!({ "center": center, "radii": radii }), &e)),
        );
    }
    if cfg.checks.maximum_principle {
        report.push(
            diagnostics::maximum_principle_check(&field, spec, None, cfg.checks.positivity_floor)
                .map(|r| r.to_check())
                .unwrap_or_else(|e| failed_check("maximum_principle", json!({}), &e)),
        );
    }
    if cfg.checks.dead_core {
        let zero = cfg.checks.zero_tolerance.unwrap_or_else(|| solver.zero_tolerance(cfg.q));
        report.push(
            diagnostics::dead_core_field_check(&field, spec, zero)
                .map(|r| r.to_check())
                .unwrap_or_else(|e| failed_check("dead_core", json!({ "zero_tolerance": zero }), &e)),
        );
    }

    create_out(out)?;
    field.write(out, "field")?;
    report.write(&out.join("report.json"))?;
    write_resolved(cfg, Command::Verify, out)?;
    if !converged {
        eprintln!("error: field solve did not converge within {} iterations", cfg.cascade.solve.max_iters);
        return Ok(3);
    }
    Ok(0)
}

fn oracle_profile(cfg: &RunConfig) -> Result<Option<ClosedFormProfile>> {
    let r = || cfg.radii[0];
    Ok(match cfg.output.oracle {
        OracleKind::None => None,
        OracleKind::LogCore => Some(oracles::remark1_profile(cfg.q, r(), Branch::Upper)?),
        OracleKind::Harmonic => Some(oracles::harmonic_core_profile(cfg.q, r(), Branch::Upper)?),
        OracleKind::FirstIntegral => Some(oracles::first_integral_profile_n1(&cfg.radial_potential(), r())?),
        OracleKind::Cosh => Some(oracles::cosh_profile_n1(cfg.q, r())?),
    })
}

fn read_nonempty(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    if !path.exists() {
        return Err(Error::Data(format!("input {} does not exist", path.display())));
    }
    let (header, rows) = read_csv(path)?;
    if rows.is_empty() {
        return Err(Error::Data(format!("{} has no data rows", path.display())));
    }
    Ok((header, rows))
}

fn stride(len: usize, target: usize) -> usize {
    len.div_ceil(target).max(1)
}

/// Writes `overlay.csv` + `overlay.gp` for a profile input and
/// `heatmap.csv` + `heatmap.gp` for a field input.
pub fn cmd_plotdata(cfg: &RunConfig, out: &Path) -> Result<i32> {
    let profile = match &cfg.output.profile_csv {
        None => None,
        Some(path) => {
            let (header, rows) = read_nonempty(path)?;
            if header.len() < 2 || header[0] != "r" || rows.iter().any(|r| r.len() < 2) {
                return Err(Error::Data(format!("{} is not an r,h profile", path.display())));
            }
            Some(rows)
        }
    };
    let field = match &cfg.output.field_csv {
        None => None,
        Some(path) => {
            let (header, rows) = read_nonempty(path)?;
            let dims = if header.get(1).is_some_and(|h| h == "j") { 2 } else { 1 };
            if header[0] != "i" || header.len() <= dims || rows.iter().any(|r| r.len() != header.len()) {
                return Err(Error::Data(format!("{} is not a field CSV", path.display())));
            }
            Some((dims, rows))
        }
    };
    let oracle = oracle_profile(cfg)?;
    create_out(out)?;

    if let Some(rows) = profile {
        let step = stride(rows.len(), cfg.output.downsample);
        let mut picked: Vec<&Vec<f64>> = rows.iter().step_by(step).collect();
        if picked.last() != rows.last().as_ref() {
            picked.push(rows.last().expect("nonempty"));
        }
        let mut script = String::from("set datafile separator ','\nset key autotitle columnhead\nset xlabel 'r'\n");
        match &oracle {
            Some(o) => {
                write_csv(
                    &out.join("overlay.csv"),
                    "r,h,oracle",
                    picked.iter().map(|r| vec![r[0], r[1], o.value(r[0])]),
                )?;
                script.push_str("plot 'overlay.csv' using 1:2 with linespoints, '' using 1:3 with lines\n");
            }
            None => {
                write_csv(&out.join("overlay.csv"), "r,h", picked.iter().map(|r| vec![r[0], r[1]]))?;
                script.push_str("plot 'overlay.csv' using 1:2 with linespoints\n");
            }
        }
        std::fs::write(out.join("overlay.gp"), script)?;
    }

    if let Some((dims, rows)) = field {
        let max_index = rows.iter().map(|r| r[0].max(if dims == 2 { r[1] } else { 0.0 })).fold(0.0, f64::max);
        let step = stride(max_index as usize + 1, cfg.output.downsample) as f64;
        let keep = |x: f64| (x % step) == 0.0;
        let modulus = |r: &[f64]| r[dims..].iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut script = String::from("set datafile separator ','\n");
        if dims == 2 {
            let picked = rows.iter().filter(|r| keep(r[0]) && keep(r[1])).map(|r| vec![r[0], r[1], modulus(r)]);
            write_csv(&out.join("heatmap.csv"), "i,j,modulus", picked)?;
            let _ = writeln!(script, "set key autotitle columnhead\nset size ratio -1\nplot 'heatmap.csv' using 1:2:3 with points pt 5 ps 0.5 palette notitle");
        } else {
            let picked = rows.iter().filter(|r| keep(r[0])).map(|r| vec![r[0], modulus(r)]);
            write_csv(&out.join("heatmap.csv"), "i,modulus", picked)?;
            let _ = writeln!(script, "set key autotitle columnhead\nplot 'heatmap.csv' using 1:2 with lines");
        }
        std::fs::write(out.join("heatmap.gp"), script)?;
    }
    write_resolved(cfg, Command::Plotdata, out)?;
    Ok(0)
}

/// Convenience for tests and examples: loads the field written by `verify`.
pub fn read_field_modulus(path: &Path) -> Result<Vec<f64>> {
    let (header, rows) = read_nonempty(path)?;
    let dims = if header.get(1).is_some_and(|h| h == "j") { 2 } else { 1 };
    Ok(rows.iter().map(|r| r[dims..].iter().map(|x| x * x).sum::<f64>().sqrt()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_class() {
        assert_eq!(exit_code(&Error::Config("x".into())), 2);
        assert_eq!(exit_code(&Error::Data("x".into())), 2);
        assert_eq!(exit_code(&Error::NonConvergence("x".into())), 3);
        assert_eq!(exit_code(&Error::Precondition("x".into())), 3);
    }

    #[test]
    fn missing_config_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        let code = run(["deadcore", "profile", "--config", "/nonexistent.ini", "--out", out.to_str().unwrap()]);
        assert_eq!(code, 2);
        assert!(!out.exists());
    }

    #[test]
    fn stride_covers_length() {
        assert_eq!(stride(1000, 200), 5);
        assert_eq!(stride(10, 200), 1);
    }
}
