use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use hsurf_core::harness::{
    emit_reports, read_solution_csv, resolve_scenario, run_pipeline_with, vekua_selftest, Format, Scenario,
    Stage, SELFTEST_RESOLUTIONS,
};
use hsurf_core::mesh::build_halfdisc_mesh;

#[derive(Parser)]
#[command(name = "hsurf", version, about = "Free-boundary H-surface laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Bundled scenario name or path to a scenario TOML file.
    #[arg(long, default_value = "flat")]
    scenario: String,
    /// Output directory for reports.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the number of radial mesh rings.
    #[arg(long)]
    mesh_n: Option<usize>,
    /// Override the solver tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Solution CSV to analyse instead of solving.
    #[arg(long)]
    solution: Option<PathBuf>,
    /// Report formats, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "json,csv,gnuplot")]
    format: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Minimize the energy and write the solution.
    Solve(Common),
    /// First variation, boundary flux and decay diagnostics.
    Verify(Common),
    /// Complex transform identities and gradient equivalence.
    Transform(Common),
    /// Branch point detection and expansion fits.
    Branchfit(Common),
    /// Hölder exponent of the gradient at a point on the straight segment.
    Holder(Common),
    /// Every stage in order.
    All(Common),
    /// Vekua operator residuals at three grid resolutions.
    VekuaSelftest {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List bundled scenarios.
    Scenarios,
}

fn scenario_with_overrides(c: &Common) -> Result<Scenario> {
    let mut s = resolve_scenario(&c.scenario).with_context(|| format!("loading scenario {}", c.scenario))?;
    if let Some(n) = c.mesh_n {
        s.mesh.n_radial = n;
    }
    if let Some(t) = c.tol {
        s.solver.tol = t;
    }
    s.validate()?;
    Ok(s)
}

fn run_stage(c: &Common, stage: Stage) -> Result<bool> {
    let scenario = scenario_with_overrides(c)?;
    let formats = c
        .format
        .iter()
        .map(|f| Format::parse(f).with_context(|| format!("unknown format '{f}'")))
        .collect::<Result<Vec<_>>>()?;
    let (stages, solution) = match (&c.solution, stage) {
        (_, Stage::Solve) => (vec![Stage::Solve], None),
        (Some(path), s) => {
            let mesh = Arc::new(build_halfdisc_mesh::<f64>(scenario.mesh.n_radial, scenario.mesh.grading)?);
            let map = read_solution_csv(path, mesh).with_context(|| format!("reading {}", path.display()))?;
            (vec![s], Some(map))
        }
        (None, s) => (vec![Stage::Solve, s], None),
    };
    let report = run_pipeline_with(&scenario, &stages, solution)?;
    for s in &report.stages {
        match &s.error {
            None => log::info!("stage {} ok", s.stage.as_str()),
            Some(e) => log::error!("stage {} failed: {e}", s.stage.as_str()),
        }
    }
    for ch in report.checks.iter().filter(|c| !c.pass) {
        log::error!("check {} failed: {} {} {}", ch.name, ch.value, ch.relation, ch.tolerance);
    }
    match &c.out {
        Some(dir) => {
            for p in emit_reports(&report, dir, &formats)? {
                println!("{}", p.display());
            }
        }
        None => println!("{}", report.to_json()?),
    }
    Ok(report.passed())
}

fn run_all(c: &Common) -> Result<bool> {
    let scenario = scenario_with_overrides(c)?;
    if c.solution.is_some() {
        bail!("--solution is not used with `all`; run the individual stages instead");
    }
    let formats = c
        .format
        .iter()
        .map(|f| Format::parse(f).with_context(|| format!("unknown format '{f}'")))
        .collect::<Result<Vec<_>>>()?;
    let report = run_pipeline_with(&scenario, &Stage::ALL, None)?;
    match &c.out {
        Some(dir) => {
            for p in emit_reports(&report, dir, &formats)? {
                println!("{}", p.display());
            }
        }
        None => println!("{}", report.to_json()?),
    }
    Ok(report.passed())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Solve(c) => run_stage(c, Stage::Solve),
        Command::Verify(c) => run_stage(c, Stage::Verify),
        Command::Transform(c) => run_stage(c, Stage::Transform),
        Command::Branchfit(c) => run_stage(c, Stage::Branchfit),
        Command::Holder(c) => run_stage(c, Stage::Holder),
        Command::All(c) => run_all(c),
        Command::VekuaSelftest { out } => (|| {
            let st = vekua_selftest(&SELFTEST_RESOLUTIONS)?;
            let json = serde_json::to_string_pretty(&st)?;
            match out {
                Some(dir) => {
                    std::fs::create_dir_all(dir)?;
                    let p = dir.join("vekua_selftest.json");
                    std::fs::write(&p, json + "\n")?;
                    println!("{}", p.display());
                }
                None => println!("{json}"),
            }
            Ok(st.passed())
        })(),
        Command::Scenarios => {
            for n in hsurf_core::harness::bundled_names() {
                println!("{n}");
            }
            Ok(true)
        }
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
