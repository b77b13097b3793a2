use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use optomech::ffunc::compute_f_set;
use optomech::linearized::{linearized_fock_populations, rwa_check};
use optomech::report::{linearized_csv, observables_csv, oracle_csv, scan_csv, to_json};
use optomech::{
    compare, identity_suite, linearized_oracle_populations, resonance_scan, run_oracle, Error, ObservableSeries, Scenario, ScenarioPoint,
};
use rayon::prelude::*;
use serde_json::json;

#[derive(Parser)]
#[command(name = "optomech", version, about = "Exact and brute-force time evolution of optomechanical scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run pipelines on a scenario file and write CSV/JSON artifacts.
    Run(RunArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
enum Pipeline {
    Analytic,
    Oracle,
    Linearized,
    Scan,
    Identities,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Comma-separated pipelines.
    #[arg(long, value_delimiter = ',', default_value = "analytic")]
    pipeline: Vec<Pipeline>,
    /// Also write the analytic-vs-oracle deviation report.
    #[arg(long)]
    compare: bool,
    /// Sweep points run concurrently.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    jobs: u32,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Subdivide every grid interval K times.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    grid_refine: u32,
    /// Comma-separated artifact formats for time series.
    #[arg(long, value_delimiter = ',', default_value = "csv")]
    format: Vec<Format>,
    /// Scenario file (not needed for the identities pipeline alone).
    scenario: Option<PathBuf>,
}

const EXIT_RUNTIME: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_VALIDATION: u8 = 3;

fn fail(code: u8, value: serde_json::Value) -> ExitCode {
    eprintln!("{}", serde_json::to_string_pretty(&value).expect("json"));
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let Command::Run(args) = Cli::parse().command;
    let needs_scenario = args.compare || args.pipeline.iter().any(|p| *p != Pipeline::Identities);
    let points = match (&args.scenario, needs_scenario) {
        (None, true) => return fail(EXIT_PARSE, json!({ "error": "parse", "message": "a scenario file is required for these pipelines" })),
        (None, false) => Vec::new(),
        (Some(path), _) => {
            let scenario = match Scenario::from_path(path) {
                Ok(s) => s,
                Err(Error::Parse(m)) => return fail(EXIT_PARSE, json!({ "error": "parse", "message": m })),
                Err(e) => return fail(EXIT_PARSE, json!({ "error": "io", "message": e.to_string() })),
            };
            match scenario.resolve(args.grid_refine as usize) {
                Ok(p) => p,
                Err(report) => return fail(EXIT_VALIDATION, json!({ "error": "validation", "report": report })),
            }
        }
    };
    match run(&args, &points) {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(EXIT_RUNTIME, json!({ "error": "runtime", "message": format!("{e:#}") })),
    }
}

fn write(path: &Path, contents: &str) -> anyhow::Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn run(args: &RunArgs, points: &[ScenarioPoint]) -> anyhow::Result<Vec<String>> {
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let mut lines = Vec::new();
    if args.pipeline.contains(&Pipeline::Identities) {
        let r = identity_suite();
        write(&args.out.join("identities.json"), &to_json(&r))?;
        lines.push(format!("identities: worst deviation {:.3e}", r.worst()));
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(args.jobs as usize).build()?;
    let per_point: Vec<anyhow::Result<Vec<String>>> =
        pool.install(|| points.par_iter().map(|p| run_point(args, p).with_context(|| format!("scenario point {}", p.name))).collect());
    for r in per_point {
        lines.extend(r?);
    }
    Ok(lines)
}

fn run_point(args: &RunArgs, p: &ScenarioPoint) -> anyhow::Result<Vec<String>> {
    let dir = if points_share_root(p) { args.out.clone() } else { args.out.join(&p.name) };
    fs::create_dir_all(&dir)?;
    let mut lines = Vec::new();
    let csv = args.format.contains(&Format::Csv);
    let js = args.format.contains(&Format::Json);
    let want = |x: Pipeline| args.pipeline.contains(&x);

    let analytic = if want(Pipeline::Analytic) || args.compare {
        let f = compute_f_set(&p.system, &p.grid)?;
        for w in &f.warnings {
            eprintln!("{}: {w}", p.name);
        }
        Some(ObservableSeries::compute(&p.state, &f))
    } else {
        None
    };
    if want(Pipeline::Analytic) {
        let a = analytic.as_ref().expect("computed above");
        if csv {
            write(&dir.join("observables.csv"), &observables_csv(a))?;
        }
        if js {
            write(&dir.join("observables.json"), &to_json(a))?;
        }
        lines.push(format!("{}: analytic, {} samples", p.name, a.t.len()));
    }

    let oracle = if want(Pipeline::Oracle) || args.compare {
        let Some(o) = &p.oracle else { bail!("the oracle pipeline needs an [oracle] section") };
        Some((run_oracle(&p.system, &p.state, &o.space, &p.grid, o.options)?, o.floor))
    } else {
        None
    };
    if let Some((o, _)) = &oracle {
        if csv {
            write(&dir.join("oracle.csv"), &oracle_csv(o))?;
        }
        if js {
            write(&dir.join("oracle.json"), &to_json(o))?;
        }
        lines.push(format!("{}: oracle, norm drift {:.2e}, top-level mass {:.2e}", p.name, o.norm_drift, o.truncation_mass));
    }
    if args.compare {
        let (a, (o, floor)) = (analytic.as_ref().expect("computed"), oracle.as_ref().expect("computed"));
        let report = compare(a, o, *floor);
        write(&dir.join("comparison.json"), &to_json(&report))?;
        lines.push(format!("{}: worst relative deviation {:.3e}", p.name, report.worst_rel()));
    }

    if want(Pipeline::Linearized) {
        let Some(l) = &p.linearized else { bail!("the linearized pipeline needs a [linearized] section") };
        let series = linearized_oracle_populations(&l.spec, &l.state, &l.grid)?;
        if csv {
            write(&dir.join("linearized.csv"), &linearized_csv(&series))?;
        }
        if js {
            write(&dir.join("linearized.json"), &to_json(&series))?;
        }
        if let Some((space, overflow)) = &l.fock {
            match linearized_fock_populations(&l.spec, &l.state, space, &l.grid, *overflow) {
                Ok(s) => write(&dir.join("linearized_fock.csv"), &linearized_csv(&s))?,
                Err(e @ Error::TruncationOverflow { .. }) => eprintln!("{}: Fock propagation stopped: {e}", p.name),
                Err(e) => return Err(e.into()),
            }
        }
        if let Some(res) = l.resonance {
            let check = rwa_check(&l.spec, res, &l.state, l.grid.end(), l.grid.len())?;
            write(&dir.join("rwa_check.json"), &to_json(&check))?;
            lines.push(format!("{}: rotating-wave forms within {:.2}% of propagation", p.name, 100.0 * check.worst()));
        } else {
            lines.push(format!("{}: linearized, {} samples", p.name, series.t.len()));
        }
    }

    if want(Pipeline::Scan) {
        let (Some(s), Some(l)) = (&p.scan, &p.linearized) else { bail!("the scan pipeline needs [scan] and [linearized] sections") };
        let report = resonance_scan(&l.spec, &p.state, l.mode, l.resonator, &s.omega_d, s.horizon)?;
        for w in &report.warnings {
            eprintln!("{}: {w}", p.name);
        }
        write(&dir.join("scan.csv"), &scan_csv(&report))?;
        if js {
            write(&dir.join("scan.json"), &to_json(&report))?;
        }
        let resonant: Vec<String> = report.rows.iter().filter(|r| r.resonant).map(|r| format!("{}@{}", r.model.name(), r.omega_d)).collect();
        lines.push(format!("{}: scan, resonant: {}", p.name, if resonant.is_empty() { "none".into() } else { resonant.join(" ") }));
    }
    Ok(lines)
}

/// Only a sweep writes into per-point subdirectories.
fn points_share_root(p: &ScenarioPoint) -> bool {
    !p.is_sweep
}
