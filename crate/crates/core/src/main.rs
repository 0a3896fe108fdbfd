use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use fissure::harness::{
    barrier_suite, emit_report, read_log, run_scenario_cached, save_series, sweep, sweep_points,
    ReportFormat, RunCache, Scenario, SweepFile, Verdict,
};
use fissure::spectral::{dirichlet_ground_state, EigenDomain};

const MISMATCH: u8 = 2;

#[derive(Parser)]
#[command(
    name = "fissure",
    version,
    about = "Blow-up experiments for heat flow with degenerate absorption"
)]
struct Cli {
    /// Output root.
    #[arg(
        long,
        global = true,
        env = "FISSURE_OUT",
        default_value = "fissure-out"
    )]
    out: PathBuf,
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Wall-clock budget in seconds; no new scenario or sweep point starts after it.
    #[arg(long, global = true)]
    budget: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run scenario files and compare with their expected outcomes.
    Run {
        #[arg(required = true)]
        scenarios: Vec<PathBuf>,
    },
    /// Run a parameter sweep, resuming from its log.
    Sweep { file: PathBuf },
    /// Check the closed-form supersolutions on two grids.
    VerifyBarriers {
        /// Cells per unit length, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "32,64")]
        cells: Vec<usize>,
    },
    /// Dirichlet ground state of `interval` or `ball<dim>` with n cells.
    Eigen { domain: String, n: usize },
    /// Rebuild the report of a sweep log.
    Report { log: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<u8> {
    if let Some(w) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build_global()
            .context("configuring the worker pool")?;
    }
    let budget = cli.budget.map(Duration::from_secs_f64);
    match &cli.command {
        Command::Run { scenarios } => run(&cli.out, scenarios, budget),
        Command::Sweep { file } => run_sweep(&cli.out, file, cli.workers, budget),
        Command::VerifyBarriers { cells } => verify(&cli.out, cells),
        Command::Eigen { domain, n } => eigen(domain, *n),
        Command::Report { log } => {
            let verdicts: Vec<Verdict> = read_log(log)?.into_iter().map(|(_, v)| v).collect();
            report(&cli.out, &verdicts)?;
            Ok(exit_code(&verdicts))
        }
    }
}

fn exit_code(verdicts: &[Verdict]) -> u8 {
    if verdicts.iter().any(|v| v.regression && !v.matches()) {
        MISMATCH
    } else {
        0
    }
}

fn print_verdict(v: &Verdict) {
    let status = match (v.matches(), v.regression) {
        (true, _) => "match",
        (false, true) => "MISMATCH",
        (false, false) => "exploratory",
    };
    println!(
        "{:<24} expected {:<24} got {:<24} {status} [{:.1} s]",
        v.scenario,
        v.expected.label(),
        v.outcome.label(),
        v.wall_time
    );
}

fn report(out: &Path, verdicts: &[Verdict]) -> Result<()> {
    let files = emit_report(
        verdicts,
        out,
        &[ReportFormat::Csv, ReportFormat::PlotScript],
    )?;
    println!("wrote {} report files to {}", files.len(), out.display());
    Ok(())
}

fn run(out: &Path, paths: &[PathBuf], budget: Option<Duration>) -> Result<u8> {
    let clock = Instant::now();
    let cache = RunCache::new();
    let mut verdicts = Vec::new();
    for (i, path) in paths.iter().enumerate() {
        if let Some(b) = budget.filter(|&b| clock.elapsed() >= b) {
            report(out, &verdicts).ok();
            bail!(
                "budget of {:.1} s (--budget) exhausted with {} of {} scenarios left",
                b.as_secs_f64(),
                paths.len() - i,
                paths.len()
            );
        }
        let scenario = Scenario::load(path)?;
        let (verdict, series) = run_scenario_cached(&scenario, &cache)
            .with_context(|| format!("scenario {}", path.display()))?;
        let dir = out.join(&scenario.name);
        save_series(&series, &dir.join("probes"))?;
        let json = serde_json::to_string_pretty(&verdict)?;
        std::fs::write(dir.join("verdict.json"), json)
            .with_context(|| format!("writing {}", dir.display()))?;
        emit_report(
            std::slice::from_ref(&verdict),
            &dir,
            &[ReportFormat::Csv, ReportFormat::PlotScript],
        )?;
        print_verdict(&verdict);
        verdicts.push(verdict);
    }
    if verdicts.len() > 1 {
        report(out, &verdicts)?;
    }
    Ok(exit_code(&verdicts))
}

fn run_sweep(
    out: &Path,
    file: &Path,
    workers: Option<usize>,
    budget: Option<Duration>,
) -> Result<u8> {
    let (spec, base) = SweepFile::load(file)?;
    let points = sweep_points(&base, &spec.axes, spec.budget)?;
    let log = out.join(format!("{}-sweep.jsonl", base.name));
    let workers = workers.unwrap_or_else(rayon::current_num_threads);
    println!("sweep of {} points, log {}", points.len(), log.display());
    let result = sweep(&points, &log, workers, budget)?;
    for v in &result.verdicts {
        print_verdict(v);
    }
    if !result.verdicts.is_empty() {
        report(out, &result.verdicts)?;
    }
    if !result.skipped.is_empty() {
        bail!(
            "budget (--budget) exhausted with {} points left; rerun to resume from {}",
            result.skipped.len(),
            log.display()
        );
    }
    Ok(exit_code(&result.verdicts))
}

fn verify(out: &Path, cells: &[usize]) -> Result<u8> {
    let reports = barrier_suite(cells, 2.0, 1.0, 1.0)?;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let path = out.join("barriers.csv");
    let mut w =
        csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(fissure::barriers::BarrierReport::CSV_HEADER)?;
    for r in &reports {
        w.write_record(r.csv_record())?;
        println!(
            "{:<22} {:<28} min residual {:+.3e}  violations {}/{}  C = {}",
            r.name,
            r.grid,
            r.min_residual,
            r.violations,
            r.checked,
            r.constant.map_or_else(|| "-".into(), |c| format!("{c:.6}"))
        );
    }
    w.flush()?;
    Ok(if reports.iter().all(|r| r.passed()) {
        0
    } else {
        MISMATCH
    })
}

fn eigen(domain: &str, n: usize) -> Result<u8> {
    let domain = match domain {
        "interval" => EigenDomain::Interval,
        "disk" => EigenDomain::Ball { dim: 2 },
        other => match other.strip_prefix("ball").map(str::parse) {
            Some(Ok(dim)) => EigenDomain::Ball { dim },
            _ => bail!("unknown domain `{other}`; use interval, disk or ball<dim>"),
        },
    };
    let pair = dirichlet_ground_state(domain, n)?;
    println!(
        "lambda0 = {:.15e}  ({} inverse iterations)",
        pair.lambda, pair.iterations
    );
    Ok(0)
}
