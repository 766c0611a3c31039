mod manifest;
mod scenarios;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use dirac_lab_core::io::ExperimentConfig;
use manifest::{Report, RunManifest};
use scenarios::{CliError, Ctx};

#[derive(Parser, Debug)]
#[command(name = "dirac-lab", version, about = "Dirac field with a nonlinear point oscillator: experiments")]
struct Cli {
    /// Experiment configuration (JSON with model/grid/time/boundary/initial/diagnostics).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Overrides the seed of noise initial data.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for fan-out scenarios; falls back to DIRAC_ATTR_THREADS.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    scenario: Scenario,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BoundaryFlag {
    Conservative,
    Absorbing,
}

#[derive(Subcommand, Debug)]
pub enum Scenario {
    /// Evolve the configured initial data and write the trace and snapshots.
    Simulate {
        #[arg(long)]
        out_trace: Option<PathBuf>,
        #[arg(long)]
        out_snapshots: Option<PathBuf>,
        #[arg(long, value_enum)]
        boundary: Option<BoundaryFlag>,
    },
    /// Tabulate solitary-wave amplitudes over a frequency grid in the gap.
    SolitaryScan {
        #[arg(long)]
        m: Option<f64>,
        /// Coefficients of |z|^2, |z|^4, ... in U_j, comma separated.
        #[arg(long, allow_hyphen_values = true)]
        potential: Option<String>,
        #[arg(long, default_value_t = 64)]
        omega_grid: usize,
    },
    /// Check the bound-state frequencies of the linear coupling F_j = a_j z.
    LinearVerify {
        #[arg(long, default_value_t = 1.0)]
        m: f64,
        #[arg(long, default_value = "1,1")]
        a: String,
        /// Length of the spectral window.
        #[arg(long = "T", default_value_t = 400.0)]
        window: f64,
        /// Time discarded before the window.
        #[arg(long, default_value_t = 100.0)]
        transient: f64,
        #[arg(long = "N", default_value_t = 2048)]
        points: usize,
        #[arg(long = "L", default_value_t = 40.0)]
        half_length: f64,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
    },
    /// Absorbing-boundary run with windowed attraction metrics.
    AttractorTest {
        #[arg(long)]
        plots: bool,
    },
    /// Compare the split-step run with the integral representation.
    DuhamelCheck {
        #[arg(long = "N", default_value_t = 4096)]
        points: usize,
        #[arg(long = "L", default_value_t = 40.0)]
        half_length: f64,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long = "T", default_value_t = 0.5)]
        t_final: f64,
    },
    /// Self-convergence of the time stepping under dt halving.
    ConvergenceStudy {
        #[arg(long = "N", default_value_t = 4096)]
        points: usize,
        #[arg(long = "L", default_value_t = 40.0)]
        half_length: f64,
        /// Coarsest step.
        #[arg(long, default_value_t = 4e-3)]
        dt: f64,
        #[arg(long, default_value_t = 3)]
        levels: usize,
        #[arg(long = "T", default_value_t = 1.0)]
        t_final: f64,
    },
}

impl Scenario {
    fn name(&self) -> &'static str {
        match self {
            Scenario::Simulate { .. } => "simulate",
            Scenario::SolitaryScan { .. } => "solitary-scan",
            Scenario::LinearVerify { .. } => "linear-verify",
            Scenario::AttractorTest { .. } => "attractor-test",
            Scenario::DuhamelCheck { .. } => "duhamel-check",
            Scenario::ConvergenceStudy { .. } => "convergence-study",
        }
    }
}

fn thread_count(flag: Option<usize>) -> Result<usize, CliError> {
    if let Some(n) = flag {
        return Ok(n);
    }
    match std::env::var("DIRAC_ATTR_THREADS") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("DIRAC_ATTR_THREADS must be an integer, got {v:?}"))),
        Err(_) => Ok(0),
    }
}

fn execute(cli: &Cli, report: &mut Report) -> Result<(), CliError> {
    std::fs::create_dir_all(&cli.out_dir)?;
    let config = match &cli.config {
        Some(path) => Some(ExperimentConfig::load(path)?),
        None => None,
    };
    let ctx = Ctx {
        out_dir: cli.out_dir.clone(),
        config,
        seed: cli.seed,
    };
    scenarios::dispatch(&cli.scenario, &ctx, report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let mut report = Report::default();
    let threads = thread_count(cli.threads);
    let mut used = rayon::current_num_threads();
    let result = threads.and_then(|n| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(e.to_string()))?;
        used = pool.current_num_threads();
        pool.install(|| execute(&cli, &mut report))
    });

    let error = result.as_ref().err().map(|e| e.to_string());
    let manifest = RunManifest {
        scenario: cli.scenario.name(),
        version: env!("CARGO_PKG_VERSION"),
        config: &report.config,
        seed: cli.seed,
        threads: used,
        wall_time_s: start.elapsed().as_secs_f64(),
        outputs: report.outputs.iter().map(|p| p.display().to_string()).collect(),
        assertions: &report.assertions,
        pass: result.is_ok() && report.pass(),
        error: error.clone(),
    };
    if cli.out_dir.is_dir() {
        if let Err(e) = manifest.write(&cli.out_dir) {
            eprintln!("error: cannot write manifest: {e}");
        }
    }
    for a in &report.assertions {
        let tag = if a.pass { "PASS" } else { "FAIL" };
        println!("{tag} {}: {:.6e} (required {})", a.name, a.value, a.condition);
    }
    match result {
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
        Ok(()) if report.pass() => ExitCode::SUCCESS,
        Ok(()) => {
            let failed: Vec<&str> = report.assertions.iter().filter(|a| !a.pass).map(|a| a.name.as_str()).collect();
            eprintln!("assertion failed: {}", failed.join(", "));
            ExitCode::from(1)
        }
    }
}
