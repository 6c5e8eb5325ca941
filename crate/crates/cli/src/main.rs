use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use mkf_core::io::DropAxis;
use mkf_core::run::{self, Format, Run, RunConfig, RunError, Suite};

const EXIT_CODES: &str = "\
Exit codes:
  0   success
  1   verification ran and at least one check failed
  2   command-line usage error
  3   invalid configuration
  4   file read/write or parse failure
  5   construction failed (message names the module)
  6   missing artifact in the run directory
  7   unknown verification suite
  8   unknown export format
  9   analysis failed (message names the module)
  10  unknown --project coordinate

Every flag can also be set through an MKF_-prefixed environment variable
(MKF_CONFIG, MKF_OUT, MKF_SEED, MKF_SUITE, MKF_FORMAT, MKF_PROJECT, MKF_VERBOSE).";

#[derive(Parser)]
#[command(name = "mkf", version, about = "Build and verify hornified knots, microknots and their tangent cones", after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Progress messages on stderr.
    #[arg(long, global = true, env = "MKF_VERBOSE")]
    verbose: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build every construction a config admits into a run directory.
    #[command(after_help = EXIT_CODES)]
    Build {
        /// JSON config (schema 1); defaults describe the trefoil with beta = 2.
        #[arg(long, env = "MKF_CONFIG")]
        config: Option<PathBuf>,
        /// Run directory; overrides the config's `out`, defaults to `run`.
        #[arg(long, env = "MKF_OUT")]
        out: Option<PathBuf>,
        /// Projection seed; overrides the config's `seed`.
        #[arg(long, env = "MKF_SEED")]
        seed: Option<u64>,
    },
    /// Run verification suites on a built run directory.
    #[command(after_help = EXIT_CODES)]
    Verify {
        #[arg(long, env = "MKF_OUT", default_value = "run")]
        out: PathBuf,
        /// lne, tord, cone, knot or all.
        #[arg(long, env = "MKF_SUITE", default_value = "all")]
        suite: String,
    },
    /// Convert stored artifacts into export/<format>/.
    #[command(after_help = EXIT_CODES)]
    Export {
        #[arg(long, env = "MKF_OUT", default_value = "run")]
        out: PathBuf,
        /// csv, ply, obj or pd.
        #[arg(long, env = "MKF_FORMAT", default_value = "csv")]
        format: String,
        /// Coordinate dropped for 3-D meshes: x0, x1, x2 or x3.
        #[arg(long, env = "MKF_PROJECT", default_value = "x0")]
        project: String,
    },
}

enum Failure {
    Run(RunError),
    Checks,
    Project(String),
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        Failure::Run(e)
    }
}

fn log(verbose: bool, start: Instant, msg: &str) {
    if verbose {
        eprintln!("[{:>7.2}s] {msg}", start.elapsed().as_secs_f64());
    }
}

fn build(config: Option<&Path>, out: Option<PathBuf>, seed: Option<u64>, verbose: bool) -> Result<(), Failure> {
    let start = Instant::now();
    let mut cfg = match config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let out = out.or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("run"));
    cfg.validate()?;
    log(verbose, start, &format!("building {} (beta {}) into {}", cfg.knot, cfg.beta, out.display()));
    let m = run::build(&cfg, &out)?;
    log(verbose, start, "done");
    println!("run directory: {}", out.display());
    println!("knot: {} ({} samples), ladder: {} scales", m.knot.name, m.knot.samples, m.ladder.len());
    if let Some(w) = &m.window {
        println!(
            "simple window: columns {}..={}, theta1 = {:.6}, theta2 = {:.6}, distortion {:.3}",
            w.simple_window.0, w.simple_window.1, w.theta1, w.theta2, w.distortion
        );
    }
    for (role, s) in &m.surfaces {
        println!("surface {role}: {} x {} -> {}", s.rows, s.cols, s.file);
    }
    for note in &m.skipped {
        println!("skipped {note}");
    }
    Ok(())
}

fn verify(out: &Path, suite: &str, verbose: bool) -> Result<(), Failure> {
    let start = Instant::now();
    let suite: Suite = suite.parse()?;
    let run = Run::open(out)?;
    log(verbose, start, &format!("suite {suite} on {}", out.display()));
    let r = run::verify(&run, suite)?;
    print!("{}", r.summary());
    log(verbose, start, "done");
    if r.pass {
        Ok(())
    } else {
        Err(Failure::Checks)
    }
}

fn export(out: &Path, format: &str, project: &str, verbose: bool) -> Result<(), Failure> {
    let start = Instant::now();
    let format: Format = format.parse()?;
    let drop: DropAxis = project.parse().map_err(|_| Failure::Project(project.to_string()))?;
    let run = Run::open(out)?;
    for p in run::export(&run, format, drop)? {
        println!("{}", p.display());
    }
    log(verbose, start, "done");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match &cli.cmd {
        Cmd::Build { config, out, seed } => build(config.as_deref(), out.clone(), *seed, cli.verbose),
        Cmd::Verify { out, suite } => verify(out, suite, cli.verbose),
        Cmd::Export { out, format, project } => export(out, format, project, cli.verbose),
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks) => {
            eprintln!("error: verification failed");
            ExitCode::from(1)
        }
        Err(Failure::Project(p)) => {
            eprintln!("error: unknown coordinate {p:?}; expected x0, x1, x2 or x3");
            ExitCode::from(10)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
