use std::io::Write;
use std::panic;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use phi_debruijn::identities::{named_suite, Tolerance, SUITE_NAMES};
use phi_debruijn::numerics::QuadratureSpec;
use phi_debruijn::report::{
    compute_measure, load_config, parse_measure, render, run, Format, RunConfig, SuiteRef,
    DEFAULT_THETA_GRID,
};
use phi_debruijn::{Error, Result};

/// Numerical verification of generalized de Bruijn identities.
#[derive(Parser)]
#[command(name = "phi-debruijn", version)]
struct Cli {
    /// List the built-in suites and exit.
    #[arg(long)]
    list: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Run suites and write a report.
    Verify(VerifyArgs),
    /// List the built-in suites with their check counts.
    List,
    /// Evaluate one measure from a JSON request (file path or `-` for stdin).
    Measure { request: String },
}

#[derive(Args)]
struct VerifyArgs {
    /// Built-in suite to run (repeatable).
    #[arg(long = "suite", value_name = "NAME")]
    suites: Vec<String>,
    /// JSON run configuration.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Report destination; stdout when omitted.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, value_name = "json|csv")]
    format: Option<Format>,
    /// Relative tolerance for every identity check.
    #[arg(long, value_name = "REL")]
    tol: Option<f64>,
    /// Seed for grid jitter in randomized property checks.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
}

fn list() -> Result<String> {
    let mut out = String::new();
    for name in SUITE_NAMES {
        let n = named_suite(name, &DEFAULT_THETA_GRID)?.len();
        out.push_str(&format!("{name}\t{n} checks\n"));
    }
    Ok(out)
}

fn verify(args: VerifyArgs) -> Result<i32> {
    let mut config = match &args.config {
        Some(path) => load_config(path)?,
        None => RunConfig::default(),
    };
    config
        .suites
        .extend(args.suites.into_iter().map(SuiteRef::Named));
    if let Some(rel) = args.tol {
        let abs = config
            .tolerance
            .map_or(Tolerance::FIRST_ORDER.abs, |t| t.abs);
        config.tolerance = Some(Tolerance::new(rel, abs));
    }
    if let Some(seed) = args.seed {
        config.seed = Some(seed);
    }
    if let Some(format) = args.format {
        config.output.format = format;
    }
    if let Some(out) = &args.out {
        config.output.path = Some(out.display().to_string());
    }
    if config.suites.is_empty() {
        return Err(Error::Config {
            field: "suites".into(),
            message: "no suite given (use --suite NAME, --config PATH or --list)".into(),
        });
    }
    let report = run(&config)?;
    let text = render(&report, config.output.format)?;
    match &config.output.path {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::Io(format!("{path}: {e}")))?,
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Error::Io(e.to_string()))?,
    }
    let s = &report.summary;
    eprintln!(
        "{} checks: {} passed, {} failed, {} errored",
        s.total, s.passed, s.failed, s.errored
    );
    Ok(report.exit_code())
}

fn measure(request: &str) -> Result<i32> {
    let text = if request == "-" {
        std::io::read_to_string(std::io::stdin()).map_err(|e| Error::Io(e.to_string()))?
    } else {
        std::fs::read_to_string(request).map_err(|e| Error::Io(format!("{request}: {e}")))?
    };
    let out = compute_measure(&parse_measure(&text)?, &QuadratureSpec::default())?;
    let json = serde_json::to_string_pretty(&out).map_err(|e| Error::Io(e.to_string()))?;
    println!("{json}");
    Ok(0)
}

fn dispatch(cli: Cli) -> Result<i32> {
    if cli.list {
        print!("{}", list()?);
        return Ok(0);
    }
    match cli.command {
        Some(Command::Verify(args)) => verify(args),
        Some(Command::List) => {
            print!("{}", list()?);
            Ok(0)
        }
        Some(Command::Measure { request }) => measure(&request),
        None => Err(Error::Config {
            field: "command".into(),
            message: "expected a subcommand (verify, list, measure) or --list".into(),
        }),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("PHI_DEBRUIJN_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    match panic::catch_unwind(|| dispatch(cli)) {
        Ok(Ok(code)) => ExitCode::from(code as u8),
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(_) => ExitCode::from(2),
    }
}
