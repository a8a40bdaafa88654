use std::path::PathBuf;
use std::process::ExitCode;

use brw_core::config::ConfigFile;
use brw_core::experiment::{run, ExperimentConfig, Format, Mode, Overrides};
use clap::{Parser, ValueEnum};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    VerifyTheorem,
    OracleCheck,
    BoundCurve,
    Simulate,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::VerifyTheorem => Mode::VerifyTheorem,
            ModeArg::OracleCheck => Mode::OracleCheck,
            ModeArg::BoundCurve => Mode::BoundCurve,
            ModeArg::Simulate => Mode::Simulate,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

/// Simulate branching random walks and check quantile deviation bounds.
///
/// Exit status: 0 success, 1 usage or config error, 2 bound violation or
/// failed identity, 3 population cap or enumeration budget exceeded.
#[derive(Debug, Parser)]
#[command(name = "brw-bench", version)]
struct Cli {
    mode: ModeArg,
    /// TOML or JSON config, or a previous JSON report to reproduce.
    #[arg(long)]
    config: PathBuf,
    /// Number of independent trees.
    #[arg(long)]
    trees: Option<u64>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format; bound-curve and simulate default to csv, others to json.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Per-generation population cap.
    #[arg(long)]
    cap: Option<u64>,
    /// Use this exponent constant instead of the Hoeffding one.
    #[arg(long)]
    c_override: Option<f64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Enumeration budget for the exact oracles.
    #[arg(long)]
    budget: Option<u64>,
    /// Comma-separated λ values.
    #[arg(long, value_delimiter = ',')]
    lambda: Option<Vec<f64>>,
    /// Comma-separated α values.
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    ExitCode::from(execute(cli) as u8)
}

fn execute(cli: Cli) -> i32 {
    let file = match ConfigFile::from_path(&cli.config) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {}: {e}", cli.config.display());
            return 1;
        }
    };
    let overrides = Overrides {
        trees: cli.trees,
        seed: cli.seed,
        cap: cli.cap,
        c_override: cli.c_override,
        lambda_grid: cli.lambda,
        alpha_grid: cli.alpha,
        budget: cli.budget,
    };
    let cfg = match ExperimentConfig::resolve(cli.mode.into(), file, &overrides, cli.workers) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let report = match run(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let format = match cli.format {
        Some(FormatArg::Csv) => Format::Csv,
        Some(FormatArg::Json) => Format::Json,
        None => report.default_format(),
    };
    let text = report.render(format);
    match &cli.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return 1;
            }
        }
        None => print!("{text}"),
    }
    report.exit_code()
}
