use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ovbsense_cli::{run, Command, RunOptions};

#[derive(Parser, Debug)]
#[command(
    name = "ovbsense",
    version,
    about = "Debiased ATT/ATE estimation with omitted-variable-bias sensitivity analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Cross-fitted estimate with standard error and confidence interval
    Estimate(Common),
    /// Bounds, confidence bounds and robustness values per scenario
    Sensitivity(Common),
    /// Calibrate confounding strength against observed covariate sets
    Benchmark(Common),
    /// Evaluate a bound over a (cf_y, cf_d) grid and draw its contours
    Contour(Common),
    /// Draw a synthetic dataset with known ground truth
    Simulate(Common),
    /// Monte Carlo coverage experiment on a synthetic design
    Validate(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// Analysis config (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides OVBSENSE_OUT_DIR and the config
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed; overrides the config
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
    /// Only print errors
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common) = match cli.command {
        Cmd::Estimate(c) => (Command::Estimate, c),
        Cmd::Sensitivity(c) => (Command::Sensitivity, c),
        Cmd::Benchmark(c) => (Command::Benchmark, c),
        Cmd::Contour(c) => (Command::Contour, c),
        Cmd::Simulate(c) => (Command::Simulate, c),
        Cmd::Validate(c) => (Command::Validate, c),
    };

    let level = if common.quiet { "error" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    if let Some(n) = common.threads {
        if n == 0 {
            eprintln!("error: --threads must be >= 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start thread pool: {e}");
            return ExitCode::from(2);
        }
    }

    let opts = RunOptions { config: common.config, out: common.out, seed: common.seed };
    match run(command, &opts) {
        Ok(outcome) => {
            if !common.quiet {
                print!("{}", outcome.summary);
                for f in &outcome.files {
                    println!("wrote {}", f.display());
                }
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
