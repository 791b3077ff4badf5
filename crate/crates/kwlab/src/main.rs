use clap::{Args, Parser, Subcommand};
use kwlab::experiment::{exit_code, list_experiments, run_experiment, ExperimentConfig, PartialConfig};
use kwlab::LabError;
use std::path::PathBuf;
use std::process::ExitCode;

/// Ladder-sum experiments on flat tori and round spheres.
#[derive(Parser)]
#[command(name = "kwlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List registered experiments in stable order.
    List {
        /// Print the registry as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Run one experiment.
    Run(Box<RunArgs>),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    experiment: Option<String>,
    /// TOML config; command-line flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = ["torus2", "torus3", "sphere2", "sphere3", "all"])]
    model: Option<String>,
    /// Slope, e.g. `3/5` or `sqrt(1/2)`.
    #[arg(long)]
    c: Option<String>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long = "lambda-max")]
    lambda_max: Option<f64>,
    /// `sharp`, `bump:<a>`, `comb:<a>,<spacing>,<teeth>` or `mollified:<T>,<eps>`.
    #[arg(long)]
    window: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads, 0 for all cores.
    #[arg(long)]
    jobs: Option<usize>,
    /// Single-threaded, sequential reductions.
    #[arg(long)]
    deterministic: bool,
    /// Exit with status 1 if any verdict fails.
    #[arg(long)]
    strict: bool,
}

impl RunArgs {
    fn partial(&self) -> Result<PartialConfig, LabError> {
        let file = match &self.config {
            Some(path) => PartialConfig::load(path)?,
            None => PartialConfig::default(),
        };
        let flags = PartialConfig {
            experiment: self.experiment.clone(),
            model: self.model.clone(),
            c: self.c.clone(),
            epsilon: self.epsilon,
            lambda_max: self.lambda_max,
            window: self.window.clone(),
            out: self.out.clone(),
            seed: self.seed,
            jobs: self.jobs,
            deterministic: self.deterministic.then_some(true),
            ..PartialConfig::default()
        };
        Ok(file.overlay(flags))
    }
}

fn run(args: &RunArgs) -> Result<bool, LabError> {
    let cfg = ExperimentConfig::resolve(args.partial()?)?;
    let result = run_experiment(&cfg)?;
    for v in &result.verdicts {
        println!(
            "{} {} | measured {:.6e} predicted {:.6e} tol {:.3e}",
            if v.pass { "PASS" } else { "FAIL" },
            v.claim,
            v.measured,
            v.predicted,
            v.tolerance
        );
    }
    println!(
        "{}: {} passed, {} failed, {:.2}s, outputs in {}",
        result.experiment,
        result.passed(),
        result.failed(),
        result.wall_clock_seconds,
        result.out_dir.display()
    );
    Ok(result.failed() == 0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::List { json } => {
            if json {
                match serde_json::to_string_pretty(list_experiments()) {
                    Ok(s) => println!("{s}"),
                    Err(e) => {
                        eprintln!("error: {e}");
                        return ExitCode::from(3);
                    }
                }
            } else {
                for e in list_experiments() {
                    println!("{:<24} {:>5}s  {}  [{}]", e.name, e.budget_seconds, e.description, e.anchor);
                }
            }
            ExitCode::SUCCESS
        }
        Command::Run(args) => match run(&args) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) if args.strict => ExitCode::from(1),
            Ok(false) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(exit_code(&e) as u8)
            }
        },
    }
}
