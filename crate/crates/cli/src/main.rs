use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use homlab::runner::write_error_log;
use homlab::{parse_spec, run, ExperimentSpec, RunOptions};

/// Numerical laboratory for elliptic homogenization.
#[derive(Parser)]
#[command(name = "homlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Homogenized matrix or p-energy from cell problems
    Cell(RunArgs),
    /// Window estimates on growing cubes
    Rve(RunArgs),
    /// Compare two densities: statistic, homogenized outputs, conclusion
    Stability(RunArgs),
    /// Penalization, lambda problem and perturbation studies for perforated domains
    Perforation(RunArgs),
    /// Seed-paired Monte-Carlo comparison of random families
    Stochastic(RunArgs),
    /// The four canonical counterexample pairs
    Counterexamples(RunArgs),
    /// Parse and validate a spec without running it
    Validate {
        #[arg(long)]
        spec: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Spec document (JSON)
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the spec seed
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    no_plots: bool,
}

const EXIT_SOUNDNESS: u8 = 1;
const EXIT_SPEC: u8 = 2;
const EXIT_RUN: u8 = 3;

fn load(path: &PathBuf) -> Result<ExperimentSpec, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("reading {}: {e}", path.display()))?;
    parse_spec(&text).map_err(|e| format!("{} is invalid:\n{e}", path.display()))
}

fn run_command(kind: &str, args: RunArgs) -> ExitCode {
    let spec = match &args.spec {
        Some(p) => load(p),
        None if kind == "counterexamples" => parse_spec(r#"{"kind": "counterexamples"}"#).map_err(|e| e.to_string()),
        None => Err(format!("{kind} needs --spec")),
    };
    let mut spec = match spec {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(EXIT_SPEC);
        }
    };
    if spec.experiment.kind() != kind {
        eprintln!("spec kind is '{}' but the subcommand is '{kind}'", spec.experiment.kind());
        return ExitCode::from(EXIT_SPEC);
    }
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("cannot configure {n} threads: {e}");
            return ExitCode::from(EXIT_SPEC);
        }
    }
    let options = RunOptions {
        out_dir: args.out.clone(),
        plots: !args.no_plots,
    };
    match run(&spec, &options) {
        Ok(outcome) => {
            for line in &outcome.summary {
                println!("{line}");
            }
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            if outcome.soundness_violation {
                eprintln!("soundness guard fired: a vanishing statistic came with differing limits");
                ExitCode::from(EXIT_SOUNDNESS)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("{} failed: {e}", spec.name);
            match write_error_log(&spec, &args.out, &e) {
                Ok(p) => eprintln!("details in {}", p.display()),
                Err(le) => eprintln!("could not write the error log: {le}"),
            }
            ExitCode::from(EXIT_RUN)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::Cell(a) => ("cell", a),
        Command::Rve(a) => ("rve", a),
        Command::Stability(a) => ("stability", a),
        Command::Perforation(a) => ("perforation", a),
        Command::Stochastic(a) => ("stochastic", a),
        Command::Counterexamples(a) => ("counterexamples", a),
        Command::Validate { spec } => {
            return match load(&spec) {
                Ok(s) => {
                    println!("{}: valid {} spec", spec.display(), s.experiment.kind());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("{e}");
                    ExitCode::from(EXIT_SPEC)
                }
            };
        }
    };
    run_command(kind, args)
}
