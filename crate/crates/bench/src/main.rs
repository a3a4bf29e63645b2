use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use glasses::test_functions::registry;
use glasses_bench::config::FileConfig;
use glasses_bench::report::{read_records, write_output, write_records};
use glasses_bench::{render_table, run_experiment, summarize, BenchError, ExperimentConfig, Method};

const EXIT_CONFIG: u8 = 2;
const EXIT_RUN: u8 = 3;

#[derive(Parser)]
#[command(name = "bench", about = "Replicated optimisation benchmarks scored by the gap measure")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one or more methods on a function and write gap records.
    Run(RunArgs),
    /// Average gap records per function and method.
    Summarize {
        #[arg(long = "in", required = true, num_args = 1..)]
        inputs: Vec<PathBuf>,
        /// Divide gaps by the per-seed maximum across methods first.
        #[arg(long)]
        normalize: bool,
    },
    ListFunctions,
    ListMethods,
}

#[derive(Args)]
struct RunArgs {
    /// TOML file with the same keys as these flags; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    function: Option<String>,
    /// Repeat or comma-separate to share initial designs across methods.
    #[arg(long, value_delimiter = ',')]
    method: Vec<String>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    init_points: Option<usize>,
    #[arg(long)]
    acq_budget: Option<usize>,
    #[arg(long)]
    inner_budget: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    /// Record wall-clock times (outputs are then not byte-reproducible).
    #[arg(long)]
    timing: bool,
    /// CSV path; histories and diagnostics are written alongside. Without
    /// it the CSV goes to standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn build_config(args: &RunArgs) -> Result<(ExperimentConfig, Option<PathBuf>), BenchError> {
    let file = match &args.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let out = args.out.clone().or(file.out.clone());
    let methods = args
        .method
        .iter()
        .map(|m| m.parse::<Method>())
        .collect::<Result<Vec<_>, _>>()?;
    let mut overrides = FileConfig::default();
    overrides.function = args.function.clone();
    overrides.replicates = args.replicates;
    overrides.budget = args.budget;
    overrides.seed = args.seed;
    overrides.init_points = args.init_points;
    overrides.acq_budget = args.acq_budget;
    overrides.inner_budget = args.inner_budget;
    overrides.workers = args.workers;
    overrides.timing = args.timing.then_some(true);
    if !methods.is_empty() {
        overrides.set_methods(methods);
    }
    Ok((ExperimentConfig::from_file_and_overrides(file, overrides)?, out))
}

fn run(args: &RunArgs) -> ExitCode {
    let (cfg, out) = match build_config(args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let output = match run_experiment(&cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(EXIT_RUN);
        }
    };
    let written = match &out {
        Some(path) => write_output(&output, path),
        None => write_records(&output.records, std::io::stdout().lock()),
    };
    if let Err(e) = written {
        eprintln!("{e}");
        return ExitCode::from(EXIT_RUN);
    }
    for d in output.diagnostics.iter().filter(|d| d.failed) {
        eprintln!("{} {} seed {}: {}", d.function, d.method, d.seed, d.message);
    }
    if output.has_failures() {
        ExitCode::from(EXIT_RUN)
    } else {
        ExitCode::SUCCESS
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => run(&args),
        Command::Summarize { inputs, normalize } => {
            let mut records = Vec::new();
            for path in &inputs {
                match read_records(path) {
                    Ok(r) => records.extend(r),
                    Err(e) => {
                        eprintln!("{e}");
                        return ExitCode::from(EXIT_CONFIG);
                    }
                }
            }
            if records.is_empty() {
                eprintln!("no gap records in the inputs");
                return ExitCode::from(EXIT_CONFIG);
            }
            print!("{}", render_table(&summarize(&records, normalize), normalize));
            ExitCode::SUCCESS
        }
        Command::ListFunctions => {
            let mut stdout = std::io::stdout().lock();
            for f in registry() {
                let dom = f.domain();
                let bounds: Vec<String> = dom
                    .lower()
                    .iter()
                    .zip(dom.upper())
                    .map(|(lo, hi)| format!("[{lo}, {hi}]"))
                    .collect();
                let _ = writeln!(
                    stdout,
                    "{}\tdim {}\tdomain {}\tminimum {}",
                    f.name(),
                    f.dim(),
                    bounds.join("×"),
                    f.optimum_value()
                );
            }
            ExitCode::SUCCESS
        }
        Command::ListMethods => {
            for m in Method::standard() {
                println!("{m}");
            }
            ExitCode::SUCCESS
        }
    }
}
