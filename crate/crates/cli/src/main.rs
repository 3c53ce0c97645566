//! `relmodes` command-line runner.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use relmodes::lab::{self, Scenario, ScenarioError};

#[derive(Parser)]
#[command(
    name = "relmodes",
    version,
    about = "Relative equilibria and periodic orbits of symmetric Hamiltonian systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Orthogonal velocity and slice Hessian test at the scenario point.
    CheckRe {
        file: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Zero level, stratified link and category bound.
    Reduce {
        file: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Relative periodic orbit counts per energy level.
    Census {
        file: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// List the built-in scenarios.
    ListExamples,
    /// Run a built-in scenario with its own experiment.
    RunExample {
        name: String,
        /// Print the scenario text instead of running it.
        #[arg(long)]
        show: bool,
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override a tolerance, e.g. `--tol shooting=1e-11`; repeatable.
    #[arg(long = "tol", value_name = "NAME=VALUE", value_parser = parse_tol)]
    tol: Vec<(String, f64)>,
    /// Directory for the report files.
    #[arg(long, env = "RELMODES_OUT", default_value = "reports")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

fn parse_tol(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or("expected NAME=VALUE")?;
    let v: f64 = v.trim().parse().map_err(|_| format!("cannot read '{v}' as a number"))?;
    Ok((k.trim().to_string(), v))
}

fn report_errors(source: &str, errors: &[ScenarioError]) {
    for e in errors {
        eprintln!("{source}: {e}");
    }
}

fn load(path: &Path) -> anyhow::Result<Result<Scenario, Vec<ScenarioError>>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(lab::parse_scenario(&text))
}

fn execute(mut scenario: Scenario, args: &RunArgs) -> anyhow::Result<i32> {
    lab::apply_overrides(
        &mut scenario,
        &lab::RunOptions {
            seed: args.seed,
            tolerances: args.tol.clone(),
        },
    )?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = args.jobs {
        pool = pool.num_threads(j.max(1));
    }
    let pool = pool.build().map_err(|e| anyhow!("thread pool: {e}"))?;
    let bundle = pool.install(|| lab::run(&scenario));
    print!("{}", bundle.to_text());
    let (json, text) = bundle
        .write(&args.out)
        .with_context(|| format!("writing reports to {}", args.out.display()))?;
    eprintln!("wrote {} and {}", json.display(), text.display());
    Ok(bundle.exit_code)
}

fn main_inner() -> anyhow::Result<i32> {
    let cli = Cli::parse();
    match cli.command {
        Command::CheckRe { file, run } => file_command(&file, "check-re", &run),
        Command::Reduce { file, run } => file_command(&file, "reduce", &run),
        Command::Census { file, run } => file_command(&file, "census", &run),
        Command::ListExamples => {
            let width = lab::BUILTINS.iter().map(|b| b.name.len()).max().unwrap_or(0);
            for b in lab::BUILTINS {
                println!("{:<width$}  {}", b.name, b.summary);
            }
            Ok(0)
        }
        Command::RunExample { name, show, run } => {
            let b = lab::builtin(&name)
                .ok_or_else(|| anyhow!("no built-in scenario named '{name}' (see list-examples)"))?;
            if show {
                print!("{}", b.text());
                return Ok(0);
            }
            match b.scenario() {
                Ok(s) => execute(s, &run),
                Err(errs) => {
                    report_errors(&name, &errs);
                    Ok(lab::EXIT_INFRASTRUCTURE)
                }
            }
        }
    }
}

fn file_command(file: &Path, kind: &str, run: &RunArgs) -> anyhow::Result<i32> {
    let source = file.display().to_string();
    let mut scenario = match load(file)? {
        Ok(s) => s,
        Err(errs) => {
            report_errors(&source, &errs);
            return Ok(lab::EXIT_INFRASTRUCTURE);
        }
    };
    if let Err(errs) = scenario.select_experiment(kind) {
        report_errors(&source, &errs);
        return Ok(lab::EXIT_INFRASTRUCTURE);
    }
    execute(scenario, run)
}

fn main() -> ExitCode {
    match main_inner() {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(lab::EXIT_INFRASTRUCTURE as u8)
        }
    }
}
