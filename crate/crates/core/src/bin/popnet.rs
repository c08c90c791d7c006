use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use popnet::config::{self, ScenarioConfig, PAPER_SCALE_PARTICLES};
use popnet::engine::{self, EngineError};
use popnet::oracles::{self, OracleError, Suite};
use popnet::output;

const EXIT_ORACLE_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(name = "popnet", version, about = "Opinion and popularity particle simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write an output bundle.
    Run(RunArgs),
    /// Run the validation oracles.
    Validate(ValidateArgs),
    /// List built-in scenario presets.
    Presets,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario TOML file or preset name.
    #[arg(long)]
    scenario: String,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    particles: Option<usize>,
    /// Use the large particle count of the reference figures.
    #[arg(long, conflicts_with = "particles")]
    paper_scale: bool,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads; defaults to POPNET_THREADS, then to all cores.
    #[arg(long, env = "POPNET_THREADS")]
    threads: Option<usize>,
}

#[derive(Args)]
struct ValidateArgs {
    /// steady-state, minimizers, scaling or all.
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Directory for the CSV report.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn fail(code: u8, message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(code)
}

fn load_scenario(spec: &str) -> Result<ScenarioConfig, (u8, String)> {
    if config::PRESETS.contains(&spec) {
        return config::preset(spec).map_err(|e| (EXIT_CONFIG, e.to_string()));
    }
    let path = Path::new(spec);
    let text = std::fs::read_to_string(path).map_err(|e| {
        (
            EXIT_CONFIG,
            format!("cannot read scenario `{spec}` ({e}); presets are: {}", config::PRESETS.join(", ")),
        )
    })?;
    config::parse_scenario(&text).map_err(|e| (EXIT_CONFIG, format!("{spec}: {e}")))
}

fn cmd_run(args: RunArgs) -> ExitCode {
    let mut cfg = match load_scenario(&args.scenario) {
        Ok(c) => c,
        Err((code, msg)) => return fail(code, msg),
    };
    if let Some(seed) = args.seed {
        cfg.sim.seed = seed;
    }
    if let Some(n) = args.particles {
        cfg.sim.n_particles = n;
    }
    if args.paper_scale {
        cfg.sim.n_particles = PAPER_SCALE_PARTICLES;
    }
    if let Err(e) = cfg.validate() {
        return fail(EXIT_CONFIG, e);
    }
    let threads = args
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let started = Instant::now();
    let result = match engine::run_with_threads(&cfg, threads) {
        Ok(r) => r,
        Err(EngineError::ThreadPool(e)) => return fail(EXIT_IO, e),
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    let wall = started.elapsed().as_secs_f64();
    match output::write_bundle(&args.out, &cfg, &result, threads, wall) {
        Ok(m) => {
            println!(
                "{}: {} steps, {} particles, {:.1}s -> {}",
                m.scenario,
                m.steps,
                m.n_particles,
                wall,
                args.out.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => fail(EXIT_IO, e),
    }
}

fn cmd_validate(args: ValidateArgs) -> ExitCode {
    let suite: Suite = match args.suite.parse() {
        Ok(s) => s,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    let checks = match oracles::run_suite(suite, args.seed) {
        Ok(c) => c,
        Err(e @ (OracleError::Io { .. } | OracleError::Csv { .. })) => return fail(EXIT_IO, e),
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    for c in &checks {
        println!("{c}");
    }
    if let Some(dir) = args.out {
        if let Err(e) = std::fs::create_dir_all(&dir) {
            return fail(EXIT_IO, format!("{}: {e}", dir.display()));
        }
        if let Err(e) = oracles::write_checks_csv(&dir.join("validation.csv"), &checks) {
            return fail(EXIT_IO, e);
        }
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    println!("{} checks, {} failed", checks.len(), failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_ORACLE_FAILURE)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Validate(args) => cmd_validate(args),
        Command::Presets => {
            for name in config::PRESETS {
                println!("{name}");
            }
            ExitCode::SUCCESS
        }
    }
}
