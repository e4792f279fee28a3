use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use qkd_cli::audit::{audit_cases, run_audits};
use qkd_cli::output::{create, write_csv, write_jsonl};
use qkd_cli::runner::{pool, run_trials, summarize};
use qkd_cli::selftest::run_selftest;
use qkd_cli::sweep::run_sweep;
use qkd_cli::{audit, selftest, CliError, CliResult, ScenarioConfig};

/// Finite-key QKD and secure-message-transmission simulator.
#[derive(Debug, Parser)]
#[command(name = "qkd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Scenario file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; without it results go to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the number of trials.
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Worker threads, 0 for one per core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the scenario's trials; writes summary.csv and transcript.jsonl.
    Run,
    /// Sweep one parameter over the [sweep] grid; writes sweep.csv.
    Sweep,
    /// Exact audits of tiny instances; the bundled set without --config.
    Audit,
    /// Built-in property checks.
    Selftest,
}

impl Cli {
    fn load(&self) -> CliResult<ScenarioConfig> {
        let path = self.config.as_ref().ok_or_else(|| CliError::Usage("--config is required".into()))?;
        let mut config = ScenarioConfig::load(path)?;
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(trials) = self.trials {
            config.trials = trials;
        }
        config.validate()?;
        Ok(config)
    }
}

fn emit<T: serde::Serialize>(out: Option<&Path>, file: &str, kind: &str, rows: &[T]) -> CliResult<()> {
    match out {
        Some(dir) => write_csv(create(dir, file)?, kind, rows),
        None => write_csv(std::io::stdout().lock(), kind, rows),
    }
}

fn execute(cli: &Cli) -> CliResult<()> {
    let workers = pool(cli.threads)?;
    let out = cli.out.as_deref();
    match cli.command {
        Command::Run => {
            let config = cli.load()?;
            let start = Instant::now();
            let rows = run_trials(&config, &workers)?;
            let wall_ms = if config.timing { start.elapsed().as_millis() as u64 } else { 0 };
            let summary = summarize(&config, &rows, wall_ms)?;
            emit(out, "summary.csv", "summary", &[summary])?;
            if let Some(dir) = out {
                write_jsonl(create(dir, "transcript.jsonl")?, &rows)?;
            }
        }
        Command::Sweep => {
            let config = cli.load()?;
            emit(out, "sweep.csv", "sweep", &run_sweep(&config, &workers)?)?;
        }
        Command::Audit => {
            let config = cli.config.is_some().then(|| cli.load()).transpose()?;
            let rows = run_audits(&audit_cases(config.as_ref()), &workers)?;
            print!("{}", audit::render(&rows));
            if let Some(dir) = out {
                write_csv(create(dir, "audit.csv")?, "audit", &rows)?;
            }
            let unexpected: Vec<&str> = rows.iter().filter(|r| !r.as_expected()).map(|r| r.name.as_str()).collect();
            if !unexpected.is_empty() {
                return Err(CliError::Property(format!("unexpected audit verdict: {}", unexpected.join(", "))));
            }
        }
        Command::Selftest => {
            let checks = run_selftest(cli.seed.unwrap_or(0))?;
            print!("{}", selftest::render(&checks));
            let failed: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.name).collect();
            if !failed.is_empty() {
                return Err(CliError::Property(format!("failed checks: {}", failed.join(", "))));
            }
        }
    }
    std::io::stdout().flush()?;
    Ok(())
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
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
