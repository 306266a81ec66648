use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use scorebench::app::{self, AppError, ExitStatus, RunOptions};
use scorebench::config::load_config;
use scorebench::ingest::format_summary;
use scorebench::runner::thread_count;

/// Simulation study of multivariate scoring rules.
#[derive(Parser)]
#[command(name = "scorebench", version)]
struct Cli {
    /// Progress and cache messages on stderr.
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.directory`.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Worker threads; falls back to SCOREBENCH_THREADS.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Build and cache the panels, print summary statistics.
    Ingest(Common),
    /// Run the grid and write the score tensor.
    Simulate(Common),
    /// Compute metrics and figure tables from a written tensor.
    Report(Common),
}

fn run(cli: Cli) -> Result<ExitStatus, AppError> {
    let (Command::Ingest(c) | Command::Simulate(c) | Command::Report(c)) = &cli.command;
    let cfg = load_config(&c.config)?;
    let opts = RunOptions { output: c.output.clone(), threads: thread_count(c.threads), verbose: cli.verbose };
    match cli.command {
        Command::Ingest(_) => {
            let m = app::ingest(&cfg, &opts)?;
            for p in &m.panels {
                println!("{}", format_summary(&format!("{} ({} rows)", p.name, p.rows), &p.summary));
            }
            Ok(ExitStatus::Ok)
        }
        Command::Simulate(_) => {
            let o = app::simulate(&cfg, &opts)?;
            println!(
                "{} cells, {} scores, {} absent model fits",
                o.manifest.cells.len(),
                o.manifest.entry_count,
                o.manifest.absent_count
            );
            for a in &o.manifest.absent {
                eprintln!("absent: {} {} {} ({:?}): {}", a.panel, a.date, a.model, a.stage, a.reason);
            }
            Ok(o.status())
        }
        Command::Report(_) => {
            let o = app::report(&cfg, &opts)?;
            let s = &o.report.summary;
            println!("{:<12} {:>12} {:>12} {:>12}", "rule", "error_rate", "heuristic", "rel_score");
            let f = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into());
            for r in &s.rules {
                println!(
                    "{:<12} {:>12} {:>12} {:>12}",
                    r.rule,
                    f(r.average_error_rate),
                    f(r.average_heuristic),
                    f(r.average_relative_score)
                );
            }
            Ok(o.status())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(s) => ExitCode::from(s as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_status() as u8)
        }
    }
}
