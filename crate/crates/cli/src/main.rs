use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::{error, info};
use shapga_cli::{evaluate, extract, report, select, with_workers, CliError, Overrides, RunConfig, SelectionMethod};

#[derive(Debug, Parser)]
#[command(name = "shapga", version, about = "Shapley-value feature selection pipeline")]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    method: Option<SelectionMethod>,
    /// Specificity weight in the coalition value.
    #[arg(long, global = true)]
    mu: Option<f64>,
    #[arg(long, global = true)]
    max_coalition_size: Option<usize>,
    #[arg(long, global = true)]
    samples_per_size: Option<usize>,
    #[arg(long, global = true)]
    population: Option<usize>,
    #[arg(long, global = true)]
    top_k: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Extract the 380 features of every record file in a directory.
    Extract {
        #[arg(long)]
        records: PathBuf,
        /// Output matrix file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Rank the features of a matrix and keep the top k.
    Select {
        #[arg(long)]
        matrix: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Cross-validate classifiers on a feature selection.
    Evaluate {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        selection: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Count selected features by signal source.
    Report {
        /// Output table.
        #[arg(long)]
        out: PathBuf,
        #[arg(required = true)]
        selections: Vec<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cfg.apply(&Overrides {
        method: cli.method,
        mu: cli.mu,
        max_coalition_size: cli.max_coalition_size,
        samples_per_size: cli.samples_per_size,
        population_size: cli.population,
        top_k: cli.top_k,
        seed: cli.seed,
        workers: cli.workers,
    });
    cfg.validate()?;

    with_workers(cfg.workers, || match &cli.command {
        Command::Extract { records, out } => {
            let s = extract::cmd_extract(records, out)?;
            println!("extracted {} records ({} skipped) into {}", s.rows, s.skipped.len(), out.display());
            Ok(())
        }
        Command::Select { matrix, out } => {
            let s = select::cmd_select(matrix, out, &cfg)?;
            if let Some(budget) = s.budget {
                println!("nu evaluations: {} (budget {budget})", s.evaluations);
            } else if cfg.method.is_shapley() {
                println!("nu evaluations: {}", s.evaluations);
            }
            println!("selected {} features with {} into {}", s.selected.len(), cfg.method.name(), out.display());
            Ok(())
        }
        Command::Evaluate { matrix, selection, out } => {
            let e = evaluate::cmd_evaluate(matrix, selection, out, &cfg)?;
            for s in &e.summaries {
                info!("{}: accuracy {:.4}, auc {:.4}", s.classifier, s.accuracy, s.auc);
            }
            println!("wrote {} fold results into {}", e.folds.len(), out.display());
            Ok(())
        }
        Command::Report { out, selections } => {
            let rows = report::cmd_report(selections, out)?;
            println!("wrote {} report rows into {}", rows.len(), out.display());
            Ok(())
        }
    })?
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
