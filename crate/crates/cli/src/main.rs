use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use palsy_cli::commands::{cmd_eval_lopo, cmd_preprocess, cmd_report, cmd_train};
use palsy_cli::config::{Overrides, Resolved};
use palsy_cli::{CliError, Result};
use palsy_core::evaluation::format_2dp;

#[derive(Debug, Parser)]
#[command(name = "palsy", version, about = "Facial palsy detection: preprocessing, training and LOPO evaluation")]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory; overrides `out` in the config.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads; overrides `workers` in the config.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Base seed; overrides `seed_base` in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute and cache every modality for every manifest frame.
    Preprocess,
    /// Train one selection on all non-holdout patients.
    Train {
        #[arg(long)]
        modality: Option<String>,
    },
    /// Leave-one-patient-out evaluation of one selection.
    EvalLopo {
        #[arg(long)]
        modality: Option<String>,
    },
    /// Merge report.csv files into one table.
    Report {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
}

fn resolve(cli: &Cli, modality: Option<String>) -> Result<Resolved> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Usage("this command needs --config <PATH>".into()))?;
    let ov = Overrides {
        out: cli.out.clone(),
        workers: cli.workers,
        seed: cli.seed,
        modality,
    };
    Resolved::from_file(path, &ov)
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Preprocess => {
            let r = resolve(&cli, None)?;
            let s = cmd_preprocess(&r)?;
            println!("{} frames: {} written, {} up to date", s.frames, s.written, s.skipped);
        }
        Command::Train { modality } => {
            let r = resolve(&cli, modality.clone())?;
            println!("{}", cmd_train(&r)?.display());
        }
        Command::EvalLopo { modality } => {
            let r = resolve(&cli, modality.clone())?;
            let (report, folds) = cmd_eval_lopo(&r)?;
            println!("{}\n{}", report.display(), folds.display());
        }
        Command::Report { paths } => {
            let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("out"));
            let (path, merged) = cmd_report(paths, &out)?;
            for row in &merged.rows {
                println!(
                    "{} | {} | F1 {} | P {} | R {}",
                    row.modality,
                    row.model,
                    format_2dp(row.avg_f1),
                    format_2dp(row.avg_precision),
                    format_2dp(row.avg_recall)
                );
            }
            println!("{}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.kind().to_string();
            let detail = e.to_string();
            let first = detail
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or(&msg)
                .trim_start_matches("error: ");
            eprintln!("error[usage]: {first}");
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {}", e.category(), e.one_line());
            ExitCode::from(if e.category() == "usage" { 2 } else { 1 })
        }
    }
}
