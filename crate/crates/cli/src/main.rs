use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mimo_dmt::MuxGainDef;
use mimo_dmt_cli::config::{Format, ScenarioArgs};
use mimo_dmt_cli::error::{CliError, CliResult};
use mimo_dmt_cli::output;
use mimo_dmt_cli::reproduce::{reproduce, Overrides, Target};
use mimo_dmt_cli::scenario::{format_threshold_table, run_scenario, threshold_rows};

#[derive(Debug, Parser)]
#[command(
    name = "mimo-dmt",
    version,
    about = "Finite-SNR outage and diversity-multiplexing sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a sweep described by a config file and/or flags.
    Sweep(Box<ScenarioArgs>),
    /// Regenerate one of the standard figures or threshold tables.
    Reproduce(ReproduceArgs),
    /// Print the SNR beyond which the closed-form d' is within 10% of (n-r)^2.
    Thresholds(ThresholdArgs),
}

#[derive(Debug, Args)]
struct ReproduceArgs {
    #[arg(value_enum)]
    target: Target,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory (default: $MIMO_DMT_OUT_DIR or the current directory).
    #[arg(long)]
    out_dir: Option<std::path::PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Args)]
struct ThresholdArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    r: f64,
    #[arg(long = "definition", value_delimiter = ',')]
    definitions: Option<Vec<MuxGainDef>>,
    /// Emit JSON instead of a table.
    #[arg(long)]
    json: bool,
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Sweep(args) => {
            let cfg = args.resolve()?;
            let out = run_scenario(&cfg)?;
            for note in &out.notes {
                eprintln!("note: {note}");
            }
            if let Some(rows) = &out.thresholds {
                eprint!("{}", format_threshold_table(cfg.channel.n(), cfg.r, rows));
            }
            for p in output::emit(&cfg, &out.records, &out.notes)? {
                eprintln!("wrote {}", p.display());
            }
        }
        Command::Reproduce(a) => {
            let ov = Overrides {
                trials: a.trials,
                seed: a.seed,
                workers: a.workers,
                out_dir: a.out_dir,
                format: a.format,
            };
            let report = reproduce(a.target, &ov)?;
            print!("{}", report.summary);
            for p in &report.files {
                eprintln!("wrote {}", p.display());
            }
        }
        Command::Thresholds(a) => {
            let defs = a.definitions.unwrap_or_else(|| MuxGainDef::ALL.to_vec());
            let rows = threshold_rows(a.n, a.r, &defs)?;
            if a.json {
                let v: Vec<_> = rows
                    .iter()
                    .map(|row| {
                        serde_json::json!({
                            "definition": row.definition.name(),
                            "gamma": row.linear,
                            "gamma_db": row.db,
                            "reported_db": row.reported_db,
                        })
                    })
                    .collect();
                println!(
                    "{}",
                    serde_json::to_string_pretty(&v).map_err(|e| CliError::Usage(e.to_string()))?
                );
            } else {
                print!("{}", format_threshold_table(a.n, a.r, &rows));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
