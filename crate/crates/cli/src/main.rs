//! Command-line entry point; see lib.rs for the command implementations.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use softsynth::dataset::family_dir_name;
use softsynth::results::report_text;
use softsynth_cli::commands::{run_extract, run_gen_data, run_report, run_train, verdict_word};
use softsynth_cli::manifest::ExperimentManifest;

#[derive(Parser)]
#[command(
    name = "softsynth",
    version,
    about = "Learns combinational circuits from input-output examples and extracts verified netlists"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write one dataset family (16 task files) under the output directory.
    GenData {
        /// Base operand width.
        #[arg(long, default_value_t = 2)]
        w: usize,
        /// Kept percentage of the full truth table: 100, 95, or 90.
        #[arg(long, default_value_t = 100)]
        completeness: u8,
        /// Dropout seed used below completeness 100.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory the family directory is created in.
        #[arg(long, default_value = "data")]
        out: PathBuf,
    },
    /// Train the manifest's config grid over its tasks, resumably.
    Train {
        /// Experiment manifest (TOML).
        manifest: PathBuf,
        /// Parallel training workers.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Override the manifest's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run only the first N default-grid configs (grid manifests only).
        #[arg(long)]
        grid: Option<usize>,
        /// Override the grid's base seed (grid manifests only).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Harden one trained run into a netlist and verify it.
    Extract {
        /// Run artifact written by train (<task>.<config>.run.json).
        dump: PathBuf,
        /// Wire presence threshold in (0.5, 1); defaults to the trained tau.
        #[arg(long)]
        tau: Option<f64>,
        /// Resolve below-threshold choices by argmax, with a warning instead
        /// of an error.
        #[arg(long)]
        argmax_fallback: bool,
        /// Output directory; defaults to the dump's directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize results.csv into dataset-by-unit tables.
    Report {
        /// Directory holding results.csv.
        results: PathBuf,
        /// Append the per-task best-metric breakdown.
        #[arg(long)]
        per_task: bool,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::GenData { w, completeness, seed, out } => {
            let counts = run_gen_data(w, completeness, seed, &out)?;
            println!("wrote {} under {}", family_dir_name(w, completeness), out.display());
            for (task, n) in counts {
                println!("  {task}: {n} examples");
            }
        }
        Command::Train { manifest, jobs, out, grid, seed } => {
            let mut m = ExperimentManifest::load(&manifest)?;
            if let Some(dir) = out {
                m.out = dir;
            }
            if grid.is_some() || seed.is_some() {
                match &mut m.grid {
                    Some(g) => {
                        if let Some(n) = grid {
                            g.configs = n;
                        }
                        if let Some(s) = seed {
                            g.base_seed = s;
                        }
                    }
                    None => anyhow::bail!("--grid and --seed apply only to grid manifests"),
                }
                m.validate()?;
            }
            let summary = run_train(&m, jobs)?;
            for task in &summary.skipped {
                println!("skipping {task}: completion marker present");
            }
            println!("{} runs trained, {} tasks skipped", summary.trained, summary.skipped.len());
            println!("results table: {}", summary.results_path.display());
            print!("{}", report_text(&summary.rows));
        }
        Command::Extract { dump, tau, argmax_fallback, out } => {
            let outcome = run_extract(&dump, tau, argmax_fallback, out.as_deref())?;
            for warning in &outcome.warnings {
                eprintln!("warning: {warning}");
            }
            println!(
                "task {} config {} tau {}: {} units, {} wires",
                outcome.task, outcome.config_id, outcome.tau, outcome.units, outcome.wires
            );
            println!("matches rounded soft network: {}", outcome.agrees_with_soft);
            println!(
                "signal accuracy {:.4}, example accuracy {:.4}",
                outcome.report.signal_accuracy, outcome.report.example_accuracy
            );
            println!("verdict: {}", verdict_word(&outcome.report));
            println!("netlist: {}", outcome.netlist_path.display());
            println!("dot:     {}", outcome.dot_path.display());
            println!("report:  {}", outcome.report_path.display());
        }
        Command::Report { results, per_task } => {
            let rendered = run_report(&results, per_task)?;
            print!("{}", rendered.text);
            println!(
                "written: {} and {}",
                rendered.text_path.display(),
                rendered.csv_path.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
