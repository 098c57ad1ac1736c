//! The four pipeline commands: gen-data, train, extract, report.
//!
//! Commands are plain functions over paths and manifests so tests can drive
//! them without spawning the binary. All artifacts are plain text: dataset
//! files, run JSONs, netlists, DOT graphs, CSV tables.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use softsynth::dataset::{
    dataset_file_name, drop_examples, family_dir_name, generate_task, load_dataset, save_dataset,
    TaskDataset, TaskKind, TaskSpec,
};
use softsynth::extract::{
    extract, matches_rounded_soft, netlist, to_dot, verify, ExtractOptions, VerifyReport,
};
use softsynth::network::NetworkDump;
use softsynth::results::{load_csv, report_text, save_csv, summarize, ResultRow, TaskBest};
use softsynth::trainer::{run_task, RunResult};
use softsynth::units::UnitKind;
use softsynth::SoftNetwork64;

use crate::manifest::ExperimentManifest;

/// Generates one family and writes one file per task under `EC-<w>-<ccc>/`.
/// Returns the per-task example counts.
pub fn run_gen_data(
    w: usize,
    completeness: u8,
    seed: u64,
    out: &Path,
) -> Result<Vec<(TaskKind, usize)>> {
    if !matches!(completeness, 100 | 95 | 90) {
        bail!("completeness {completeness} not one of 100, 95, 90");
    }
    let dir = out.join(family_dir_name(w, completeness));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut counts = Vec::new();
    for kind in TaskKind::ALL {
        let full = generate_task(&TaskSpec::new(kind, w)?)?;
        let ds = if completeness == 100 {
            full
        } else {
            drop_examples(&full, 100 - completeness, seed)?
        };
        save_dataset(&ds, &dir.join(dataset_file_name(kind)))?;
        counts.push((kind, ds.examples.len()));
    }
    Ok(counts)
}

/// Everything extract needs from one completed run, in one JSON file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunArtifact {
    pub task: TaskKind,
    pub w: usize,
    pub config_id: String,
    /// Extraction threshold the run was trained toward.
    pub tau: f64,
    pub row: ResultRow,
    pub result: RunResult,
    pub dump: NetworkDump,
}

pub fn artifact_file_name(task: TaskKind, config_id: &str) -> String {
    format!("{}.{config_id}.run.json", task.name())
}

fn marker_path(out: &Path, task: TaskKind) -> PathBuf {
    out.join(format!("{}.done", task.name()))
}

fn read_artifact(path: &Path) -> Result<RunArtifact> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading run artifact {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// What one train invocation did.
#[derive(Clone, Debug)]
pub struct TrainSummary {
    pub rows: Vec<ResultRow>,
    /// Runs trained in this invocation (skipped tasks excluded).
    pub trained: usize,
    /// Tasks skipped because their completion marker was present.
    pub skipped: Vec<TaskKind>,
    pub results_path: PathBuf,
}

/// Trains the manifest's grid over its tasks. One run artifact per
/// (task, config); a per-task marker file makes re-invocation skip completed
/// tasks, whose rows are then reloaded from their artifacts. `jobs` sets the
/// number of parallel training workers within each task.
pub fn run_train(manifest: &ExperimentManifest, jobs: usize) -> Result<TrainSummary> {
    manifest.validate()?;
    if jobs == 0 {
        bail!("--jobs 0 leaves no workers");
    }
    let unit = manifest.unit()?;
    let tasks = manifest.tasks()?;
    let entries = manifest.grid_entries()?;
    let family = manifest.family();
    let layers = &manifest.network.layers;

    // Load every dataset up front so a missing file fails before training.
    let mut pairs: Vec<(TaskKind, TaskDataset, TaskDataset)> = Vec::new();
    for &task in &tasks {
        let train_path = manifest.dataset.dir.join(&family).join(dataset_file_name(task));
        let train_ds = load_dataset(&train_path)
            .with_context(|| format!("training set {}", train_path.display()))?;
        let full_ds = if manifest.dataset.completeness == 100 {
            train_ds.clone()
        } else {
            let full_path =
                manifest.dataset.dir.join(manifest.full_family()).join(dataset_file_name(task));
            load_dataset(&full_path).with_context(|| {
                format!(
                    "evaluation set {} (the complete family scores induction)",
                    full_path.display()
                )
            })?
        };
        pairs.push((task, train_ds, full_ds));
    }

    let out = &manifest.out;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .context("building the worker pool")?;

    let mut rows = Vec::new();
    let mut trained = 0usize;
    let mut skipped = Vec::new();
    for (task, train_ds, full_ds) in &pairs {
        let marker = marker_path(out, *task);
        if marker.exists() {
            for entry in &entries {
                let path = out.join(artifact_file_name(*task, &entry.id));
                let artifact = read_artifact(&path).with_context(|| {
                    format!("{task} is marked done but its artifact is missing")
                })?;
                rows.push(artifact.row);
            }
            skipped.push(*task);
            continue;
        }
        let artifacts: Result<Vec<RunArtifact>> = pool.install(|| {
            entries
                .par_iter()
                .map(|entry| {
                    let outcome = run_task(&family, train_ds, full_ds, unit, layers, entry)?;
                    Ok(RunArtifact {
                        task: *task,
                        w: manifest.dataset.w,
                        config_id: entry.id.clone(),
                        tau: manifest.tau,
                        row: outcome.row,
                        result: outcome.result,
                        dump: outcome.dump,
                    })
                })
                .collect()
        });
        for artifact in artifacts? {
            let path = out.join(artifact_file_name(*task, &artifact.config_id));
            fs::write(&path, serde_json::to_string_pretty(&artifact)?)
                .with_context(|| format!("writing {}", path.display()))?;
            rows.push(artifact.row.clone());
            trained += 1;
        }
        fs::write(&marker, "").with_context(|| format!("writing {}", marker.display()))?;
    }

    let results_path = out.join("results.csv");
    save_csv(&results_path, &rows)?;
    Ok(TrainSummary { rows, trained, skipped, results_path })
}

/// One extraction's outputs and where they were written.
#[derive(Clone, Debug)]
pub struct ExtractOutcome {
    pub task: TaskKind,
    pub config_id: String,
    pub tau: f64,
    pub units: usize,
    pub wires: usize,
    pub warnings: Vec<String>,
    /// Circuit agrees with the rounded soft network on every input.
    pub agrees_with_soft: bool,
    pub report: VerifyReport,
    pub netlist_path: PathBuf,
    pub dot_path: PathBuf,
    pub report_path: PathBuf,
}

/// One word for the verification outcome.
pub fn verdict_word(report: &VerifyReport) -> &'static str {
    match report.equivalence {
        Some(true) => "equivalent",
        Some(false) => "not equivalent",
        None => "inconclusive",
    }
}

/// Reads a run artifact, hardens the network into a circuit, verifies it
/// against the freshly generated completeness-100 dataset, and writes the
/// netlist, DOT graph, and verification report next to the dump (or under
/// `out`). Ambiguity at the threshold surfaces as an error naming the port.
pub fn run_extract(
    dump_path: &Path,
    tau: Option<f64>,
    argmax_fallback: bool,
    out: Option<&Path>,
) -> Result<ExtractOutcome> {
    let artifact = read_artifact(dump_path)?;
    let net = SoftNetwork64::from_dump(&artifact.dump)
        .context("rebuilding the trained network from its dump")?;
    let tau = tau.unwrap_or(artifact.tau);
    let options = ExtractOptions { tau, argmax_fallback, ..Default::default() };
    let circuit = extract(&net, &options)?;
    let agrees_with_soft = matches_rounded_soft(&net, &circuit)?;
    let spec = TaskSpec::new(artifact.task, artifact.w)?;
    let report = verify(&circuit, &generate_task(&spec)?)?;

    let dir = match out {
        Some(d) => d.to_path_buf(),
        None => dump_path.parent().unwrap_or(Path::new(".")).to_path_buf(),
    };
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let stem = format!("{}.{}", artifact.task.name(), artifact.config_id);
    let netlist_path = dir.join(format!("{stem}.netlist"));
    let dot_path = dir.join(format!("{stem}.dot"));
    let report_path = dir.join(format!("{stem}.extract.txt"));

    let mut netlist_text = String::new();
    for warning in &circuit.warnings {
        netlist_text.push_str(&format!("# warning: {warning}\n"));
    }
    netlist_text.push_str(&netlist(&circuit));
    fs::write(&netlist_path, netlist_text)
        .with_context(|| format!("writing {}", netlist_path.display()))?;
    fs::write(&dot_path, to_dot(&circuit))
        .with_context(|| format!("writing {}", dot_path.display()))?;

    let mut report_lines = format!(
        "task {} config {} tau {tau}\nunits {} wires {}\n",
        artifact.task,
        artifact.config_id,
        circuit.units.len(),
        circuit.wires().len(),
    );
    for warning in &circuit.warnings {
        report_lines.push_str(&format!("warning: {warning}\n"));
    }
    report_lines.push_str(&format!(
        "matches rounded soft network: {agrees_with_soft}\n\
         signal accuracy {:.4}\nexample accuracy {:.4}\nverdict: {}\n",
        report.signal_accuracy,
        report.example_accuracy,
        verdict_word(&report),
    ));
    fs::write(&report_path, report_lines)
        .with_context(|| format!("writing {}", report_path.display()))?;

    Ok(ExtractOutcome {
        task: artifact.task,
        config_id: artifact.config_id,
        tau,
        units: circuit.units.len(),
        wires: circuit.wires().len(),
        warnings: circuit.warnings.clone(),
        agrees_with_soft,
        report,
        netlist_path,
        dot_path,
        report_path,
    })
}

/// A rendered report: the dataset-by-unit matrix and its CSV form, plus the
/// files they were written to.
#[derive(Clone, Debug)]
pub struct ReportOutcome {
    pub text: String,
    pub csv: String,
    pub text_path: PathBuf,
    pub csv_path: PathBuf,
}

const METRICS: [(&str, fn(&TaskBest) -> f64); 4] = [
    ("signal (full)", |b| b.signal_full),
    ("example (full)", |b| b.example_full),
    ("signal (train)", |b| b.signal_train),
    ("example (train)", |b| b.example_train),
];

/// Renders the summary matrix: one row per (dataset, metric), one column per
/// unit kind, each cell the across-task mean of per-task best values.
fn render_summary(rows: &[ResultRow], per_task: bool) -> (String, String) {
    let groups = summarize(rows);
    let units: Vec<UnitKind> = [UnitKind::Aig, UnitKind::Lut, UnitKind::Lab]
        .into_iter()
        .filter(|u| groups.iter().any(|g| g.unit == *u))
        .collect();
    let datasets: BTreeSet<&str> = groups.iter().map(|g| g.dataset.as_str()).collect();

    let mut text = format!("{:<10} {:<16}", "dataset", "metric");
    let mut csv = String::from("dataset,metric");
    for unit in &units {
        text.push_str(&format!(" {:>8}", unit.name()));
        csv.push_str(&format!(",{}", unit.name()));
    }
    text.push('\n');
    csv.push('\n');
    for dataset in &datasets {
        for (metric, value_of) in METRICS {
            text.push_str(&format!("{dataset:<10} {metric:<16}"));
            csv.push_str(&format!("{dataset},{metric}"));
            for unit in &units {
                match groups.iter().find(|g| g.dataset == *dataset && g.unit == *unit) {
                    Some(g) => {
                        text.push_str(&format!(" {:>8.4}", value_of(&g.mean)));
                        csv.push_str(&format!(",{:.4}", value_of(&g.mean)));
                    }
                    None => {
                        text.push_str(&format!(" {:>8}", "-"));
                        csv.push(',');
                    }
                }
            }
            text.push('\n');
            csv.push('\n');
        }
    }
    if per_task {
        text.push('\n');
        text.push_str(&report_text(rows));
    }
    (text, csv)
}

/// Aggregates `results.csv` in `results_dir` into the summary matrix, writes
/// summary.txt and summary.csv beside it, and returns both renderings.
pub fn run_report(results_dir: &Path, per_task: bool) -> Result<ReportOutcome> {
    let csv_path = results_dir.join("results.csv");
    if !csv_path.exists() {
        bail!("no results in {} (expected results.csv)", results_dir.display());
    }
    let rows = load_csv(&csv_path)?;
    if rows.is_empty() {
        bail!("no results in {}", results_dir.display());
    }
    let (text, csv) = render_summary(&rows, per_task);
    let text_path = results_dir.join("summary.txt");
    let csv_path_out = results_dir.join("summary.csv");
    fs::write(&text_path, &text).with_context(|| format!("writing {}", text_path.display()))?;
    fs::write(&csv_path_out, &csv)
        .with_context(|| format!("writing {}", csv_path_out.display()))?;
    Ok(ReportOutcome { text, csv, text_path, csv_path: csv_path_out })
}
