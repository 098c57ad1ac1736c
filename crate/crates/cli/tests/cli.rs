//! End-to-end checks of the pipeline commands, library-level and through the
//! binary. Everything runs inside temp directories; the smallest task (2-bit
//! NOT) keeps the trained parts fast.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use softsynth::dataset::{generate_task, TaskKind, TaskSpec};
use softsynth::extract::parse_netlist;
use softsynth::trainer::derive_seed;
use softsynth_cli::commands::{run_extract, run_gen_data, run_report, run_train};
use softsynth_cli::manifest::{
    ConfigSection, DatasetSection, ExperimentManifest, GridSection, NetworkSection,
};
use tempfile::TempDir;

/// A config reproducing the default grid's c03 entry (batch 4, lr 0.5, gamma
/// 1.0, hardwired), which trains 2-bit NOT to a cleanly extractable network.
fn sharp_not_config() -> ConfigSection {
    ConfigSection {
        batch_size: Some(4),
        lr: Some(0.5),
        gamma: Some(1.0),
        seed: Some(derive_seed(0, "c03")),
        ..Default::default()
    }
}

fn not_manifest(data: &Path, out: &Path) -> ExperimentManifest {
    ExperimentManifest {
        dataset: DatasetSection {
            w: 2,
            completeness: 100,
            dropout_seed: 0,
            dir: data.to_path_buf(),
            tasks: Some(vec!["not".into()]),
        },
        network: NetworkSection { unit: "aig".into(), layers: vec![6, 6, 6] },
        grid: None,
        config: Some(sharp_not_config()),
        tau: 0.95,
        out: out.to_path_buf(),
    }
}

/// Trains the single sharp NOT run and returns its artifact path.
fn train_sharp_not(data: &Path, out: &Path) -> PathBuf {
    run_gen_data(2, 100, 0, data).unwrap();
    let summary = run_train(&not_manifest(data, out), 1).unwrap();
    assert_eq!(summary.trained, 1);
    assert_eq!(summary.rows.len(), 1);
    let dump = out.join("not.single.run.json");
    assert!(dump.is_file());
    dump
}

#[test]
fn gen_data_is_deterministic_and_respects_dropout() {
    let tmp = TempDir::new().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let counts = run_gen_data(2, 90, 7, &a).unwrap();
    run_gen_data(2, 90, 7, &b).unwrap();

    assert_eq!(counts.len(), 16);
    for (kind, n) in &counts {
        let full = generate_task(&TaskSpec::new(*kind, 2).unwrap()).unwrap().examples.len();
        let removed = ((full as f64 * 0.10).round() as usize).max(1);
        assert_eq!(*n, full - removed, "{kind}");
        let file = a.join("EC-2-90").join(format!("{kind}.examples"));
        assert_eq!(fs::read(&file).unwrap(), fs::read(b.join("EC-2-90").join(format!("{kind}.examples"))).unwrap());
    }

    // 5% dropout at w=4: counts follow the same minimum-one removal rule.
    let counts = run_gen_data(4, 95, 0, &a).unwrap();
    for (kind, n) in &counts {
        let full = generate_task(&TaskSpec::new(*kind, 4).unwrap()).unwrap().examples.len();
        let removed = ((full as f64 * 0.05).round() as usize).max(1);
        assert_eq!(*n, full - removed, "{kind}");
    }

    assert!(run_gen_data(2, 80, 0, &a).is_err());
}

#[test]
fn train_is_deterministic_and_resumable() {
    let tmp = TempDir::new().unwrap();
    let data = tmp.path().join("data");
    run_gen_data(2, 100, 0, &data).unwrap();

    let mut manifest = not_manifest(&data, &tmp.path().join("runs-a"));
    manifest.config = None;
    manifest.grid = Some(GridSection { base_seed: 0, configs: 4 });

    let first = run_train(&manifest, 1).unwrap();
    assert_eq!(first.trained, 4);
    assert!(first.skipped.is_empty());
    assert_eq!(first.rows.len(), 4);
    for id in ["c00", "c01", "c02", "c03"] {
        assert!(manifest.out.join(format!("not.{id}.run.json")).is_file());
    }
    assert!(manifest.out.join("not.done").is_file());
    assert!(first.results_path.is_file());

    // Re-invocation honours the marker: nothing retrained, rows reloaded.
    let artifact_before = fs::read(manifest.out.join("not.c03.run.json")).unwrap();
    let second = run_train(&manifest, 1).unwrap();
    assert_eq!(second.trained, 0);
    assert_eq!(second.skipped, vec![TaskKind::Not]);
    assert_eq!(second.rows, first.rows);
    assert_eq!(fs::read(manifest.out.join("not.c03.run.json")).unwrap(), artifact_before);

    // Same manifest into a fresh directory reproduces the artifacts, and
    // extra workers change nothing.
    let mut replay = manifest.clone();
    replay.out = tmp.path().join("runs-b");
    run_train(&replay, 2).unwrap();
    for id in ["c00", "c01", "c02", "c03"] {
        let name = format!("not.{id}.run.json");
        assert_eq!(
            fs::read(manifest.out.join(&name)).unwrap(),
            fs::read(replay.out.join(&name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn train_requires_datasets_on_disk() {
    let tmp = TempDir::new().unwrap();
    let manifest = not_manifest(&tmp.path().join("missing"), &tmp.path().join("runs"));
    let err = run_train(&manifest, 1).unwrap_err().to_string();
    assert!(err.contains("training set"), "{err}");
}

#[test]
fn extract_verifies_a_sharp_run_end_to_end() {
    let tmp = TempDir::new().unwrap();
    let dump = train_sharp_not(&tmp.path().join("data"), &tmp.path().join("runs"));

    let outcome = run_extract(&dump, None, false, None).unwrap();
    assert!(outcome.agrees_with_soft);
    assert_eq!(outcome.report.equivalence, Some(true));
    assert!(outcome.warnings.is_empty());
    assert!(outcome.units > 0);

    // The written netlist (with its comment header) parses back into the
    // same circuit shape.
    let netlist_text = fs::read_to_string(&outcome.netlist_path).unwrap();
    let circuit = parse_netlist(&netlist_text).unwrap();
    assert_eq!(circuit.units.len(), outcome.units);
    assert_eq!(circuit.wires().len(), outcome.wires);
    assert!(fs::read_to_string(&outcome.dot_path).unwrap().contains("digraph"));
    let report = fs::read_to_string(&outcome.report_path).unwrap();
    assert!(report.contains("verdict: equivalent"), "{report}");
}

#[test]
fn extract_surfaces_ambiguity_and_the_fallback_resolves_it() {
    let tmp = TempDir::new().unwrap();
    let dump = train_sharp_not(&tmp.path().join("data"), &tmp.path().join("runs"));

    // A threshold no finitely trained softmax clears: ambiguity is an error
    // naming the choice.
    let sharp = 1.0 - 1e-9;
    let err = run_extract(&dump, Some(sharp), false, None).unwrap_err().to_string();
    assert!(err.contains("ambiguous"), "{err}");

    // Same threshold with the fallback: netlist produced, warnings recorded.
    let outcome = run_extract(&dump, Some(sharp), true, None).unwrap();
    assert!(!outcome.warnings.is_empty());
    assert!(outcome.warnings.iter().any(|w| w.contains("argmax")));
    let netlist_text = fs::read_to_string(&outcome.netlist_path).unwrap();
    assert!(netlist_text.starts_with("# warning:"));
    assert_eq!(outcome.report.equivalence, Some(true));
}

#[test]
fn report_renders_matrix_and_per_task_breakdown() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("runs");
    train_sharp_not(&tmp.path().join("data"), &out);

    let rendered = run_report(&out, false).unwrap();
    assert!(rendered.text.contains("dataset"));
    assert!(rendered.text.contains("signal (full)"));
    assert!(rendered.text.contains("signal (train)"));
    assert!(rendered.text.contains("EC-2-100"));
    assert!(rendered.csv.starts_with("dataset,metric,aig"));
    assert!(rendered.text_path.is_file());
    assert!(rendered.csv_path.is_file());
    assert!(!rendered.text.contains("MEAN"));

    let with_tasks = run_report(&out, true).unwrap();
    assert!(with_tasks.text.contains("EC-2-100 / aig"));
    assert!(with_tasks.text.contains("MEAN"));

    let empty = TempDir::new().unwrap();
    let err = run_report(empty.path(), false).unwrap_err().to_string();
    assert!(err.contains("no results"), "{err}");
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_softsynth"))
}

#[test]
fn binary_runs_the_full_pipeline() {
    let tmp = TempDir::new().unwrap();
    let data = tmp.path().join("data");
    let runs = tmp.path().join("runs");

    let out = bin()
        .args(["gen-data", "--w", "2", "--completeness", "100"])
        .args(["--out", data.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("wrote EC-2-100"), "{stdout}");
    assert!(stdout.contains("not: 4 examples"), "{stdout}");

    let manifest_path = tmp.path().join("exp.toml");
    let manifest_text = format!(
        "out = {:?}\ntau = 0.95\n\n\
         [dataset]\nw = 2\ncompleteness = 100\ndir = {:?}\ntasks = [\"not\"]\n\n\
         [network]\nunit = \"aig\"\nlayers = [6, 6, 6]\n\n\
         [config]\nbatch-size = 4\nlr = 0.5\ngamma = 1.0\nseed = {}\n",
        runs.to_str().unwrap(),
        data.to_str().unwrap(),
        derive_seed(0, "c03"),
    );
    fs::write(&manifest_path, manifest_text).unwrap();

    let out = bin().args(["train", manifest_path.to_str().unwrap()]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("1 runs trained"), "{stdout}");
    assert!(runs.join("results.csv").is_file());

    let dump = runs.join("not.single.run.json");
    let out = bin().args(["extract", dump.to_str().unwrap()]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("verdict: equivalent"), "{stdout}");

    let out = bin().args(["report", runs.to_str().unwrap(), "--per-task"]).output().unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("EC-2-100 / aig"), "{stdout}");
}

#[test]
fn binary_exit_codes_surface_errors() {
    let tmp = TempDir::new().unwrap();
    let data = tmp.path().join("data");
    let runs = tmp.path().join("runs");
    let dump = train_sharp_not(&data, &runs);

    // An unclearable threshold exits nonzero and names the ambiguity.
    let out = bin()
        .args(["extract", dump.to_str().unwrap(), "--tau", "0.999999999"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("ambiguous"), "{stderr}");

    // The fallback flag turns the same call into a warning plus artifacts.
    let out = bin()
        .args(["extract", dump.to_str().unwrap(), "--tau", "0.999999999", "--argmax-fallback"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("argmax"), "{stderr}");

    let empty = tmp.path().join("empty");
    fs::create_dir_all(&empty).unwrap();
    let out = bin().args(["report", empty.to_str().unwrap()]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr).unwrap().contains("no results"));
}
