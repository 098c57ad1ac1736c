//! Result rows, their CSV round-trip, and report aggregation.
//!
//! One row records one (dataset, task, unit, config) training run with both
//! its train-subset and full-truth-table accuracies. Reports aggregate rows
//! by taking, per task, the best value of each metric over the config grid,
//! then the unweighted mean across tasks.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::dataset::TaskKind;
use crate::error::{Error, Result};
use crate::units::UnitKind;

pub const CSV_HEADER: &str = "dataset,task,unit,config,signal_train,example_train,signal_full,example_full,epochs,early_stop,max_entropy";

/// One training run's outcome, as it appears in the results table.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ResultRow {
    pub dataset: String,
    pub task: TaskKind,
    pub unit: UnitKind,
    pub config: String,
    pub signal_train: f64,
    pub example_train: f64,
    pub signal_full: f64,
    pub example_full: f64,
    pub epochs: usize,
    pub early_stop: bool,
    pub max_entropy: f64,
}

fn check_field(s: &str) -> Result<()> {
    if s.contains(',') || s.contains('\n') {
        return Err(Error::InvalidInput(format!("field {s:?} would corrupt the table")));
    }
    Ok(())
}

/// Renders rows as comma-separated values with a fixed header.
pub fn rows_to_csv(rows: &[ResultRow]) -> Result<String> {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        check_field(&r.dataset)?;
        check_field(&r.config)?;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.dataset,
            r.task.name(),
            r.unit.name(),
            r.config,
            r.signal_train,
            r.example_train,
            r.signal_full,
            r.example_full,
            r.epochs,
            r.early_stop,
            r.max_entropy
        )
        .expect("string write");
    }
    Ok(out)
}

pub fn rows_from_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == CSV_HEADER => {}
        Some((_, h)) => {
            return Err(Error::Parse { line: 1, msg: format!("unexpected header {h:?}") })
        }
        None => return Err(Error::Parse { line: 1, msg: "empty table".into() }),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let lineno = i + 1;
        let err = |msg: String| Error::Parse { line: lineno, msg };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 11 {
            return Err(err(format!("expected 11 fields, got {}", f.len())));
        }
        let num = |s: &str, what: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|_| err(format!("bad {what} {s:?}")))
        };
        rows.push(ResultRow {
            dataset: f[0].to_string(),
            task: TaskKind::parse(f[1]).map_err(|e| err(e.to_string()))?,
            unit: UnitKind::parse(f[2]).map_err(|e| err(e.to_string()))?,
            config: f[3].to_string(),
            signal_train: num(f[4], "signal_train")?,
            example_train: num(f[5], "example_train")?,
            signal_full: num(f[6], "signal_full")?,
            example_full: num(f[7], "example_full")?,
            epochs: f[8].parse().map_err(|_| err(format!("bad epochs {:?}", f[8])))?,
            early_stop: match f[9] {
                "true" => true,
                "false" => false,
                other => return Err(err(format!("bad early_stop {other:?}"))),
            },
            max_entropy: num(f[10], "max_entropy")?,
        });
    }
    Ok(rows)
}

pub fn save_csv(path: &Path, rows: &[ResultRow]) -> Result<()> {
    std::fs::write(path, rows_to_csv(rows)?)?;
    Ok(())
}

pub fn load_csv(path: &Path) -> Result<Vec<ResultRow>> {
    rows_from_csv(&std::fs::read_to_string(path)?)
}

/// Best-over-configs values per metric for one task. The best signal and
/// best example rows may come from different configs.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TaskBest {
    pub signal_train: f64,
    pub example_train: f64,
    pub signal_full: f64,
    pub example_full: f64,
}

/// Aggregate of one (dataset, unit) group of rows.
#[derive(Clone, Debug)]
pub struct GroupSummary {
    pub dataset: String,
    pub unit: UnitKind,
    pub per_task: BTreeMap<TaskKind, TaskBest>,
    pub mean: TaskBest,
}

/// Groups rows by (dataset, unit) and aggregates each group: per-task
/// best-over-configs for every metric, then the unweighted across-task mean.
pub fn summarize(rows: &[ResultRow]) -> Vec<GroupSummary> {
    let mut groups: BTreeMap<(String, &'static str), Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.dataset.clone(), r.unit.name())).or_default().push(r);
    }
    let mut out = Vec::new();
    for ((dataset, _), group) in groups {
        let unit = group[0].unit;
        let mut per_task: BTreeMap<TaskKind, TaskBest> = BTreeMap::new();
        for r in &group {
            let b = per_task.entry(r.task).or_default();
            b.signal_train = b.signal_train.max(r.signal_train);
            b.example_train = b.example_train.max(r.example_train);
            b.signal_full = b.signal_full.max(r.signal_full);
            b.example_full = b.example_full.max(r.example_full);
        }
        let n = per_task.len() as f64;
        let mut mean = TaskBest::default();
        for b in per_task.values() {
            mean.signal_train += b.signal_train / n;
            mean.example_train += b.example_train / n;
            mean.signal_full += b.signal_full / n;
            mean.example_full += b.example_full / n;
        }
        out.push(GroupSummary { dataset, unit, per_task, mean });
    }
    out
}

/// Plain-text report: one block per (dataset, unit) with the per-task best
/// metrics and the across-task means, full-set accuracy first.
pub fn report_text(rows: &[ResultRow]) -> String {
    let mut out = String::new();
    for g in summarize(rows) {
        writeln!(out, "{} / {}", g.dataset, g.unit.name()).unwrap();
        writeln!(
            out,
            "  {:<6} {:>12} {:>13} {:>13} {:>14}",
            "task", "signal(full)", "example(full)", "signal(train)", "example(train)"
        )
        .unwrap();
        for (task, b) in &g.per_task {
            writeln!(
                out,
                "  {:<6} {:>12.4} {:>13.4} {:>13.4} {:>14.4}",
                task.name(),
                b.signal_full,
                b.example_full,
                b.signal_train,
                b.example_train
            )
            .unwrap();
        }
        writeln!(
            out,
            "  {:<6} {:>12.4} {:>13.4} {:>13.4} {:>14.4}",
            "MEAN", g.mean.signal_full, g.mean.example_full, g.mean.signal_train,
            g.mean.example_train
        )
        .unwrap();
        out.push('\n');
    }
    out
}
