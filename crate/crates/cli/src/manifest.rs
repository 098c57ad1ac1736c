//! Experiment manifests: one TOML document pins one reproducible experiment.
//!
//! A manifest names the dataset family to train on, the network, either a
//! slice of the default config grid or one explicit config, the extraction
//! threshold, and where artifacts go. Unknown keys are rejected so typos
//! surface instead of silently defaulting.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use softsynth::dataset::{family_dir_name, TaskKind};
use softsynth::network::OutputMode;
use softsynth::trainer::{default_grid, GridEntry, TrainConfig};
use softsynth::units::UnitKind;

fn default_tau() -> f64 {
    softsynth::extract::DEFAULT_TAU
}

fn full_grid() -> usize {
    20
}

/// One experiment: dataset family, network shape, config grid or single
/// config, extraction threshold, output directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ExperimentManifest {
    pub dataset: DatasetSection,
    pub network: NetworkSection,
    /// A front slice of the default grid; exactly one of `grid`/`config`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSection>,
    /// One explicit config; exactly one of `grid`/`config`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<ConfigSection>,
    /// Wire presence threshold handed to extraction.
    #[serde(default = "default_tau")]
    pub tau: f64,
    /// Directory receiving run artifacts and the results table.
    pub out: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct DatasetSection {
    /// Base operand width.
    pub w: usize,
    /// Kept percentage of the full truth table: 100, 95, or 90.
    pub completeness: u8,
    /// Seed behind the dropped-example choice below completeness 100.
    #[serde(default)]
    pub dropout_seed: u64,
    /// Directory holding dataset families, as written by gen-data.
    pub dir: PathBuf,
    /// Tasks to train; all sixteen when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tasks: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct NetworkSection {
    /// Unit kind: aig, lut, or lab.
    pub unit: String,
    /// Units per layer, inputs excluded.
    pub layers: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct GridSection {
    /// Seed every grid entry's own seed derives from.
    #[serde(default)]
    pub base_seed: u64,
    /// How many default-grid configs to run, from the front.
    #[serde(default = "full_grid")]
    pub configs: usize,
}

/// A single training config; omitted fields take the trainer defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ConfigSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_epochs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_start: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_mode: Option<OutputMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl ConfigSection {
    pub fn to_train_config(&self) -> TrainConfig {
        let d = TrainConfig::default();
        TrainConfig {
            batch_size: self.batch_size.unwrap_or(d.batch_size),
            lr: self.lr.unwrap_or(d.lr),
            gamma: self.gamma.unwrap_or(d.gamma),
            max_epochs: self.max_epochs.unwrap_or(d.max_epochs),
            sigma: self.sigma.unwrap_or(d.sigma),
            sigma_start: self.sigma_start.unwrap_or(d.sigma_start),
            output_mode: self.output_mode.unwrap_or(d.output_mode),
            seed: self.seed.unwrap_or(d.seed),
            ..d
        }
    }
}

impl ExperimentManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading manifest {}", path.display()))?;
        let manifest: Self = toml::from_str(&text)
            .with_context(|| format!("parsing manifest {}", path.display()))?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dataset.w < 2 {
            bail!("base width {} below the minimum 2", self.dataset.w);
        }
        if !matches!(self.dataset.completeness, 100 | 95 | 90) {
            bail!("completeness {} not one of 100, 95, 90", self.dataset.completeness);
        }
        if self.network.layers.is_empty() || self.network.layers.contains(&0) {
            bail!("network layers {:?} must be nonempty and positive", self.network.layers);
        }
        self.unit()?;
        self.tasks()?;
        if !(self.tau > 0.5 && self.tau < 1.0) {
            bail!("tau {} outside (0.5, 1)", self.tau);
        }
        match (&self.grid, &self.config) {
            (Some(_), Some(_)) => bail!("manifest names both a grid and a single config"),
            (None, None) => bail!("manifest names neither a grid nor a single config"),
            (Some(g), None) if g.configs == 0 || g.configs > 20 => {
                bail!("grid size {} outside 1..=20", g.configs)
            }
            _ => Ok(()),
        }
    }

    pub fn unit(&self) -> Result<UnitKind> {
        Ok(UnitKind::parse(&self.network.unit)?)
    }

    pub fn tasks(&self) -> Result<Vec<TaskKind>> {
        match &self.dataset.tasks {
            None => Ok(TaskKind::ALL.to_vec()),
            Some(names) => {
                if names.is_empty() {
                    bail!("task list is empty; omit it to train all sixteen");
                }
                let mut out = Vec::new();
                for name in names {
                    let kind = TaskKind::parse(name)?;
                    if out.contains(&kind) {
                        bail!("task {name} listed twice");
                    }
                    out.push(kind);
                }
                Ok(out)
            }
        }
    }

    /// The family trained on, e.g. "EC-2-90".
    pub fn family(&self) -> String {
        family_dir_name(self.dataset.w, self.dataset.completeness)
    }

    /// The completeness-100 family every run is evaluated against.
    pub fn full_family(&self) -> String {
        family_dir_name(self.dataset.w, 100)
    }

    /// The configs to run: the front of the default grid, or the single
    /// config as entry "single". The manifest tau is stamped onto each entry
    /// so trained sharpness is reported against the extraction threshold.
    pub fn grid_entries(&self) -> Result<Vec<GridEntry>> {
        let mut entries: Vec<GridEntry> = match (&self.grid, &self.config) {
            (Some(g), None) => default_grid(g.base_seed).into_iter().take(g.configs).collect(),
            (None, Some(c)) => {
                vec![GridEntry { id: "single".into(), config: c.to_train_config() }]
            }
            _ => bail!("manifest needs exactly one of grid and config"),
        };
        for entry in &mut entries {
            entry.config.tau = self.tau;
        }
        Ok(entries)
    }
}
