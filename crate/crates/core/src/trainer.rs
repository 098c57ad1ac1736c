//! Training objective, optimisation loop, accuracy metrics, and experiment
//! grids.
//!
//! The loss is mean binary cross entropy over output signals plus, from a
//! configured epoch onward, a sharpening term: the summed entropy of every
//! softmax choice in the network, scaled by sigma. Sharpening drives wiring,
//! attention, and selector choices one-hot so the discrete circuit can be
//! read out afterwards.
//!
//! Network input p carries line p of the example's input vector; output j is
//! trained against line j of the output vector (line 0 being the least
//! significant position).

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{BitVector, TaskDataset};
use crate::diff::{decayed_lr, SoftmaxNodes, Tape, Value};
use crate::error::{Error, Result};
use crate::network::{build_network, NetworkConfig, NetworkDump, OutputMode, SoftNetwork};
use crate::results::ResultRow;
use crate::scalar::{real, to_f64, Real};
use crate::units::UnitKind;

/// Predictions are clamped to [BCE_FLOOR, 1-BCE_FLOOR] before the logarithm.
pub const BCE_FLOOR: f64 = 1e-7;

/// Hyperparameters of one training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub lr: f64,
    pub gamma: f64,
    pub max_epochs: usize,
    pub sigma: f64,
    pub sigma_start: usize,
    pub output_mode: OutputMode,
    pub seed: u64,
    pub tau: f64,
    /// Allow stopping on perfect accuracy before any sharpening epoch ran.
    pub pure_accuracy_stop: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 8,
            lr: 0.3,
            gamma: 0.95,
            max_epochs: 100,
            sigma: 1.0,
            sigma_start: 50,
            output_mode: OutputMode::Hardwired,
            seed: 0,
            tau: 0.95,
            pure_accuracy_stop: false,
        }
    }
}

impl TrainConfig {
    /// A config inside the default experiment ranges: batch in [4,16],
    /// lr in (0.1,0.6), gamma in (0.9,1.0]. Everything else defaulted.
    pub fn profile(
        batch_size: usize,
        lr: f64,
        gamma: f64,
        output_mode: OutputMode,
        seed: u64,
    ) -> Result<Self> {
        let c = TrainConfig { batch_size, lr, gamma, output_mode, seed, ..Default::default() };
        c.validate_profile()?;
        Ok(c)
    }

    /// Checks the default-profile ranges. Out-of-range configs may still be
    /// constructed literally for experiments outside the profile.
    pub fn validate_profile(&self) -> Result<()> {
        if !(4..=16).contains(&self.batch_size) {
            return Err(Error::Config(format!("batch size {} outside [4,16]", self.batch_size)));
        }
        if !(self.lr > 0.1 && self.lr < 0.6) {
            return Err(Error::Config(format!("learning rate {} outside (0.1,0.6)", self.lr)));
        }
        if !(self.gamma > 0.9 && self.gamma <= 1.0) {
            return Err(Error::Config(format!("decay {} outside (0.9,1.0]", self.gamma)));
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::Config(format!("threshold {} outside (0,1)", self.tau)));
        }
        Ok(())
    }
}

/// Everything measured over one training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    /// Per-epoch mean total loss (BCE plus engaged sharpening).
    pub total_loss: Vec<f64>,
    pub bce_loss: Vec<f64>,
    /// Per-epoch sharpening contribution sigma_eff * H; exactly 0 while the
    /// schedule is off.
    pub entropy_loss: Vec<f64>,
    /// Accuracy on the training set after the final epoch.
    pub signal_accuracy: f64,
    pub example_accuracy: f64,
    pub epochs_run: usize,
    pub early_stopped: bool,
    /// Largest residual entropy over all softmax choices.
    pub max_entropy: f64,
    /// Smallest top probability over all softmax choices.
    pub min_top_prob: f64,
    /// Largest top probability over all softmax choices; witnesses that the
    /// extraction threshold is reachable by at least one choice.
    pub max_top_prob: f64,
}

/// Mean binary cross entropy over one example's output signals.
pub fn bce_loss(truth: &BitVector, predictions: &[f64]) -> Result<f64> {
    if truth.len() != predictions.len() {
        return Err(Error::Structure(format!(
            "{} target bits against {} predictions",
            truth.len(),
            predictions.len()
        )));
    }
    let mut acc = 0.0;
    for (j, &p) in predictions.iter().enumerate() {
        let p = p.clamp(BCE_FLOOR, 1.0 - BCE_FLOOR);
        acc -= if truth.line(j) { p.ln() } else { (1.0 - p).ln() };
    }
    Ok(acc / predictions.len() as f64)
}

/// Summed entropy of every softmax choice in the network.
pub fn sharpening_loss<F: Real>(net: &SoftNetwork<F>) -> Result<f64> {
    Ok(net.choice_sharpness()?.iter().map(|c| c.entropy).sum())
}

/// Sharpening weight in effect at `epoch`: 0 before the start epoch.
pub fn sigma_effective(epoch: usize, config: &TrainConfig) -> f64 {
    if epoch < config.sigma_start {
        0.0
    } else {
        config.sigma
    }
}

/// BCE plus the scheduled sharpening term.
pub fn total_loss<F: Real>(
    truth: &BitVector,
    predictions: &[f64],
    net: &SoftNetwork<F>,
    epoch: usize,
    config: &TrainConfig,
) -> Result<f64> {
    let sigma = sigma_effective(epoch, config);
    let mut loss = bce_loss(truth, predictions)?;
    if sigma > 0.0 {
        loss += sigma * sharpening_loss(net)?;
    }
    Ok(loss)
}

fn input_vector<F: Real>(x: &BitVector) -> Vec<F> {
    x.to_lines().iter().map(|&b| if b { F::one() } else { F::zero() }).collect()
}

/// Signal and example accuracy of the soft network on a dataset, with
/// predictions thresholded at 0.5.
pub fn accuracies<F: Real>(net: &SoftNetwork<F>, dataset: &TaskDataset) -> Result<(f64, f64)> {
    let wo = dataset.spec.output_width;
    let mut bit_hits = 0usize;
    let mut example_hits = 0usize;
    for (x, t) in &dataset.examples {
        let y = net.forward(&input_vector(x))?;
        let mut all = true;
        for j in 0..wo {
            let predicted = to_f64(y[j]) >= 0.5;
            if predicted == t.line(j) {
                bit_hits += 1;
            } else {
                all = false;
            }
        }
        if all {
            example_hits += 1;
        }
    }
    let n = dataset.examples.len();
    Ok((bit_hits as f64 / (n * wo) as f64, example_hits as f64 / n as f64))
}

pub fn signal_accuracy<F: Real>(net: &SoftNetwork<F>, dataset: &TaskDataset) -> Result<f64> {
    Ok(accuracies(net, dataset)?.0)
}

pub fn example_accuracy<F: Real>(net: &SoftNetwork<F>, dataset: &TaskDataset) -> Result<f64> {
    Ok(accuracies(net, dataset)?.1)
}

/// Records one example's clamped BCE on the tape.
fn record_bce<F: Real>(
    tape: &mut Tape<F>,
    truth: &BitVector,
    ys: &[Value],
) -> Value {
    let mut terms = Vec::with_capacity(ys.len());
    for (j, &y) in ys.iter().enumerate() {
        let p = tape.clamp(y, real(BCE_FLOOR), real(1.0 - BCE_FLOOR));
        let l = if truth.line(j) {
            let lp = tape.ln(p);
            tape.neg(lp)
        } else {
            let om = tape.const_minus(F::one(), p);
            let lq = tape.ln(om);
            tape.neg(lq)
        };
        terms.push(l);
    }
    tape.mean(&terms)
}

/// Trains the network on the dataset in place. Examples are reshuffled each
/// epoch from the config seed; every mini-batch takes one Adam step at the
/// decayed learning rate. Stops early once training example accuracy reaches
/// 1 and sharpening has been active for at least one epoch (or is disabled).
pub fn train<F: Real>(
    net: &mut SoftNetwork<F>,
    dataset: &TaskDataset,
    config: &TrainConfig,
) -> Result<RunResult> {
    if dataset.spec.input_width != net.config.input_width
        || dataset.spec.output_width != net.config.output_width
    {
        return Err(Error::Structure(format!(
            "dataset is {}->{} bits but the network is {}->{}",
            dataset.spec.input_width,
            dataset.spec.output_width,
            net.config.input_width,
            net.config.output_width
        )));
    }
    if dataset.examples.is_empty() {
        return Err(Error::InvalidInput("cannot train on an empty dataset".into()));
    }
    if config.batch_size == 0 {
        return Err(Error::Config("batch size must be positive".into()));
    }

    let n = dataset.examples.len();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut tape: Tape<F> = Tape::new();
    let inputs: Vec<Vec<F>> = dataset.examples.iter().map(|(x, _)| input_vector(x)).collect();

    let mut total_hist = Vec::new();
    let mut bce_hist = Vec::new();
    let mut entropy_hist = Vec::new();
    let mut epochs_run = 0;
    let mut early_stopped = false;

    for epoch in 0..config.max_epochs {
        let lr = decayed_lr(config.lr, config.gamma, epoch)?;
        let sigma = sigma_effective(epoch, config);
        order.shuffle(&mut rng);

        let mut bce_sum = 0.0;
        let mut ent_sum = 0.0;
        for chunk in order.chunks(config.batch_size) {
            tape.clear();
            let shared = net.record_shared(&mut tape)?;
            let mut per_example = Vec::with_capacity(chunk.len());
            for &i in chunk {
                let ys = net.record_forward(&mut tape, &shared, &inputs[i])?;
                per_example.push(record_bce(&mut tape, &dataset.examples[i].1, &ys));
            }
            let batch_bce = tape.mean(&per_example);
            let mut root = batch_bce;
            let mut ent_value = 0.0;
            if sigma > 0.0 {
                let sms: Vec<&SoftmaxNodes> = shared.softmaxes().collect();
                let ents: Vec<Value> = sms.into_iter().map(|sm| tape.entropy(sm)).collect();
                let h = tape.sum(&ents);
                let weighted = tape.mul_const(h, real(sigma));
                root = tape.add(batch_bce, weighted);
                ent_value = sigma * to_f64(tape.data(h));
            }
            let loss = to_f64(tape.data(root));
            if !loss.is_finite() {
                return Err(Error::Numerical(format!(
                    "loss became non-finite at epoch {epoch} (bce {}, sharpening {ent_value})",
                    to_f64(tape.data(batch_bce))
                )));
            }
            tape.backward(root);
            net.store.adam_step(&mut tape, &shared.staged, real(lr))?;

            let w = chunk.len() as f64 / n as f64;
            bce_sum += w * to_f64(tape.data(batch_bce));
            ent_sum += w * ent_value;
        }

        bce_hist.push(bce_sum);
        entropy_hist.push(ent_sum);
        total_hist.push(bce_sum + ent_sum);
        epochs_run = epoch + 1;

        let sharpened = epoch >= config.sigma_start || config.sigma == 0.0;
        if sharpened || config.pure_accuracy_stop {
            let (_, example) = accuracies(net, dataset)?;
            if example == 1.0 {
                early_stopped = true;
                break;
            }
        }
    }

    let (signal, example) = accuracies(net, dataset)?;
    let sharpness = net.choice_sharpness()?;
    let max_entropy = sharpness.iter().map(|c| c.entropy).fold(0.0, f64::max);
    let min_top_prob = sharpness.iter().map(|c| c.top).fold(1.0, f64::min);
    let max_top_prob = sharpness.iter().map(|c| c.top).fold(0.0, f64::max);

    Ok(RunResult {
        total_loss: total_hist,
        bce_loss: bce_hist,
        entropy_loss: entropy_hist,
        signal_accuracy: signal,
        example_accuracy: example,
        epochs_run,
        early_stopped,
        max_entropy,
        min_top_prob,
        max_top_prob,
    })
}

/// Stable seed derivation: FNV-1a over (base, salt) finished with a
/// splitmix64 mix, so nearby bases and salts decorrelate.
pub fn derive_seed(base: u64, salt: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in base.to_le_bytes() {
        h = (h ^ b as u64).wrapping_mul(0x100000001b3);
    }
    for &b in salt.as_bytes() {
        h = (h ^ b as u64).wrapping_mul(0x100000001b3);
    }
    let mut z = h.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// One grid entry: a config plus its table identifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridEntry {
    pub id: String,
    pub config: TrainConfig,
}

/// The default 20-config grid: five hand-picked diverse corners, then the
/// remaining Cartesian combinations of batch {4,8,16} x lr {0.15,0.3,0.5}
/// x gamma {0.95,1.0} x output mode in enumeration order, truncated to 20.
/// Each entry gets its own seed derived from `base_seed`, so an entry
/// repeated verbatim reproduces its run exactly.
pub fn default_grid(base_seed: u64) -> Vec<GridEntry> {
    let modes = [OutputMode::Hardwired, OutputMode::Selector];
    let mut combos: Vec<(usize, f64, f64, OutputMode)> = vec![
        (16, 0.3, 0.95, OutputMode::Hardwired),
        (4, 0.15, 1.0, OutputMode::Selector),
        (8, 0.5, 0.95, OutputMode::Selector),
        (4, 0.5, 1.0, OutputMode::Hardwired),
        (16, 0.15, 0.95, OutputMode::Selector),
    ];
    'fill: for batch in [4usize, 8, 16] {
        for lr in [0.15, 0.3, 0.5] {
            for gamma in [0.95, 1.0] {
                for mode in modes {
                    let c = (batch, lr, gamma, mode);
                    if !combos.contains(&c) {
                        combos.push(c);
                        if combos.len() == 20 {
                            break 'fill;
                        }
                    }
                }
            }
        }
    }
    combos
        .into_iter()
        .enumerate()
        .map(|(i, (batch_size, lr, gamma, output_mode))| {
            let id = format!("c{i:02}");
            let seed = derive_seed(base_seed, &id);
            GridEntry {
                id,
                config: TrainConfig {
                    batch_size,
                    lr,
                    gamma,
                    output_mode,
                    seed,
                    ..Default::default()
                },
            }
        })
        .collect()
}

/// One completed run: its metrics row, full history, and parameter dump.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub row: ResultRow,
    pub result: RunResult,
    pub dump: NetworkDump,
}

/// Trains one fresh network on `train_ds` and evaluates it on both
/// `train_ds` and `full_ds` (the induction protocol: learn from the reduced
/// set, test against the complete truth table). Network and shuffle seeds
/// derive from the entry's seed and the task name.
pub fn run_task(
    label: &str,
    train_ds: &TaskDataset,
    full_ds: &TaskDataset,
    unit: UnitKind,
    layer_widths: &[usize],
    entry: &GridEntry,
) -> Result<RunOutcome> {
    if train_ds.spec != full_ds.spec {
        return Err(Error::Structure(format!(
            "train and evaluation sets disagree: {:?} vs {:?}",
            train_ds.spec, full_ds.spec
        )));
    }
    let task = train_ds.spec.kind;
    let net_config = NetworkConfig {
        unit,
        layer_widths: layer_widths.to_vec(),
        input_width: train_ds.spec.input_width,
        output_width: train_ds.spec.output_width,
        output_mode: entry.config.output_mode,
    };
    let net_seed = derive_seed(entry.config.seed, &format!("{}.net", task.name()));
    let mut net: SoftNetwork<f64> = build_network(&net_config, net_seed)?;
    let mut config = entry.config.clone();
    config.seed = derive_seed(entry.config.seed, &format!("{}.shuffle", task.name()));
    let result = train(&mut net, train_ds, &config)?;
    let (signal_full, example_full) = accuracies(&net, full_ds)?;
    let row = ResultRow {
        dataset: label.to_string(),
        task,
        unit,
        config: entry.id.clone(),
        signal_train: result.signal_accuracy,
        example_train: result.example_accuracy,
        signal_full,
        example_full,
        epochs: result.epochs_run,
        early_stop: result.early_stopped,
        max_entropy: result.max_entropy,
    };
    Ok(RunOutcome { row, result, dump: net.dump() })
}

/// Runs every (task, config) combination sequentially. `pairs` holds each
/// task's (training set, complete evaluation set); pass the same dataset
/// twice for completeness-100 runs.
pub fn run_grid(
    label: &str,
    pairs: &[(TaskDataset, TaskDataset)],
    unit: UnitKind,
    layer_widths: &[usize],
    grid: &[GridEntry],
) -> Result<Vec<RunOutcome>> {
    if grid.is_empty() {
        return Err(Error::Config("empty config grid".into()));
    }
    let mut out = Vec::with_capacity(pairs.len() * grid.len());
    for (train_ds, full_ds) in pairs {
        for entry in grid {
            out.push(run_task(label, train_ds, full_ds, unit, layer_widths, entry)?);
        }
    }
    Ok(out)
}
