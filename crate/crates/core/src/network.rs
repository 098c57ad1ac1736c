//! Layered soft networks with softmax-choice wiring.
//!
//! Every input port of every unit attends over the outputs of ALL previous
//! layers (the inputs count as layer 0), through a softmax over a learned
//! logit matrix. Outputs are either hardwired to the first units of the
//! final layer or chosen by one more softmax per output (the selector).
//!
//! Layer indices `k` are 1-based with layer 0 meaning the network inputs;
//! units and ports are 0-based. A wiring matrix for layer `k` has shape
//! k x max(w_0..w_{k-1}); cells addressing units that do not exist in their
//! source layer are masked: they hold (and dump) their initial values but
//! never enter a softmax and never receive gradient.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::diff::{softmax_slice, GroupId, ParamStore, SoftmaxNodes, StagedParams, Tape, Value};
use crate::error::{Error, Result};
use crate::scalar::{real, to_f64, Real};
use crate::units::{
    aig_forward, aig_record, draw_attn_logits, draw_table_logits, lab_forward, lab_record,
    lut_forward, lut_record, squash, UnitKind,
};

/// How network outputs are designated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputMode {
    /// Output j is unit j of the final layer (requires w_last >= w_out).
    Hardwired,
    /// One softmax per output over the outputs of all layers, inputs
    /// included.
    Selector,
    /// One softmax per output over the final layer only.
    SelectorLastOnly,
}

/// Shape and output designation of a network.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub unit: UnitKind,
    pub layer_widths: Vec<usize>,
    pub input_width: usize,
    pub output_width: usize,
    pub output_mode: OutputMode,
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layer_widths.is_empty() {
            return Err(Error::Config("a network needs at least one layer".into()));
        }
        if self.layer_widths.iter().any(|&w| w == 0) {
            return Err(Error::Config("layer widths must be positive".into()));
        }
        if self.input_width == 0 || self.output_width == 0 {
            return Err(Error::Config("input and output widths must be positive".into()));
        }
        if self.output_mode == OutputMode::Hardwired {
            let last = *self.layer_widths.last().unwrap();
            if last < self.output_width {
                return Err(Error::Config(format!(
                    "hardwired outputs need a final layer of at least {} units, got {}",
                    self.output_width, last
                )));
            }
        }
        Ok(())
    }

    pub fn layer_count(&self) -> usize {
        self.layer_widths.len()
    }

    /// Width of layer l, with layer 0 meaning the inputs.
    pub fn width(&self, l: usize) -> usize {
        if l == 0 {
            self.input_width
        } else {
            self.layer_widths[l - 1]
        }
    }

    /// Column count of wiring matrices for layer k: max width over layers
    /// 0..k.
    pub fn matrix_cols(&self, k: usize) -> usize {
        (0..k).map(|l| self.width(l)).max().unwrap()
    }

    /// All (layer, unit) sources visible to layer k, in flat order.
    fn sources_below(&self, k: usize) -> Vec<(usize, usize)> {
        let mut v = Vec::new();
        for l in 0..k {
            for n in 0..self.width(l) {
                v.push((l, n));
            }
        }
        v
    }
}

struct LayerMeta {
    /// Valid (source layer, source unit) pairs in flat order.
    sources: Vec<(usize, usize)>,
    cols: usize,
}

struct SelectorMeta {
    sources: Vec<(usize, usize)>,
    cols: usize,
    rows: usize,
    /// Matrix row of a source at layer l is `l - row_base`: 0 for the
    /// all-layers selector, the final layer index for the last-only variant.
    row_base: usize,
}

/// A trainable layered network: structure plus its parameter store.
pub struct SoftNetwork<F> {
    pub config: NetworkConfig,
    pub store: ParamStore<F>,
    layer_meta: Vec<LayerMeta>,
    wire_groups: Vec<Vec<Vec<GroupId>>>,
    table_groups: Vec<Vec<Option<GroupId>>>,
    attn_groups: Vec<Vec<Option<GroupId>>>,
    selector_groups: Vec<GroupId>,
    selector_meta: Option<SelectorMeta>,
}

/// Everything recorded once per batch and shared by all examples in it:
/// parameter leaves, wiring/attention/selector softmaxes, squashed tables.
pub struct SharedNodes {
    pub staged: StagedParams,
    port_sm: Vec<Vec<Vec<SoftmaxNodes>>>,
    tables: Vec<Vec<Option<Vec<Value>>>>,
    alphas: Vec<Vec<Option<[Value; 3]>>>,
    attn_sm: Vec<SoftmaxNodes>,
    selector_sm: Vec<SoftmaxNodes>,
}

impl SharedNodes {
    /// Every softmax choice in the network: wiring, attention, selector.
    pub fn softmaxes(&self) -> impl Iterator<Item = &SoftmaxNodes> {
        self.port_sm
            .iter()
            .flatten()
            .flatten()
            .chain(self.attn_sm.iter())
            .chain(self.selector_sm.iter())
    }
}

/// Sharpness measurement of one softmax choice.
#[derive(Clone, Debug)]
pub struct ChoiceSharpness {
    pub name: String,
    pub entropy: f64,
    pub top: f64,
}

/// Builds a fresh network with seeded initial parameters: wiring, selector,
/// and attention logits uniform in (-0.1, 0.1), table logits uniform in
/// (-1, 1). The same (config, seed) pair always yields identical parameters.
pub fn build_network<F: Real>(config: &NetworkConfig, seed: u64) -> Result<SoftNetwork<F>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store: ParamStore<F> = ParamStore::new();
    let arity = config.unit.arity();
    let ell = config.layer_count();

    let mut layer_meta = Vec::with_capacity(ell);
    let mut wire_groups = Vec::with_capacity(ell);
    let mut table_groups = Vec::with_capacity(ell);
    let mut attn_groups = Vec::with_capacity(ell);

    for k in 1..=ell {
        let cols = config.matrix_cols(k);
        layer_meta.push(LayerMeta { sources: config.sources_below(k), cols });

        let mut layer_wires = Vec::new();
        let mut layer_tables = Vec::new();
        let mut layer_attn = Vec::new();
        for m in 0..config.layer_widths[k - 1] {
            let table = match config.unit {
                UnitKind::Lut | UnitKind::Lab => Some(store.add_group(
                    format!("unit.{k}.{m}.table"),
                    draw_table_logits::<F, _>(&mut rng),
                )),
                UnitKind::Aig => None,
            };
            let attn = match config.unit {
                UnitKind::Lab => Some(store.add_group(
                    format!("unit.{k}.{m}.attn"),
                    draw_attn_logits::<F, _>(&mut rng),
                )),
                _ => None,
            };
            let mut ports = Vec::with_capacity(arity);
            for p in 0..arity {
                let logits: Vec<F> =
                    (0..k * cols).map(|_| real(rng.random_range(-0.1..0.1))).collect();
                ports.push(store.add_group(format!("wire.{k}.{m}.{p}"), logits));
            }
            layer_tables.push(table);
            layer_attn.push(attn);
            layer_wires.push(ports);
        }
        wire_groups.push(layer_wires);
        table_groups.push(layer_tables);
        attn_groups.push(layer_attn);
    }

    let (selector_groups, selector_meta) = match config.output_mode {
        OutputMode::Hardwired => (Vec::new(), None),
        OutputMode::Selector => {
            let cols = (0..=ell).map(|l| config.width(l)).max().unwrap();
            let mut sources = config.sources_below(ell);
            for n in 0..config.width(ell) {
                sources.push((ell, n));
            }
            let rows = ell + 1;
            let groups = (0..config.output_width)
                .map(|j| {
                    let logits: Vec<F> =
                        (0..rows * cols).map(|_| real(rng.random_range(-0.1..0.1))).collect();
                    store.add_group(format!("selector.{j}"), logits)
                })
                .collect();
            (groups, Some(SelectorMeta { sources, cols, rows, row_base: 0 }))
        }
        OutputMode::SelectorLastOnly => {
            let cols = config.width(ell);
            let sources = (0..cols).map(|n| (ell, n)).collect();
            let groups = (0..config.output_width)
                .map(|j| {
                    let logits: Vec<F> =
                        (0..cols).map(|_| real(rng.random_range(-0.1..0.1))).collect();
                    store.add_group(format!("selector.{j}"), logits)
                })
                .collect();
            (groups, Some(SelectorMeta { sources, cols, rows: 1, row_base: ell }))
        }
    };

    Ok(SoftNetwork {
        config: config.clone(),
        store,
        layer_meta,
        wire_groups,
        table_groups,
        attn_groups,
        selector_groups,
        selector_meta,
    })
}

impl<F: Real> SoftNetwork<F> {
    /// Total number of stored parameters, masked wiring cells included.
    pub fn param_count(&self) -> usize {
        self.store.len()
    }

    /// Valid wiring sources for layer k, in flat order.
    pub fn sources(&self, k: usize) -> &[(usize, usize)] {
        &self.layer_meta[k - 1].sources
    }

    /// Valid selector sources, in flat order. Empty in hardwired mode.
    pub fn selector_sources(&self) -> &[(usize, usize)] {
        match &self.selector_meta {
            Some(meta) => &meta.sources,
            None => &[],
        }
    }

    pub fn wire_group(&self, k: usize, m: usize, p: usize) -> GroupId {
        self.wire_groups[k - 1][m][p]
    }

    pub fn table_group(&self, k: usize, m: usize) -> Option<GroupId> {
        self.table_groups[k - 1][m]
    }

    pub fn attn_group(&self, k: usize, m: usize) -> Option<GroupId> {
        self.attn_groups[k - 1][m]
    }

    pub fn selector_group(&self, j: usize) -> GroupId {
        self.selector_groups[j]
    }

    fn gather_port_logits(&self, k: usize, m: usize, p: usize) -> Vec<F> {
        let meta = &self.layer_meta[k - 1];
        let logits = self.store.values(self.wire_groups[k - 1][m][p]);
        meta.sources.iter().map(|&(l, n)| logits[l * meta.cols + n]).collect()
    }

    fn gather_selector_logits(&self, j: usize) -> Vec<F> {
        let meta = self.selector_meta.as_ref().expect("selector logits need selector mode");
        let logits = self.store.values(self.selector_groups[j]);
        meta.sources
            .iter()
            .map(|&(l, n)| logits[(l - meta.row_base) * meta.cols + n])
            .collect()
    }

    /// Softmax weights of one port over its valid sources.
    pub fn port_probs(&self, k: usize, m: usize, p: usize) -> Result<Vec<F>> {
        softmax_slice(&self.gather_port_logits(k, m, p))
    }

    /// Soft value arriving at port p of unit m in layer k: the convex
    /// combination of all prior outputs under the port's softmax. `prior`
    /// holds those outputs in flat source order (inputs first).
    pub fn wire_input(&self, k: usize, m: usize, p: usize, prior: &[F]) -> Result<F> {
        let probs = self.port_probs(k, m, p)?;
        if prior.len() != probs.len() {
            return Err(Error::Structure(format!(
                "port {k}.{m}.{p} sees {} sources, got {} prior outputs",
                probs.len(),
                prior.len()
            )));
        }
        let mut acc = F::zero();
        for (w, &o) in probs.iter().zip(prior) {
            acc = acc + *w * o;
        }
        Ok(acc)
    }

    /// Softmax weights of one selector output over its valid sources.
    pub fn selector_probs(&self, j: usize) -> Result<Vec<F>> {
        softmax_slice(&self.gather_selector_logits(j))
    }

    /// Attention probabilities of a LAB unit.
    pub fn attn_probs(&self, k: usize, m: usize) -> Result<[F; 3]> {
        let id = self.attn_groups[k - 1][m]
            .ok_or_else(|| Error::Structure(format!("unit {k}.{m} has no attention")))?;
        let p = softmax_slice(self.store.values(id))?;
        Ok([p[0], p[1], p[2]])
    }

    /// Squashed table of a LUT or LAB unit.
    pub fn table(&self, k: usize, m: usize) -> Result<[F; 16]> {
        let id = self.table_groups[k - 1][m]
            .ok_or_else(|| Error::Structure(format!("unit {k}.{m} has no table")))?;
        let vals = self.store.values(id);
        let mut out = [F::zero(); 16];
        for (o, &l) in out.iter_mut().zip(vals) {
            *o = squash(l);
        }
        Ok(out)
    }

    /// Overwrites one wiring matrix so the cell for `source` dominates its
    /// softmax by `gap` (all other cells at zero).
    pub fn set_wire_one_hot(
        &mut self,
        k: usize,
        m: usize,
        p: usize,
        source: (usize, usize),
        gap: F,
    ) {
        let cols = self.layer_meta[k - 1].cols;
        let id = self.wire_groups[k - 1][m][p];
        let logits = self.store.values_mut(id);
        for x in logits.iter_mut() {
            *x = F::zero();
        }
        logits[source.0 * cols + source.1] = gap;
    }

    /// Overwrites one selector matrix the same way.
    pub fn set_selector_one_hot(&mut self, j: usize, source: (usize, usize), gap: F) {
        let meta = self.selector_meta.as_ref().expect("selector mode required");
        let idx = (source.0 - meta.row_base) * meta.cols + source.1;
        let id = self.selector_groups[j];
        let logits = self.store.values_mut(id);
        for x in logits.iter_mut() {
            *x = F::zero();
        }
        logits[idx] = gap;
    }

    /// Overwrites a unit's table logits to +/-magnitude matching the given
    /// Boolean table.
    pub fn set_table(&mut self, k: usize, m: usize, entries: &[bool; 16], magnitude: F) {
        let id = self.table_groups[k - 1][m].expect("unit has a table");
        let logits = self.store.values_mut(id);
        for (l, &b) in logits.iter_mut().zip(entries) {
            *l = if b { magnitude } else { -magnitude };
        }
    }

    /// Overwrites a LAB unit's attention logits one-hot on `slot`.
    pub fn set_attn_one_hot(&mut self, k: usize, m: usize, slot: usize, gap: F) {
        let id = self.attn_groups[k - 1][m].expect("unit has attention");
        let logits = self.store.values_mut(id);
        for x in logits.iter_mut() {
            *x = F::zero();
        }
        logits[slot] = gap;
    }

    /// Computes the soft outputs for one input vector. Inputs must lie in
    /// [0,1]; bits are passed as 0.0/1.0.
    pub fn forward(&self, x: &[F]) -> Result<Vec<F>> {
        let flat = self.forward_trace(x)?;
        self.select_outputs(&flat)
    }

    /// Forward pass returning the flat trace of all signals in source order:
    /// inputs, then each layer's unit outputs.
    pub fn forward_trace(&self, x: &[F]) -> Result<Vec<F>> {
        if x.len() != self.config.input_width {
            return Err(Error::Structure(format!(
                "expected {} inputs, got {}",
                self.config.input_width,
                x.len()
            )));
        }
        for &v in x {
            if v < F::zero() || v > F::one() {
                return Err(Error::InvalidInput(format!("input {v} outside [0,1]")));
            }
        }
        let arity = self.config.unit.arity();
        let mut flat: Vec<F> = x.to_vec();
        for k in 1..=self.config.layer_count() {
            let mut layer_out = Vec::with_capacity(self.config.layer_widths[k - 1]);
            for m in 0..self.config.layer_widths[k - 1] {
                let mut ports = [F::zero(); 4];
                for (p, port) in ports.iter_mut().take(arity).enumerate() {
                    *port = self.wire_input(k, m, p, &flat)?;
                }
                let out = match self.config.unit {
                    UnitKind::Aig => aig_forward(ports[0], ports[1]),
                    UnitKind::Lut => lut_forward(&self.table(k, m)?, &ports),
                    UnitKind::Lab => {
                        lab_forward(&self.table(k, m)?, &self.attn_probs(k, m)?, &ports)
                    }
                };
                layer_out.push(out);
            }
            flat.extend_from_slice(&layer_out);
        }
        Ok(flat)
    }

    /// Output designation over a completed forward trace.
    pub fn select_outputs(&self, flat: &[F]) -> Result<Vec<F>> {
        match self.config.output_mode {
            OutputMode::Hardwired => {
                let ell = self.config.layer_count();
                let base: usize = (0..ell).map(|l| self.config.width(l)).sum();
                Ok(flat[base..base + self.config.output_width].to_vec())
            }
            OutputMode::Selector | OutputMode::SelectorLastOnly => {
                let meta = self.selector_meta.as_ref().unwrap();
                let offset = flat.len() - meta.sources.len();
                let mut out = Vec::with_capacity(self.config.output_width);
                for j in 0..self.config.output_width {
                    let probs = self.selector_probs(j)?;
                    let mut acc = F::zero();
                    for (w, &o) in probs.iter().zip(flat[offset..].iter()) {
                        acc = acc + *w * o;
                    }
                    out.push(acc);
                }
                Ok(out)
            }
        }
    }

    /// Records everything shared across a batch: parameter leaves, all
    /// softmaxes, squashed tables.
    pub fn record_shared(&self, tape: &mut Tape<F>) -> Result<SharedNodes> {
        let staged = self.store.stage(tape);
        let arity = self.config.unit.arity();
        let mut port_sm = Vec::new();
        let mut tables = Vec::new();
        let mut alphas = Vec::new();
        let mut attn_sm = Vec::new();
        for k in 1..=self.config.layer_count() {
            let meta = &self.layer_meta[k - 1];
            let mut l_sm = Vec::new();
            let mut l_tab = Vec::new();
            let mut l_att = Vec::new();
            for m in 0..self.config.layer_widths[k - 1] {
                let mut ports = Vec::with_capacity(arity);
                for p in 0..arity {
                    let leaves = self.store.staged(&staged, self.wire_groups[k - 1][m][p]);
                    let gathered: Vec<Value> =
                        meta.sources.iter().map(|&(l, n)| leaves[l * meta.cols + n]).collect();
                    ports.push(tape.softmax(&gathered)?);
                }
                l_sm.push(ports);
                l_tab.push(match self.table_groups[k - 1][m] {
                    Some(id) => {
                        let leaves = self.store.staged(&staged, id);
                        Some(leaves.into_iter().map(|l| tape.sigmoid(l)).collect::<Vec<_>>())
                    }
                    None => None,
                });
                l_att.push(match self.attn_groups[k - 1][m] {
                    Some(id) => {
                        let leaves = self.store.staged(&staged, id);
                        let sm = tape.softmax(&leaves)?;
                        let a = [sm.probs[0], sm.probs[1], sm.probs[2]];
                        attn_sm.push(sm);
                        Some(a)
                    }
                    None => None,
                });
            }
            port_sm.push(l_sm);
            tables.push(l_tab);
            alphas.push(l_att);
        }
        let mut selector_sm = Vec::new();
        if let Some(meta) = &self.selector_meta {
            for j in 0..self.config.output_width {
                let leaves = self.store.staged(&staged, self.selector_groups[j]);
                let gathered: Vec<Value> = meta
                    .sources
                    .iter()
                    .map(|&(l, n)| leaves[(l - meta.row_base) * meta.cols + n])
                    .collect();
                selector_sm.push(tape.softmax(&gathered)?);
            }
        }
        Ok(SharedNodes { staged, port_sm, tables, alphas, attn_sm, selector_sm })
    }

    /// Records one example's forward pass against shared batch nodes,
    /// returning the output nodes.
    pub fn record_forward(
        &self,
        tape: &mut Tape<F>,
        shared: &SharedNodes,
        x: &[F],
    ) -> Result<Vec<Value>> {
        if x.len() != self.config.input_width {
            return Err(Error::Structure(format!(
                "expected {} inputs, got {}",
                self.config.input_width,
                x.len()
            )));
        }
        let arity = self.config.unit.arity();
        let mut flat: Vec<Value> = x.iter().map(|&v| tape.leaf(v)).collect();
        for k in 1..=self.config.layer_count() {
            let mut layer_out = Vec::with_capacity(self.config.layer_widths[k - 1]);
            for m in 0..self.config.layer_widths[k - 1] {
                let ports: Vec<Value> = (0..arity)
                    .map(|p| tape.dot(&shared.port_sm[k - 1][m][p].probs, &flat))
                    .collect();
                let out = match self.config.unit {
                    UnitKind::Aig => aig_record(tape, ports[0], ports[1]),
                    UnitKind::Lut => {
                        let table = shared.tables[k - 1][m].as_ref().unwrap();
                        let arr = [ports[0], ports[1], ports[2], ports[3]];
                        lut_record(tape, table, &arr)
                    }
                    UnitKind::Lab => {
                        let table = shared.tables[k - 1][m].as_ref().unwrap();
                        let alpha = shared.alphas[k - 1][m].as_ref().unwrap();
                        let arr = [ports[0], ports[1], ports[2], ports[3]];
                        lab_record(tape, table, alpha, &arr)
                    }
                };
                layer_out.push(out);
            }
            flat.extend_from_slice(&layer_out);
        }
        match self.config.output_mode {
            OutputMode::Hardwired => {
                let ell = self.config.layer_count();
                let base: usize = (0..ell).map(|l| self.config.width(l)).sum();
                Ok(flat[base..base + self.config.output_width].to_vec())
            }
            OutputMode::Selector | OutputMode::SelectorLastOnly => {
                let meta = self.selector_meta.as_ref().unwrap();
                let offset = flat.len() - meta.sources.len();
                let tail = flat[offset..].to_vec();
                Ok((0..self.config.output_width)
                    .map(|j| tape.dot(&shared.selector_sm[j].probs, &tail))
                    .collect())
            }
        }
    }

    /// Entropy and top probability of every softmax choice in the network,
    /// for residual-sharpness reporting.
    pub fn choice_sharpness(&self) -> Result<Vec<ChoiceSharpness>> {
        let mut out = Vec::new();
        let mut push = |name: String, probs: &[F]| {
            let entropy = to_f64(crate::diff::entropy_slice(probs));
            let top = probs.iter().fold(F::zero(), |a, &b| if b > a { b } else { a });
            out.push(ChoiceSharpness { name, entropy, top: to_f64(top) });
        };
        for k in 1..=self.config.layer_count() {
            for m in 0..self.config.layer_widths[k - 1] {
                for p in 0..self.config.unit.arity() {
                    push(format!("wire.{k}.{m}.{p}"), &self.port_probs(k, m, p)?);
                }
                if self.attn_groups[k - 1][m].is_some() {
                    push(format!("unit.{k}.{m}.attn"), &self.attn_probs(k, m)?);
                }
            }
        }
        if self.selector_meta.is_some() {
            for j in 0..self.config.output_width {
                push(format!("selector.{j}"), &self.selector_probs(j)?);
            }
        }
        Ok(out)
    }

    /// Serialises config and every parameter array into the dump document.
    pub fn dump(&self) -> NetworkDump {
        let mut wiring = Vec::new();
        let mut units = Vec::new();
        for k in 1..=self.config.layer_count() {
            let meta = &self.layer_meta[k - 1];
            for m in 0..self.config.layer_widths[k - 1] {
                for p in 0..self.config.unit.arity() {
                    let id = self.wire_groups[k - 1][m][p];
                    wiring.push(WiringDump {
                        k,
                        m,
                        p,
                        rows: k,
                        cols: meta.cols,
                        logits: self.store.values(id).iter().map(|&x| to_f64(x)).collect(),
                    });
                }
                let table = self.table_groups[k - 1][m]
                    .map(|id| self.store.values(id).iter().map(|&x| to_f64(x)).collect());
                let attn = self.attn_groups[k - 1][m]
                    .map(|id| self.store.values(id).iter().map(|&x| to_f64(x)).collect());
                if table.is_some() || attn.is_some() {
                    units.push(UnitDump { k, m, table, attn });
                }
            }
        }
        let selector = self.selector_meta.as_ref().map(|meta| {
            (0..self.config.output_width)
                .map(|j| SelectorDump {
                    j,
                    rows: meta.rows,
                    cols: meta.cols,
                    logits: self
                        .store
                        .values(self.selector_groups[j])
                        .iter()
                        .map(|&x| to_f64(x))
                        .collect(),
                })
                .collect()
        });
        NetworkDump {
            format: DUMP_FORMAT.to_string(),
            config: self.config.clone(),
            wiring,
            units,
            selector,
        }
    }

    /// Rebuilds a network from a dump. Optimiser state starts fresh; dumps
    /// exist for extraction and inspection, not for resuming training.
    pub fn from_dump(dump: &NetworkDump) -> Result<SoftNetwork<F>> {
        if dump.format != DUMP_FORMAT {
            return Err(Error::InvalidInput(format!(
                "unsupported dump format {:?}",
                dump.format
            )));
        }
        let mut net: SoftNetwork<F> = build_network(&dump.config, 0)?;
        let expected_wiring: usize =
            dump.config.layer_widths.iter().map(|w| w * dump.config.unit.arity()).sum();
        if dump.wiring.len() != expected_wiring {
            return Err(Error::Structure(format!(
                "dump lists {} wiring matrices, expected {expected_wiring}",
                dump.wiring.len()
            )));
        }
        for wd in &dump.wiring {
            if wd.k == 0 || wd.k > net.config.layer_count() {
                return Err(Error::Structure(format!("wiring entry for unknown layer {}", wd.k)));
            }
            let id = net.wire_groups[wd.k - 1]
                .get(wd.m)
                .and_then(|ports| ports.get(wd.p))
                .copied()
                .ok_or_else(|| {
                    Error::Structure(format!(
                        "wiring entry for unknown port {}.{}.{}",
                        wd.k, wd.m, wd.p
                    ))
                })?;
            copy_into(net.store.values_mut(id), &wd.logits, || {
                format!("wiring {}.{}.{}", wd.k, wd.m, wd.p)
            })?;
        }
        for ud in &dump.units {
            if ud.k == 0 || ud.k > net.config.layer_count() {
                return Err(Error::Structure(format!("unit entry for unknown layer {}", ud.k)));
            }
            if let Some(t) = &ud.table {
                let id = net.table_groups[ud.k - 1]
                    .get(ud.m)
                    .copied()
                    .flatten()
                    .ok_or_else(|| {
                        Error::Structure(format!("unit {}.{} takes no table", ud.k, ud.m))
                    })?;
                copy_into(net.store.values_mut(id), t, || format!("table {}.{}", ud.k, ud.m))?;
            }
            if let Some(a) = &ud.attn {
                let id = net.attn_groups[ud.k - 1]
                    .get(ud.m)
                    .copied()
                    .flatten()
                    .ok_or_else(|| {
                        Error::Structure(format!("unit {}.{} takes no attention", ud.k, ud.m))
                    })?;
                copy_into(net.store.values_mut(id), a, || format!("attention {}.{}", ud.k, ud.m))?;
            }
        }
        match (&dump.selector, &net.selector_meta) {
            (None, None) => {}
            (Some(sel), Some(_)) => {
                if sel.len() != net.config.output_width {
                    return Err(Error::Structure(format!(
                        "dump lists {} selector matrices, expected {}",
                        sel.len(),
                        net.config.output_width
                    )));
                }
                for sd in sel {
                    let id = *net.selector_groups.get(sd.j).ok_or_else(|| {
                        Error::Structure(format!("selector entry for unknown output {}", sd.j))
                    })?;
                    copy_into(net.store.values_mut(id), &sd.logits, || {
                        format!("selector {}", sd.j)
                    })?;
                }
            }
            (Some(_), None) => {
                return Err(Error::Structure(
                    "dump carries selector logits but the config is hardwired".into(),
                ))
            }
            (None, Some(_)) => {
                return Err(Error::Structure(
                    "selector-mode dump is missing its selector logits".into(),
                ))
            }
        }
        Ok(net)
    }
}

fn copy_into<F: Real>(
    dst: &mut [F],
    src: &[f64],
    what: impl Fn() -> String,
) -> Result<()> {
    if dst.len() != src.len() {
        return Err(Error::Structure(format!(
            "{} has {} logits, expected {}",
            what(),
            src.len(),
            dst.len()
        )));
    }
    for (d, &s) in dst.iter_mut().zip(src) {
        *d = real(s);
    }
    Ok(())
}

pub const DUMP_FORMAT: &str = "softsynth-dump-v1";

/// Flat serialisation of one wiring matrix, row-major, masked cells
/// included.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WiringDump {
    pub k: usize,
    pub m: usize,
    pub p: usize,
    pub rows: usize,
    pub cols: usize,
    pub logits: Vec<f64>,
}

/// Learned per-unit parameters (absent fields for parameter-free kinds).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UnitDump {
    pub k: usize,
    pub m: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attn: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SelectorDump {
    pub j: usize,
    pub rows: usize,
    pub cols: usize,
    pub logits: Vec<f64>,
}

/// Complete parameter dump of one network: the interchange format between
/// training and extraction.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NetworkDump {
    pub format: String,
    pub config: NetworkConfig,
    pub wiring: Vec<WiringDump>,
    pub units: Vec<UnitDump>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selector: Option<Vec<SelectorDump>>,
}
