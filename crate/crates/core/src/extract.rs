//! Discrete readout of a sharpened network.
//!
//! A wire is present when its softmax entry exceeds a threshold tau in
//! (0.5, 1), which makes the chosen source unique. Extraction walks
//! backward from the designated outputs, keeps every unit that feeds them,
//! hardens each kept unit's parameters into a Boolean function, and records
//! only the ports that function actually reads. The result simulates as
//! pure Boolean logic and can be verified against a dataset or exported.
//!
//! Signal order matches the trainer: input terminal i carries line i of the
//! input vector, output j produces line j of the output vector.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::dataset::{BitVector, TaskDataset};
use crate::error::{Error, Result};
use crate::network::{OutputMode, SoftNetwork};
use crate::scalar::{to_f64, Real};
use crate::units::{harden_lab, harden_lut, HardUnit, UnitKind};

pub const DEFAULT_TAU: f64 = 0.95;

/// Extraction knobs.
#[derive(Clone, Debug)]
pub struct ExtractOptions {
    /// Wire-presence threshold, exclusive bounds (0.5, 1).
    pub tau: f64,
    /// Resolve sub-threshold ports by argmax (with a warning) instead of
    /// failing.
    pub argmax_fallback: bool,
    /// Keep every unit with an outgoing present wire, not only the units
    /// backward-reachable from the outputs.
    pub keep_all_wired: bool,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        ExtractOptions { tau: DEFAULT_TAU, argmax_fallback: false, keep_all_wired: false }
    }
}

/// The set of above-threshold wires of a network. Because tau > 0.5, each
/// destination port has at most one present source.
#[derive(Clone, Debug)]
pub struct WirePresence {
    pub tau: f64,
    present: BTreeMap<(usize, usize, usize), (usize, usize)>,
}

impl WirePresence {
    /// The unique present source of port p of unit m in layer k, if any.
    pub fn source_of(&self, k: usize, m: usize, p: usize) -> Option<(usize, usize)> {
        self.present.get(&(k, m, p)).copied()
    }

    pub fn is_present(&self, src: (usize, usize), dst: (usize, usize), port: usize) -> bool {
        self.source_of(dst.0, dst.1, port) == Some(src)
    }

    /// All present wires as (source, destination unit, destination port).
    pub fn wires(
        &self,
    ) -> impl Iterator<Item = ((usize, usize), (usize, usize), usize)> + '_ {
        self.present.iter().map(|(&(k, m, p), &src)| (src, (k, m), p))
    }

    pub fn len(&self) -> usize {
        self.present.len()
    }

    pub fn is_empty(&self) -> bool {
        self.present.is_empty()
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.5 && tau < 1.0) {
        return Err(Error::Config(format!("threshold {tau} outside (0.5, 1)")));
    }
    Ok(())
}

/// Thresholds every wiring softmax of the network at tau.
pub fn wire_presence<F: Real>(net: &SoftNetwork<F>, tau: f64) -> Result<WirePresence> {
    check_tau(tau)?;
    let mut present = BTreeMap::new();
    for k in 1..=net.config.layer_count() {
        for m in 0..net.config.layer_widths[k - 1] {
            for p in 0..net.config.unit.arity() {
                let probs = net.port_probs(k, m, p)?;
                for (i, &w) in probs.iter().enumerate() {
                    if to_f64(w) > tau {
                        present.insert((k, m, p), net.sources(k)[i]);
                        break;
                    }
                }
            }
        }
    }
    Ok(WirePresence { tau, present })
}

/// One kept unit with its hardened function and the sources of the ports
/// that function reads.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtUnit {
    pub layer: usize,
    pub index: usize,
    pub op: HardUnit,
    pub ports: Vec<(usize, usize)>,
}

/// A discrete circuit read out of a network: units, wiring, and the source
/// of each output. Source (0, i) is input terminal i.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtractedCircuit {
    pub kind: UnitKind,
    pub input_width: usize,
    pub output_width: usize,
    pub tau: f64,
    /// Kept units in ascending (layer, index) order.
    pub units: Vec<ExtUnit>,
    /// outputs[j] is the source feeding output j.
    pub outputs: Vec<(usize, usize)>,
    pub warnings: Vec<String>,
}

/// Stable textual name of a source: `x<i>` for inputs, `u<layer>_<index>`
/// for units.
pub fn node_id(node: (usize, usize)) -> String {
    if node.0 == 0 {
        format!("x{}", node.1)
    } else {
        format!("u{}_{}", node.0, node.1)
    }
}

fn parse_node_id(s: &str) -> Option<(usize, usize)> {
    if let Some(i) = s.strip_prefix('x') {
        return i.parse().ok().map(|n| (0, n));
    }
    let body = s.strip_prefix('u')?;
    let (k, m) = body.split_once('_')?;
    let k: usize = k.parse().ok()?;
    if k == 0 {
        return None;
    }
    Some((k, m.parse().ok()?))
}

impl ExtractedCircuit {
    pub fn unit(&self, layer: usize, index: usize) -> Option<&ExtUnit> {
        self.units.iter().find(|u| u.layer == layer && u.index == index)
    }

    /// Every wire as (source, destination unit, destination port).
    pub fn wires(&self) -> Vec<((usize, usize), (usize, usize), usize)> {
        let mut out = Vec::new();
        for u in &self.units {
            for (p, &src) in u.ports.iter().enumerate() {
                out.push((src, (u.layer, u.index), p));
            }
        }
        out
    }

    /// Structural checks: port counts match the hardened ops, every source
    /// exists, and wires only run from lower to strictly higher layers.
    pub fn validate(&self) -> Result<()> {
        if self.outputs.len() != self.output_width {
            return Err(Error::Structure(format!(
                "{} outputs designated, expected {}",
                self.outputs.len(),
                self.output_width
            )));
        }
        let exists = |node: (usize, usize)| -> bool {
            if node.0 == 0 {
                node.1 < self.input_width
            } else {
                self.unit(node.0, node.1).is_some()
            }
        };
        let mut seen = BTreeMap::new();
        for u in &self.units {
            if u.layer == 0 {
                return Err(Error::Structure(format!(
                    "unit {} claims the input layer",
                    node_id((u.layer, u.index))
                )));
            }
            if seen.insert((u.layer, u.index), ()).is_some() {
                return Err(Error::Structure(format!(
                    "duplicate unit {}",
                    node_id((u.layer, u.index))
                )));
            }
            if u.ports.len() != u.op.used_ports() {
                return Err(Error::Structure(format!(
                    "unit {} wires {} ports but its function reads {}",
                    node_id((u.layer, u.index)),
                    u.ports.len(),
                    u.op.used_ports()
                )));
            }
            for &src in &u.ports {
                if src.0 >= u.layer {
                    return Err(Error::Structure(format!(
                        "wire {} -> {} does not go forward",
                        node_id(src),
                        node_id((u.layer, u.index))
                    )));
                }
                if !exists(src) {
                    return Err(Error::Structure(format!("unknown source {}", node_id(src))));
                }
            }
        }
        for (j, &src) in self.outputs.iter().enumerate() {
            if !exists(src) {
                return Err(Error::Structure(format!(
                    "output {j} reads unknown source {}",
                    node_id(src)
                )));
            }
        }
        Ok(())
    }
}

/// Reads the discrete circuit out of a (sufficiently sharp) network.
pub fn extract<F: Real>(
    net: &SoftNetwork<F>,
    opts: &ExtractOptions,
) -> Result<ExtractedCircuit> {
    let presence = wire_presence(net, opts.tau)?;
    let mut warnings = Vec::new();

    let outputs: Vec<(usize, usize)> = match net.config.output_mode {
        OutputMode::Hardwired => {
            let ell = net.config.layer_count();
            (0..net.config.output_width).map(|j| (ell, j)).collect()
        }
        OutputMode::Selector | OutputMode::SelectorLastOnly => {
            let mut out = Vec::with_capacity(net.config.output_width);
            for j in 0..net.config.output_width {
                let probs: Vec<f64> =
                    net.selector_probs(j)?.iter().map(|&w| to_f64(w)).collect();
                let (best, &top) = probs
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.total_cmp(b.1))
                    .expect("selector has sources");
                if top > opts.tau {
                    out.push(net.selector_sources()[best]);
                } else if opts.argmax_fallback {
                    warnings.push(format!(
                        "output {j}: top selector entry {top:.6} is below tau {}, taking the argmax",
                        opts.tau
                    ));
                    out.push(net.selector_sources()[best]);
                } else {
                    return Err(Error::AmbiguousOutput { output: j, top, tau: opts.tau });
                }
            }
            out
        }
    };

    let mut kept: BTreeMap<(usize, usize), ExtUnit> = BTreeMap::new();
    let mut stack: Vec<(usize, usize)> =
        outputs.iter().copied().filter(|s| s.0 > 0).collect();
    if opts.keep_all_wired {
        // Literal variant: every unit with an outgoing present wire stays,
        // whether or not anything downstream still reads it.
        stack.extend(presence.wires().map(|(src, _, _)| src).filter(|s| s.0 > 0));
    }

    while let Some((k, m)) = stack.pop() {
        if kept.contains_key(&(k, m)) {
            continue;
        }
        let (op, unit_warnings) = match net.config.unit {
            UnitKind::Aig => (HardUnit::Nand, Vec::new()),
            UnitKind::Lut => harden_lut(&net.table(k, m)?),
            UnitKind::Lab => harden_lab(&net.table(k, m)?, &net.attn_probs(k, m)?),
        };
        warnings.extend(
            unit_warnings.into_iter().map(|w| format!("unit {}: {w}", node_id((k, m)))),
        );
        let mut ports = Vec::with_capacity(op.used_ports());
        for p in 0..op.used_ports() {
            let src = match presence.source_of(k, m, p) {
                Some(src) => src,
                None => {
                    let probs: Vec<f64> =
                        net.port_probs(k, m, p)?.iter().map(|&w| to_f64(w)).collect();
                    let mut ranked: Vec<(usize, f64)> =
                        probs.iter().copied().enumerate().collect();
                    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
                    let (best, top1) = ranked[0];
                    let top2 = ranked.get(1).map_or(0.0, |r| r.1);
                    if opts.argmax_fallback {
                        warnings.push(format!(
                            "port {}:{p}: top entry {top1:.6} is below tau {}, taking the argmax",
                            node_id((k, m)),
                            opts.tau
                        ));
                        net.sources(k)[best]
                    } else {
                        return Err(Error::AmbiguousWiring {
                            layer: k,
                            unit: m,
                            port: p,
                            top1,
                            top2,
                            tau: opts.tau,
                        });
                    }
                }
            };
            ports.push(src);
            if src.0 > 0 {
                stack.push(src);
            }
        }
        kept.insert((k, m), ExtUnit { layer: k, index: m, op, ports });
    }

    let circuit = ExtractedCircuit {
        kind: net.config.unit,
        input_width: net.config.input_width,
        output_width: net.config.output_width,
        tau: opts.tau,
        units: kept.into_values().collect(),
        outputs,
        warnings,
    };
    circuit.validate()?;
    Ok(circuit)
}

/// Boolean evaluation of the circuit, in layer order.
pub fn simulate(circuit: &ExtractedCircuit, x: &BitVector) -> Result<BitVector> {
    if x.len() != circuit.input_width {
        return Err(Error::Structure(format!(
            "expected {} input bits, got {}",
            circuit.input_width,
            x.len()
        )));
    }
    let mut values: BTreeMap<(usize, usize), bool> = BTreeMap::new();
    for i in 0..circuit.input_width {
        values.insert((0, i), x.line(i));
    }
    for u in &circuit.units {
        let ins: Vec<bool> = u.ports.iter().map(|s| values[s]).collect();
        values.insert((u.layer, u.index), u.op.eval(&ins));
    }
    let mut out = BitVector::zeros(circuit.output_width);
    for (j, src) in circuit.outputs.iter().enumerate() {
        out.set_line(j, values[src]);
    }
    Ok(out)
}

/// The soft network's outputs thresholded at 0.5 into a bit vector.
pub fn rounded_forward<F: Real>(net: &SoftNetwork<F>, x: &BitVector) -> Result<BitVector> {
    let xs: Vec<F> =
        x.to_lines().iter().map(|&b| if b { F::one() } else { F::zero() }).collect();
    let y = net.forward(&xs)?;
    let mut out = BitVector::zeros(y.len());
    for (j, &v) in y.iter().enumerate() {
        out.set_line(j, to_f64(v) >= 0.5);
    }
    Ok(out)
}

/// True iff the circuit and the rounded soft network agree on every binary
/// input combination.
pub fn matches_rounded_soft<F: Real>(
    net: &SoftNetwork<F>,
    circuit: &ExtractedCircuit,
) -> Result<bool> {
    let wi = circuit.input_width;
    if wi > 24 {
        return Err(Error::InvalidInput(format!(
            "exhaustive comparison over {wi} inputs is unreasonable"
        )));
    }
    for v in 0..(1u64 << wi) {
        let x = BitVector::from_unsigned(v, wi)?;
        if simulate(circuit, &x)? != rounded_forward(net, &x)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Outcome of checking a circuit against a dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct VerifyReport {
    /// One flag per example, in dataset order.
    pub matches: Vec<bool>,
    pub signal_accuracy: f64,
    pub example_accuracy: f64,
    /// Full-equivalence verdict; only a completeness-100 dataset can settle
    /// it.
    pub equivalence: Option<bool>,
}

/// Simulates the circuit on every dataset example and scores the matches.
pub fn verify(circuit: &ExtractedCircuit, dataset: &TaskDataset) -> Result<VerifyReport> {
    if dataset.spec.input_width != circuit.input_width
        || dataset.spec.output_width != circuit.output_width
    {
        return Err(Error::Structure(format!(
            "dataset is {}->{} bits but the circuit is {}->{}",
            dataset.spec.input_width,
            dataset.spec.output_width,
            circuit.input_width,
            circuit.output_width
        )));
    }
    let mut matches = Vec::with_capacity(dataset.examples.len());
    let mut bit_hits = 0usize;
    for (x, t) in &dataset.examples {
        let y = simulate(circuit, x)?;
        let mut all = true;
        for j in 0..circuit.output_width {
            if y.line(j) == t.line(j) {
                bit_hits += 1;
            } else {
                all = false;
            }
        }
        matches.push(all);
    }
    let n = dataset.examples.len();
    let example_hits = matches.iter().filter(|&&m| m).count();
    Ok(VerifyReport {
        signal_accuracy: bit_hits as f64 / (n * circuit.output_width) as f64,
        example_accuracy: example_hits as f64 / n as f64,
        equivalence: (dataset.completeness == 100).then(|| example_hits == n),
        matches,
    })
}

fn config_token(op: &HardUnit) -> String {
    match op {
        HardUnit::Nand => "nand".into(),
        HardUnit::AdderSum => "sum".into(),
        HardUnit::AdderCarry => "carry".into(),
        HardUnit::Table(t) => {
            let bits: String = t.iter().map(|&b| if b { '1' } else { '0' }).collect();
            format!("table:{bits}")
        }
    }
}

fn parse_config_token(s: &str) -> Option<HardUnit> {
    match s {
        "nand" => Some(HardUnit::Nand),
        "sum" => Some(HardUnit::AdderSum),
        "carry" => Some(HardUnit::AdderCarry),
        _ => {
            let bits = s.strip_prefix("table:")?;
            if bits.len() != 16 {
                return None;
            }
            let mut t = [false; 16];
            for (i, c) in bits.chars().enumerate() {
                t[i] = match c {
                    '0' => false,
                    '1' => true,
                    _ => return None,
                };
            }
            Some(HardUnit::Table(t))
        }
    }
}

/// Structured-text netlist.
///
/// Line schema:
///   `circuit <kind> inputs <w_i> outputs <w_o> tau <tau>`
///   `unit <id> <kind> <config>` with config nand | sum | carry |
///     table:<16 bits, entry 0 first>
///   `wire <src> -> <dst>:<port>`
///   `output <j> <src>`
/// Ids are `x<i>` for inputs and `u<layer>_<index>` for units.
pub fn netlist(circuit: &ExtractedCircuit) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "circuit {} inputs {} outputs {} tau {}",
        circuit.kind.name(),
        circuit.input_width,
        circuit.output_width,
        circuit.tau
    )
    .unwrap();
    for u in &circuit.units {
        writeln!(
            out,
            "unit {} {} {}",
            node_id((u.layer, u.index)),
            circuit.kind.name(),
            config_token(&u.op)
        )
        .unwrap();
    }
    for (src, dst, port) in circuit.wires() {
        writeln!(out, "wire {} -> {}:{}", node_id(src), node_id(dst), port).unwrap();
    }
    for (j, &src) in circuit.outputs.iter().enumerate() {
        writeln!(out, "output {j} {}", node_id(src)).unwrap();
    }
    out
}

/// Parses the structured-text netlist back into a circuit.
pub fn parse_netlist(text: &str) -> Result<ExtractedCircuit> {
    let mut header: Option<(UnitKind, usize, usize, f64)> = None;
    let mut units: BTreeMap<(usize, usize), HardUnit> = BTreeMap::new();
    let mut ports: BTreeMap<(usize, usize), BTreeMap<usize, (usize, usize)>> = BTreeMap::new();
    let mut outputs: BTreeMap<usize, (usize, usize)> = BTreeMap::new();

    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let err = |msg: String| Error::Parse { line: lineno, msg };
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tok: Vec<&str> = line.split_whitespace().collect();
        match tok[0] {
            "circuit" => {
                if header.is_some() {
                    return Err(err("duplicate circuit header".into()));
                }
                if tok.len() != 8 || tok[2] != "inputs" || tok[4] != "outputs" || tok[6] != "tau"
                {
                    return Err(err(format!("malformed header {line:?}")));
                }
                let kind = UnitKind::parse(tok[1]).map_err(|e| err(e.to_string()))?;
                let wi = tok[3].parse().map_err(|_| err(format!("bad input width {:?}", tok[3])))?;
                let wo =
                    tok[5].parse().map_err(|_| err(format!("bad output width {:?}", tok[5])))?;
                let tau = tok[7].parse().map_err(|_| err(format!("bad tau {:?}", tok[7])))?;
                header = Some((kind, wi, wo, tau));
            }
            "unit" => {
                let (kind, ..) = header.ok_or_else(|| err("unit before header".into()))?;
                if tok.len() != 4 {
                    return Err(err(format!("malformed unit line {line:?}")));
                }
                let id = parse_node_id(tok[1])
                    .filter(|n| n.0 > 0)
                    .ok_or_else(|| err(format!("bad unit id {:?}", tok[1])))?;
                if tok[2] != kind.name() {
                    return Err(err(format!(
                        "unit kind {:?} clashes with circuit kind {}",
                        tok[2],
                        kind.name()
                    )));
                }
                let op = parse_config_token(tok[3])
                    .ok_or_else(|| err(format!("bad unit config {:?}", tok[3])))?;
                if units.insert(id, op).is_some() {
                    return Err(err(format!("duplicate unit {}", tok[1])));
                }
            }
            "wire" => {
                if tok.len() != 4 || tok[2] != "->" {
                    return Err(err(format!("malformed wire line {line:?}")));
                }
                let src = parse_node_id(tok[1])
                    .ok_or_else(|| err(format!("bad source id {:?}", tok[1])))?;
                let (dst_id, port) = tok[3]
                    .split_once(':')
                    .ok_or_else(|| err(format!("wire destination {:?} lacks a port", tok[3])))?;
                let dst = parse_node_id(dst_id)
                    .filter(|n| n.0 > 0)
                    .ok_or_else(|| err(format!("bad destination id {dst_id:?}")))?;
                let port: usize =
                    port.parse().map_err(|_| err(format!("bad port {port:?}")))?;
                if ports.entry(dst).or_default().insert(port, src).is_some() {
                    return Err(err(format!("port {}:{port} wired twice", dst_id)));
                }
            }
            "output" => {
                if tok.len() != 3 {
                    return Err(err(format!("malformed output line {line:?}")));
                }
                let j: usize =
                    tok[1].parse().map_err(|_| err(format!("bad output index {:?}", tok[1])))?;
                let src = parse_node_id(tok[2])
                    .ok_or_else(|| err(format!("bad source id {:?}", tok[2])))?;
                if outputs.insert(j, src).is_some() {
                    return Err(err(format!("output {j} designated twice")));
                }
            }
            other => return Err(err(format!("unknown directive {other:?}"))),
        }
    }

    let (kind, input_width, output_width, tau) =
        header.ok_or(Error::Parse { line: 1, msg: "missing circuit header".into() })?;
    let mut built = Vec::new();
    for (&(k, m), op) in &units {
        let mut wired = ports.remove(&(k, m)).unwrap_or_default();
        let mut list = Vec::with_capacity(op.used_ports());
        for p in 0..op.used_ports() {
            list.push(wired.remove(&p).ok_or_else(|| {
                Error::Structure(format!("port {}:{p} is not wired", node_id((k, m))))
            })?);
        }
        if let Some((&p, _)) = wired.iter().next() {
            return Err(Error::Structure(format!(
                "port {}:{p} is wired but {} reads only {} ports",
                node_id((k, m)),
                node_id((k, m)),
                op.used_ports()
            )));
        }
        built.push(ExtUnit { layer: k, index: m, op: op.clone(), ports: list });
    }
    if let Some((&(k, m), _)) = ports.iter().next() {
        return Err(Error::Structure(format!("wires into undeclared unit {}", node_id((k, m)))));
    }
    let mut out_list = Vec::with_capacity(output_width);
    for j in 0..output_width {
        out_list.push(*outputs.get(&j).ok_or_else(|| {
            Error::Structure(format!("output {j} is not designated"))
        })?);
    }
    if outputs.len() != output_width {
        return Err(Error::Structure(format!(
            "{} outputs designated, expected {output_width}",
            outputs.len()
        )));
    }
    let circuit = ExtractedCircuit {
        kind,
        input_width,
        output_width,
        tau,
        units: built,
        outputs: out_list,
        warnings: Vec::new(),
    };
    circuit.validate()?;
    Ok(circuit)
}

/// DOT digraph of the circuit: inputs as circles, units as boxes labelled
/// with their function, one plaintext marker per output, layers ranked left
/// to right.
pub fn to_dot(circuit: &ExtractedCircuit) -> String {
    let mut out = String::from("digraph circuit {\n  rankdir=LR;\n");
    for i in 0..circuit.input_width {
        writeln!(out, "  x{i} [shape=circle];").unwrap();
    }
    for u in &circuit.units {
        writeln!(
            out,
            "  {} [shape=box label=\"{}\\n{}\"];",
            node_id((u.layer, u.index)),
            node_id((u.layer, u.index)),
            config_token(&u.op)
        )
        .unwrap();
    }
    for (j, _) in circuit.outputs.iter().enumerate() {
        writeln!(out, "  out{j} [shape=plaintext];").unwrap();
    }
    for (src, dst, port) in circuit.wires() {
        writeln!(out, "  {} -> {} [label=\"{port}\"];", node_id(src), node_id(dst)).unwrap();
    }
    for (j, &src) in circuit.outputs.iter().enumerate() {
        writeln!(out, "  {} -> out{j};", node_id(src)).unwrap();
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_task, TaskKind, TaskSpec};
    use crate::network::{build_network, NetworkConfig};
    use proptest::prelude::*;

    fn cfg(
        unit: UnitKind,
        widths: &[usize],
        wi: usize,
        wo: usize,
        mode: OutputMode,
    ) -> NetworkConfig {
        NetworkConfig {
            unit,
            layer_widths: widths.to_vec(),
            input_width: wi,
            output_width: wo,
            output_mode: mode,
        }
    }

    #[test]
    fn presence_respects_threshold_boundaries() {
        let c = cfg(UnitKind::Aig, &[1], 2, 1, OutputMode::Hardwired);
        let mut net = build_network::<f64>(&c, 1).unwrap();
        // ln 24 over 0 puts softmax entry 0 at exactly 24/25 = 0.96.
        net.store
            .values_mut(net.wire_group(1, 0, 0))
            .copy_from_slice(&[3.1780538303479458, 0.0]);
        let p = net.port_probs(1, 0, 0).unwrap()[0];
        assert!((p - 0.96).abs() < 1e-12, "entry {p}");
        assert_eq!(wire_presence(&net, 0.95).unwrap().source_of(1, 0, 0), Some((0, 0)));
        assert_eq!(wire_presence(&net, 0.97).unwrap().source_of(1, 0, 0), None);

        // Uniform logits: no entry clears any valid tau.
        net.set_wire_one_hot(1, 0, 1, (0, 0), 0.0);
        assert_eq!(wire_presence(&net, 0.95).unwrap().source_of(1, 0, 1), None);

        // One-hot logits: exactly one present source per port.
        net.set_wire_one_hot(1, 0, 1, (0, 1), 40.0);
        let wp = wire_presence(&net, 0.95).unwrap();
        assert!(wp.is_present((0, 1), (1, 0), 1));
        assert!(!wp.is_present((0, 0), (1, 0), 1));

        assert!(wire_presence(&net, 0.5).is_err());
        assert!(wire_presence(&net, 1.0).is_err());
    }

    #[test]
    fn depth_one_extraction_keeps_final_layer() {
        let c = cfg(UnitKind::Aig, &[2], 2, 2, OutputMode::Hardwired);
        let mut net = build_network::<f64>(&c, 1).unwrap();
        for m in 0..2 {
            for p in 0..2 {
                net.set_wire_one_hot(1, m, p, (0, m), 40.0);
            }
        }
        let circuit = extract(&net, &ExtractOptions::default()).unwrap();
        assert_eq!(circuit.units.len(), 2);
        assert_eq!(circuit.wires().len(), 4);
        assert_eq!(circuit.outputs, vec![(1, 0), (1, 1)]);
        // NAND(x,x) per output: the circuit computes NOT.
        let y = simulate(&circuit, &"10".parse().unwrap()).unwrap();
        assert_eq!(y.to_string(), "01");
    }

    #[test]
    fn units_feeding_nothing_are_pruned() {
        let c = cfg(UnitKind::Aig, &[2, 1], 2, 1, OutputMode::Hardwired);
        let mut net = build_network::<f64>(&c, 1).unwrap();
        // Layer 2 ignores layer 1 entirely and reads the inputs.
        net.set_wire_one_hot(2, 0, 0, (0, 0), 40.0);
        net.set_wire_one_hot(2, 0, 1, (0, 1), 40.0);
        for m in 0..2 {
            for p in 0..2 {
                net.set_wire_one_hot(1, m, p, (0, 0), 40.0);
            }
        }
        let circuit = extract(&net, &ExtractOptions::default()).unwrap();
        assert_eq!(circuit.units.len(), 1);
        assert_eq!(circuit.units[0].layer, 2);

        // Layer-1 units source no present wire either, so even the literal
        // keep-all-wired variant drops them here.
        let all = extract(
            &net,
            &ExtractOptions { keep_all_wired: true, ..Default::default() },
        )
        .unwrap();
        assert_eq!(all.units.len(), 1);
    }

    #[test]
    fn keep_all_wired_retains_units_with_outgoing_wires() {
        let c = cfg(UnitKind::Aig, &[1, 1, 1], 2, 1, OutputMode::Hardwired);
        let mut net = build_network::<f64>(&c, 1).unwrap();
        // Output unit reads the inputs; (2,0) reads (1,0); nothing reads
        // (2,0).
        net.set_wire_one_hot(3, 0, 0, (0, 0), 40.0);
        net.set_wire_one_hot(3, 0, 1, (0, 1), 40.0);
        net.set_wire_one_hot(2, 0, 0, (1, 0), 40.0);
        net.set_wire_one_hot(2, 0, 1, (1, 0), 40.0);
        net.set_wire_one_hot(1, 0, 0, (0, 0), 40.0);
        net.set_wire_one_hot(1, 0, 1, (0, 1), 40.0);

        let pruned = extract(&net, &ExtractOptions::default()).unwrap();
        assert_eq!(pruned.units.len(), 1);
        assert_eq!(pruned.units[0].layer, 3);

        // (1,0) sources the present wire into (2,0), so the literal variant
        // keeps it; (2,0) itself still sources nothing and is dropped.
        let all = extract(
            &net,
            &ExtractOptions { keep_all_wired: true, ..Default::default() },
        )
        .unwrap();
        let kept: Vec<(usize, usize)> =
            all.units.iter().map(|u| (u.layer, u.index)).collect();
        assert_eq!(kept, vec![(1, 0), (3, 0)]);
        all.validate().unwrap();
    }

    fn xor_net() -> SoftNetwork<f64> {
        let c = cfg(UnitKind::Aig, &[1, 2, 1], 2, 1, OutputMode::Hardwired);
        let mut net = build_network::<f64>(&c, 5).unwrap();
        let g = 40.0;
        net.set_wire_one_hot(1, 0, 0, (0, 0), g);
        net.set_wire_one_hot(1, 0, 1, (0, 1), g);
        net.set_wire_one_hot(2, 0, 0, (0, 0), g);
        net.set_wire_one_hot(2, 0, 1, (1, 0), g);
        net.set_wire_one_hot(2, 1, 0, (0, 1), g);
        net.set_wire_one_hot(2, 1, 1, (1, 0), g);
        net.set_wire_one_hot(3, 0, 0, (2, 0), g);
        net.set_wire_one_hot(3, 0, 1, (2, 1), g);
        net
    }

    #[test]
    fn nand_xor_extraction_end_to_end() {
        let net = xor_net();
        let circuit = extract(&net, &ExtractOptions::default()).unwrap();
        assert_eq!(circuit.units.len(), 4);
        assert_eq!(circuit.wires().len(), 8);
        assert!(circuit.warnings.is_empty());

        for v in 0..4u64 {
            let x = BitVector::from_unsigned(v, 2).unwrap();
            let want = x.line(0) ^ x.line(1);
            let y = simulate(&circuit, &x).unwrap();
            assert_eq!(y.line(0), want, "xor on {x}");
            assert_eq!(simulate(&circuit, &x).unwrap(), y);
        }
        assert!(matches_rounded_soft(&net, &circuit).unwrap());
    }

    #[test]
    fn netlist_roundtrip_and_dot_counts() {
        let circuit = extract(&xor_net(), &ExtractOptions::default()).unwrap();
        let text = netlist(&circuit);
        assert!(text.starts_with("circuit aig inputs 2 outputs 1 tau 0.95\n"));
        assert!(text.contains("unit u1_0 aig nand\n"));
        assert!(text.contains("wire x0 -> u1_0:0\n"));
        assert!(text.contains("output 0 u3_0\n"));
        let parsed = parse_netlist(&text).unwrap();
        assert_eq!(parsed, ExtractedCircuit { warnings: Vec::new(), ..circuit.clone() });
        assert_eq!(netlist(&parsed), text);

        let dot = to_dot(&circuit);
        assert_eq!(dot.matches("shape=box").count(), 4);
        assert_eq!(dot.matches("shape=circle").count(), 2);
        assert_eq!(dot.matches("shape=plaintext").count(), 1);
        assert!(dot.contains("rankdir=LR"));
    }

    #[test]
    fn ambiguous_wiring_is_surfaced_with_top_entries() {
        let c = cfg(UnitKind::Aig, &[1], 2, 1, OutputMode::Hardwired);
        let mut net = build_network::<f64>(&c, 1).unwrap();
        net.set_wire_one_hot(1, 0, 0, (0, 0), 40.0);
        net.set_wire_one_hot(1, 0, 1, (0, 0), 0.0);
        match extract(&net, &ExtractOptions::default()) {
            Err(Error::AmbiguousWiring { layer: 1, unit: 0, port: 1, top1, top2, tau }) => {
                assert!((top1 - 0.5).abs() < 1e-12);
                assert!((top2 - 0.5).abs() < 1e-12);
                assert_eq!(tau, 0.95);
            }
            other => panic!("expected ambiguous wiring, got {other:?}"),
        }
        let fallback = extract(
            &net,
            &ExtractOptions { argmax_fallback: true, ..Default::default() },
        )
        .unwrap();
        assert_eq!(fallback.units.len(), 1);
        assert!(fallback.warnings.iter().any(|w| w.contains("u1_0:1")));
    }

    #[test]
    fn ambiguous_output_is_surfaced() {
        let c = cfg(UnitKind::Aig, &[1], 1, 1, OutputMode::Selector);
        let mut net = build_network::<f64>(&c, 1).unwrap();
        net.set_wire_one_hot(1, 0, 0, (0, 0), 40.0);
        net.set_wire_one_hot(1, 0, 1, (0, 0), 40.0);
        net.set_selector_one_hot(0, (0, 0), 0.0);
        match extract(&net, &ExtractOptions::default()) {
            Err(Error::AmbiguousOutput { output: 0, top, tau }) => {
                assert!((top - 0.5).abs() < 1e-12);
                assert_eq!(tau, 0.95);
            }
            other => panic!("expected ambiguous output, got {other:?}"),
        }
        let fallback = extract(
            &net,
            &ExtractOptions { argmax_fallback: true, ..Default::default() },
        )
        .unwrap();
        assert_eq!(fallback.outputs.len(), 1);
        assert!(!fallback.warnings.is_empty());
    }

    #[test]
    fn selector_passthrough_gives_unitless_circuit() {
        let c = cfg(UnitKind::Aig, &[1], 2, 2, OutputMode::Selector);
        let mut net = build_network::<f64>(&c, 1).unwrap();
        net.set_wire_one_hot(1, 0, 0, (0, 0), 40.0);
        net.set_wire_one_hot(1, 0, 1, (0, 0), 40.0);
        // Outputs read the inputs crosswise; the lone unit is dead logic.
        net.set_selector_one_hot(0, (0, 1), 40.0);
        net.set_selector_one_hot(1, (0, 0), 40.0);
        let circuit = extract(&net, &ExtractOptions::default()).unwrap();
        assert!(circuit.units.is_empty());
        assert_eq!(circuit.outputs, vec![(0, 1), (0, 0)]);

        let y = simulate(&circuit, &"01".parse().unwrap()).unwrap();
        assert_eq!(y.to_string(), "10");

        let text = netlist(&circuit);
        assert!(!text.contains("unit "));
        assert_eq!(parse_netlist(&text).unwrap(), circuit);
        assert!(matches_rounded_soft(&net, &circuit).unwrap());
    }

    #[test]
    fn lab_adder_paths_need_only_three_sharp_ports() {
        let c = cfg(UnitKind::Lab, &[1], 3, 1, OutputMode::SelectorLastOnly);
        let mut net = build_network::<f64>(&c, 1).unwrap();
        for p in 0..3 {
            net.set_wire_one_hot(1, 0, p, (0, p), 40.0);
        }
        // Port 3 stays uniform: the adder paths never read it.
        net.set_wire_one_hot(1, 0, 3, (0, 0), 0.0);
        net.set_selector_one_hot(0, (1, 0), 40.0);

        net.set_attn_one_hot(1, 0, 0, 40.0);
        let circuit = extract(&net, &ExtractOptions::default()).unwrap();
        assert_eq!(circuit.units[0].op, HardUnit::AdderSum);
        assert_eq!(circuit.units[0].ports.len(), 3);
        for v in 0..8u64 {
            let x = BitVector::from_unsigned(v, 3).unwrap();
            let want = x.line(0) ^ x.line(1) ^ x.line(2);
            assert_eq!(simulate(&circuit, &x).unwrap().line(0), want);
        }

        net.set_attn_one_hot(1, 0, 1, 40.0);
        let circuit = extract(&net, &ExtractOptions::default()).unwrap();
        assert_eq!(circuit.units[0].op, HardUnit::AdderCarry);
        for v in 0..8u64 {
            let x = BitVector::from_unsigned(v, 3).unwrap();
            let ones = [x.line(0), x.line(1), x.line(2)].iter().filter(|&&b| b).count();
            assert_eq!(simulate(&circuit, &x).unwrap().line(0), ones >= 2);
        }

        // The LUT path reads all four ports, so the uniform port 3 now
        // blocks extraction.
        net.set_attn_one_hot(1, 0, 2, 40.0);
        assert!(matches!(
            extract(&net, &ExtractOptions::default()),
            Err(Error::AmbiguousWiring { port: 3, .. })
        ));
    }

    #[test]
    fn hardening_warnings_reach_the_circuit() {
        let c = cfg(UnitKind::Lut, &[1], 2, 1, OutputMode::SelectorLastOnly);
        let mut net = build_network::<f64>(&c, 1).unwrap();
        for p in 0..4 {
            net.set_wire_one_hot(1, 0, p, (0, 0), 40.0);
        }
        net.set_selector_one_hot(0, (1, 0), 40.0);
        let mut entries = [false; 16];
        entries[3] = true;
        net.set_table(1, 0, &entries, 40.0);
        // Entry 7 sits essentially on the threshold.
        net.store.values_mut(net.table_group(1, 0).unwrap())[7] = 1e-9;
        let circuit = extract(&net, &ExtractOptions::default()).unwrap();
        assert!(circuit.warnings.iter().any(|w| w.contains("unit u1_0") && w.contains("entry 7")));
    }

    #[test]
    fn constant_table_circuit_outputs_one_everywhere() {
        let c = cfg(UnitKind::Lut, &[1], 2, 1, OutputMode::SelectorLastOnly);
        let mut net = build_network::<f64>(&c, 1).unwrap();
        for p in 0..4 {
            net.set_wire_one_hot(1, 0, p, (0, p % 2), 40.0);
        }
        net.set_selector_one_hot(0, (1, 0), 40.0);
        net.set_table(1, 0, &[true; 16], 40.0);
        let circuit = extract(&net, &ExtractOptions::default()).unwrap();
        for v in 0..4u64 {
            let x = BitVector::from_unsigned(v, 2).unwrap();
            assert!(simulate(&circuit, &x).unwrap().line(0));
        }
    }

    #[test]
    fn verify_scores_and_verdicts() {
        let ds = generate_task(&TaskSpec::new(TaskKind::Not, 2).unwrap()).unwrap();
        let not_circuit = ExtractedCircuit {
            kind: UnitKind::Aig,
            input_width: 2,
            output_width: 2,
            tau: 0.95,
            units: vec![
                ExtUnit {
                    layer: 1,
                    index: 0,
                    op: HardUnit::Nand,
                    ports: vec![(0, 0), (0, 0)],
                },
                ExtUnit {
                    layer: 1,
                    index: 1,
                    op: HardUnit::Nand,
                    ports: vec![(0, 1), (0, 1)],
                },
            ],
            outputs: vec![(1, 0), (1, 1)],
            warnings: Vec::new(),
        };
        not_circuit.validate().unwrap();
        let report = verify(&not_circuit, &ds).unwrap();
        assert_eq!(report.signal_accuracy, 1.0);
        assert_eq!(report.example_accuracy, 1.0);
        assert_eq!(report.equivalence, Some(true));

        // Complement via a table, except one flipped entry: wrong only on
        // the all-zero input.
        // Port 0 (the high table index bit) carries x line 0; NOT of it is
        // every index with that bit clear. Flipping index 0 makes the unit
        // wrong exactly on the all-zero input.
        let mut t = [false; 16];
        for (idx, e) in t.iter_mut().enumerate() {
            *e = idx & 8 == 0;
        }
        t[0] = false;
        let mut wrong = not_circuit.clone();
        wrong.units[0] =
            ExtUnit {
                layer: 1,
                index: 0,
                op: HardUnit::Table(t),
                ports: vec![(0, 0), (0, 1), (0, 1), (0, 1)],
            };
        let report = verify(&wrong, &ds).unwrap();
        assert_eq!(report.example_accuracy, 0.75);
        assert_eq!(report.signal_accuracy, 0.875);
        assert_eq!(report.equivalence, Some(false));
        assert_eq!(report.matches.iter().filter(|&&m| !m).count(), 1);

        let reduced = crate::dataset::drop_examples(&ds, 10, 1).unwrap();
        assert_eq!(verify(&not_circuit, &reduced).unwrap().equivalence, None);
    }

    #[test]
    fn parse_rejects_malformed_netlists() {
        let good = netlist(&extract(&xor_net(), &ExtractOptions::default()).unwrap());

        match parse_netlist("nonsense\n") {
            Err(Error::Parse { line: 1, .. }) => {}
            other => panic!("expected parse error, got {other:?}"),
        }
        let trailing = format!("{good}gibberish here\n");
        match parse_netlist(&trailing) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, trailing.lines().count()),
            other => panic!("expected parse error, got {other:?}"),
        }
        // A wire running backward fails validation.
        let cyclic = good.replace("wire x0 -> u1_0:0", "wire u3_0 -> u1_0:0");
        assert!(parse_netlist(&cyclic).is_err());
        // Dropping one wire leaves a port open.
        let open = good.replace("wire x0 -> u1_0:0\n", "");
        assert!(parse_netlist(&open).is_err());
    }

    proptest! {
        #[test]
        fn raising_tau_never_adds_wires(
            seed in 0u64..40,
            lo in 0.55f64..0.9,
            delta in 0.01f64..0.09,
        ) {
            let c = cfg(UnitKind::Lut, &[2, 2], 2, 2, OutputMode::Hardwired);
            let net = build_network::<f64>(&c, seed).unwrap();
            let wide = wire_presence(&net, lo).unwrap();
            let narrow = wire_presence(&net, lo + delta).unwrap();
            prop_assert!(narrow.len() <= wide.len());
            for (src, dst, port) in narrow.wires() {
                prop_assert!(wide.is_present(src, dst, port));
            }
        }
    }
}
