//! Task oracles, example-set assembly, dropout variants, and file I/O.
//!
//! A task family "EC-w-ccc" is the 16 tasks below at base width `w` and
//! completeness `ccc` percent. At completeness 100 a dataset enumerates every
//! valid input exactly once; 95/90 variants remove a seeded random subset.
//!
//! Bit conventions, chosen once and used everywhere: within an operand the
//! leftmost displayed bit is most significant, and for the routing tasks
//! (MUX, DEMUX, DEC, ENC) line 0 is the least-significant position.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Fixed-width bit string. `bits[0]` is the most significant (leftmost) bit.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BitVector {
    bits: Vec<bool>,
}

impl BitVector {
    pub fn from_bits(bits: Vec<bool>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::InvalidInput("empty bit vector".into()));
        }
        Ok(BitVector { bits })
    }

    pub fn zeros(len: usize) -> Self {
        BitVector { bits: vec![false; len] }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Bit at display position `i` (0 = most significant).
    pub fn bit(&self, i: usize) -> bool {
        self.bits[i]
    }

    /// Bit on line `n` (0 = least significant).
    pub fn line(&self, n: usize) -> bool {
        self.bits[self.bits.len() - 1 - n]
    }

    pub fn set_line(&mut self, n: usize, v: bool) {
        let len = self.bits.len();
        self.bits[len - 1 - n] = v;
    }

    /// All lines in index order: element n is line n. Networks and extracted
    /// circuits consume and produce signals in this order.
    pub fn to_lines(&self) -> Vec<bool> {
        (0..self.bits.len()).map(|n| self.line(n)).collect()
    }

    pub fn from_lines(lines: &[bool]) -> Self {
        let mut v = BitVector::zeros(lines.len());
        for (n, &b) in lines.iter().enumerate() {
            v.set_line(n, b);
        }
        v
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.bits.iter().copied()
    }

    /// The sub-vector of display positions `lo..hi`.
    pub fn slice(&self, lo: usize, hi: usize) -> BitVector {
        BitVector { bits: self.bits[lo..hi].to_vec() }
    }

    pub fn concat(&self, other: &BitVector) -> BitVector {
        let mut bits = self.bits.clone();
        bits.extend_from_slice(&other.bits);
        BitVector { bits }
    }

    pub fn from_unsigned(v: u64, width: usize) -> Result<Self> {
        if width == 0 || width > 63 {
            return Err(Error::InvalidInput(format!("unsupported bit width {width}")));
        }
        if v >> width != 0 {
            return Err(Error::InvalidInput(format!("{v} does not fit in {width} bits")));
        }
        let bits = (0..width).map(|i| (v >> (width - 1 - i)) & 1 == 1).collect();
        Ok(BitVector { bits })
    }

    pub fn to_unsigned(&self) -> u64 {
        self.bits.iter().fold(0, |acc, &b| (acc << 1) | b as u64)
    }

    /// Two's-complement signed value.
    pub fn to_signed(&self) -> i64 {
        let u = self.to_unsigned() as i64;
        if self.bits[0] {
            u - (1i64 << self.bits.len())
        } else {
            u
        }
    }

    pub fn from_signed(v: i64, width: usize) -> Result<Self> {
        let lo = -(1i64 << (width - 1));
        let hi = (1i64 << (width - 1)) - 1;
        if v < lo || v > hi {
            return Err(Error::InvalidInput(format!(
                "{v} outside the {width}-bit two's-complement range [{lo}, {hi}]"
            )));
        }
        let u = (v as u64) & ((1u64 << width) - 1);
        Self::from_unsigned(u, width)
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BitVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::InvalidInput("empty bit string".into()));
        }
        let mut bits = Vec::with_capacity(s.len());
        for c in s.chars() {
            match c {
                '0' => bits.push(false),
                '1' => bits.push(true),
                other => {
                    return Err(Error::InvalidInput(format!(
                        "invalid bit character {other:?} in {s:?}"
                    )))
                }
            }
        }
        Ok(BitVector { bits })
    }
}

/// The 16 supported tasks.
#[derive(
    Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Not,
    And,
    Or,
    Xor,
    Shl,
    Shr,
    Neg,
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Mux,
    Demux,
    Dec,
    Enc,
}

impl TaskKind {
    pub const ALL: [TaskKind; 16] = [
        TaskKind::Not,
        TaskKind::And,
        TaskKind::Or,
        TaskKind::Xor,
        TaskKind::Shl,
        TaskKind::Shr,
        TaskKind::Neg,
        TaskKind::Add,
        TaskKind::Sub,
        TaskKind::Mul,
        TaskKind::Div,
        TaskKind::Rem,
        TaskKind::Mux,
        TaskKind::Demux,
        TaskKind::Dec,
        TaskKind::Enc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Not => "not",
            TaskKind::And => "and",
            TaskKind::Or => "or",
            TaskKind::Xor => "xor",
            TaskKind::Shl => "shl",
            TaskKind::Shr => "shr",
            TaskKind::Neg => "neg",
            TaskKind::Add => "add",
            TaskKind::Sub => "sub",
            TaskKind::Mul => "mul",
            TaskKind::Div => "div",
            TaskKind::Rem => "rem",
            TaskKind::Mux => "mux",
            TaskKind::Demux => "demux",
            TaskKind::Dec => "dec",
            TaskKind::Enc => "enc",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        TaskKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown task {s:?}")))
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn floor_log2(w: usize) -> usize {
    (usize::BITS - 1 - w.leading_zeros()) as usize
}

fn ceil_log2(w: usize) -> usize {
    if w.is_power_of_two() {
        floor_log2(w)
    } else {
        floor_log2(w) + 1
    }
}

/// One task at one base width, with its derived input/output widths.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TaskSpec {
    pub kind: TaskKind,
    pub w: usize,
    pub input_width: usize,
    pub output_width: usize,
}

impl TaskSpec {
    pub fn new(kind: TaskKind, w: usize) -> Result<Self> {
        if w < 2 {
            return Err(Error::Config(format!("base width {w} must be at least 2")));
        }
        let (input_width, output_width) = match kind {
            TaskKind::Not | TaskKind::Shl | TaskKind::Shr | TaskKind::Neg => (w, w),
            TaskKind::And | TaskKind::Or | TaskKind::Xor => (2 * w, w),
            TaskKind::Add | TaskKind::Sub => (2 * w, w + 1),
            TaskKind::Mul => (2 * w, 2 * w),
            TaskKind::Div | TaskKind::Rem => (2 * w, w),
            TaskKind::Mux => (w + floor_log2(w), 1),
            TaskKind::Demux => (1 + floor_log2(w), w),
            TaskKind::Dec => (floor_log2(w), w),
            TaskKind::Enc => (w, ceil_log2(w)),
        };
        if input_width == 0 || output_width == 0 {
            return Err(Error::Config(format!("task {kind} degenerate at width {w}")));
        }
        Ok(TaskSpec { kind, w, input_width, output_width })
    }
}

/// Applies the task function. `Ok(None)` marks an excluded input (zero
/// divisor for DIV/REM, all-zero lines for ENC); excluded inputs never get
/// an output.
pub fn task_oracle(spec: &TaskSpec, x: &BitVector) -> Result<Option<BitVector>> {
    if x.len() != spec.input_width {
        return Err(Error::Structure(format!(
            "task {} at width {} takes {} input bits, got {}",
            spec.kind,
            spec.w,
            spec.input_width,
            x.len()
        )));
    }
    let w = spec.w;
    let out = match spec.kind {
        TaskKind::Not => {
            Some(BitVector::from_bits(x.iter().map(|b| !b).collect())?)
        }
        TaskKind::And | TaskKind::Or | TaskKind::Xor => {
            let a = x.slice(0, w);
            let b = x.slice(w, 2 * w);
            let bits = a
                .iter()
                .zip(b.iter())
                .map(|(p, q)| match spec.kind {
                    TaskKind::And => p && q,
                    TaskKind::Or => p || q,
                    _ => p != q,
                })
                .collect();
            Some(BitVector::from_bits(bits)?)
        }
        TaskKind::Shl => {
            let mut bits: Vec<bool> = x.iter().skip(1).collect();
            bits.push(false);
            Some(BitVector::from_bits(bits)?)
        }
        TaskKind::Shr => {
            let mut bits = vec![false];
            bits.extend(x.iter().take(w - 1));
            Some(BitVector::from_bits(bits)?)
        }
        TaskKind::Neg => {
            let v = x.to_unsigned();
            let neg = v.wrapping_neg() & ((1u64 << w) - 1);
            Some(BitVector::from_unsigned(neg, w)?)
        }
        TaskKind::Add | TaskKind::Sub => {
            let a = x.slice(0, w).to_signed();
            let b = x.slice(w, 2 * w).to_signed();
            let s = if spec.kind == TaskKind::Add { a + b } else { a - b };
            Some(BitVector::from_signed(s, w + 1)?)
        }
        TaskKind::Mul => {
            let a = x.slice(0, w).to_unsigned();
            let b = x.slice(w, 2 * w).to_unsigned();
            Some(BitVector::from_unsigned(a * b, 2 * w)?)
        }
        TaskKind::Div | TaskKind::Rem => {
            let a = x.slice(0, w).to_unsigned();
            let b = x.slice(w, 2 * w).to_unsigned();
            if b == 0 {
                None
            } else {
                let v = if spec.kind == TaskKind::Div { a / b } else { a % b };
                Some(BitVector::from_unsigned(v, w)?)
            }
        }
        TaskKind::Mux => {
            let signals = x.slice(0, w);
            let sel = x.slice(w, x.len()).to_unsigned() as usize;
            Some(BitVector::from_bits(vec![signals.line(sel)])?)
        }
        TaskKind::Demux => {
            let data = x.bit(0);
            let sel = x.slice(1, x.len()).to_unsigned() as usize;
            let mut out = BitVector::zeros(w);
            out.set_line(sel, data);
            Some(out)
        }
        TaskKind::Dec => {
            let sel = x.to_unsigned() as usize;
            let mut out = BitVector::zeros(w);
            out.set_line(sel, true);
            Some(out)
        }
        TaskKind::Enc => {
            let first = (0..w).find(|&n| x.line(n));
            match first {
                None => None,
                Some(n) => Some(BitVector::from_unsigned(n as u64, spec.output_width)?),
            }
        }
    };
    Ok(out)
}

/// A task's example set plus its completeness metadata.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaskDataset {
    pub spec: TaskSpec,
    pub examples: Vec<(BitVector, BitVector)>,
    pub completeness: u8,
    pub dropout_seed: Option<u64>,
}

/// Enumerates all valid inputs of a task in ascending numeric order and
/// applies the oracle. Excluded inputs are dropped.
pub fn generate_task(spec: &TaskSpec) -> Result<TaskDataset> {
    let mut examples = Vec::new();
    for v in 0..(1u64 << spec.input_width) {
        let x = BitVector::from_unsigned(v, spec.input_width)?;
        if let Some(y) = task_oracle(spec, &x)? {
            examples.push((x, y));
        }
    }
    Ok(TaskDataset { spec: *spec, examples, completeness: 100, dropout_seed: None })
}

/// Removes round(percent/100 * N) examples, at least one, chosen by seeded
/// uniform sampling without replacement. Only 5 and 10 percent are valid,
/// giving the 95 and 90 completeness variants.
pub fn drop_examples(dataset: &TaskDataset, percent: u8, seed: u64) -> Result<TaskDataset> {
    if dataset.completeness != 100 {
        return Err(Error::InvalidInput(
            "dropout starts from a completeness-100 dataset".into(),
        ));
    }
    if percent != 5 && percent != 10 {
        return Err(Error::Config(format!("dropout percent {percent} not one of 5, 10")));
    }
    let n = dataset.examples.len();
    if n <= 1 {
        return Err(Error::InvalidInput(format!(
            "cannot drop from a dataset of {n} example(s)"
        )));
    }
    let k = ((percent as f64 / 100.0 * n as f64).round() as usize).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut removed: Vec<usize> = rand::seq::index::sample(&mut rng, n, k).into_vec();
    removed.sort_unstable();
    let mut examples = Vec::with_capacity(n - k);
    let mut r = 0;
    for (i, e) in dataset.examples.iter().enumerate() {
        if r < removed.len() && removed[r] == i {
            r += 1;
        } else {
            examples.push(e.clone());
        }
    }
    Ok(TaskDataset {
        spec: dataset.spec,
        examples,
        completeness: 100 - percent,
        dropout_seed: Some(seed),
    })
}

/// Directory name for a family, e.g. "EC-2-100".
pub fn family_dir_name(w: usize, completeness: u8) -> String {
    format!("EC-{w}-{completeness}")
}

/// File name for one task inside a family directory.
pub fn dataset_file_name(kind: TaskKind) -> String {
    format!("{}.examples", kind.name())
}

/// All 16 tasks of a family at completeness 100.
pub fn generate_family(w: usize) -> Result<Vec<TaskDataset>> {
    TaskKind::ALL
        .iter()
        .map(|&kind| generate_task(&TaskSpec::new(kind, w)?))
        .collect()
}

/// Serialises as a key-value header, a blank line, then one "input output"
/// line per example.
pub fn dataset_to_string(dataset: &TaskDataset) -> String {
    let mut s = String::new();
    s.push_str(&format!("task: {}\n", dataset.spec.kind));
    s.push_str(&format!("w: {}\n", dataset.spec.w));
    s.push_str(&format!("inputs: {}\n", dataset.spec.input_width));
    s.push_str(&format!("outputs: {}\n", dataset.spec.output_width));
    s.push_str(&format!("completeness: {}\n", dataset.completeness));
    if let Some(seed) = dataset.dropout_seed {
        s.push_str(&format!("dropout-seed: {seed}\n"));
    }
    s.push('\n');
    for (x, y) in &dataset.examples {
        s.push_str(&format!("{x} {y}\n"));
    }
    s
}

pub fn save_dataset(dataset: &TaskDataset, path: &Path) -> Result<()> {
    std::fs::write(path, dataset_to_string(dataset))?;
    Ok(())
}

pub fn dataset_from_str(text: &str) -> Result<TaskDataset> {
    let mut header: BTreeMap<String, String> = BTreeMap::new();
    let mut lines = text.lines().enumerate();
    let mut body_start = 0;
    for (idx, line) in lines.by_ref() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            body_start = lineno;
            break;
        }
        let (key, value) = line.split_once(':').ok_or(Error::Parse {
            line: lineno,
            msg: format!("expected 'key: value', got {line:?}"),
        })?;
        header.insert(key.trim().to_string(), value.trim().to_string());
    }
    let get = |key: &str| {
        header.get(key).cloned().ok_or(Error::Parse {
            line: body_start.max(1),
            msg: format!("missing header field {key:?}"),
        })
    };
    let parse_num = |key: &str, v: &str| {
        v.parse::<u64>().map_err(|_| Error::Parse {
            line: body_start.max(1),
            msg: format!("header field {key:?} is not a number: {v:?}"),
        })
    };
    let kind = TaskKind::parse(&get("task")?).map_err(|e| Error::Parse {
        line: 1,
        msg: e.to_string(),
    })?;
    let w = parse_num("w", &get("w")?)? as usize;
    let spec = TaskSpec::new(kind, w)?;
    let inputs = parse_num("inputs", &get("inputs")?)? as usize;
    let outputs = parse_num("outputs", &get("outputs")?)? as usize;
    if inputs != spec.input_width || outputs != spec.output_width {
        return Err(Error::Parse {
            line: 1,
            msg: format!(
                "header widths {inputs}->{outputs} disagree with task {kind} at w={w} \
                 ({}->{})",
                spec.input_width, spec.output_width
            ),
        });
    }
    let completeness = parse_num("completeness", &get("completeness")?)? as u8;
    if ![100, 95, 90].contains(&completeness) {
        return Err(Error::Parse {
            line: 1,
            msg: format!("completeness {completeness} not one of 100, 95, 90"),
        });
    }
    let dropout_seed = match header.get("dropout-seed") {
        Some(v) => Some(parse_num("dropout-seed", v)?),
        None => None,
    };

    let mut examples = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let (xs, ys) = line.split_once(' ').ok_or(Error::Parse {
            line: lineno,
            msg: format!("expected '<input bits> <output bits>', got {line:?}"),
        })?;
        let x: BitVector = xs.parse().map_err(|e: Error| Error::Parse {
            line: lineno,
            msg: e.to_string(),
        })?;
        let y: BitVector = ys.trim().parse().map_err(|e: Error| Error::Parse {
            line: lineno,
            msg: e.to_string(),
        })?;
        if x.len() != spec.input_width || y.len() != spec.output_width {
            return Err(Error::Parse {
                line: lineno,
                msg: format!(
                    "example widths {}->{} disagree with header {}->{}",
                    x.len(),
                    y.len(),
                    spec.input_width,
                    spec.output_width
                ),
            });
        }
        match task_oracle(&spec, &x)? {
            Some(expected) if expected == y => {}
            Some(expected) => {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("example {x} -> {y} disagrees with the task ({x} -> {expected})"),
                })
            }
            None => {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("input {x} is excluded for task {kind}"),
                })
            }
        }
        examples.push((x, y));
    }
    Ok(TaskDataset { spec, examples, completeness, dropout_seed })
}

pub fn load_dataset(path: &Path) -> Result<TaskDataset> {
    let text = std::fs::read_to_string(path)?;
    dataset_from_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn bv(s: &str) -> BitVector {
        s.parse().unwrap()
    }

    fn oracle(kind: TaskKind, w: usize, input: &str) -> Option<BitVector> {
        let spec = TaskSpec::new(kind, w).unwrap();
        task_oracle(&spec, &bv(input)).unwrap()
    }

    #[test]
    fn bitvector_roundtrip_and_values() {
        let v = bv("1011");
        assert_eq!(v.to_string(), "1011");
        assert_eq!(v.to_unsigned(), 11);
        assert_eq!(v.to_signed(), -5);
        assert_eq!(BitVector::from_unsigned(11, 4).unwrap(), v);
        assert_eq!(BitVector::from_signed(-5, 4).unwrap(), v);
        assert_eq!(v.line(0), true);
        assert_eq!(v.line(2), false);
        assert!("".parse::<BitVector>().is_err());
        assert!("10x1".parse::<BitVector>().is_err());
    }

    #[test]
    fn worked_examples() {
        assert_eq!(oracle(TaskKind::And, 4, "10110110"), Some(bv("0010")));
        assert_eq!(oracle(TaskKind::Shl, 4, "1011"), Some(bv("0110")));
        assert_eq!(oracle(TaskKind::Neg, 4, "1110"), Some(bv("0010")));
        assert_eq!(oracle(TaskKind::Sub, 4, "00011110"), Some(bv("00011")));
        assert_eq!(oracle(TaskKind::Mul, 4, "00111110"), Some(bv("00101010")));
        assert_eq!(oracle(TaskKind::Add, 4, "00011110"), Some(bv("11111")));
        assert_eq!(oracle(TaskKind::Div, 4, "01100011"), Some(bv("0010")));
        assert_eq!(oracle(TaskKind::Rem, 4, "01100011"), Some(bv("0000")));
        assert_eq!(oracle(TaskKind::Demux, 4, "111"), Some(bv("1000")));
        assert_eq!(oracle(TaskKind::Dec, 4, "10"), Some(bv("0100")));
        assert_eq!(oracle(TaskKind::Enc, 5, "00110"), Some(bv("001")));
        assert_eq!(oracle(TaskKind::Mux, 4, "011111"), Some(bv("0")));
    }

    #[test]
    fn more_oracle_cases() {
        assert_eq!(oracle(TaskKind::Not, 4, "1011"), Some(bv("0100")));
        assert_eq!(oracle(TaskKind::Or, 4, "10110110"), Some(bv("1111")));
        assert_eq!(oracle(TaskKind::Xor, 4, "10110110"), Some(bv("1101")));
        assert_eq!(oracle(TaskKind::Shr, 4, "1011"), Some(bv("0101")));
        // Excluded inputs.
        assert_eq!(oracle(TaskKind::Div, 2, "1000"), None);
        assert_eq!(oracle(TaskKind::Rem, 2, "1100"), None);
        assert_eq!(oracle(TaskKind::Enc, 4, "0000"), None);
    }

    #[test]
    fn oracle_rejects_wrong_width() {
        let spec = TaskSpec::new(TaskKind::And, 2).unwrap();
        assert!(task_oracle(&spec, &bv("101")).is_err());
    }

    #[test]
    fn task_widths_follow_conventions() {
        let cases = [
            (TaskKind::Not, 2, 2, 2),
            (TaskKind::And, 2, 4, 2),
            (TaskKind::Add, 2, 4, 3),
            (TaskKind::Mul, 2, 4, 4),
            (TaskKind::Div, 2, 4, 2),
            (TaskKind::Mux, 2, 3, 1),
            (TaskKind::Demux, 2, 2, 2),
            (TaskKind::Dec, 2, 1, 2),
            (TaskKind::Enc, 2, 2, 1),
            (TaskKind::Mux, 4, 6, 1),
            (TaskKind::Demux, 4, 3, 4),
            (TaskKind::Dec, 4, 2, 4),
            (TaskKind::Enc, 4, 4, 2),
            (TaskKind::Enc, 5, 5, 3),
        ];
        for (kind, w, inw, outw) in cases {
            let spec = TaskSpec::new(kind, w).unwrap();
            assert_eq!((spec.input_width, spec.output_width), (inw, outw), "{kind} w={w}");
        }
    }

    #[test]
    fn generated_counts() {
        let count = |kind, w| {
            generate_task(&TaskSpec::new(kind, w).unwrap()).unwrap().examples.len()
        };
        assert_eq!(count(TaskKind::Not, 2), 4);
        assert_eq!(count(TaskKind::And, 2), 16);
        assert_eq!(count(TaskKind::Div, 2), 12);
        assert_eq!(count(TaskKind::Enc, 4), 15);
        assert_eq!(count(TaskKind::Dec, 2), 2);
        assert_eq!(count(TaskKind::Enc, 2), 3);
        assert_eq!(count(TaskKind::Mux, 2), 8);
    }

    #[test]
    fn generation_is_deterministic_and_distinct() {
        let spec = TaskSpec::new(TaskKind::Add, 2).unwrap();
        let a = generate_task(&spec).unwrap();
        let b = generate_task(&spec).unwrap();
        assert_eq!(a, b);
        let inputs: HashSet<_> = a.examples.iter().map(|(x, _)| x.clone()).collect();
        assert_eq!(inputs.len(), a.examples.len());
    }

    #[test]
    fn dropout_counts_and_determinism() {
        let spec = TaskSpec::new(TaskKind::And, 2).unwrap();
        let full = generate_task(&spec).unwrap();
        assert_eq!(full.examples.len(), 16);
        let d5 = drop_examples(&full, 5, 7).unwrap();
        assert_eq!(d5.examples.len(), 15);
        assert_eq!(d5.completeness, 95);
        assert_eq!(d5.dropout_seed, Some(7));
        let d5b = drop_examples(&full, 5, 7).unwrap();
        assert_eq!(d5, d5b);
        let full_set: HashSet<_> = full.examples.iter().collect();
        assert!(d5.examples.iter().all(|e| full_set.contains(e)));

        // 256 examples at 10 percent: round(25.6) = 26 removed.
        let spec = TaskSpec::new(TaskKind::Mul, 4).unwrap();
        let big = generate_task(&spec).unwrap();
        assert_eq!(big.examples.len(), 256);
        let d10 = drop_examples(&big, 10, 3).unwrap();
        assert_eq!(d10.examples.len(), 230);
    }

    #[test]
    fn dropout_rejects_bad_input() {
        let spec = TaskSpec::new(TaskKind::And, 2).unwrap();
        let full = generate_task(&spec).unwrap();
        assert!(drop_examples(&full, 7, 1).is_err());
        let d = drop_examples(&full, 5, 1).unwrap();
        assert!(drop_examples(&d, 5, 1).is_err());
        let tiny = TaskDataset {
            spec,
            examples: vec![full.examples[0].clone()],
            completeness: 100,
            dropout_seed: None,
        };
        assert!(drop_examples(&tiny, 5, 1).is_err());
    }

    #[test]
    fn file_roundtrip() {
        for kind in [TaskKind::And, TaskKind::Enc, TaskKind::Add] {
            let spec = TaskSpec::new(kind, 2).unwrap();
            let full = generate_task(&spec).unwrap();
            let reduced = drop_examples(&full, 10, 42).unwrap();
            for ds in [&full, &reduced] {
                let text = dataset_to_string(ds);
                let back = dataset_from_str(&text).unwrap();
                assert_eq!(&back, ds);
            }
        }
    }

    #[test]
    fn file_contains_expected_example_line() {
        let spec = TaskSpec::new(TaskKind::And, 4).unwrap();
        let ds = generate_task(&spec).unwrap();
        let text = dataset_to_string(&ds);
        assert!(text.contains("10110110 0010\n"));
        assert!(text.starts_with("task: and\n"));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let bad = "task: and\nw: 2\ninputs: 4\noutputs: 2\ncompleteness: 100\n\n0000 00\nbroken\n";
        match dataset_from_str(bad) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 8),
            other => panic!("expected parse error, got {other:?}"),
        }
        let wrong = "task: and\nw: 2\ninputs: 4\noutputs: 2\ncompleteness: 100\n\n0000 01\n";
        assert!(matches!(dataset_from_str(wrong), Err(Error::Parse { line: 7, .. })));
    }
}
