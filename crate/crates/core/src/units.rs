//! Differentiable universal units and their discrete counterparts.
//!
//! Three unit kinds exist. AIG is a parameter-free 2-input gate computing
//! 1 - i1*i2 (NAND on binary inputs). LUT is a 4-input lookup table whose 16
//! entries are learned logits squashed through the logistic function and read
//! out by multilinear interpolation. LAB wraps a LUT together with a 1-bit
//! full adder and picks among {sum, carry, lut} with a learned 3-way constant
//! attention.
//!
//! Soft evaluation works on any scalar type; hardening turns a trained unit
//! into a Boolean function for discrete simulation.

use rand::Rng;

use crate::diff::{Tape, Value};
use crate::error::{Error, Result};
use crate::scalar::{real, Real};

/// The three universal unit kinds a network can be built from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitKind {
    Aig,
    Lut,
    Lab,
}

impl UnitKind {
    /// Number of input ports of a unit of this kind.
    pub fn arity(self) -> usize {
        match self {
            UnitKind::Aig => 2,
            UnitKind::Lut | UnitKind::Lab => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            UnitKind::Aig => "aig",
            UnitKind::Lut => "lut",
            UnitKind::Lab => "lab",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "aig" => Ok(UnitKind::Aig),
            "lut" => Ok(UnitKind::Lut),
            "lab" => Ok(UnitKind::Lab),
            other => Err(Error::InvalidInput(format!("unknown unit kind {other:?}"))),
        }
    }
}

impl std::fmt::Display for UnitKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Elementary soft gates. Only building blocks and test vocabulary; the
/// trainable units above are what networks are made of.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SoftGateKind {
    Not,
    And,
    Or,
    Xor,
}

impl SoftGateKind {
    pub fn arity(self) -> usize {
        match self {
            SoftGateKind::Not => 1,
            _ => 2,
        }
    }
}

/// Evaluates one elementary soft gate. NOT is 1-a; AND is a*b; OR is the
/// range-preserving a+b-a*b; XOR is a(1-b)+b(1-a). Inputs must lie in [0,1].
pub fn soft_gate<F: Real>(kind: SoftGateKind, inputs: &[F]) -> Result<F> {
    if inputs.len() != kind.arity() {
        return Err(Error::Structure(format!(
            "{kind:?} takes {} inputs, got {}",
            kind.arity(),
            inputs.len()
        )));
    }
    for &x in inputs {
        if x < F::zero() || x > F::one() {
            return Err(Error::InvalidInput(format!("gate input {x} outside [0,1]")));
        }
    }
    Ok(match kind {
        SoftGateKind::Not => F::one() - inputs[0],
        SoftGateKind::And => inputs[0] * inputs[1],
        SoftGateKind::Or => inputs[0] + inputs[1] - inputs[0] * inputs[1],
        SoftGateKind::Xor => {
            inputs[0] * (F::one() - inputs[1]) + inputs[1] * (F::one() - inputs[0])
        }
    })
}

/// The AIG unit output 1 - i1*i2.
#[inline]
pub fn aig_forward<F: Real>(i1: F, i2: F) -> F {
    F::one() - i1 * i2
}

/// Logistic squash mapping a table logit into (0,1).
#[inline]
pub fn squash<F: Real>(logit: F) -> F {
    F::one() / (F::one() + (-logit).exp())
}

/// Flat table index for binary inputs (b1,b2,b3,b4); b1 is the highest bit.
#[inline]
pub fn table_index(b1: bool, b2: bool, b3: bool, b4: bool) -> usize {
    ((b1 as usize) << 3) | ((b2 as usize) << 2) | ((b3 as usize) << 1) | (b4 as usize)
}

/// Multilinear read-out of a 16-entry table of squashed values.
///
/// Folds one input at a time: pairs differing only in the last index are
/// interpolated by i4, then i3, i2, i1. At binary inputs this collapses to
/// the indexed entry exactly; in general it is the unique multilinear
/// extension of the table.
pub fn lut_forward<F: Real>(squashed: &[F; 16], i: &[F; 4]) -> F {
    let mut buf = *squashed;
    let mut n = 16;
    for level in (0..4).rev() {
        let t = i[level];
        n /= 2;
        for j in 0..n {
            let lo = buf[2 * j];
            let hi = buf[2 * j + 1];
            buf[j] = lo * (F::one() - t) + hi * t;
        }
    }
    buf[0]
}

/// Soft parity of three inputs via the XOR chain; equals (i1+i2+i3) mod 2 on
/// binary inputs and is multilinear.
pub fn sum_mod2<F: Real>(i1: F, i2: F, i3: F) -> F {
    let x = i1 * (F::one() - i2) + i2 * (F::one() - i1);
    x * (F::one() - i3) + i3 * (F::one() - x)
}

/// Soft majority i1*i2 + i1*i3 + i2*i3 - 2*i1*i2*i3; equals the full-adder
/// carry 1[i1+i2+i3 >= 2] on binary inputs and is multilinear.
pub fn carry<F: Real>(i1: F, i2: F, i3: F) -> F {
    i1 * i2 + i1 * i3 + i2 * i3 - real::<F>(2.0) * i1 * i2 * i3
}

/// LAB output: alpha-weighted mix of adder sum, adder carry, and LUT output.
/// `alpha` is already a probability vector (softmax of the attention logits).
pub fn lab_forward<F: Real>(squashed: &[F; 16], alpha: &[F; 3], i: &[F; 4]) -> F {
    alpha[0] * sum_mod2(i[0], i[1], i[2])
        + alpha[1] * carry(i[0], i[1], i[2])
        + alpha[2] * lut_forward(squashed, i)
}

/// Records the AIG forward pass on a tape.
pub fn aig_record<F: Real>(tape: &mut Tape<F>, i1: Value, i2: Value) -> Value {
    let p = tape.mul(i1, i2);
    tape.const_minus(F::one(), p)
}

/// Records the LUT multilinear read-out; `squashed` are already-recorded
/// table entry nodes in flat index order.
pub fn lut_record<F: Real>(tape: &mut Tape<F>, squashed: &[Value], i: &[Value; 4]) -> Value {
    debug_assert_eq!(squashed.len(), 16);
    let mut buf: Vec<Value> = squashed.to_vec();
    let mut n = 16;
    for level in (0..4).rev() {
        let t = i[level];
        n /= 2;
        for j in 0..n {
            buf[j] = tape.lerp(buf[2 * j], buf[2 * j + 1], t);
        }
    }
    buf[0]
}

/// Records the soft parity of three inputs.
pub fn sum_mod2_record<F: Real>(tape: &mut Tape<F>, i1: Value, i2: Value, i3: Value) -> Value {
    let x = tape.soft_xor(i1, i2);
    tape.soft_xor(x, i3)
}

/// Records the soft carry i1*i2 + i1*i3 + i2*i3 - 2*i1*i2*i3.
pub fn carry_record<F: Real>(tape: &mut Tape<F>, i1: Value, i2: Value, i3: Value) -> Value {
    let a = tape.mul(i1, i2);
    let b = tape.mul(i1, i3);
    let c = tape.mul(i2, i3);
    let abc = tape.mul(a, i3);
    let s1 = tape.add(a, b);
    let s2 = tape.add(s1, c);
    let m2 = tape.mul_const(abc, real::<F>(2.0));
    tape.sub(s2, m2)
}

/// Records the LAB mix; `alpha` are already-recorded probability nodes.
pub fn lab_record<F: Real>(
    tape: &mut Tape<F>,
    squashed: &[Value],
    alpha: &[Value; 3],
    i: &[Value; 4],
) -> Value {
    let s = sum_mod2_record(tape, i[0], i[1], i[2]);
    let c = carry_record(tape, i[0], i[1], i[2]);
    let l = lut_record(tape, squashed, i);
    let t0 = tape.mul(alpha[0], s);
    let t1 = tape.mul(alpha[1], c);
    let t2 = tape.mul(alpha[2], l);
    let s01 = tape.add(t0, t1);
    tape.add(s01, t2)
}

/// Discrete unit function attached to extracted circuits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum HardUnit {
    /// AIG hardens to NAND.
    Nand,
    /// LUT hardens to a fixed Boolean table in flat index order.
    Table([bool; 16]),
    /// LAB with attention on the adder sum slot.
    AdderSum,
    /// LAB with attention on the adder carry slot.
    AdderCarry,
}

impl HardUnit {
    /// Number of leading input ports the discrete function reads. The adder
    /// outputs ignore the fourth LAB port.
    pub fn used_ports(&self) -> usize {
        match self {
            HardUnit::Nand => 2,
            HardUnit::Table(_) => 4,
            HardUnit::AdderSum | HardUnit::AdderCarry => 3,
        }
    }

    pub fn eval(&self, inputs: &[bool]) -> bool {
        match self {
            HardUnit::Nand => !(inputs[0] && inputs[1]),
            HardUnit::Table(t) => t[table_index(inputs[0], inputs[1], inputs[2], inputs[3])],
            HardUnit::AdderSum => inputs[0] ^ inputs[1] ^ inputs[2],
            HardUnit::AdderCarry => {
                (inputs[0] && inputs[1]) || (inputs[0] && inputs[2]) || (inputs[1] && inputs[2])
            }
        }
    }
}

/// Hardens a LUT's squashed table by thresholding at 0.5. Entries within
/// 1e-6 of the threshold are reported as warnings.
pub fn harden_lut<F: Real>(squashed: &[F; 16]) -> (HardUnit, Vec<String>) {
    let mut table = [false; 16];
    let mut warnings = Vec::new();
    let half = real::<F>(0.5);
    let eps = real::<F>(1e-6);
    for (idx, &e) in squashed.iter().enumerate() {
        table[idx] = e > half;
        if (e - half).abs() < eps {
            warnings.push(format!(
                "table entry {idx} is {e} (within 1e-6 of the 0.5 threshold)"
            ));
        }
    }
    (HardUnit::Table(table), warnings)
}

/// Hardens a LAB by argmax over the attention probabilities, ties broken
/// toward the lowest slot index. A near-tie (within 1e-9) is reported as a
/// warning.
pub fn harden_lab<F: Real>(squashed: &[F; 16], alpha: &[F; 3]) -> (HardUnit, Vec<String>) {
    let mut best = 0;
    for slot in 1..3 {
        if alpha[slot] > alpha[best] {
            best = slot;
        }
    }
    let mut warnings = Vec::new();
    let tie_eps = real::<F>(1e-9);
    for slot in 0..3 {
        if slot != best && (alpha[slot] - alpha[best]).abs() < tie_eps {
            warnings.push(format!(
                "attention slots {best} and {slot} tie within 1e-9 (alpha {} vs {})",
                alpha[best], alpha[slot]
            ));
        }
    }
    match best {
        0 => (HardUnit::AdderSum, warnings),
        1 => (HardUnit::AdderCarry, warnings),
        _ => {
            let (table, mut w) = harden_lut(squashed);
            warnings.append(&mut w);
            (table, warnings)
        }
    }
}

/// Initial table logits, uniform in (-1, 1).
pub fn draw_table_logits<F: Real, R: Rng>(rng: &mut R) -> Vec<F> {
    (0..16).map(|_| real(rng.random_range(-1.0..1.0))).collect()
}

/// Initial attention logits, uniform in (-0.1, 0.1): a near-uniform choice.
pub fn draw_attn_logits<F: Real, R: Rng>(rng: &mut R) -> Vec<F> {
    (0..3).map(|_| real(rng.random_range(-0.1..0.1))).collect()
}
