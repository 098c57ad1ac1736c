//! Reverse-mode differentiation over scalar computation graphs, the Adam
//! optimiser, and numerical check helpers.

mod check;
mod optim;
mod tape;

pub use check::gradcheck;
pub use optim::{decayed_lr, GroupId, ParamStore, StagedParams};
pub use tape::{SoftmaxNodes, Tape, Value};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Numerically stable softmax over a plain slice (no tape involved).
///
/// Entries are strictly positive and sum to 1 up to rounding. Logits must be
/// finite.
pub fn softmax_slice<F: Real>(logits: &[F]) -> Result<Vec<F>> {
    if logits.is_empty() {
        return Err(Error::InvalidInput("softmax of an empty logit vector".into()));
    }
    let mut m = logits[0];
    for &c in logits {
        if !c.is_finite() {
            return Err(Error::InvalidInput(format!("non-finite softmax logit {c}")));
        }
        if c > m {
            m = c;
        }
    }
    let mut out = Vec::with_capacity(logits.len());
    let mut z = F::zero();
    for &c in logits {
        let t = (c - m).exp();
        out.push(t);
        z = z + t;
    }
    for t in &mut out {
        *t = *t / z;
    }
    Ok(out)
}

/// Shannon entropy of a probability vector, in nats. Zero entries contribute
/// zero (their limit value).
pub fn entropy_slice<F: Real>(probs: &[F]) -> F {
    let mut h = F::zero();
    for &p in probs {
        if p > F::zero() {
            h = h - p * p.ln();
        }
    }
    h
}
