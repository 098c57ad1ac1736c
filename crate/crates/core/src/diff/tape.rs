use crate::error::{Error, Result};
use crate::scalar::{real, Real};

/// Handle to a node on a [`Tape`]. Only meaningful for the tape that created
/// it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Value(u32);

/// Wengert-list reverse-mode tape. Each recorded node stores its value and
/// the local partial derivative towards each parent, so the backward sweep is
/// a single reverse pass of multiply-accumulates.
///
/// Nodes only ever reference earlier nodes, so the graph is acyclic by
/// construction. Values are recorded eagerly: partials are computed from the
/// operand values at record time, which is sound because the graph is rebuilt
/// whenever operand values change (the trainer re-records every batch).
pub struct Tape<F> {
    data: Vec<F>,
    grad: Vec<F>,
    starts: Vec<u32>,
    parents: Vec<u32>,
    partials: Vec<F>,
}

/// Softmax recorded on a tape: the probability nodes plus the shifted logits
/// and normaliser needed to derive the entropy of the same choice cheaply.
pub struct SoftmaxNodes {
    pub probs: Vec<Value>,
    shifted: Vec<Value>,
    z: Value,
}

impl<F: Real> Tape<F> {
    pub fn new() -> Self {
        Tape {
            data: Vec::new(),
            grad: Vec::new(),
            starts: vec![0],
            parents: Vec::new(),
            partials: Vec::new(),
        }
    }

    /// Drops all recorded nodes, keeping allocations for reuse.
    pub fn clear(&mut self) {
        self.data.clear();
        self.grad.clear();
        self.starts.clear();
        self.starts.push(0);
        self.parents.clear();
        self.partials.clear();
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self, v: Value) -> F {
        self.data[v.0 as usize]
    }

    pub fn grad(&self, v: Value) -> F {
        self.grad[v.0 as usize]
    }

    pub fn zero_grad(&mut self) {
        for g in &mut self.grad {
            *g = F::zero();
        }
    }

    fn push(&mut self, data: F) -> Value {
        let id = self.data.len() as u32;
        self.data.push(data);
        self.grad.push(F::zero());
        self.starts.push(self.parents.len() as u32);
        Value(id)
    }

    fn edge(&mut self, parent: Value, partial: F) {
        self.parents.push(parent.0);
        self.partials.push(partial);
        *self.starts.last_mut().unwrap() = self.parents.len() as u32;
    }

    /// Records an independent value (an input or a parameter).
    pub fn leaf(&mut self, x: F) -> Value {
        self.push(x)
    }

    pub fn add(&mut self, a: Value, b: Value) -> Value {
        let v = self.push(self.data(a) + self.data(b));
        self.edge(a, F::one());
        self.edge(b, F::one());
        v
    }

    pub fn sub(&mut self, a: Value, b: Value) -> Value {
        let v = self.push(self.data(a) - self.data(b));
        self.edge(a, F::one());
        self.edge(b, -F::one());
        v
    }

    pub fn mul(&mut self, a: Value, b: Value) -> Value {
        let (da, db) = (self.data(a), self.data(b));
        let v = self.push(da * db);
        self.edge(a, db);
        self.edge(b, da);
        v
    }

    pub fn div(&mut self, a: Value, b: Value) -> Value {
        let (da, db) = (self.data(a), self.data(b));
        let q = da / db;
        let v = self.push(q);
        self.edge(a, F::one() / db);
        self.edge(b, -q / db);
        v
    }

    pub fn neg(&mut self, a: Value) -> Value {
        let v = self.push(-self.data(a));
        self.edge(a, -F::one());
        v
    }

    pub fn add_const(&mut self, a: Value, c: F) -> Value {
        let v = self.push(self.data(a) + c);
        self.edge(a, F::one());
        v
    }

    pub fn mul_const(&mut self, a: Value, c: F) -> Value {
        let v = self.push(self.data(a) * c);
        self.edge(a, c);
        v
    }

    /// c - a, the soft NOT for c = 1.
    pub fn const_minus(&mut self, c: F, a: Value) -> Value {
        let v = self.push(c - self.data(a));
        self.edge(a, -F::one());
        v
    }

    pub fn exp(&mut self, a: Value) -> Value {
        let e = self.data(a).exp();
        let v = self.push(e);
        self.edge(a, e);
        v
    }

    pub fn ln(&mut self, a: Value) -> Value {
        let da = self.data(a);
        let v = self.push(da.ln());
        self.edge(a, F::one() / da);
        v
    }

    pub fn sigmoid(&mut self, a: Value) -> Value {
        let s = F::one() / (F::one() + (-self.data(a)).exp());
        let v = self.push(s);
        self.edge(a, s * (F::one() - s));
        v
    }

    /// Clamps into [lo, hi] with pass-through gradient strictly inside the
    /// range and zero gradient on the flats.
    pub fn clamp(&mut self, a: Value, lo: F, hi: F) -> Value {
        let da = self.data(a);
        let (c, partial) = if da < lo {
            (lo, F::zero())
        } else if da > hi {
            (hi, F::zero())
        } else {
            (da, F::one())
        };
        let v = self.push(c);
        self.edge(a, partial);
        v
    }

    /// Fused n-ary sum.
    pub fn sum(&mut self, xs: &[Value]) -> Value {
        let mut acc = F::zero();
        for &x in xs {
            acc = acc + self.data(x);
        }
        let v = self.push(acc);
        for &x in xs {
            self.edge(x, F::one());
        }
        v
    }

    /// Fused inner product of two equal-length node slices.
    pub fn dot(&mut self, a: &[Value], b: &[Value]) -> Value {
        debug_assert_eq!(a.len(), b.len());
        let mut acc = F::zero();
        for (&x, &y) in a.iter().zip(b) {
            acc = acc + self.data(x) * self.data(y);
        }
        let v = self.push(acc);
        for (&x, &y) in a.iter().zip(b) {
            self.edge(x, self.data[y.0 as usize]);
        }
        for (&x, &y) in a.iter().zip(b) {
            self.edge(y, self.data[x.0 as usize]);
        }
        v
    }

    /// Inner product of nodes with plain constants.
    pub fn dot_const(&mut self, a: &[Value], w: &[F]) -> Value {
        debug_assert_eq!(a.len(), w.len());
        let mut acc = F::zero();
        for (&x, &c) in a.iter().zip(w) {
            acc = acc + self.data(x) * c;
        }
        let v = self.push(acc);
        for (&x, &c) in a.iter().zip(w) {
            self.edge(x, c);
        }
        v
    }

    /// lo*(1-t) + hi*t, the interpolation step of the table lookup. The
    /// two-product form collapses exactly to lo at t=0 and hi at t=1.
    pub fn lerp(&mut self, lo: Value, hi: Value, t: Value) -> Value {
        let (dl, dh, dt) = (self.data(lo), self.data(hi), self.data(t));
        let v = self.push(dl * (F::one() - dt) + dh * dt);
        self.edge(lo, F::one() - dt);
        self.edge(hi, dt);
        self.edge(t, dh - dl);
        v
    }

    /// Records a numerically stable softmax over `logits`. The maximum logit
    /// is subtracted as a detached constant, which leaves both the
    /// probabilities and their gradients exact because softmax is invariant
    /// under logit shifts.
    pub fn softmax(&mut self, logits: &[Value]) -> Result<SoftmaxNodes> {
        if logits.is_empty() {
            return Err(Error::InvalidInput("softmax of an empty logit vector".into()));
        }
        let mut m = self.data(logits[0]);
        for &c in logits {
            let d = self.data(c);
            if !d.is_finite() {
                return Err(Error::InvalidInput(format!("non-finite softmax logit {d}")));
            }
            if d > m {
                m = d;
            }
        }
        let mut shifted = Vec::with_capacity(logits.len());
        let mut terms = Vec::with_capacity(logits.len());
        for &c in logits {
            let u = self.add_const(c, -m);
            shifted.push(u);
            terms.push(self.exp(u));
        }
        let z = self.sum(&terms);
        let probs = terms.iter().map(|&t| self.div(t, z)).collect();
        Ok(SoftmaxNodes { probs, shifted, z })
    }

    /// Entropy of a softmax recorded by [`Tape::softmax`], as
    /// ln Z - sum_i p_i (c_i - m). Avoids ln of near-zero probabilities.
    pub fn entropy(&mut self, sm: &SoftmaxNodes) -> Value {
        let lnz = self.ln(sm.z);
        let px = self.dot(&sm.probs, &sm.shifted);
        self.sub(lnz, px)
    }

    /// Reverse sweep accumulating d(root)/d(node) into every ancestor's grad.
    /// Gradients add across the multiple uses of a node. Call once per
    /// recording; a second call would accumulate a second copy.
    pub fn backward(&mut self, root: Value) {
        self.grad[root.0 as usize] = self.grad[root.0 as usize] + F::one();
        for i in (0..self.data.len()).rev() {
            let g = self.grad[i];
            if g == F::zero() {
                continue;
            }
            let s = self.starts[i] as usize;
            let e = self.starts[i + 1] as usize;
            for j in s..e {
                let p = self.parents[j] as usize;
                self.grad[p] = self.grad[p] + g * self.partials[j];
            }
        }
    }

    /// Convenience: the soft XOR a(1-b) + b(1-a).
    pub fn soft_xor(&mut self, a: Value, b: Value) -> Value {
        let nb = self.const_minus(F::one(), b);
        let na = self.const_minus(F::one(), a);
        let l = self.mul(a, nb);
        let r = self.mul(b, na);
        self.add(l, r)
    }

    /// Convenience: the soft OR a + b - ab.
    pub fn soft_or(&mut self, a: Value, b: Value) -> Value {
        let ab = self.mul(a, b);
        let s = self.add(a, b);
        self.sub(s, ab)
    }

    /// Mean of a node slice.
    pub fn mean(&mut self, xs: &[Value]) -> Value {
        let s = self.sum(xs);
        self.mul_const(s, real::<F>(1.0) / real::<F>(xs.len() as f64))
    }
}

impl<F: Real> Default for Tape<F> {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grad_zero_before_backward() {
        let mut t: Tape<f64> = Tape::new();
        let x = t.leaf(2.0);
        let y = t.leaf(3.0);
        let _ = t.mul(x, y);
        assert_eq!(t.grad(x), 0.0);
        assert_eq!(t.grad(y), 0.0);
    }

    #[test]
    fn product_rule() {
        let mut t: Tape<f64> = Tape::new();
        let x = t.leaf(2.0);
        let y = t.leaf(3.0);
        let p = t.mul(x, y);
        t.backward(p);
        assert_eq!(t.grad(x), 3.0);
        assert_eq!(t.grad(y), 2.0);
    }

    #[test]
    fn fanout_accumulates() {
        let mut t: Tape<f64> = Tape::new();
        let x = t.leaf(1.0);
        let s = t.add(x, x);
        t.backward(s);
        assert_eq!(t.grad(x), 2.0);
    }

    #[test]
    fn fanout_many_consumers() {
        // A value feeding k consumers accumulates the sum of k path gradients.
        let mut t: Tape<f64> = Tape::new();
        let x = t.leaf(0.7);
        let consumers: Vec<Value> = (0..5).map(|i| t.mul_const(x, i as f64)).collect();
        let s = t.sum(&consumers);
        t.backward(s);
        assert_eq!(t.grad(x), 0.0 + 1.0 + 2.0 + 3.0 + 4.0);
    }

    #[test]
    fn softmax_on_tape_matches_plain() {
        let mut t: Tape<f64> = Tape::new();
        let ls: Vec<Value> = [1.0, 2.0, 3.0].iter().map(|&x| t.leaf(x)).collect();
        let sm = t.softmax(&ls).unwrap();
        let plain = crate::diff::softmax_slice(&[1.0f64, 2.0, 3.0]).unwrap();
        for (v, p) in sm.probs.iter().zip(&plain) {
            assert!((t.data(*v) - p).abs() < 1e-15);
        }
        let sum: f64 = sm.probs.iter().map(|&v| t.data(v)).sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn entropy_on_tape_matches_plain() {
        let mut t: Tape<f64> = Tape::new();
        let ls: Vec<Value> = [0.3, -1.2, 2.0, 0.0].iter().map(|&x| t.leaf(x)).collect();
        let sm = t.softmax(&ls).unwrap();
        let h = t.entropy(&sm);
        let plain = crate::diff::softmax_slice(&[0.3f64, -1.2, 2.0, 0.0]).unwrap();
        assert!((t.data(h) - crate::diff::entropy_slice(&plain)).abs() < 1e-12);
    }

    #[test]
    fn clamp_passes_gradient_inside_only() {
        let mut t: Tape<f64> = Tape::new();
        let x = t.leaf(0.5);
        let c = t.clamp(x, 0.0, 1.0);
        t.backward(c);
        assert_eq!(t.grad(x), 1.0);

        let mut t: Tape<f64> = Tape::new();
        let x = t.leaf(1.5);
        let c = t.clamp(x, 0.0, 1.0);
        assert_eq!(t.data(c), 1.0);
        t.backward(c);
        assert_eq!(t.grad(x), 0.0);
    }

    #[test]
    fn lerp_matches_formula() {
        let mut t: Tape<f64> = Tape::new();
        let lo = t.leaf(0.2);
        let hi = t.leaf(0.8);
        let s = t.leaf(0.5);
        let v = t.lerp(lo, hi, s);
        assert!((t.data(v) - 0.5).abs() < 1e-15);
        t.backward(v);
        assert!((t.grad(lo) - 0.5).abs() < 1e-15);
        assert!((t.grad(hi) - 0.5).abs() < 1e-15);
        assert!((t.grad(s) - 0.6).abs() < 1e-15);
    }

    #[test]
    fn clear_reuses_tape() {
        let mut t: Tape<f64> = Tape::new();
        let x = t.leaf(1.0);
        let _ = t.exp(x);
        t.clear();
        assert!(t.is_empty());
        let y = t.leaf(4.0);
        let z = t.mul(y, y);
        t.backward(z);
        assert_eq!(t.grad(y), 8.0);
    }
}
