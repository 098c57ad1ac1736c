use super::tape::{Tape, Value};
use crate::error::{Error, Result};
use crate::scalar::{real, Real};

/// Identifies one named parameter group inside a [`ParamStore`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GroupId(usize);

struct Group<F> {
    name: String,
    values: Vec<F>,
    m: Vec<F>,
    v: Vec<F>,
}

/// All learned parameters of one network, grouped and named, together with
/// Adam moment state. One store belongs to exactly one training run.
pub struct ParamStore<F> {
    groups: Vec<Group<F>>,
    step: u64,
}

/// Tape leaves for every parameter, in store order. Produced once per
/// recording by [`ParamStore::stage`], consumed by [`ParamStore::adam_step`].
pub struct StagedParams {
    leaves: Vec<Vec<Value>>,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

impl<F: Real> ParamStore<F> {
    pub fn new() -> Self {
        ParamStore { groups: Vec::new(), step: 0 }
    }

    pub fn add_group(&mut self, name: impl Into<String>, values: Vec<F>) -> GroupId {
        let id = GroupId(self.groups.len());
        let n = values.len();
        self.groups.push(Group {
            name: name.into(),
            values,
            m: vec![F::zero(); n],
            v: vec![F::zero(); n],
        });
        id
    }

    pub fn values(&self, id: GroupId) -> &[F] {
        &self.groups[id.0].values
    }

    pub fn values_mut(&mut self, id: GroupId) -> &mut [F] {
        &mut self.groups[id.0].values
    }

    pub fn name(&self, id: GroupId) -> &str {
        &self.groups[id.0].name
    }

    pub fn group_ids(&self) -> impl Iterator<Item = GroupId> {
        (0..self.groups.len()).map(GroupId)
    }

    /// Total number of stored parameters.
    pub fn len(&self) -> usize {
        self.groups.iter().map(|g| g.values.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of optimiser updates applied so far.
    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Records every parameter as a tape leaf, in group order.
    pub fn stage(&self, tape: &mut Tape<F>) -> StagedParams {
        let leaves = self
            .groups
            .iter()
            .map(|g| g.values.iter().map(|&x| tape.leaf(x)).collect())
            .collect();
        StagedParams { leaves }
    }

    /// The staged leaves of one group, in element order.
    pub fn staged(&self, staged: &StagedParams, id: GroupId) -> Vec<Value> {
        staged.leaves[id.0].clone()
    }

    /// One Adam update (beta1 0.9, beta2 0.999, eps 1e-8, bias-corrected)
    /// from the gradients accumulated on `tape`, then zeroes those gradients.
    /// A non-finite gradient aborts with the offending parameter named.
    pub fn adam_step(
        &mut self,
        tape: &mut Tape<F>,
        staged: &StagedParams,
        lr: F,
    ) -> Result<()> {
        let b1 = real::<F>(BETA1);
        let b2 = real::<F>(BETA2);
        let eps = real::<F>(EPS);
        let t = self.step + 1;
        let bc1 = F::one() - real::<F>(BETA1.powi(t as i32));
        let bc2 = F::one() - real::<F>(BETA2.powi(t as i32));
        for (group, leaves) in self.groups.iter_mut().zip(&staged.leaves) {
            debug_assert_eq!(group.values.len(), leaves.len());
            for i in 0..group.values.len() {
                let g = tape.grad(leaves[i]);
                if !g.is_finite() {
                    return Err(Error::Numerical(format!(
                        "non-finite gradient for parameter {}[{i}]",
                        group.name
                    )));
                }
                group.m[i] = b1 * group.m[i] + (F::one() - b1) * g;
                group.v[i] = b2 * group.v[i] + (F::one() - b2) * g * g;
                let mh = group.m[i] / bc1;
                let vh = group.v[i] / bc2;
                group.values[i] = group.values[i] - lr * mh / (vh.sqrt() + eps);
            }
        }
        self.step = t;
        tape.zero_grad();
        Ok(())
    }
}

impl<F: Real> Default for ParamStore<F> {
    fn default() -> Self {
        Self::new()
    }
}

/// Exponentially decayed learning rate lr0 * gamma^epoch.
pub fn decayed_lr<F: Real>(lr0: F, gamma: F, epoch: usize) -> Result<F> {
    if lr0 <= F::zero() {
        return Err(Error::Config(format!("learning rate {lr0} must be positive")));
    }
    if gamma <= F::zero() || gamma > F::one() {
        return Err(Error::Config(format!("decay factor {gamma} outside (0, 1]")));
    }
    Ok(lr0 * gamma.powi(epoch as i32))
}
