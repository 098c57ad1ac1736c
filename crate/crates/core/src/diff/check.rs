use super::tape::{Tape, Value};

/// Compares reverse-mode gradients against central finite differences.
///
/// `f` must record the same computation for any input values. Differences are
/// taken with the given `step`; a mismatch beyond
/// `rel_tol * max(|analytic|, |numeric|) + 1e-8` fails with a message naming
/// the input index.
pub fn gradcheck<FN>(inputs: &[f64], step: f64, rel_tol: f64, f: FN) -> Result<(), String>
where
    FN: Fn(&mut Tape<f64>, &[Value]) -> Value,
{
    let mut tape: Tape<f64> = Tape::new();
    let leaves: Vec<Value> = inputs.iter().map(|&x| tape.leaf(x)).collect();
    let root = f(&mut tape, &leaves);
    tape.backward(root);
    let analytic: Vec<f64> = leaves.iter().map(|&l| tape.grad(l)).collect();

    let eval = |xs: &[f64]| -> f64 {
        let mut t: Tape<f64> = Tape::new();
        let ls: Vec<Value> = xs.iter().map(|&x| t.leaf(x)).collect();
        let r = f(&mut t, &ls);
        t.data(r)
    };

    let mut probe = inputs.to_vec();
    for i in 0..inputs.len() {
        probe[i] = inputs[i] + step;
        let hi = eval(&probe);
        probe[i] = inputs[i] - step;
        let lo = eval(&probe);
        probe[i] = inputs[i];
        let numeric = (hi - lo) / (2.0 * step);
        let a = analytic[i];
        let tol = rel_tol * a.abs().max(numeric.abs()) + 1e-8;
        if (a - numeric).abs() > tol {
            return Err(format!(
                "gradient mismatch at input {i}: analytic {a:.10e}, finite-difference {numeric:.10e}"
            ));
        }
    }
    Ok(())
}
