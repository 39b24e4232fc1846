//! Central finite-difference checks for taped computations.

use alloc::format;
use alloc::vec::Vec;

use super::{Backend, Tape, Tensor, Var};
use crate::{Error, Result};

/// Step used by [`check`] unless a caller asks for another one.
pub const DEFAULT_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    /// `max |analytic - numeric| / max(max |analytic|, max |numeric|, 1e-6)`
    /// over every input element.
    pub relative_error: f64,
    pub max_abs_gradient: f64,
    pub evaluations: usize,
}

fn eval<F>(inputs: &[Tensor], f: &F) -> Result<(Tape, Vec<Var>, Var)>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs
        .iter()
        .enumerate()
        .map(|(i, t)| tape.param(&format!("x{i}"), t))
        .collect();
    let loss = f(&mut tape, &vars)?;
    if tape.value(&loss).len() != 1 {
        return Err(Error::shape("gradcheck", "function must return a scalar"));
    }
    Ok((tape, vars, loss))
}

/// Compares the tape gradient of the scalar `f(inputs)` against central
/// differences with step `h`.
pub fn check<F>(inputs: &[Tensor], h: f64, f: F) -> Result<GradCheck>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    let (tape, vars, loss) = eval(inputs, &f)?;
    let grads = tape.backward(loss)?;
    let analytic: Vec<Tensor> = vars.iter().map(|&v| grads.wrt(v)).collect();

    let mut numeric = Vec::with_capacity(inputs.len());
    let mut evaluations = 1;
    let mut probe = inputs.to_vec();
    for (t, input) in inputs.iter().enumerate() {
        let mut fd = Vec::with_capacity(input.len());
        for i in 0..input.len() {
            let x = input.data()[i];
            let mut at = |value: f64| -> Result<f64> {
                probe[t].data_mut()[i] = value;
                let (tape, _, loss) = eval(&probe, &f)?;
                Ok(tape.value(&loss).data()[0])
            };
            let plus = at(x + h)?;
            let minus = at(x - h)?;
            probe[t].data_mut()[i] = x;
            evaluations += 2;
            fd.push((plus - minus) / (2.0 * h));
        }
        numeric.push(fd);
    }

    let mut max_diff: f64 = 0.0;
    let mut scale: f64 = 1e-6;
    let mut max_abs: f64 = 0.0;
    for (a, n) in analytic.iter().zip(&numeric) {
        for (&g, &d) in a.data().iter().zip(n) {
            max_diff = max_diff.max((g - d).abs());
            scale = scale.max(g.abs()).max(d.abs());
            max_abs = max_abs.max(g.abs());
        }
    }
    Ok(GradCheck {
        relative_error: max_diff / scale,
        max_abs_gradient: max_abs,
        evaluations,
    })
}
