use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::ops::{self, Op};
use super::{Backend, Tensor};
use crate::{Error, Result};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Option<Op>,
    inputs: Vec<usize>,
}

/// Append-only record of executed ops.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    params: BTreeMap<String, usize>,
    clamped: usize,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn param_var(&self, name: &str) -> Option<Var> {
        self.params.get(name).map(|&i| Var(i))
    }

    fn push(&mut self, value: Tensor, op: Option<Op>, inputs: Vec<usize>) -> Var {
        self.nodes.push(Node { value, op, inputs });
        Var(self.nodes.len() - 1)
    }

    /// Pulls the gradient of the scalar `loss` back to every leaf (constants
    /// and parameters).
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let root = self
            .nodes
            .get(loss.0)
            .ok_or_else(|| Error::InvalidArgument(format!("var {} is not on this tape", loss.0)))?;
        if root.value.len() != 1 {
            return Err(Error::shape(
                "backward",
                format!("loss must be scalar, got dims {:?}", root.value.dims()),
            ));
        }
        let mut grads: Vec<Option<Tensor>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::filled(root.value.dims(), 1.0));
        for i in (0..=loss.0).rev() {
            let node = &self.nodes[i];
            let Some(op) = &node.op else { continue };
            let Some(g) = grads[i].take() else { continue };
            let inputs: Vec<&Tensor> = node.inputs.iter().map(|&j| &self.nodes[j].value).collect();
            let adjoints = ops::backward(op, &inputs, &node.value, &g);
            for (&j, adj) in node.inputs.iter().zip(adjoints) {
                match &mut grads[j] {
                    Some(acc) => acc.add_assign(&adj),
                    slot @ None => *slot = Some(adj),
                }
            }
        }
        let leaves = grads
            .into_iter()
            .enumerate()
            .filter_map(|(i, g)| g.map(|g| (i, g)))
            .collect();
        Ok(Gradients {
            leaves,
            params: self.params.clone(),
            dims: self.nodes.iter().map(|n| n.value.dims().to_vec()).collect(),
        })
    }
}

impl Backend for Tape {
    type Value = Var;

    fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, None, Vec::new())
    }

    fn param(&mut self, name: &str, value: &Tensor) -> Var {
        if let Some(&i) = self.params.get(name) {
            return Var(i);
        }
        let v = self.push(value.clone(), None, Vec::new());
        self.params.insert(name.into(), v.0);
        v
    }

    fn value<'a>(&'a self, v: &'a Var) -> &'a Tensor {
        &self.nodes[v.0].value
    }

    fn apply(&mut self, op: Op, inputs: &[&Var]) -> Result<Var> {
        let values: Vec<&Tensor> = inputs.iter().map(|v| &self.nodes[v.0].value).collect();
        let (out, clamped) = ops::forward(&op, &values)?;
        self.clamped += clamped;
        Ok(self.push(out, Some(op), inputs.iter().map(|v| v.0).collect()))
    }

    fn clamp_count(&self) -> usize {
        self.clamped
    }
}

/// Gradients of a scalar loss with respect to the leaves of a tape.
#[derive(Debug)]
pub struct Gradients {
    leaves: BTreeMap<usize, Tensor>,
    params: BTreeMap<String, usize>,
    dims: Vec<Vec<usize>>,
}

impl Gradients {
    /// Gradient for a leaf; zeros if the loss does not depend on it.
    pub fn wrt(&self, v: Var) -> Tensor {
        self.leaves
            .get(&v.0)
            .cloned()
            .unwrap_or_else(|| Tensor::zeros(&self.dims[v.0]))
    }

    pub fn param(&self, name: &str) -> Option<Tensor> {
        self.params.get(name).map(|&i| self.wrt(Var(i)))
    }

    /// Name-keyed gradients for every registered parameter.
    pub fn params(&self) -> BTreeMap<String, Tensor> {
        self.params
            .iter()
            .map(|(name, &i)| (name.clone(), self.wrt(Var(i))))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_of_param_has_unit_gradient() {
        let mut tape = Tape::new();
        let w = tape.param("w", &Tensor::from_rows(&[[1.0, -2.0], [3.0, 4.0]]));
        let s = tape.sum(&w).unwrap();
        let g = tape.backward(s).unwrap();
        assert_eq!(g.param("w").unwrap().data(), &[1.0; 4]);
    }

    #[test]
    fn unused_param_gets_zero_gradient() {
        let mut tape = Tape::new();
        let a = tape.param("a", &Tensor::from_rows(&[[1.0, 2.0]]));
        let _b = tape.param("b", &Tensor::from_rows(&[[5.0], [6.0]]));
        let loss = tape.mean(&a).unwrap();
        let g = tape.backward(loss).unwrap();
        assert_eq!(g.param("b").unwrap(), Tensor::zeros(&[2, 1]));
        assert_eq!(g.param("a").unwrap().data(), &[0.5, 0.5]);
    }

    #[test]
    fn non_scalar_loss_is_rejected() {
        let mut tape = Tape::new();
        let a = tape.param("a", &Tensor::from_rows(&[[1.0, 2.0]]));
        assert!(matches!(tape.backward(a), Err(Error::Shape { .. })));
    }

    #[test]
    fn relu_mask_and_subgradient() {
        let mut tape = Tape::new();
        let x = tape.param("x", &Tensor::from_rows(&[[-1.0, 0.0, 2.0]]));
        let y = tape.relu(&x).unwrap();
        assert_eq!(tape.value(&y).data(), &[0.0, 0.0, 2.0]);
        let s = tape.sum(&y).unwrap();
        let g = tape.backward(s).unwrap();
        assert_eq!(g.param("x").unwrap().data(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn mean_over_rows_adjoint_is_uniform() {
        let mut tape = Tape::new();
        let x = tape.param("x", &Tensor::from_rows(&[[1.0, 3.0], [3.0, 1.0], [0.0, 0.0], [2.0, 2.0]]));
        let m = tape.mean_rows(&x).unwrap();
        assert_eq!(tape.value(&m).data(), &[1.5, 1.5]);
        let s = tape.sum(&m).unwrap();
        let g = tape.backward(s).unwrap();
        assert!(g.param("x").unwrap().data().iter().all(|&v| v == 0.25));
    }

    #[test]
    fn shared_inputs_accumulate() {
        let mut tape = Tape::new();
        let x = tape.param("x", &Tensor::from_rows(&[[3.0]]));
        let y = tape.mul(&x, &x).unwrap();
        let z = tape.add(&y, &x).unwrap();
        let s = tape.sum(&z).unwrap();
        let g = tape.backward(s).unwrap();
        assert_eq!(g.param("x").unwrap().data(), &[7.0]);
    }

    #[test]
    fn acos_clamps_and_counts() {
        let mut tape = Tape::new();
        let x = tape.param("x", &Tensor::from_rows(&[[1.0, -1.0, 0.0]]));
        let y = tape.acos(&x).unwrap();
        assert_eq!(tape.clamp_count(), 2);
        let s = tape.sum(&y).unwrap();
        let g = tape.backward(s).unwrap().param("x").unwrap();
        assert!(g.is_finite());
        assert_eq!(&g.data()[..2], &[0.0, 0.0]);
        assert_eq!(g.data()[2], -1.0);
    }

    #[test]
    fn non_finite_forward_trips() {
        let mut tape = Tape::new();
        let a = tape.constant(Tensor::from_rows(&[[1.0]]));
        let b = tape.constant(Tensor::from_rows(&[[0.0]]));
        assert!(matches!(tape.div(&a, &b), Err(Error::NonFinite("div"))));
    }
}
