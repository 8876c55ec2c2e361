use std::collections::BTreeMap;

use super::tensor::{matmul_at_raw, matmul_bt_raw, matmul_raw, Tensor};
use crate::error::{Error, Result};

/// Lower bound applied to the argument of [`Primitive::Log`].
pub const LOG_FLOOR: f64 = 1e-12;

/// Default negative slope of [`Primitive::LeakyRelu`].
pub const LEAKY_SLOPE: f64 = 0.2;

/// Index of a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Differentiable primitive operations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Primitive {
    /// `[m,k] x [k,n] -> [m,n]`
    MatMul,
    Add,
    Sub,
    /// Elementwise product.
    Mul,
    LeakyRelu { slope: f64 },
    Sigmoid,
    Tanh,
    Exp,
    /// Natural log of `max(x, LOG_FLOOR)`.
    Log,
    Negate,
    Sum,
    Mean,
    Square,
    /// `[m,n] + [n]`, bias broadcast over rows.
    AddBias,
    /// Column-wise concatenation of matrices with equal row counts.
    Concat,
    /// Columns `start..end` of a matrix.
    SliceCols { start: usize, end: usize },
    /// Row-wise log-softmax.
    LogSoftmax,
    Clamp { lo: f64, hi: f64 },
    Scale(f64),
    AddScalar(f64),
}

impl Primitive {
    fn name(&self) -> &'static str {
        match self {
            Primitive::MatMul => "matmul",
            Primitive::Add => "add",
            Primitive::Sub => "sub",
            Primitive::Mul => "mul",
            Primitive::LeakyRelu { .. } => "leaky_relu",
            Primitive::Sigmoid => "sigmoid",
            Primitive::Tanh => "tanh",
            Primitive::Exp => "exp",
            Primitive::Log => "log",
            Primitive::Negate => "negate",
            Primitive::Sum => "sum",
            Primitive::Mean => "mean",
            Primitive::Square => "square",
            Primitive::AddBias => "add_bias",
            Primitive::Concat => "concat",
            Primitive::SliceCols { .. } => "slice_cols",
            Primitive::LogSoftmax => "log_softmax",
            Primitive::Clamp { .. } => "clamp",
            Primitive::Scale(_) => "scale",
            Primitive::AddScalar(_) => "add_scalar",
        }
    }

    fn arity(&self) -> Option<usize> {
        match self {
            Primitive::MatMul
            | Primitive::Add
            | Primitive::Sub
            | Primitive::Mul
            | Primitive::AddBias => Some(2),
            Primitive::Concat => None,
            _ => Some(1),
        }
    }
}

#[derive(Clone, Debug)]
enum NodeKind {
    Param,
    Constant,
    Op(Primitive),
}

#[derive(Clone, Debug)]
struct Node {
    kind: NodeKind,
    inputs: Vec<NodeId>,
    value: Tensor,
    needs_grad: bool,
}

/// Append-only record of an eagerly evaluated computation.
///
/// Inputs of every node reference earlier nodes, so reverse insertion order is
/// a valid topological order for the backward sweep.
#[derive(Clone, Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    params: Vec<NodeId>,
}

/// Gradients of a scalar root with respect to every parameter leaf.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GradientMap {
    grads: BTreeMap<NodeId, Tensor>,
}

impl GradientMap {
    pub fn get(&self, id: NodeId) -> Option<&Tensor> {
        self.grads.get(&id)
    }

    /// Gradients for `ids` in order, cloned out of the map.
    pub fn collect(&self, ids: &[NodeId]) -> Result<Vec<Tensor>> {
        ids.iter()
            .map(|id| {
                self.grads
                    .get(id)
                    .cloned()
                    .ok_or_else(|| Error::contract(format!("node {} is not a parameter", id.0)))
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.grads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&NodeId, &Tensor)> {
        self.grads.iter()
    }
}

fn shape_err(op: &'static str, a: &Tensor, b: &Tensor) -> Error {
    Error::Shape {
        op,
        lhs: a.shape().to_vec(),
        rhs: b.shape().to_vec(),
    }
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

    /// Registers a differentiable leaf.
    pub fn param(&mut self, value: Tensor) -> NodeId {
        let id = self.push(NodeKind::Param, Vec::new(), value, true);
        self.params.push(id);
        id
    }

    /// Registers a leaf that receives no gradient.
    pub fn constant(&mut self, value: Tensor) -> NodeId {
        self.push(NodeKind::Constant, Vec::new(), value, false)
    }

    pub fn params(&self) -> &[NodeId] {
        &self.params
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    fn push(&mut self, kind: NodeKind, inputs: Vec<NodeId>, value: Tensor, needs_grad: bool) -> NodeId {
        let id = NodeId(self.nodes.len());
        self.nodes.push(Node {
            kind,
            inputs,
            value,
            needs_grad,
        });
        id
    }

    /// Evaluates `prim` on the given inputs and appends the result.
    pub fn record(&mut self, prim: Primitive, inputs: &[NodeId]) -> Result<NodeId> {
        if let Some(n) = prim.arity() {
            if inputs.len() != n {
                return Err(Error::contract(format!(
                    "{} takes {n} inputs, got {}",
                    prim.name(),
                    inputs.len()
                )));
            }
        } else if inputs.is_empty() {
            return Err(Error::contract(format!("{} needs at least one input", prim.name())));
        }
        if let Some(bad) = inputs.iter().find(|id| id.0 >= self.nodes.len()) {
            return Err(Error::contract(format!("unknown node {}", bad.0)));
        }
        let value = self.forward(prim, inputs)?;
        let needs_grad = inputs.iter().any(|id| self.nodes[id.0].needs_grad);
        Ok(self.push(NodeKind::Op(prim), inputs.to_vec(), value, needs_grad))
    }

    fn forward(&self, prim: Primitive, inputs: &[NodeId]) -> Result<Tensor> {
        let x = self.value(inputs[0]);
        let out = match prim {
            Primitive::MatMul => {
                let b = self.value(inputs[1]);
                if x.shape().len() != 2 || b.shape().len() != 2 || x.cols() != b.shape()[0] {
                    return Err(shape_err("matmul", x, b));
                }
                let (m, k, n) = (x.shape()[0], x.cols(), b.cols());
                Tensor::matrix(m, n, matmul_raw(x.data(), b.data(), m, k, n))?
            }
            Primitive::Add | Primitive::Sub | Primitive::Mul => {
                let b = self.value(inputs[1]);
                if x.shape() != b.shape() {
                    return Err(shape_err(prim.name(), x, b));
                }
                match prim {
                    Primitive::Add => x.zip_map(b, |p, q| p + q),
                    Primitive::Sub => x.zip_map(b, |p, q| p - q),
                    _ => x.zip_map(b, |p, q| p * q),
                }
            }
            Primitive::AddBias => {
                let b = self.value(inputs[1]);
                if x.shape().len() != 2 || b.len() != x.cols() {
                    return Err(shape_err("add_bias", x, b));
                }
                let mut out = x.clone();
                let c = x.cols();
                for row in out.data_mut().chunks_mut(c) {
                    for (v, bv) in row.iter_mut().zip(b.data()) {
                        *v += bv;
                    }
                }
                out
            }
            Primitive::LeakyRelu { slope } => x.map(|v| if v > 0.0 { v } else { slope * v }),
            Primitive::Sigmoid => x.map(sigmoid),
            Primitive::Tanh => x.map(f64::tanh),
            Primitive::Exp => x.map(f64::exp),
            Primitive::Log => x.map(|v| v.max(LOG_FLOOR).ln()),
            Primitive::Negate => x.map(|v| -v),
            Primitive::Sum => Tensor::scalar(x.data().iter().sum()),
            Primitive::Mean => Tensor::scalar(x.data().iter().sum::<f64>() / x.len() as f64),
            Primitive::Square => x.map(|v| v * v),
            Primitive::Concat => {
                let parts: Vec<&Tensor> = inputs.iter().map(|&id| self.value(id)).collect();
                let rows = x.rows();
                for p in &parts {
                    if p.shape().len() != 2 || p.rows() != rows {
                        return Err(shape_err("concat", x, p));
                    }
                }
                let cols: usize = parts.iter().map(|p| p.cols()).sum();
                let mut data = Vec::with_capacity(rows * cols);
                for r in 0..rows {
                    for p in &parts {
                        data.extend_from_slice(p.row(r));
                    }
                }
                Tensor::matrix(rows, cols, data)?
            }
            Primitive::SliceCols { start, end } => {
                if x.shape().len() != 2 || start >= end || end > x.cols() {
                    return Err(Error::Shape {
                        op: "slice_cols",
                        lhs: x.shape().to_vec(),
                        rhs: vec![start, end],
                    });
                }
                let mut data = Vec::with_capacity(x.rows() * (end - start));
                for r in 0..x.rows() {
                    data.extend_from_slice(&x.row(r)[start..end]);
                }
                Tensor::matrix(x.rows(), end - start, data)?
            }
            Primitive::LogSoftmax => {
                if x.shape().len() != 2 {
                    return Err(shape_err("log_softmax", x, x));
                }
                let mut out = x.clone();
                let c = x.cols();
                for row in out.data_mut().chunks_mut(c) {
                    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
                    for v in row.iter_mut() {
                        *v -= lse;
                    }
                }
                out
            }
            Primitive::Clamp { lo, hi } => x.map(|v| v.clamp(lo, hi)),
            Primitive::Scale(c) => x.map(|v| v * c),
            Primitive::AddScalar(c) => x.map(|v| v + c),
        };
        Ok(out)
    }

    /// Reverse sweep from a scalar `root`.
    ///
    /// Every parameter leaf gets an entry; leaves that do not influence the root
    /// map to zeros.
    pub fn backward(&self, root: NodeId) -> Result<GradientMap> {
        if root.0 >= self.nodes.len() {
            return Err(Error::contract(format!("unknown root node {}", root.0)));
        }
        if !self.value(root).is_scalar() {
            return Err(Error::contract(format!(
                "backward needs a scalar root, got shape {:?}",
                self.value(root).shape()
            )));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; root.0 + 1];
        grads[root.0] = Some(Tensor::filled(self.value(root).shape(), 1.0));

        for idx in (0..=root.0).rev() {
            let node = &self.nodes[idx];
            if !node.needs_grad {
                continue;
            }
            let prim = match node.kind {
                NodeKind::Op(p) => p,
                _ => continue,
            };
            let Some(g) = grads[idx].take() else { continue };
            let contributions = self.vjp(prim, node, &g);
            for (input, contrib) in node.inputs.iter().zip(contributions) {
                let Some(contrib) = contrib else { continue };
                match &mut grads[input.0] {
                    Some(acc) => acc.add_assign(&contrib),
                    slot @ None => *slot = Some(contrib),
                }
            }
        }

        let grads = self
            .params
            .iter()
            .map(|&id| {
                let g = grads
                    .get_mut(id.0)
                    .and_then(Option::take)
                    .unwrap_or_else(|| Tensor::zeros(self.value(id).shape()));
                (id, g)
            })
            .collect();
        Ok(GradientMap { grads })
    }

    /// Vector-Jacobian products of `node` for each of its inputs.
    fn vjp(&self, prim: Primitive, node: &Node, g: &Tensor) -> Vec<Option<Tensor>> {
        let wants = |i: usize| self.nodes[node.inputs[i].0].needs_grad;
        let x = self.value(node.inputs[0]);
        let y = &node.value;
        match prim {
            Primitive::MatMul => {
                let b = self.value(node.inputs[1]);
                let (m, k, n) = (x.shape()[0], x.cols(), b.cols());
                let da = wants(0).then(|| {
                    Tensor::matrix(m, k, matmul_bt_raw(g.data(), b.data(), m, n, k)).unwrap()
                });
                let db = wants(1).then(|| {
                    Tensor::matrix(k, n, matmul_at_raw(x.data(), g.data(), m, k, n)).unwrap()
                });
                vec![da, db]
            }
            Primitive::Add => vec![wants(0).then(|| g.clone()), wants(1).then(|| g.clone())],
            Primitive::Sub => vec![
                wants(0).then(|| g.clone()),
                wants(1).then(|| g.map(|v| -v)),
            ],
            Primitive::Mul => {
                let b = self.value(node.inputs[1]);
                vec![
                    wants(0).then(|| g.zip_map(b, |p, q| p * q)),
                    wants(1).then(|| g.zip_map(x, |p, q| p * q)),
                ]
            }
            Primitive::AddBias => {
                let b = self.value(node.inputs[1]);
                let db = wants(1).then(|| {
                    let c = g.cols();
                    let mut acc = vec![0.0; c];
                    for row in g.data().chunks(c) {
                        for (a, v) in acc.iter_mut().zip(row) {
                            *a += v;
                        }
                    }
                    Tensor::new(b.shape().to_vec(), acc).unwrap()
                });
                vec![wants(0).then(|| g.clone()), db]
            }
            Primitive::LeakyRelu { slope } => {
                vec![Some(g.zip_map(x, |gv, xv| if xv > 0.0 { gv } else { slope * gv }))]
            }
            Primitive::Sigmoid => vec![Some(g.zip_map(y, |gv, s| gv * s * (1.0 - s)))],
            Primitive::Tanh => vec![Some(g.zip_map(y, |gv, t| gv * (1.0 - t * t)))],
            Primitive::Exp => vec![Some(g.zip_map(y, |gv, e| gv * e))],
            Primitive::Log => vec![Some(g.zip_map(x, |gv, xv| {
                if xv > LOG_FLOOR {
                    gv / xv
                } else {
                    0.0
                }
            }))],
            Primitive::Negate => vec![Some(g.map(|v| -v))],
            Primitive::Sum => vec![Some(Tensor::filled(x.shape(), g.item()))],
            Primitive::Mean => vec![Some(Tensor::filled(x.shape(), g.item() / x.len() as f64))],
            Primitive::Square => vec![Some(g.zip_map(x, |gv, xv| 2.0 * xv * gv))],
            Primitive::Concat => {
                let mut offset = 0;
                let rows = g.rows();
                node.inputs
                    .iter()
                    .enumerate()
                    .map(|(i, id)| {
                        let c = self.value(*id).cols();
                        let start = offset;
                        offset += c;
                        wants(i).then(|| {
                            let mut data = Vec::with_capacity(rows * c);
                            for r in 0..rows {
                                data.extend_from_slice(&g.row(r)[start..start + c]);
                            }
                            Tensor::matrix(rows, c, data).unwrap()
                        })
                    })
                    .collect()
            }
            Primitive::SliceCols { start, end } => {
                let mut dx = Tensor::zeros(x.shape());
                let c = x.cols();
                let w = end - start;
                for r in 0..x.rows() {
                    dx.data_mut()[r * c + start..r * c + end].copy_from_slice(&g.data()[r * w..(r + 1) * w]);
                }
                vec![Some(dx)]
            }
            Primitive::LogSoftmax => {
                let c = x.cols();
                let mut dx = g.clone();
                for (dx_row, y_row) in dx.data_mut().chunks_mut(c).zip(y.data().chunks(c)) {
                    let gsum: f64 = dx_row.iter().sum();
                    for (d, lv) in dx_row.iter_mut().zip(y_row) {
                        *d -= lv.exp() * gsum;
                    }
                }
                vec![Some(dx)]
            }
            Primitive::Clamp { lo, hi } => vec![Some(g.zip_map(x, |gv, xv| {
                if xv >= lo && xv <= hi {
                    gv
                } else {
                    0.0
                }
            }))],
            Primitive::Scale(c) => vec![Some(g.map(|v| v * c))],
            Primitive::AddScalar(_) => vec![Some(g.clone())],
        }
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.record(Primitive::MatMul, &[a, b])
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.record(Primitive::Add, &[a, b])
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.record(Primitive::Sub, &[a, b])
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.record(Primitive::Mul, &[a, b])
    }

    pub fn add_bias(&mut self, x: NodeId, bias: NodeId) -> Result<NodeId> {
        self.record(Primitive::AddBias, &[x, bias])
    }

    pub fn leaky_relu(&mut self, x: NodeId, slope: f64) -> Result<NodeId> {
        self.record(Primitive::LeakyRelu { slope }, &[x])
    }

    pub fn sigmoid(&mut self, x: NodeId) -> Result<NodeId> {
        self.record(Primitive::Sigmoid, &[x])
    }

    pub fn tanh(&mut self, x: NodeId) -> Result<NodeId> {
        self.record(Primitive::Tanh, &[x])
    }

    pub fn exp(&mut self, x: NodeId) -> Result<NodeId> {
        self.record(Primitive::Exp, &[x])
    }

    pub fn log(&mut self, x: NodeId) -> Result<NodeId> {
        self.record(Primitive::Log, &[x])
    }

    pub fn neg(&mut self, x: NodeId) -> Result<NodeId> {
        self.record(Primitive::Negate, &[x])
    }

    pub fn sum(&mut self, x: NodeId) -> Result<NodeId> {
        self.record(Primitive::Sum, &[x])
    }

    pub fn mean(&mut self, x: NodeId) -> Result<NodeId> {
        self.record(Primitive::Mean, &[x])
    }

    pub fn square(&mut self, x: NodeId) -> Result<NodeId> {
        self.record(Primitive::Square, &[x])
    }

    pub fn concat(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        self.record(Primitive::Concat, parts)
    }

    pub fn slice_cols(&mut self, x: NodeId, start: usize, end: usize) -> Result<NodeId> {
        self.record(Primitive::SliceCols { start, end }, &[x])
    }

    pub fn log_softmax(&mut self, x: NodeId) -> Result<NodeId> {
        self.record(Primitive::LogSoftmax, &[x])
    }

    pub fn clamp(&mut self, x: NodeId, lo: f64, hi: f64) -> Result<NodeId> {
        self.record(Primitive::Clamp { lo, hi }, &[x])
    }

    pub fn scale(&mut self, x: NodeId, c: f64) -> Result<NodeId> {
        self.record(Primitive::Scale(c), &[x])
    }

    pub fn add_scalar(&mut self, x: NodeId, c: f64) -> Result<NodeId> {
        self.record(Primitive::AddScalar(c), &[x])
    }
}

/// Numerically stable logistic function.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_grad(build: impl Fn(&mut Tape, NodeId) -> NodeId, w: f64) -> f64 {
        let mut tape = Tape::new();
        let p = tape.param(Tensor::scalar(w));
        let root = build(&mut tape, p);
        tape.backward(root).unwrap().get(p).unwrap().item()
    }

    #[test]
    fn matmul_by_hand() {
        let mut tape = Tape::new();
        let a = tape.constant(Tensor::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap());
        let b = tape.constant(Tensor::from_rows(&[[1.0], [1.0]]).unwrap());
        let c = tape.matmul(a, b).unwrap();
        assert_eq!(tape.value(c).shape(), &[2, 1]);
        assert_eq!(tape.value(c).data(), &[3.0, 7.0]);
    }

    #[test]
    fn pointwise_definitions() {
        let mut tape = Tape::new();
        let z = tape.constant(Tensor::scalar(0.0));
        let s = tape.sigmoid(z).unwrap();
        assert_eq!(tape.value(s).item(), 0.5);
        let m = tape.constant(Tensor::scalar(-2.0));
        let l = tape.leaky_relu(m, LEAKY_SLOPE).unwrap();
        assert!((tape.value(l).item() + 0.4).abs() < 1e-15);
    }

    #[test]
    fn shape_errors_name_the_operation() {
        let mut tape = Tape::new();
        let a = tape.constant(Tensor::zeros(&[2, 3]));
        let b = tape.constant(Tensor::zeros(&[2, 3]));
        let err = tape.matmul(a, b).unwrap_err();
        match err {
            Error::Shape { op, lhs, rhs } => {
                assert_eq!(op, "matmul");
                assert_eq!(lhs, vec![2, 3]);
                assert_eq!(rhs, vec![2, 3]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn square_sum_gradient() {
        let g = scalar_grad(
            |t, p| {
                let s = t.square(p).unwrap();
                t.sum(s).unwrap()
            },
            3.0,
        );
        assert_eq!(g, 6.0);
    }

    #[test]
    fn sigmoid_gradient_at_zero() {
        let g = scalar_grad(
            |t, p| {
                let s = t.sigmoid(p).unwrap();
                let c = t.constant(Tensor::scalar(1.0));
                t.mul(s, c).unwrap()
            },
            0.0,
        );
        assert_eq!(g, 0.25);
    }

    #[test]
    fn non_scalar_root_is_rejected() {
        let mut tape = Tape::new();
        let p = tape.param(Tensor::zeros(&[2]));
        assert!(matches!(tape.backward(p), Err(Error::Contract(_))));
    }

    #[test]
    fn unused_param_gets_zero_gradient() {
        let mut tape = Tape::new();
        let used = tape.param(Tensor::scalar(2.0));
        let unused = tape.param(Tensor::zeros(&[2, 2]));
        let root = tape.square(used).unwrap();
        let grads = tape.backward(root).unwrap();
        assert_eq!(grads.len(), 2);
        assert_eq!(grads.get(unused).unwrap(), &Tensor::zeros(&[2, 2]));
    }

    #[test]
    fn reused_node_accumulates() {
        // f(w) = w * w via mul of the same node -> 2w
        let g = scalar_grad(|t, p| t.mul(p, p).unwrap(), 1.5);
        assert_eq!(g, 3.0);
    }

    #[test]
    fn log_is_clamped() {
        let mut tape = Tape::new();
        let p = tape.param(Tensor::scalar(0.0));
        let l = tape.log(p).unwrap();
        assert_eq!(tape.value(l).item(), LOG_FLOOR.ln());
        let g = tape.backward(l).unwrap();
        assert_eq!(g.get(p).unwrap().item(), 0.0);
    }

    #[test]
    fn log_softmax_rows_normalize() {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::from_rows(&[[1.0, 2.0, 3.0], [0.0, 0.0, 0.0]]).unwrap());
        let ls = tape.log_softmax(x).unwrap();
        for r in 0..2 {
            let s: f64 = tape.value(ls).row(r).iter().map(|v| v.exp()).sum();
            assert!((s - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn concat_and_slice_are_inverse() {
        let mut tape = Tape::new();
        let a = tape.param(Tensor::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap());
        let b = tape.param(Tensor::from_rows(&[[5.0], [6.0]]).unwrap());
        let c = tape.concat(&[a, b]).unwrap();
        assert_eq!(tape.value(c).data(), &[1.0, 2.0, 5.0, 3.0, 4.0, 6.0]);
        let s = tape.slice_cols(c, 2, 3).unwrap();
        assert_eq!(tape.value(s).data(), &[5.0, 6.0]);
        let root = tape.sum(s).unwrap();
        let g = tape.backward(root).unwrap();
        assert_eq!(g.get(a).unwrap().data(), &[0.0; 4]);
        assert_eq!(g.get(b).unwrap().data(), &[1.0, 1.0]);
    }
}
