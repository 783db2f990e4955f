use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use super::{ParamId, ParamStore, Tensor};
use crate::{Error, Result};

/// Handle to a node on a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

/// An operation with a hand-written backward pass.
///
/// The forward value is computed by the caller and handed to
/// [`Graph::custom`]; `backward` maps the output gradient to one gradient per
/// input, each shaped like that input.
pub trait CustomOp: Send + Sync {
    fn name(&self) -> &'static str;
    fn backward(&self, inputs: &[&Tensor], output: &Tensor, grad_out: &[f64]) -> Vec<Vec<f64>>;
}

enum Op {
    Input,
    Param(ParamId),
    Gather { param: ParamId, row: usize },
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    AddN(Vec<Var>),
    Tanh(Var),
    Sigmoid(Var),
    Concat(Vec<Var>),
    Slice { src: Var, start: usize },
    Stack(Vec<Var>),
    Sum(Var),
    LogSoftmax(Var),
    SoftmaxXent { logits: Var, target: usize, probs: Vec<f64> },
    Mask { src: Var, mask: Vec<f64> },
    Custom { op: Arc<dyn CustomOp>, inputs: Vec<Var> },
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Input => "input",
            Op::Param(_) => "param",
            Op::Gather { .. } => "embedding_lookup",
            Op::MatMul(..) => "matmul",
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "mul",
            Op::Scale(..) => "scale",
            Op::AddN(_) => "add_n",
            Op::Tanh(_) => "tanh",
            Op::Sigmoid(_) => "sigmoid",
            Op::Concat(_) => "concat",
            Op::Slice { .. } => "slice",
            Op::Stack(_) => "stack",
            Op::Sum(_) => "sum",
            Op::LogSoftmax(_) => "log_softmax",
            Op::SoftmaxXent { .. } => "softmax_cross_entropy",
            Op::Mask { .. } => "dropout",
            Op::Custom { op, .. } => op.name(),
        }
    }
}

struct Node {
    value: Tensor,
    op: Op,
}

/// Tape for one forward pass.
///
/// Every builder method validates shapes and panics on misuse, the same way
/// slice indexing does: a shape mismatch is a programming error in model
/// code, not a runtime condition. Non-finite results are recorded and
/// reported by [`Graph::backward`].
#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
    param_cache: HashMap<ParamId, Var>,
    first_nonfinite: Option<&'static str>,
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Graph").field("nodes", &self.nodes.len()).finish()
    }
}

/// Gradients of graph inputs, returned by [`Graph::backward`].
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
}

impl Gradients {
    /// Gradient of the loss w.r.t. `var`; `None` when the loss does not
    /// depend on it.
    pub fn get(&self, var: Var) -> Option<&[f64]> {
        self.grads.get(var.0).and_then(|g| g.as_deref())
    }
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        if self.first_nonfinite.is_none() && !value.is_finite() {
            self.first_nonfinite = Some(op.name());
        }
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn input(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Input)
    }

    /// Leaf bound to a stored parameter. Repeated calls reuse the same node.
    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Var {
        if let Some(&v) = self.param_cache.get(&id) {
            return v;
        }
        let v = self.push(store.value(id).clone(), Op::Param(id));
        self.param_cache.insert(id, v);
        v
    }

    /// Row `row` of a matrix parameter, without copying the whole table.
    pub fn gather(&mut self, store: &ParamStore, id: ParamId, row: usize) -> Var {
        let table = store.value(id);
        assert!(
            row < table.rows(),
            "embedding row {row} out of range for {} rows",
            table.rows()
        );
        let value = Tensor::vector(table.row(row).to_vec());
        self.push(value, Op::Gather { param: id, row })
    }

    /// `[m,k] x [k] -> [m]` or `[m,k] x [k,n] -> [m,n]`.
    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let (av, bv) = (self.value(a), self.value(b));
        assert_eq!(av.shape().len(), 2, "matmul lhs must be a matrix");
        let (m, k) = (av.shape()[0], av.shape()[1]);
        assert_eq!(bv.rows(), k, "matmul inner dimension mismatch");
        let n = if bv.shape().len() == 1 { 1 } else { bv.shape()[1] };
        let mut out = vec![0.0; m * n];
        let (ad, bd) = (av.data(), bv.data());
        for i in 0..m {
            let arow = &ad[i * k..(i + 1) * k];
            let orow = &mut out[i * n..(i + 1) * n];
            for (p, &a_ip) in arow.iter().enumerate() {
                let brow = &bd[p * n..(p + 1) * n];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += a_ip * b;
                }
            }
        }
        let shape = if bv.shape().len() == 1 { vec![m] } else { vec![m, n] };
        let t = Tensor::new(shape, out).expect("matmul shape");
        self.push(t, Op::MatMul(a, b))
    }

    fn zip_with(&mut self, a: Var, b: Var, f: impl Fn(f64, f64) -> f64, op: Op) -> Var {
        let (av, bv) = (self.value(a), self.value(b));
        assert_eq!(av.shape(), bv.shape(), "elementwise shape mismatch in {}", op.name());
        let data = av.data().iter().zip(bv.data()).map(|(&x, &y)| f(x, y)).collect();
        let t = Tensor::new(av.shape().to_vec(), data).expect("shape");
        self.push(t, op)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        self.zip_with(a, b, |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        self.zip_with(a, b, |x, y| x - y, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        self.zip_with(a, b, |x, y| x * y, Op::Mul(a, b))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let t = self.map(a, |x| x * c);
        self.push(t, Op::Scale(a, c))
    }

    /// Elementwise sum of same-shaped nodes.
    pub fn add_n(&mut self, vars: &[Var]) -> Var {
        assert!(!vars.is_empty(), "add_n of nothing");
        let mut acc = self.value(vars[0]).clone();
        for &v in &vars[1..] {
            let vv = self.value(v);
            assert_eq!(vv.shape(), acc.shape(), "add_n shape mismatch");
            for (a, b) in acc.data_mut().iter_mut().zip(vv.data()) {
                *a += b;
            }
        }
        self.push(acc, Op::AddN(vars.to_vec()))
    }

    fn map(&self, a: Var, f: impl Fn(f64) -> f64) -> Tensor {
        let av = self.value(a);
        Tensor::new(av.shape().to_vec(), av.data().iter().map(|&x| f(x)).collect()).expect("shape")
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let t = self.map(a, f64::tanh);
        self.push(t, Op::Tanh(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let t = self.map(a, sigmoid);
        self.push(t, Op::Sigmoid(a))
    }

    /// Concatenation of vectors.
    pub fn concat(&mut self, vars: &[Var]) -> Var {
        assert!(!vars.is_empty(), "concat of nothing");
        let data: Vec<f64> = vars.iter().flat_map(|&v| self.value(v).data().to_vec()).collect();
        self.push(Tensor::vector(data), Op::Concat(vars.to_vec()))
    }

    /// `len` consecutive elements of the flattened source, as a vector.
    pub fn slice(&mut self, src: Var, start: usize, len: usize) -> Var {
        let sv = self.value(src);
        assert!(start + len <= sv.len() && len > 0, "slice out of range");
        let t = Tensor::vector(sv.data()[start..start + len].to_vec());
        self.push(t, Op::Slice { src, start })
    }

    /// Stacks equal-length vectors as the rows of a matrix.
    pub fn stack(&mut self, rows: &[Var]) -> Var {
        assert!(!rows.is_empty(), "stack of nothing");
        let cols = self.value(rows[0]).len();
        let mut data = Vec::with_capacity(cols * rows.len());
        for &r in rows {
            let rv = self.value(r);
            assert_eq!(rv.len(), cols, "stack row length mismatch");
            data.extend_from_slice(rv.data());
        }
        let t = Tensor::matrix(rows.len(), cols, data).expect("stack shape");
        self.push(t, Op::Stack(rows.to_vec()))
    }

    pub fn row(&mut self, matrix: Var, i: usize) -> Var {
        let cols = self.value(matrix).cols();
        self.slice(matrix, i * cols, cols)
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).data().iter().sum();
        self.push(Tensor::scalar(s), Op::Sum(a))
    }

    /// Row-wise log-softmax for vectors and matrices.
    pub fn log_softmax(&mut self, a: Var) -> Var {
        let av = self.value(a);
        let cols = if av.shape().len() == 1 { av.len() } else { av.cols() };
        let mut out = av.data().to_vec();
        for row in out.chunks_mut(cols) {
            let lse = logsumexp(row);
            row.iter_mut().for_each(|x| *x -= lse);
        }
        let t = Tensor::new(av.shape().to_vec(), out).expect("shape");
        self.push(t, Op::LogSoftmax(a))
    }

    /// `-log softmax(logits)[target]` as a scalar.
    pub fn softmax_cross_entropy(&mut self, logits: Var, target: usize) -> Var {
        let lv = self.value(logits).data();
        assert!(target < lv.len(), "target class {target} out of range");
        let probs = softmax(lv);
        let loss = logsumexp(lv) - lv[target];
        self.push(
            Tensor::scalar(loss),
            Op::SoftmaxXent {
                logits,
                target,
                probs,
            },
        )
    }

    /// Elementwise multiplication by a constant mask (inverted dropout).
    pub fn mask(&mut self, src: Var, mask: Vec<f64>) -> Var {
        assert_eq!(mask.len(), self.value(src).len(), "mask length mismatch");
        let sv = self.value(src);
        let data = sv.data().iter().zip(&mask).map(|(x, m)| x * m).collect();
        let t = Tensor::new(sv.shape().to_vec(), data).expect("shape");
        self.push(t, Op::Mask { src, mask })
    }

    pub fn custom(&mut self, op: Arc<dyn CustomOp>, inputs: &[Var], value: Tensor) -> Var {
        self.push(
            value,
            Op::Custom {
                op,
                inputs: inputs.to_vec(),
            },
        )
    }

    /// Reverse pass from a scalar `loss`, seeded with 1.
    pub fn backward(&self, loss: Var, store: &mut ParamStore) -> Result<Gradients> {
        self.backward_scaled(loss, 1.0, store)
    }

    /// Reverse pass seeded with `seed`; parameter gradients are *added* to
    /// whatever the store already holds, so several graphs can contribute
    /// to one optimizer step.
    pub fn backward_scaled(&self, loss: Var, seed: f64, store: &mut ParamStore) -> Result<Gradients> {
        let lv = self.value(loss);
        if lv.len() != 1 {
            return Err(Error::contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                lv.shape()
            )));
        }
        if let Some(op) = self.first_nonfinite {
            return Err(Error::Numeric { op });
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(vec![seed]);

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            if matches!(node.op, Op::Input) {
                grads[idx] = Some(g);
                continue;
            }
            match &node.op {
                Op::Input => unreachable!(),
                Op::Param(id) => store.accumulate(*id, &g),
                Op::Gather { param, row } => store.accumulate_row(*param, *row, &g),
                Op::MatMul(a, b) => {
                    let (av, bv) = (self.value(*a), self.value(*b));
                    let (m, k) = (av.shape()[0], av.shape()[1]);
                    let n = if bv.shape().len() == 1 { 1 } else { bv.shape()[1] };
                    let (ad, bd) = (av.data(), bv.data());
                    // dA = G B^T, dB = A^T G
                    let mut da = vec![0.0; m * k];
                    let mut db = vec![0.0; k * n];
                    for i in 0..m {
                        let grow = &g[i * n..(i + 1) * n];
                        for p in 0..k {
                            let brow = &bd[p * n..(p + 1) * n];
                            let mut s = 0.0;
                            for (gv, bvv) in grow.iter().zip(brow) {
                                s += gv * bvv;
                            }
                            da[i * k + p] += s;
                            let a_ip = ad[i * k + p];
                            let dbrow = &mut db[p * n..(p + 1) * n];
                            for (d, gv) in dbrow.iter_mut().zip(grow) {
                                *d += a_ip * gv;
                            }
                        }
                    }
                    add_grad(&mut grads, *a, da);
                    add_grad(&mut grads, *b, db);
                }
                Op::Add(a, b) => {
                    add_grad(&mut grads, *a, g.clone());
                    add_grad(&mut grads, *b, g);
                }
                Op::Sub(a, b) => {
                    add_grad(&mut grads, *a, g.clone());
                    add_grad(&mut grads, *b, g.iter().map(|x| -x).collect());
                }
                Op::Mul(a, b) => {
                    let (av, bv) = (self.value(*a).data(), self.value(*b).data());
                    let ga = g.iter().zip(bv).map(|(g, b)| g * b).collect();
                    let gb = g.iter().zip(av).map(|(g, a)| g * a).collect();
                    add_grad(&mut grads, *a, ga);
                    add_grad(&mut grads, *b, gb);
                }
                Op::Scale(a, c) => add_grad(&mut grads, *a, g.iter().map(|x| x * c).collect()),
                Op::AddN(vars) => {
                    for v in vars {
                        add_grad(&mut grads, *v, g.clone());
                    }
                }
                Op::Tanh(a) => {
                    let y = node.value.data();
                    add_grad(&mut grads, *a, g.iter().zip(y).map(|(g, y)| g * (1.0 - y * y)).collect());
                }
                Op::Sigmoid(a) => {
                    let y = node.value.data();
                    add_grad(&mut grads, *a, g.iter().zip(y).map(|(g, y)| g * y * (1.0 - y)).collect());
                }
                Op::Concat(vars) => {
                    let mut off = 0;
                    for v in vars {
                        let n = self.value(*v).len();
                        add_grad(&mut grads, *v, g[off..off + n].to_vec());
                        off += n;
                    }
                }
                Op::Slice { src, start } => {
                    let mut full = vec![0.0; self.value(*src).len()];
                    full[*start..*start + g.len()].copy_from_slice(&g);
                    add_grad(&mut grads, *src, full);
                }
                Op::Stack(rows) => {
                    let cols = node.value.cols();
                    for (i, r) in rows.iter().enumerate() {
                        add_grad(&mut grads, *r, g[i * cols..(i + 1) * cols].to_vec());
                    }
                }
                Op::Sum(a) => {
                    let n = self.value(*a).len();
                    add_grad(&mut grads, *a, vec![g[0]; n]);
                }
                Op::LogSoftmax(a) => {
                    let y = node.value.data();
                    let cols = if node.value.shape().len() == 1 {
                        y.len()
                    } else {
                        node.value.cols()
                    };
                    let mut ga = vec![0.0; y.len()];
                    for ((gr, yr), out) in g.chunks(cols).zip(y.chunks(cols)).zip(ga.chunks_mut(cols)) {
                        let gs: f64 = gr.iter().sum();
                        for ((o, gv), yv) in out.iter_mut().zip(gr).zip(yr) {
                            *o = gv - yv.exp() * gs;
                        }
                    }
                    add_grad(&mut grads, *a, ga);
                }
                Op::SoftmaxXent {
                    logits,
                    target,
                    probs,
                } => {
                    let mut gl: Vec<f64> = probs.iter().map(|p| p * g[0]).collect();
                    gl[*target] -= g[0];
                    add_grad(&mut grads, *logits, gl);
                }
                Op::Mask { src, mask } => {
                    add_grad(&mut grads, *src, g.iter().zip(mask).map(|(g, m)| g * m).collect());
                }
                Op::Custom { op, inputs } => {
                    let ins: Vec<&Tensor> = inputs.iter().map(|v| self.value(*v)).collect();
                    let gin = op.backward(&ins, &node.value, &g);
                    assert_eq!(gin.len(), inputs.len(), "custom op `{}` gradient arity", op.name());
                    for (v, gv) in inputs.iter().zip(gin) {
                        add_grad(&mut grads, *v, gv);
                    }
                }
            }
        }
        for (i, g) in grads.iter_mut().enumerate() {
            if !matches!(self.nodes[i].op, Op::Input) {
                *g = None;
            }
        }
        if store_has_nonfinite_grad(store) {
            return Err(Error::Numeric { op: "backward" });
        }
        Ok(Gradients { grads })
    }
}

fn store_has_nonfinite_grad(store: &ParamStore) -> bool {
    store.iter().any(|(_, p)| p.trainable && !p.grad.is_finite())
}

fn add_grad(grads: &mut [Option<Vec<f64>>], v: Var, g: Vec<f64>) {
    match &mut grads[v.0] {
        Some(acc) => {
            for (a, b) in acc.iter_mut().zip(&g) {
                *a += b;
            }
        }
        slot @ None => *slot = Some(g),
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Max-shifted log-sum-exp. Returns `-inf` for an empty slice.
pub fn logsumexp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

pub fn softmax(xs: &[f64]) -> Vec<f64> {
    let lse = logsumexp(xs);
    xs.iter().map(|x| (x - lse).exp()).collect()
}
