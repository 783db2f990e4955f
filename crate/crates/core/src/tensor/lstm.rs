use rand::Rng;

use super::{init, Graph, ParamId, ParamStore, Tensor, Var};
use crate::{Error, Result};

/// Initial value of the forget-gate bias.
pub const FORGET_BIAS_INIT: f64 = 1.0;

/// One LSTM direction. Gate rows are laid out input, forget, cell, output.
#[derive(Clone, Copy, Debug)]
pub struct LstmCellParams {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub w: ParamId,
    pub u: ParamId,
    pub b: ParamId,
}

impl LstmCellParams {
    /// Registers `{prefix}.w`, `{prefix}.u`, `{prefix}.b` in the store.
    pub fn new<R: Rng>(
        store: &mut ParamStore,
        prefix: &str,
        input_dim: usize,
        hidden_dim: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let h4 = 4 * hidden_dim;
        let w = store.add(format!("{prefix}.w"), init::xavier_uniform(rng, h4, input_dim))?;
        let u = store.add(format!("{prefix}.u"), init::xavier_uniform(rng, h4, hidden_dim))?;
        let mut bias = vec![0.0; h4];
        bias[hidden_dim..2 * hidden_dim].fill(FORGET_BIAS_INIT);
        let b = store.add(format!("{prefix}.b"), Tensor::vector(bias))?;
        Ok(LstmCellParams {
            input_dim,
            hidden_dim,
            w,
            u,
            b,
        })
    }

    /// Looks up an existing cell by prefix.
    pub fn find(store: &ParamStore, prefix: &str) -> Result<Self> {
        let get = |s: &str| {
            store
                .id(&format!("{prefix}.{s}"))
                .ok_or_else(|| Error::contract(format!("missing parameter {prefix}.{s}")))
        };
        let (w, u, b) = (get("w")?, get("u")?, get("b")?);
        let ws = store.value(w).shape();
        Ok(LstmCellParams {
            input_dim: ws[1],
            hidden_dim: ws[0] / 4,
            w,
            u,
            b,
        })
    }

    /// One step: returns `(h, c)`.
    pub fn step(&self, g: &mut Graph, store: &ParamStore, x: Var, h: Var, c: Var) -> (Var, Var) {
        let hd = self.hidden_dim;
        let (w, u, b) = (g.param(store, self.w), g.param(store, self.u), g.param(store, self.b));
        let wx = g.matmul(w, x);
        let uh = g.matmul(u, h);
        let z = g.add_n(&[wx, uh, b]);
        let i = g.slice(z, 0, hd);
        let i = g.sigmoid(i);
        let f = g.slice(z, hd, hd);
        let f = g.sigmoid(f);
        let cand = g.slice(z, 2 * hd, hd);
        let cand = g.tanh(cand);
        let o = g.slice(z, 3 * hd, hd);
        let o = g.sigmoid(o);
        let fc = g.mul(f, c);
        let ic = g.mul(i, cand);
        let c_new = g.add(fc, ic);
        let tc = g.tanh(c_new);
        let h_new = g.mul(o, tc);
        (h_new, c_new)
    }
}

/// Runs one direction over `inputs` in the given order; returns the hidden
/// state after each step.
pub fn lstm_run(g: &mut Graph, store: &ParamStore, cell: &LstmCellParams, inputs: &[Var]) -> Vec<Var> {
    let zero = Tensor::zeros(&[cell.hidden_dim]);
    let mut h = g.input(zero.clone());
    let mut c = g.input(zero);
    let mut out = Vec::with_capacity(inputs.len());
    for &x in inputs {
        let (h2, c2) = cell.step(g, store, x, h, c);
        h = h2;
        c = c2;
        out.push(h);
    }
    out
}

#[derive(Clone, Debug)]
pub struct BiLstmOutput {
    /// `concat(h_fwd[t], h_bwd[t])` per position.
    pub outputs: Vec<Var>,
    /// Forward state after the last input.
    pub final_fwd: Var,
    /// Backward state after consuming the first input.
    pub final_bwd: Var,
}

pub fn bilstm_encode(
    g: &mut Graph,
    store: &ParamStore,
    inputs: &[Var],
    fwd: &LstmCellParams,
    bwd: &LstmCellParams,
) -> Result<BiLstmOutput> {
    if inputs.is_empty() {
        return Err(Error::contract("bilstm_encode on an empty sequence"));
    }
    for &x in inputs {
        let d = g.value(x).len();
        if d != fwd.input_dim || d != bwd.input_dim {
            return Err(Error::contract(format!(
                "input dim {d} does not match LSTM input dims {}/{}",
                fwd.input_dim, bwd.input_dim
            )));
        }
    }
    let hf = lstm_run(g, store, fwd, inputs);
    let rev: Vec<Var> = inputs.iter().rev().copied().collect();
    let mut hb = lstm_run(g, store, bwd, &rev);
    hb.reverse();
    let outputs = hf.iter().zip(&hb).map(|(&a, &b)| g.concat(&[a, b])).collect();
    Ok(BiLstmOutput {
        outputs,
        final_fwd: *hf.last().unwrap(),
        final_bwd: hb[0],
    })
}
