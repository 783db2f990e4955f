use std::sync::Arc;

use super::{nll_with_grads, CrfParams};
use crate::tensor::{CustomOp, Graph, ParamId, ParamStore, Tensor, Var};
use crate::{Error, Result};

/// CRF scores held as trainable parameters `{prefix}.transitions`,
/// `{prefix}.start`, `{prefix}.end`, all initialised to zero.
#[derive(Clone, Copy, Debug)]
pub struct CrfLayer {
    pub k: usize,
    pub transitions: ParamId,
    pub start: ParamId,
    pub end: ParamId,
}

impl CrfLayer {
    pub fn new(store: &mut ParamStore, prefix: &str, k: usize) -> Result<Self> {
        Ok(CrfLayer {
            k,
            transitions: store.add(format!("{prefix}.transitions"), Tensor::zeros(&[k, k]))?,
            start: store.add(format!("{prefix}.start"), Tensor::zeros(&[k]))?,
            end: store.add(format!("{prefix}.end"), Tensor::zeros(&[k]))?,
        })
    }

    pub fn find(store: &ParamStore, prefix: &str) -> Result<Self> {
        let get = |s: &str| {
            store
                .id(&format!("{prefix}.{s}"))
                .ok_or_else(|| Error::contract(format!("missing parameter {prefix}.{s}")))
        };
        let transitions = get("transitions")?;
        Ok(CrfLayer {
            k: store.value(transitions).rows(),
            transitions,
            start: get("start")?,
            end: get("end")?,
        })
    }

    /// Current parameter values.
    pub fn params(&self, store: &ParamStore) -> CrfParams {
        CrfParams {
            k: self.k,
            transitions: store.value(self.transitions).data().to_vec(),
            start: store.value(self.start).data().to_vec(),
            end: store.value(self.end).data().to_vec(),
        }
    }

    /// Sequence NLL of `gold` given a `T x K` emission node.
    pub fn nll(&self, g: &mut Graph, store: &ParamStore, emissions: Var, gold: &[usize]) -> Result<Var> {
        let t = g.param(store, self.transitions);
        let s = g.param(store, self.start);
        let e = g.param(store, self.end);
        crf_nll(g, emissions, t, s, e, gold)
    }
}

/// Graph node for the CRF negative log-likelihood of a fixed gold sequence.
#[derive(Debug)]
pub struct CrfNllOp {
    gold: Vec<usize>,
}

fn params_from(k: usize, trans: &Tensor, start: &Tensor, end: &Tensor) -> CrfParams {
    CrfParams {
        k,
        transitions: trans.data().to_vec(),
        start: start.data().to_vec(),
        end: end.data().to_vec(),
    }
}

impl CustomOp for CrfNllOp {
    fn name(&self) -> &'static str {
        "crf_nll"
    }

    fn backward(&self, inputs: &[&Tensor], _output: &Tensor, grad_out: &[f64]) -> Vec<Vec<f64>> {
        let k = inputs[0].cols();
        let p = params_from(k, inputs[1], inputs[2], inputs[3]);
        let (_, gr) = nll_with_grads(inputs[0], &self.gold, &p).expect("validated in forward");
        let s = grad_out[0];
        let scale = |v: Vec<f64>| v.into_iter().map(|x| x * s).collect();
        vec![scale(gr.emissions), scale(gr.transitions), scale(gr.start), scale(gr.end)]
    }
}

/// Differentiable `log Z - score(gold)`.
pub fn crf_nll(g: &mut Graph, emissions: Var, transitions: Var, start: Var, end: Var, gold: &[usize]) -> Result<Var> {
    let ev = g.value(emissions);
    if ev.shape().len() != 2 {
        return Err(Error::contract("CRF emissions must be a T x K matrix"));
    }
    let k = ev.cols();
    let p = params_from(k, g.value(transitions), g.value(start), g.value(end));
    if p.transitions.len() != k * k || p.start.len() != k || p.end.len() != k {
        return Err(Error::contract("CRF parameter shapes do not match emission width"));
    }
    let (loss, _) = nll_with_grads(ev, gold, &p)?;
    let op = Arc::new(CrfNllOp { gold: gold.to_vec() });
    Ok(g.custom(op, &[emissions, transitions, start, end], Tensor::scalar(loss)))
}
