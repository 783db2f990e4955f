//! Exact linear-chain CRF over per-position label scores.
//!
//! A sequence `y` of length `T` scores
//! `start[y_1] + sum_t e[t][y_t] + sum_{t>1} A[y_{t-1}][y_t] + end[y_T]`.
//! All inference runs in log space with max-shifted log-sum-exp.

mod layer;

pub use layer::{crf_nll, CrfLayer, CrfNllOp};

use crate::tensor::logsumexp;
use crate::tensor::Tensor;
use crate::{Error, Result};

/// Plain-value CRF scores for `k` labels.
#[derive(Clone, Debug, PartialEq)]
pub struct CrfParams {
    pub k: usize,
    /// Row-major `k x k`, `transitions[prev * k + next]`.
    pub transitions: Vec<f64>,
    pub start: Vec<f64>,
    pub end: Vec<f64>,
}

impl CrfParams {
    pub fn zeros(k: usize) -> Self {
        assert!(k >= 1, "a CRF needs at least one label");
        CrfParams {
            k,
            transitions: vec![0.0; k * k],
            start: vec![0.0; k],
            end: vec![0.0; k],
        }
    }

    pub fn transition(&self, prev: usize, next: usize) -> f64 {
        self.transitions[prev * self.k + next]
    }
}

fn dims(e: &Tensor, p: &CrfParams) -> (usize, usize) {
    assert_eq!(e.shape().len(), 2, "emissions must be a T x K matrix");
    assert_eq!(e.cols(), p.k, "emission width does not match label count");
    (e.rows(), p.k)
}

pub fn sequence_score(e: &Tensor, y: &[usize], p: &CrfParams) -> Result<f64> {
    let (t, k) = dims(e, p);
    if y.len() != t {
        return Err(Error::contract(format!("label sequence has length {}, emissions {t}", y.len())));
    }
    if let Some(&bad) = y.iter().find(|&&l| l >= k) {
        return Err(Error::contract(format!("label {bad} out of range for {k} labels")));
    }
    let mut s = p.start[y[0]] + p.end[y[t - 1]];
    for (i, &l) in y.iter().enumerate() {
        s += e.row(i)[l];
        if i > 0 {
            s += p.transition(y[i - 1], l);
        }
    }
    Ok(s)
}

/// Forward log-messages `alpha[t][j]` (including emission at `t`, excluding
/// `end`).
fn forward(e: &Tensor, p: &CrfParams) -> Vec<Vec<f64>> {
    let (t, k) = dims(e, p);
    let mut alpha = Vec::with_capacity(t);
    alpha.push((0..k).map(|j| p.start[j] + e.row(0)[j]).collect::<Vec<_>>());
    let mut buf = vec![0.0; k];
    for i in 1..t {
        let prev = &alpha[i - 1];
        let row: Vec<f64> = (0..k)
            .map(|j| {
                for (pi, b) in buf.iter_mut().enumerate() {
                    *b = prev[pi] + p.transition(pi, j);
                }
                logsumexp(&buf) + e.row(i)[j]
            })
            .collect();
        alpha.push(row);
    }
    alpha
}

/// Backward log-messages `beta[t][i]` (scores after `t`, including `end`).
fn backward(e: &Tensor, p: &CrfParams) -> Vec<Vec<f64>> {
    let (t, k) = dims(e, p);
    let mut beta = vec![vec![0.0; k]; t];
    beta[t - 1] = p.end.clone();
    let mut buf = vec![0.0; k];
    for i in (0..t - 1).rev() {
        for a in 0..k {
            for (b, slot) in buf.iter_mut().enumerate() {
                *slot = p.transition(a, b) + e.row(i + 1)[b] + beta[i + 1][b];
            }
            beta[i][a] = logsumexp(&buf);
        }
    }
    beta
}

fn log_z(alpha: &[Vec<f64>], p: &CrfParams) -> f64 {
    let last = alpha.last().expect("T >= 1");
    let v: Vec<f64> = last.iter().zip(&p.end).map(|(a, b)| a + b).collect();
    logsumexp(&v)
}

/// Log normaliser over all `K^T` label sequences (forward algorithm).
pub fn log_partition(e: &Tensor, p: &CrfParams) -> f64 {
    log_z(&forward(e, p), p)
}

/// `T x K` matrix of `P(y_t = k)` via forward-backward.
pub fn marginals(e: &Tensor, p: &CrfParams) -> Tensor {
    let (t, k) = dims(e, p);
    let alpha = forward(e, p);
    let beta = backward(e, p);
    let z = log_z(&alpha, p);
    let mut out = Vec::with_capacity(t * k);
    for i in 0..t {
        for j in 0..k {
            out.push((alpha[i][j] + beta[i][j] - z).exp());
        }
    }
    Tensor::matrix(t, k, out).expect("marginal shape")
}

/// Highest-scoring sequence and its score. Ties go to the lowest label id,
/// both for the final label and at every back-pointer.
pub fn viterbi_decode(e: &Tensor, p: &CrfParams) -> (Vec<usize>, f64) {
    let (t, k) = dims(e, p);
    let mut delta: Vec<f64> = (0..k).map(|j| p.start[j] + e.row(0)[j]).collect();
    let mut back: Vec<Vec<usize>> = Vec::with_capacity(t);
    for i in 1..t {
        let mut next = vec![0.0; k];
        let mut ptr = vec![0usize; k];
        for j in 0..k {
            let mut best = 0;
            let mut best_v = delta[0] + p.transition(0, j);
            for pi in 1..k {
                let v = delta[pi] + p.transition(pi, j);
                if v > best_v {
                    best_v = v;
                    best = pi;
                }
            }
            next[j] = best_v + e.row(i)[j];
            ptr[j] = best;
        }
        delta = next;
        back.push(ptr);
    }
    let mut last = 0;
    let mut best = delta[0] + p.end[0];
    for j in 1..k {
        let v = delta[j] + p.end[j];
        if v > best {
            best = v;
            last = j;
        }
    }
    let mut path = vec![last; t];
    for i in (1..t).rev() {
        path[i - 1] = back[i - 1][path[i]];
    }
    (path, best)
}

/// Gradients of the negative log-likelihood, in the order emissions,
/// transitions, start, end.
#[derive(Clone, Debug)]
pub struct NllGrads {
    pub emissions: Vec<f64>,
    pub transitions: Vec<f64>,
    pub start: Vec<f64>,
    pub end: Vec<f64>,
}

/// `log_partition - sequence_score(gold)` and its exact gradient:
/// expected feature counts minus gold feature counts.
pub fn nll_with_grads(e: &Tensor, gold: &[usize], p: &CrfParams) -> Result<(f64, NllGrads)> {
    let gold_score = sequence_score(e, gold, p)?;
    let (t, k) = dims(e, p);
    let alpha = forward(e, p);
    let beta = backward(e, p);
    let z = log_z(&alpha, p);

    let mut ge = vec![0.0; t * k];
    for i in 0..t {
        for j in 0..k {
            ge[i * k + j] = (alpha[i][j] + beta[i][j] - z).exp();
        }
        ge[i * k + gold[i]] -= 1.0;
    }
    let mut gt = vec![0.0; k * k];
    for i in 1..t {
        for a in 0..k {
            for b in 0..k {
                let lp = alpha[i - 1][a] + p.transition(a, b) + e.row(i)[b] + beta[i][b] - z;
                gt[a * k + b] += lp.exp();
            }
        }
        gt[gold[i - 1] * k + gold[i]] -= 1.0;
    }
    // start/end features fire exactly where the first/last emission does
    let gs = ge[..k].to_vec();
    let gend = ge[(t - 1) * k..].to_vec();
    Ok((
        z - gold_score,
        NllGrads {
            emissions: ge,
            transitions: gt,
            start: gs,
            end: gend,
        },
    ))
}

#[cfg(test)]
mod tests;
