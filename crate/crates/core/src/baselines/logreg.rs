use serde::{Deserialize, Serialize};

use crate::tensor::sigmoid;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogRegConfig {
    /// L2 strength.
    pub lambda: f64,
    pub epochs: usize,
    pub lr: f64,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        LogRegConfig {
            lambda: 1e-3,
            epochs: 500,
            lr: 0.01,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel {
    pub w: Vec<f64>,
    pub b: f64,
    pub lambda: f64,
}

impl LogRegModel {
    pub fn zeros(dim: usize, lambda: f64) -> Self {
        LogRegModel { w: vec![0.0; dim], b: 0.0, lambda }
    }

    /// `σ(wᵀx + b)`.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.w.len() {
            return Err(Error::contract(format!(
                "feature has dimension {}, model expects {}",
                x.len(),
                self.w.len()
            )));
        }
        Ok(sigmoid(self.logit(x)))
    }

    fn logit(&self, x: &[f64]) -> f64 {
        self.w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + self.b
    }

    /// Mean log-loss plus `(λ/2)‖w‖²`, with its gradient `(dw, db)`.
    pub fn loss_and_grad(&self, features: &[Vec<f64>], labels: &[bool]) -> Result<(f64, Vec<f64>, f64)> {
        check(features, labels, self.w.len())?;
        let n = features.len() as f64;
        let mut loss = 0.0;
        let mut gw = vec![0.0; self.w.len()];
        let mut gb = 0.0;
        for (x, &y) in features.iter().zip(labels) {
            let z = self.logit(x);
            let y = f64::from(u8::from(y));
            // log(1 + e^z) - y z, computed stably
            loss += z.max(0.0) + (-z.abs()).exp().ln_1p() - y * z;
            let r = sigmoid(z) - y;
            for (g, xi) in gw.iter_mut().zip(x) {
                *g += r * xi / n;
            }
            gb += r / n;
        }
        let l2: f64 = self.w.iter().map(|w| w * w).sum();
        for (g, w) in gw.iter_mut().zip(&self.w) {
            *g += self.lambda * w;
        }
        Ok((loss / n + 0.5 * self.lambda * l2, gw, gb))
    }
}

fn check(features: &[Vec<f64>], labels: &[bool], dim: usize) -> Result<()> {
    if features.len() != labels.len() {
        return Err(Error::contract(format!("{} feature rows for {} labels", features.len(), labels.len())));
    }
    if features.is_empty() {
        return Err(Error::Invalid("logistic regression needs at least one example".into()));
    }
    for x in features {
        if x.len() != dim {
            return Err(Error::contract(format!("feature has dimension {}, expected {dim}", x.len())));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::contract("non-finite feature value"));
        }
    }
    Ok(())
}

/// Full-batch training. The data term takes a plain gradient step and the
/// L2 term is applied in closed form (`w / (1 + lr·λ)`), which stays stable
/// for any λ. Returns the model and the objective after every epoch.
pub fn train_logreg(features: &[Vec<f64>], labels: &[bool], cfg: &LogRegConfig) -> Result<(LogRegModel, Vec<f64>)> {
    if cfg.lambda < 0.0 || cfg.lr <= 0.0 {
        return Err(Error::Invalid("logistic regression needs λ ≥ 0 and lr > 0".into()));
    }
    let dim = features.first().map_or(0, Vec::len);
    check(features, labels, dim)?;
    let mut model = LogRegModel::zeros(dim, cfg.lambda);
    let data_only = |m: &LogRegModel| LogRegModel { lambda: 0.0, ..m.clone() };
    let mut history = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        let (_, gw, gb) = data_only(&model).loss_and_grad(features, labels)?;
        let shrink = 1.0 + cfg.lr * cfg.lambda;
        for (w, g) in model.w.iter_mut().zip(&gw) {
            *w = (*w - cfg.lr * g) / shrink;
        }
        model.b -= cfg.lr * gb;
        history.push(model.loss_and_grad(features, labels)?.0);
    }
    Ok((model, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::rel_err;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn separable() -> (Vec<Vec<f64>>, Vec<bool>) {
        let pts = [(2.0, 1.0), (1.5, 2.0), (3.0, 0.5), (-1.0, -2.0), (-2.0, -0.5), (-0.5, -1.5)];
        (
            pts.iter().map(|&(a, b)| vec![a, b]).collect(),
            vec![true, true, true, false, false, false],
        )
    }

    #[test]
    fn zero_weights_give_one_half() {
        assert_eq!(LogRegModel::zeros(3, 0.0).predict(&[1.0, -5.0, 9.0]).unwrap(), 0.5);
    }

    #[test]
    fn separable_set_is_fit() {
        let (x, y) = separable();
        let cfg = LogRegConfig { lambda: 0.0, ..LogRegConfig::default() };
        let (m, _) = train_logreg(&x, &y, &cfg).unwrap();
        for (xi, &yi) in x.iter().zip(&y) {
            assert_eq!(m.predict(xi).unwrap() > 0.5, yi);
        }
    }

    #[test]
    fn huge_lambda_shrinks_weights() {
        let (x, y) = separable();
        let cfg = LogRegConfig { lambda: 1e6, ..LogRegConfig::default() };
        let (m, _) = train_logreg(&x, &y, &cfg).unwrap();
        assert!(m.w.iter().map(|w| w * w).sum::<f64>().sqrt() < 1e-2);
    }

    #[test]
    fn loss_is_non_increasing() {
        let (x, y) = separable();
        let (_, hist) = train_logreg(&x, &y, &LogRegConfig::default()).unwrap();
        assert!(hist.windows(2).all(|w| w[1] <= w[0] + 1e-15));
    }

    #[test]
    fn dimension_mismatch_is_contract_error() {
        let m = LogRegModel::zeros(2, 0.0);
        assert!(matches!(m.predict(&[1.0]), Err(Error::Contract(_))));
        assert!(matches!(
            train_logreg(&[vec![1.0], vec![1.0, 2.0]], &[true, false], &LogRegConfig::default()),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let x: Vec<Vec<f64>> = (0..6).map(|_| (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
            let y: Vec<bool> = (0..6).map(|_| rng.gen()).collect();
            let m = LogRegModel {
                w: (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                b: rng.gen_range(-1.0..1.0),
                lambda: 0.3,
            };
            let (_, gw, gb) = m.loss_and_grad(&x, &y).unwrap();
            let h = 1e-6;
            for i in 0..4 {
                let mut p = m.clone();
                let mut q = m.clone();
                if i < 3 {
                    p.w[i] += h;
                    q.w[i] -= h;
                } else {
                    p.b += h;
                    q.b -= h;
                }
                let fd = (p.loss_and_grad(&x, &y).unwrap().0 - q.loss_and_grad(&x, &y).unwrap().0) / (2.0 * h);
                let an = if i < 3 { gw[i] } else { gb };
                assert!(rel_err(an, fd) < 1e-6, "{an} vs {fd}");
            }
        }
    }

    proptest! {
        #[test]
        fn probabilities_in_unit_interval(w in proptest::collection::vec(-50.0f64..50.0, 3), x in proptest::collection::vec(-50.0f64..50.0, 3)) {
            let m = LogRegModel { w, b: 0.0, lambda: 0.0 };
            let p = m.predict(&x).unwrap();
            prop_assert!((0.0..=1.0).contains(&p));
        }
    }
}
