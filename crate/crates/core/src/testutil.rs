//! Finite-difference helpers shared by unit tests.

use crate::tensor::{Graph, ParamId, ParamStore, Var};

pub(crate) fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / (a.abs() + b.abs()).max(1e-8)
}

/// Central finite differences on every element of every parameter.
pub(crate) fn check_param_grads(
    store: &mut ParamStore,
    build: &dyn Fn(&mut Graph, &ParamStore) -> Var,
    h: f64,
) -> f64 {
    store.zero_grad();
    let mut g = Graph::new();
    let l = build(&mut g, store);
    g.backward(l, store).unwrap();
    let mut worst: f64 = 0.0;
    let ids: Vec<ParamId> = store.ids().collect();
    for id in ids {
        let analytic = store.get(id).grad.data().to_vec();
        for i in 0..analytic.len() {
            let orig = store.get(id).value.data()[i];
            store.get_mut(id).value.data_mut()[i] = orig + h;
            let mut g1 = Graph::new();
            let v1 = build(&mut g1, store);
            let lp = g1.value(v1).item();
            store.get_mut(id).value.data_mut()[i] = orig - h;
            let mut g2 = Graph::new();
            let v2 = build(&mut g2, store);
            let lm = g2.value(v2).item();
            store.get_mut(id).value.data_mut()[i] = orig;
            let numeric = (lp - lm) / (2.0 * h);
            if (analytic[i] - numeric).abs() > 1e-7 {
                worst = worst.max(rel_err(analytic[i], numeric));
            }
        }
    }
    worst
}

