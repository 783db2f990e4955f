use super::*;
use crate::testutil::check_param_grads;
use crate::tensor::{Graph, ParamStore};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Every label sequence of length `t` over `k` labels.
fn all_sequences(t: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..t {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..k).map(move |l| {
                    let mut q = p.clone();
                    q.push(l);
                    q
                })
            })
            .collect();
    }
    out
}

/// Direct term-by-term score, independent of `sequence_score`.
fn hand_score(e: &[Vec<f64>], y: &[usize], p: &CrfParams) -> f64 {
    let mut s = p.start[y[0]];
    for t in 0..y.len() {
        s += e[t][y[t]];
    }
    for t in 1..y.len() {
        s += p.transitions[y[t - 1] * p.k + y[t]];
    }
    s + p.end[*y.last().unwrap()]
}

struct Brute {
    log_z: f64,
    marginals: Vec<Vec<f64>>,
    best: Vec<usize>,
    best_score: f64,
}

fn brute(e: &[Vec<f64>], p: &CrfParams) -> Brute {
    let (t, k) = (e.len(), p.k);
    let seqs = all_sequences(t, k);
    let scores: Vec<f64> = seqs.iter().map(|y| hand_score(e, y, p)).collect();
    let m = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_z = m + scores.iter().map(|s| (s - m).exp()).sum::<f64>().ln();
    let mut marginals = vec![vec![0.0; k]; t];
    for (y, s) in seqs.iter().zip(&scores) {
        let pr = (s - log_z).exp();
        for (i, &l) in y.iter().enumerate() {
            marginals[i][l] += pr;
        }
    }
    // enumeration is lexicographic, so the first maximum is the
    // lowest-label tie-break
    let mut bi = 0;
    for i in 1..scores.len() {
        if scores[i] > scores[bi] {
            bi = i;
        }
    }
    Brute {
        log_z,
        marginals,
        best: seqs[bi].clone(),
        best_score: scores[bi],
    }
}

fn random_instance(rng: &mut ChaCha8Rng, t: usize, k: usize) -> (Vec<Vec<f64>>, CrfParams) {
    let mut r = |n: usize| (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect::<Vec<f64>>();
    let e: Vec<Vec<f64>> = (0..t).map(|_| r(k)).collect();
    let p = CrfParams {
        k,
        transitions: r(k * k),
        start: r(k),
        end: r(k),
    };
    (e, p)
}

fn tensor(e: &[Vec<f64>]) -> Tensor {
    Tensor::matrix(e.len(), e[0].len(), e.concat()).unwrap()
}

#[test]
fn single_step_score() {
    let p = CrfParams::zeros(2);
    assert_eq!(sequence_score(&tensor(&[vec![1.0, 2.0]]), &[1], &p).unwrap(), 2.0);
}

#[test]
fn zero_case_scores_zero() {
    let p = CrfParams::zeros(3);
    let e = tensor(&[vec![0.0; 3], vec![0.0; 3]]);
    for y in all_sequences(2, 3) {
        assert_eq!(sequence_score(&e, &y, &p).unwrap(), 0.0);
    }
}

#[test]
fn score_guards() {
    let p = CrfParams::zeros(2);
    let e = tensor(&[vec![0.0, 0.0]]);
    assert!(matches!(sequence_score(&e, &[2], &p), Err(Error::Contract(_))));
    assert!(matches!(sequence_score(&e, &[0, 0], &p), Err(Error::Contract(_))));
}

#[test]
fn random_score_matches_hand_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (e, p) = random_instance(&mut rng, 3, 3);
    for y in all_sequences(3, 3) {
        let got = sequence_score(&tensor(&e), &y, &p).unwrap();
        assert!((got - hand_score(&e, &y, &p)).abs() < 1e-12);
    }
}

#[test]
fn log_partition_closed_forms() {
    let p = CrfParams::zeros(2);
    let z = log_partition(&tensor(&[vec![0.0, 0.0]]), &p);
    assert!((z - std::f64::consts::LN_2).abs() < 1e-15);
    let z = log_partition(&tensor(&[vec![1.0, 2.0]]), &p);
    // ln(e + e^2) = 2.313261687518223
    assert!((z - 2.313_261_687_518_223).abs() < 1e-12);
}

#[test]
fn viterbi_small_cases() {
    let p = CrfParams::zeros(2);
    assert_eq!(viterbi_decode(&tensor(&[vec![1.0, 2.0]]), &p).0, vec![1]);
    assert_eq!(viterbi_decode(&tensor(&[vec![0.0, 0.0]]), &p).0, vec![0]);
    let p3 = CrfParams::zeros(3);
    assert_eq!(viterbi_decode(&tensor(&vec![vec![0.0; 3]; 4]), &p3).0, vec![0; 4]);
}

#[test]
fn uniform_marginals() {
    let p = CrfParams::zeros(3);
    let m = marginals(&tensor(&vec![vec![0.0; 3]; 2]), &p);
    assert!(m.data().iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-15));
}

#[test]
fn single_step_marginal_is_softmax() {
    let p = CrfParams {
        k: 3,
        transitions: vec![9.0; 9],
        start: vec![0.1, -0.4, 0.3],
        end: vec![0.0, 0.5, -1.0],
    };
    let e = [vec![1.0, 0.0, 2.0]];
    let logits: Vec<f64> = (0..3).map(|j| e[0][j] + p.start[j] + p.end[j]).collect();
    let m = marginals(&tensor(&e), &p);
    for (a, b) in m.data().iter().zip(crate::tensor::softmax(&logits)) {
        assert!((a - b).abs() < 1e-15);
    }
}

#[test]
fn uniform_nll_is_t_ln_k() {
    let p = CrfParams::zeros(2);
    let e = tensor(&[vec![0.0, 0.0], vec![0.0, 0.0]]);
    for gold in all_sequences(2, 2) {
        let (l, _) = nll_with_grads(&e, &gold, &p).unwrap();
        assert!((l - 2.0 * std::f64::consts::LN_2).abs() < 1e-15);
    }
}

#[test]
fn peaked_gold_has_near_zero_nll() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let gold = [2, 0, 1, 1];
    let e: Vec<Vec<f64>> = gold
        .iter()
        .map(|&g| (0..3).map(|j| if j == g { 10.0 } else { -10.0 }).collect())
        .collect();
    let p = CrfParams {
        k: 3,
        transitions: (0..9).map(|_| rng.gen_range(-0.5..0.5)).collect(),
        start: vec![0.0; 3],
        end: vec![0.0; 3],
    };
    let e = tensor(&e);
    assert_eq!(viterbi_decode(&e, &p).0, gold);
    let (l, _) = nll_with_grads(&e, &gold, &p).unwrap();
    assert!(l < 1e-3 && l >= 0.0, "{l}");
}

#[test]
fn nll_is_log_z_minus_gold_score() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (e, p) = random_instance(&mut rng, 4, 3);
    let gold = [0, 2, 2, 1];
    let (l, _) = nll_with_grads(&tensor(&e), &gold, &p).unwrap();
    let b = brute(&e, &p);
    assert!((l - (b.log_z - hand_score(&e, &gold, &p))).abs() < 1e-12);
}

#[test]
fn nll_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..5 {
        let (e, p) = random_instance(&mut rng, 3, 3);
        let gold: Vec<usize> = (0..3).map(|_| rng.gen_range(0..3)).collect();
        let mut store = ParamStore::new();
        let eid = store.add("e", tensor(&e)).unwrap();
        let layer = CrfLayer::new(&mut store, "crf", 3).unwrap();
        store.get_mut(layer.transitions).value = Tensor::matrix(3, 3, p.transitions.clone()).unwrap();
        store.get_mut(layer.start).value = Tensor::vector(p.start.clone());
        store.get_mut(layer.end).value = Tensor::vector(p.end.clone());
        let build = move |g: &mut Graph, s: &ParamStore| {
            let ev = g.param(s, eid);
            layer.nll(g, s, ev, &gold).unwrap()
        };
        let err = check_param_grads(&mut store, &build, 1e-5);
        assert!(err < 1e-4, "relative error {err}");
    }
}

#[test]
fn emission_gradient_is_marginals_minus_gold() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let (e, p) = random_instance(&mut rng, 4, 2);
    let gold = [1, 0, 0, 1];
    let (_, gr) = nll_with_grads(&tensor(&e), &gold, &p).unwrap();
    let b = brute(&e, &p);
    for t in 0..4 {
        for k in 0..2 {
            let expect = b.marginals[t][k] - if gold[t] == k { 1.0 } else { 0.0 };
            assert!((gr.emissions[t * 2 + k] - expect).abs() < 1e-10);
        }
    }
}

/// The exhaustive-enumeration sweep over 200 random instances.
#[test]
fn exhaustive_oracle_sweep() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..200 {
        let t = rng.gen_range(1..=4);
        let k = rng.gen_range(1..=4);
        let (e, p) = random_instance(&mut rng, t, k);
        let b = brute(&e, &p);
        let et = tensor(&e);
        assert!((log_partition(&et, &p) - b.log_z).abs() < 1e-8);
        let m = marginals(&et, &p);
        for i in 0..t {
            for j in 0..k {
                assert!((m.row(i)[j] - b.marginals[i][j]).abs() < 1e-8);
            }
            assert!((m.row(i).iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        let (path, score) = viterbi_decode(&et, &p);
        assert_eq!(path, b.best);
        assert!((score - b.best_score).abs() < 1e-8);
    }
}

proptest! {
    #[test]
    fn probabilities_sum_to_one(seed: u64, t in 1usize..=4, k in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (e, p) = random_instance(&mut rng, t, k);
        let et = tensor(&e);
        let z = log_partition(&et, &p);
        let total: f64 = all_sequences(t, k).iter().map(|y| (sequence_score(&et, y, &p).unwrap() - z).exp()).sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn row_shift_moves_log_z_and_keeps_viterbi(seed: u64, t in 1usize..=4, k in 1usize..=4, c in -5.0f64..5.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut e, p) = random_instance(&mut rng, t, k);
        let row = rng.gen_range(0..t);
        let before = (log_partition(&tensor(&e), &p), viterbi_decode(&tensor(&e), &p).0);
        e[row].iter_mut().for_each(|v| *v += c);
        let after = (log_partition(&tensor(&e), &p), viterbi_decode(&tensor(&e), &p).0);
        prop_assert!((after.0 - before.0 - c).abs() < 1e-9);
        prop_assert_eq!(after.1, before.1);
    }
}
