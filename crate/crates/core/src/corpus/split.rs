use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Train/validation/test fractions 0.50/0.25/0.25 over abstracts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SplitSpec {
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split<T> {
    pub train: Vec<T>,
    pub val: Vec<T>,
    pub test: Vec<T>,
}

/// Seeded shuffle, then `floor(n/2)` train, `floor(n/4)` validation and the
/// remainder as test. With one item everything lands in test.
pub fn make_splits<T: Clone>(items: &[T], spec: SplitSpec) -> Split<T> {
    let n = items.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    let n_train = n / 2;
    let n_val = n / 4;
    let pick = |idx: &[usize]| idx.iter().map(|&i| items[i].clone()).collect::<Vec<T>>();
    Split {
        train: pick(&order[..n_train]),
        val: pick(&order[n_train..n_train + n_val]),
        test: pick(&order[n_train + n_val..]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sizes(n: usize) -> (usize, usize, usize) {
        let items: Vec<usize> = (0..n).collect();
        let s = make_splits(&items, SplitSpec { seed: 1 });
        (s.train.len(), s.val.len(), s.test.len())
    }

    #[test]
    fn reported_sizes() {
        assert_eq!(sizes(1500), (750, 375, 375));
        assert_eq!(sizes(4), (2, 1, 1));
        assert_eq!(sizes(1), (0, 0, 1));
    }

    #[test]
    fn deterministic_membership() {
        let items: Vec<usize> = (0..4).collect();
        assert_eq!(make_splits(&items, SplitSpec { seed: 9 }), make_splits(&items, SplitSpec { seed: 9 }));
    }

    proptest! {
        #[test]
        fn splits_partition(n in 0usize..200, seed: u64) {
            let items: Vec<usize> = (0..n).collect();
            let s = make_splits(&items, SplitSpec { seed });
            let mut all: Vec<usize> = s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, items);
        }
    }
}
