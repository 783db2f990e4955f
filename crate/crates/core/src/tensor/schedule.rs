/// Reduce-on-plateau learning-rate schedule over a lower-is-better metric.
#[derive(Clone, Debug, PartialEq)]
pub struct PlateauScheduler {
    pub current_lr: f64,
    pub factor: f64,
    pub patience: usize,
    /// Absolute improvement required to count as progress.
    pub threshold: f64,
    pub min_lr: f64,
    pub best_metric: f64,
    pub epochs_since_best: usize,
}

impl PlateauScheduler {
    pub const DEFAULT_PATIENCE: usize = 2;
    pub const DEFAULT_THRESHOLD: f64 = 1e-4;
    pub const DEFAULT_MIN_LR: f64 = 1e-6;

    pub fn new(lr: f64, factor: f64) -> Self {
        assert!(lr > 0.0, "learning rate must be positive");
        assert!(factor > 0.0 && factor < 1.0, "factor must lie in (0, 1)");
        PlateauScheduler {
            current_lr: lr,
            factor,
            patience: Self::DEFAULT_PATIENCE,
            threshold: Self::DEFAULT_THRESHOLD,
            min_lr: Self::DEFAULT_MIN_LR.min(lr),
            best_metric: f64::INFINITY,
            epochs_since_best: 0,
        }
    }

    pub fn with_patience(mut self, patience: usize) -> Self {
        self.patience = patience;
        self
    }

    pub fn with_min_lr(mut self, min_lr: f64) -> Self {
        self.min_lr = min_lr.min(self.current_lr);
        self
    }

    /// Feeds one validation metric. Returns `true` when the rate was cut.
    pub fn observe(&mut self, metric: f64) -> bool {
        // NaN compares false, so it never counts as an improvement
        if metric < self.best_metric - self.threshold {
            self.best_metric = metric;
            self.epochs_since_best = 0;
            return false;
        }
        self.epochs_since_best += 1;
        if self.epochs_since_best > self.patience {
            self.epochs_since_best = 0;
            let next = (self.current_lr * self.factor).max(self.min_lr);
            let cut = next < self.current_lr;
            self.current_lr = next;
            return cut;
        }
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn improving_metric_keeps_lr() {
        let mut s = PlateauScheduler::new(0.001, 0.5);
        for m in [1.0, 0.9, 0.8] {
            s.observe(m);
        }
        assert_eq!(s.current_lr, 0.001);
    }

    #[test]
    fn halves_on_third_stall() {
        let mut s = PlateauScheduler::new(0.001, 0.5).with_patience(2);
        s.observe(1.0);
        assert!(!s.observe(1.0));
        assert!(!s.observe(1.0));
        assert_eq!(s.current_lr, 0.001);
        assert!(s.observe(1.0));
        assert_eq!(s.current_lr, 0.0005);
    }

    #[test]
    fn clamps_at_min_lr() {
        let mut s = PlateauScheduler::new(0.001, 0.5).with_patience(0).with_min_lr(0.001);
        for _ in 0..10 {
            s.observe(5.0);
        }
        assert_eq!(s.current_lr, 0.001);
    }

    #[test]
    fn nan_is_no_improvement() {
        let mut s = PlateauScheduler::new(0.001, 0.5).with_patience(0);
        s.observe(1.0);
        s.observe(f64::NAN);
        assert_eq!(s.current_lr, 0.0005);
        assert_eq!(s.best_metric, 1.0);
    }

    proptest! {
        #[test]
        fn lr_sequence_is_non_increasing(metrics in proptest::collection::vec(0.0f64..10.0, 1..60)) {
            let mut s = PlateauScheduler::new(0.001, 0.5);
            let mut prev = s.current_lr;
            for m in metrics {
                s.observe(m);
                prop_assert!(s.current_lr <= prev);
                prop_assert!(s.current_lr >= s.min_lr);
                prev = s.current_lr;
            }
        }
    }
}
