use std::collections::VecDeque;

/// `true` when `current` exceeds `factor` times the median of `history`.
/// An empty history never triggers.
pub fn precision_trigger(history: &[f64], current: f64, factor: f64) -> bool {
    if history.is_empty() {
        return false;
    }
    let mut h = history.to_vec();
    h.sort_by(f64::total_cmp);
    let mid = h.len() / 2;
    let median = if h.len().is_multiple_of(2) { 0.5 * (h[mid - 1] + h[mid]) } else { h[mid] };
    current > factor * median
}

/// Streaming form of [`precision_trigger`] over a trailing window of `‖s_k‖`.
#[derive(Debug, Clone)]
pub struct PrecisionTrigger {
    pub factor: f64,
    pub window: usize,
    /// Values required before the predicate is consulted.
    pub min_history: usize,
    history: VecDeque<f64>,
    latched_at: Option<usize>,
}

impl Default for PrecisionTrigger {
    fn default() -> Self {
        Self::new(10.0, 20, 5)
    }
}

impl PrecisionTrigger {
    pub fn new(factor: f64, window: usize, min_history: usize) -> Self {
        Self { factor, window: window.max(1), min_history, history: VecDeque::new(), latched_at: None }
    }

    /// Feeds `‖s_k‖` for iterate `k`; returns whether it raised the flag.
    pub fn update(&mut self, k: usize, s_norm: f64) -> bool {
        let raised = self.history.len() >= self.min_history.max(1)
            && precision_trigger(self.history.make_contiguous(), s_norm, self.factor);
        if raised && self.latched_at.is_none() {
            self.latched_at = Some(k);
        }
        if self.history.len() == self.window {
            self.history.pop_front();
        }
        self.history.push_back(s_norm);
        raised
    }

    /// First iterate at which the flag was raised.
    pub fn latched_at(&self) -> Option<usize> {
        self.latched_at
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_guard() {
        assert!(!precision_trigger(&[], 1e9, 10.0));
        assert!(!precision_trigger(&[1.0, 2.0, 3.0], 20.0, 10.0));
        assert!(precision_trigger(&[1.0, 2.0, 3.0], 20.1, 10.0));
        assert!(precision_trigger(&[1.0, 2.0, 3.0, 100.0], 25.1, 10.0));
    }

    #[test]
    fn monotone_decay_never_raises() {
        let mut t = PrecisionTrigger::default();
        for k in 0..200 {
            assert!(!t.update(k, 0.8f64.powi(k as i32)));
        }
        assert_eq!(t.latched_at(), None);
    }

    #[test]
    fn jump_latches() {
        let mut t = PrecisionTrigger::default();
        for k in 0..10 {
            t.update(k, 1e-8);
        }
        assert!(t.update(10, 1e-3));
        assert!(!t.update(11, 1e-8));
        assert_eq!(t.latched_at(), Some(10));
    }
}
