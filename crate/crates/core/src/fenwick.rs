//! Fenwick (binary indexed) tree over nonnegative rates, used by the
//! simulator to sample boundary-flip sites proportionally to their rates
//! with logarithmic updates.

use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct Fenwick<F: Scalar> {
    tree: Vec<F>,
    values: Vec<F>,
}

impl<F: Scalar> Fenwick<F> {
    pub fn new(len: usize) -> Self {
        Self {
            tree: vec![F::zero(); len + 1],
            values: vec![F::zero(); len],
        }
    }

    pub fn from_values(values: &[F]) -> Self {
        let mut f = Self::new(values.len());
        for (i, &v) in values.iter().enumerate() {
            f.set(i, v);
        }
        f
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn value(&self, i: usize) -> F {
        self.values[i]
    }

    /// Replace the rate at leaf `i`.
    pub fn set(&mut self, i: usize, value: F) {
        let delta = value - self.values[i];
        if delta == F::zero() {
            return;
        }
        self.values[i] = value;
        let mut k = i + 1;
        while k < self.tree.len() {
            self.tree[k] += delta;
            k += k & k.wrapping_neg();
        }
    }

    /// Sum of all rates.
    pub fn total(&self) -> F {
        self.prefix(self.len())
    }

    /// Sum of the first `count` rates.
    pub fn prefix(&self, count: usize) -> F {
        let mut acc = F::zero();
        let mut k = count;
        while k > 0 {
            acc += self.tree[k];
            k &= k - 1;
        }
        acc
    }

    /// Smallest index `i` with `prefix(i + 1) > target`. `target` must lie
    /// in `[0, total())`; values at or beyond the total clamp to the last
    /// leaf with positive rate behaviourally (the final index).
    pub fn sample(&self, target: F) -> usize {
        let mut pos = 0usize;
        let mut rem = target;
        let mut mask = self.tree.len().next_power_of_two() >> 1;
        while mask > 0 {
            let next = pos + mask;
            if next < self.tree.len() && self.tree[next] <= rem {
                rem -= self.tree[next];
                pos = next;
            }
            mask >>= 1;
        }
        pos.min(self.len().saturating_sub(1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefix_sums_and_updates() {
        let mut f = Fenwick::from_values(&[1.0f64, 0.0, 2.0, 0.5]);
        assert!((f.total() - 3.5).abs() < 1e-15);
        assert!((f.prefix(2) - 1.0).abs() < 1e-15);
        f.set(1, 4.0);
        assert!((f.total() - 7.5).abs() < 1e-15);
        assert!((f.prefix(2) - 5.0).abs() < 1e-15);
    }

    #[test]
    fn sampling_respects_cumulative_boundaries() {
        let f = Fenwick::from_values(&[1.0f64, 0.0, 2.0, 0.5]);
        assert_eq!(f.sample(0.0), 0);
        assert_eq!(f.sample(0.999), 0);
        assert_eq!(f.sample(1.0), 2); // zero-rate leaf skipped
        assert_eq!(f.sample(2.9), 2);
        assert_eq!(f.sample(3.2), 3);
        assert_eq!(f.sample(3.4999), 3);
    }

    #[test]
    fn sample_agrees_with_linear_scan() {
        let values = [0.3f64, 1.7, 0.0, 0.0, 2.2, 0.01, 5.0, 0.9, 0.0, 1.1];
        let f = Fenwick::from_values(&values);
        let total: f64 = values.iter().sum();
        let mut t = 0.0001;
        while t < total {
            let mut acc = 0.0;
            let mut expect = values.len() - 1;
            for (i, &v) in values.iter().enumerate() {
                acc += v;
                if t < acc {
                    expect = i;
                    break;
                }
            }
            assert_eq!(f.sample(t), expect, "target {t}");
            t += 0.137;
        }
    }
}
