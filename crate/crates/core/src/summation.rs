//! Compensated (Kahan–Neumaier) accumulation.
//!
//! Every long sum in this crate goes through [`NeumaierSum`] in a fixed
//! index order, so results are bit-reproducible run to run.

use std::iter::Sum;
use std::ops::{Add, AddAssign};

#[derive(Debug, Default, Clone, Copy, PartialEq)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub const fn new() -> Self {
        Self {
            sum: 0.0,
            compensation: 0.0,
        }
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl AddAssign<f64> for NeumaierSum {
    #[inline]
    fn add_assign(&mut self, rhs: f64) {
        NeumaierSum::add(self, rhs);
    }
}

impl Add for NeumaierSum {
    type Output = NeumaierSum;

    fn add(mut self, rhs: NeumaierSum) -> NeumaierSum {
        NeumaierSum::add(&mut self, rhs.sum);
        NeumaierSum::add(&mut self, rhs.compensation);
        self
    }
}

impl Sum<f64> for NeumaierSum {
    fn sum<I: Iterator<Item = f64>>(iter: I) -> Self {
        let mut acc = NeumaierSum::new();
        for v in iter {
            acc += v;
        }
        acc
    }
}

/// Compensated sum of an iterator, in iteration order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().sum::<NeumaierSum>().value()
}

/// Compensated dot product.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    compensated_sum(a.iter().zip(b).map(|(x, y)| x * y))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_small_terms_lost_by_naive_summation() {
        let values = [1.0, 1e100, 1.0, -1e100];
        let naive: f64 = values.iter().sum();
        assert_eq!(naive, 0.0);
        assert_eq!(compensated_sum(values), 2.0);
    }

    #[test]
    fn harmonic_tail_matches_reverse_order() {
        let forward = compensated_sum((1..=100_000).map(|n| 1.0 / (n as f64).powi(2)));
        let reverse = compensated_sum((1..=100_000).rev().map(|n| 1.0 / (n as f64).powi(2)));
        assert!((forward - reverse).abs() < 1e-16);
    }

    #[test]
    fn merge_of_partials_equals_single_pass() {
        let xs: Vec<f64> = (0..1000)
            .map(|i| ((i * 7919) % 1009) as f64 * 1e-3 - 0.5)
            .collect();
        let whole = compensated_sum(xs.iter().copied());
        let (a, b) = xs.split_at(333);
        let merged =
            a.iter().copied().sum::<NeumaierSum>() + b.iter().copied().sum::<NeumaierSum>();
        assert!((whole - merged.value()).abs() < 1e-15);
    }
}
