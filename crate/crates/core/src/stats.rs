//! Small numerical helpers shared across modules.

use std::cmp::Ordering;

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

pub fn sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = CompensatedSum::default();
    values.into_iter().for_each(|x| acc.add(x));
    acc.value()
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    sum(values.iter().copied()) / values.len() as f64
}

/// Unbiased sample variance (two-pass). Zero for fewer than two values.
pub fn variance(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    sum(values.iter().map(|x| (x - m) * (x - m))) / (values.len() - 1) as f64
}

/// Standard error of the sample variance, from the fourth central moment.
pub fn variance_standard_error(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let m2 = sum(values.iter().map(|x| (x - m).powi(2))) / n;
    let m4 = sum(values.iter().map(|x| (x - m).powi(4))) / n;
    ((m4 - m2 * m2).max(0.0) / n).sqrt()
}

pub fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    v
}

/// Nearest-rank quantile of an already sorted slice, `q` in [0, 1].
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Number of entries `< x` in a sorted slice.
pub fn count_below(sorted: &[f64], x: f64) -> usize {
    sorted.partition_point(|v| *v < x)
}

/// Number of entries `<= x` in a sorted slice.
pub fn count_at_most(sorted: &[f64], x: f64) -> usize {
    sorted.partition_point(|v| *v <= x)
}

/// Two-sample Kolmogorov-Smirnov statistic `sup_x |F_1(x) - F_2(x)|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return f64::NAN;
    }
    let a = sorted(a);
    let b = sorted(b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    sum(x.iter().zip(y).map(|(a, b)| a * b))
}

pub fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut values = vec![1e16, 1.0, -1e16];
        values.extend(std::iter::repeat(1.0).take(10));
        assert_eq!(sum(values), 11.0);
    }

    #[test]
    fn ks_identical_and_disjoint() {
        let a = [0.1, 0.4, 0.4, 2.0];
        assert_eq!(ks_two_sample(&a, &a), 0.0);
        assert_eq!(ks_two_sample(&[0.0, 1.0], &[5.0, 6.0]), 1.0);
        // F_a jumps to 1/2 at 1, F_b reaches 1 at 1.
        assert!((ks_two_sample(&[1.0, 3.0], &[1.0, 1.0]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn quantiles_nearest_rank() {
        let s: Vec<f64> = (1..=200).map(|k| k as f64).collect();
        assert_eq!(quantile_sorted(&s, 0.99), 198.0);
        assert_eq!(quantile_sorted(&s, 0.0), 1.0);
        assert_eq!(quantile_sorted(&s, 1.0), 200.0);
    }

    #[test]
    fn variance_matches_definition() {
        let v = [1.0, 2.0, 4.0];
        assert!((variance(&v) - 7.0 / 3.0).abs() < 1e-14);
        assert_eq!(variance(&[3.0]), 0.0);
    }
}
