// SPDX-License-Identifier: MIT OR Apache-2.0

//! Spearman rank correlation with average ranks for ties.

use crate::error::{Error, Result};
use crate::scalar::{compensated_sum, Scalar};

/// 1-based ranks; tied values share the mean of the ranks they span.
pub fn average_ranks<T: Scalar>(values: &[T]) -> Result<Vec<T>> {
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::domain("cannot rank NaN"));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("no NaN"));
    let mut ranks = vec![T::zero(); values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // Ranks start+1 ..= end averaged.
        let rank = T::from_count(start + end + 1) / T::lit(2.0);
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    Ok(ranks)
}

/// Pearson correlation of the average ranks. `None` when either input is
/// constant.
pub fn spearman<T: Scalar>(x: &[T], y: &[T]) -> Result<Option<T>> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!("length mismatch: {} vs {}", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::invalid("spearman needs at least two observations"));
    }
    let (rx, ry) = (average_ranks(x)?, average_ranks(y)?);
    // Mean rank is (n + 1) / 2 regardless of ties.
    let mean = T::from_count(x.len() + 1) / T::lit(2.0);
    let sxy = compensated_sum(rx.iter().zip(&ry).map(|(&a, &b)| (a - mean) * (b - mean)));
    let sxx = compensated_sum(rx.iter().map(|&a| (a - mean) * (a - mean)));
    let syy = compensated_sum(ry.iter().map(|&b| (b - mean) * (b - mean)));
    if sxx == T::zero() || syy == T::zero() {
        return Ok(None);
    }
    Ok(Some((sxy / (sxx * syy).sqrt()).max(-T::one()).min(T::one())))
}
