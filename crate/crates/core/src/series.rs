// SPDX-License-Identifier: MIT OR Apache-2.0

//! The observation sequence and its prefix-sum view.
//!
//! Public indices are 1-based throughout the crate: observation `i` is
//! `values()[i - 1]`, and a change-point `τ` is the first index of the
//! segment to its right. Half-open ranges `[a, b)` cover `x_a ..= x_{b-1}`.

use crate::error::{Result, SameError};

/// Ordered, finite real-valued observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    values: Vec<f64>,
}

impl Series {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(SameError::invalid_input(format!(
                "observation {} is not finite ({})",
                pos + 1,
                values[pos]
            )));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.values
    }

    /// Arithmetic mean of the half-open 1-based range `[start, end)`.
    pub fn range_mean(&self, start: usize, end: usize) -> f64 {
        let slice = &self.values[start - 1..end - 1];
        slice.iter().sum::<f64>() / slice.len() as f64
    }
}

impl TryFrom<Vec<f64>> for Series {
    type Error = SameError;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl AsRef<[f64]> for Series {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

/// Cumulative sums of the series, centred on its first observation.
///
/// Centring keeps the sums small for signals sitting on a large offset, so
/// window means and squared deviations do not lose precision to the level.
#[derive(Debug, Clone)]
pub(crate) struct PrefixSums {
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
}

impl PrefixSums {
    pub(crate) fn new(series: &Series) -> Self {
        Self::build(series, false)
    }

    pub(crate) fn with_squares(series: &Series) -> Self {
        Self::build(series, true)
    }

    fn build(series: &Series, squares: bool) -> Self {
        let values = series.values();
        let offset = values.first().copied().unwrap_or(0.0);
        let mut sum = Vec::with_capacity(values.len() + 1);
        let mut sum_sq = Vec::with_capacity(if squares { values.len() + 1 } else { 0 });
        sum.push(0.0);
        if squares {
            sum_sq.push(0.0);
        }
        let (mut acc, mut acc_sq) = (0.0, 0.0);
        for &v in values {
            let c = v - offset;
            acc += c;
            sum.push(acc);
            if squares {
                acc_sq += c * c;
                sum_sq.push(acc_sq);
            }
        }
        Self { sum, sum_sq }
    }

    /// Number of observations covered.
    pub(crate) fn len(&self) -> usize {
        self.sum.len() - 1
    }

    /// Sum of centred values over the 1-based half-open range `[start, end)`.
    #[inline]
    pub(crate) fn centred_sum(&self, start: usize, end: usize) -> f64 {
        self.sum[end - 1] - self.sum[start - 1]
    }

    /// Mean of the centred values over `[start, end)`; differences of these
    /// equal differences of true means.
    #[inline]
    pub(crate) fn centred_mean(&self, start: usize, end: usize) -> f64 {
        self.centred_sum(start, end) / (end - start) as f64
    }

    /// Sum of squared deviations from the range mean over `[start, end)`.
    #[inline]
    pub(crate) fn sse(&self, start: usize, end: usize) -> f64 {
        let len = (end - start) as f64;
        let s = self.centred_sum(start, end);
        let sq = self.sum_sq[end - 1] - self.sum_sq[start - 1];
        (sq - s * s / len).max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_values() {
        let err = Series::new(vec![1.0, f64::NAN]).unwrap_err();
        assert!(err.to_string().contains("observation 2"));
        assert!(Series::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn prefix_means_and_sse() {
        let series = Series::new(vec![10.0, 11.0, 13.0, 16.0]).unwrap();
        let prefix = PrefixSums::with_squares(&series);
        assert_eq!(prefix.len(), 4);
        assert!((prefix.centred_mean(1, 5) - 2.5).abs() < 1e-12);
        assert!((prefix.centred_mean(2, 4) - 2.0).abs() < 1e-12);
        // deviations of 11, 13 around 12
        assert!((prefix.sse(2, 4) - 2.0).abs() < 1e-12);
        assert_eq!(prefix.sse(3, 4), 0.0);
        assert!((series.range_mean(3, 5) - 14.5).abs() < 1e-12);
    }
}
