// SPDX-License-Identifier: MIT OR Apache-2.0

//! Merge step: sequential two-sample tests over adjacent segments.
//!
//! Candidates are visited left to right with sentinels `τ_0 = 1` and
//! `τ_{p+1} = n + 1`. A candidate whose standardized mean difference does not
//! reach the two-sided normal critical value is dropped, and its left
//! neighbour (when it is a real change-point) is re-estimated by the
//! single-change-point likelihood-ratio estimator over the widened window.

use serde::Serialize;

use crate::error::{Result, SameError};
use crate::screening::CandidateSet;
use crate::series::{PrefixSums, Series};
use crate::stats::normal_quantile;

/// Parameters of the merge step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MergeConfig {
    /// Two-sided test level `α′`.
    pub alpha_merge: f64,
    /// Minimum segment length `k′`.
    pub k_prime: usize,
}

impl Default for MergeConfig {
    fn default() -> Self {
        Self {
            alpha_merge: 0.01,
            k_prime: 20,
        }
    }
}

impl MergeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_merge > 0.0 && self.alpha_merge < 1.0) {
            return Err(SameError::invalid_input(format!(
                "merge level must lie in (0, 1), got {}",
                self.alpha_merge
            )));
        }
        if self.k_prime < 2 {
            return Err(SameError::invalid_input(format!(
                "minimum segment length must be at least 2, got {}",
                self.k_prime
            )));
        }
        Ok(())
    }

    /// Two-sided critical value `Φ⁻¹(1 − α′/2)`.
    pub fn critical_value(&self) -> Result<f64> {
        normal_quantile(1.0 - self.alpha_merge / 2.0)
    }
}

/// Strictly increasing 1-based change-points in `[2, n]`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ChangePointSet {
    points: Vec<usize>,
}

impl ChangePointSet {
    pub fn new(points: Vec<usize>, n: usize) -> Result<Self> {
        if let Some(&p) = points.iter().find(|&&p| p < 2 || p > n) {
            return Err(SameError::invalid_input(format!(
                "change-point {p} outside [2, {n}]"
            )));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SameError::invalid_input(
                "change-points must be strictly increasing",
            ));
        }
        Ok(Self { points })
    }

    pub(crate) fn from_sorted(points: Vec<usize>) -> Self {
        debug_assert!(points.windows(2).all(|w| w[0] < w[1]));
        Self { points }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn points(&self) -> &[usize] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.points
    }

    /// Segment boundaries `[(start, end_exclusive)]` tiling `[1, n]`.
    pub fn segments(&self, n: usize) -> Vec<(usize, usize)> {
        let mut bounds = Vec::with_capacity(self.points.len() + 1);
        let mut start = 1;
        for &p in &self.points {
            bounds.push((start, p));
            start = p;
        }
        bounds.push((start, n + 1));
        bounds
    }
}

/// `(mean_left − mean_right) / (s · sqrt(1/L_left + 1/L_right))`.
#[inline]
pub(crate) fn two_sample_stat(
    prefix: &PrefixSums,
    start: usize,
    cp: usize,
    end: usize,
    s: f64,
) -> f64 {
    let (l, r) = ((cp - start) as f64, (end - cp) as f64);
    let diff = prefix.centred_mean(start, cp) - prefix.centred_mean(cp, end);
    diff / ((1.0 / l + 1.0 / r).sqrt() * s)
}

fn check_two_segments(n: usize, start: usize, cp: usize, end: usize) -> Result<()> {
    if !(1 <= start && start < cp && cp < end && end <= n + 1) {
        return Err(SameError::invalid_input(format!(
            "segments [{start}, {cp}) and [{cp}, {end}) must both be non-empty within [1, {}]",
            n + 1
        )));
    }
    Ok(())
}

/// Merge test statistic for the segments `[left_start, cp)` and `[cp, right_end_exclusive)`.
pub fn merge_test(
    series: &Series,
    left_start: usize,
    cp: usize,
    right_end_exclusive: usize,
    s: f64,
) -> Result<f64> {
    check_two_segments(series.len(), left_start, cp, right_end_exclusive)?;
    if !(s > 0.0 && s.is_finite()) {
        return Err(SameError::invalid_input(format!(
            "noise scale must be positive and finite, got {s}"
        )));
    }
    let prefix = PrefixSums::new(series);
    Ok(two_sample_stat(
        &prefix,
        left_start,
        cp,
        right_end_exclusive,
        s,
    ))
}

/// Likelihood-ratio single change-point estimate inside `[a, b)`, searching
/// `j ∈ [a + k′, b − k′]`; ties go to the smallest `j`.
pub fn reposition(series: &Series, a: usize, b: usize, k_prime: usize) -> Result<usize> {
    let n = series.len();
    if !(a >= 1 && b <= n + 1) {
        return Err(SameError::invalid_input(format!(
            "reposition window [{a}, {b}) exceeds [1, {}]",
            n + 1
        )));
    }
    let prefix = PrefixSums::new(series);
    reposition_with(&prefix, a, b, k_prime)
}

pub(crate) fn reposition_with(
    prefix: &PrefixSums,
    a: usize,
    b: usize,
    k_prime: usize,
) -> Result<usize> {
    if k_prime == 0 || a + k_prime > b.saturating_sub(k_prime) {
        return Err(SameError::invalid_input(format!(
            "reposition window [{a}, {b}) leaves no admissible split with minimum length {k_prime}"
        )));
    }
    Ok(best_split(prefix, a, b, k_prime).0)
}

/// Argmax (smallest on ties) of the weighted mean difference and its value.
pub(crate) fn best_split(prefix: &PrefixSums, a: usize, b: usize, min_len: usize) -> (usize, f64) {
    let mut best = (a + min_len, f64::NEG_INFINITY);
    for j in a + min_len..=b - min_len {
        let (l, r) = ((j - a) as f64, (b - j) as f64);
        let diff = prefix.centred_mean(a, j) - prefix.centred_mean(j, b);
        let value = diff.abs() / (1.0 / l + 1.0 / r).sqrt();
        if value > best.1 {
            best = (j, value);
        }
    }
    best
}

/// Runs the merge walk over screened candidates.
pub fn merge(
    series: &Series,
    candidates: &CandidateSet,
    config: &MergeConfig,
    s: f64,
) -> Result<ChangePointSet> {
    config.validate()?;
    if !(s > 0.0 && s.is_finite()) {
        return Err(SameError::invalid_input(format!(
            "noise scale must be positive and finite, got {s}"
        )));
    }
    let n = series.len();
    let points = candidates.indices();
    if let Some(&p) = points.iter().find(|&&p| p < 2 || p > n) {
        return Err(SameError::invalid_input(format!(
            "candidate {p} outside [2, {n}]"
        )));
    }
    let prefix = PrefixSums::new(series);
    merge_points(&prefix, points, config, s)
}

pub(crate) fn merge_points(
    prefix: &PrefixSums,
    mut points: Vec<usize>,
    config: &MergeConfig,
    s: f64,
) -> Result<ChangePointSet> {
    let n = prefix.len();
    let critical = config.critical_value()?;
    let mut i = 0;
    while i < points.len() {
        let left = if i == 0 { 1 } else { points[i - 1] };
        let right = points.get(i + 1).copied().unwrap_or(n + 1);
        let t = two_sample_stat(prefix, left, points[i], right, s);
        if t.abs() > critical {
            i += 1;
            continue;
        }
        points.remove(i);
        if i > 0 {
            let a = if i >= 2 { points[i - 2] } else { 1 };
            points[i - 1] = reposition_with(prefix, a, right, config.k_prime)?;
        }
    }
    Ok(ChangePointSet::from_sorted(points))
}
