// SPDX-License-Identifier: MIT OR Apache-2.0

//! Comparison segmenters: recursive binary segmentation with normal critical
//! values, and penalized optimal partitioning with PELT pruning.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SameError};
use crate::merging::{best_split, ChangePointSet};
use crate::series::{PrefixSums, Series};
use crate::stats::{diff_variance, normal_quantile};

pub const DEFAULT_MIN_SEG: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyKind {
    Bic,
    Aic,
    Manual,
}

/// Penalty per change-point plus the minimum segment length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PenaltySpec {
    pub kind: PenaltyKind,
    /// Only read for [`PenaltyKind::Manual`].
    pub value: f64,
    pub min_seg: usize,
}

impl Default for PenaltySpec {
    fn default() -> Self {
        Self::bic()
    }
}

impl PenaltySpec {
    pub fn bic() -> Self {
        Self {
            kind: PenaltyKind::Bic,
            value: 0.0,
            min_seg: DEFAULT_MIN_SEG,
        }
    }

    pub fn aic() -> Self {
        Self {
            kind: PenaltyKind::Aic,
            value: 0.0,
            min_seg: DEFAULT_MIN_SEG,
        }
    }

    pub fn manual(value: f64) -> Self {
        Self {
            kind: PenaltyKind::Manual,
            value,
            min_seg: DEFAULT_MIN_SEG,
        }
    }

    pub fn with_min_seg(self, min_seg: usize) -> Self {
        Self { min_seg, ..self }
    }

    /// Penalty `β` charged per change-point for a series of length `n`.
    pub fn beta(&self, n: usize) -> f64 {
        match self.kind {
            PenaltyKind::Bic => 2.0 * (n as f64).ln(),
            PenaltyKind::Aic => 2.0,
            PenaltyKind::Manual => self.value,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.kind == PenaltyKind::Manual && !(self.value >= 0.0 && self.value.is_finite()) {
            return Err(SameError::invalid_input(format!(
                "manual penalty must be finite and non-negative, got {}",
                self.value
            )));
        }
        if self.min_seg == 0 {
            return Err(SameError::invalid_input(
                "minimum segment length must be positive",
            ));
        }
        Ok(())
    }
}

fn check_length(n: usize, min_seg: usize) -> Result<()> {
    if n < 2 * min_seg {
        return Err(SameError::invalid_input(format!(
            "series of length {n} is shorter than twice the minimum segment length {min_seg}"
        )));
    }
    Ok(())
}

/// Recursive binary segmentation.
///
/// Each interval is split at the maximizer of the standardized two-sample
/// statistic whenever that maximum exceeds `Φ⁻¹(1 − α/2)`.
pub fn binary_segmentation(series: &Series, alpha: f64, min_seg: usize) -> Result<ChangePointSet> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(SameError::invalid_input(format!(
            "significance level must lie in (0, 1), got {alpha}"
        )));
    }
    if min_seg == 0 {
        return Err(SameError::invalid_input(
            "minimum segment length must be positive",
        ));
    }
    let n = series.len();
    check_length(n, min_seg)?;
    let s = diff_variance(series)?.s;
    if s == 0.0 {
        return Ok(ChangePointSet::empty());
    }
    let critical = normal_quantile(1.0 - alpha / 2.0)?;
    let prefix = PrefixSums::new(series);

    let mut found = Vec::new();
    let mut stack = vec![(1usize, n + 1)];
    while let Some((a, b)) = stack.pop() {
        if b - a < 2 * min_seg {
            continue;
        }
        let (j, value) = best_split(&prefix, a, b, min_seg);
        if value / s > critical {
            found.push(j);
            stack.push((j, b));
            stack.push((a, j));
        }
    }
    found.sort_unstable();
    Ok(ChangePointSet::from_sorted(found))
}

/// PELT: exact penalized partitioning with pruning.
pub fn pelt(series: &Series, penalty: &PenaltySpec) -> Result<ChangePointSet> {
    penalized_partition(series, penalty, true)
}

/// The same objective as [`pelt`] solved without pruning, in `O(n²)`.
pub fn optimal_partitioning(series: &Series, penalty: &PenaltySpec) -> Result<ChangePointSet> {
    penalized_partition(series, penalty, false)
}

/// Total penalized cost `Σ SSE / s2 + β · #change-points` of a partition.
pub fn penalized_cost(series: &Series, change_points: &ChangePointSet, beta: f64) -> Result<f64> {
    let s2 = diff_variance(series)?.s2;
    let prefix = PrefixSums::with_squares(series);
    let sse: f64 = change_points
        .segments(series.len())
        .into_iter()
        .map(|(a, b)| prefix.sse(a, b))
        .sum();
    let fit = if s2 > 0.0 { sse / s2 } else { 0.0 };
    Ok(fit + beta * change_points.len() as f64)
}

struct SplitCandidate {
    boundary: usize,
    /// Step from which this boundary may be discarded.
    retire_at: Option<usize>,
}

fn penalized_partition(
    series: &Series,
    penalty: &PenaltySpec,
    prune: bool,
) -> Result<ChangePointSet> {
    penalty.validate()?;
    let n = series.len();
    let min_seg = penalty.min_seg;
    check_length(n, min_seg)?;
    let s2 = diff_variance(series)?.s2;
    if s2 == 0.0 {
        return Ok(ChangePointSet::empty());
    }
    let beta = penalty.beta(n);
    let prefix = PrefixSums::with_squares(series);
    // boundary t means "after observation t"; segment (τ, t] is the 1-based range [τ+1, t+1)
    let cost = |tau: usize, t: usize| prefix.sse(tau + 1, t + 1) / s2;

    let mut best = vec![f64::INFINITY; n + 1];
    let mut last = vec![0usize; n + 1];
    best[0] = -beta;
    let mut active: Vec<SplitCandidate> = Vec::new();

    for t in min_seg..=n {
        let fresh = t - min_seg;
        if fresh == 0 || fresh >= min_seg {
            active.push(SplitCandidate {
                boundary: fresh,
                retire_at: None,
            });
        }
        if prune {
            active.retain(|c| c.retire_at.is_none_or(|r| r > t));
        }
        let mut f_t = f64::INFINITY;
        let mut arg = 0;
        for c in &active {
            let v = best[c.boundary] + cost(c.boundary, t) + beta;
            if v < f_t {
                f_t = v;
                arg = c.boundary;
            }
        }
        best[t] = f_t;
        last[t] = arg;
        if prune {
            // a boundary beaten by t without the penalty stays beaten once t itself is usable
            let margin = 1e-9 * (1.0 + f_t.abs());
            for c in active.iter_mut().filter(|c| c.retire_at.is_none()) {
                if best[c.boundary] + cost(c.boundary, t) > f_t + margin {
                    c.retire_at = Some(t + min_seg);
                }
            }
        }
    }

    let mut points = Vec::new();
    let mut t = n;
    while t > 0 {
        let tau = last[t];
        if tau > 0 {
            points.push(tau + 1);
        }
        t = tau;
    }
    points.reverse();
    Ok(ChangePointSet::from_sorted(points))
}
