// SPDX-License-Identifier: MIT OR Apache-2.0

//! Screening: thresholded local maxima of the standardized local diagnostic
//!
//! `M_i^k = sqrt(k/2) / s · |mean(x_{i−k..i−1}) − mean(x_{i..i+k−1})|`,
//!
//! defined for `i ∈ [k+1, n−k+1]`. A position is a candidate when its score
//! exceeds `δ` and dominates its vicinity `[i−k, i+k−1]`, where ties go to the
//! leftmost position.

use std::collections::VecDeque;

use serde::Serialize;

use crate::error::{Result, SameError};
use crate::series::{PrefixSums, Series};
use crate::stats::folded_quantile;

/// One change-point candidate produced by screening.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Candidate {
    /// First index of the right-hand segment (1-based).
    pub index: usize,
    pub score: f64,
    pub bandwidth: usize,
}

/// Candidates sorted by strictly increasing index.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CandidateSet {
    candidates: Vec<Candidate>,
}

impl CandidateSet {
    /// Builds a set from candidates that must already be strictly increasing in index.
    pub fn new(candidates: Vec<Candidate>) -> Result<Self> {
        if candidates.windows(2).any(|w| w[0].index >= w[1].index) {
            return Err(SameError::invalid_input(
                "candidate indices must be strictly increasing",
            ));
        }
        Ok(Self { candidates })
    }

    pub fn as_slice(&self) -> &[Candidate] {
        &self.candidates
    }

    pub fn indices(&self) -> Vec<usize> {
        self.candidates.iter().map(|c| c.index).collect()
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Candidate> {
        self.candidates.iter()
    }
}

impl IntoIterator for CandidateSet {
    type Item = Candidate;
    type IntoIter = std::vec::IntoIter<Candidate>;

    fn into_iter(self) -> Self::IntoIter {
        self.candidates.into_iter()
    }
}

/// Local diagnostic values for one bandwidth; `scores[j]` belongs to index
/// `first_index + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalStats {
    pub bandwidth: usize,
    pub first_index: usize,
    pub scores: Vec<f64>,
}

impl LocalStats {
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.scores
            .iter()
            .enumerate()
            .map(move |(j, &m)| (self.first_index + j, m))
    }

    pub fn last_index(&self) -> usize {
        self.first_index + self.scores.len() - 1
    }
}

fn check_bandwidth(n: usize, k: usize) -> Result<()> {
    if k == 0 {
        return Err(SameError::invalid_input("bandwidth must be positive"));
    }
    if 2 * k > n {
        return Err(SameError::invalid_input(format!(
            "bandwidth k = {k} needs at least 2k = {} observations, series has n = {n}",
            2 * k
        )));
    }
    Ok(())
}

fn check_scale(s: f64) -> Result<()> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(SameError::invalid_input(format!(
            "noise scale must be positive and finite, got {s}"
        )));
    }
    Ok(())
}

/// Evaluates `M_i^k` for every `i ∈ [k+1, n−k+1]` in `O(n)`.
pub fn local_stats(series: &Series, k: usize, s: f64) -> Result<LocalStats> {
    check_bandwidth(series.len(), k)?;
    check_scale(s)?;
    let prefix = PrefixSums::new(series);
    Ok(local_stats_with(&prefix, k, s))
}

pub(crate) fn local_stats_with(prefix: &PrefixSums, k: usize, s: f64) -> LocalStats {
    let n = prefix.len();
    let scale = (k as f64 / 2.0).sqrt() / s / k as f64;
    let scores = (k + 1..=n - k + 1)
        .map(|i| {
            let left = prefix.centred_sum(i - k, i);
            let right = prefix.centred_sum(i, i + k);
            scale * (left - right).abs()
        })
        .collect();
    LocalStats {
        bandwidth: k,
        first_index: k + 1,
        scores,
    }
}

/// For each position `j`, the maximum of `scores[j + lo ..= j + hi]` clipped to
/// the valid range (`NEG_INFINITY` when that window is empty).
fn sliding_max(scores: &[f64], lo: isize, hi: isize) -> Vec<f64> {
    let len = scores.len() as isize;
    let mut out = Vec::with_capacity(scores.len());
    let mut deque: VecDeque<usize> = VecDeque::new();
    let mut next = 0isize;
    for j in 0..len {
        let upper = (j + hi).min(len - 1);
        while next <= upper {
            let v = scores[next as usize];
            while deque.back().is_some_and(|&b| scores[b] <= v) {
                deque.pop_back();
            }
            deque.push_back(next as usize);
            next += 1;
        }
        let lower = (j + lo).max(0);
        while deque.front().is_some_and(|&f| (f as isize) < lower) {
            deque.pop_front();
        }
        out.push(match deque.front() {
            Some(&f) if lower <= upper => scores[f],
            _ => f64::NEG_INFINITY,
        });
    }
    out
}

/// Selects indices whose score exceeds `delta` and dominates the vicinity.
pub(crate) fn select_local_maxima(stats: &LocalStats, delta: f64) -> Vec<Candidate> {
    let k = stats.bandwidth as isize;
    // strictly larger than every score in [i−k, i−1], at least as large as [i+1, i+k−1]
    let left_max = sliding_max(&stats.scores, -k, -1);
    let right_max = sliding_max(&stats.scores, 1, k - 1);
    stats
        .iter()
        .zip(left_max.iter().zip(&right_max))
        .filter(|&((_, m), (&l, &r))| m > delta && m > l && m >= r)
        .map(|((index, score), _)| Candidate {
            index,
            score,
            bandwidth: stats.bandwidth,
        })
        .collect()
}

/// Single-bandwidth screening at threshold `delta`.
pub fn screen(series: &Series, k: usize, delta: f64, s: f64) -> Result<CandidateSet> {
    if delta.is_nan() || delta < 0.0 {
        return Err(SameError::invalid_input(format!(
            "screening threshold must be non-negative, got {delta}"
        )));
    }
    let stats = local_stats(series, k, s)?;
    Ok(CandidateSet {
        candidates: select_local_maxima(&stats, delta),
    })
}

/// Collapses every maximal run of candidates whose consecutive gaps are below
/// `k_min` to its highest-scoring member (ties go to the smaller index).
pub(crate) fn enforce_spacing(mut pool: Vec<Candidate>, k_min: usize) -> Vec<Candidate> {
    pool.sort_by(|a, b| a.index.cmp(&b.index).then(a.bandwidth.cmp(&b.bandwidth)));
    let mut out: Vec<Candidate> = Vec::new();
    let mut run_best: Option<Candidate> = None;
    let mut run_last = 0usize;
    for c in pool {
        match run_best {
            Some(best) if c.index - run_last < k_min => {
                if c.score > best.score {
                    run_best = Some(c);
                }
            }
            _ => {
                out.extend(run_best);
                run_best = Some(c);
            }
        }
        run_last = c.index;
    }
    out.extend(run_best);
    out
}

/// Screens every bandwidth at the shared threshold `folded_quantile(alpha)`,
/// unions the results and enforces the minimum spacing `k_min`.
pub fn multi_screen(
    series: &Series,
    bandwidths: &[usize],
    alpha: f64,
    k_min: usize,
    s: f64,
) -> Result<CandidateSet> {
    if bandwidths.is_empty() {
        return Err(SameError::invalid_input("bandwidth list is empty"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(SameError::invalid_input(format!(
            "screening level must lie in (0, 1), got {alpha}"
        )));
    }
    if k_min == 0 {
        return Err(SameError::invalid_input("minimum spacing must be positive"));
    }
    for &k in bandwidths {
        check_bandwidth(series.len(), k)?;
    }
    check_scale(s)?;
    let delta = folded_quantile(alpha)?;
    let prefix = PrefixSums::new(series);
    Ok(multi_screen_with(&prefix, bandwidths, delta, k_min, s))
}

pub(crate) fn multi_screen_with(
    prefix: &PrefixSums,
    bandwidths: &[usize],
    delta: f64,
    k_min: usize,
    s: f64,
) -> CandidateSet {
    let pool: Vec<Candidate> = bandwidths
        .iter()
        .flat_map(|&k| select_local_maxima(&local_stats_with(prefix, k, s), delta))
        .collect();
    CandidateSet {
        candidates: enforce_spacing(pool, k_min),
    }
}
