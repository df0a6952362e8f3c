// SPDX-License-Identifier: MIT OR Apache-2.0

//! Screening-and-merging (SaMe) change-point segmentation for signals with a
//! piecewise-constant mean, plus comparison segmenters and a simulation
//! harness.
//!
//! All public indices are 1-based. A change-point `τ` is the first index of
//! the segment to its right, so the segments of a set `{τ_1 < … < τ_p}` are
//! `[1, τ_1 − 1]`, `[τ_1, τ_2 − 1]`, …, `[τ_p, n]`.
//!
//! ```
//! use samecp_core::{segment, SameConfig, Series};
//!
//! let mut values = vec![0.0; 300];
//! values.extend(vec![1.0; 100]);
//! values.extend(vec![0.0; 600]);
//! let series = Series::new(values).unwrap();
//! let seg = segment(&series, &SameConfig::default()).unwrap();
//! assert_eq!(seg.change_points(), &[301, 401]);
//! ```

#![forbid(unsafe_code)]

pub mod baselines;
pub mod error;
pub mod io;
pub mod merging;
pub mod pipeline;
pub mod screening;
pub mod series;
pub mod simulation;
pub mod stats;

pub use baselines::{
    binary_segmentation, optimal_partitioning, pelt, penalized_cost, PenaltyKind, PenaltySpec,
};
pub use error::{Result, SameError};
pub use merging::{merge, merge_test, reposition, ChangePointSet, MergeConfig};
pub use pipeline::{detect, segment, SameConfig, Segment, Segmentation};
pub use screening::{local_stats, multi_screen, screen, Candidate, CandidateSet, LocalStats};
pub use series::Series;
pub use simulation::{
    evaluate, gen_normal, gen_pool, run_grid, EvalMetrics, GridOptions, GroundTruth, Method,
    NoiseKind, Segmenter, SimReport, SimSpec,
};
pub use stats::{
    diff_variance, folded_cdf, folded_quantile, normal_cdf, normal_quantile, VarianceEstimate,
};
