// SPDX-License-Identifier: MIT OR Apache-2.0

use serde::Serialize;

use crate::error::{Result, SameError};
use crate::merging::{merge_points, ChangePointSet, MergeConfig};
use crate::screening::multi_screen_with;
use crate::series::{PrefixSums, Series};
use crate::stats::{diff_variance, folded_quantile};

/// Full configuration of a screening-and-merging run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SameConfig {
    pub bandwidths: Vec<usize>,
    pub alpha_screen: f64,
    pub k_prime: usize,
    pub alpha_merge: f64,
}

impl Default for SameConfig {
    fn default() -> Self {
        Self {
            bandwidths: vec![25, 50, 100],
            alpha_screen: 0.01,
            k_prime: 20,
            alpha_merge: 0.01,
        }
    }
}

impl SameConfig {
    pub fn validate(&self) -> Result<()> {
        let Some(&smallest) = self.bandwidths.first() else {
            return Err(SameError::invalid_input("bandwidth list is empty"));
        };
        if smallest == 0 || self.bandwidths.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SameError::invalid_input(format!(
                "bandwidths must be positive and strictly increasing, got {:?}",
                self.bandwidths
            )));
        }
        if !(self.alpha_screen > 0.0 && self.alpha_screen < 1.0) {
            return Err(SameError::invalid_input(format!(
                "screening level must lie in (0, 1), got {}",
                self.alpha_screen
            )));
        }
        self.merge_config().validate()?;
        if self.k_prime > smallest {
            return Err(SameError::invalid_input(format!(
                "minimum segment length {} exceeds the smallest bandwidth {smallest}",
                self.k_prime
            )));
        }
        Ok(())
    }

    pub fn merge_config(&self) -> MergeConfig {
        MergeConfig {
            alpha_merge: self.alpha_merge,
            k_prime: self.k_prime,
        }
    }

    pub fn max_bandwidth(&self) -> usize {
        self.bandwidths.iter().copied().max().unwrap_or(0)
    }
}

/// One constant-mean piece of a segmentation (1-based, inclusive end).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
    pub length: usize,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Segmentation {
    pub change_points: ChangePointSet,
    pub segments: Vec<Segment>,
}

impl Segmentation {
    /// Summarizes the segments delimited by `change_points`.
    pub fn from_change_points(series: &Series, change_points: ChangePointSet) -> Self {
        let segments = change_points
            .segments(series.len())
            .into_iter()
            .map(|(start, end)| Segment {
                start,
                end: end - 1,
                length: end - start,
                mean: series.range_mean(start, end),
            })
            .collect();
        Self {
            change_points,
            segments,
        }
    }

    pub fn change_points(&self) -> &[usize] {
        self.change_points.points()
    }
}

/// Variance estimate, multi-bandwidth screening and merging in one pass.
pub fn segment(series: &Series, config: &SameConfig) -> Result<Segmentation> {
    let change_points = detect(series, config)?;
    Ok(Segmentation::from_change_points(series, change_points))
}

/// Change-points only, skipping segment summaries.
pub fn detect(series: &Series, config: &SameConfig) -> Result<ChangePointSet> {
    config.validate()?;
    let n = series.len();
    let widest = config.max_bandwidth();
    if n < 2 * widest {
        return Err(SameError::invalid_input(format!(
            "series of length {n} is shorter than twice the largest bandwidth ({widest}); \
             use bandwidths of at most {}",
            n / 2
        )));
    }
    let s = diff_variance(series)?.s;
    if s == 0.0 {
        // a series with no first differences is constant
        return Ok(ChangePointSet::empty());
    }
    let delta = folded_quantile(config.alpha_screen)?;
    let prefix = PrefixSums::new(series);
    let candidates = multi_screen_with(&prefix, &config.bandwidths, delta, config.k_prime, s);
    merge_points(&prefix, candidates.indices(), &config.merge_config(), s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blocks(parts: &[(usize, f64)]) -> Series {
        Series::new(
            parts
                .iter()
                .flat_map(|&(len, level)| std::iter::repeat_n(level, len))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn constant_series_is_one_segment() {
        let series = Series::new(vec![0.7; 1000]).unwrap();
        let seg = segment(&series, &SameConfig::default()).unwrap();
        assert!(seg.change_points().is_empty());
        assert_eq!(seg.segments.len(), 1);
        let only = seg.segments[0];
        assert_eq!((only.start, only.end, only.length), (1, 1000, 1000));
        assert!((only.mean - 0.7).abs() < 1e-12);
    }

    #[test]
    fn noiseless_block_is_recovered() {
        let series = blocks(&[(300, 0.0), (100, 1.0), (600, 0.0)]);
        let seg = segment(&series, &SameConfig::default()).unwrap();
        assert_eq!(seg.change_points(), &[301, 401]);
        let spans: Vec<_> = seg
            .segments
            .iter()
            .map(|s| (s.start, s.end, s.mean))
            .collect();
        assert_eq!(
            spans,
            vec![(1, 300, 0.0), (301, 400, 1.0), (401, 1000, 0.0)]
        );
    }

    #[test]
    fn too_short_series_suggests_smaller_bandwidths() {
        let series = Series::new(vec![0.0; 150]).unwrap();
        let err = segment(&series, &SameConfig::default())
            .unwrap_err()
            .to_string();
        assert!(err.contains("at most 75"), "{err}");
    }

    #[test]
    fn config_validation() {
        let ok = SameConfig::default();
        assert!(ok.validate().is_ok());
        let bad = [
            SameConfig {
                bandwidths: vec![],
                ..ok.clone()
            },
            SameConfig {
                bandwidths: vec![50, 25],
                ..ok.clone()
            },
            SameConfig {
                bandwidths: vec![25, 25],
                ..ok.clone()
            },
            SameConfig {
                k_prime: 30,
                ..ok.clone()
            },
            SameConfig {
                alpha_screen: 1.0,
                ..ok.clone()
            },
            SameConfig {
                alpha_merge: 0.0,
                ..ok.clone()
            },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }
}
