// SPDX-License-Identifier: MIT OR Apache-2.0

//! Synthetic benchmark scenarios, detection metrics and the replicate grid.
//!
//! Every replicate draws its data from a ChaCha8 stream seeded with a child
//! seed mixed from `(master seed, scenario index, replicate index)`, so the
//! data seen by each method is independent of which methods run. Gaussian
//! noise uses inversion of the standard normal CDF on 53-bit uniforms.

use std::io::Write;
use std::time::Instant;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{binary_segmentation, pelt, PenaltySpec, DEFAULT_MIN_SEG};
use crate::error::{Result, SameError};
use crate::merging::ChangePointSet;
use crate::pipeline::{detect, SameConfig};
use crate::series::Series;
use crate::stats::normal_quantile;

/// Master seed used when none is given.
pub const DEFAULT_MASTER_SEED: u64 = 20_240_601;

/// Tolerances for the `p10` and `p5` detection rates.
pub const WIDE_TOLERANCE: usize = 10;
pub const NARROW_TOLERANCE: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    Gaussian,
    Pool,
}

/// One simulated scenario: `m` change-points delimiting `m/2` altered blocks
/// of length `l` raised by `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimSpec {
    pub n: usize,
    pub m: usize,
    pub l: usize,
    pub s: f64,
    pub noise: NoiseKind,
    pub seed: u64,
}

impl SimSpec {
    pub fn gaussian(m: usize, l: usize, s: f64) -> Self {
        Self {
            n: 10_000,
            m,
            l,
            s,
            noise: NoiseKind::Gaussian,
            seed: 0,
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    /// The 27 combinations of `m ∈ {2,4,6}`, `l ∈ {25,50,100}`, `s ∈ {1,1.5,2}`.
    pub fn standard_grid() -> Vec<SimSpec> {
        let mut grid = Vec::with_capacity(27);
        for s in [1.0, 1.5, 2.0] {
            for l in [25, 50, 100] {
                for m in [2, 4, 6] {
                    grid.push(Self::gaussian(m, l, s));
                }
            }
        }
        grid
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || !self.m.is_multiple_of(2) {
            return Err(SameError::invalid_input(format!(
                "number of change-points must be a positive even number, got {}",
                self.m
            )));
        }
        if self.l == 0 {
            return Err(SameError::invalid_input(
                "altered-segment length must be positive",
            ));
        }
        if !self.s.is_finite() {
            return Err(SameError::invalid_input(format!(
                "mean shift must be finite, got {}",
                self.s
            )));
        }
        let blocks = self.m / 2;
        if blocks * 2 * self.l >= self.n {
            return Err(SameError::invalid_input(format!(
                "{blocks} blocks of length {} do not fit in n = {} with margins",
                self.l, self.n
            )));
        }
        Ok(())
    }

    /// Block width `L = floor(n / (m/2))`.
    fn block_width(&self) -> usize {
        self.n / (self.m / 2)
    }
}

/// True change-points and the per-index mean.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub change_points: ChangePointSet,
    pub mean_function: Vec<f64>,
}

impl GroundTruth {
    /// Start of every altered block.
    pub fn block_starts(&self) -> Vec<usize> {
        self.change_points
            .points()
            .iter()
            .step_by(2)
            .copied()
            .collect()
    }
}

/// Draws block starts `cp_i` uniformly from `[(i−1)L + l, iL − l)`.
fn draw_truth(spec: &SimSpec, rng: &mut ChaCha8Rng) -> Result<GroundTruth> {
    spec.validate()?;
    let width = spec.block_width();
    if width <= 2 * spec.l {
        return Err(SameError::invalid_input(format!(
            "block width {width} leaves no room for a segment of length {} with margins",
            spec.l
        )));
    }
    let mut mean_function = vec![0.0; spec.n];
    let mut points = Vec::with_capacity(spec.m);
    for block in 1..=spec.m / 2 {
        let lo = (block - 1) * width + spec.l;
        let hi = block * width - spec.l;
        let cp = rng.random_range(lo..hi);
        mean_function[cp - 1..cp - 1 + spec.l].fill(spec.s);
        points.push(cp);
        points.push(cp + spec.l);
    }
    Ok(GroundTruth {
        change_points: ChangePointSet::new(points, spec.n)?,
        mean_function,
    })
}

/// Uniform draw on `(0, 1)` from the top 53 bits of one 64-bit word.
fn open_unit(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // open_unit never returns 0 or 1
    normal_quantile(open_unit(rng)).expect("uniform draw lies in (0, 1)")
}

/// Gaussian scenario: `x_j = f(j) + ε_j`, `ε_j ~ N(0, 1)` i.i.d.
pub fn gen_normal(spec: &SimSpec) -> Result<(Series, GroundTruth)> {
    if spec.noise != NoiseKind::Gaussian {
        return Err(SameError::invalid_input(
            "gen_normal needs a gaussian scenario",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let truth = draw_truth(spec, &mut rng)?;
    let values = truth
        .mean_function
        .iter()
        .map(|&f| f + standard_normal(&mut rng))
        .collect();
    Ok((Series::new(values)?, truth))
}

/// Resampling scenario: altered blocks draw (with replacement) from
/// `altered_pool`, everything else from `neutral_pool`.
pub fn gen_pool(
    spec: &SimSpec,
    neutral_pool: &Series,
    altered_pool: &Series,
) -> Result<(Series, GroundTruth)> {
    if spec.noise != NoiseKind::Pool {
        return Err(SameError::invalid_input("gen_pool needs a pool scenario"));
    }
    if neutral_pool.is_empty() || altered_pool.is_empty() {
        return Err(SameError::invalid_input(
            "resampling pools must be non-empty",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let truth = draw_truth(spec, &mut rng)?;
    let mut altered = vec![false; spec.n];
    for &start in &truth.block_starts() {
        altered[start - 1..start - 1 + spec.l].fill(true);
    }
    let values = altered
        .iter()
        .map(|&inside| {
            let pool = if inside {
                altered_pool.values()
            } else {
                neutral_pool.values()
            };
            pool[rng.random_range(0..pool.len())]
        })
        .collect();
    Ok((Series::new(values)?, truth))
}

/// Detection metrics for one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalMetrics {
    pub t: f64,
    pub p10: f64,
    pub p5: f64,
    pub fp: f64,
}

fn detection_rate(truth: &[usize], estimated: &[usize], tol: usize) -> f64 {
    if truth.is_empty() {
        return 1.0;
    }
    let hits = truth
        .iter()
        .filter(|&&tau| estimated.iter().any(|&e| e.abs_diff(tau) <= tol))
        .count();
    hits as f64 / truth.len() as f64
}

/// One-to-one matches within `tol`, taken greedily by increasing distance.
fn matched_count(truth: &[usize], estimated: &[usize], tol: usize) -> usize {
    let mut pairs: Vec<(usize, usize, usize)> = truth
        .iter()
        .enumerate()
        .flat_map(|(ti, &tau)| {
            estimated
                .iter()
                .enumerate()
                .filter(move |(_, &e)| e.abs_diff(tau) <= tol)
                .map(move |(ei, &e)| (e.abs_diff(tau), ti, ei))
        })
        .collect();
    pairs.sort_unstable();
    let mut truth_used = vec![false; truth.len()];
    let mut est_used = vec![false; estimated.len()];
    let mut matched = 0;
    for (_, ti, ei) in pairs {
        if !truth_used[ti] && !est_used[ei] {
            truth_used[ti] = true;
            est_used[ei] = true;
            matched += 1;
        }
    }
    matched
}

/// Scores an estimate against the truth. With no true change-points the
/// detection rates are vacuously 1.
pub fn evaluate(truth: &ChangePointSet, estimated: &ChangePointSet, elapsed: f64) -> EvalMetrics {
    let (truth, est) = (truth.points(), estimated.points());
    EvalMetrics {
        t: elapsed,
        p10: detection_rate(truth, est, WIDE_TOLERANCE),
        p5: detection_rate(truth, est, NARROW_TOLERANCE),
        fp: (est.len() - matched_count(truth, est, WIDE_TOLERANCE)) as f64,
    }
}

/// Anything that maps a series to change-points.
pub trait Segmenter: Send + Sync {
    fn name(&self) -> &str;
    fn detect(&self, series: &Series) -> Result<ChangePointSet>;
}

/// The three built-in segmenters.
#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    Same(SameConfig),
    BinSeg { alpha: f64, min_seg: usize },
    Pelt(PenaltySpec),
}

impl Method {
    pub const NAMES: [&'static str; 3] = ["same", "binseg", "pelt"];

    /// Built-in method with its benchmark defaults.
    pub fn from_name(name: &str) -> Result<Self> {
        match name.trim().to_ascii_lowercase().as_str() {
            "same" => Ok(Self::Same(SameConfig::default())),
            "binseg" => Ok(Self::BinSeg {
                alpha: 0.01,
                min_seg: DEFAULT_MIN_SEG,
            }),
            "pelt" => Ok(Self::Pelt(PenaltySpec::bic())),
            other => Err(SameError::invalid_input(format!(
                "unknown method '{other}'; available methods: {}",
                Self::NAMES.join(", ")
            ))),
        }
    }
}

impl Segmenter for Method {
    fn name(&self) -> &str {
        match self {
            Self::Same(_) => "same",
            Self::BinSeg { .. } => "binseg",
            Self::Pelt(_) => "pelt",
        }
    }

    fn detect(&self, series: &Series) -> Result<ChangePointSet> {
        match self {
            Self::Same(config) => detect(series, config),
            Self::BinSeg { alpha, min_seg } => binary_segmentation(series, *alpha, *min_seg),
            Self::Pelt(penalty) => pelt(series, penalty),
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of one `(scenario, replicate)` cell.
pub fn child_seed(master: u64, scenario: usize, replicate: usize) -> u64 {
    let a = splitmix64(master);
    let b = splitmix64(a ^ scenario as u64);
    splitmix64(b ^ (replicate as u64).wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// Aggregated metrics of one method on one scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub method: String,
    pub m: usize,
    pub l: usize,
    pub s: f64,
    pub t_mean: f64,
    pub p10_mean: f64,
    pub p5_mean: f64,
    pub fp_mean: f64,
    pub replicates: usize,
    pub master_seed: u64,
}

/// Per-method, per-scenario results of a grid run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub rows: Vec<ReportRow>,
}

impl SimReport {
    pub fn row(&self, method: &str, m: usize, l: usize, s: f64) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.m == m && r.l == l && r.s == s)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        for row in &self.rows {
            out.serialize(row)
                .map_err(|e| SameError::invalid_input(format!("failed to write report: {e}")))?;
        }
        out.flush()
            .map_err(|e| SameError::invalid_input(format!("failed to write report: {e}")))?;
        Ok(())
    }

    /// Human-readable table grouped by scenario.
    pub fn summary(&self) -> String {
        let mut text = format!(
            "{:<8} {:>3} {:>4} {:>5} {:>10} {:>7} {:>7} {:>7}\n",
            "method", "m", "l", "s", "t", "p10", "p5", "FP"
        );
        for row in &self.rows {
            text.push_str(&format!(
                "{:<8} {:>3} {:>4} {:>5} {:>10.4} {:>7.4} {:>7.4} {:>7.4}\n",
                row.method, row.m, row.l, row.s, row.t_mean, row.p10_mean, row.p5_mean, row.fp_mean
            ));
        }
        text
    }
}

/// Execution options for [`run_grid`].
#[derive(Debug, Clone, Default)]
pub struct GridOptions {
    /// Cap on worker threads; `None` uses the global pool.
    pub max_threads: Option<usize>,
    /// `(neutral, altered)` pools, needed by pool-noise scenarios.
    pub pools: Option<(Series, Series)>,
}

fn generate(spec: &SimSpec, options: &GridOptions) -> Result<(Series, GroundTruth)> {
    match spec.noise {
        NoiseKind::Gaussian => gen_normal(spec),
        NoiseKind::Pool => {
            let (neutral, altered) = options.pools.as_ref().ok_or_else(|| {
                SameError::invalid_input("pool-noise scenario requires resampling pools")
            })?;
            gen_pool(spec, neutral, altered)
        }
    }
}

fn run_cell<S: Segmenter>(
    methods: &[S],
    spec: &SimSpec,
    options: &GridOptions,
) -> Result<Vec<EvalMetrics>> {
    let (series, truth) = generate(spec, options)?;
    methods
        .iter()
        .map(|method| {
            let start = Instant::now();
            let estimate = method.detect(&series)?;
            let elapsed = start.elapsed().as_secs_f64();
            Ok(evaluate(&truth.change_points, &estimate, elapsed))
        })
        .collect()
}

/// Runs every method on every replicate of every scenario and averages the
/// metrics. All methods see the same data in each replicate.
pub fn run_grid<S: Segmenter>(
    methods: &[S],
    scenarios: &[SimSpec],
    replicates: usize,
    master_seed: u64,
    options: &GridOptions,
) -> Result<SimReport> {
    if replicates == 0 {
        return Err(SameError::invalid_input(
            "at least one replicate is required",
        ));
    }
    if methods.is_empty() {
        return Err(SameError::invalid_input("at least one method is required"));
    }
    for spec in scenarios {
        spec.validate()?;
    }
    let cells: Vec<(usize, usize)> = (0..scenarios.len())
        .flat_map(|sc| (0..replicates).map(move |r| (sc, r)))
        .collect();
    let work = || -> Vec<Result<Vec<EvalMetrics>>> {
        cells
            .par_iter()
            .map(|&(sc, rep)| {
                let spec = scenarios[sc].with_seed(child_seed(master_seed, sc, rep));
                run_cell(methods, &spec, options).map_err(|e| SameError::Replicate {
                    scenario: sc,
                    replicate: rep,
                    source: Box::new(e),
                })
            })
            .collect()
    };
    let outcomes = match options.max_threads {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build()
            .map_err(|e| SameError::invalid_input(format!("cannot start worker pool: {e}")))?
            .install(work),
        None => work(),
    };

    // sequential reduction in cell order keeps sums bit-identical across runs
    let mut sums = vec![[0.0f64; 4]; scenarios.len() * methods.len()];
    for (&(sc, _), outcome) in cells.iter().zip(outcomes) {
        for (mi, metrics) in outcome?.into_iter().enumerate() {
            let acc = &mut sums[sc * methods.len() + mi];
            acc[0] += metrics.t;
            acc[1] += metrics.p10;
            acc[2] += metrics.p5;
            acc[3] += metrics.fp;
        }
    }
    let reps = replicates as f64;
    let rows = scenarios
        .iter()
        .enumerate()
        .flat_map(|(sc, spec)| {
            let sums = &sums;
            methods.iter().enumerate().map(move |(mi, method)| {
                let acc = sums[sc * methods.len() + mi];
                ReportRow {
                    method: method.name().to_string(),
                    m: spec.m,
                    l: spec.l,
                    s: spec.s,
                    t_mean: acc[0] / reps,
                    p10_mean: acc[1] / reps,
                    p5_mean: acc[2] / reps,
                    fp_mean: acc[3] / reps,
                    replicates,
                    master_seed,
                }
            })
        })
        .collect();
    Ok(SimReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cps(points: &[usize], n: usize) -> ChangePointSet {
        ChangePointSet::new(points.to_vec(), n).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let m = evaluate(&cps(&[100], 500), &cps(&[105], 500), 0.25);
        assert_eq!((m.p10, m.p5, m.fp, m.t), (1.0, 1.0, 0.0, 0.25));

        let m = evaluate(&cps(&[100], 500), &cps(&[111], 500), 0.0);
        assert_eq!((m.p10, m.p5, m.fp), (0.0, 0.0, 1.0));

        let m = evaluate(&cps(&[100, 200], 500), &cps(&[101, 205, 400], 500), 0.0);
        assert_eq!((m.p10, m.p5, m.fp), (1.0, 1.0, 1.0));
    }

    #[test]
    fn one_estimate_cannot_match_two_truths() {
        let m = evaluate(&cps(&[100, 110], 500), &cps(&[105], 500), 0.0);
        assert_eq!(m.p10, 1.0);
        assert_eq!(m.fp, 0.0);
        let m = evaluate(&cps(&[100], 500), &cps(&[95, 104], 500), 0.0);
        assert_eq!(m.fp, 1.0);
    }

    #[test]
    fn gen_normal_geometry() {
        let spec = SimSpec::gaussian(2, 25, 1.0).with_seed(7);
        let (series, truth) = gen_normal(&spec).unwrap();
        assert_eq!(series.len(), 10_000);
        assert_eq!(truth.change_points.len(), 2);
        assert_eq!(
            truth.mean_function.iter().filter(|&&f| f == 1.0).count(),
            25
        );
        let p = truth.change_points.points();
        assert_eq!(p[1] - p[0], 25);
        assert_eq!(truth.mean_function[p[0] - 1], 1.0);
        assert_eq!(truth.mean_function[p[1] - 1], 0.0);
    }

    #[test]
    fn generators_are_deterministic() {
        let spec = SimSpec::gaussian(4, 50, 1.5).with_seed(99);
        assert_eq!(gen_normal(&spec).unwrap().0, gen_normal(&spec).unwrap().0);
        let other = spec.with_seed(100);
        assert_ne!(gen_normal(&spec).unwrap().0, gen_normal(&other).unwrap().0);
    }

    #[test]
    fn blocks_stay_inside_their_thirds() {
        for seed in 0..1000 {
            let spec = SimSpec::gaussian(6, 100, 1.0).with_seed(seed);
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let truth = draw_truth(&spec, &mut rng).unwrap();
            let width = 10_000 / 3;
            for (i, start) in truth.block_starts().into_iter().enumerate() {
                assert!(start >= i * width + 100);
                assert!(start + 100 < (i + 1) * width);
            }
        }
    }

    #[test]
    fn degenerate_pools_reproduce_the_mean_function() {
        let spec = SimSpec {
            noise: NoiseKind::Pool,
            ..SimSpec::gaussian(4, 50, 1.0).with_seed(3)
        };
        let zero = Series::new(vec![0.0]).unwrap();
        let one = Series::new(vec![1.0]).unwrap();
        let (series, truth) = gen_pool(&spec, &zero, &one).unwrap();
        assert_eq!(series.values(), truth.mean_function.as_slice());
        let empty = Series::new(vec![]).unwrap();
        assert!(gen_pool(&spec, &empty, &one).is_err());
        assert!(gen_normal(&spec).is_err());
    }

    #[test]
    fn pool_draws_follow_the_pool_distribution() {
        let spec = SimSpec {
            n: 20_000,
            noise: NoiseKind::Pool,
            ..SimSpec::gaussian(2, 5_000, 1.0).with_seed(11)
        };
        let neutral = Series::new(vec![0.0]).unwrap();
        let pool = Series::new(vec![1.0, 2.0, 2.0, 3.0]).unwrap();
        let (series, truth) = gen_pool(&spec, &neutral, &pool).unwrap();
        let start = truth.block_starts()[0];
        let block = &series.values()[start - 1..start - 1 + 5_000];
        let expected = [0.25, 0.5, 0.25];
        let chi2: f64 = [1.0, 2.0, 3.0]
            .iter()
            .zip(expected)
            .map(|(v, p)| {
                let observed = block.iter().filter(|&&x| x == *v).count() as f64;
                let e = p * block.len() as f64;
                (observed - e).powi(2) / e
            })
            .sum();
        // 2 degrees of freedom, 0.999 quantile
        assert!(chi2 < 13.82, "chi2 = {chi2}");
    }

    #[test]
    fn invalid_specs() {
        assert!(SimSpec::gaussian(3, 25, 1.0).validate().is_err());
        assert!(SimSpec::gaussian(2, 0, 1.0).validate().is_err());
        assert!(SimSpec {
            n: 100,
            ..SimSpec::gaussian(2, 50, 1.0)
        }
        .validate()
        .is_err());
        // blocks of width 100 leave exactly two admissible starts for l = 49, none for l = 50
        let tight = SimSpec {
            n: 300,
            ..SimSpec::gaussian(6, 49, 1.0)
        };
        assert!(tight.validate().is_ok());
        assert!(gen_normal(&tight).is_ok());
        let infeasible = SimSpec {
            n: 301,
            ..SimSpec::gaussian(6, 50, 1.0)
        };
        assert!(gen_normal(&infeasible).is_err());
    }

    #[test]
    fn standard_normal_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let draws: Vec<f64> = (0..200_000).map(|_| standard_normal(&mut rng)).collect();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / draws.len() as f64;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.015, "var {var}");
    }

    #[test]
    fn child_seeds_differ() {
        let a = child_seed(1, 0, 0);
        assert_ne!(a, child_seed(1, 0, 1));
        assert_ne!(a, child_seed(1, 1, 0));
        assert_ne!(a, child_seed(2, 0, 0));
        assert_eq!(a, child_seed(1, 0, 0));
    }

    #[test]
    fn method_names() {
        for name in Method::NAMES {
            assert_eq!(Method::from_name(name).unwrap().name(), name);
        }
        let err = Method::from_name("cbs").unwrap_err().to_string();
        assert!(err.contains("same, binseg, pelt"));
    }

    #[test]
    fn smallest_grid_has_one_row() {
        let methods = [Method::from_name("same").unwrap()];
        let scenarios = [SimSpec::gaussian(2, 25, 1.0)];
        let report = run_grid(&methods, &scenarios, 1, 1, &GridOptions::default()).unwrap();
        assert_eq!(report.rows.len(), 1);
        assert_eq!(report.rows[0].replicates, 1);
        assert!(run_grid(&methods, &scenarios, 0, 1, &GridOptions::default()).is_err());
    }

    #[test]
    fn pool_scenarios_need_pools() {
        let methods = [Method::from_name("same").unwrap()];
        let scenarios = [SimSpec {
            noise: NoiseKind::Pool,
            ..SimSpec::gaussian(2, 25, 1.0)
        }];
        let err = run_grid(&methods, &scenarios, 1, 1, &GridOptions::default()).unwrap_err();
        assert!(matches!(
            err,
            SameError::Replicate {
                scenario: 0,
                replicate: 0,
                ..
            }
        ));
    }
}
