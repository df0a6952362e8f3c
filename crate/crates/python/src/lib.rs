// SPDX-License-Identifier: MIT OR Apache-2.0

//! Python bindings: `import samecp`.

#![forbid(unsafe_code)]

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use samecp_core as core;
use samecp_core::{
    Candidate as CoreCandidate, CandidateSet, ChangePointSet, GridOptions, Method, PenaltySpec,
    SameConfig, SameError, Series, SimSpec,
};

fn to_pyerr(err: SameError) -> PyErr {
    match err {
        SameError::Io { .. } => PyIOError::new_err(err.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn series(values: Vec<f64>) -> PyResult<Series> {
    Series::new(values).map_err(to_pyerr)
}

fn change_points(points: Vec<usize>, n: usize) -> PyResult<ChangePointSet> {
    ChangePointSet::new(points, n).map_err(to_pyerr)
}

#[pyclass(name = "VarianceEstimate", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct PyVarianceEstimate {
    s2: f64,
    s: f64,
}

#[pyclass(name = "Candidate", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct PyCandidate {
    index: usize,
    score: f64,
    bandwidth: usize,
}

#[pymethods]
impl PyCandidate {
    fn __repr__(&self) -> String {
        format!(
            "Candidate(index={}, score={}, bandwidth={})",
            self.index, self.score, self.bandwidth
        )
    }
}

impl From<&CoreCandidate> for PyCandidate {
    fn from(c: &CoreCandidate) -> Self {
        Self {
            index: c.index,
            score: c.score,
            bandwidth: c.bandwidth,
        }
    }
}

#[pyclass(name = "Segment", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct PySegment {
    start: usize,
    end: usize,
    length: usize,
    mean: f64,
}

#[pymethods]
impl PySegment {
    fn __repr__(&self) -> String {
        format!(
            "Segment(start={}, end={}, length={}, mean={})",
            self.start, self.end, self.length, self.mean
        )
    }
}

#[pyclass(name = "Segmentation", frozen, get_all, skip_from_py_object)]
struct PySegmentation {
    change_points: Vec<usize>,
    segments: Vec<PySegment>,
}

#[pymethods]
impl PySegmentation {
    fn __len__(&self) -> usize {
        self.segments.len()
    }

    fn __repr__(&self) -> String {
        format!("Segmentation(change_points={:?})", self.change_points)
    }
}

#[pyclass(name = "EvalMetrics", frozen, get_all, skip_from_py_object)]
struct PyEvalMetrics {
    t: f64,
    p10: f64,
    p5: f64,
    fp: f64,
}

#[pyclass(name = "ReportRow", frozen, get_all, skip_from_py_object)]
struct PyReportRow {
    method: String,
    m: usize,
    l: usize,
    s: f64,
    t_mean: f64,
    p10_mean: f64,
    p5_mean: f64,
    fp_mean: f64,
    replicates: usize,
    master_seed: u64,
}

#[pyfunction]
fn diff_variance(values: Vec<f64>) -> PyResult<PyVarianceEstimate> {
    let est = core::diff_variance(&series(values)?).map_err(to_pyerr)?;
    Ok(PyVarianceEstimate {
        s2: est.s2,
        s: est.s,
    })
}

#[pyfunction]
fn folded_cdf(x: f64) -> PyResult<f64> {
    core::folded_cdf(x).map_err(to_pyerr)
}

#[pyfunction]
fn folded_quantile(alpha: f64) -> PyResult<f64> {
    core::folded_quantile(alpha).map_err(to_pyerr)
}

#[pyfunction]
fn normal_quantile(p: f64) -> PyResult<f64> {
    core::normal_quantile(p).map_err(to_pyerr)
}

/// `[(index, M_i^k)]` for every index with a defined statistic.
#[pyfunction]
fn local_stats(values: Vec<f64>, k: usize, s: f64) -> PyResult<Vec<(usize, f64)>> {
    let stats = core::local_stats(&series(values)?, k, s).map_err(to_pyerr)?;
    Ok(stats.iter().collect())
}

#[pyfunction]
fn screen(values: Vec<f64>, k: usize, delta: f64, s: f64) -> PyResult<Vec<PyCandidate>> {
    let set = core::screen(&series(values)?, k, delta, s).map_err(to_pyerr)?;
    Ok(set.iter().map(PyCandidate::from).collect())
}

#[pyfunction]
fn multi_screen(
    values: Vec<f64>,
    bandwidths: Vec<usize>,
    alpha: f64,
    k_min: usize,
    s: f64,
) -> PyResult<Vec<PyCandidate>> {
    let set =
        core::multi_screen(&series(values)?, &bandwidths, alpha, k_min, s).map_err(to_pyerr)?;
    Ok(set.iter().map(PyCandidate::from).collect())
}

#[pyfunction]
fn merge_test(
    values: Vec<f64>,
    left_start: usize,
    cp: usize,
    right_end_exclusive: usize,
    s: f64,
) -> PyResult<f64> {
    core::merge_test(&series(values)?, left_start, cp, right_end_exclusive, s).map_err(to_pyerr)
}

#[pyfunction]
fn reposition(values: Vec<f64>, a: usize, b: usize, k_prime: usize) -> PyResult<usize> {
    core::reposition(&series(values)?, a, b, k_prime).map_err(to_pyerr)
}

/// Runs the merge walk over candidate indices.
#[pyfunction]
#[pyo3(signature = (values, candidates, s, alpha_merge = 0.01, k_prime = 20))]
fn merge(
    values: Vec<f64>,
    candidates: Vec<usize>,
    s: f64,
    alpha_merge: f64,
    k_prime: usize,
) -> PyResult<Vec<usize>> {
    let set = CandidateSet::new(
        candidates
            .into_iter()
            .map(|index| CoreCandidate {
                index,
                score: f64::NAN,
                bandwidth: 0,
            })
            .collect(),
    )
    .map_err(to_pyerr)?;
    let config = core::MergeConfig {
        alpha_merge,
        k_prime,
    };
    let out = core::merge(&series(values)?, &set, &config, s).map_err(to_pyerr)?;
    Ok(out.into_inner())
}

#[pyfunction]
#[pyo3(signature = (values, bandwidths = vec![25, 50, 100], alpha_screen = 0.01, k_prime = 20, alpha_merge = 0.01))]
fn segment(
    py: Python<'_>,
    values: Vec<f64>,
    bandwidths: Vec<usize>,
    alpha_screen: f64,
    k_prime: usize,
    alpha_merge: f64,
) -> PyResult<PySegmentation> {
    let config = SameConfig {
        bandwidths,
        alpha_screen,
        k_prime,
        alpha_merge,
    };
    let series = series(values)?;
    let seg = py
        .detach(|| core::segment(&series, &config))
        .map_err(to_pyerr)?;
    Ok(PySegmentation {
        change_points: seg.change_points().to_vec(),
        segments: seg
            .segments
            .iter()
            .map(|s| PySegment {
                start: s.start,
                end: s.end,
                length: s.length,
                mean: s.mean,
            })
            .collect(),
    })
}

#[pyfunction]
#[pyo3(signature = (values, alpha = 0.01, min_seg = 20))]
fn binary_segmentation(values: Vec<f64>, alpha: f64, min_seg: usize) -> PyResult<Vec<usize>> {
    let out = core::binary_segmentation(&series(values)?, alpha, min_seg).map_err(to_pyerr)?;
    Ok(out.into_inner())
}

fn penalty_from(penalty: &Bound<'_, PyAny>, min_seg: usize) -> PyResult<PenaltySpec> {
    let spec = if let Ok(value) = penalty.extract::<f64>() {
        PenaltySpec::manual(value)
    } else {
        match penalty.extract::<String>()?.to_ascii_lowercase().as_str() {
            "bic" => PenaltySpec::bic(),
            "aic" => PenaltySpec::aic(),
            other => {
                return Err(PyValueError::new_err(format!(
                    "penalty must be 'bic', 'aic' or a number, got '{other}'"
                )))
            }
        }
    };
    Ok(spec.with_min_seg(min_seg))
}

/// Penalized partitioning; `penalty` is `"bic"`, `"aic"` or a number.
#[pyfunction]
#[pyo3(signature = (values, penalty = None, min_seg = 20))]
fn pelt(
    values: Vec<f64>,
    penalty: Option<&Bound<'_, PyAny>>,
    min_seg: usize,
) -> PyResult<Vec<usize>> {
    let spec = match penalty {
        Some(p) => penalty_from(p, min_seg)?,
        None => PenaltySpec::bic().with_min_seg(min_seg),
    };
    let out = core::pelt(&series(values)?, &spec).map_err(to_pyerr)?;
    Ok(out.into_inner())
}

/// Gaussian scenario: returns `(values, true_change_points)`.
#[pyfunction]
#[pyo3(signature = (m = 2, l = 25, s = 1.0, seed = 0, n = 10_000))]
fn gen_normal(m: usize, l: usize, s: f64, seed: u64, n: usize) -> PyResult<(Vec<f64>, Vec<usize>)> {
    let spec = SimSpec {
        n,
        ..SimSpec::gaussian(m, l, s)
    }
    .with_seed(seed);
    let (series, truth) = core::gen_normal(&spec).map_err(to_pyerr)?;
    Ok((series.into_inner(), truth.change_points.into_inner()))
}

/// Pool-resampling scenario: returns `(values, true_change_points)`.
#[pyfunction]
#[pyo3(signature = (neutral_pool, altered_pool, m = 2, l = 25, seed = 0, n = 10_000))]
fn gen_pool(
    neutral_pool: Vec<f64>,
    altered_pool: Vec<f64>,
    m: usize,
    l: usize,
    seed: u64,
    n: usize,
) -> PyResult<(Vec<f64>, Vec<usize>)> {
    let spec = SimSpec {
        n,
        noise: core::NoiseKind::Pool,
        ..SimSpec::gaussian(m, l, 0.0)
    }
    .with_seed(seed);
    let (series, truth) =
        core::gen_pool(&spec, &series(neutral_pool)?, &series(altered_pool)?).map_err(to_pyerr)?;
    Ok((series.into_inner(), truth.change_points.into_inner()))
}

#[pyfunction]
#[pyo3(signature = (truth, estimated, n, elapsed = 0.0))]
fn evaluate(
    truth: Vec<usize>,
    estimated: Vec<usize>,
    n: usize,
    elapsed: f64,
) -> PyResult<PyEvalMetrics> {
    let m = core::evaluate(
        &change_points(truth, n)?,
        &change_points(estimated, n)?,
        elapsed,
    );
    Ok(PyEvalMetrics {
        t: m.t,
        p10: m.p10,
        p5: m.p5,
        fp: m.fp,
    })
}

/// Runs the benchmark grid over `(m, l, s)` Gaussian scenarios.
#[pyfunction]
#[pyo3(signature = (methods, scenarios, replicates = 100, seed = core::simulation::DEFAULT_MASTER_SEED))]
fn run_grid(
    py: Python<'_>,
    methods: Vec<String>,
    scenarios: Vec<(usize, usize, f64)>,
    replicates: usize,
    seed: u64,
) -> PyResult<Vec<PyReportRow>> {
    let methods = methods
        .iter()
        .map(|name| Method::from_name(name))
        .collect::<Result<Vec<_>, _>>()
        .map_err(to_pyerr)?;
    let specs: Vec<SimSpec> = scenarios
        .into_iter()
        .map(|(m, l, s)| SimSpec::gaussian(m, l, s))
        .collect();
    let report = py
        .detach(|| core::run_grid(&methods, &specs, replicates, seed, &GridOptions::default()))
        .map_err(to_pyerr)?;
    Ok(report
        .rows
        .into_iter()
        .map(|r| PyReportRow {
            method: r.method,
            m: r.m,
            l: r.l,
            s: r.s,
            t_mean: r.t_mean,
            p10_mean: r.p10_mean,
            p5_mean: r.p5_mean,
            fp_mean: r.fp_mean,
            replicates: r.replicates,
            master_seed: r.master_seed,
        })
        .collect())
}

#[pymodule]
fn samecp(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyVarianceEstimate>()?;
    m.add_class::<PyCandidate>()?;
    m.add_class::<PySegment>()?;
    m.add_class::<PySegmentation>()?;
    m.add_class::<PyEvalMetrics>()?;
    m.add_class::<PyReportRow>()?;
    m.add_function(wrap_pyfunction!(diff_variance, m)?)?;
    m.add_function(wrap_pyfunction!(folded_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(folded_quantile, m)?)?;
    m.add_function(wrap_pyfunction!(normal_quantile, m)?)?;
    m.add_function(wrap_pyfunction!(local_stats, m)?)?;
    m.add_function(wrap_pyfunction!(screen, m)?)?;
    m.add_function(wrap_pyfunction!(multi_screen, m)?)?;
    m.add_function(wrap_pyfunction!(merge_test, m)?)?;
    m.add_function(wrap_pyfunction!(reposition, m)?)?;
    m.add_function(wrap_pyfunction!(merge, m)?)?;
    m.add_function(wrap_pyfunction!(segment, m)?)?;
    m.add_function(wrap_pyfunction!(binary_segmentation, m)?)?;
    m.add_function(wrap_pyfunction!(pelt, m)?)?;
    m.add_function(wrap_pyfunction!(gen_normal, m)?)?;
    m.add_function(wrap_pyfunction!(gen_pool, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(run_grid, m)?)?;
    Ok(())
}
