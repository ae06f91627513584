//! Python bindings. Structured results (reports, splits, analyses) are
//! returned as JSON strings in the same format the CLI writes.

use std::fs::File;
use std::io::BufReader;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use osrkit_core::analysis::{analyze, parse_summaries, GroupField};
use osrkit_core::metrics;
use osrkit_core::runio::{
    self, parse_attribute_matrix, parse_hierarchy_table, parse_semantic_tree, write_report, write_split,
    EvaluationRun, HierarchyScheme, Label, Sample, SplitSpec,
};
use osrkit_core::scoring::{self, ScoreRule};
use osrkit_core::splits;
use osrkit_core::synth::{generate_run, SynthConfig};

fn value_err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn open(path: &str) -> PyResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| PyIOError::new_err(format!("{path}: {e}")))
}

fn rule(name: &str) -> PyResult<ScoreRule> {
    name.parse().map_err(value_err)
}

fn split_json(spec: &SplitSpec) -> String {
    let mut out = Vec::new();
    write_split(spec, &mut out).expect("writing to memory");
    String::from_utf8(out).expect("JSON is UTF-8")
}

/// An evaluation run: per-sample logits, labels and optional features.
#[pyclass(name = "Run", module = "osrkit", frozen)]
struct PyRun {
    inner: EvaluationRun,
}

#[pymethods]
impl PyRun {
    /// Builds a run from arrays. Labels are class indices, `-1` for unknown.
    #[new]
    #[pyo3(signature = (num_classes, ids, labels, logits, features=None))]
    fn new(
        num_classes: usize,
        ids: Vec<String>,
        labels: Vec<i64>,
        logits: Vec<Vec<f64>>,
        features: Option<Vec<Vec<f64>>>,
    ) -> PyResult<Self> {
        let n = ids.len();
        if labels.len() != n || logits.len() != n || features.as_ref().is_some_and(|f| f.len() != n) {
            return Err(PyValueError::new_err("ids, labels, logits and features must have equal lengths"));
        }
        let mut features = features.map(Vec::into_iter);
        let samples = ids
            .into_iter()
            .zip(labels)
            .zip(logits)
            .map(|((id, label), logits)| {
                let label = match label {
                    -1 => Label::Unknown,
                    l if l >= 0 => Label::Known(l as usize),
                    l => return Err(PyValueError::new_err(format!("invalid label {l}"))),
                };
                Ok(Sample {
                    id,
                    label,
                    logits,
                    features: features.as_mut().and_then(Iterator::next),
                })
            })
            .collect::<PyResult<Vec<_>>>()?;
        EvaluationRun::new(num_classes, samples).map(|inner| Self { inner }).map_err(value_err)
    }

    /// Reads a run CSV file.
    #[staticmethod]
    fn from_csv(path: &str) -> PyResult<Self> {
        runio::parse_run(open(path)?).map(|inner| Self { inner }).map_err(value_err)
    }

    /// Parses run CSV text.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        runio::parse_run(text.as_bytes()).map(|inner| Self { inner }).map_err(value_err)
    }

    fn to_csv(&self) -> String {
        let mut out = Vec::new();
        runio::write_run(&self.inner, &mut out).expect("writing to memory");
        String::from_utf8(out).expect("CSV is UTF-8")
    }

    #[getter]
    fn num_classes(&self) -> usize {
        self.inner.num_classes()
    }

    #[getter]
    fn has_features(&self) -> bool {
        self.inner.has_features()
    }

    #[getter]
    fn num_known(&self) -> usize {
        self.inner.num_known_samples()
    }

    #[getter]
    fn num_unknown(&self) -> usize {
        self.inner.num_unknown_samples()
    }

    #[getter]
    fn labels(&self) -> Vec<i64> {
        self.inner.labels().map(Label::as_i64).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Run(num_classes={}, known={}, unknown={}, features={})",
            self.inner.num_classes(),
            self.inner.num_known_samples(),
            self.inner.num_unknown_samples(),
            self.inner.has_features()
        )
    }

    /// Returns `(scores, predictions)` under `rule` (`msp`, `mls` or `norm`).
    fn scores(&self, rule_name: &str) -> PyResult<(Vec<f64>, Vec<usize>)> {
        let s = scoring::score(&self.inner, rule(rule_name)?).map_err(value_err)?;
        Ok((s.scores, s.predictions))
    }

    /// Metrics report as JSON.
    #[pyo3(signature = (rule_name, num_unknown_classes=0, curves=false))]
    fn evaluate(&self, rule_name: &str, num_unknown_classes: usize, curves: bool) -> PyResult<String> {
        let report =
            metrics::evaluate(&self.inner, rule(rule_name)?, num_unknown_classes, curves).map_err(value_err)?;
        let mut out = Vec::new();
        write_report(&report, &mut out).expect("writing to memory");
        Ok(String::from_utf8(out).expect("JSON is UTF-8"))
    }
}

#[pyfunction]
fn softmax(logits: Vec<f64>) -> Vec<f64> {
    scoring::softmax(&logits)
}

#[pyfunction]
fn auroc(known: Vec<f64>, unknown: Vec<f64>) -> PyResult<f64> {
    metrics::auroc(&known, &unknown).map_err(value_err)
}

#[pyfunction]
fn average_precision(known: Vec<f64>, unknown: Vec<f64>) -> PyResult<f64> {
    metrics::average_precision(&known, &unknown).map_err(value_err)
}

/// ROC points `(fpr, tpr)` from `(0, 0)` to `(1, 1)`.
#[pyfunction]
fn roc_curve(known: Vec<f64>, unknown: Vec<f64>) -> PyResult<Vec<(f64, f64)>> {
    metrics::roc_curve(&known, &unknown).map(|c| c.points).map_err(value_err)
}

#[pyfunction]
fn openness(num_known_classes: usize, num_unknown_classes: usize) -> PyResult<f64> {
    metrics::openness(num_known_classes, num_unknown_classes).map_err(value_err)
}

#[pyfunction]
fn pearson(x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    osrkit_core::analysis::pearson(&x, &y).map_err(value_err)
}

#[pyfunction]
#[pyo3(signature = (
    seed,
    num_classes=6,
    feature_dim=128,
    samples_per_class=100,
    num_unknown=400,
    known_norm=8.0,
    unknown_norm=3.0,
    angular_noise=0.2,
    norm_noise=0.5,
))]
#[allow(clippy::too_many_arguments)]
fn synth_run(
    seed: u64,
    num_classes: usize,
    feature_dim: usize,
    samples_per_class: usize,
    num_unknown: usize,
    known_norm: f64,
    unknown_norm: f64,
    angular_noise: f64,
    norm_noise: f64,
) -> PyResult<PyRun> {
    let cfg = SynthConfig {
        num_classes,
        feature_dim,
        samples_per_class,
        num_unknown,
        known_norm,
        unknown_norm,
        angular_noise,
        norm_noise,
        seed,
    };
    generate_run(&cfg).map(|inner| PyRun { inner }).map_err(value_err)
}

/// Hardest of `samples` random known-class subsets of an attribute matrix CSV.
#[pyfunction]
fn attribute_splits(matrix_path: &str, num_known: usize, samples: u64, seed: u64) -> PyResult<String> {
    let m = parse_attribute_matrix(open(matrix_path)?).map_err(value_err)?;
    splits::search_attribute_splits(&m, num_known, samples, seed)
        .map(|s| split_json(&s))
        .map_err(value_err)
}

/// Hierarchy split; `scheme` is `cars` or `aircraft`.
#[pyfunction]
fn hierarchy_splits(table_path: &str, scheme: &str, known: Vec<String>) -> PyResult<String> {
    let scheme: HierarchyScheme = scheme.parse().map_err(value_err)?;
    let t = parse_hierarchy_table(open(table_path)?, scheme).map_err(value_err)?;
    splits::hierarchy_splits(&t, &known).map(|s| split_json(&s)).map_err(value_err)
}

#[pyfunction]
fn tree_splits(tree_path: &str, known: Vec<String>, num_easy: usize, num_hard: usize) -> PyResult<String> {
    let t = parse_semantic_tree(open(tree_path)?).map_err(value_err)?;
    splits::tree_splits(&t, &known, num_easy, num_hard)
        .map(|s| split_json(&s))
        .map_err(value_err)
}

/// Correlation and grouped statistics of a run-summary CSV, as JSON.
#[pyfunction]
#[pyo3(signature = (summaries_path, group_by="method"))]
fn correlate(summaries_path: &str, group_by: &str) -> PyResult<String> {
    let group_by: GroupField = group_by.parse().map_err(value_err)?;
    let rows = parse_summaries(open(summaries_path)?).map_err(value_err)?;
    analyze(&rows, group_by).map(|r| r.to_json()).map_err(value_err)
}

#[pymodule]
fn osrkit(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyRun>()?;
    m.add_function(wrap_pyfunction!(softmax, m)?)?;
    m.add_function(wrap_pyfunction!(auroc, m)?)?;
    m.add_function(wrap_pyfunction!(average_precision, m)?)?;
    m.add_function(wrap_pyfunction!(roc_curve, m)?)?;
    m.add_function(wrap_pyfunction!(openness, m)?)?;
    m.add_function(wrap_pyfunction!(pearson, m)?)?;
    m.add_function(wrap_pyfunction!(synth_run, m)?)?;
    m.add_function(wrap_pyfunction!(attribute_splits, m)?)?;
    m.add_function(wrap_pyfunction!(hierarchy_splits, m)?)?;
    m.add_function(wrap_pyfunction!(tree_splits, m)?)?;
    m.add_function(wrap_pyfunction!(correlate, m)?)?;
    Ok(())
}
