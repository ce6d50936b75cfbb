//! Python bindings. Structured results cross the boundary as JSON and come
//! back as plain dicts and lists.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyBytes;
use serde::de::DeserializeOwned;
use serde::Serialize;

use tsreason_core::analysis::{self, ScanParams};
use tsreason_core::metrics::{self, default_window};
use tsreason_core::synth::{self, DatasetConfig};
use tsreason_core::timerpo::{self, AdvantageConfig, SinkhornConfig, ToyEmbedder};
use tsreason_core::{expcot, render, AnomalyClass, AnomalyInterval, Error, LabeledInstance, TimeSeries};

fn err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } | Error::Record { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

/// Build a config from an optional dict of overrides on top of the defaults.
fn from_py<T: DeserializeOwned + Default>(py: Python<'_>, obj: Option<&Bound<'_, PyAny>>) -> PyResult<T> {
    match obj {
        None => Ok(T::default()),
        Some(o) => {
            let text: String = py.import("json")?.call_method1("dumps", (o,))?.extract()?;
            serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))
        }
    }
}

fn intervals(pairs: Vec<(usize, usize)>) -> Vec<AnomalyInterval> {
    pairs.into_iter().map(|(start, end)| AnomalyInterval { start, end }).collect()
}

fn pairs(ivs: &[AnomalyInterval]) -> Vec<(usize, usize)> {
    ivs.iter().map(|iv| (iv.start, iv.end)).collect()
}

/// A labeled series.
#[pyclass(name = "Instance", module = "tsreason", from_py_object)]
#[derive(Clone)]
struct PyInstance {
    inner: LabeledInstance,
}

#[pymethods]
impl PyInstance {
    #[new]
    #[pyo3(signature = (id, values, class_name, intervals, seed = 0))]
    fn new(id: String, values: Vec<f64>, class_name: &str, intervals: Vec<(usize, usize)>, seed: u64) -> PyResult<Self> {
        let class = AnomalyClass::parse_normalized(class_name)
            .ok_or_else(|| PyValueError::new_err(format!("unknown class {class_name:?}")))?;
        let series = TimeSeries::new(values).map_err(err)?;
        let inner = LabeledInstance::new(id, series, class, &self::intervals(intervals), seed).map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn id(&self) -> &str {
        &self.inner.id
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.series.values().to_vec()
    }

    #[getter]
    fn class_name(&self) -> &'static str {
        self.inner.class.name()
    }

    #[getter]
    fn intervals(&self) -> Vec<(usize, usize)> {
        pairs(&self.inner.intervals)
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Self { inner })
    }

    fn __repr__(&self) -> String {
        format!(
            "Instance(id={:?}, len={}, class={:?}, intervals={:?})",
            self.inner.id,
            self.inner.len(),
            self.inner.class.name(),
            pairs(&self.inner.intervals)
        )
    }
}

/// Generate a corpus. `config` takes the same keys as the `[gen]` table.
#[pyfunction]
#[pyo3(signature = (config = None))]
fn generate_dataset(py: Python<'_>, config: Option<&Bound<'_, PyAny>>) -> PyResult<Vec<PyInstance>> {
    let cfg: DatasetConfig = from_py(py, config)?;
    let data = py.detach(|| synth::generate_dataset(&cfg)).map_err(err)?;
    Ok(data.into_iter().map(|inner| PyInstance { inner }).collect())
}

/// Every probe statistic for a series, as a dict.
#[pyfunction]
#[pyo3(signature = (values, params = None))]
fn hierarchical_scan(py: Python<'_>, values: Vec<f64>, params: Option<&Bound<'_, PyAny>>) -> PyResult<Py<PyAny>> {
    let p: ScanParams = from_py(py, params)?;
    let series = TimeSeries::new(values).map_err(err)?;
    let report = py.detach(|| analysis::hierarchical_scan(&series, &p)).map_err(err)?;
    to_py(py, &report)
}

/// `(profile, nearest_neighbour_index)`.
#[pyfunction]
fn matrix_profile(py: Python<'_>, values: Vec<f64>, m: usize) -> PyResult<(Vec<f64>, Vec<usize>)> {
    let mp = py.detach(|| analysis::matrix_profile(&values, m)).map_err(err)?;
    Ok((mp.profile, mp.nn_index))
}

/// Expert trace for an instance, as a dict.
#[pyfunction]
#[pyo3(signature = (instance, params = None))]
fn generate_expcot(py: Python<'_>, instance: &PyInstance, params: Option<&Bound<'_, PyAny>>) -> PyResult<Py<PyAny>> {
    let p: ScanParams = from_py(py, params)?;
    let trace = py.detach(|| expcot::generate_expcot(&instance.inner, &p)).map_err(err)?;
    to_py(py, &trace)
}

/// Decompose a tagged response into think/answer/class parts.
#[pyfunction]
fn parse_response(py: Python<'_>, text: &str) -> PyResult<Py<PyAny>> {
    to_py(py, &metrics::parse_response(text))
}

/// `(precision, recall, f1)`; `window` defaults to `max(1, round(0.01·length))`.
#[pyfunction]
#[pyo3(signature = (pred, gt, length, window = None))]
fn affinity_scores(
    pred: Vec<(usize, usize)>,
    gt: Vec<(usize, usize)>,
    length: usize,
    window: Option<usize>,
) -> PyResult<(f64, f64, f64)> {
    let w = window.unwrap_or_else(|| default_window(length));
    let s = metrics::affinity_scores(&intervals(pred), &intervals(gt), length, w).map_err(err)?;
    Ok((s.precision, s.recall, s.f1))
}

/// Entropic transport between `u` and `v` under `cost`, as a dict.
#[pyfunction]
#[pyo3(signature = (cost, u, v, reg = 0.05, tol = 1e-6, max_iter = 1000))]
fn sinkhorn(
    py: Python<'_>,
    cost: Vec<Vec<f64>>,
    u: Vec<f64>,
    v: Vec<f64>,
    reg: f64,
    tol: f64,
    max_iter: usize,
) -> PyResult<Py<PyAny>> {
    let rows = cost.len();
    let cols = cost.first().map_or(0, Vec::len);
    if cost.iter().any(|r| r.len() != cols) {
        return Err(PyValueError::new_err("cost rows differ in length"));
    }
    let flat: Vec<f64> = cost.into_iter().flatten().collect();
    let c = ndarray::Array2::from_shape_vec((rows, cols), flat).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let cfg = SinkhornConfig { reg, tol, max_iter };
    let r = py.detach(|| timerpo::sinkhorn(&c, &u, &v, &cfg)).map_err(err)?;
    to_py(py, &r)
}

#[pyfunction]
#[pyo3(signature = (values, eps = 1e-8))]
fn group_normalize(values: Vec<f64>, eps: f64) -> PyResult<Vec<f64>> {
    timerpo::group_normalize(&values, eps).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (a_tsr, a_main, eps = 1e-8))]
fn orthogonalize(a_tsr: Vec<f64>, a_main: Vec<f64>, eps: f64) -> PyResult<Vec<f64>> {
    timerpo::orthogonalize(&a_tsr, &a_main, eps).map_err(err)
}

#[pyfunction]
fn final_advantage(a_main: Vec<f64>, a_perp: Vec<f64>, alpha: f64) -> PyResult<Vec<f64>> {
    timerpo::final_advantage(&a_main, &a_perp, alpha).map_err(err)
}

/// Group advantages for sampled responses against the instance's expert
/// trace, embedding whitespace tokens with the toy embedder.
#[pyfunction]
#[pyo3(signature = (responses, instance, config = None, embed_dim = 32))]
fn group_advantages(
    py: Python<'_>,
    responses: Vec<String>,
    instance: &PyInstance,
    config: Option<&Bound<'_, PyAny>>,
    embed_dim: usize,
) -> PyResult<Py<PyAny>> {
    let cfg: AdvantageConfig = from_py(py, config)?;
    let adv = py
        .detach(|| {
            let trace = expcot::generate_expcot(&instance.inner, &ScanParams::default())?;
            let toy = ToyEmbedder::new(embed_dim)?;
            let embed = |text: &str| {
                let mut tokens = timerpo::whitespace_tokens(text);
                if tokens.is_empty() {
                    tokens.push(String::new());
                }
                toy.embed(&tokens)
            };
            let expert = embed(&trace.flat_text)?;
            let parsed: Vec<_> = responses.iter().map(|r| metrics::parse_response(r)).collect();
            let embeddings = responses.iter().map(|r| embed(r)).collect::<tsreason_core::Result<Vec<_>>>()?;
            timerpo::compute_group_advantages(&parsed, &instance.inner, &expert, &embeddings, &cfg)
        })
        .map_err(err)?;
    to_py(py, &adv)
}

/// PNG bytes of the 805×124 line plot.
#[pyfunction]
fn render_png<'py>(py: Python<'py>, values: Vec<f64>) -> PyResult<Bound<'py, PyBytes>> {
    let bytes = render::render_png(&values).map_err(err)?;
    Ok(PyBytes::new(py, &bytes))
}

#[pymodule]
fn tsreason(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInstance>()?;
    m.add_function(wrap_pyfunction!(generate_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(hierarchical_scan, m)?)?;
    m.add_function(wrap_pyfunction!(matrix_profile, m)?)?;
    m.add_function(wrap_pyfunction!(generate_expcot, m)?)?;
    m.add_function(wrap_pyfunction!(parse_response, m)?)?;
    m.add_function(wrap_pyfunction!(affinity_scores, m)?)?;
    m.add_function(wrap_pyfunction!(sinkhorn, m)?)?;
    m.add_function(wrap_pyfunction!(group_normalize, m)?)?;
    m.add_function(wrap_pyfunction!(orthogonalize, m)?)?;
    m.add_function(wrap_pyfunction!(final_advantage, m)?)?;
    m.add_function(wrap_pyfunction!(group_advantages, m)?)?;
    m.add_function(wrap_pyfunction!(render_png, m)?)?;
    m.add("WIDTH", render::WIDTH)?;
    m.add("HEIGHT", render::HEIGHT)?;
    Ok(())
}
