//! Python bindings. Reports cross the boundary as the same canonical JSON the
//! CLI writes, decoded into plain dicts and lists on the Python side.

use std::path::PathBuf;

use ainfty::classes::ClassId;
use ainfty::cz;
use ainfty::dyadic::{self, GMode, IntegerInterval, PrefixSums, Transform};
use ainfty::error::Error;
use ainfty::harness::{self, EdgeId, HarnessConfig};
use ainfty::oracle::{self, OracleTarget};
use ainfty::orbit::{self, SampleFormat, TransformationSpec, WeightSpec};
use ainfty::report::{self, AnalysisParams, AnalysisReport, GModeChoice};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(io) => PyIOError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn to_py<T: Serialize + ?Sized>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = String::from_utf8(ainfty::canonical::to_json_bytes(value)).expect("JSON is UTF-8");
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn window(sample: &orbit::OrbitSample, start: usize, len: Option<usize>) -> PyResult<IntegerInterval> {
    let n = sample.len();
    let len = len.unwrap_or(n.saturating_sub(start));
    let w = IntegerInterval::new(start, len).map_err(py_err)?;
    w.check_bounds(n).map_err(py_err)?;
    Ok(w)
}

/// Paired positive sequences `omega` and `g` of equal length.
#[pyclass(name = "OrbitSample", module = "pyainfty", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PySample {
    inner: orbit::OrbitSample,
}

#[pymethods]
impl PySample {
    #[new]
    #[pyo3(signature = (omega, g=None))]
    fn new(omega: Vec<f64>, g: Option<Vec<f64>>) -> PyResult<Self> {
        let inner = match g {
            Some(g) => orbit::OrbitSample::new(omega, g),
            None => orbit::OrbitSample::unweighted(omega),
        }
        .map_err(py_err)?;
        Ok(PySample { inner })
    }

    /// Samples `omega` and `g` along the rotation orbit of `x0` by `alpha`.
    #[staticmethod]
    #[pyo3(signature = (omega_spec, n, alpha=0.618_033_988_749_894_8, g_spec="const:1", x0=0.0))]
    fn generate(omega_spec: &str, n: usize, alpha: f64, g_spec: &str, x0: f64) -> PyResult<Self> {
        let omega: WeightSpec = omega_spec.parse().map_err(py_err)?;
        let g: WeightSpec = g_spec.parse().map_err(py_err)?;
        let inner = orbit::sample_orbit(&TransformationSpec::rotation(alpha), &omega, &g, x0, n).map_err(py_err)?;
        Ok(PySample { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let format = SampleFormat::from_path(&path);
        Ok(PySample {
            inner: orbit::OrbitSample::load(&path, format).map_err(py_err)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        let format = SampleFormat::from_path(&path);
        self.inner.save(&path, format).map_err(py_err)
    }

    #[getter]
    fn omega(&self) -> Vec<f64> {
        self.inner.omega().to_vec()
    }

    #[getter]
    fn g(&self) -> Vec<f64> {
        self.inner.g().to_vec()
    }

    #[getter]
    fn warnings(&self) -> Vec<String> {
        self.inner.warnings().to_vec()
    }

    fn dual(&self) -> Self {
        PySample { inner: self.inner.dual() }
    }

    fn normalize_g(&self) -> Self {
        PySample {
            inner: self.inner.normalize_g(),
        }
    }

    fn to_json(&self) -> String {
        String::from_utf8(self.inner.to_json_bytes()).expect("JSON is UTF-8")
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("OrbitSample(len={})", self.inner.len())
    }
}

/// Left and right children of `[start, start + len)` as `(start, len)` pairs.
#[pyfunction]
fn split_interval(start: usize, len: usize) -> PyResult<((usize, usize), (usize, usize))> {
    let (l, r) = dyadic::split_interval(IntegerInterval::new(start, len).map_err(py_err)?).map_err(py_err)?;
    Ok(((l.start, l.len), (r.start, r.len)))
}

/// `g`-weighted average of `omega` over a window.
#[pyfunction]
#[pyo3(signature = (sample, start=0, len=None))]
fn weighted_average(sample: &PySample, start: usize, len: Option<usize>) -> PyResult<f64> {
    let w = window(&sample.inner, start, len)?;
    let ps = PrefixSums::build(&sample.inner, &[Transform::Identity], GMode::Weighted).map_err(py_err)?;
    Ok(ps.average(w))
}

/// Class constants and curves, keyed by class name.
#[pyfunction]
#[pyo3(signature = (
    sample, classes="all", p=2.0, q=2.0, beta=0.5, eps=0.5,
    windows="all", kmin=1, kmax=None, g_mode="auto", s_grid=None, gamma_grid=None, mass_grid=None,
))]
#[allow(clippy::too_many_arguments)]
fn analyze(
    py: Python<'_>,
    sample: &PySample,
    classes: &str,
    p: f64,
    q: f64,
    beta: f64,
    eps: f64,
    windows: &str,
    kmin: usize,
    kmax: Option<usize>,
    g_mode: &str,
    s_grid: Option<Vec<f64>>,
    gamma_grid: Option<Vec<f64>>,
    mass_grid: Option<Vec<f64>>,
) -> PyResult<Py<PyAny>> {
    let which = ClassId::parse_list(classes).map_err(py_err)?;
    let d = AnalysisParams::default();
    let params = AnalysisParams {
        p,
        q,
        beta,
        eps,
        s_grid: s_grid.unwrap_or(d.s_grid),
        gamma_grid: gamma_grid.unwrap_or(d.gamma_grid),
        mass_grid: mass_grid.unwrap_or(d.mass_grid),
        windows: windows.parse().map_err(py_err)?,
        k_min: kmin,
        k_max: kmax,
        g_mode: match g_mode {
            "auto" => GModeChoice::Auto,
            "weighted" => GModeChoice::Weighted,
            "unweighted" => GModeChoice::Unweighted,
            other => return Err(PyValueError::new_err(format!("unknown g_mode {other:?}"))),
        },
    };
    let result = py.detach(|| report::analyze(&sample.inner, &params, &which)).map_err(py_err)?;
    let mut rep = AnalysisReport::new("analyze", serde_json::to_value(&params).expect("params serialize"), &sample.inner);
    rep.classes = result;
    to_py(py, &rep)
}

/// Dyadic Calderon-Zygmund selection at threshold `lam`.
#[pyfunction]
#[pyo3(signature = (sample, lam, start=0, len=None))]
fn decompose(py: Python<'_>, sample: &PySample, lam: f64, start: usize, len: Option<usize>) -> PyResult<Py<PyAny>> {
    let w = window(&sample.inner, start, len)?;
    let ps = PrefixSums::build(&sample.inner, &[Transform::Identity], GMode::Weighted).map_err(py_err)?;
    let sel = cz::decompose(&ps, w, lam).map_err(py_err)?;
    to_py(py, &sel)
}

/// Edge verdicts of the implication graph on one sample.
#[pyfunction]
#[pyo3(signature = (sample, edges="all", p=2.0, q=2.0, beta=0.5))]
fn verify(py: Python<'_>, sample: &PySample, edges: &str, p: f64, q: f64, beta: f64) -> PyResult<Py<PyAny>> {
    let edges = EdgeId::parse_list(edges).map_err(py_err)?;
    let config = HarnessConfig {
        p,
        q,
        beta,
        ..HarnessConfig::default()
    };
    let verdicts = py
        .detach(|| harness::verify_sample(&sample.inner, &config, &edges))
        .map_err(py_err)?;
    to_py(py, &verdicts)
}

/// Exhaustive enumeration on a window of at most 14 points.
#[pyfunction]
#[pyo3(signature = (sample, target, start=0, len=None, beta=0.5))]
fn brute_force_oracle(
    py: Python<'_>,
    sample: &PySample,
    target: &str,
    start: usize,
    len: Option<usize>,
    beta: f64,
) -> PyResult<Py<PyAny>> {
    let target: OracleTarget = target.parse().map_err(py_err)?;
    let w = window(&sample.inner, start, len)?;
    let ps = PrefixSums::build(&sample.inner, &[Transform::Identity], GMode::Weighted).map_err(py_err)?;
    let result = oracle::brute_force_oracle(&ps, w, target, beta).map_err(py_err)?;
    to_py(py, &result)
}

/// Both sides of the duality identity, as `(p1, p2)`.
#[pyfunction]
fn duality_check(sample: &PySample, alpha: f64, beta: f64) -> PyResult<(bool, bool)> {
    let out = oracle::duality_check(&sample.inner, alpha, beta).map_err(py_err)?;
    Ok((out.p1, out.p2))
}

#[pymodule]
fn pyainfty(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PySample>()?;
    m.add_function(wrap_pyfunction!(split_interval, m)?)?;
    m.add_function(wrap_pyfunction!(weighted_average, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(decompose, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(duality_check, m)?)?;
    Ok(())
}
