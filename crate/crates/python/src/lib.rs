//! Python bindings: grids, Green solver, scenarios, synthesis, inversion and
//! the convergence constants.

use std::sync::Arc;

use kerr_born::convergence;
use kerr_born::discretization::{self, DomainKind, SourceSpec};
use kerr_born::experiments::{self, DiskMedium, InversionSetup};
use kerr_born::forward::{self, FixedPointOptions, Susceptibility};
use kerr_born::inverse::{self, UnknownSelection};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyIOError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

create_exception!(kerr_born_py, NumericalError, PyException, "Iteration failed to converge.");

fn err(e: kerr_born::Error) -> PyErr {
    match e {
        kerr_born::Error::Io(io) => PyIOError::new_err(io.to_string()),
        e if e.is_numerical() => NumericalError::new_err(e.to_string()),
        e => PyValueError::new_err(e.to_string()),
    }
}

fn to_py_json<'py, T: Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn parse_kind(kind: &str) -> PyResult<DomainKind> {
    match kind {
        "interval" => Ok(DomainKind::Interval),
        "disk" => Ok(DomainKind::Disk),
        other => Err(PyValueError::new_err(format!("unknown domain {other:?}, expected 'interval' or 'disk'"))),
    }
}

#[pyclass(frozen, module = "kerr_born_py")]
struct Grid {
    inner: Arc<discretization::Grid>,
}

#[pymethods]
impl Grid {
    #[new]
    fn new(kind: &str, resolution: usize) -> PyResult<Self> {
        let g = discretization::build_grid(parse_kind(kind)?, resolution).map_err(err)?;
        Ok(Self { inner: Arc::new(g) })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Grid({:?}, resolution={}, nodes={})", self.inner.kind(), self.inner.resolution(), self.inner.len())
    }

    #[getter]
    fn coords(&self) -> Vec<(f64, f64)> {
        self.inner.coords().iter().map(|p| (p[0], p[1])).collect()
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.weights().to_vec()
    }

    #[getter]
    fn boundary(&self) -> Vec<usize> {
        self.inner.boundary().to_vec()
    }

    #[getter]
    fn interior(&self) -> Vec<usize> {
        self.inner.interior().to_vec()
    }

    #[getter]
    fn scheme(&self) -> &'static str {
        self.inner.scheme()
    }
}

#[pyclass(frozen, module = "kerr_born_py")]
struct GreenSolver {
    inner: discretization::GreenSolver,
}

#[pymethods]
impl GreenSolver {
    #[new]
    fn new(grid: &Grid, k: f64) -> PyResult<Self> {
        let inner = discretization::GreenSolver::new(grid.inner.clone(), k).map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn k(&self) -> f64 {
        self.inner.k()
    }

    /// `-k^2 int G(x, y) v(y) dy` at every node.
    fn apply_green(&self, v: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.apply_green(&v).map_err(err)
    }

    fn mu(&self) -> f64 {
        self.inner.estimate_mu().value
    }

    /// Background field of a point source at the boundary node nearest `location`.
    #[pyo3(signature = (location, scale = 1.0))]
    fn background(&self, location: (f64, f64), scale: f64) -> PyResult<Vec<f64>> {
        let src = SourceSpec {
            location: [location.0, location.1],
            scale,
            wavenumber: self.inner.k(),
        };
        Ok(self.inner.background(&src).map_err(err)?.values)
    }

    /// Picard iteration for the Kerr problem; returns `(u, report)`.
    #[pyo3(signature = (alpha, beta, u0, tol = 1e-12, max_iter = 1000, gamma = 1.0))]
    fn fixed_point_solve<'py>(
        &self,
        py: Python<'py>,
        alpha: Vec<f64>,
        beta: Vec<f64>,
        u0: Vec<f64>,
        tol: f64,
        max_iter: usize,
        gamma: f64,
    ) -> PyResult<(Vec<f64>, Bound<'py, PyAny>)> {
        let zeta = Susceptibility::new(self.inner.grid(), alpha, beta).map_err(err)?;
        let opts = FixedPointOptions { tol, max_iter, gamma };
        let (u, rep) = forward::fixed_point_solve(&self.inner, &zeta, &u0, &opts).map_err(err)?;
        Ok((u, to_py_json(py, &rep)?))
    }

    /// Born partial sums up to `order`; returns `(U_order, term norms)`.
    #[pyo3(signature = (alpha, beta, u0, order))]
    fn born_series<'py>(
        &self,
        py: Python<'py>,
        alpha: Vec<f64>,
        beta: Vec<f64>,
        u0: Vec<f64>,
        order: usize,
    ) -> PyResult<(Vec<f64>, Bound<'py, PyAny>)> {
        let zeta = Susceptibility::new(self.inner.grid(), alpha, beta).map_err(err)?;
        if u0.len() != self.inner.grid().len() {
            return Err(PyValueError::new_err("u0 length does not match the grid"));
        }
        let ctx = forward::TermContext {
            solver: &self.inner,
            u0: &u0,
        };
        let (u, norms) =
            forward::born_partial_sum(ctx, &zeta, order, None, &mut forward::TermCache::new(true)).map_err(err)?;
        Ok((u, to_py_json(py, &norms)?))
    }
}

#[pyclass(module = "kerr_born_py")]
struct Scenario {
    inner: experiments::Scenario,
}

#[pymethods]
impl Scenario {
    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: experiments::Scenario::from_toml_str(text).map_err(err)?,
        })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: experiments::Scenario::load(std::path::Path::new(path)).map_err(err)?,
        })
    }

    /// The 72-source interval preset.
    #[staticmethod]
    fn interval_preset() -> Self {
        Self {
            inner: experiments::scenario_1d(),
        }
    }

    /// Disk preset; `medium` is `"disk"` or `"gaussian"`, `unknowns` one of
    /// `"alpha-only"`, `"beta-only"`, `"both"`.
    #[staticmethod]
    #[pyo3(signature = (contrast, medium = "disk", unknowns = "alpha-only"))]
    fn disk_preset(contrast: f64, medium: &str, unknowns: &str) -> PyResult<Self> {
        let m: DiskMedium = medium.parse().map_err(err)?;
        let u: UnknownSelection = unknowns.parse().map_err(err)?;
        Ok(Self {
            inner: experiments::scenario_2d(contrast, m, u).map_err(err)?,
        })
    }

    fn to_toml(&self) -> PyResult<String> {
        self.inner.to_toml_string().map_err(err)
    }

    fn validate(&self) -> PyResult<()> {
        self.inner.validate().map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Scenario({:?}, sources={})", self.inner.name, self.inner.sources.count)
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    #[getter]
    fn order(&self) -> usize {
        self.inner.order
    }

    #[setter]
    fn set_order(&mut self, v: usize) {
        self.inner.order = v;
    }

    #[getter]
    fn tau(&self) -> f64 {
        self.inner.tau
    }

    #[setter]
    fn set_tau(&mut self, v: f64) {
        self.inner.tau = v;
    }

    #[getter]
    fn noise(&self) -> f64 {
        self.inner.noise
    }

    #[setter]
    fn set_noise(&mut self, v: f64) {
        self.inner.noise = v;
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[setter]
    fn set_seed(&mut self, v: u64) {
        self.inner.seed = v;
    }

    #[getter]
    fn contrast(&self) -> f64 {
        self.inner.contrast
    }

    #[setter]
    fn set_contrast(&mut self, v: f64) {
        self.inner.contrast = v;
    }

    /// Multiplies the Gaussian amplitude (or disk/interval/hat value) by `factor`.
    fn scale_medium(&mut self, factor: f64) {
        use experiments::Medium;
        match &mut self.inner.medium {
            Medium::Zero => {}
            Medium::Gaussian { amplitude, .. } => *amplitude *= factor,
            Medium::Disk { value, .. } | Medium::Interval { value, .. } | Medium::Hat { value, .. } => {
                *value *= factor
            }
        }
    }
}

#[pyclass(frozen, module = "kerr_born_py")]
struct ScatteringData {
    inner: inverse::ScatteringData,
}

#[pymethods]
impl ScatteringData {
    #[staticmethod]
    fn from_csv(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: inverse::ScatteringData::read_csv(text.as_bytes()).map_err(err)?,
        })
    }

    fn to_csv(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        self.inner.write_csv(&mut buf).map_err(err)?;
        String::from_utf8(buf).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.inner.source_count(), self.inner.receiver_count())
    }

    /// Row-major values, one row per source.
    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    fn norm_rms(&self) -> f64 {
        self.inner.norm_l2()
    }
}

#[pyclass(frozen, module = "kerr_born_py")]
struct Reconstruction {
    #[pyo3(get)]
    alpha: Vec<f64>,
    #[pyo3(get)]
    beta: Vec<f64>,
    #[pyo3(get)]
    coords: Vec<(f64, f64)>,
    #[pyo3(get)]
    trajectory: Vec<f64>,
    #[pyo3(get)]
    first_term_norm: f64,
    #[pyo3(get)]
    radius: Option<f64>,
    #[pyo3(get)]
    radius_warning: bool,
    report: String,
}

#[pymethods]
impl Reconstruction {
    /// Diagnostics, errors and convergence constants as a dict.
    fn report<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        py.import("json")?.call_method1("loads", (self.report.as_str(),))
    }
}

#[pyfunction]
fn synthesize(py: Python<'_>, scenario: &Scenario) -> PyResult<ScatteringData> {
    let s = scenario.inner.clone();
    let (data, _) = py.detach(move || experiments::synthesize(&s)).map_err(err)?;
    Ok(ScatteringData { inner: data })
}

#[pyfunction]
#[pyo3(signature = (scenario, data, order = None))]
fn reconstruct(py: Python<'_>, scenario: &Scenario, data: &ScatteringData, order: Option<usize>) -> PyResult<Reconstruction> {
    let s = scenario.inner.clone();
    let d = data.inner.clone();
    py.detach(move || -> kerr_born::Result<Reconstruction> {
        let setup = InversionSetup::new(&s, &d)?;
        let rec = setup.reconstruct(&d, order.unwrap_or(s.order))?;
        let errors = experiments::evaluate(&s, &setup.param, &rec)?;
        let report = serde_json::json!({
            "diagnostics": rec.diagnostics,
            "errors": errors,
            "convergence": setup.convergence,
        });
        let grid = setup.grid.clone();
        Ok(Reconstruction {
            alpha: rec.zeta.alpha().to_vec(),
            beta: rec.zeta.beta().to_vec(),
            coords: grid.coords().iter().map(|p| (p[0], p[1])).collect(),
            trajectory: errors.trajectory.clone(),
            first_term_norm: rec.diagnostics.first_term_norm,
            radius: rec.diagnostics.radius,
            radius_warning: rec.diagnostics.radius_warning,
            report: report.to_string(),
        })
    })
    .map_err(err)
}

#[pyfunction]
fn nu_sequence(nu0: f64, order: usize) -> PyResult<Vec<f64>> {
    Ok(convergence::nu_sequence(nu0, order).map_err(err)?.values().to_vec())
}

#[pyfunction]
fn forward_radius(mu: f64, k: f64) -> PyResult<f64> {
    convergence::forward_radius(mu, k).map_err(err)
}

/// Returns `(r, C)`.
#[pyfunction]
fn inverse_radius(mu: f64, k: f64, nu: f64, pinv_norm: f64) -> PyResult<(f64, f64)> {
    convergence::inverse_radius(mu, k, nu, pinv_norm).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (mu, nu0, pinv_norm = None))]
fn convergence_report<'py>(py: Python<'py>, mu: f64, nu0: f64, pinv_norm: Option<f64>) -> PyResult<Bound<'py, PyAny>> {
    let r = experiments::convergence_report(mu, nu0, pinv_norm).map_err(err)?;
    to_py_json(py, &r)
}

#[pyfunction]
fn triples(n: usize) -> Vec<(usize, usize, usize)> {
    forward::triples(n)
}

#[pyfunction]
fn compositions(m: usize, n: usize) -> Vec<Vec<usize>> {
    inverse::compositions(m, n)
}

#[pymodule]
fn kerr_born_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("NumericalError", m.py().get_type::<NumericalError>())?;
    m.add_class::<Grid>()?;
    m.add_class::<GreenSolver>()?;
    m.add_class::<Scenario>()?;
    m.add_class::<ScatteringData>()?;
    m.add_class::<Reconstruction>()?;
    m.add_function(wrap_pyfunction!(synthesize, m)?)?;
    m.add_function(wrap_pyfunction!(reconstruct, m)?)?;
    m.add_function(wrap_pyfunction!(nu_sequence, m)?)?;
    m.add_function(wrap_pyfunction!(forward_radius, m)?)?;
    m.add_function(wrap_pyfunction!(inverse_radius, m)?)?;
    m.add_function(wrap_pyfunction!(convergence_report, m)?)?;
    m.add_function(wrap_pyfunction!(triples, m)?)?;
    m.add_function(wrap_pyfunction!(compositions, m)?)?;
    Ok(())
}
