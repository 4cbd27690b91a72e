//! Python bindings. Structured reports cross the boundary as plain
//! dicts and lists (serialized through JSON); states are lists of complex
//! numbers, one per vortex.

use std::path::PathBuf;

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::Serialize;

use vc::hamiltonians::{Family, VortexState};
use vc::Error;
use vortex_chorus as vc;

create_exception!(_native, DomainError, PyValueError, "Invalid input or configuration.");
create_exception!(_native, NumericalError, PyRuntimeError, "A numerical method failed.");

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(msg) => PyOSError::new_err(msg),
        e if e.is_numerical() => NumericalError::new_err(e.to_string()),
        e => DomainError::new_err(e.to_string()),
    }
}

trait OrRaise<T> {
    fn or_raise(self) -> PyResult<T>;
}

impl<T> OrRaise<T> for vc::Result<T> {
    fn or_raise(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

/// Any serializable value as native Python objects.
fn to_python<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn from_python<T: serde::de::DeserializeOwned>(obj: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()?;
    serde_json::from_str(&text).map_err(|e| DomainError::new_err(e.to_string()))
}

fn state(z: Vec<Complex64>) -> VortexState {
    VortexState::new(z)
}

#[pyclass(name = "SystemSpec", frozen, from_py_object)]
#[derive(Clone)]
struct PySystemSpec {
    inner: vc::hamiltonians::SystemSpec,
}

#[pymethods]
impl PySystemSpec {
    #[staticmethod]
    fn euler(gamma: Vec<f64>) -> PyResult<Self> {
        Ok(PySystemSpec { inner: vc::hamiltonians::SystemSpec::euler(gamma).or_raise()? })
    }

    #[staticmethod]
    #[pyo3(signature = (gamma, mu = 1.0, lam = 1.0))]
    fn bec(gamma: Vec<f64>, mu: f64, lam: f64) -> PyResult<Self> {
        Ok(PySystemSpec { inner: vc::hamiltonians::SystemSpec::bec(gamma, mu, lam).or_raise()? })
    }

    #[staticmethod]
    fn nls(gamma: Vec<f64>) -> PyResult<Self> {
        Ok(PySystemSpec { inner: vc::hamiltonians::SystemSpec::nls(gamma).or_raise()? })
    }

    /// `n` unit vorticities; `mu` and `lam` only matter for "bec".
    #[staticmethod]
    #[pyo3(signature = (family, n, mu = 1.0, lam = 1.0))]
    fn identical(family: &str, n: usize, mu: f64, lam: f64) -> PyResult<Self> {
        let family: Family = family.parse().or_raise()?;
        Ok(PySystemSpec { inner: vc::hamiltonians::SystemSpec::identical(family, n, mu, lam).or_raise()? })
    }

    #[getter]
    fn family(&self) -> &'static str {
        match self.inner.family {
            Family::Euler => "euler",
            Family::Bec => "bec",
            Family::Nls => "nls",
        }
    }

    #[getter]
    fn gamma(&self) -> Vec<f64> {
        self.inner.gamma.clone()
    }

    #[getter]
    fn mu(&self) -> f64 {
        self.inner.mu
    }

    #[getter]
    fn lam(&self) -> f64 {
        self.inner.lambda
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    fn __repr__(&self) -> String {
        format!(
            "SystemSpec(family={:?}, gamma={:?}, mu={}, lam={})",
            self.family(),
            self.inner.gamma,
            self.inner.mu,
            self.inner.lambda
        )
    }
}

#[pyclass(name = "Trajectory", frozen)]
struct PyTrajectory {
    inner: vc::integrate::Trajectory,
}

#[pymethods]
impl PyTrajectory {
    #[getter]
    fn times(&self) -> Vec<f64> {
        self.inner.times.clone()
    }

    /// One list of complex positions per stored time.
    #[getter]
    fn states(&self) -> Vec<Vec<Complex64>> {
        self.inner.states.iter().map(|s| s.points().to_vec()).collect()
    }

    #[getter]
    fn energy(&self) -> Vec<f64> {
        self.inner.integrals.iter().map(|f| f.h).collect()
    }

    #[getter]
    fn inertia(&self) -> Vec<f64> {
        self.inner.integrals.iter().map(|f| f.i).collect()
    }

    fn drift<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_python(py, &self.inner.drift())
    }

    /// Writes the trajectory as "csv" or "json".
    #[pyo3(signature = (path, format = "csv"))]
    fn export(&self, path: PathBuf, format: &str) -> PyResult<()> {
        let format = match format {
            "csv" => vc::cli::Format::Csv,
            "json" => vc::cli::Format::Json,
            other => return Err(DomainError::new_err(format!("unknown format {other:?}"))),
        };
        vc::cli::export_trajectory(&self.inner, &path, format).or_raise()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

#[pyclass(name = "SphereMap", frozen)]
struct PySphereMap {
    inner: vc::spheres::SphereMap,
}

#[pymethods]
impl PySphereMap {
    /// The explicit sphere for `n` particles into "cpn1" or "cpn2".
    #[new]
    fn new(n: usize, target: &str) -> PyResult<Self> {
        let target: vc::spheres::Target = target.parse().or_raise()?;
        Ok(PySphereMap { inner: vc::spheres::SphereMap::new(n, target).or_raise()? })
    }

    #[getter]
    fn endpoints(&self) -> (Vec<Complex64>, Vec<Complex64>) {
        (self.inner.a.coords().to_vec(), self.inner.b.coords().to_vec())
    }

    #[getter]
    fn moebius_scale(&self) -> Complex64 {
        self.inner.moebius_scale
    }

    /// Unit representative of `u(z)`; `None` means infinity.
    #[pyo3(signature = (z = None))]
    fn evaluate(&self, z: Option<Complex64>) -> Vec<Complex64> {
        let z = z.map_or(vc::spheres::ExtendedComplex::Infinity, vc::spheres::ExtendedComplex::Finite);
        vc::spheres::evaluate_sphere(&self.inner, z).coords().to_vec()
    }

    fn equivariance_defect(&self, points: Vec<Complex64>) -> f64 {
        let pts: Vec<_> = points.into_iter().map(vc::spheres::ExtendedComplex::Finite).collect();
        vc::spheres::equivariance_defect(&self.inner, &pts)
    }

    /// Pulled-back area of "disc" or "full".
    #[pyo3(signature = (region = "full", quad_tol = vc::spheres::DEFAULT_QUAD_TOL))]
    fn fs_area(&self, py: Python<'_>, region: &str, quad_tol: f64) -> PyResult<f64> {
        let region = match region {
            "disc" => vc::spheres::Region::UnitDisc,
            "full" => vc::spheres::Region::Full,
            other => return Err(DomainError::new_err(format!("unknown region {other:?}"))),
        };
        py.detach(|| vc::spheres::fs_area(&self.inner, region, quad_tol)).or_raise()
    }

    #[pyo3(signature = (disc_area = vc::spheres::DEFAULT_DISC_AREA, quad_tol = vc::spheres::DEFAULT_QUAD_TOL))]
    fn normalized(&self, py: Python<'_>, disc_area: f64, quad_tol: f64) -> PyResult<Self> {
        let inner =
            py.detach(|| vc::spheres::normalize_scale(&self.inner, disc_area, quad_tol)).or_raise()?;
        Ok(PySphereMap { inner })
    }

    /// `(chore_defect, fs_diameter)` of the loop `t -> u(radius e^(it))`.
    fn loop_diagnostics(&self, radius: f64, m: usize) -> PyResult<(f64, f64)> {
        let lp = vc::spheres::loop_at_radius(&self.inner, radius, m).or_raise()?;
        Ok((vc::choreography::chore_defect(&lp).or_raise()?, vc::choreography::fs_diameter(&lp).or_raise()?))
    }
}

#[pyfunction]
fn energy(spec: &PySystemSpec, z: Vec<Complex64>) -> PyResult<f64> {
    vc::hamiltonians::energy(&spec.inner, &state(z)).or_raise()
}

/// Velocity of each vortex.
#[pyfunction]
fn vector_field(spec: &PySystemSpec, z: Vec<Complex64>) -> PyResult<Vec<Complex64>> {
    let v = vc::hamiltonians::vector_field(&spec.inner, &state(z)).or_raise()?;
    Ok(v.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect())
}

#[pyfunction]
fn first_integrals<'py>(
    py: Python<'py>,
    spec: &PySystemSpec,
    z: Vec<Complex64>,
) -> PyResult<Bound<'py, PyAny>> {
    to_python(py, &vc::hamiltonians::first_integrals(&spec.inner, &state(z)).or_raise()?)
}

#[pyfunction]
#[pyo3(signature = (spec, z, t_end, tol = 1e-10))]
fn flow(
    py: Python<'_>,
    spec: &PySystemSpec,
    z: Vec<Complex64>,
    t_end: f64,
    tol: f64,
) -> PyResult<PyTrajectory> {
    let inner = py.detach(|| vc::integrate::flow(&spec.inner, &state(z), t_end, tol)).or_raise()?;
    Ok(PyTrajectory { inner })
}

#[pyfunction]
#[pyo3(signature = (spec, z, t, tol = 1e-10))]
fn flow_map(
    py: Python<'_>,
    spec: &PySystemSpec,
    z: Vec<Complex64>,
    t: f64,
    tol: f64,
) -> PyResult<Vec<Complex64>> {
    let end = py.detach(|| vc::integrate::flow_map(&spec.inner, &state(z), t, tol)).or_raise()?;
    Ok(end.into_points())
}

/// Relative equilibrium near `z` on the level `I = fix_i`, as a dict with
/// `z`, `omega`, `center`, `residual` and `period`.
#[pyfunction]
fn find_relative_equilibrium<'py>(
    py: Python<'py>,
    spec: &PySystemSpec,
    z: Vec<Complex64>,
    fix_i: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let re = vc::integrate::find_relative_equilibrium(&spec.inner, &state(z), fix_i).or_raise()?;
    let d = PyDict::new(py);
    d.set_item("z", re.z.points().to_vec())?;
    d.set_item("omega", re.omega)?;
    d.set_item("center", re.center)?;
    d.set_item("residual", re.residual)?;
    d.set_item("period", re.period())?;
    Ok(d.into_any())
}

#[pyfunction]
fn hopf_project(z: Vec<Complex64>) -> PyResult<Vec<Complex64>> {
    Ok(vc::projective::hopf_project(&z).or_raise()?.coords().to_vec())
}

#[pyfunction]
fn fs_distance(a: Vec<Complex64>, b: Vec<Complex64>) -> PyResult<f64> {
    let a = vc::projective::ProjectivePoint::new(a).or_raise()?;
    let b = vc::projective::ProjectivePoint::new(b).or_raise()?;
    vc::projective::fs_distance(&a, &b).or_raise()
}

/// Discrete Fourier frame coordinates of `z` (or back, with `inverse`).
#[pyfunction]
#[pyo3(signature = (z, inverse = false))]
fn lim_transform(z: Vec<Complex64>, inverse: bool) -> PyResult<Vec<Complex64>> {
    let frame = vc::projective::LimFrame::new(z.len()).or_raise()?;
    let dir = if inverse { vc::projective::Direction::Inverse } else { vc::projective::Direction::Forward };
    vc::projective::lim_transform(&frame, &z, dir).or_raise()
}

#[pyfunction]
fn sigma1(p: Vec<Complex64>) -> PyResult<Vec<Complex64>> {
    let p = vc::projective::ProjectivePoint::new(p).or_raise()?;
    Ok(vc::projective::sigma1(&p).coords().to_vec())
}

#[pyfunction]
fn sigma2(q: Vec<Complex64>) -> PyResult<Vec<Complex64>> {
    let q = vc::projective::ProjectivePoint::new(q).or_raise()?;
    Ok(vc::projective::sigma2(&q).coords().to_vec())
}

/// Multi-start search. `config` takes the fields of the search
/// configuration (`i_level`, `n_starts`, `seed`, ...). Returns the list of
/// accepted orbits; with `reports=True`, a dict with per-start reports too.
#[pyfunction]
#[pyo3(signature = (spec, config = None, reports = false))]
fn search<'py>(
    py: Python<'py>,
    spec: &PySystemSpec,
    config: Option<&Bound<'py, PyDict>>,
    reports: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg: vc::search::SearchConfig = match config {
        Some(c) => from_python(c.as_any())?,
        None => Default::default(),
    };
    let out = py.detach(|| vc::search::search(&spec.inner, &cfg)).or_raise()?;
    if reports {
        to_python(py, &out)
    } else {
        to_python(py, &out.results)
    }
}

#[pyfunction]
#[pyo3(signature = (spec, levels, config = None))]
fn energy_sweep<'py>(
    py: Python<'py>,
    spec: &PySystemSpec,
    levels: Vec<f64>,
    config: Option<&Bound<'py, PyDict>>,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg: vc::search::SearchConfig = match config {
        Some(c) => from_python(c.as_any())?,
        None => Default::default(),
    };
    let out = py.detach(|| vc::search::energy_sweep(&spec.inner, &levels, &cfg)).or_raise()?;
    to_python(py, &out)
}

#[pyfunction]
fn polygon_trap_coefficient(alpha: f64, beta: f64, n: usize) -> f64 {
    vc::analysis::polygon_trap_coefficient(alpha, beta, n)
}

#[pyfunction]
#[pyo3(signature = (n, rho = 1.0, trials = 10_000, seed = 0))]
fn ngon_maximality_test<'py>(
    py: Python<'py>,
    n: usize,
    rho: f64,
    trials: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let r = py.detach(|| vc::analysis::ngon_maximality_test(n, rho, trials, seed)).or_raise()?;
    to_python(py, &r)
}

#[pyfunction]
#[pyo3(signature = (spec, i_level, n_starts = 200, seed = 0))]
fn shub_separation_scan<'py>(
    py: Python<'py>,
    spec: &PySystemSpec,
    i_level: f64,
    n_starts: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let r =
        py.detach(|| vc::analysis::shub_separation_scan(&spec.inner, i_level, n_starts, seed)).or_raise()?;
    to_python(py, &r)
}

#[pyfunction]
#[pyo3(signature = (spec, level, i_level, samples = 16, seed = 0))]
fn invariant_component_probe<'py>(
    py: Python<'py>,
    spec: &PySystemSpec,
    level: f64,
    i_level: f64,
    samples: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let r = py
        .detach(|| vc::analysis::invariant_component_probe(&spec.inner, level, i_level, samples, seed))
        .or_raise()?;
    to_python(py, &r)
}

/// Runs the command-line driver with the given arguments; returns the exit code.
#[pyfunction]
fn run_cli(args: Vec<String>) -> i32 {
    let argv = std::iter::once("vortex-chorus".to_string()).chain(args);
    vc::cli::run(argv, &mut std::io::stdout(), &mut std::io::stderr())
}

#[pymodule]
fn _native(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add("DomainError", py.get_type::<DomainError>())?;
    m.add("NumericalError", py.get_type::<NumericalError>())?;
    m.add_class::<PySystemSpec>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_class::<PySphereMap>()?;
    m.add_function(wrap_pyfunction!(energy, m)?)?;
    m.add_function(wrap_pyfunction!(vector_field, m)?)?;
    m.add_function(wrap_pyfunction!(first_integrals, m)?)?;
    m.add_function(wrap_pyfunction!(flow, m)?)?;
    m.add_function(wrap_pyfunction!(flow_map, m)?)?;
    m.add_function(wrap_pyfunction!(find_relative_equilibrium, m)?)?;
    m.add_function(wrap_pyfunction!(hopf_project, m)?)?;
    m.add_function(wrap_pyfunction!(fs_distance, m)?)?;
    m.add_function(wrap_pyfunction!(lim_transform, m)?)?;
    m.add_function(wrap_pyfunction!(sigma1, m)?)?;
    m.add_function(wrap_pyfunction!(sigma2, m)?)?;
    m.add_function(wrap_pyfunction!(search, m)?)?;
    m.add_function(wrap_pyfunction!(energy_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(polygon_trap_coefficient, m)?)?;
    m.add_function(wrap_pyfunction!(ngon_maximality_test, m)?)?;
    m.add_function(wrap_pyfunction!(shub_separation_scan, m)?)?;
    m.add_function(wrap_pyfunction!(invariant_component_probe, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    let names = [
        "DomainError",
        "NumericalError",
        "SystemSpec",
        "Trajectory",
        "SphereMap",
        "energy",
        "vector_field",
        "first_integrals",
        "flow",
        "flow_map",
        "find_relative_equilibrium",
        "hopf_project",
        "fs_distance",
        "lim_transform",
        "sigma1",
        "sigma2",
        "search",
        "energy_sweep",
        "polygon_trap_coefficient",
        "ngon_maximality_test",
        "shub_separation_scan",
        "invariant_component_probe",
        "run_cli",
    ];
    m.add("__all__", names.to_vec())?;
    Ok(())
}
