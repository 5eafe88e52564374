//! Python module `pylangevin`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use langevin_cert::certificate::{self, ModelParams, RhoK, VillaniInput};
use langevin_cert::dynamics::{self, SamplerConfig, SimConfig};
use langevin_cert::harness::{self, WindowPolicy};
use langevin_cert::lyapunov::{self, LyapunovWeight};
use langevin_cert::{Error, PhasePoint, SingularParams};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Argument(_) | Error::Domain(_) | Error::Config(_) | Error::Capability(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn params(gamma: f64, temperature: f64, n: usize, k: usize) -> PyResult<ModelParams> {
    ModelParams::new(gamma, temperature, n, k).map_err(py_err)
}

fn points(raw: Vec<(Vec<f64>, Vec<f64>)>) -> PyResult<Vec<PhasePoint>> {
    raw.into_iter().map(|(x, v)| PhasePoint::new(x, v).map_err(py_err)).collect()
}

/// A potential `U` from one of the three families.
#[pyclass(module = "pylangevin", frozen, skip_from_py_object)]
#[derive(Clone)]
struct Potential {
    inner: langevin_cert::PotentialModel,
}

#[pymethods]
impl Potential {
    #[staticmethod]
    fn single_well(dim: usize) -> PyResult<Self> {
        Ok(Self { inner: langevin_cert::PotentialModel::single_well(dim).map_err(py_err)? })
    }

    #[staticmethod]
    fn double_well(dim: usize) -> PyResult<Self> {
        Ok(Self { inner: langevin_cert::PotentialModel::double_well(dim).map_err(py_err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (n, k, a_coef=1.0, b_coef=1.0, a=2, b=6.0, ordered=None))]
    fn singular_pair(
        n: usize,
        k: usize,
        a_coef: f64,
        b_coef: f64,
        a: u32,
        b: f64,
        ordered: Option<bool>,
    ) -> PyResult<Self> {
        let p = SingularParams { n, k, a_coef, b_coef, a, b, ordered: ordered.unwrap_or(k == 1) };
        Ok(Self { inner: langevin_cert::PotentialModel::singular_pair(p).map_err(py_err)? })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, x: Vec<f64>) -> PyResult<f64> {
        self.inner.value(&x).map_err(py_err)
    }

    fn gradient(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.gradient(&x).map_err(py_err)
    }

    fn hessian_vec(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.hessian_vec(&x, &y).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("Potential({:?})", self.inner.family())
    }
}

/// The general certificate: every constant of the rate chain.
#[pyclass(module = "pylangevin", frozen)]
struct Certificate {
    inner: langevin_cert::Certificate,
    model: langevin_cert::PotentialModel,
}

#[pymethods]
impl Certificate {
    #[getter]
    fn sigma(&self) -> f64 {
        self.inner.sigma
    }
    #[getter]
    fn zeta_sq(&self) -> f64 {
        self.inner.zeta_sq
    }
    #[getter]
    fn r1(&self) -> f64 {
        self.inner.r1
    }
    #[getter]
    fn r2(&self) -> f64 {
        self.inner.r2
    }
    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }
    #[getter]
    fn beta(&self) -> f64 {
        self.inner.beta
    }
    #[getter]
    fn lambda0(&self) -> f64 {
        self.inner.lambda0
    }
    #[getter]
    fn lambda_(&self) -> f64 {
        self.inner.lambda
    }

    fn contains(&self, x: Vec<f64>, v: Vec<f64>) -> bool {
        self.inner.contains(&self.model, &x, &v)
    }

    /// Sorted-key JSON document.
    fn to_json(&self) -> String {
        harness::report::to_json_string(&self.inner.to_json())
    }

    /// `(violations, min_relative_margin)` of the drift inequality at `points`,
    /// given as `(x, v)` pairs.
    fn drift_check(&self, points_xv: Vec<(Vec<f64>, Vec<f64>)>) -> PyResult<(usize, f64)> {
        let w = LyapunovWeight::new(&self.model, &self.inner).map_err(py_err)?;
        let rep = lyapunov::drift_check(&w, &points(points_xv)?);
        Ok((rep.violations, rep.min_relative_margin))
    }

    fn __repr__(&self) -> String {
        format!("Certificate(sigma={:e})", self.inner.sigma)
    }
}

#[pyfunction]
fn friction_constant(gamma: f64) -> PyResult<f64> {
    certificate::friction_constant(gamma).map_err(py_err)
}

/// Growth constants as a dict.
#[pyfunction]
#[pyo3(signature = (n, k, a_coef, b_coef, a, b, temperature))]
fn growth_constants_singular(
    n: usize,
    k: usize,
    a_coef: f64,
    b_coef: f64,
    a: u32,
    b: f64,
    temperature: f64,
) -> PyResult<std::collections::BTreeMap<&'static str, f64>> {
    let g = certificate::growth_constants_singular(n, k, a_coef, b_coef, a, b, temperature).map_err(py_err)?;
    Ok([
        ("kappa2", g.kappa2),
        ("c0", g.c0),
        ("d0", g.d0),
        ("c_inf", g.c_inf),
        ("d_inf", g.d_inf),
        ("eta0", g.eta0),
        ("eta_inf", g.eta_inf),
    ]
    .into_iter()
    .collect())
}

/// General certificate with the default growth constants of `potential`.
#[pyfunction]
#[pyo3(signature = (potential, gamma, temperature, n, k, rho_k))]
fn certify(potential: &Potential, gamma: f64, temperature: f64, n: usize, k: usize, rho_k: f64) -> PyResult<Certificate> {
    let mp = params(gamma, temperature, n, k)?;
    let gc = certificate::default_growth_constants(&potential.inner, &mp).map_err(py_err)?;
    let inner = certificate::build_certificate(&potential.inner, &gc, &mp, RhoK::user(rho_k)).map_err(py_err)?;
    Ok(Certificate { inner, model: potential.inner.clone() })
}

/// Bounded-Hessian certificate; returns `(zeta_sq, sigma)`.
#[pyfunction]
#[pyo3(signature = (gamma, temperature, dim, m, rho))]
fn villani_certificate(gamma: f64, temperature: f64, dim: usize, m: f64, rho: f64) -> PyResult<(f64, f64)> {
    let mp = params(gamma, temperature, 1, dim)?;
    let c = certificate::villani_certificate(&mp, VillaniInput::M(m), rho).map_err(py_err)?;
    Ok((c.zeta_sq, c.sigma))
}

/// `n` draws from `mu`, as `(x, v)` pairs.
#[pyfunction]
#[pyo3(signature = (potential, gamma, temperature, n, seed=0))]
fn sample_invariant(
    potential: &Potential,
    gamma: f64,
    temperature: f64,
    n: usize,
    seed: u64,
) -> PyResult<Vec<(Vec<f64>, Vec<f64>)>> {
    let d = potential.inner.dim();
    let mp = dynamics::raw_params(gamma, temperature, d);
    let cfg = SamplerConfig { seed, ..Default::default() };
    let pts = dynamics::sample_invariant(&potential.inner, &mp, &cfg, n).map_err(py_err)?;
    Ok(pts.into_iter().map(|p| (p.x, p.v)).collect())
}

/// Stationary autocovariance of `x_1`: rows `(t, C, stderr)`.
#[pyfunction]
#[pyo3(signature = (potential, gamma, temperature, ensemble_size, dt, t_max, record_interval=0.1, seed=0))]
#[allow(clippy::too_many_arguments)]
fn stationary_autocovariance(
    potential: &Potential,
    gamma: f64,
    temperature: f64,
    ensemble_size: usize,
    dt: f64,
    t_max: f64,
    record_interval: f64,
    seed: u64,
) -> PyResult<Vec<(f64, f64, f64)>> {
    let m = &potential.inner;
    let mp = dynamics::raw_params(gamma, temperature, m.dim());
    let starts = dynamics::sample_invariant(m, &mp, &SamplerConfig { seed, ..Default::default() }, ensemble_size)
        .map_err(py_err)?;
    let cfg = SimConfig { dt, t_max, ensemble_size, seed, record_interval, ..Default::default() };
    let trajs = dynamics::simulate_ensemble(m, &mp, &cfg, &starts).map_err(py_err)?;
    dynamics::check_invalid_fraction(&trajs).map_err(py_err)?;
    let acf = dynamics::ensemble_autocorrelation(&trajs, &|p: &PhasePoint| p.x[0], 20).map_err(py_err)?;
    Ok(acf.into_iter().map(|a| (a.t, a.c, a.stderr)).collect())
}

/// Fitted decay rate `(rate, stderr)` of rows `(t, C, stderr)` with the automatic window.
#[pyfunction]
fn estimate_decay_rate(rows: Vec<(f64, f64, f64)>, gamma: f64) -> PyResult<(f64, f64)> {
    let acf: Vec<_> = rows.into_iter().map(|(t, c, stderr)| dynamics::AcfPoint { t, c, stderr }).collect();
    let r = harness::estimate_decay_rate("x_1", &acf, WindowPolicy::Auto { gamma }).map_err(py_err)?;
    Ok((r.rate, r.stderr))
}

#[pymodule]
fn pylangevin(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Potential>()?;
    m.add_class::<Certificate>()?;
    m.add_function(wrap_pyfunction!(friction_constant, m)?)?;
    m.add_function(wrap_pyfunction!(growth_constants_singular, m)?)?;
    m.add_function(wrap_pyfunction!(certify, m)?)?;
    m.add_function(wrap_pyfunction!(villani_certificate, m)?)?;
    m.add_function(wrap_pyfunction!(sample_invariant, m)?)?;
    m.add_function(wrap_pyfunction!(stationary_autocovariance, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_decay_rate, m)?)?;
    Ok(())
}
