//! Python module `quorum`.
//!
//! Positions are `(x_um, y_um)` tuples and environments are built in
//! micrometre units; everything else is SI. Invalid inputs raise
//! `ValueError`, quadrature failures raise `ArithmeticError`.

use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use quorum_core::channel::{self, AggregateMode, PointwiseMode};
use quorum_core::cooperation::CoopModel;
use quorum_core::params::{density_for_count, m_to_um, per_m2_to_per_um2, per_um2_to_per_m2, Point2, UM};
use quorum_core::popstats::{self, CoopProfile, ProbMode};
use quorum_core::simulator::{run_batch, SimConfig};
use quorum_core::Purpose;

fn to_py(e: quorum_core::Error) -> PyErr {
    use quorum_core::Error as E;
    match e {
        E::NoConvergence { .. } | E::CapExceeded { .. } => PyArithmeticError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn point(p: (f64, f64)) -> Point2 {
    Point2::from_um(p.0, p.1)
}

fn aggregate_mode(name: &str) -> Result<AggregateMode, String> {
    match name {
        "exact" => Ok(AggregateMode::Exact4D),
        "uca" => Ok(AggregateMode::Uca2D),
        "center" => Ok(AggregateMode::Center3D),
        "center-uca" => Ok(AggregateMode::CenterUcaClosed),
        _ => Err(format!("unknown aggregate mode '{name}'; expected exact, uca, center or center-uca")),
    }
}

fn kernel(name: &str) -> Result<PointwiseMode, String> {
    match name {
        "exact" => Ok(PointwiseMode::Exact),
        "uca" => Ok(PointwiseMode::Uca),
        _ => Err(format!("unknown kernel '{name}'; expected exact or uca")),
    }
}

/// Environment parameters. Without `count` or `density_per_um2` the
/// population holds 100 expected bacteria.
#[pyclass(frozen, skip_from_py_object, name = "EnvParams", module = "quorum")]
#[derive(Clone, Copy)]
struct PyEnv {
    inner: quorum_core::EnvParams,
}

#[pymethods]
impl PyEnv {
    #[new]
    #[pyo3(signature = (r1_um=50.0, count=None, density_per_um2=None, eta=1, k=10.0, q=1000.0, d=5.5e-10, r0_um=0.757))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        r1_um: f64,
        count: Option<f64>,
        density_per_um2: Option<f64>,
        eta: u32,
        k: f64,
        q: f64,
        d: f64,
        r0_um: f64,
    ) -> PyResult<Self> {
        let pop_radius = r1_um * UM;
        let density = match (count, density_per_um2) {
            (Some(_), Some(_)) => return Err(PyValueError::new_err("give either count or density_per_um2")),
            (_, Some(l)) => per_um2_to_per_m2(l),
            (c, None) => density_for_count(c.unwrap_or(100.0), pop_radius),
        };
        let inner = quorum_core::EnvParams {
            diffusion: d,
            degradation: k,
            emission_rate: q,
            rx_radius: r0_um * UM,
            pop_radius,
            density,
            threshold: eta,
        };
        inner.check(Purpose::Channel).map_err(to_py)?;
        Ok(PyEnv { inner })
    }

    #[getter]
    fn r1_um(&self) -> f64 {
        m_to_um(self.inner.pop_radius)
    }

    #[getter]
    fn r0_um(&self) -> f64 {
        m_to_um(self.inner.rx_radius)
    }

    #[getter]
    fn density_per_um2(&self) -> f64 {
        per_m2_to_per_um2(self.inner.density)
    }

    #[getter]
    fn count(&self) -> f64 {
        self.inner.expected_count()
    }

    #[getter]
    fn eta(&self) -> u32 {
        self.inner.threshold
    }

    #[getter]
    fn k(&self) -> f64 {
        self.inner.degradation
    }

    #[getter]
    fn q(&self) -> f64 {
        self.inner.emission_rate
    }

    #[getter]
    fn d(&self) -> f64 {
        self.inner.diffusion
    }

    fn __repr__(&self) -> String {
        format!(
            "EnvParams(r1_um={}, count={:.6}, eta={}, k={}, q={}, d={:e}, r0_um={})",
            self.r1_um(),
            self.count(),
            self.eta(),
            self.k(),
            self.q(),
            self.d(),
            self.r0_um()
        )
    }
}

/// Expected fraction of one impulse found in the receiver at `b` after `tau` s.
#[pyfunction]
fn impulse_response(b: (f64, f64), tau: f64, env: &PyEnv) -> PyResult<f64> {
    Ok(channel::impulse_response(point(b), tau, &env.inner).map_err(to_py)?.mean_count)
}

/// Steady-state count of the receiver's own emissions.
#[pyfunction]
fn continuous_self_response(env: &PyEnv) -> PyResult<f64> {
    Ok(channel::continuous_self_response(&env.inner).map_err(to_py)?.mean_count)
}

/// Steady-state count at `b` from a point source at the origin (UCA receiver).
#[pyfunction]
fn continuous_response_uca(b: (f64, f64), env: &PyEnv) -> PyResult<f64> {
    Ok(channel::continuous_response_uca(point(b), &env.inner).map_err(to_py)?.mean_count)
}

/// Steady-state count at `b` from the whole bacteria field.
#[pyfunction]
#[pyo3(signature = (b, env, mode="exact"))]
fn aggregate_response(py: Python<'_>, b: (f64, f64), env: &PyEnv, mode: &str) -> PyResult<f64> {
    let m = aggregate_mode(mode).map_err(PyValueError::new_err)?;
    let p = env.inner;
    py.detach(|| channel::aggregate_response(point(b), &p, m))
        .map(|r| r.mean_count)
        .map_err(to_py)
}

/// Count at `b` after emitting for `t` s.
#[pyfunction]
#[pyo3(signature = (b, t, env, include_self=true))]
fn aggregate_response_at(py: Python<'_>, b: (f64, f64), t: f64, env: &PyEnv, include_self: bool) -> PyResult<f64> {
    let p = env.inner;
    py.detach(|| channel::aggregate_response_at(point(b), t, &p, include_self))
        .map(|r| r.mean_count)
        .map_err(to_py)
}

/// Cooperating probabilities at `x` for η = 1..eta_max.
#[pyfunction]
#[pyo3(signature = (x, env, eta_max, kernel="exact"))]
fn coop_prob_exact(py: Python<'_>, x: (f64, f64), env: &PyEnv, eta_max: u32, kernel: &str) -> PyResult<Vec<f64>> {
    let k = self::kernel(kernel).map_err(PyValueError::new_err)?;
    let p = env.inner;
    py.detach(|| CoopModel::new(&p, k)?.prob_exact_all(point(x).norm(), eta_max))
        .map_err(to_py)
}

/// Poisson approximation of the cooperating probability at `x` for threshold `eta`.
#[pyfunction]
fn coop_prob_approx(x: (f64, f64), env: &PyEnv, eta: u32) -> PyResult<f64> {
    let m = CoopModel::new(&env.inner, PointwiseMode::Uca).map_err(to_py)?;
    m.prob_approx(point(x).norm(), eta).map_err(to_py)
}

fn prob_mode(exact: bool) -> ProbMode {
    if exact {
        ProbMode::EXACT
    } else {
        ProbMode::APPROX
    }
}

/// Mean number of cooperators for η = 1..eta_max.
#[pyfunction]
#[pyo3(signature = (env, eta_max, exact=true))]
fn mean_cooperators(py: Python<'_>, env: &PyEnv, eta_max: u32, exact: bool) -> PyResult<Vec<f64>> {
    let p = env.inner;
    py.detach(|| CoopProfile::build(&p, prob_mode(exact), eta_max)?.mean_cooperators_all())
        .map_err(to_py)
}

/// Raw moment E{Z^n} of a Poisson number of cooperators with the given mean.
#[pyfunction]
fn moment_from_mean(n: usize, mean: f64) -> PyResult<f64> {
    popstats::moment_from_mean(n, mean).map_err(to_py)
}

/// Expected pairs of a bacterium and its nth nearest neighbour both
/// cooperating, for η = 1..eta_max.
#[pyfunction]
fn pair_coop_count(py: Python<'_>, n: u32, env: &PyEnv, eta_max: u32) -> PyResult<Vec<f64>> {
    let p = env.inner;
    py.detach(|| CoopProfile::build(&p, ProbMode::EXACT, eta_max)?.pair_coop_count_all(n))
        .map_err(to_py)
}

/// `(eta, mean, variance, ci_low, ci_high)` of Z at one threshold.
type EtaRow = (u32, f64, f64, f64, f64);

/// Particle simulation. Returns `(eta, mean, variance, ci_low, ci_high)` of
/// the number of cooperators for η = 1..eta_max.
#[pyfunction]
#[pyo3(signature = (env, eta_max, realizations=1000, seed=1, sample_time=1.0, bacteria_diffusion=0.0))]
fn simulate(
    py: Python<'_>,
    env: &PyEnv,
    eta_max: u32,
    realizations: u64,
    seed: u64,
    sample_time: f64,
    bacteria_diffusion: f64,
) -> PyResult<Vec<EtaRow>> {
    let mut cfg = SimConfig::new(env.inner)
        .with_realizations(realizations)
        .with_seed(seed)
        .with_times(sample_time);
    cfg.bacteria_diffusion = bacteria_diffusion;
    let batch = py.detach(|| run_batch(&cfg)).map_err(to_py)?;
    Ok((1..=eta_max)
        .map(|eta| {
            let z = batch.summary(eta).z;
            (eta, z.mean, z.variance, z.ci_low, z.ci_high)
        })
        .collect())
}

#[pymodule]
fn quorum(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyEnv>()?;
    m.add_function(wrap_pyfunction!(impulse_response, m)?)?;
    m.add_function(wrap_pyfunction!(continuous_self_response, m)?)?;
    m.add_function(wrap_pyfunction!(continuous_response_uca, m)?)?;
    m.add_function(wrap_pyfunction!(aggregate_response, m)?)?;
    m.add_function(wrap_pyfunction!(aggregate_response_at, m)?)?;
    m.add_function(wrap_pyfunction!(coop_prob_exact, m)?)?;
    m.add_function(wrap_pyfunction!(coop_prob_approx, m)?)?;
    m.add_function(wrap_pyfunction!(mean_cooperators, m)?)?;
    m.add_function(wrap_pyfunction!(moment_from_mean, m)?)?;
    m.add_function(wrap_pyfunction!(pair_coop_count, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
