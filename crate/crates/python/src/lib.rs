//! Python bindings: scenarios and verdicts, curves, the spectral oracles and
//! the closed-form barriers.

// pyo3 0.22 macro expansion trips this on every `PyResult` function.
#![allow(clippy::useless_conversion)]

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Arc;

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use fissure::barriers;
use fissure::geometry::{self, Curve as CoreCurve};
use fissure::harness::{self, Outcome, ReportFormat};
use fissure::potential::DecayProfile;
use fissure::solver;
use fissure::spectral::{self, ConstantsSource, DivergenceRule, EigenDomain, FunctionalKind};
use fissure::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        Error::Numerical { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn json_err(e: serde_json::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn profile(family: &str, amplitude: f64, exponent: Option<f64>) -> PyResult<DecayProfile> {
    match family {
        "inverse-square" => DecayProfile::inverse_square(amplitude),
        "power" => DecayProfile::power(
            amplitude,
            exponent.ok_or_else(|| PyValueError::new_err("power family needs an exponent"))?,
        ),
        "log" => DecayProfile::log(amplitude),
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown profile family `{other}`"
            )))
        }
    }
    .map_err(to_py)
}

/// A scenario file: curve, potential, experiment and decision rules.
#[pyclass(module = "fissure_py")]
#[derive(Clone)]
pub struct Scenario {
    inner: harness::Scenario,
}

#[pymethods]
impl Scenario {
    #[staticmethod]
    pub fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: harness::Scenario::load(&path).map_err(to_py)?,
        })
    }

    #[staticmethod]
    pub fn from_toml(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: harness::Scenario::from_toml(text, "<python>").map_err(to_py)?,
        })
    }

    /// Names of the scenarios shipped with the library.
    #[staticmethod]
    pub fn shipped() -> Vec<String> {
        harness::SHIPPED_SCENARIOS
            .iter()
            .map(|s| s.to_string())
            .collect()
    }

    /// Load one of the shipped scenarios by file name.
    #[staticmethod]
    pub fn load_shipped(name: &str) -> PyResult<Self> {
        Self::load(harness::scenario_dir().join(name))
    }

    #[getter]
    pub fn name(&self) -> String {
        self.inner.name.clone()
    }

    #[getter]
    pub fn expected(&self) -> &'static str {
        self.inner.expected.label()
    }

    #[getter]
    pub fn p(&self) -> f64 {
        self.inner.p
    }

    pub fn to_toml(&self) -> PyResult<String> {
        self.inner.to_toml().map_err(to_py)
    }

    /// Run the scenario and judge it. Releases the GIL while solving.
    pub fn run(&self, py: Python<'_>) -> PyResult<Verdict> {
        let s = self.inner.clone();
        let (inner, _) = py
            .allow_threads(move || harness::run_scenario(&s))
            .map_err(to_py)?;
        Ok(Verdict { inner })
    }

    pub fn __repr__(&self) -> String {
        format!(
            "Scenario({:?}, expected={:?})",
            self.inner.name,
            self.inner.expected.label()
        )
    }
}

/// Outcome of a scenario run with the evidence it was derived from.
#[pyclass(module = "fissure_py")]
#[derive(Clone)]
pub struct Verdict {
    inner: harness::Verdict,
}

#[pymethods]
impl Verdict {
    #[staticmethod]
    pub fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: serde_json::from_str(text).map_err(json_err)?,
        })
    }

    pub fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(json_err)
    }

    #[getter]
    pub fn scenario(&self) -> String {
        self.inner.scenario.clone()
    }

    #[getter]
    pub fn outcome(&self) -> &'static str {
        self.inner.outcome.label()
    }

    #[getter]
    pub fn expected(&self) -> &'static str {
        self.inner.expected.label()
    }

    #[getter]
    pub fn wall_time(&self) -> f64 {
        self.inner.wall_time
    }

    pub fn matches(&self) -> bool {
        self.inner.matches()
    }

    /// Outcome recomputed from the stored evidence alone.
    pub fn rederive(&self) -> &'static str {
        harness::derive_outcome(&self.inner.evidence, &self.inner.rules).label()
    }

    /// `(k, probe maximum)` for each rung of the k ladder.
    pub fn ladder(&self) -> Vec<(f64, f64)> {
        self.inner
            .evidence
            .ladder
            .iter()
            .map(|p| (p.k, p.probe_max))
            .collect()
    }

    /// `(alpha, eps, ln rescaled value, lower-bound margin)` per rescaled run.
    pub fn rescaled(&self) -> Vec<(f64, f64, f64, f64)> {
        self.inner
            .evidence
            .rescaled
            .iter()
            .map(|p| (p.alpha, p.eps, p.ln_value, p.lower_bound_margin))
            .collect()
    }

    /// `(alpha, [(eps, A(eps))], verdict)` per blow-up trace.
    pub fn traces(&self) -> Vec<(f64, Vec<(f64, f64)>, String)> {
        self.inner
            .evidence
            .traces
            .iter()
            .map(|t| {
                let pts = t.entries.iter().map(|e| (e.eps, e.value)).collect();
                (t.alpha, pts, format!("{:?}", t.verdict).to_lowercase())
            })
            .collect()
    }

    /// `(eps, delta, measured half-width)` of a tunnel run.
    pub fn half_widths(&self) -> Vec<(f64, f64, f64)> {
        self.inner
            .evidence
            .tunnel
            .iter()
            .flat_map(|t| t.half_widths.iter().map(|h| (h.eps, h.delta, h.measured)))
            .collect()
    }

    pub fn __repr__(&self) -> String {
        format!(
            "Verdict({:?}, outcome={:?}, expected={:?})",
            self.inner.scenario,
            self.inner.outcome.label(),
            self.inner.expected.label()
        )
    }
}

/// A sampled space-time curve.
#[pyclass(module = "fissure_py")]
#[derive(Clone)]
pub struct Curve {
    inner: Arc<CoreCurve>,
}

#[pymethods]
impl Curve {
    #[staticmethod]
    #[pyo3(signature = (velocity, horizon, samples = 401))]
    pub fn straight(velocity: Vec<f64>, horizon: f64, samples: usize) -> PyResult<Self> {
        Ok(Self {
            inner: Arc::new(CoreCurve::straight(&velocity, horizon, samples).map_err(to_py)?),
        })
    }

    /// Whitespace table with columns `tau t x...`.
    #[staticmethod]
    pub fn from_table(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: Arc::new(CoreCurve::from_table(text, None, None).map_err(to_py)?),
        })
    }

    pub fn to_table(&self) -> String {
        self.inner.to_table()
    }

    #[getter]
    pub fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    pub fn horizon(&self) -> f64 {
        self.inner.horizon()
    }

    pub fn position_at(&self, t: f64) -> PyResult<Vec<f64>> {
        self.inner.position_at(t).map_err(to_py)
    }

    /// Parabolic distance to the part of the curve at or before time `t`.
    pub fn distance(&self, x: Vec<f64>, t: f64) -> PyResult<f64> {
        Ok(geometry::parabolic_distance(&x, t, &self.inner)
            .map_err(to_py)?
            .value())
    }

    /// Monotonicity labels of the time profile along the curve.
    pub fn segments(&self) -> PyResult<Vec<String>> {
        let cls =
            geometry::classify_segments(&self.inner, geometry::default_sign_tolerance(&self.inner))
                .map_err(to_py)?;
        Ok(cls
            .labels()
            .iter()
            .map(|l| format!("{l:?}").to_lowercase())
            .collect())
    }
}

/// Dirichlet ground-state eigenvalue of `interval` or `ball<dim>` with n cells.
#[pyfunction]
pub fn ground_state(domain: &str, n: usize) -> PyResult<f64> {
    let domain = match domain {
        "interval" => EigenDomain::Interval,
        "disk" => EigenDomain::Ball { dim: 2 },
        other => match other.strip_prefix("ball").map(str::parse) {
            Some(Ok(dim)) => EigenDomain::Ball { dim },
            _ => return Err(PyValueError::new_err(format!("unknown domain `{other}`"))),
        },
    };
    Ok(spectral::dirichlet_ground_state(domain, n)
        .map_err(to_py)?
        .lambda)
}

/// `A(eps)` along a straight curve, with its verdict under the default rule.
#[pyfunction]
#[pyo3(signature = (p, alpha, dim, lambda0, family, amplitude, eps, speed = 0.0, exponent = None))]
#[allow(clippy::too_many_arguments)]
pub fn blowup_trace(
    p: f64,
    alpha: f64,
    dim: usize,
    lambda0: f64,
    family: &str,
    amplitude: f64,
    eps: Vec<f64>,
    speed: f64,
    exponent: Option<f64>,
) -> PyResult<(Vec<f64>, String)> {
    let mut velocity = vec![0.0; dim.max(1)];
    velocity[0] = speed;
    let curve = CoreCurve::straight(&velocity, alpha.max(1.0), 401).map_err(to_py)?;
    let trace = spectral::blowup_functional(
        FunctionalKind::A,
        p,
        alpha,
        dim,
        ConstantsSource::Curve {
            lambda0,
            sigma_tau: 0.0,
            curve: &curve,
        },
        profile(family, amplitude, exponent)?,
        &eps,
        DivergenceRule::default(),
    )
    .map_err(to_py)?;
    Ok((
        trace.values(),
        format!("{:?}", trace.verdict).to_lowercase(),
    ))
}

#[pyfunction]
pub fn heat_kernel(x: Vec<f64>, y: Vec<f64>, t: f64) -> PyResult<f64> {
    barriers::heat_kernel(&x, &y, t).map_err(to_py)
}

/// Largest solution of `y' = -beta y^q` blowing up at `t0`.
#[pyfunction]
#[pyo3(signature = (beta, q, t, t0 = 0.0))]
pub fn ode_maximal(beta: f64, q: f64, t: f64, t0: f64) -> PyResult<f64> {
    barriers::ode_maximal(beta, q, t, t0).map_err(to_py)
}

#[pyfunction]
pub fn half_width_threshold(eps: f64, ell: f64, q_minus_one: f64) -> f64 {
    solver::half_width_threshold(eps, ell, q_minus_one)
}

/// Barrier residual checks on the unit disk; one dict per check.
#[pyfunction]
#[pyo3(signature = (cells, q = 2.0, beta = 1.0, drift = 1.0))]
pub fn verify_barriers(
    py: Python<'_>,
    cells: Vec<usize>,
    q: f64,
    beta: f64,
    drift: f64,
) -> PyResult<Vec<HashMap<String, PyObject>>> {
    let reports = py
        .allow_threads(|| harness::barrier_suite(&cells, q, beta, drift))
        .map_err(to_py)?;
    Ok(reports
        .into_iter()
        .map(|r| {
            HashMap::from([
                ("name".to_string(), r.name.clone().into_py(py)),
                ("grid".to_string(), r.grid.clone().into_py(py)),
                ("min_residual".to_string(), r.min_residual.into_py(py)),
                ("violations".to_string(), r.violations.into_py(py)),
                ("checked".to_string(), r.checked.into_py(py)),
                ("constant".to_string(), r.constant.into_py(py)),
                ("passed".to_string(), r.passed().into_py(py)),
            ])
        })
        .collect())
}

/// Write CSV tables and a gnuplot script for `verdicts` into `dir`.
#[pyfunction]
pub fn emit_report(verdicts: Vec<Verdict>, dir: PathBuf) -> PyResult<Vec<PathBuf>> {
    let vs: Vec<harness::Verdict> = verdicts.into_iter().map(|v| v.inner).collect();
    harness::emit_report(&vs, &dir, &[ReportFormat::Csv, ReportFormat::PlotScript]).map_err(to_py)
}

/// Run a sweep file, appending to (and resuming from) the log at `log`.
#[pyfunction]
#[pyo3(signature = (path, log, workers = 1))]
pub fn sweep(
    py: Python<'_>,
    path: PathBuf,
    log: PathBuf,
    workers: usize,
) -> PyResult<Vec<Verdict>> {
    let result = py
        .allow_threads(|| {
            let (spec, base) = harness::SweepFile::load(&path)?;
            let points = harness::sweep_points(&base, &spec.axes, spec.budget)?;
            harness::sweep(&points, &log, workers, None)
        })
        .map_err(to_py)?;
    Ok(result
        .verdicts
        .into_iter()
        .map(|inner| Verdict { inner })
        .collect())
}

/// Outcome labels a scenario may expect.
#[pyfunction]
pub fn outcomes() -> Vec<&'static str> {
    [
        Outcome::Propagation,
        Outcome::Localization,
        Outcome::NonPropagationSegment,
        Outcome::BoxBounded,
        Outcome::LinePropagation,
        Outcome::Unknown,
    ]
    .iter()
    .map(|o| o.label())
    .collect()
}

#[pymodule]
pub fn fissure_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Scenario>()?;
    m.add_class::<Verdict>()?;
    m.add_class::<Curve>()?;
    m.add_function(wrap_pyfunction!(ground_state, m)?)?;
    m.add_function(wrap_pyfunction!(blowup_trace, m)?)?;
    m.add_function(wrap_pyfunction!(heat_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(ode_maximal, m)?)?;
    m.add_function(wrap_pyfunction!(half_width_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(verify_barriers, m)?)?;
    m.add_function(wrap_pyfunction!(emit_report, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(outcomes, m)?)?;
    Ok(())
}
