//! Scenario files, verdicts, parameter sweeps and reports.
//!
//! A scenario is a TOML file naming a curve, a potential and one of three
//! experiments: the rescaled ball problem over an ε sequence, a k ladder of
//! `u_k` probed along the curve, or the line-degeneracy tunnel. Every number
//! the decision rules use is stored in the file; [`derive_outcome`] turns the
//! recorded evidence into an outcome without rerunning anything.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::barriers::{
    decayed_ode, ode_maximal, verify_supersolution, AbsorptionSpec, BarrierReport, DriftSpec,
    OperatorSpec, RadialBarrier, SpaceTimeSamples,
};
use crate::error::{Error, Result};
use crate::geometry::{classify_segments, default_sign_tolerance, Curve, CurveSpec, SegmentLabel};
use crate::mesh::Grid;
use crate::potential::{DecayProfile, PotentialSpec};
use crate::solver::{
    solve_rescaled, solve_uk, tunnel_run, DiffusionScheme, DiracStart, HalfWidth, RescaledConfig,
    RunResult, TunnelCase, TunnelConfig, UkConfig, DEFAULT_CEILING,
};
use crate::spectral::{
    blowup_functional, dirichlet_ground_state, BlowupTrace, ConstantsSource, DivergenceRule,
    EigenDomain, FunctionalKind, TraceVerdict,
};

/// Version of the decision rules written into every verdict.
pub const RULES_VERSION: u32 = 1;

const DEFAULT_TRACE_EPS: [f64; 3] = [0.2, 0.1, 0.05];
/// Radial cells of the ground state feeding analytic traces.
const ANALYTIC_EIGEN_CELLS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Propagation,
    Localization,
    NonPropagationSegment,
    BoxBounded,
    LinePropagation,
    /// Inconclusive evidence, or an exploratory scenario.
    Unknown,
}

impl Outcome {
    pub fn label(self) -> &'static str {
        match self {
            Outcome::Propagation => "propagation",
            Outcome::Localization => "localization",
            Outcome::NonPropagationSegment => "non-propagation-segment",
            Outcome::BoxBounded => "box-bounded",
            Outcome::LinePropagation => "line-propagation",
            Outcome::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GridSpec {
    Interval {
        lo: f64,
        hi: f64,
        n: usize,
    },
    Rectangle {
        x: (f64, f64, usize),
        y: (f64, f64, usize),
    },
    /// Unit ball with `2m - 1` nodes per axis.
    Ball {
        dim: usize,
        m: usize,
    },
    Tunnel {
        half_length: f64,
        n1: usize,
        m_perp: usize,
    },
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid> {
        match *self {
            GridSpec::Interval { lo, hi, n } => Grid::interval(lo, hi, n),
            GridSpec::Rectangle { x, y } => Grid::rectangle(x, y),
            GridSpec::Ball { dim, m } => Grid::ball(dim, m),
            GridSpec::Tunnel {
                half_length,
                n1,
                m_perp,
            } => Grid::tunnel(half_length, n1, m_perp),
        }
    }
}

/// Rescaled problem on the unit ball, run for every `(α, ε)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RescaledSpec {
    pub grid: GridSpec,
    pub eps: Vec<f64>,
    pub k: f64,
    pub tau0: f64,
    pub dt: f64,
    pub max_steps: usize,
    pub diffusion: DiffusionScheme,
}

/// k ladder of `u_k` probed along the curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderSpec {
    pub grid: GridSpec,
    pub k: Vec<f64>,
    pub horizon: f64,
    pub dt: f64,
    pub tau0: f64,
    pub start: DiracStart,
    /// Only curve samples with parameter at least this are probed.
    pub probe_from_tau: f64,
    #[serde(default = "default_ceiling")]
    pub ceiling: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TunnelSpec {
    /// Weight exponent of the split potential; absent for the subcritical case.
    #[serde(default)]
    pub gamma: Option<f64>,
    pub eps: Vec<f64>,
    pub half_length: f64,
    pub n1: usize,
    pub m_perp: usize,
    pub dt: f64,
    pub tau0: f64,
    pub k: f64,
    pub calibration_time: f64,
    pub safety: f64,
    pub start: DiracStart,
    /// Level defining the blow-up half-width of the certified floor.
    pub level: f64,
}

/// Finite criteria standing in for statements about infinite limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionRules {
    pub version: u32,
    pub divergence_threshold: f64,
    pub divergence_window: usize,
    /// Propagation needs the last rescaled value above this.
    pub growth_floor: f64,
    /// Localization needs every rescaled value below this.
    pub bounded_ceiling: f64,
    /// Relative tolerance of the lower-envelope conformance.
    pub lower_bound_tol: f64,
    /// Relative change between the two largest k allowed for a bounded ladder.
    pub stabilization: f64,
    /// Ratio between the two largest k that marks a divergent ladder.
    pub ladder_growth: f64,
    pub conformance_tol: f64,
    /// Relative band around the half-width threshold.
    pub half_width_tol: f64,
}

impl Default for DecisionRules {
    fn default() -> Self {
        let d = DivergenceRule::default();
        Self {
            version: RULES_VERSION,
            divergence_threshold: d.threshold,
            divergence_window: d.window,
            growth_floor: 1e6,
            bounded_ceiling: 1e2,
            lower_bound_tol: 1e-6,
            stabilization: 0.01,
            ladder_growth: 2.0,
            conformance_tol: 1e-8,
            half_width_tol: 0.2,
        }
    }
}

impl DecisionRules {
    fn divergence(&self) -> DivergenceRule {
        DivergenceRule {
            threshold: self.divergence_threshold,
            window: self.divergence_window,
        }
    }
}

fn default_true() -> bool {
    true
}

fn default_ceiling() -> f64 {
    DEFAULT_CEILING
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub expected: Outcome,
    /// Exploratory scenarios set this to false and stay out of regression.
    #[serde(default = "default_true")]
    pub regression: bool,
    pub p: f64,
    #[serde(default)]
    pub alpha: Vec<f64>,
    /// ε sequence of the analytic trace of scenarios without rescaled runs.
    #[serde(default)]
    pub trace_eps: Option<Vec<f64>>,
    #[serde(default)]
    pub curve: Option<CurveSpec>,
    pub potential: PotentialSpec,
    #[serde(default)]
    pub rescaled: Option<RescaledSpec>,
    #[serde(default)]
    pub ladder: Option<LadderSpec>,
    #[serde(default)]
    pub tunnel: Option<TunnelSpec>,
    pub rules: DecisionRules,
    /// Directory relative curve tables resolve against; set by [`Scenario::load`].
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl Scenario {
    pub fn from_toml(text: &str, origin: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| Error::Parse {
            origin: origin.into(),
            msg: e.to_string(),
        })?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut s = Self::from_toml(&text, &path.display().to_string())?;
        s.base_dir = path.parent().map(Path::to_path_buf);
        Ok(s)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse {
            origin: self.name.clone(),
            msg: e.to_string(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(Error::config("scenario needs a name"));
        }
        if !(self.p > 1.0) {
            return Err(Error::config(format!(
                "{}: p must exceed 1, got {}",
                self.name, self.p
            )));
        }
        let experiments = self.rescaled.is_some() as usize
            + (self.ladder.is_some() && self.rescaled.is_none()) as usize
            + self.tunnel.is_some() as usize;
        if experiments != 1 {
            return Err(Error::config(format!(
                "{}: exactly one of [rescaled] (optionally with [ladder]), [ladder] or [tunnel] is required",
                self.name
            )));
        }
        if self.tunnel.is_some() && self.rescaled.is_some() {
            return Err(Error::config(format!(
                "{}: [tunnel] cannot be combined with [rescaled]",
                self.name
            )));
        }
        if self.tunnel.is_none() && self.curve.is_none() {
            return Err(Error::config(format!("{}: [curve] is required", self.name)));
        }
        if let Some(r) = &self.rescaled {
            if self.alpha.is_empty() {
                return Err(Error::config(format!(
                    "{}: rescaled runs need at least one alpha",
                    self.name
                )));
            }
            if r.eps.is_empty() || r.eps.windows(2).any(|w| w[1] >= w[0]) {
                return Err(Error::config(format!(
                    "{}: eps must be nonempty and strictly decreasing",
                    self.name
                )));
            }
        }
        if let Some(l) = &self.ladder {
            if l.k.len() < 2 || l.k.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::config(format!(
                    "{}: k ladder needs at least two increasing masses",
                    self.name
                )));
            }
        }
        self.potential.profile()?;
        Ok(())
    }

    fn build_curve(&self) -> Result<Arc<Curve>> {
        let spec = self
            .curve
            .as_ref()
            .ok_or_else(|| Error::config(format!("{}: [curve] is required", self.name)))?;
        Ok(Arc::new(spec.build(self.base_dir.as_deref())?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescaledPoint {
    pub alpha: f64,
    pub eps: f64,
    pub ln_omega_centre: f64,
    /// `ln(ε^{-2/(p-1)} e^{ℓ(ε)/(p-1)} ω_ε(0, α/ε²))`.
    pub ln_value: f64,
    pub c1: f64,
    pub lambda0: f64,
    pub sigma_tau: f64,
    pub lower_bound_margin: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderPoint {
    pub k: f64,
    pub probe_max: f64,
    pub diverged: bool,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TunnelEvidence {
    pub gamma: Option<f64>,
    pub a: f64,
    pub c: f64,
    pub conformance_margin: f64,
    pub checked_levels: usize,
    pub half_widths: Vec<HalfWidth>,
    /// `ln` of the certified floor at `x_1 = 0` for each ε.
    pub ln_floor_centre: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    /// `A(ε)` trace for every α, in the order of the scenario's α list.
    #[serde(default)]
    pub traces: Vec<BlowupTrace>,
    #[serde(default)]
    pub rescaled: Vec<RescaledPoint>,
    #[serde(default)]
    pub ladder: Vec<LadderPoint>,
    #[serde(default)]
    pub segments: Vec<SegmentLabel>,
    #[serde(default)]
    pub box_witness: bool,
    #[serde(default)]
    pub tunnel: Option<TunnelEvidence>,
    #[serde(default)]
    pub barriers: Vec<BarrierReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub scenario: String,
    pub expected: Outcome,
    pub outcome: Outcome,
    pub regression: bool,
    pub rules: DecisionRules,
    /// Sweep coordinates (empty for a plain run).
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    pub evidence: Evidence,
    /// Excluded from every CSV so reports stay byte-identical across reruns.
    pub wall_time: f64,
}

impl Verdict {
    pub fn matches(&self) -> bool {
        self.outcome == self.expected
    }
}

/// Per-run probe series kept alongside a verdict for the report.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub run: RunResult,
}

/// Cache of rescaled runs. `ω_ε` does not depend on the decay profile, so
/// scenarios that differ only in `ℓ` share their runs.
#[derive(Default)]
pub struct RunCache {
    runs: Mutex<HashMap<String, RescaledPoint>>,
}

impl RunCache {
    pub fn new() -> Self {
        Self::default()
    }
}

fn rescaled_key(s: &Scenario, spec: &RescaledSpec, alpha: f64, eps: f64) -> Result<String> {
    let curve = serde_json::to_string(&s.curve).map_err(|e| Error::config(e.to_string()))?;
    let grid = serde_json::to_string(&spec.grid).map_err(|e| Error::config(e.to_string()))?;
    Ok(format!(
        "{curve}|{grid}|p={:e}|a={alpha:e}|e={eps:e}|k={:e}|t0={:e}|dt={:e}|n={}|{:?}",
        s.p, spec.k, spec.tau0, spec.dt, spec.max_steps, spec.diffusion
    ))
}

/// Run one scenario and judge it.
pub fn run_scenario(s: &Scenario) -> Result<(Verdict, Vec<Series>)> {
    run_scenario_cached(s, &RunCache::new())
}

pub fn run_scenario_cached(s: &Scenario, cache: &RunCache) -> Result<(Verdict, Vec<Series>)> {
    s.validate()?;
    let clock = Instant::now();
    let profile = s.potential.profile()?;
    let mut evidence = Evidence::default();
    let mut series = Vec::new();

    if let Some(spec) = &s.tunnel {
        evidence.tunnel = Some(run_tunnel(s, spec, &profile, &mut series)?);
    }
    if let Some(spec) = &s.rescaled {
        let curve = s.build_curve()?;
        let grid = Arc::new(spec.grid.build()?);
        for &alpha in &s.alpha {
            let mut sigma = 0.0f64;
            let mut lambda0 = f64::NAN;
            for &eps in &spec.eps {
                let key = rescaled_key(s, spec, alpha, eps)?;
                let cached = cache.runs.lock().unwrap().get(&key).cloned();
                let mut point = match cached {
                    Some(p) => p,
                    None => {
                        let cfg = RescaledConfig {
                            p: s.p,
                            alpha,
                            k: spec.k,
                            tau0: spec.tau0,
                            dt: spec.dt,
                            max_steps: spec.max_steps,
                            diffusion: spec.diffusion,
                        };
                        let r = solve_rescaled(eps, curve.clone(), grid.clone(), &cfg)?;
                        let p = RescaledPoint {
                            alpha,
                            eps,
                            ln_omega_centre: r.ln_omega_centre,
                            ln_value: f64::NAN,
                            c1: r.c1,
                            lambda0: r.constants.lambda0,
                            sigma_tau: r.constants.sigma_tau,
                            lower_bound_margin: r.lower_bound_margin,
                            steps: r.run.steps(),
                        };
                        series.push(Series {
                            label: format!("rescaled_a{alpha}_e{eps}"),
                            run: r.run,
                        });
                        cache.runs.lock().unwrap().insert(key, p.clone());
                        p
                    }
                };
                let q = s.p - 1.0;
                point.ln_value =
                    -2.0 / q * eps.ln() + profile.eval(eps)? / q + point.ln_omega_centre;
                sigma = sigma.max(point.sigma_tau);
                lambda0 = point.lambda0;
                evidence.rescaled.push(point);
            }
            let trace = blowup_functional(
                FunctionalKind::A,
                s.p,
                alpha,
                grid.dim(),
                ConstantsSource::Curve {
                    lambda0,
                    sigma_tau: sigma,
                    curve: &curve,
                },
                profile,
                &spec.eps,
                s.rules.divergence(),
            )?;
            evidence.traces.push(trace);
        }
    }
    if s.rescaled.is_none() && !s.alpha.is_empty() {
        let curve = s.build_curve()?;
        let dim = curve.dim();
        let lambda0 =
            dirichlet_ground_state(EigenDomain::Ball { dim }, ANALYTIC_EIGEN_CELLS)?.lambda;
        let eps = s
            .trace_eps
            .clone()
            .unwrap_or_else(|| DEFAULT_TRACE_EPS.to_vec());
        for &alpha in &s.alpha {
            evidence.traces.push(blowup_functional(
                FunctionalKind::A,
                s.p,
                alpha,
                dim,
                ConstantsSource::Curve {
                    lambda0,
                    sigma_tau: 0.0,
                    curve: &curve,
                },
                profile,
                &eps,
                s.rules.divergence(),
            )?);
        }
    }
    if let Some(spec) = &s.ladder {
        let curve = s.build_curve()?;
        let cls = classify_segments(&curve, default_sign_tolerance(&curve))?;
        evidence.segments = cls.labels();
        evidence.box_witness = cls.box_witness.is_some();
        let potential = Arc::new(s.potential.build(Some(curve.clone()))?);
        let grid = Arc::new(spec.grid.build()?);
        let cfg = UkConfig {
            tau0: spec.tau0,
            dt: spec.dt,
            ceiling: spec.ceiling,
            start: spec.start,
            ..Default::default()
        };
        let runs: Vec<Result<RunResult>> = spec
            .k
            .par_iter()
            .map(|&k| {
                solve_uk(
                    k,
                    curve.clone(),
                    potential.clone(),
                    s.p,
                    spec.horizon,
                    grid.clone(),
                    &cfg,
                )
            })
            .collect();
        for (&k, run) in spec.k.iter().zip(runs) {
            let run = run?;
            let probe_max = run
                .curve_hits
                .iter()
                .filter(|h| h.tau >= spec.probe_from_tau)
                .map(|h| h.value)
                .fold(f64::NEG_INFINITY, f64::max);
            evidence.ladder.push(LadderPoint {
                k,
                probe_max,
                diverged: run.diverged,
                steps: run.steps(),
            });
            series.push(Series {
                label: format!("ladder_k{k:e}"),
                run,
            });
        }
    }
    let outcome = derive_outcome(&evidence, &s.rules);
    Ok((
        Verdict {
            scenario: s.name.clone(),
            expected: s.expected,
            outcome,
            regression: s.regression,
            rules: s.rules,
            params: BTreeMap::new(),
            evidence,
            wall_time: clock.elapsed().as_secs_f64(),
        },
        series,
    ))
}

fn run_tunnel(
    s: &Scenario,
    spec: &TunnelSpec,
    profile: &DecayProfile,
    series: &mut Vec<Series>,
) -> Result<TunnelEvidence> {
    let case = match spec.gamma {
        Some(gamma) => TunnelCase::Supercritical { gamma },
        None => TunnelCase::Subcritical,
    };
    let cfg = TunnelConfig {
        p: s.p,
        case,
        half_length: spec.half_length,
        n1: spec.n1,
        m_perp: spec.m_perp,
        dt: spec.dt,
        tau0: spec.tau0,
        k: spec.k,
        calibration_time: spec.calibration_time,
        safety: spec.safety,
        start: spec.start,
    };
    let run = tunnel_run(&cfg)?;
    let mut half_widths = Vec::new();
    let mut ln_floor_centre = Vec::new();
    for &eps in &spec.eps {
        half_widths.push(run.half_width(eps, profile, spec.level)?);
        ln_floor_centre.push(run.ln_floor(0.0, eps, profile)?);
    }
    let ev = TunnelEvidence {
        gamma: spec.gamma,
        a: run.a,
        c: run.c,
        conformance_margin: run.conformance_margin,
        checked_levels: run.checked_levels,
        half_widths,
        ln_floor_centre,
    };
    series.push(Series {
        label: "tunnel".into(),
        run: run.run,
    });
    Ok(ev)
}

/// Ratio of the probe maxima of the two largest masses.
pub fn ladder_ratio(ladder: &[LadderPoint]) -> Option<f64> {
    let n = ladder.len();
    (n >= 2).then(|| ladder[n - 1].probe_max / ladder[n - 2].probe_max)
}

fn ladder_stable(ladder: &[LadderPoint], rules: &DecisionRules) -> bool {
    ladder_ratio(ladder).is_some_and(|r| r.is_finite() && (r - 1.0).abs() <= rules.stabilization)
        && ladder.iter().all(|p| !p.diverged)
}

fn ladder_divergent(ladder: &[LadderPoint], rules: &DecisionRules) -> bool {
    ladder.last().is_some_and(|p| p.diverged)
        || ladder_ratio(ladder).is_some_and(|r| r >= rules.ladder_growth)
}

/// Outcome implied by the evidence under `rules`; no solver calls.
pub fn derive_outcome(ev: &Evidence, rules: &DecisionRules) -> Outcome {
    if let Some(t) = &ev.tunnel {
        let conforms = t.conformance_margin >= -rules.conformance_tol && t.checked_levels > 0;
        let widths = !t.half_widths.is_empty()
            && t.half_widths
                .iter()
                .all(|h| (h.measured / h.delta - 1.0).abs() <= rules.half_width_tol);
        let growing = t.ln_floor_centre.windows(2).all(|w| w[1] > w[0]);
        return if conforms && widths && growing {
            Outcome::LinePropagation
        } else {
            Outcome::Unknown
        };
    }
    if !ev.rescaled.is_empty() {
        let mut all_prop = true;
        let mut all_loc = true;
        for trace in &ev.traces {
            let values: Vec<&RescaledPoint> = ev
                .rescaled
                .iter()
                .filter(|p| p.alpha == trace.alpha)
                .collect();
            let increasing = values.windows(2).all(|w| w[1].ln_value > w[0].ln_value);
            let above = values
                .last()
                .is_some_and(|p| p.ln_value > rules.growth_floor.ln());
            let conforms = values
                .iter()
                .all(|p| p.lower_bound_margin >= (-rules.lower_bound_tol).ln_1p());
            all_prop &=
                trace.verdict == TraceVerdict::Propagation && increasing && above && conforms;
            let below = values
                .iter()
                .all(|p| p.ln_value <= rules.bounded_ceiling.ln());
            all_loc &= trace.verdict == TraceVerdict::Bounded && below;
        }
        if !ev.ladder.is_empty() {
            all_loc &= ladder_stable(&ev.ladder, rules);
        }
        return if all_prop {
            Outcome::Propagation
        } else if all_loc {
            Outcome::Localization
        } else {
            Outcome::Unknown
        };
    }
    if !ev.ladder.is_empty() {
        if ladder_stable(&ev.ladder, rules) {
            return match ev.segments.last() {
                Some(SegmentLabel::Box) if ev.box_witness => Outcome::BoxBounded,
                Some(SegmentLabel::Decreasing) => Outcome::NonPropagationSegment,
                _ => Outcome::Localization,
            };
        }
        if ladder_divergent(&ev.ladder, rules) {
            return Outcome::Propagation;
        }
    }
    Outcome::Unknown
}

/// Outcome read off the analytic `A(ε)` traces alone.
pub fn outcome_from_traces(traces: &[BlowupTrace]) -> Outcome {
    if traces.is_empty() {
        Outcome::Unknown
    } else if traces
        .iter()
        .all(|t| t.verdict == TraceVerdict::Propagation)
    {
        Outcome::Propagation
    } else if traces.iter().all(|t| t.verdict == TraceVerdict::Bounded) {
        Outcome::Localization
    } else {
        Outcome::Unknown
    }
}

/// Barrier checks of the absorption supersolutions on the unit disk, at
/// every resolution in `cells` (cells per unit length).
///
/// Samples are only defined at least one cell inside the singular boundary
/// of the radial barriers; the barrier constants come from
/// [`RadialBarrier::calibrate`].
pub fn barrier_suite(cells: &[usize], q: f64, beta: f64, drift: f64) -> Result<Vec<BarrierReport>> {
    let ko = RadialBarrier::calibrate(2, q, 0.0, beta)?;
    let radial = RadialBarrier::calibrate(2, q, drift, beta)?;
    let m0 = 3.0;
    let z = [0.0, 0.0];
    let mut out = Vec::new();
    for &n in cells {
        if n < 8 {
            return Err(Error::config(format!(
                "barrier grid needs at least 8 cells per unit, got {n}"
            )));
        }
        let grid = Arc::new(Grid::rectangle(
            (-1.0, 1.0, 2 * n - 1),
            (-1.0, 1.0, 2 * n - 1),
        )?);
        let h = 1.0 / n as f64;
        let inside = move |x: &[f64]| (x[0] * x[0] + x[1] * x[1]).sqrt() <= 1.0 - h;
        let times: Vec<f64> = (0..=20).map(|i| 0.1 + 0.02 * i as f64).collect();

        let ym_vm = SpaceTimeSamples::from_fn(grid.clone(), times.clone(), |x, t| {
            if !inside(x) {
                return None;
            }
            Some(ode_maximal(beta, q, t, 0.0).ok()? + ko.eval(1.0, &z, x).ok()?)
        });
        let plain = OperatorSpec {
            drift: DriftSpec::None,
            absorption: AbsorptionSpec::Constant(beta),
            exponent: q,
        };
        let mut r = verify_supersolution("ode+keller-osserman", &ym_vm, &plain, 0.0)?;
        r.constant = Some(ko.constant);
        out.push(r);

        let worst = OperatorSpec {
            drift: DriftSpec::WorstCase(drift),
            absorption: AbsorptionSpec::Constant(beta),
            exponent: q,
        };
        let phi_psi = SpaceTimeSamples::from_fn(grid.clone(), times, |x, t| {
            if !inside(x) {
                return None;
            }
            Some(decayed_ode(m0, beta, q, t) + radial.eval(1.0, &z, x).ok()?)
        });
        let mut r = verify_supersolution("decayed-ode+radial", &phi_psi, &worst, 0.0)?;
        r.constant = Some(radial.constant);
        out.push(r);

        let still = SpaceTimeSamples::stationary(grid, |x| {
            if inside(x) {
                radial.eval(1.0, &z, x).ok()
            } else {
                None
            }
        });
        let mut r = verify_supersolution("radial-drift", &still, &worst, 0.0)?;
        r.constant = Some(radial.constant);
        out.push(r);
    }
    Ok(out)
}

/// Axes of a sweep; an empty axis keeps the base value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxes {
    #[serde(default)]
    pub amplitude: Vec<f64>,
    #[serde(default)]
    pub alpha: Vec<f64>,
    #[serde(default)]
    pub p: Vec<f64>,
    /// Velocities of a straight curve.
    #[serde(default)]
    pub velocity: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    /// Scenario file, relative to the sweep file.
    pub base: PathBuf,
    /// Largest number of combinations allowed.
    pub budget: usize,
    #[serde(default)]
    pub axes: SweepAxes,
}

impl SweepFile {
    pub fn load(path: &Path) -> Result<(Self, Scenario)> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let sweep: SweepFile = toml::from_str(&text).map_err(|e| Error::Parse {
            origin: path.display().to_string(),
            msg: e.to_string(),
        })?;
        let base_path = match path.parent() {
            Some(dir) if sweep.base.is_relative() => dir.join(&sweep.base),
            _ => sweep.base.clone(),
        };
        let base = Scenario::load(&base_path)?;
        Ok((sweep, base))
    }
}

/// One point of a sweep: the modified scenario and its coordinates.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub key: String,
    pub params: BTreeMap<String, f64>,
    pub scenario: Scenario,
}

/// Cartesian product of the axes applied to `base`, in a fixed order.
pub fn sweep_points(base: &Scenario, axes: &SweepAxes, budget: usize) -> Result<Vec<SweepPoint>> {
    fn or_base<T: Clone>(axis: &[T], base: Option<T>) -> Vec<Option<T>> {
        if axis.is_empty() {
            vec![base]
        } else {
            axis.iter().cloned().map(Some).collect()
        }
    }
    let amplitudes = or_base(&axes.amplitude, None);
    let alphas = or_base(&axes.alpha, None);
    let ps = or_base(&axes.p, None);
    let velocities = or_base(&axes.velocity, None);
    let total = amplitudes.len() * alphas.len() * ps.len() * velocities.len();
    if total > budget {
        return Err(Error::Budget {
            parameter: "sweep".into(),
            detail: format!("{total} combinations, budget allows {budget}"),
        });
    }
    let mut out = Vec::with_capacity(total);
    for a in &amplitudes {
        for al in &alphas {
            for p in &ps {
                for v in &velocities {
                    let mut s = base.clone();
                    let mut params = BTreeMap::new();
                    let mut key = base.name.clone();
                    if let Some(a) = a {
                        s.potential.amplitude = *a;
                        params.insert("amplitude".into(), *a);
                        key.push_str(&format!("|A={a:e}"));
                    }
                    if let Some(al) = al {
                        s.alpha = vec![*al];
                        params.insert("alpha".into(), *al);
                        key.push_str(&format!("|alpha={al:e}"));
                    }
                    if let Some(p) = p {
                        s.p = *p;
                        params.insert("p".into(), *p);
                        key.push_str(&format!("|p={p:e}"));
                    }
                    if let Some(v) = v {
                        match &mut s.curve {
                            Some(CurveSpec::Straight { velocity, .. }) => *velocity = v.clone(),
                            _ => {
                                return Err(Error::config(
                                    "velocity axis needs a straight base curve",
                                ))
                            }
                        }
                        params.insert("speed".into(), v.iter().map(|c| c * c).sum::<f64>().sqrt());
                        key.push_str(&format!("|v={v:?}"));
                    }
                    s.name = key.clone();
                    // Points map the outcome; only the base scenario carries an expectation.
                    s.expected = Outcome::Unknown;
                    s.regression = false;
                    s.validate()?;
                    out.push(SweepPoint {
                        key,
                        params,
                        scenario: s,
                    });
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LogLine {
    key: String,
    verdict: Verdict,
}

/// Verdicts already in the append-only log. A torn final line from an
/// interrupted write is ignored.
pub fn read_log(path: &Path) -> Result<Vec<(String, Verdict)>> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(Error::io(path, e)),
    };
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        if let Ok(l) = serde_json::from_str::<LogLine>(&line) {
            out.push((l.key, l.verdict));
        }
    }
    Ok(out)
}

/// Single writer of the sweep log; every verdict is flushed and synced.
pub struct SweepLog {
    path: PathBuf,
    file: Mutex<File>,
}

impl SweepLog {
    pub fn open(path: &Path) -> Result<Self> {
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
        }
        // Drop a torn final line so the next verdict starts on a fresh line.
        if let Ok(bytes) = std::fs::read(path) {
            if bytes.last().is_some_and(|&b| b != b'\n') {
                let keep = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
                let f = OpenOptions::new()
                    .write(true)
                    .open(path)
                    .map_err(|e| Error::io(path, e))?;
                f.set_len(keep as u64).map_err(|e| Error::io(path, e))?;
                f.sync_data().map_err(|e| Error::io(path, e))?;
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            file: Mutex::new(file),
        })
    }

    pub fn append(&self, key: &str, verdict: &Verdict) -> Result<()> {
        let line = serde_json::to_string(&LogLine {
            key: key.to_string(),
            verdict: verdict.clone(),
        })
        .map_err(|e| Error::config(e.to_string()))?;
        let mut f = self.file.lock().unwrap();
        writeln!(f, "{line}").map_err(|e| Error::io(&self.path, e))?;
        f.sync_data().map_err(|e| Error::io(&self.path, e))
    }
}

/// Verdicts of a sweep in sweep order, and the keys left unrun because the
/// time budget ran out.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub verdicts: Vec<Verdict>,
    pub skipped: Vec<String>,
}

/// Run every sweep point not yet in the log on `workers` threads.
///
/// Verdicts already in the log are reused without recomputation. Once
/// `budget` has elapsed no new point is started; the points left over are
/// reported in [`SweepResult::skipped`] and a later call resumes them.
pub fn sweep(
    points: &[SweepPoint],
    log_path: &Path,
    workers: usize,
    budget: Option<Duration>,
) -> Result<SweepResult> {
    let done: HashMap<String, Verdict> = read_log(log_path)?.into_iter().collect();
    let log = SweepLog::open(log_path)?;
    let cache = RunCache::new();
    let mut seen = HashSet::new();
    let pending: Vec<&SweepPoint> = points
        .iter()
        .filter(|p| !done.contains_key(&p.key) && seen.insert(p.key.clone()))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::config(e.to_string()))?;
    let clock = Instant::now();
    let fresh: Vec<Result<Option<(String, Verdict)>>> = pool.install(|| {
        pending
            .par_iter()
            .map(|p| {
                if budget.is_some_and(|b| clock.elapsed() >= b) {
                    return Ok(None);
                }
                let (mut v, _) = run_scenario_cached(&p.scenario, &cache)?;
                v.params = p.params.clone();
                log.append(&p.key, &v)?;
                Ok(Some((p.key.clone(), v)))
            })
            .collect()
    });
    let mut all = done;
    for r in fresh {
        if let Some((k, v)) = r? {
            all.insert(k, v);
        }
    }
    let mut verdicts = Vec::new();
    let mut skipped = Vec::new();
    let mut seen = HashSet::new();
    for p in points.iter().filter(|p| seen.insert(p.key.clone())) {
        match all.get(&p.key) {
            Some(v) => verdicts.push(v.clone()),
            None => skipped.push(p.key.clone()),
        }
    }
    Ok(SweepResult { verdicts, skipped })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    PlotScript,
}

fn slug(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn sci(v: f64) -> String {
    format!("{v:.12e}")
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    let fail = |e: csv::Error| Error::Parse {
        origin: path.display().to_string(),
        msg: e.to_string(),
    };
    w.write_record(header).map_err(fail)?;
    for r in rows {
        w.write_record(r).map_err(fail)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Write the report files for `verdicts` into `dir` and return their paths.
///
/// Rows follow the order of `verdicts`; numbers use a fixed `{:.12e}`
/// format, so the same verdicts always give the same bytes.
pub fn emit_report(
    verdicts: &[Verdict],
    dir: &Path,
    formats: &[ReportFormat],
) -> Result<Vec<PathBuf>> {
    if verdicts.is_empty() {
        return Err(Error::config("report needs at least one verdict"));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let mut trace_files = Vec::new();
    let mut ladder_files = Vec::new();
    let mut phase_columns = None;
    if formats.contains(&ReportFormat::Csv) {
        let rows: Vec<Vec<String>> = verdicts
            .iter()
            .map(|v| {
                vec![
                    v.scenario.clone(),
                    v.expected.label().into(),
                    v.outcome.label().into(),
                    v.matches().to_string(),
                    v.regression.to_string(),
                    v.rules.version.to_string(),
                ]
            })
            .collect();
        let path = dir.join("verdicts.csv");
        write_csv(
            &path,
            &[
                "scenario",
                "expected",
                "outcome",
                "match",
                "regression",
                "rules_version",
            ],
            &rows,
        )?;
        written.push(path);

        for v in verdicts {
            if !v.evidence.traces.is_empty() {
                let mut rows = Vec::new();
                for t in &v.evidence.traces {
                    for e in &t.entries {
                        let point = v
                            .evidence
                            .rescaled
                            .iter()
                            .find(|p| p.alpha == t.alpha && p.eps == e.eps);
                        rows.push(vec![
                            sci(t.alpha),
                            sci(e.eps),
                            sci(e.value),
                            point.map_or_else(String::new, |p| sci(p.ln_value)),
                            point.map_or_else(String::new, |p| sci(p.lower_bound_margin)),
                            format!("{:?}", t.verdict).to_lowercase(),
                        ]);
                    }
                }
                let path = dir.join(format!("trace_{}.csv", slug(&v.scenario)));
                write_csv(
                    &path,
                    &[
                        "alpha",
                        "eps",
                        "functional",
                        "ln_rescaled",
                        "lower_bound_margin",
                        "verdict",
                    ],
                    &rows,
                )?;
                trace_files.push(path.clone());
                written.push(path);
            }
            if !v.evidence.ladder.is_empty() {
                let rows: Vec<Vec<String>> = v
                    .evidence
                    .ladder
                    .iter()
                    .map(|p| {
                        vec![
                            sci(p.k),
                            sci(p.probe_max),
                            p.diverged.to_string(),
                            p.steps.to_string(),
                        ]
                    })
                    .collect();
                let path = dir.join(format!("ladder_{}.csv", slug(&v.scenario)));
                write_csv(&path, &["k", "probe_max", "diverged", "steps"], &rows)?;
                ladder_files.push(path.clone());
                written.push(path);
            }
            if let Some(t) = &v.evidence.tunnel {
                let rows: Vec<Vec<String>> = t
                    .half_widths
                    .iter()
                    .zip(&t.ln_floor_centre)
                    .map(|(h, f)| {
                        vec![
                            sci(h.eps),
                            sci(h.delta),
                            sci(h.measured),
                            sci(*f),
                            sci(t.c),
                            sci(t.conformance_margin),
                        ]
                    })
                    .collect();
                let path = dir.join(format!("tunnel_{}.csv", slug(&v.scenario)));
                write_csv(
                    &path,
                    &[
                        "eps",
                        "delta",
                        "half_width",
                        "ln_floor_centre",
                        "c",
                        "conformance_margin",
                    ],
                    &rows,
                )?;
                written.push(path);
            }
        }

        if verdicts.iter().any(|v| !v.params.is_empty()) {
            let mut names: Vec<String> = verdicts
                .iter()
                .flat_map(|v| v.params.keys().cloned())
                .collect();
            names.sort();
            names.dedup();
            let rows: Vec<Vec<String>> = verdicts
                .iter()
                .map(|v| {
                    let mut r: Vec<String> = names
                        .iter()
                        .map(|n| v.params.get(n).map_or_else(String::new, |x| sci(*x)))
                        .collect();
                    r.push(v.outcome.label().into());
                    r
                })
                .collect();
            let mut header: Vec<&str> = names.iter().map(String::as_str).collect();
            header.push("outcome");
            phase_columns = Some(header.len());
            let path = dir.join("phase.csv");
            write_csv(&path, &header, &rows)?;
            written.push(path);
            if names.iter().any(|n| n == "amplitude") {
                let path = dir.join("boundary.csv");
                let (header, rows) = boundary_table(verdicts, &names);
                let header: Vec<&str> = header.iter().map(String::as_str).collect();
                write_csv(&path, &header, &rows)?;
                written.push(path);
            }
        }
    }
    if formats.contains(&ReportFormat::PlotScript) {
        let path = dir.join("plot.gp");
        let probes = list_probe_files(&dir.join("probes"))?;
        let script = plot_script(&trace_files, &ladder_files, &probes, phase_columns);
        std::fs::write(&path, script).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

/// Where the verdict flips along the amplitude axis, for each setting of
/// the other sweep coordinates. `crossings` counts outcome changes along
/// increasing amplitude; a clean boundary has exactly one.
pub fn boundary_table(verdicts: &[Verdict], names: &[String]) -> (Vec<String>, Vec<Vec<String>>) {
    let others: Vec<&String> = names.iter().filter(|n| *n != "amplitude").collect();
    let mut groups: BTreeMap<Vec<String>, Vec<(f64, Outcome)>> = BTreeMap::new();
    for v in verdicts {
        let Some(&a) = v.params.get("amplitude") else {
            continue;
        };
        let key = others
            .iter()
            .map(|n| v.params.get(*n).map_or_else(String::new, |x| sci(*x)))
            .collect();
        groups.entry(key).or_default().push((a, v.outcome));
    }
    let mut header: Vec<String> = others.iter().map(|n| n.to_string()).collect();
    header.extend(["last_localized", "first_propagating", "crossings"].map(String::from));
    let rows = groups
        .into_iter()
        .map(|(mut key, mut pts)| {
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            let localized = pts
                .iter()
                .filter(|p| p.1 == Outcome::Localization)
                .map(|p| p.0)
                .fold(f64::NAN, f64::max);
            let propagating = pts
                .iter()
                .filter(|p| p.1 == Outcome::Propagation)
                .map(|p| p.0)
                .fold(f64::NAN, f64::min);
            let crossings = pts.windows(2).filter(|w| w[0].1 != w[1].1).count();
            let fmt = |x: f64| if x.is_nan() { String::new() } else { sci(x) };
            key.extend([fmt(localized), fmt(propagating), crossings.to_string()]);
            key
        })
        .collect();
    (header, rows)
}

fn list_probe_files(dir: &Path) -> Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_some_and(|e| e == "csv") {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

fn plot_script(
    traces: &[PathBuf],
    ladders: &[PathBuf],
    probes: &[PathBuf],
    phase_columns: Option<usize>,
) -> String {
    let name = |p: &PathBuf| {
        p.file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default()
    };
    let mut s = String::from("set datafile separator ','\nset terminal pngcairo size 900,600\n");
    for t in traces {
        let n = name(t);
        s.push_str(&format!(
            "set output '{stem}.png'\nset logscale x\nset xlabel 'eps'\nset ylabel 'value'\n\
             plot '{n}' using 2:3 every ::1 with linespoints title 'A(eps)', \\\n     '{n}' using 2:4 every ::1 with linespoints title 'ln rescaled'\nunset logscale x\n",
            stem = n.trim_end_matches(".csv")
        ));
    }
    for l in ladders {
        let n = name(l);
        s.push_str(&format!(
            "set output '{stem}.png'\nset logscale xy\nset xlabel 'k'\nset ylabel 'probe max'\n\
             plot '{n}' using 1:2 every ::1 with linespoints title 'probe max'\nunset logscale xy\n",
            stem = n.trim_end_matches(".csv")
        ));
    }
    for p in probes {
        let n = name(p);
        s.push_str(&format!(
            "set output 'probes/{stem}.png'\nset xlabel 't'\nset ylabel 'ln max u'\n\
             plot 'probes/{n}' using 1:5 every ::1 with lines title 'ln linf'\n",
            stem = n.trim_end_matches(".csv")
        ));
    }
    if let Some(n) = phase_columns.filter(|&n| n >= 3) {
        s.push_str(&format!(
            "set output 'phase.png'\nset xlabel 'first sweep axis'\nset ylabel 'second sweep axis'\n\
             plot 'phase.csv' using 1:2:(strcol({n}) eq 'propagation' ? 1 : 2) every ::1 with points pt 7 lc variable notitle\n"
        ));
    }
    s
}

/// Write the probe series of a run as `probes_<label>.csv` in `dir`.
pub fn save_series(series: &[Series], dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = Vec::new();
    for s in series {
        let path = dir.join(format!("probes_{}.csv", slug(&s.label)));
        s.run.save_probe_csv(&path)?;
        out.push(path);
    }
    Ok(out)
}

/// The scenarios shipped with the crate, by file name.
pub const SHIPPED_SCENARIOS: [&str; 8] = [
    "thmC-straight.toml",
    "thmC-weak.toml",
    "thmC-control.toml",
    "thmB-downslope.toml",
    "gbox.toml",
    "thmD-case1.toml",
    "thmD-case2.toml",
    "gboxes-conjecture.toml",
];

/// Directory of the shipped scenario files.
pub fn scenario_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(alpha: f64, eps: f64, ln_value: f64) -> RescaledPoint {
        RescaledPoint {
            alpha,
            eps,
            ln_omega_centre: 0.0,
            ln_value,
            c1: 1.0,
            lambda0: 5.0,
            sigma_tau: 0.0,
            lower_bound_margin: 0.0,
            steps: 1,
        }
    }

    fn trace(alpha: f64, verdict: TraceVerdict) -> BlowupTrace {
        BlowupTrace {
            kind: FunctionalKind::A,
            p: 2.0,
            alpha,
            dim: 2,
            profile: DecayProfile::inverse_square(1.0).unwrap(),
            entries: Vec::new(),
            verdict,
        }
    }

    #[test]
    fn rescaled_rules() {
        let rules = DecisionRules::default();
        let mut ev = Evidence {
            traces: vec![trace(0.5, TraceVerdict::Propagation)],
            rescaled: vec![
                point(0.5, 0.2, 10.0),
                point(0.5, 0.1, 20.0),
                point(0.5, 0.05, 30.0),
            ],
            ..Default::default()
        };
        assert_eq!(derive_outcome(&ev, &rules), Outcome::Propagation);
        ev.rescaled[1].lower_bound_margin = -1e-3;
        assert_eq!(derive_outcome(&ev, &rules), Outcome::Unknown);
        let ev = Evidence {
            traces: vec![trace(0.5, TraceVerdict::Bounded)],
            rescaled: vec![point(0.5, 0.2, -1.0), point(0.5, 0.1, -5.0)],
            ..Default::default()
        };
        assert_eq!(derive_outcome(&ev, &rules), Outcome::Localization);
    }

    #[test]
    fn ladder_rules() {
        let rules = DecisionRules::default();
        let rung = |k: f64, v: f64| LadderPoint {
            k,
            probe_max: v,
            diverged: false,
            steps: 1,
        };
        let mut ev = Evidence {
            ladder: vec![rung(1e5, 1.0), rung(1e6, 1.005)],
            segments: vec![SegmentLabel::Increasing, SegmentLabel::Decreasing],
            ..Default::default()
        };
        assert_eq!(derive_outcome(&ev, &rules), Outcome::NonPropagationSegment);
        ev.box_witness = true;
        assert_eq!(derive_outcome(&ev, &rules), Outcome::NonPropagationSegment);
        ev.segments[1] = SegmentLabel::Box;
        assert_eq!(derive_outcome(&ev, &rules), Outcome::BoxBounded);
        ev.ladder[1].probe_max = 5.0;
        assert_eq!(derive_outcome(&ev, &rules), Outcome::Propagation);
        ev.ladder[1].probe_max = 1.5;
        assert_eq!(derive_outcome(&ev, &rules), Outcome::Unknown);
    }

    #[test]
    fn empty_axes_give_the_base_scenario() {
        let base = Scenario::load(&scenario_dir().join("thmC-straight.toml")).unwrap();
        let pts = sweep_points(&base, &SweepAxes::default(), 1).unwrap();
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].scenario.potential, base.potential);
        assert!(pts[0].params.is_empty());
    }

    #[test]
    fn budget_enforced() {
        let base = Scenario::load(&scenario_dir().join("thmC-straight.toml")).unwrap();
        let axes = SweepAxes {
            amplitude: vec![1.0, 2.0, 3.0],
            alpha: vec![0.1, 0.2],
            ..Default::default()
        };
        assert!(matches!(
            sweep_points(&base, &axes, 5),
            Err(Error::Budget { .. })
        ));
        assert_eq!(sweep_points(&base, &axes, 6).unwrap().len(), 6);
    }

    #[test]
    fn shipped_scenarios_parse() {
        for name in SHIPPED_SCENARIOS {
            let s = Scenario::load(&scenario_dir().join(name))
                .unwrap_or_else(|e| panic!("{name}: {e}"));
            let again = Scenario::from_toml(&s.to_toml().unwrap(), name).unwrap();
            assert_eq!(again.name, s.name);
        }
    }
}
