//! Instrumented runs built on the stepper: the Dirac family `u_k`, the
//! rescaled family on the unit ball, the mass restart and the tunnel run.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{
    absorbed_dirac, dirac_family, require_graph, Absorption, DiffusionScheme, DiracStart, Drift,
    PdeSpec, ReactionScheme, Stepper, DEFAULT_CEILING,
};
use crate::barriers::TunnelSubsolution;
use crate::error::{Error, Result};
use crate::geometry::{Curve, CurveKind};
use crate::mesh::{DomainKind, Field, Grid};
use crate::potential::{validate_split_exponent, DecayProfile, Potential};
use crate::spectral::{
    dirichlet_ground_state, ground_state_on_grid, DecayConstants, EigenDomain, EigenPair,
};

/// Relative slack below zero tolerated before a negative value is logged.
const NEGATIVE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    Divergence,
    NonFinite,
    Underflow,
    Negative,
}

impl EventKind {
    fn bit(self) -> u8 {
        match self {
            EventKind::Divergence => 1,
            EventKind::NonFinite => 2,
            EventKind::Underflow => 4,
            EventKind::Negative => 8,
        }
    }

    fn label(self) -> &'static str {
        match self {
            EventKind::Divergence => "divergence",
            EventKind::NonFinite => "non-finite",
            EventKind::Underflow => "underflow",
            EventKind::Negative => "negative",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
    pub detail: String,
}

/// Set of event kinds raised during one step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct EventFlags(u8);

impl EventFlags {
    pub fn insert(&mut self, kind: EventKind) {
        self.0 |= kind.bit();
    }

    pub fn contains(&self, kind: EventKind) -> bool {
        self.0 & kind.bit() != 0
    }

    pub fn describe(&self) -> String {
        [
            EventKind::Divergence,
            EventKind::NonFinite,
            EventKind::Underflow,
            EventKind::Negative,
        ]
        .into_iter()
        .filter(|k| self.contains(*k))
        .map(EventKind::label)
        .collect::<Vec<_>>()
        .join("|")
    }
}

/// One row of the probe series, written after every step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeRecord {
    pub t: f64,
    /// Value at the probe location (`NaN` when nothing was probed this step).
    pub probe: f64,
    pub l2: f64,
    pub linf: f64,
    pub ln_linf: f64,
    pub flags: EventFlags,
}

/// Value recorded when the run crosses the time of a curve sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveHit {
    pub index: usize,
    pub tau: f64,
    pub t: f64,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub enum Probe {
    None,
    Point(Vec<f64>),
    /// For graph-over-t curves the probe is `u(x(t), t)`; for other kinds it
    /// is the largest value over the curve samples crossed during the step.
    Curve(Arc<Curve>),
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub dt: f64,
    pub ceiling: f64,
    /// Keep a copy of the field every this many steps (0 keeps none).
    pub snapshot_every: usize,
}

impl RunOptions {
    pub fn new(dt: f64) -> Self {
        Self {
            dt,
            ceiling: DEFAULT_CEILING,
            snapshot_every: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub final_field: Field,
    pub probes: Vec<ProbeRecord>,
    pub events: Vec<Event>,
    pub curve_hits: Vec<CurveHit>,
    pub snapshots: Vec<Field>,
    pub diverged: bool,
    pub underflow_total: usize,
}

impl RunResult {
    pub fn steps(&self) -> usize {
        self.probes.len()
    }

    pub fn probe_max(&self) -> f64 {
        self.probes
            .iter()
            .map(|r| r.probe)
            .filter(|v| v.is_finite())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub const CSV_HEADER: [&'static str; 6] =
        ["t", "probe", "l2", "linf", "ln_linf", "event_flags"];

    /// Probe series as CSV with fixed formatting.
    pub fn write_probe_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let fail = |e: csv::Error| Error::Parse {
            origin: "probe csv".into(),
            msg: e.to_string(),
        };
        out.write_record(Self::CSV_HEADER).map_err(fail)?;
        for r in &self.probes {
            out.write_record([
                format!("{:.12e}", r.t),
                format!("{:.12e}", r.probe),
                format!("{:.12e}", r.l2),
                format!("{:.12e}", r.linf),
                format!("{:.12e}", r.ln_linf),
                r.flags.describe(),
            ])
            .map_err(fail)?;
        }
        out.flush().map_err(|e| Error::io("probe csv", e))?;
        Ok(())
    }

    pub fn save_probe_csv(&self, path: &Path) -> Result<()> {
        let file =
            std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        self.write_probe_csv(std::io::BufWriter::new(file))
    }
}

struct HitCursor {
    curve: Arc<Curve>,
    /// Sample indices ordered by sample time.
    order: Vec<usize>,
    next: usize,
}

impl HitCursor {
    fn new(curve: Arc<Curve>, t0: f64) -> Self {
        let mut order: Vec<usize> = (0..curve.len()).collect();
        order.sort_by(|&a, &b| curve.time(a).total_cmp(&curve.time(b)).then(a.cmp(&b)));
        let next = order
            .iter()
            .position(|&i| curve.time(i) > t0)
            .unwrap_or(order.len());
        Self { curve, order, next }
    }

    fn advance(&mut self, prev: &Field, cur: &Field, hits: &mut Vec<CurveHit>) -> f64 {
        let (t0, t1) = (prev.time, cur.time);
        let mut best = f64::NAN;
        while self.next < self.order.len() {
            let i = self.order[self.next];
            let s = self.curve.time(i);
            if s > t1 {
                break;
            }
            let x = self.curve.point(i);
            let w = if t1 > t0 { (s - t0) / (t1 - t0) } else { 1.0 };
            let value = (1.0 - w) * prev.sample(x) + w * cur.sample(x);
            hits.push(CurveHit {
                index: i,
                tau: self.curve.tau(i),
                t: s,
                value,
            });
            best = if best.is_nan() {
                value
            } else {
                best.max(value)
            };
            self.next += 1;
        }
        best
    }
}

/// Step `field` to `t_end`, recording one probe row per step. The step is
/// shrunk uniformly so the run lands exactly on `t_end`.
pub fn evolve(
    stepper: &mut Stepper,
    field: Field,
    t_end: f64,
    probe: &Probe,
    opts: &RunOptions,
) -> Result<RunResult> {
    evolve_with(stepper, field, t_end, probe, opts, |_| Ok(()))
}

/// As [`evolve`], calling `observe` on the field after every step.
pub fn evolve_with<F>(
    stepper: &mut Stepper,
    mut field: Field,
    t_end: f64,
    probe: &Probe,
    opts: &RunOptions,
    mut observe: F,
) -> Result<RunResult>
where
    F: FnMut(&Field) -> Result<()>,
{
    let span = t_end - field.time;
    if span < 0.0 {
        return Err(Error::config(format!(
            "run ends at {t_end} before its start {}",
            field.time
        )));
    }
    let steps = if span == 0.0 {
        0
    } else {
        (span / opts.dt - 1e-9).ceil().max(1.0) as usize
    };
    let dt = if steps > 0 {
        span / steps as f64
    } else {
        opts.dt
    };
    let t_start = field.time;
    let mut cursor = match probe {
        Probe::Curve(c) => Some(HitCursor::new(c.clone(), t_start)),
        _ => None,
    };
    let mut result = RunResult {
        final_field: field.clone(),
        probes: Vec::with_capacity(steps),
        events: Vec::new(),
        curve_hits: Vec::new(),
        snapshots: Vec::new(),
        diverged: false,
        underflow_total: 0,
    };
    for step in 0..steps {
        let prev = cursor.as_ref().map(|_| field.clone());
        let stats = stepper.step(&mut field, Some(dt))?;
        field.time = t_start + (step + 1) as f64 * dt;
        let mut flags = EventFlags::default();
        if stats.underflow > 0 {
            flags.insert(EventKind::Underflow);
            result.underflow_total += stats.underflow;
        }
        let finite = field.all_finite() && field.log_scale.is_finite();
        let linf = field.linf();
        if !finite {
            flags.insert(EventKind::NonFinite);
            result.events.push(Event {
                time: field.time,
                kind: EventKind::NonFinite,
                detail: "non-finite value in field".into(),
            });
        }
        if !finite || linf > opts.ceiling {
            flags.insert(EventKind::Divergence);
            result.events.push(Event {
                time: field.time,
                kind: EventKind::Divergence,
                detail: format!("sup norm {linf:.6e} above ceiling {:.1e}", opts.ceiling),
            });
            result.diverged = true;
        }
        if field.raw_min() < -NEGATIVE_SLACK * field.raw_max_abs().max(f64::MIN_POSITIVE) {
            flags.insert(EventKind::Negative);
            result.events.push(Event {
                time: field.time,
                kind: EventKind::Negative,
                detail: format!("raw minimum {:.3e}", field.raw_min()),
            });
        }
        let value = match (probe, &mut cursor) {
            (Probe::None, _) => f64::NAN,
            (Probe::Point(x), _) => field.sample(x),
            (Probe::Curve(c), Some(cur)) => {
                let crossed = cur.advance(prev.as_ref().unwrap(), &field, &mut result.curve_hits);
                if c.kind() == CurveKind::GraphOverT {
                    c.position_at(field.time.min(c.horizon()))
                        .map(|x| field.sample(&x))
                        .unwrap_or(f64::NAN)
                } else {
                    crossed
                }
            }
            (Probe::Curve(_), None) => unreachable!(),
        };
        result.probes.push(ProbeRecord {
            t: field.time,
            probe: value,
            l2: field.l2_norm(),
            linf,
            ln_linf: field.ln_linf(),
            flags,
        });
        if opts.snapshot_every > 0 && (step + 1) % opts.snapshot_every == 0 {
            result.snapshots.push(field.clone());
        }
        observe(&field)?;
        if result.diverged {
            break;
        }
    }
    if result.underflow_total > 0 {
        result.events.push(Event {
            time: field.time,
            kind: EventKind::Underflow,
            detail: format!(
                "{} absorption evaluations below the f64 range",
                result.underflow_total
            ),
        });
    }
    result.final_field = field;
    Ok(result)
}

/// Settings shared by the Dirac-family runs.
#[derive(Debug, Clone)]
pub struct UkConfig {
    pub tau0: f64,
    pub dt: f64,
    pub ceiling: f64,
    pub snapshot_every: usize,
    pub reaction: ReactionScheme,
    pub start: DiracStart,
}

impl Default for UkConfig {
    fn default() -> Self {
        Self {
            tau0: 2e-3,
            dt: 1e-3,
            ceiling: DEFAULT_CEILING,
            snapshot_every: 0,
            reaction: ReactionScheme::ExactFlow,
            start: DiracStart::PathAbsorbed,
        }
    }
}

/// `u_k`: the solution with datum `k δ_0`, started from the mollified Dirac
/// mass at `τ0` and probed along the curve every step.
#[allow(clippy::too_many_arguments)]
pub fn solve_uk(
    k: f64,
    curve: Arc<Curve>,
    potential: Arc<Potential>,
    p: f64,
    horizon: f64,
    grid: Arc<Grid>,
    cfg: &UkConfig,
) -> Result<RunResult> {
    if curve.dim() != grid.dim() {
        return Err(Error::config(format!(
            "curve lives in dimension {}, grid in dimension {}",
            curve.dim(),
            grid.dim()
        )));
    }
    let pde = PdeSpec {
        drift: Drift::None,
        absorption: Absorption::Potential {
            potential,
            frame: None,
        },
        p,
        reaction: cfg.reaction,
        diffusion: DiffusionScheme::LineSplit,
    };
    let centre = vec![0.0; grid.dim()];
    let start = match cfg.start {
        DiracStart::Kernel => dirac_family(k, grid.clone(), cfg.tau0, &centre)?,
        DiracStart::PathAbsorbed => {
            absorbed_dirac(k, grid.clone(), cfg.tau0, &centre, &pde.absorption, p)?
        }
    };
    let mut stepper = Stepper::new(grid, pde, cfg.dt, cfg.tau0, horizon)?;
    let opts = RunOptions {
        dt: cfg.dt,
        ceiling: cfg.ceiling,
        snapshot_every: cfg.snapshot_every,
    };
    evolve(&mut stepper, start, horizon, &Probe::Curve(curve), &opts)
}

#[derive(Debug, Clone)]
pub struct RescaledConfig {
    pub p: f64,
    pub alpha: f64,
    pub k: f64,
    pub tau0: f64,
    pub dt: f64,
    pub max_steps: usize,
    pub diffusion: DiffusionScheme,
}

impl Default for RescaledConfig {
    fn default() -> Self {
        Self {
            p: 2.0,
            alpha: 0.5,
            k: 1e6,
            tau0: 4e-3,
            dt: 1e-2,
            max_steps: 100_000,
            diffusion: DiffusionScheme::FullImplicit,
        }
    }
}

/// Rescaled run on the unit ball and the quantities read off it.
#[derive(Debug, Clone)]
pub struct RescaledRun {
    pub eps: f64,
    pub alpha: f64,
    pub p: f64,
    pub run: RunResult,
    /// `ln ω_ε(0, α/ε²)`.
    pub ln_omega_centre: f64,
    /// Largest `c_1` with `ω_ε(·, 1) >= c_1 ψ_0` on the grid.
    pub c1: f64,
    /// Drift and nonlinearity constants measured on `[1, α/ε²]`, with the
    /// discrete ground-state eigenvalue.
    pub constants: DecayConstants,
    /// `min_{t,x} [ln ω - ln(c_1 e^{-rate (t-1)} ψ_0)]` over steps with `t >= 1`.
    pub lower_bound_margin: f64,
    pub ground: EigenPair,
}

impl RescaledRun {
    /// `ln(ε^{-2/(p-1)} e^{ℓ(ε)/(p-1)} ω_ε(0, α/ε²))`.
    pub fn ln_amplified(&self, profile: &DecayProfile) -> Result<f64> {
        let q = self.p - 1.0;
        Ok(-2.0 / q * self.eps.ln() + profile.eval(self.eps)? / q + self.ln_omega_centre)
    }

    /// Whether the lower envelope holds to relative tolerance `tol`.
    pub fn lower_bound_holds(&self, tol: f64) -> bool {
        self.lower_bound_margin >= (-tol).ln_1p()
    }
}

/// Largest steps-per-run the budget allows, and the ε it implies.
pub fn rescaled_eps_floor(alpha: f64, dt: f64, max_steps: usize) -> f64 {
    (alpha / (dt * max_steps as f64)).sqrt()
}

/// `ω_ε` on the ball grid: drift `ε x'(ε² t)`, unit absorption, large-k
/// Dirac start at `τ0`, evolved to `α/ε²`.
pub fn solve_rescaled(
    eps: f64,
    curve: Arc<Curve>,
    grid: Arc<Grid>,
    cfg: &RescaledConfig,
) -> Result<RescaledRun> {
    require_graph(&curve)?;
    if grid.kind() != DomainKind::Ball {
        return Err(Error::config("the rescaled problem lives on the unit ball"));
    }
    if curve.dim() != grid.dim() {
        return Err(Error::config(format!(
            "curve lives in dimension {}, grid in dimension {}",
            curve.dim(),
            grid.dim()
        )));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::config(format!("ε must lie in (0, 1), got {eps}")));
    }
    if !(cfg.alpha > 0.0 && cfg.alpha <= curve.horizon()) {
        return Err(Error::config(format!(
            "α = {} must lie in (0, horizon = {}]",
            cfg.alpha,
            curve.horizon()
        )));
    }
    let t_end = cfg.alpha / (eps * eps);
    if t_end < 1.0 {
        return Err(Error::config(format!(
            "α/ε² = {t_end} ends before the Hopf time 1"
        )));
    }
    let needed = ((t_end - cfg.tau0) / cfg.dt).ceil();
    if needed > cfg.max_steps as f64 {
        return Err(Error::Budget {
            parameter: "eps".into(),
            detail: format!(
                "{needed} steps exceed the budget of {}; use ε >= {:.4}",
                cfg.max_steps,
                rescaled_eps_floor(cfg.alpha, cfg.dt, cfg.max_steps)
            ),
        });
    }
    let ground = ground_state_on_grid(grid.clone())?;
    let psi = &ground.psi;
    let ln_psi: Vec<f64> = (0..grid.len())
        .map(|i| {
            if grid.is_active(i) {
                psi.ln_value(i)
            } else {
                f64::NAN
            }
        })
        .collect();
    let pde = PdeSpec {
        drift: Drift::Curve {
            curve: curve.clone(),
            space_scale: eps,
            time_scale: eps * eps,
        },
        absorption: Absorption::Constant(1.0),
        p: cfg.p,
        reaction: ReactionScheme::ExactFlow,
        diffusion: cfg.diffusion,
    };
    let mut stepper = Stepper::new(grid.clone(), pde.clone(), cfg.dt, cfg.tau0, t_end)?;
    let opts = RunOptions {
        dt: cfg.dt,
        ceiling: f64::INFINITY,
        snapshot_every: 0,
    };
    let start = dirac_family(cfg.k, grid.clone(), cfg.tau0, &vec![0.0; grid.dim()])?;
    let probe = Probe::Point(vec![0.0; grid.dim()]);
    let early = evolve(&mut stepper, start, 1.0, &probe, &opts)?;
    let at_one = early.final_field.clone();
    let ln_c1 = min_log_ratio(&at_one, &ln_psi);
    let q = cfg.p - 1.0;

    // Per step: lowest log ratio to ψ_0 and the nonlinearity sup for σ_τ.
    let mut ratios = Vec::new();
    let mut sigma = nonlinearity_sup(&at_one, &pde.drift, q)?;
    let mut beta_sup = pde.drift.speed_bound(1.0, 1.0)?;
    let late = evolve_with(&mut stepper, at_one, t_end, &probe, &opts, |f| {
        ratios.push((f.time, min_log_ratio(f, &ln_psi)));
        sigma = sigma.max(nonlinearity_sup(f, &pde.drift, q)?);
        beta_sup = beta_sup.max(norm(&pde.drift.velocity(f.time, grid.dim())?));
        Ok(())
    })?;
    let delta_tau = eps.powi(3) * curve.acceleration_sup(eps * eps, cfg.alpha)?;
    let constants = DecayConstants {
        lambda0: ground.lambda,
        beta_tau: beta_sup,
        delta_tau,
        sigma_tau: sigma,
    };
    let rate = constants.rate();
    let lower_bound_margin = ratios
        .iter()
        .map(|&(t, r)| r - ln_c1 + rate * (t - 1.0))
        .fold(f64::INFINITY, f64::min);
    let centre = grid
        .nearest(&vec![0.0; grid.dim()])
        .ok_or_else(|| Error::config("ball grid without a centre node"))?;
    let ln_omega_centre = late.final_field.ln_value(centre);
    let mut run = early;
    run.probes.extend(late.probes);
    run.events.extend(late.events);
    run.diverged |= late.diverged;
    run.final_field = late.final_field;
    Ok(RescaledRun {
        eps,
        alpha: cfg.alpha,
        p: cfg.p,
        run,
        ln_omega_centre,
        c1: ln_c1.exp(),
        constants,
        lower_bound_margin,
        ground,
    })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

fn min_log_ratio(f: &Field, ln_psi: &[f64]) -> f64 {
    let grid = f.grid();
    (0..grid.len())
        .filter(|&i| grid.is_active(i))
        .map(|i| f.ln_value(i) - ln_psi[i])
        .fold(f64::INFINITY, f64::min)
}

/// `sup_x e^{(p-1)|β|/2} (e^{-<β,x>/2} ω)^{p-1}` at the field's time.
fn nonlinearity_sup(f: &Field, drift: &Drift, q: f64) -> Result<f64> {
    let grid = f.grid();
    let beta = drift.velocity(f.time, grid.dim())?;
    let b = norm(&beta);
    let mut best = f64::NEG_INFINITY;
    for i in 0..grid.len() {
        if !grid.is_active(i) || f.values[i] <= 0.0 {
            continue;
        }
        let x = grid.coords(i);
        let dot: f64 = beta.iter().enumerate().map(|(d, c)| c * x[d]).sum();
        best = best.max(q * (0.5 * b - 0.5 * dot + f.ln_value(i)));
    }
    Ok(if best.is_finite() { best.exp() } else { 0.0 })
}

/// Truncated restart datum `min(m, u) 1_{B_σ(centre)}` with mass `k`.
#[derive(Debug, Clone)]
pub struct Restart {
    pub field: Field,
    pub sigma: f64,
    pub m: f64,
}

/// Build the restart datum on the smallest admissible radius of `sigmas`
/// whose ball carries mass at least `k`; `m` solves the mass equation by
/// bisection.
pub fn restart_from_mass(u: &Field, centre: &[f64], k: f64, sigmas: &[f64]) -> Result<Restart> {
    let grid = u.grid().clone();
    if !(k >= 0.0) {
        return Err(Error::config(format!(
            "restart mass must be nonnegative, got {k}"
        )));
    }
    if k == 0.0 {
        return Ok(Restart {
            field: Field::zeros(grid, u.time),
            sigma: sigmas.iter().copied().fold(f64::INFINITY, f64::min),
            m: 0.0,
        });
    }
    let hmax = grid.axes().iter().map(|a| a.h).fold(0.0, f64::max);
    let vals = u.actual();
    let vol = grid.cell_volume();
    let mut ordered: Vec<f64> = sigmas.iter().copied().filter(|s| *s >= hmax).collect();
    ordered.sort_by(f64::total_cmp);
    let mut best_available = 0.0f64;
    for sigma in ordered {
        let inside: Vec<usize> = (0..grid.len())
            .filter(|&i| grid.is_active(i) && dist(&grid.coords(i)[..grid.dim()], centre) < sigma)
            .collect();
        let mass = |m: f64| inside.iter().map(|&i| vals[i].max(0.0).min(m)).sum::<f64>() * vol;
        let top = inside.iter().map(|&i| vals[i]).fold(0.0, f64::max);
        let available = mass(top);
        best_available = best_available.max(available);
        if available < k {
            continue;
        }
        let (mut lo, mut hi) = (0.0, top);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mass(mid) < k {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-14 * hi {
                break;
            }
        }
        let m = hi;
        let mut values = vec![0.0; grid.len()];
        for &i in &inside {
            values[i] = vals[i].max(0.0).min(m);
        }
        return Ok(Restart {
            field: Field::from_values(grid, u.time, values)?,
            sigma,
            m,
        });
    }
    Err(Error::InfeasibleRestart {
        available: best_available,
        requested: k,
    })
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "kebab-case")]
pub enum TunnelCase {
    /// `p < 1 + 2/N`: absorption `w^p`.
    Subcritical,
    /// `p >= 1 + 2/N`: absorption `max(√τ, |ξ'|)^γ w^p`.
    Supercritical { gamma: f64 },
}

#[derive(Debug, Clone)]
pub struct TunnelConfig {
    pub p: f64,
    pub case: TunnelCase,
    pub half_length: f64,
    pub n1: usize,
    pub m_perp: usize,
    pub dt: f64,
    pub tau0: f64,
    pub k: f64,
    /// Calibration time `a` at which `c` is read off.
    pub calibration_time: f64,
    /// Fraction of the measured ratio used as `c`, absorbing the gap between
    /// the continuum `W` and the discrete flow.
    pub safety: f64,
    pub start: DiracStart,
}

impl Default for TunnelConfig {
    fn default() -> Self {
        Self {
            p: 1.5,
            case: TunnelCase::Subcritical,
            half_length: 12.0,
            n1: 479,
            m_perp: 16,
            dt: 5e-3,
            tau0: 0.02,
            k: 1e6,
            calibration_time: 0.1,
            safety: 0.5,
            start: DiracStart::PathAbsorbed,
        }
    }
}

/// Blow-up half-width read off the tunnel floor for one ε.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfWidth {
    pub eps: f64,
    /// `√(2 ε² ℓ(ε) / (q-1))`.
    pub delta: f64,
    /// Largest `|x_1|` where the certified floor stays at least `level`.
    pub measured: f64,
    pub level: f64,
    /// `ln` of the certified floor at `x_1 = measured / 2`.
    pub ln_floor_inner: f64,
}

#[derive(Debug, Clone)]
pub struct TunnelRun {
    pub run: RunResult,
    pub a: f64,
    pub c: f64,
    pub lambda: f64,
    pub phi_centre: f64,
    /// `min (w(ξ, τ + a) - c W(ξ, τ))` over nodes and steps with `τ ∈ (0, 1]`.
    pub conformance_margin: f64,
    pub checked_levels: usize,
    pub subsolution: TunnelSubsolution,
    pub case: TunnelCase,
    pub p: f64,
}

/// Tail bound `erfc(x) <= e^{-x²} / (x √π)`.
fn gaussian_tail(x: f64) -> f64 {
    (-x * x).exp() / (x * std::f64::consts::PI.sqrt())
}

/// Evolve the scaled tunnel problem from a large Dirac mass at the origin,
/// read `c` off at time `a` and check `w(·, τ + a) >= c W(·, τ)` for
/// `τ ∈ (0, 1]`.
pub fn tunnel_run(cfg: &TunnelConfig) -> Result<TunnelRun> {
    let dim = 2;
    if let TunnelCase::Supercritical { gamma } = cfg.case {
        validate_split_exponent(gamma, dim, cfg.p)?;
        if cfg.p < 1.0 + 2.0 / dim as f64 {
            return Err(Error::config(format!(
                "p = {} is subcritical for N = {dim}",
                cfg.p
            )));
        }
    } else if cfg.p >= 1.0 + 2.0 / dim as f64 {
        return Err(Error::config(format!(
            "p = {} is supercritical for N = {dim}; use the weighted case",
            cfg.p
        )));
    }
    let a = cfg.calibration_time;
    let t_end = a + 1.0;
    let reach = cfg.half_length / (2.0 * t_end.sqrt());
    let tail = gaussian_tail(reach);
    if tail > 1e-8 {
        return Err(Error::config(format!(
            "axial truncation {} too short: Gaussian tail {tail:.2e} > 1e-8 at τ = {t_end}",
            cfg.half_length
        )));
    }
    if !(a > cfg.tau0) {
        return Err(Error::config(
            "calibration time must follow the Dirac start time",
        ));
    }
    let grid = Arc::new(Grid::tunnel(cfg.half_length, cfg.n1, cfg.m_perp)?);
    let phi = dirichlet_ground_state(EigenDomain::Interval, 2 * cfg.m_perp)?;
    let sub = TunnelSubsolution::new(phi.clone(), 16);
    let absorption = match cfg.case {
        TunnelCase::Subcritical => Absorption::Constant(1.0),
        TunnelCase::Supercritical { gamma } => Absorption::TunnelWeight { gamma },
    };
    let pde = PdeSpec {
        drift: Drift::None,
        absorption,
        p: cfg.p,
        reaction: ReactionScheme::ExactFlow,
        diffusion: DiffusionScheme::LineSplit,
    };
    let mut stepper = Stepper::new(grid.clone(), pde, cfg.dt, cfg.tau0, t_end)?;
    let opts = RunOptions::new(cfg.dt);
    let start = match cfg.start {
        DiracStart::Kernel => dirac_family(cfg.k, grid.clone(), cfg.tau0, &[0.0, 0.0])?,
        DiracStart::PathAbsorbed => absorbed_dirac(
            cfg.k,
            grid.clone(),
            cfg.tau0,
            &[0.0, 0.0],
            &stepper.pde().absorption,
            cfg.p,
        )?,
    };
    let probe = Probe::Point(vec![0.0, 0.0]);
    let early = evolve(&mut stepper, start, a, &probe, &opts)?;

    let (nx, ny) = grid.shape();
    let phi_nodes: Vec<f64> = (0..ny)
        .map(|j| phi.eval(&[grid.axis(1).coord(j)]).max(0.0))
        .collect();
    let half = std::f64::consts::FRAC_PI_2;
    let mut ratio = f64::INFINITY;
    for i in 0..nx {
        let x = grid.axis(0).coord(i);
        if x.abs() >= half {
            continue;
        }
        for (j, &ph) in phi_nodes.iter().enumerate() {
            if ph > 0.0 {
                ratio = ratio.min(early.final_field.value(grid.index(i, j)) / (x.cos() * ph));
            }
        }
    }
    let c = cfg.safety * ratio.min(1.0);
    if !(c > 0.0) {
        return Err(Error::Numerical {
            msg: "tunnel solution vanished on the support of the subsolution".into(),
            trace: vec![ratio],
        });
    }

    let lambda = phi.lambda;
    let mut margin = f64::INFINITY;
    let mut checked = 0;
    let late = evolve_with(
        &mut stepper,
        early.final_field.clone(),
        t_end,
        &probe,
        &opts,
        |f| {
            let tau = f.time - a;
            if tau <= 0.0 {
                return Ok(());
            }
            let decay = (-(lambda + 1.0) * tau).exp();
            for i in 0..nx {
                let axial = sub.axial(grid.axis(0).coord(i), tau);
                for (j, &ph) in phi_nodes.iter().enumerate() {
                    let w = f.value(grid.index(i, j));
                    margin = margin.min(w - c * decay * ph * axial);
                }
            }
            checked += 1;
            Ok(())
        },
    )?;
    let mut run = early;
    run.probes.extend(late.probes);
    run.events.extend(late.events);
    run.diverged |= late.diverged;
    run.final_field = late.final_field;
    Ok(TunnelRun {
        run,
        a,
        c,
        lambda,
        phi_centre: phi.eval(&[0.0]),
        conformance_margin: margin,
        checked_levels: checked,
        subsolution: sub,
        case: cfg.case,
        p: cfg.p,
    })
}

impl TunnelRun {
    /// Exponent of `ε` and amplitude of `ℓ` in the scaling `v = ε^{-e} e^{L} w`.
    fn scaling(&self, eps: f64, profile: &DecayProfile) -> Result<(f64, f64)> {
        let q = self.p - 1.0;
        let ell = profile.eval(eps)?;
        Ok(match self.case {
            TunnelCase::Subcritical => (2.0 / q, ell / q),
            TunnelCase::Supercritical { gamma } => {
                ((2.0 + gamma) / q, (ell - gamma * eps.ln()) / q)
            }
        })
    }

    /// `ln` of the certified floor `c ε^{-e} e^{L} e^{-λ-1} φ(0) (4π)^{-1/2}
    /// e^{-x²/(2ε²)} ∫ e^{-ζ²/2} cos ζ dζ` at `(x_1, 0, (a+1)ε²)`.
    pub fn ln_floor(&self, x1: f64, eps: f64, profile: &DecayProfile) -> Result<f64> {
        let (e, l) = self.scaling(eps, profile)?;
        let k0 = (-self.lambda - 1.0).exp() * self.phi_centre / (4.0 * std::f64::consts::PI).sqrt();
        Ok((self.c * k0).ln() - e * eps.ln() + l + self.subsolution.overlap_floor(x1 / eps).ln())
    }

    /// Half-width of the region where the certified floor exceeds `level`.
    pub fn half_width(&self, eps: f64, profile: &DecayProfile, level: f64) -> Result<HalfWidth> {
        let q = self.p - 1.0;
        let delta = half_width_threshold(eps, profile.eval(eps)?, q);
        let base = self.ln_floor(0.0, eps, profile)? - level.ln();
        // ln floor(x) = ln floor(0) - x²/(2ε²).
        let measured = if base > 0.0 {
            eps * (2.0 * base).sqrt()
        } else {
            0.0
        };
        Ok(HalfWidth {
            eps,
            delta,
            measured,
            level,
            ln_floor_inner: self.ln_floor(0.5 * measured, eps, profile)?,
        })
    }
}

/// `δ = √(2 ε² ℓ / (q - 1))`.
pub fn half_width_threshold(eps: f64, ell: f64, q_minus_one: f64) -> f64 {
    (2.0 * eps * eps * ell / q_minus_one).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::DecayProfile;

    #[test]
    fn delta_arithmetic() {
        let ell = DecayProfile::inverse_square(8.0)
            .unwrap()
            .eval(0.1)
            .unwrap();
        assert!((half_width_threshold(0.1, ell, 1.0) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn restart_saturates_on_large_data() {
        let g = Arc::new(Grid::interval(-1.0, 1.0, 199).unwrap());
        let u = Field::from_fn(g, 0.3, |_| 50.0);
        let r = restart_from_mass(&u, &[0.0], 2.0, &[0.1, 0.2]).unwrap();
        let count = r.field.values.iter().filter(|v| **v > 0.0).count() as f64;
        assert!((r.m * count * 0.01 - 2.0).abs() < 1e-9);
        assert!(r
            .field
            .values
            .iter()
            .all(|v| *v == 0.0 || (*v - r.m).abs() < 1e-12));
        let wider = restart_from_mass(&u, &[0.0], 2.0, &[0.2]).unwrap();
        assert!(r.m > wider.m);
    }

    #[test]
    fn restart_infeasible_and_zero() {
        let g = Arc::new(Grid::interval(-1.0, 1.0, 99).unwrap());
        let u = Field::from_fn(g, 0.3, |_| 1.0);
        assert!(matches!(
            restart_from_mass(&u, &[0.0], 10.0, &[0.1, 0.5]),
            Err(Error::InfeasibleRestart { .. })
        ));
        assert_eq!(restart_from_mass(&u, &[0.0], 0.0, &[0.1]).unwrap().m, 0.0);
    }

    #[test]
    fn probe_rows_match_steps() {
        let g = Arc::new(Grid::interval(-2.0, 2.0, 199).unwrap());
        let curve = Arc::new(Curve::straight(&[0.5], 0.2, 21).unwrap());
        let pot = Arc::new(Potential::parabolic(
            DecayProfile::inverse_square(0.1).unwrap(),
            curve.clone(),
        ));
        let cfg = UkConfig {
            tau0: 5e-3,
            dt: 2e-3,
            ..Default::default()
        };
        let r = solve_uk(10.0, curve, pot, 2.0, 0.2, g, &cfg).unwrap();
        assert_eq!(r.steps(), ((0.2 - 5e-3) / 2e-3f64).ceil() as usize);
        assert!(r.probes.iter().all(|p| p.probe.is_finite()));
        assert_eq!(r.curve_hits.len(), 20);
        let mut buf = Vec::new();
        r.write_probe_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap().lines().count(),
            r.steps() + 1
        );
    }
}
