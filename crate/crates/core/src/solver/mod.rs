//! Finite-difference time stepping for
//! `u_t - Δu + <c(t), ∇u> + h u^p = 0`.
//!
//! One step is a Lie splitting: explicit first-order upwind drift, the
//! absorption flow `u' = -h u^p` with `h` frozen at the start of the step,
//! then backward-Euler diffusion (tridiagonal solves in 1D, locally
//! one-dimensional line solves in 2D, cyclic solves on periodic axes).
//!
//! The absorption sub-step integrates the scalar ODE exactly by default,
//! which keeps the step monotone and positivity preserving for any
//! `h u^{p-1}`; a forward-Euler variant with the usual rate restriction is
//! available for comparison.

mod runs;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::barriers::heat_kernel;
use crate::error::{Error, Result};
use crate::geometry::{Curve, CurveKind};
use crate::linalg::{conjugate_gradient, solve_cyclic_tridiagonal, solve_tridiagonal};
use crate::mesh::{Field, Grid};
use crate::potential::Potential;

pub use runs::*;

/// Explicit sub-steps must satisfy `Δt (Σ|c_d|/h_d + rate) <= STABILITY_MARGIN`.
pub const STABILITY_MARGIN: f64 = 0.5;
/// Default divergence ceiling for blow-up bookkeeping.
pub const DEFAULT_CEILING: f64 = 1e12;

/// Transport velocity `c(t)` of the drift term `<c, ∇u>`.
#[derive(Debug, Clone)]
pub enum Drift {
    None,
    Constant(Vec<f64>),
    /// `space_scale * x'(time_scale * t)` of a graph-over-t curve: the moving
    /// frame (`1, 1`) or the rescaled frame (`ε, ε²`).
    Curve {
        curve: Arc<Curve>,
        space_scale: f64,
        time_scale: f64,
    },
}

impl Drift {
    pub fn velocity(&self, t: f64, dim: usize) -> Result<Vec<f64>> {
        match self {
            Drift::None => Ok(vec![0.0; dim]),
            Drift::Constant(v) => Ok(v.clone()),
            Drift::Curve {
                curve,
                space_scale,
                time_scale,
            } => {
                let s = (time_scale * t).clamp(0.0, curve.horizon());
                Ok(curve
                    .velocity_at(s)?
                    .into_iter()
                    .map(|c| c * space_scale)
                    .collect())
            }
        }
    }

    /// Upper bound of `|c(t)|` on `[t0, t1]`.
    pub fn speed_bound(&self, t0: f64, t1: f64) -> Result<f64> {
        match self {
            Drift::None => Ok(0.0),
            Drift::Constant(v) => Ok(v.iter().map(|c| c * c).sum::<f64>().sqrt()),
            Drift::Curve {
                curve,
                space_scale,
                time_scale,
            } => Ok(space_scale
                * curve.speed_sup(
                    (time_scale * t0).max(0.0),
                    (time_scale * t1).min(curve.horizon()),
                )?),
        }
    }
}

/// Absorption coefficient `h`.
#[derive(Debug, Clone)]
pub enum Absorption {
    None,
    Constant(f64),
    /// `h(x, t)`, or `h(y + x(t), t)` when a frame curve is given (moving
    /// frame coordinates `y`).
    Potential {
        potential: Arc<Potential>,
        frame: Option<Arc<Curve>>,
    },
    /// `max(sqrt(t), |x'|)^γ` on tunnel grids (second coordinate is `x'`).
    TunnelWeight {
        gamma: f64,
    },
}

impl Absorption {
    fn is_time_dependent(&self) -> bool {
        matches!(
            self,
            Absorption::Potential { .. } | Absorption::TunnelWeight { .. }
        )
    }

    /// `h` at a single point, in moving-frame coordinates when a frame is set.
    pub fn at(&self, x: &[f64], t: f64) -> Result<f64> {
        match self {
            Absorption::None => Ok(0.0),
            Absorption::Constant(b) => Ok(*b),
            Absorption::TunnelWeight { gamma } => {
                let xp = x.get(1).copied().unwrap_or(0.0).abs();
                Ok(t.max(0.0).sqrt().max(xp).powf(*gamma))
            }
            Absorption::Potential { potential, frame } => match frame {
                Some(c) => {
                    let shift = c.position_at(t.clamp(0.0, c.horizon()))?;
                    let y: Vec<f64> = x
                        .iter()
                        .enumerate()
                        .map(|(d, v)| v + shift.get(d).copied().unwrap_or(0.0))
                        .collect();
                    potential.eval_h(&y, t)
                }
                None => potential.eval_h(x, t),
            },
        }
    }

    /// Coefficients at every node and the number of underflowed evaluations.
    pub fn coefficients(&self, grid: &Grid, t: f64) -> Result<(Vec<f64>, usize)> {
        let n = grid.len();
        match self {
            Absorption::None => Ok((vec![0.0; n], 0)),
            Absorption::Constant(b) => Ok((vec![*b; n], 0)),
            Absorption::TunnelWeight { gamma } => {
                let st = t.max(0.0).sqrt();
                let v = (0..n)
                    .map(|i| {
                        let c = grid.coords(i);
                        st.max(c[1].abs()).powf(*gamma)
                    })
                    .collect();
                Ok((v, 0))
            }
            Absorption::Potential { potential, frame } => {
                let shift = match frame {
                    Some(c) => c.position_at(t.clamp(0.0, c.horizon()))?,
                    None => vec![0.0; grid.dim()],
                };
                let mut under = 0;
                let mut v = Vec::with_capacity(n);
                let mut x = vec![0.0; grid.dim()];
                for i in 0..n {
                    if !grid.is_active(i) {
                        v.push(0.0);
                        continue;
                    }
                    let c = grid.coords(i);
                    for d in 0..grid.dim() {
                        x[d] = c[d] + shift.get(d).copied().unwrap_or(0.0);
                    }
                    let hv = potential.eval_h_flagged(&x, t)?;
                    under += hv.underflow as usize;
                    v.push(hv.value);
                }
                Ok((v, under))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReactionScheme {
    /// Exact solution of `u' = -h u^p` over the step.
    #[default]
    ExactFlow,
    ForwardEuler,
}

/// How the backward-Euler diffusion system is solved in 2D.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiffusionScheme {
    /// Locally one-dimensional line solves, one axis after the other.
    #[default]
    LineSplit,
    /// The unsplit five-point system, solved by conjugate gradients. The
    /// discrete ground state is then an exact eigenvector of the step.
    FullImplicit,
}

/// Relative residual for the unsplit diffusion solve.
const IMPLICIT_TOL: f64 = 1e-13;

#[derive(Debug, Clone)]
pub struct PdeSpec {
    pub drift: Drift,
    pub absorption: Absorption,
    pub p: f64,
    pub reaction: ReactionScheme,
    pub diffusion: DiffusionScheme,
}

impl PdeSpec {
    pub fn heat() -> Self {
        Self {
            drift: Drift::None,
            absorption: Absorption::None,
            p: 2.0,
            reaction: ReactionScheme::ExactFlow,
            diffusion: DiffusionScheme::LineSplit,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(Error::config(format!(
                "absorption exponent must exceed 1, got {}",
                self.p
            )));
        }
        Ok(())
    }
}

/// Outcome of a single step.
#[derive(Debug, Clone, Copy, Default)]
pub struct StepStats {
    pub underflow: usize,
}

/// Stepping state for one run: the grid, the equation, reusable buffers and
/// cached absorption coefficients.
pub struct Stepper {
    grid: Arc<Grid>,
    pde: PdeSpec,
    dt: f64,
    cached_h: Option<Vec<f64>>,
    scratch: Vec<f64>,
    stencil: Option<CompactStencil>,
}

impl Stepper {
    /// Checks the drift restriction on `[t0, t1]` once, before stepping.
    pub fn new(grid: Arc<Grid>, pde: PdeSpec, dt: f64, t0: f64, t1: f64) -> Result<Self> {
        pde.validate()?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::config(format!(
                "time step must be positive, got {dt}"
            )));
        }
        let speed = pde.drift.speed_bound(t0, t1)?;
        let courant: f64 = grid.axes().iter().map(|a| speed / a.h).sum::<f64>() * dt;
        if courant > STABILITY_MARGIN {
            return Err(Error::config(format!(
                "drift stability margin violated: dt * sum |c|/h = {courant:.3e} > {STABILITY_MARGIN}"
            )));
        }
        let n = grid.len();
        Ok(Self {
            grid,
            pde,
            dt,
            cached_h: None,
            scratch: vec![0.0; n],
            stencil: None,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn pde(&self) -> &PdeSpec {
        &self.pde
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// Advance `field` by `dt` (the stepper's step unless overridden) in place.
    pub fn step(&mut self, field: &mut Field, dt: Option<f64>) -> Result<StepStats> {
        let dt = dt.unwrap_or(self.dt);
        let t = field.time;
        let mut stats = StepStats::default();
        self.drift_substep(field, t, dt)?;
        stats.underflow = self.absorption_substep(field, t, dt)?;
        self.diffusion_substep(field, dt)?;
        field.time = t + dt;
        field.renormalize();
        Ok(stats)
    }

    fn drift_substep(&mut self, field: &mut Field, t: f64, dt: f64) -> Result<()> {
        if matches!(self.pde.drift, Drift::None) {
            return Ok(());
        }
        let grid = &self.grid;
        let c = self.pde.drift.velocity(t, grid.dim())?;
        if c.iter().all(|v| *v == 0.0) {
            return Ok(());
        }
        let u = &field.values;
        let out = &mut self.scratch;
        for idx in 0..grid.len() {
            if !grid.is_active(idx) {
                out[idx] = 0.0;
                continue;
            }
            let mut flux = 0.0;
            for (d, axis) in grid.axes().iter().enumerate() {
                let cd = c.get(d).copied().unwrap_or(0.0);
                if cd > 0.0 {
                    flux += cd * (u[idx] - grid.neighbour(u, idx, d, -1)) / axis.h;
                } else if cd < 0.0 {
                    flux += cd * (grid.neighbour(u, idx, d, 1) - u[idx]) / axis.h;
                }
            }
            out[idx] = u[idx] - dt * flux;
        }
        std::mem::swap(&mut field.values, &mut self.scratch);
        Ok(())
    }

    fn absorption_substep(&mut self, field: &mut Field, t: f64, dt: f64) -> Result<usize> {
        if matches!(self.pde.absorption, Absorption::None) {
            return Ok(0);
        }
        let (h, under) = if self.pde.absorption.is_time_dependent() {
            self.pde.absorption.coefficients(&self.grid, t)?
        } else {
            if self.cached_h.is_none() {
                self.cached_h = Some(self.pde.absorption.coefficients(&self.grid, t)?.0);
            }
            (self.cached_h.clone().unwrap(), 0)
        };
        let p = self.pde.p;
        let q = p - 1.0;
        let scale_q = (q * field.log_scale).exp();
        match self.pde.reaction {
            ReactionScheme::ExactFlow => {
                for (u, &hi) in field.values.iter_mut().zip(&h) {
                    if *u > 0.0 && hi > 0.0 {
                        let a = q * dt * hi * scale_q * u.powf(q);
                        *u /= (1.0 + a).powf(1.0 / q);
                    }
                }
            }
            ReactionScheme::ForwardEuler => {
                let mut worst = 0.0f64;
                for (u, &hi) in field.values.iter().zip(&h) {
                    if *u > 0.0 {
                        worst = worst.max(hi * scale_q * u.powf(q));
                    }
                }
                if dt * worst > STABILITY_MARGIN {
                    return Err(Error::config(format!(
                        "reaction stability margin violated: dt * max h u^(p-1) = {:.3e}",
                        dt * worst
                    )));
                }
                for (u, &hi) in field.values.iter_mut().zip(&h) {
                    if *u > 0.0 {
                        *u -= dt * hi * scale_q * u.powf(p);
                    }
                }
            }
        }
        Ok(under)
    }

    fn diffusion_substep(&mut self, field: &mut Field, dt: f64) -> Result<()> {
        if self.pde.diffusion == DiffusionScheme::FullImplicit && self.grid.dim() == 2 {
            return self.implicit_diffusion(field, dt);
        }
        let grid = self.grid.clone();
        let (nx, ny) = grid.shape();
        for d in 0..grid.dim() {
            let axis = grid.axis(d);
            let r = dt / (axis.h * axis.h);
            let (lines, len) = if d == 0 { (ny, nx) } else { (nx, ny) };
            let mut line = Vec::with_capacity(len);
            let mut idxs = Vec::with_capacity(len);
            for l in 0..lines {
                let index = |k: usize| {
                    if d == 0 {
                        grid.index(k, l)
                    } else {
                        grid.index(l, k)
                    }
                };
                if axis.periodic {
                    idxs.clear();
                    line.clear();
                    for k in 0..len {
                        idxs.push(index(k));
                        line.push(field.values[index(k)]);
                    }
                    let lower = vec![-r; len];
                    let upper = vec![-r; len];
                    let diag = vec![1.0 + 2.0 * r; len];
                    solve_cyclic_tridiagonal(&lower, &diag, &upper, &mut line)?;
                    for (&i, &v) in idxs.iter().zip(&line) {
                        field.values[i] = v;
                    }
                    continue;
                }
                let mut k = 0;
                while k < len {
                    if !grid.is_active(index(k)) {
                        k += 1;
                        continue;
                    }
                    idxs.clear();
                    line.clear();
                    while k < len && grid.is_active(index(k)) {
                        idxs.push(index(k));
                        line.push(field.values[index(k)]);
                        k += 1;
                    }
                    let m = line.len();
                    let lower = vec![-r; m];
                    let upper = vec![-r; m];
                    let diag = vec![1.0 + 2.0 * r; m];
                    solve_tridiagonal(&lower, &diag, &upper, &mut line)?;
                    for (&i, &v) in idxs.iter().zip(&line) {
                        field.values[i] = v;
                    }
                }
            }
        }
        Ok(())
    }
}

impl Stepper {
    fn implicit_diffusion(&mut self, field: &mut Field, dt: f64) -> Result<()> {
        if self.stencil.is_none() {
            self.stencil = Some(CompactStencil::new(&self.grid)?);
        }
        let st = self.stencil.as_ref().unwrap();
        let diag = 1.0 + dt * st.inv_h2.iter().map(|w| 2.0 * w).sum::<f64>();
        let apply = |x: &[f64], out: &mut [f64]| {
            for (k, nb) in st.neighbours.iter().enumerate() {
                let mut acc = diag * x[k];
                for (slot, &m) in nb.iter().enumerate() {
                    if m != usize::MAX {
                        acc -= dt * st.inv_h2[slot / 2] * x[m];
                    }
                }
                out[k] = acc;
            }
        };
        let b: Vec<f64> = st.active.iter().map(|&i| field.values[i]).collect();
        let mut x = b.clone();
        conjugate_gradient(apply, &b, &mut x, IMPLICIT_TOL, 10 * b.len())?;
        for (&i, v) in st.active.iter().zip(x) {
            field.values[i] = v;
        }
        Ok(())
    }
}

/// Active nodes of a 2D grid with their four neighbours in compressed
/// numbering (`usize::MAX` where the neighbour is outside or masked).
struct CompactStencil {
    active: Vec<usize>,
    neighbours: Vec<[usize; 4]>,
    inv_h2: [f64; 2],
}

impl CompactStencil {
    fn new(grid: &Grid) -> Result<Self> {
        if grid.axes().iter().any(|a| a.periodic) {
            return Err(Error::config(
                "unsplit diffusion does not support periodic axes",
            ));
        }
        let active: Vec<usize> = (0..grid.len()).filter(|&i| grid.is_active(i)).collect();
        let mut compressed = vec![usize::MAX; grid.len()];
        for (k, &i) in active.iter().enumerate() {
            compressed[i] = k;
        }
        let neighbours = active
            .iter()
            .map(|&i| {
                let mut nb = [usize::MAX; 4];
                for d in 0..2 {
                    for (s, step) in [-1isize, 1].into_iter().enumerate() {
                        if let Some(j) = grid.neighbour_index(i, d, step) {
                            nb[2 * d + s] = compressed[j];
                        }
                    }
                }
                nb
            })
            .collect();
        let inv_h2 = [
            1.0 / (grid.axis(0).h * grid.axis(0).h),
            1.0 / (grid.axis(1).h * grid.axis(1).h),
        ];
        Ok(Self {
            active,
            neighbours,
            inv_h2,
        })
    }
}

/// One IMEX step of `field` under `pde`, with the drift restriction checked
/// at the current time.
pub fn step_imex(field: &Field, pde: &PdeSpec, dt: f64) -> Result<Field> {
    let t = field.time;
    let mut stepper = Stepper::new(field.grid().clone(), pde.clone(), dt, t, t + dt)?;
    let mut next = field.clone();
    stepper.step(&mut next, None)?;
    Ok(next)
}

/// `k G(x - centre, τ0)` on the grid: a Dirac mass `k δ_centre` mollified
/// by the heat flow up to the start time `τ0`.
pub fn dirac_family(k: f64, grid: Arc<Grid>, tau0: f64, centre: &[f64]) -> Result<Field> {
    if !(tau0 > 0.0) {
        return Err(Error::config(format!(
            "Dirac start time must be positive, got {tau0}"
        )));
    }
    let hmax = grid.axes().iter().map(|a| a.h).fold(0.0, f64::max);
    if (4.0 * tau0).sqrt() < 4.0 * hmax {
        return Err(Error::config(format!(
            "kernel under-resolved: sqrt(4 τ0) = {:.3e} < 4h = {:.3e}",
            (4.0 * tau0).sqrt(),
            4.0 * hmax
        )));
    }
    if k == 0.0 {
        return Ok(Field::zeros(grid, tau0));
    }
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::config(format!(
            "Dirac mass must be finite and nonnegative, got {k}"
        )));
    }
    let c = centre.to_vec();
    let mut f = Field::from_fn(grid, tau0, |x| heat_kernel(x, &c, tau0).unwrap_or(0.0));
    f.log_scale = k.ln();
    f.renormalize();
    Ok(f)
}

/// How a Dirac initial mass is turned into grid data at `τ0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiracStart {
    /// Pure heat mollification `k G(·, τ0)`.
    #[default]
    Kernel,
    /// Heat mollification damped by the absorption felt along the straight
    /// heat paths from the centre, see [`absorbed_dirac`].
    PathAbsorbed,
}

/// Nodes per panel and panels of the log-time quadrature in [`absorbed_dirac`].
const PATH_ORDER: usize = 8;
const PATH_PANELS: usize = 40;
/// Log-time depth `ln(τ0 / s_min)` of the path integral.
const PATH_DEPTH: f64 = 80.0;

/// `k G(x - c, τ0) (1 + (p-1) k^{p-1} I(x))^{-1/(p-1)}` with
/// `I(x) = ∫_0^{τ0} h(y(s), s) G(y(s), s)^{p-1} ds` along `y(s) = c + (x - c) s/τ0`.
///
/// Mass reaching `x` at `τ0` travelled (to leading order) along that path, so
/// this is the exact ODE flow of the absorption along it. Unlike the pure
/// kernel, the data stays bounded as `k → ∞` whenever the singularity of `I`
/// at `s = 0` is integrable, which is what makes a `k` ladder settle.
pub fn absorbed_dirac(
    k: f64,
    grid: Arc<Grid>,
    tau0: f64,
    centre: &[f64],
    absorption: &Absorption,
    p: f64,
) -> Result<Field> {
    let mut f = dirac_family(k, grid.clone(), tau0, centre)?;
    if k == 0.0 || matches!(absorption, Absorption::None) {
        return Ok(f);
    }
    if !(p > 1.0) {
        return Err(Error::config(format!(
            "absorption exponent must exceed 1, got {p}"
        )));
    }
    let gl = crate::quadrature::GaussLegendre::new(PATH_ORDER);
    let dim = grid.dim() as f64;
    let q = p - 1.0;
    let ln_kq = q * k.ln();
    let err = std::cell::RefCell::new(None);
    for i in 0..grid.len() {
        if !grid.is_active(i) || f.values[i] == 0.0 {
            continue;
        }
        let x = grid.point(i);
        let r2: f64 = x.iter().zip(centre).map(|(a, b)| (a - b) * (a - b)).sum();
        let integral = gl.integrate_composite(0.0, PATH_DEPTH, PATH_PANELS, |w| {
            let s = tau0 * (-w).exp();
            let y: Vec<f64> = x
                .iter()
                .zip(centre)
                .map(|(a, c)| c + (a - c) * s / tau0)
                .collect();
            let hv = match absorption.at(&y, s) {
                Ok(v) => v,
                Err(e) => {
                    err.borrow_mut().get_or_insert(e);
                    0.0
                }
            };
            if hv == 0.0 {
                return 0.0;
            }
            let ln_g =
                -0.5 * dim * (4.0 * std::f64::consts::PI * s).ln() - r2 * s / (4.0 * tau0 * tau0);
            hv * (q * ln_g).exp() * s
        });
        // ln(1 + q k^q I), kept finite when k^q I overflows.
        let ln_damp = if integral > 0.0 {
            let z = q.ln() + ln_kq + integral.ln();
            if z > 30.0 {
                z
            } else {
                z.exp().ln_1p()
            }
        } else {
            0.0
        };
        f.values[i] *= (-ln_damp / q).exp();
    }
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    f.renormalize();
    Ok(f)
}

/// Ordered ladder of Dirac masses standing in for `k → ∞`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KLadder(pub Vec<f64>);

impl KLadder {
    pub fn decades(lo_exp: i32, hi_exp: i32) -> Self {
        Self((lo_exp..=hi_exp).map(|e| 10f64.powi(e)).collect())
    }

    /// The value used for the "infinite mass" marker: the top of the ladder.
    pub fn infinite_marker(&self) -> Option<f64> {
        self.0
            .iter()
            .copied()
            .fold(None, |m, k| Some(m.map_or(k, |m: f64| m.max(k))))
    }
}

pub(crate) fn require_graph(curve: &Curve) -> Result<()> {
    if curve.kind() != CurveKind::GraphOverT {
        return Err(Error::config("this run needs a graph-over-t curve"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::barriers::decayed_ode;

    #[test]
    fn zero_field_stays_zero() {
        let g = Arc::new(Grid::interval(-1.0, 1.0, 31).unwrap());
        let f = Field::zeros(g, 0.0);
        let pde = PdeSpec {
            drift: Drift::Constant(vec![1.0]),
            absorption: Absorption::Constant(1.0),
            p: 2.0,
            reaction: ReactionScheme::ExactFlow,
            diffusion: DiffusionScheme::LineSplit,
        };
        let next = step_imex(&f, &pde, 1e-3).unwrap();
        assert!(next.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn constant_data_follows_decayed_ode() {
        let g = Arc::new(Grid::periodic_interval(0.0, 1.0, 16).unwrap());
        let mut f = Field::from_fn(g.clone(), 0.0, |_| 3.0);
        let pde = PdeSpec {
            drift: Drift::None,
            absorption: Absorption::Constant(0.7),
            p: 2.5,
            reaction: ReactionScheme::ExactFlow,
            diffusion: DiffusionScheme::LineSplit,
        };
        let mut s = Stepper::new(g, pde, 0.01, 0.0, 1.0).unwrap();
        for _ in 0..100 {
            s.step(&mut f, None).unwrap();
        }
        let exact = decayed_ode(3.0, 0.7, 2.5, f.time);
        for i in 0..16 {
            assert!((f.value(i) - exact).abs() < 1e-12 * exact);
        }
    }

    #[test]
    fn drift_restriction_enforced() {
        let g = Arc::new(Grid::interval(-1.0, 1.0, 99).unwrap());
        let pde = PdeSpec {
            drift: Drift::Constant(vec![100.0]),
            ..PdeSpec::heat()
        };
        assert!(matches!(
            Stepper::new(g, pde, 1e-2, 0.0, 1.0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn dirac_mass_and_resolution() {
        let g = Arc::new(Grid::interval(-3.0, 3.0, 599).unwrap());
        let f = dirac_family(5.0, g.clone(), 0.01, &[0.0]).unwrap();
        assert!((f.integral() / 5.0 - 1.0).abs() < 1e-4);
        assert!(dirac_family(5.0, g.clone(), 1e-4, &[0.0]).is_err());
        assert!(dirac_family(0.0, g, 0.01, &[0.0])
            .unwrap()
            .values
            .iter()
            .all(|v| *v == 0.0));
    }
}
