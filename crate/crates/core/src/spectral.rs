//! Dirichlet ground states, the drift-shift identity, decay envelopes of the
//! linear flow and the blow-up functionals used to read off propagation.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Curve;
use crate::linalg::{conjugate_gradient, dot, solve_tridiagonal};
use crate::mesh::{Axis, DomainKind, Field, Grid};
use crate::potential::DecayProfile;

/// Stop inverse iteration once the eigenvalue moves by less than this.
pub const EIGEN_INCREMENT_TOL: f64 = 1e-12;
pub const EIGEN_MAX_ITER: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "domain")]
pub enum EigenDomain {
    /// `(-1, 1)` with `n` cells.
    Interval,
    /// Unit ball of `R^dim`, reduced to the radial problem with `n` cells.
    Ball { dim: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    /// Values at the nodes of a tensor grid.
    Grid,
    /// Radial profile at cell centres `(i + 1/2) h`, `h = 1/n`.
    Radial { dim: usize },
}

/// First Dirichlet eigenpair, eigenfunction normalized to maximum 1.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub lambda: f64,
    pub psi: Field,
    pub representation: Representation,
    /// Inverse-iteration steps used.
    pub iterations: usize,
}

impl EigenPair {
    /// `ψ(x)`; zero outside the unit ball.
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self.representation {
            Representation::Grid => self.psi.sample(x),
            Representation::Radial { .. } => {
                self.eval_radial(x.iter().map(|c| c * c).sum::<f64>().sqrt())
            }
        }
    }

    fn eval_radial(&self, r: f64) -> f64 {
        let axis = self.psi.grid().axis(0);
        let u = &self.psi.values;
        let m = u.len();
        let h = axis.h;
        if r >= 1.0 {
            return 0.0;
        }
        let r0 = 0.5 * h;
        if r <= r0 {
            // even extrapolation through the two innermost centres
            let r1 = 1.5 * h;
            return u[0] + (u[1] - u[0]) * (r * r - r0 * r0) / (r1 * r1 - r0 * r0);
        }
        let last = (m as f64 - 0.5) * h;
        if r >= last {
            return u[m - 1] * (1.0 - r) / (1.0 - last);
        }
        let s = (r - r0) / h;
        let i = (s.floor() as usize).min(m - 2);
        let f = s - i as f64;
        u[i] * (1.0 - f) + u[i + 1] * f
    }

    /// Rayleigh quotient of the stored eigenvector for the discrete operator
    /// it was computed with.
    pub fn rayleigh_quotient(&self) -> f64 {
        match self.representation {
            Representation::Grid => {
                let g = self.psi.grid();
                let mut lap = vec![0.0; g.len()];
                g.laplacian(&self.psi.values, &mut lap);
                -dot(&self.psi.values, &lap) / dot(&self.psi.values, &self.psi.values)
            }
            Representation::Radial { dim } => {
                let op = RadialOperator::new(dim, self.psi.len_nodes());
                let au = op.apply(&self.psi.values);
                dot(&self.psi.values, &au) / op.weighted_dot(&self.psi.values, &self.psi.values)
            }
        }
    }
}

trait NodeCount {
    fn len_nodes(&self) -> usize;
}

impl NodeCount for Field {
    fn len_nodes(&self) -> usize {
        self.values.len()
    }
}

/// Cell-centred finite-volume discretization of `-r^{1-N} (r^{N-1} u')'` on
/// `(0, 1)` with `u'(0) = 0` and `u(1) = 0`, as the symmetric pencil `(A, M)`.
struct RadialOperator {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    mass: Vec<f64>,
}

impl RadialOperator {
    fn new(dim: usize, m: usize) -> Self {
        let h = 1.0 / m as f64;
        let w = |r: f64| r.powi(dim as i32 - 1);
        let face = |i: usize| w(i as f64 * h) / (h * h);
        let mut lower = vec![0.0; m];
        let mut diag = vec![0.0; m];
        let mut upper = vec![0.0; m];
        let mass: Vec<f64> = (0..m).map(|i| w((i as f64 + 0.5) * h)).collect();
        for i in 0..m {
            let left = if i == 0 { 0.0 } else { face(i) };
            let right = face(i + 1);
            if i + 1 == m {
                // antisymmetric ghost puts the zero on the face r = 1
                diag[i] = left + 2.0 * right;
            } else {
                diag[i] = left + right;
                upper[i] = -right;
            }
            if i > 0 {
                lower[i] = -left;
            }
        }
        Self {
            lower,
            diag,
            upper,
            mass,
        }
    }

    fn apply(&self, u: &[f64]) -> Vec<f64> {
        let m = u.len();
        (0..m)
            .map(|i| {
                let mut v = self.diag[i] * u[i];
                if i > 0 {
                    v += self.lower[i] * u[i - 1];
                }
                if i + 1 < m {
                    v += self.upper[i] * u[i + 1];
                }
                v
            })
            .collect()
    }

    fn weighted_dot(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .zip(&self.mass)
            .map(|((x, y), w)| x * y * w)
            .sum()
    }
}

/// Generic inverse iteration. `solve` overwrites its argument `b` with
/// `A^{-1} b`; `rayleigh` returns the Rayleigh quotient of a vector.
fn inverse_iteration<S, R, B>(
    mut x: Vec<f64>,
    mut solve: S,
    rayleigh: R,
    rhs: B,
) -> Result<(f64, Vec<f64>, usize)>
where
    S: FnMut(&mut Vec<f64>) -> Result<()>,
    R: Fn(&[f64]) -> f64,
    B: Fn(&[f64]) -> Vec<f64>,
{
    let mut lambda = rayleigh(&x);
    let mut trace = vec![lambda];
    for it in 1..=EIGEN_MAX_ITER {
        let mut y = rhs(&x);
        solve(&mut y)?;
        let norm = dot(&y, &y).sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::Numerical {
                msg: "inverse iteration produced a degenerate iterate".into(),
                trace,
            });
        }
        for v in &mut y {
            *v /= norm;
        }
        x = y;
        let next = rayleigh(&x);
        trace.push(next);
        if (next - lambda).abs() < EIGEN_INCREMENT_TOL && it > 2 {
            return Ok((next, x, it));
        }
        lambda = next;
    }
    let tail = trace[trace.len().saturating_sub(8)..].to_vec();
    Err(Error::Numerical {
        msg: format!("inverse iteration did not converge in {EIGEN_MAX_ITER} steps"),
        trace: tail,
    })
}

fn normalize_positive_max(values: &mut [f64]) {
    let sum: f64 = values.iter().sum();
    let sign = if sum < 0.0 { -1.0 } else { 1.0 };
    let m = values.iter().fold(0.0f64, |m, v| m.max(sign * v));
    for v in values.iter_mut() {
        *v *= sign / m;
    }
}

/// First Dirichlet eigenpair of the unit interval or ball, `n >= 16` cells
/// across (interval) or along the radius (ball).
pub fn dirichlet_ground_state(domain: EigenDomain, n: usize) -> Result<EigenPair> {
    if n < 16 {
        return Err(Error::config(format!("eigen grid needs n >= 16, got {n}")));
    }
    match domain {
        EigenDomain::Interval | EigenDomain::Ball { dim: 1 } => {
            let grid = Arc::new(Grid::new(
                DomainKind::Ball,
                vec![Axis::dirichlet(-1.0, 1.0, n - 1)],
            )?);
            ground_state_on_grid(grid)
        }
        EigenDomain::Ball { dim } if dim >= 2 => radial_ground_state(dim, n),
        EigenDomain::Ball { dim } => Err(Error::config(format!(
            "ball dimension must be >= 1, got {dim}"
        ))),
    }
}

fn radial_ground_state(dim: usize, m: usize) -> Result<EigenPair> {
    let op = RadialOperator::new(dim, m);
    let h = 1.0 / m as f64;
    let init: Vec<f64> = (0..m)
        .map(|i| 1.0 - ((i as f64 + 0.5) * h).powi(2))
        .collect();
    let rayleigh = |u: &[f64]| dot(u, &op.apply(u)) / op.weighted_dot(u, u);
    let (lambda, mut u, iterations) = inverse_iteration(
        init,
        |b| solve_tridiagonal(&op.lower, &op.diag, &op.upper, b),
        rayleigh,
        |u| u.iter().zip(&op.mass).map(|(a, w)| a * w).collect(),
    )?;
    normalize_positive_max(&mut u);
    let axis = Axis {
        lo: 0.5 * h,
        h,
        n: m,
        periodic: false,
    };
    let grid = Arc::new(Grid::new(DomainKind::Ball, vec![axis])?);
    let mut pair = EigenPair {
        lambda,
        psi: Field::from_values(grid, 0.0, u)?,
        representation: Representation::Radial { dim },
        iterations,
    };
    // normalize by the centre value, the true maximum of the radial profile
    let centre = pair.eval_radial(0.0);
    for v in &mut pair.psi.values {
        *v /= centre;
    }
    Ok(pair)
}

/// First eigenpair of the grid's own discrete Dirichlet Laplacian (three or
/// five point stencil, masks respected).
pub fn ground_state_on_grid(grid: Arc<Grid>) -> Result<EigenPair> {
    if grid.axes().iter().any(|a| a.periodic) {
        return Err(Error::config("Dirichlet ground state on a periodic grid"));
    }
    let init: Vec<f64> = (0..grid.len())
        .map(|idx| {
            if !grid.is_active(idx) {
                return 0.0;
            }
            grid.axes()
                .iter()
                .zip(grid.coords(idx))
                .map(|(a, c)| {
                    let (lo, hi) = a.extent();
                    (c - lo) * (hi - c)
                })
                .product()
        })
        .collect();
    let g = grid.clone();
    let neg_lap = move |u: &[f64], out: &mut [f64]| {
        g.laplacian(u, out);
        for v in out.iter_mut() {
            *v = -*v;
        }
    };
    let rayleigh = |u: &[f64]| {
        let mut out = vec![0.0; u.len()];
        neg_lap(u, &mut out);
        dot(u, &out) / dot(u, u)
    };
    let (lambda, mut u, iterations) = if grid.dim() == 1 {
        let a = grid.axis(0);
        let n = a.n;
        let k = 1.0 / (a.h * a.h);
        let lower = vec![-k; n];
        let upper = vec![-k; n];
        let diag = vec![2.0 * k; n];
        inverse_iteration(
            init,
            |b| solve_tridiagonal(&lower, &diag, &upper, b),
            rayleigh,
            |u| u.to_vec(),
        )?
    } else {
        let mask: Vec<bool> = (0..grid.len()).map(|i| grid.is_active(i)).collect();
        inverse_iteration(
            init,
            |b| {
                let rhs = b.clone();
                let mut x = rhs.clone();
                conjugate_gradient(
                    |v, out| {
                        neg_lap(v, out);
                        for (o, &m) in out.iter_mut().zip(&mask) {
                            if !m {
                                *o = 0.0;
                            }
                        }
                    },
                    &rhs,
                    &mut x,
                    1e-14,
                    20 * grid.len(),
                )?;
                *b = x;
                Ok(())
            },
            rayleigh,
            |u| u.to_vec(),
        )?
    };
    normalize_positive_max(&mut u);
    Ok(EigenPair {
        lambda,
        psi: Field::from_values(grid, 0.0, u)?,
        representation: Representation::Grid,
        iterations,
    })
}

/// Eigenpair of `-Δ + <β, ∇>` obtained from a Laplacian ground state:
/// `λ_β = λ_0 + |β|²/4`, `ψ_β = e^{<β,x>/2} ψ_0` normalized to maximum 1.
#[derive(Debug, Clone)]
pub struct DriftEigenPair {
    pub lambda: f64,
    pub beta: Vec<f64>,
    pub base: EigenPair,
    /// Reciprocal of `max e^{<β,x>/2} ψ_0`.
    pub normalization: f64,
}

impl DriftEigenPair {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let bx: f64 = self.beta.iter().zip(x).map(|(b, c)| b * c).sum();
        (0.5 * bx).exp() * self.base.eval(x) * self.normalization
    }

    /// Values at the active nodes of `grid`.
    pub fn on_grid(&self, grid: Arc<Grid>) -> Field {
        Field::from_fn(grid, 0.0, |x| self.eval(x))
    }
}

pub fn drift_shift(beta: &[f64], base: &EigenPair) -> DriftEigenPair {
    let b2: f64 = beta.iter().map(|b| b * b).sum();
    let lambda = base.lambda + 0.25 * b2;
    let bnorm = b2.sqrt();
    let tilt = |x: &[f64]| {
        let bx: f64 = beta.iter().zip(x).map(|(b, c)| b * c).sum();
        (0.5 * bx).exp() * base.eval(x)
    };
    let max = match base.representation {
        Representation::Grid => {
            let g = base.psi.grid();
            (0..g.len())
                .filter(|&i| g.is_active(i))
                .map(|i| (0.5 * dot(beta, &g.point(i))).exp() * base.psi.value(i))
                .fold(0.0, f64::max)
        }
        Representation::Radial { dim } => {
            // the maximum lies on the ray through β
            let dir: Vec<f64> = if bnorm > 0.0 {
                beta.iter().map(|b| b / bnorm).collect()
            } else {
                let mut d = vec![0.0; dim.max(beta.len())];
                d[0] = 1.0;
                d
            };
            let samples = 8 * base.psi.values.len();
            (0..=samples)
                .map(|k| {
                    let s = k as f64 / samples as f64;
                    let x: Vec<f64> = dir.iter().map(|d| d * s).collect();
                    tilt(&x)
                })
                .fold(0.0, f64::max)
        }
    };
    DriftEigenPair {
        lambda,
        beta: beta.to_vec(),
        base: base.clone(),
        normalization: 1.0 / max,
    }
}

/// Max-norm residual of `-Δ_h ψ + <β, ∇_h ψ> - λ ψ` with centred
/// differences at the active nodes of `grid`.
pub fn drift_residual(pair: &DriftEigenPair, grid: &Arc<Grid>) -> f64 {
    let f = pair.on_grid(grid.clone());
    let mut lap = vec![0.0; grid.len()];
    grid.laplacian(&f.values, &mut lap);
    let mut worst = 0.0f64;
    for idx in 0..grid.len() {
        if !grid.is_active(idx) {
            continue;
        }
        let mut adv = 0.0;
        for d in 0..grid.dim() {
            let h = grid.axis(d).h;
            let grad = (grid.neighbour(&f.values, idx, d, 1)
                - grid.neighbour(&f.values, idx, d, -1))
                / (2.0 * h);
            adv += pair.beta.get(d).copied().unwrap_or(0.0) * grad;
        }
        let r = -lap[idx] + adv - pair.lambda * f.values[idx];
        worst = worst.max(r.abs());
    }
    worst
}

/// Smallest eigenvalue of the centred discrete drift operator
/// `-D² + β D⁰` on a one-dimensional Dirichlet grid, by inverse iteration.
/// Independent of [`drift_shift`].
pub fn drift_ground_state_1d(grid: &Grid, beta: f64) -> Result<(f64, Vec<f64>)> {
    if grid.dim() != 1 || grid.axis(0).periodic {
        return Err(Error::config(
            "drift eigen-solve needs a one-dimensional Dirichlet grid",
        ));
    }
    let a = grid.axis(0);
    let n = a.n;
    let k = 1.0 / (a.h * a.h);
    let c = beta / (2.0 * a.h);
    let lower = vec![-k - c; n];
    let upper = vec![-k + c; n];
    let diag = vec![2.0 * k; n];
    let mut x = vec![1.0; n];
    let mut lambda = f64::NAN;
    let mut trace = Vec::new();
    for _ in 0..EIGEN_MAX_ITER {
        let mut y = x.clone();
        solve_tridiagonal(&lower, &diag, &upper, &mut y)?;
        // growth factor of inverse iteration tends to 1/λ
        let next = dot(&x, &x) / dot(&x, &y);
        let norm = dot(&y, &y).sqrt();
        x = y.into_iter().map(|v| v / norm).collect();
        trace.push(next);
        if (next - lambda).abs() < EIGEN_INCREMENT_TOL {
            normalize_positive_max(&mut x);
            return Ok((next, x));
        }
        lambda = next;
    }
    Err(Error::Numerical {
        msg: "drift inverse iteration did not converge".into(),
        trace: trace[trace.len().saturating_sub(8)..].to_vec(),
    })
}

/// Envelope values of the linear flow at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Envelope {
    pub l2: f64,
    pub linf: f64,
}

/// `t = N / (4 λ_0)`, where the two regimes of the sup-norm bound meet.
pub fn crossover_time(lambda0: f64, dim: usize) -> f64 {
    dim as f64 / (4.0 * lambda0)
}

/// `e^{N/4} (4 λ_0 / N)^{N/4}`.
pub fn crossover_constant(lambda0: f64, dim: usize) -> f64 {
    let q = dim as f64 / 4.0;
    q.exp() * (lambda0 / q).powf(q)
}

/// L² bound `e^{-λ_0 t} ‖v_0‖` and sup-norm bound `C t^{-N/4} ‖v_0‖` before
/// the crossover time, `C K e^{-λ_0 t} ‖v_0‖` after it.
pub fn decay_envelope(v0_l2: f64, lambda0: f64, t: f64, dim: usize, c: f64) -> Result<Envelope> {
    if !(t >= 0.0) {
        return Err(Error::domain(format!(
            "envelope time must be nonnegative, got {t}"
        )));
    }
    let l2 = (-lambda0 * t).exp() * v0_l2;
    let tc = crossover_time(lambda0, dim);
    let linf = if t <= tc {
        c * t.powf(-(dim as f64) / 4.0) * v0_l2
    } else {
        c * crossover_constant(lambda0, dim) * (-lambda0 * t).exp() * v0_l2
    };
    Ok(Envelope { l2, linf })
}

/// Constants entering the lower envelope and the blow-up functionals.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DecayConstants {
    pub lambda0: f64,
    pub beta_tau: f64,
    pub delta_tau: f64,
    pub sigma_tau: f64,
}

impl DecayConstants {
    /// `λ_0 + β_τ²/4 + δ_τ/2 + σ_τ`.
    pub fn rate(&self) -> f64 {
        self.lambda0 + 0.25 * self.beta_tau * self.beta_tau + 0.5 * self.delta_tau + self.sigma_tau
    }
}

/// `c_1 e^{-rate (t-1)} ψ_0` on the grid of `psi0`.
pub fn lower_envelope(c1: f64, constants: &DecayConstants, t: f64, psi0: &Field) -> Result<Field> {
    if !(t >= 1.0) {
        return Err(Error::domain(format!(
            "lower envelope holds for t >= 1, got {t}"
        )));
    }
    let mut out = psi0.clone();
    out.time = t;
    out.log_scale = psi0.log_scale + c1.ln() - constants.rate() * (t - 1.0);
    if out.log_scale.abs() < 700.0 {
        out.flatten_scale();
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FunctionalKind {
    /// Pointwise functional `-(2/(p-1)) ln ε + ...`.
    A,
    /// Mass functional `(N - 2/(p-1)) ln ε + ...`.
    APrime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceVerdict {
    Propagation,
    Bounded,
}

/// Declared finite criterion for divergence of a trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceRule {
    pub threshold: f64,
    pub window: usize,
}

impl Default for DivergenceRule {
    fn default() -> Self {
        Self {
            threshold: 50.0,
            window: 3,
        }
    }
}

impl DivergenceRule {
    /// Last value above the threshold and strictly increasing over the
    /// final `window` entries.
    pub fn judge(&self, values: &[f64]) -> TraceVerdict {
        let w = self.window.max(1);
        if values.len() < w {
            return TraceVerdict::Bounded;
        }
        let tail = &values[values.len() - w..];
        let increasing = tail.windows(2).all(|p| p[1] > p[0]);
        if increasing && *tail.last().unwrap() > self.threshold {
            TraceVerdict::Propagation
        } else {
            TraceVerdict::Bounded
        }
    }
}

/// Where the drift constants of each trace entry come from.
#[derive(Debug, Clone)]
pub enum ConstantsSource<'a> {
    Fixed(DecayConstants),
    /// `β_τ = ε sup|x'|`, `δ_τ = ε³ sup|x''|` over `[ε², α]`.
    Curve {
        lambda0: f64,
        sigma_tau: f64,
        curve: &'a Curve,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub eps: f64,
    pub value: f64,
    pub constants: DecayConstants,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupTrace {
    pub kind: FunctionalKind,
    pub p: f64,
    pub alpha: f64,
    pub dim: usize,
    pub profile: DecayProfile,
    pub entries: Vec<TraceEntry>,
    pub verdict: TraceVerdict,
}

impl BlowupTrace {
    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.value).collect()
    }
}

/// Closed-form value of the functional for one `ε`.
pub fn functional_value(
    kind: FunctionalKind,
    p: f64,
    alpha: f64,
    dim: usize,
    ell_eps: f64,
    eps: f64,
    c: &DecayConstants,
) -> f64 {
    let lead = match kind {
        FunctionalKind::A => -2.0 / (p - 1.0),
        FunctionalKind::APrime => dim as f64 - 2.0 / (p - 1.0),
    };
    lead * eps.ln() + ell_eps / (p - 1.0) - c.rate() * alpha / (eps * eps)
}

#[allow(clippy::too_many_arguments)]
pub fn blowup_functional(
    kind: FunctionalKind,
    p: f64,
    alpha: f64,
    dim: usize,
    constants: ConstantsSource<'_>,
    profile: DecayProfile,
    eps: &[f64],
    rule: DivergenceRule,
) -> Result<BlowupTrace> {
    if !(p > 1.0) {
        return Err(Error::config(format!("exponent p must exceed 1, got {p}")));
    }
    if !(alpha > 0.0) {
        return Err(Error::config(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    if eps.is_empty() || eps.windows(2).any(|w| w[1] >= w[0]) || eps.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::config(
            "epsilon sequence must be positive and strictly decreasing",
        ));
    }
    let mut entries = Vec::with_capacity(eps.len());
    for &e in eps {
        let c = match &constants {
            ConstantsSource::Fixed(c) => *c,
            ConstantsSource::Curve {
                lambda0,
                sigma_tau,
                curve,
            } => {
                let lo = e * e;
                DecayConstants {
                    lambda0: *lambda0,
                    beta_tau: e * curve.speed_sup(lo, alpha)?,
                    delta_tau: e.powi(3) * curve.acceleration_sup(lo, alpha)?,
                    sigma_tau: *sigma_tau,
                }
            }
        };
        let value = functional_value(kind, p, alpha, dim, profile.eval(e)?, e, &c);
        entries.push(TraceEntry {
            eps: e,
            value,
            constants: c,
        });
    }
    let values: Vec<f64> = entries.iter().map(|e| e.value).collect();
    Ok(BlowupTrace {
        kind,
        p,
        alpha,
        dim,
        profile,
        entries,
        verdict: rule.judge(&values),
    })
}

/// Limiting threshold `L / ((p-1) rate)` on α below which the functional
/// diverges for a profile with `ε² ℓ(ε) → L`.
pub fn alpha_threshold(square_liminf: f64, p: f64, constants: &DecayConstants) -> f64 {
    square_liminf / ((p - 1.0) * constants.rate())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn interval_ground_state() {
        let pair = dirichlet_ground_state(EigenDomain::Interval, 64).unwrap();
        let exact = PI * PI / 4.0;
        assert!((pair.lambda - exact).abs() < 5.0 * (2.0f64 / 64.0).powi(2));
        assert!((pair.rayleigh_quotient() - pair.lambda).abs() < 1e-8 * pair.lambda);
        let v = &pair.psi.values;
        for i in 0..v.len() {
            assert!(v[i] > 0.0);
            assert!((v[i] - v[v.len() - 1 - i]).abs() < 1e-10);
        }
        assert!((v.iter().cloned().fold(0.0, f64::max) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn too_small_grid_rejected() {
        assert!(matches!(
            dirichlet_ground_state(EigenDomain::Interval, 8),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn radial_one_dimensional_consistency() {
        // the radial reduction in N = 1 describes the same interval problem
        let pair = radial_ground_state(1, 200).unwrap();
        assert!((pair.lambda - PI * PI / 4.0).abs() < 1e-4);
        assert!((pair.eval(&[0.0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn drift_shift_identity() {
        let base = dirichlet_ground_state(EigenDomain::Interval, 64).unwrap();
        let same = drift_shift(&[0.0], &base);
        assert_eq!(same.lambda, base.lambda);
        let shifted = drift_shift(&[2.0], &base);
        assert_eq!(shifted.lambda - base.lambda, 1.0);
    }

    #[test]
    fn envelope_examples() {
        let e = decay_envelope(3.0, 1.0, 0.0, 1, 1.0).unwrap();
        assert_eq!(e.l2, 3.0);
        let e = decay_envelope(1.0, 1.0, 2f64.ln(), 1, 1.0).unwrap();
        assert!((e.l2 - 0.5).abs() < 1e-15);
        // continuity at the crossover
        let tc = crossover_time(2.0, 2);
        let below = decay_envelope(1.0, 2.0, tc * (1.0 - 1e-9), 2, 1.0)
            .unwrap()
            .linf;
        let above = decay_envelope(1.0, 2.0, tc * (1.0 + 1e-9), 2, 1.0)
            .unwrap()
            .linf;
        assert!((below - above).abs() < 1e-7 * below);
    }

    #[test]
    fn lower_envelope_at_one() {
        let base = dirichlet_ground_state(EigenDomain::Interval, 32).unwrap();
        let c = DecayConstants {
            lambda0: base.lambda,
            ..Default::default()
        };
        let f = lower_envelope(0.3, &c, 1.0, &base.psi).unwrap();
        for (a, b) in f.values.iter().zip(&base.psi.values) {
            assert!((a - 0.3 * b).abs() < 1e-15);
        }
        assert!(lower_envelope(0.3, &c, 0.5, &base.psi).is_err());
    }

    #[test]
    fn functional_rejects_non_decreasing_eps() {
        let prof = DecayProfile::inverse_square(50.0).unwrap();
        let c = ConstantsSource::Fixed(DecayConstants::default());
        let r = blowup_functional(
            FunctionalKind::A,
            2.0,
            1.0,
            1,
            c,
            prof,
            &[0.1, 0.2],
            DivergenceRule::default(),
        );
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn divergence_rule() {
        let r = DivergenceRule::default();
        assert_eq!(r.judge(&[10.0, 40.0, 60.0]), TraceVerdict::Propagation);
        assert_eq!(r.judge(&[10.0, 40.0, 45.0]), TraceVerdict::Bounded);
        assert_eq!(r.judge(&[70.0, 60.0, 80.0]), TraceVerdict::Bounded);
    }
}
