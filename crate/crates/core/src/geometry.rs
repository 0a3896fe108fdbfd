//! Degeneracy curves in space-time, distances to them, and monotonicity
//! classification of their parametrization.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance of the golden-section refinement of the parabolic distance.
const GOLDEN_REL_TOL: f64 = 1e-10;
/// Radius slack added to box witnesses.
pub const BOX_RADIUS_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveKind {
    /// `t(tau) = tau`, samples sorted by time.
    GraphOverT,
    GeneralParametric,
    /// A straight line along the `x_1` axis lying in the plane `t = 0`.
    InitialPlaneLine,
}

/// Optional analytic description used to shortcut derivative estimates.
#[derive(Debug, Clone, PartialEq)]
pub enum ClosedForm {
    /// `x(t) = v t`.
    Straight { velocity: Vec<f64> },
}

/// A space-time curve `tau -> (x(tau), t(tau))`, stored as dense samples and
/// linearly interpolated between them.
#[derive(Debug, Clone)]
pub struct Curve {
    kind: CurveKind,
    dim: usize,
    taus: Vec<f64>,
    times: Vec<f64>,
    /// Row-major, `dim` coordinates per sample.
    points: Vec<f64>,
    horizon: f64,
    closed_form: Option<ClosedForm>,
}

impl Curve {
    pub fn new(
        kind: CurveKind,
        dim: usize,
        taus: Vec<f64>,
        times: Vec<f64>,
        points: Vec<f64>,
        horizon: f64,
    ) -> Result<Self> {
        if taus.is_empty() {
            return Err(Error::config("curve has no samples"));
        }
        if dim == 0 {
            return Err(Error::config("curve dimension must be at least 1"));
        }
        if times.len() != taus.len() || points.len() != taus.len() * dim {
            return Err(Error::config(
                "curve sample arrays have inconsistent lengths",
            ));
        }
        if !(horizon > 0.0) {
            return Err(Error::config(format!(
                "curve horizon must be positive, got {horizon}"
            )));
        }
        if taus[0] != 0.0 || times[0] != 0.0 || points[..dim].iter().any(|&c| c != 0.0) {
            return Err(Error::config(
                "curve must be issued from the origin: t(0) = 0, x(0) = 0",
            ));
        }
        if times
            .iter()
            .chain(&points)
            .chain(&taus)
            .any(|v| !v.is_finite())
        {
            return Err(Error::config("curve samples must be finite"));
        }
        if times.iter().any(|&t| t < 0.0) {
            return Err(Error::config("curve time must stay nonnegative"));
        }
        if taus.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("curve parameter must be strictly increasing"));
        }
        match kind {
            CurveKind::GraphOverT => {
                if taus.iter().zip(&times).any(|(a, b)| a != b) {
                    return Err(Error::config("graph-over-t curve requires t(tau) = tau"));
                }
            }
            CurveKind::InitialPlaneLine => {
                if times.iter().any(|&t| t != 0.0) {
                    return Err(Error::config("initial-plane line must satisfy t = 0"));
                }
                if points.chunks(dim).any(|p| p[1..].iter().any(|&c| c != 0.0)) {
                    return Err(Error::config("initial-plane line must lie on the x_1 axis"));
                }
            }
            CurveKind::GeneralParametric => {}
        }
        let mut seen = HashSet::with_capacity(taus.len());
        for i in 0..taus.len() {
            let mut key: Vec<u64> = points[i * dim..(i + 1) * dim]
                .iter()
                .map(|c| c.to_bits())
                .collect();
            key.push(times[i].to_bits());
            if !seen.insert(key) {
                return Err(Error::config(format!(
                    "curve is not one to one: sample {i} repeats a point"
                )));
            }
        }
        Ok(Self {
            kind,
            dim,
            taus,
            times,
            points,
            horizon,
            closed_form: None,
        })
    }

    /// `x(t) = v t` sampled at `samples` equally spaced times on `[0, horizon]`.
    pub fn straight(velocity: &[f64], horizon: f64, samples: usize) -> Result<Self> {
        let v = velocity.to_vec();
        let mut curve = Self::graph(velocity.len(), horizon, samples, |t| {
            v.iter().map(|c| c * t).collect()
        })?;
        curve.closed_form = Some(ClosedForm::Straight {
            velocity: velocity.to_vec(),
        });
        Ok(curve)
    }

    /// Graph `t -> x(t)` sampled uniformly.
    pub fn graph<F>(dim: usize, horizon: f64, samples: usize, x_of_t: F) -> Result<Self>
    where
        F: Fn(f64) -> Vec<f64>,
    {
        let n = samples.max(2);
        let taus: Vec<f64> = (0..n)
            .map(|i| horizon * i as f64 / (n - 1) as f64)
            .collect();
        let mut points = Vec::with_capacity(n * dim);
        for &t in &taus {
            let x = x_of_t(t);
            if x.len() != dim {
                return Err(Error::config("graph function returned the wrong dimension"));
            }
            points.extend(x);
        }
        Self::new(
            CurveKind::GraphOverT,
            dim,
            taus.clone(),
            taus,
            points,
            horizon,
        )
    }

    /// General parametrization `tau -> (t(tau), x(tau))` on `[0, horizon]`.
    pub fn parametric<F>(dim: usize, horizon: f64, samples: usize, f: F) -> Result<Self>
    where
        F: Fn(f64) -> (f64, Vec<f64>),
    {
        let n = samples.max(2);
        let taus: Vec<f64> = (0..n)
            .map(|i| horizon * i as f64 / (n - 1) as f64)
            .collect();
        let mut times = Vec::with_capacity(n);
        let mut points = Vec::with_capacity(n * dim);
        for &tau in &taus {
            let (t, x) = f(tau);
            if x.len() != dim {
                return Err(Error::config(
                    "parametrization returned the wrong dimension",
                ));
            }
            times.push(t);
            points.extend(x);
        }
        Self::new(
            CurveKind::GeneralParametric,
            dim,
            taus,
            times,
            points,
            horizon,
        )
    }

    /// The `x_1` axis in the initial plane, sampled for `x_1 in [0, length]`.
    pub fn initial_line(dim: usize, length: f64, samples: usize) -> Result<Self> {
        let n = samples.max(2);
        let taus: Vec<f64> = (0..n).map(|i| length * i as f64 / (n - 1) as f64).collect();
        let mut points = vec![0.0; n * dim];
        for (i, &tau) in taus.iter().enumerate() {
            points[i * dim] = tau;
        }
        Self::new(
            CurveKind::InitialPlaneLine,
            dim,
            taus,
            vec![0.0; n],
            points,
            length,
        )
    }

    /// The degenerate curve made of the origin alone.
    pub fn origin(dim: usize, horizon: f64) -> Result<Self> {
        Self::new(
            CurveKind::GeneralParametric,
            dim,
            vec![0.0],
            vec![0.0],
            vec![0.0; dim],
            horizon,
        )
    }

    /// Parse a whitespace-separated table with columns `tau t x_1 .. x_N`.
    /// Lines starting with `#` and blank lines are skipped. When `kind` is
    /// `None` it is inferred from the columns.
    pub fn from_table(text: &str, horizon: Option<f64>, kind: Option<CurveKind>) -> Result<Self> {
        let origin = "curve table";
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row = line
                .split_whitespace()
                .map(|tok| tok.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse {
                    origin: origin.into(),
                    msg: format!("line {}: {e}", lineno + 1),
                })?;
            if row.len() < 3 {
                return Err(Error::Parse {
                    origin: origin.into(),
                    msg: format!(
                        "line {}: expected tau, t and at least one coordinate",
                        lineno + 1
                    ),
                });
            }
            if let Some(first) = rows.first() {
                if first.len() != row.len() {
                    return Err(Error::Parse {
                        origin: origin.into(),
                        msg: format!("line {}: inconsistent column count", lineno + 1),
                    });
                }
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::config("curve table has no samples"));
        }
        let dim = rows[0].len() - 2;
        let taus: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        let times: Vec<f64> = rows.iter().map(|r| r[1]).collect();
        let points: Vec<f64> = rows.iter().flat_map(|r| r[2..].iter().copied()).collect();
        let kind = kind.unwrap_or_else(|| {
            if times.iter().all(|&t| t == 0.0) {
                CurveKind::InitialPlaneLine
            } else if taus.iter().zip(&times).all(|(a, b)| a == b) {
                CurveKind::GraphOverT
            } else {
                CurveKind::GeneralParametric
            }
        });
        let horizon = horizon.unwrap_or(*taus.last().unwrap());
        Self::new(kind, dim, taus, times, points, horizon)
    }

    pub fn load(path: &Path, kind: Option<CurveKind>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_table(&text, None, kind)
    }

    pub fn to_table(&self) -> String {
        let mut out = String::from("# tau t");
        for d in 0..self.dim {
            out.push_str(&format!(" x_{}", d + 1));
        }
        out.push('\n');
        for i in 0..self.len() {
            out.push_str(&format!("{:.17e} {:.17e}", self.taus[i], self.times[i]));
            for c in self.point(i) {
                out.push_str(&format!(" {c:.17e}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn kind(&self) -> CurveKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.taus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taus.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn closed_form(&self) -> Option<&ClosedForm> {
        self.closed_form.as_ref()
    }

    pub fn tau(&self, i: usize) -> f64 {
        self.taus[i]
    }

    pub fn time(&self, i: usize) -> f64 {
        self.times[i]
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    /// Spatial position on a graph-over-t curve, linearly interpolated.
    pub fn position_at(&self, t: f64) -> Result<Vec<f64>> {
        if self.kind != CurveKind::GraphOverT {
            return Err(Error::config("position_at requires a graph-over-t curve"));
        }
        let t_end = *self.times.last().unwrap();
        if !(0.0..=t_end).contains(&t) {
            return Err(Error::OutOfDomain(format!("t = {t} outside [0, {t_end}]")));
        }
        if let Some(ClosedForm::Straight { velocity }) = &self.closed_form {
            return Ok(velocity.iter().map(|v| v * t).collect());
        }
        let j = self
            .times
            .partition_point(|&s| s <= t)
            .clamp(1, self.len().max(2) - 1);
        if self.len() == 1 {
            return Ok(self.point(0).to_vec());
        }
        let (t0, t1) = (self.times[j - 1], self.times[j]);
        let theta = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
        Ok(self
            .point(j - 1)
            .iter()
            .zip(self.point(j))
            .map(|(a, b)| a + theta * (b - a))
            .collect())
    }

    /// Segment velocities `dx/dt` of a graph curve with the midpoint time of
    /// each segment.
    fn segment_velocities(&self) -> Vec<(f64, Vec<f64>)> {
        (0..self.len().saturating_sub(1))
            .map(|i| {
                let dt = self.times[i + 1] - self.times[i];
                let v = self
                    .point(i + 1)
                    .iter()
                    .zip(self.point(i))
                    .map(|(b, a)| (b - a) / dt)
                    .collect();
                (0.5 * (self.times[i] + self.times[i + 1]), v)
            })
            .collect()
    }

    /// `sup |x'(t)|` over `[t_lo, t_hi]` for a graph curve.
    pub fn speed_sup(&self, t_lo: f64, t_hi: f64) -> Result<f64> {
        if self.kind != CurveKind::GraphOverT {
            return Err(Error::config("speed requires a graph-over-t curve"));
        }
        if let Some(ClosedForm::Straight { velocity }) = &self.closed_form {
            return Ok(norm(velocity));
        }
        let segs: Vec<_> = self.segment_velocities();
        let mut sup: f64 = 0.0;
        for (i, (_, v)) in segs.iter().enumerate() {
            if self.times[i + 1] >= t_lo && self.times[i] <= t_hi {
                sup = sup.max(norm(v));
            }
        }
        Ok(sup)
    }

    /// `sup |x''(t)|` over `[t_lo, t_hi]` from differences of segment velocities.
    pub fn acceleration_sup(&self, t_lo: f64, t_hi: f64) -> Result<f64> {
        if self.kind != CurveKind::GraphOverT {
            return Err(Error::config("acceleration requires a graph-over-t curve"));
        }
        if let Some(ClosedForm::Straight { .. }) = &self.closed_form {
            return Ok(0.0);
        }
        let segs = self.segment_velocities();
        let mut sup: f64 = 0.0;
        for w in segs.windows(2) {
            let (ta, va) = &w[0];
            let (tb, vb) = &w[1];
            if *tb >= t_lo && *ta <= t_hi {
                let a: Vec<f64> = vb
                    .iter()
                    .zip(va)
                    .map(|(b, a)| (b - a) / (tb - ta))
                    .collect();
                sup = sup.max(norm(&a));
            }
        }
        Ok(sup)
    }

    /// Velocity `x'(t)` of a graph curve (segment containing `t`).
    pub fn velocity_at(&self, t: f64) -> Result<Vec<f64>> {
        if self.kind != CurveKind::GraphOverT {
            return Err(Error::config("velocity requires a graph-over-t curve"));
        }
        if let Some(ClosedForm::Straight { velocity }) = &self.closed_form {
            return Ok(velocity.clone());
        }
        if self.len() < 2 {
            return Ok(vec![0.0; self.dim]);
        }
        let j = self
            .times
            .partition_point(|&s| s <= t)
            .clamp(1, self.len() - 1);
        let dt = self.times[j] - self.times[j - 1];
        Ok(self
            .point(j)
            .iter()
            .zip(self.point(j - 1))
            .map(|(b, a)| (b - a) / dt)
            .collect())
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Result of the parabolic distance infimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CurveDistance {
    Finite(f64),
    /// No curve point lies at or before the query time.
    FutureOnly,
}

impl CurveDistance {
    /// The distance, with `+inf` standing for [`CurveDistance::FutureOnly`].
    pub fn value(self) -> f64 {
        match self {
            CurveDistance::Finite(d) => d,
            CurveDistance::FutureOnly => f64::INFINITY,
        }
    }
}

/// `inf { |x - y| + sqrt(t - s) : (y, s) on the curve, s <= t }`.
///
/// The infimum is taken over the samples, then refined by a golden-section
/// search on the two interpolation segments adjacent to the best sample.
pub fn parabolic_distance(x: &[f64], t: f64, curve: &Curve) -> Result<CurveDistance> {
    if curve.is_empty() {
        return Err(Error::config("parabolic distance to an empty curve"));
    }
    if x.len() != curve.dim() {
        return Err(Error::config(format!(
            "point has dimension {}, curve has {}",
            x.len(),
            curve.dim()
        )));
    }
    if !(t >= 0.0) {
        return Err(Error::domain(format!("time must be nonnegative, got {t}")));
    }
    let mut best = f64::INFINITY;
    let mut best_i = usize::MAX;
    for i in 0..curve.len() {
        let s = curve.time(i);
        if s <= t {
            let d = dist(x, curve.point(i)) + (t - s).sqrt();
            if d < best {
                best = d;
                best_i = i;
            }
        }
    }
    if best_i == usize::MAX {
        return Ok(CurveDistance::FutureOnly);
    }
    // Where the curve crosses time t the square-root term has an infinite
    // slope, so these points are isolated minima the sample scan can miss.
    let mut buf = vec![0.0; x.len()];
    for j in 0..curve.len() - 1 {
        let (s0, s1) = (curve.time(j), curve.time(j + 1));
        if s0 == s1 || t < s0.min(s1) || t > s0.max(s1) {
            continue;
        }
        let theta = (t - s0) / (s1 - s0);
        let (p0, p1) = (curve.point(j), curve.point(j + 1));
        for (k, b) in buf.iter_mut().enumerate() {
            *b = p0[k] + theta * (p1[k] - p0[k]);
        }
        best = best.min(dist(x, &buf));
    }
    if best == 0.0 {
        return Ok(CurveDistance::Finite(0.0));
    }
    for j in [best_i.wrapping_sub(1), best_i] {
        if j == usize::MAX || j + 1 >= curve.len() {
            continue;
        }
        if let Some(d) = refine_on_segment(x, t, curve, j) {
            best = best.min(d);
        }
    }
    Ok(CurveDistance::Finite(best))
}

fn refine_on_segment(x: &[f64], t: f64, curve: &Curve, j: usize) -> Option<f64> {
    let (s0, s1) = (curve.time(j), curve.time(j + 1));
    let (p0, p1) = (curve.point(j), curve.point(j + 1));
    // admissible parameter range where the interpolated time is <= t
    let (lo, hi) = if s1 == s0 {
        if s0 > t {
            return None;
        }
        (0.0, 1.0)
    } else {
        let cross = (t - s0) / (s1 - s0);
        if s1 > s0 {
            (0.0, cross.min(1.0))
        } else {
            (cross.max(0.0), 1.0)
        }
    };
    if !(hi >= lo) {
        return None;
    }
    let mut buf = vec![0.0; x.len()];
    let mut f = |theta: f64| {
        for (k, b) in buf.iter_mut().enumerate() {
            *b = p0[k] + theta * (p1[k] - p0[k]);
        }
        let s = s0 + theta * (s1 - s0);
        dist(x, &buf) + (t - s).max(0.0).sqrt()
    };
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut best = f(lo).min(f(hi));
    for _ in 0..200 {
        if (b - a).abs() <= GOLDEN_REL_TOL * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    best = best.min(fc).min(fd);
    Some(best)
}

/// `max(sqrt(t), |x'|)`, the distance to the `x_1` axis of the initial plane.
/// Independent of `x_1`.
pub fn anisotropic_distance(_x1: f64, x_perp: &[f64], t: f64) -> f64 {
    t.max(0.0).sqrt().max(norm(x_perp))
}

/// Whether `(x, t)` lies in the open tube `|x - x(t)| < radius` around a
/// graph-over-t curve.
pub fn tube_membership(x: &[f64], t: f64, curve: &Curve, radius: f64) -> Result<bool> {
    if curve.kind() != CurveKind::GraphOverT {
        return Err(Error::config(
            "tube membership requires a graph-over-t curve",
        ));
    }
    let centre = curve.position_at(t)?;
    Ok(dist(x, &centre) < radius)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SegmentLabel {
    Increasing,
    Decreasing,
    Box,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub tau_lo: f64,
    pub tau_hi: f64,
    pub label: SegmentLabel,
    /// Sample indices covered, inclusive.
    pub first: usize,
    pub last: usize,
}

/// Witness of the box configuration: the tail of the curve after the first
/// interior maximum of `t` stays in `B_radius(centre) x [t_lo, t_hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxWitness {
    pub centre: Vec<f64>,
    pub radius: f64,
    pub t_lo: f64,
    pub t_hi: f64,
    pub tau0: f64,
    /// Sample index of the maximum.
    pub apex: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentClass {
    pub intervals: Vec<Segment>,
    pub box_witness: Option<BoxWitness>,
}

impl SegmentClass {
    pub fn labels(&self) -> Vec<SegmentLabel> {
        self.intervals.iter().map(|s| s.label).collect()
    }
}

pub fn default_sign_tolerance(curve: &Curve) -> f64 {
    1e-12 * curve.horizon()
}

/// Partition the parameter range into maximal monotone pieces of `t(tau)`
/// and detect a box configuration after the first interior maximum.
pub fn classify_segments(curve: &Curve, tol: f64) -> Result<SegmentClass> {
    let n = curve.len();
    if n < 3 {
        return Err(Error::config(
            "segment classification needs at least 3 samples",
        ));
    }
    let mut runs: Vec<Segment> = Vec::new();
    let mut current: Option<(SegmentLabel, usize)> = None;
    for i in 0..n - 1 {
        let dt = curve.time(i + 1) - curve.time(i);
        let sign = if dt > tol {
            Some(SegmentLabel::Increasing)
        } else if dt < -tol {
            Some(SegmentLabel::Decreasing)
        } else {
            None
        };
        match (current, sign) {
            (None, Some(s)) => current = Some((s, 0)),
            (Some((lab, start)), Some(s)) if s != lab => {
                runs.push(segment(curve, start, i, lab));
                current = Some((s, i));
            }
            _ => {}
        }
    }
    let (lab, start) = current.unwrap_or((SegmentLabel::Increasing, 0));
    runs.push(segment(curve, start, n - 1, lab));

    let box_witness = detect_box(curve, &runs, tol);
    if let Some(w) = &box_witness {
        let tail_start = runs
            .iter()
            .position(|s| s.first >= w.apex)
            .unwrap_or(runs.len());
        if runs.len() - tail_start > 1 {
            runs.truncate(tail_start);
            runs.push(segment(curve, w.apex, n - 1, SegmentLabel::Box));
        }
    }
    Ok(SegmentClass {
        intervals: runs,
        box_witness,
    })
}

fn segment(curve: &Curve, first: usize, last: usize, label: SegmentLabel) -> Segment {
    Segment {
        tau_lo: curve.tau(first),
        tau_hi: curve.tau(last),
        label,
        first,
        last,
    }
}

fn detect_box(curve: &Curve, runs: &[Segment], tol: f64) -> Option<BoxWitness> {
    let apex_run = runs.windows(2).find(|w| {
        w[0].label == SegmentLabel::Increasing && w[1].label == SegmentLabel::Decreasing
    })?;
    let apex = apex_run[0].last;
    let n = curve.len();
    let t_hi = curve.time(apex);
    let t_lo = curve.time(n - 1);
    if t_lo > t_hi + tol {
        return None;
    }
    let tail = apex..n;
    if tail
        .clone()
        .any(|i| curve.time(i) > t_hi + tol || curve.time(i) < t_lo - tol)
    {
        return None;
    }
    let dim = curve.dim();
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for i in tail.clone() {
        for (k, &c) in curve.point(i).iter().enumerate() {
            lo[k] = lo[k].min(c);
            hi[k] = hi[k].max(c);
        }
    }
    let centre: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
    let radius = tail
        .map(|i| dist(curve.point(i), &centre))
        .fold(0.0, f64::max)
        + BOX_RADIUS_SLACK;
    Some(BoxWitness {
        centre,
        radius,
        t_lo,
        t_hi,
        tau0: curve.tau(apex),
        apex,
    })
}

/// Closed-form or tabulated curve declaration used in run configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum CurveSpec {
    /// `x(t) = velocity * t` on `[0, horizon]`.
    Straight {
        velocity: Vec<f64>,
        horizon: f64,
        #[serde(default = "default_samples")]
        samples: usize,
    },
    /// Piecewise linear path along `e_1` from the origin to `apex_x` at
    /// `apex_tau` and on to `end_x` at `tau = 1`, with `t` rising to
    /// `apex_time` and then falling to `end_time`. A nonzero `wiggle` makes
    /// the descent non-monotone while keeping it inside the time window.
    Arch {
        dim: usize,
        apex_x: f64,
        end_x: f64,
        apex_tau: f64,
        apex_time: f64,
        end_time: f64,
        #[serde(default)]
        wiggle: f64,
        #[serde(default = "default_samples")]
        samples: usize,
    },
    /// The `x_1` axis in the initial plane.
    InitialLine {
        dim: usize,
        length: f64,
        #[serde(default = "default_samples")]
        samples: usize,
    },
    Table {
        path: PathBuf,
        #[serde(default)]
        kind: Option<CurveKind>,
    },
}

fn default_samples() -> usize {
    401
}

impl CurveSpec {
    pub fn dim(&self) -> Option<usize> {
        match self {
            CurveSpec::Straight { velocity, .. } => Some(velocity.len()),
            CurveSpec::Arch { dim, .. } | CurveSpec::InitialLine { dim, .. } => Some(*dim),
            CurveSpec::Table { .. } => None,
        }
    }

    /// Build the curve. Relative table paths resolve against `base`.
    pub fn build(&self, base: Option<&Path>) -> Result<Curve> {
        match self {
            CurveSpec::Straight {
                velocity,
                horizon,
                samples,
            } => Curve::straight(velocity, *horizon, *samples),
            CurveSpec::Arch {
                dim,
                apex_x,
                end_x,
                apex_tau,
                apex_time,
                end_time,
                wiggle,
                samples,
            } => {
                if !(*apex_tau > 0.0 && *apex_tau < 1.0) {
                    return Err(Error::config("arch apex_tau must lie in (0, 1)"));
                }
                if !(*end_time >= 0.0 && end_time <= apex_time) {
                    return Err(Error::config("arch requires 0 <= end_time <= apex_time"));
                }
                let (d, tau0, top, bottom, b) = (*dim, *apex_tau, *apex_time, *end_time, *wiggle);
                let (xa, xe) = (*apex_x, *end_x);
                Curve::parametric(d, 1.0, *samples, move |tau| {
                    let t = arch_time(tau, tau0, top, bottom, b);
                    let mut x = vec![0.0; d];
                    x[0] = if tau <= tau0 {
                        xa * tau / tau0
                    } else {
                        xa + (xe - xa) * (tau - tau0) / (1.0 - tau0)
                    };
                    (t, x)
                })
            }
            CurveSpec::InitialLine {
                dim,
                length,
                samples,
            } => Curve::initial_line(*dim, *length, *samples),
            CurveSpec::Table { path, kind } => {
                let full = match base {
                    Some(b) if path.is_relative() => b.join(path),
                    _ => path.clone(),
                };
                Curve::load(&full, *kind)
            }
        }
    }
}

/// Time profile of the arch curve.
pub fn arch_time(tau: f64, tau0: f64, top: f64, bottom: f64, wiggle: f64) -> f64 {
    if tau <= tau0 {
        let s = tau / tau0;
        top * s * (2.0 - s)
    } else {
        let s = (tau - tau0) / (1.0 - tau0);
        let g = s * s + wiggle * (2.0 * std::f64::consts::PI * s).sin() * s;
        top - (top - bottom) * g.clamp(0.0, 1.0)
    }
}
