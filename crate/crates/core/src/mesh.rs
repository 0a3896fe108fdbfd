//! Tensor grids (one or two dimensions) and grid functions.
//!
//! Only unknown nodes are stored. On a Dirichlet axis the boundary nodes sit
//! one spacing outside the stored range and carry the value 0; on a periodic
//! axis the last node wraps to the first. Ball grids in two dimensions mask
//! out the nodes of the square that fall outside the unit disk.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Values are folded into the log scale when their maximum leaves this range.
const RESCALE_LO: f64 = 1e-100;
const RESCALE_HI: f64 = 1e100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainKind {
    /// Rectangle with far-field Dirichlet 0.
    Box,
    /// Unit ball with Dirichlet 0.
    Ball,
    /// `R x B'_1` truncated in the first direction.
    Tunnel,
    /// Periodic in every direction.
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    /// Coordinate of the first stored node.
    pub lo: f64,
    pub h: f64,
    pub n: usize,
    pub periodic: bool,
}

impl Axis {
    /// Nodes strictly inside `(a, b)`, with `a` and `b` as Dirichlet nodes.
    pub fn dirichlet(a: f64, b: f64, n: usize) -> Self {
        let h = (b - a) / (n + 1) as f64;
        Self {
            lo: a + h,
            h,
            n,
            periodic: false,
        }
    }

    /// `n` nodes on `[a, b)` with period `b - a`.
    pub fn periodic(a: f64, b: f64, n: usize) -> Self {
        Self {
            lo: a,
            h: (b - a) / n as f64,
            n,
            periodic: true,
        }
    }

    pub fn coord(&self, i: usize) -> f64 {
        self.lo + self.h * i as f64
    }

    /// Lower and upper ends of the physical interval.
    pub fn extent(&self) -> (f64, f64) {
        if self.periodic {
            (self.lo, self.lo + self.h * self.n as f64)
        } else {
            (self.lo - self.h, self.lo + self.h * self.n as f64)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    kind: DomainKind,
    axes: Vec<Axis>,
    active: Option<Vec<bool>>,
}

impl Grid {
    pub fn new(kind: DomainKind, axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 2 {
            return Err(Error::config("grids are one or two dimensional"));
        }
        if axes.iter().any(|a| a.n < 3 || !(a.h > 0.0)) {
            return Err(Error::config(
                "every grid axis needs at least 3 nodes and a positive spacing",
            ));
        }
        Ok(Self {
            kind,
            axes,
            active: None,
        })
    }

    /// Dirichlet interval `(a, b)` with `n` interior nodes.
    pub fn interval(a: f64, b: f64, n: usize) -> Result<Self> {
        Self::new(DomainKind::Box, vec![Axis::dirichlet(a, b, n)])
    }

    pub fn periodic_interval(a: f64, b: f64, n: usize) -> Result<Self> {
        Self::new(DomainKind::Periodic, vec![Axis::periodic(a, b, n)])
    }

    pub fn rectangle(x: (f64, f64, usize), y: (f64, f64, usize)) -> Result<Self> {
        Self::new(
            DomainKind::Box,
            vec![
                Axis::dirichlet(x.0, x.1, x.2),
                Axis::dirichlet(y.0, y.1, y.2),
            ],
        )
    }

    /// `R x (-1, 1)` truncated to `(-half_length, half_length)` in `x_1`.
    pub fn tunnel(half_length: f64, n1: usize, m_perp: usize) -> Result<Self> {
        Self::new(
            DomainKind::Tunnel,
            vec![
                Axis::dirichlet(-half_length, half_length, n1),
                Axis::dirichlet(-1.0, 1.0, 2 * m_perp - 1),
            ],
        )
    }

    /// Unit ball with spacing `1/m`; the centre is a node.
    pub fn ball(dim: usize, m: usize) -> Result<Self> {
        let axis = Axis::dirichlet(-1.0, 1.0, 2 * m - 1);
        match dim {
            1 => Self::new(DomainKind::Ball, vec![axis]),
            2 => {
                let mut g = Self::new(DomainKind::Ball, vec![axis, axis])?;
                let n = axis.n;
                let mut active = vec![false; n * n];
                for i in 0..n {
                    for j in 0..n {
                        let (x, y) = (axis.coord(i), axis.coord(j));
                        active[i * n + j] = x * x + y * y < 1.0 - 1e-12;
                    }
                }
                g.active = Some(active);
                Ok(g)
            }
            _ => Err(Error::config(format!(
                "ball grids support dimension 1 or 2, got {dim}"
            ))),
        }
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, d: usize) -> &Axis {
        &self.axes[d]
    }

    /// Node counts per axis, with 1 for a missing second axis.
    pub fn shape(&self) -> (usize, usize) {
        (self.axes[0].n, self.axes.get(1).map_or(1, |a| a.n))
    }

    pub fn len(&self) -> usize {
        let (a, b) = self.shape();
        a * b
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.shape().1 + j
    }

    pub fn is_active(&self, idx: usize) -> bool {
        self.active.as_ref().is_none_or(|m| m[idx])
    }

    pub fn active_mask(&self) -> Option<&[bool]> {
        self.active.as_deref()
    }

    pub fn active_count(&self) -> usize {
        self.active
            .as_ref()
            .map_or(self.len(), |m| m.iter().filter(|&&a| a).count())
    }

    /// Coordinates of node `idx`; the second entry is 0 in one dimension.
    pub fn coords(&self, idx: usize) -> [f64; 2] {
        let ny = self.shape().1;
        let (i, j) = (idx / ny, idx % ny);
        [
            self.axes[0].coord(i),
            self.axes.get(1).map_or(0.0, |a| a.coord(j)),
        ]
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        let c = self.coords(idx);
        c[..self.dim()].to_vec()
    }

    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(|a| a.h).product()
    }

    pub fn min_spacing(&self) -> f64 {
        self.axes.iter().map(|a| a.h).fold(f64::INFINITY, f64::min)
    }

    /// Short human-readable descriptor, e.g. `63x63 h=3.125e-2`.
    pub fn descriptor(&self) -> String {
        let dims: Vec<String> = self.axes.iter().map(|a| a.n.to_string()).collect();
        let hs: Vec<String> = self.axes.iter().map(|a| format!("{:.4e}", a.h)).collect();
        format!("{} h={}", dims.join("x"), hs.join(","))
    }

    /// Value of the neighbour of `idx` shifted by `step` along axis `d`,
    /// using the boundary convention (0 outside Dirichlet axes and masks).
    #[inline]
    pub fn neighbour(&self, values: &[f64], idx: usize, d: usize, step: isize) -> f64 {
        match self.neighbour_index(idx, d, step) {
            Some(k) if self.is_active(k) => values[k],
            _ => 0.0,
        }
    }

    pub fn neighbour_index(&self, idx: usize, d: usize, step: isize) -> Option<usize> {
        let (nx, ny) = self.shape();
        let (i, j) = (idx / ny, idx % ny);
        let (pos, n) = if d == 0 { (i, nx) } else { (j, ny) };
        let axis = &self.axes[d];
        let target = pos as isize + step;
        let target = if axis.periodic {
            target.rem_euclid(n as isize) as usize
        } else if target < 0 || target >= n as isize {
            return None;
        } else {
            target as usize
        };
        Some(if d == 0 {
            target * ny + j
        } else {
            i * ny + target
        })
    }

    /// Five-point (three-point in 1D) Laplacian with the boundary convention.
    /// Inactive nodes receive 0.
    pub fn laplacian(&self, values: &[f64], out: &mut [f64]) {
        for idx in 0..self.len() {
            if !self.is_active(idx) {
                out[idx] = 0.0;
                continue;
            }
            let mut acc = 0.0;
            for (d, axis) in self.axes.iter().enumerate() {
                let l = self.neighbour(values, idx, d, -1);
                let r = self.neighbour(values, idx, d, 1);
                acc += (l - 2.0 * values[idx] + r) / (axis.h * axis.h);
            }
            out[idx] = acc;
        }
    }

    /// Index of the node nearest to `x`, if it is an active node.
    pub fn nearest(&self, x: &[f64]) -> Option<usize> {
        let (nx, ny) = self.shape();
        let mut ij = [0usize; 2];
        for (d, axis) in self.axes.iter().enumerate() {
            let n = if d == 0 { nx } else { ny };
            let s = ((x[d] - axis.lo) / axis.h).round();
            if axis.periodic {
                ij[d] = (s as i64).rem_euclid(n as i64) as usize;
            } else {
                if s < 0.0 || s >= n as f64 {
                    return None;
                }
                ij[d] = s as usize;
            }
        }
        let idx = self.index(ij[0], ij[1]);
        self.is_active(idx).then_some(idx)
    }

    /// Multilinear interpolation weights of `x` among stored nodes. Weights
    /// attached to boundary or masked nodes are dropped (those nodes carry 0).
    pub fn interpolation_stencil(&self, x: &[f64]) -> Vec<(usize, f64)> {
        let (nx, ny) = self.shape();
        let mut per_axis: Vec<Vec<(usize, f64)>> = Vec::with_capacity(2);
        for (d, axis) in self.axes.iter().enumerate() {
            let n = if d == 0 { nx } else { ny };
            let s = (x[d] - axis.lo) / axis.h;
            let base = s.floor();
            let frac = s - base;
            let mut pts = Vec::with_capacity(2);
            for (off, w) in [(0i64, 1.0 - frac), (1, frac)] {
                let k = base as i64 + off;
                let k = if axis.periodic {
                    Some(k.rem_euclid(n as i64) as usize)
                } else if k >= 0 && (k as usize) < n {
                    Some(k as usize)
                } else {
                    None
                };
                if let Some(k) = k {
                    pts.push((k, w));
                }
            }
            per_axis.push(pts);
        }
        if per_axis.len() == 1 {
            per_axis.push(vec![(0, 1.0)]);
        }
        let mut out = Vec::with_capacity(4);
        for &(i, wi) in &per_axis[0] {
            for &(j, wj) in &per_axis[1] {
                let idx = self.index(i, j);
                if self.is_active(idx) && wi * wj != 0.0 {
                    out.push((idx, wi * wj));
                }
            }
        }
        out
    }
}

/// A grid function at one time level.
///
/// The represented values are `values[i] * exp(log_scale)`. Keeping a
/// separate log scale lets long runs decay (or grow) far past the floating
/// point range without losing relative accuracy.
#[derive(Debug, Clone)]
pub struct Field {
    grid: Arc<Grid>,
    pub values: Vec<f64>,
    pub time: f64,
    pub log_scale: f64,
}

impl Field {
    pub fn zeros(grid: Arc<Grid>, time: f64) -> Self {
        let n = grid.len();
        Self {
            grid,
            values: vec![0.0; n],
            time,
            log_scale: 0.0,
        }
    }

    pub fn from_fn<F: Fn(&[f64]) -> f64>(grid: Arc<Grid>, time: f64, f: F) -> Self {
        let values = (0..grid.len())
            .map(|idx| {
                if grid.is_active(idx) {
                    f(&grid.point(idx))
                } else {
                    0.0
                }
            })
            .collect();
        Self {
            grid,
            values,
            time,
            log_scale: 0.0,
        }
    }

    pub fn from_values(grid: Arc<Grid>, time: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::config(format!(
                "field has {} values, grid has {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self {
            grid,
            values,
            time,
            log_scale: 0.0,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn scale(&self) -> f64 {
        self.log_scale.exp()
    }

    pub fn value(&self, idx: usize) -> f64 {
        self.values[idx] * self.scale()
    }

    /// Represented values with the log scale applied (may over/underflow).
    pub fn actual(&self) -> Vec<f64> {
        let s = self.scale();
        self.values.iter().map(|v| v * s).collect()
    }

    /// Natural log of the value at node `idx` (`-inf` for zero).
    pub fn ln_value(&self, idx: usize) -> f64 {
        self.values[idx].ln() + self.log_scale
    }

    pub fn raw_max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn raw_min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn linf(&self) -> f64 {
        self.raw_max_abs() * self.scale()
    }

    pub fn ln_linf(&self) -> f64 {
        self.raw_max_abs().ln() + self.log_scale
    }

    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.values.iter().map(|v| v * v).sum();
        (s * self.grid.cell_volume()).sqrt() * self.scale()
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume() * self.scale()
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Fold the magnitude into the log scale when it leaves a safe range.
    pub fn renormalize(&mut self) {
        let m = self.raw_max_abs();
        if m > 0.0 && m.is_finite() && !(RESCALE_LO..=RESCALE_HI).contains(&m) {
            let inv = 1.0 / m;
            for v in &mut self.values {
                *v *= inv;
            }
            self.log_scale += m.ln();
        }
    }

    /// Move the log scale back into the values (may over/underflow).
    pub fn flatten_scale(&mut self) {
        if self.log_scale != 0.0 {
            let s = self.scale();
            for v in &mut self.values {
                *v *= s;
            }
            self.log_scale = 0.0;
        }
    }

    /// Interpolated value at an arbitrary point.
    pub fn sample(&self, x: &[f64]) -> f64 {
        self.sample_raw(x) * self.scale()
    }

    pub fn sample_raw(&self, x: &[f64]) -> f64 {
        self.grid
            .interpolation_stencil(x)
            .into_iter()
            .map(|(idx, w)| w * self.values[idx])
            .sum()
    }

    /// Plain-text table: one line per active node with coordinates and value.
    pub fn to_table(&self) -> String {
        let mut out = format!("# time {:.12e}\n", self.time);
        for idx in 0..self.grid.len() {
            if !self.grid.is_active(idx) {
                continue;
            }
            for c in self.grid.point(idx) {
                out.push_str(&format!("{c:.12e} "));
            }
            out.push_str(&format!("{:.12e}\n", self.value(idx)));
        }
        out
    }

    /// Flat binary snapshot: a little-endian header (dimension, node counts,
    /// first-node coordinates, spacings, time) followed by the row-major
    /// values as little-endian doubles.
    pub fn write_binary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let dim = self.grid.dim() as u64;
        w.write_all(b"FSNP")?;
        w.write_all(&dim.to_le_bytes())?;
        for a in self.grid.axes() {
            w.write_all(&(a.n as u64).to_le_bytes())?;
        }
        for a in self.grid.axes() {
            w.write_all(&a.lo.to_le_bytes())?;
        }
        for a in self.grid.axes() {
            w.write_all(&a.h.to_le_bytes())?;
        }
        w.write_all(&self.time.to_le_bytes())?;
        for v in self.actual() {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn save_binary(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut buf = std::io::BufWriter::new(file);
        self.write_binary(&mut buf)
            .map_err(|e| Error::io(path, e))?;
        buf.flush().map_err(|e| Error::io(path, e))
    }
}

/// Header and payload of a binary snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub shape: Vec<usize>,
    pub origin: Vec<f64>,
    pub spacing: Vec<f64>,
    pub time: f64,
    pub values: Vec<f64>,
}

pub fn read_snapshot<R: Read>(mut r: R) -> Result<Snapshot> {
    let bad = |msg: &str| Error::Parse {
        origin: "snapshot".into(),
        msg: msg.into(),
    };
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)
        .map_err(|e| Error::io("<snapshot>", e))?;
    if bytes.len() < 12 || &bytes[..4] != b"FSNP" {
        return Err(bad("missing magic"));
    }
    let mut pos = 4;
    let word = |pos: &mut usize| -> Result<[u8; 8]> {
        let w: [u8; 8] = bytes
            .get(*pos..*pos + 8)
            .ok_or_else(|| bad("truncated"))?
            .try_into()
            .unwrap();
        *pos += 8;
        Ok(w)
    };
    let dim = u64::from_le_bytes(word(&mut pos)?) as usize;
    if dim == 0 || dim > 2 {
        return Err(bad("unsupported dimension"));
    }
    let mut shape = Vec::new();
    for _ in 0..dim {
        shape.push(u64::from_le_bytes(word(&mut pos)?) as usize);
    }
    let mut origin = Vec::new();
    for _ in 0..dim {
        origin.push(f64::from_le_bytes(word(&mut pos)?));
    }
    let mut spacing = Vec::new();
    for _ in 0..dim {
        spacing.push(f64::from_le_bytes(word(&mut pos)?));
    }
    let time = f64::from_le_bytes(word(&mut pos)?);
    let count: usize = shape.iter().product();
    let mut values = Vec::with_capacity(count);
    for _ in 0..count {
        values.push(f64::from_le_bytes(word(&mut pos)?));
    }
    Ok(Snapshot {
        shape,
        origin,
        spacing,
        time,
        values,
    })
}
