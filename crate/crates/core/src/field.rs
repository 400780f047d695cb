//! Lattice minimizers of `E(u) = ∫ ½|∇u|² + W(u)` under `|u| ≤ q` with
//! Dirichlet data, by forward-backward splitting: an explicit gradient step on
//! the Dirichlet term followed by the exact pointwise proximal map of `W`.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::fmt17;
use crate::potential::{AngularPotential, PotentialSpec, RadialKind, RadialPotential};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Interior,
    Boundary,
    Outside,
}

/// Continuum domain. Disks are centered at the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Geometry {
    Interval { lo: f64, hi: f64 },
    Rectangle { lo: [f64; 2], hi: [f64; 2] },
    Disk { radius: f64 },
}

impl Geometry {
    pub fn n(&self) -> usize {
        match self {
            Geometry::Interval { .. } => 1,
            Geometry::Rectangle { .. } | Geometry::Disk { .. } => 2,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Geometry::Interval { .. } => "interval",
            Geometry::Rectangle { .. } => "rectangle",
            Geometry::Disk { .. } => "disk",
        }
    }

    /// Signed distance from `x` to the boundary, positive inside.
    pub fn distance_to_boundary(&self, x: [f64; 2]) -> f64 {
        match *self {
            Geometry::Interval { lo, hi } => (x[0] - lo).min(hi - x[0]),
            Geometry::Rectangle { lo, hi } => (x[0] - lo[0]).min(hi[0] - x[0]).min(x[1] - lo[1]).min(hi[1] - x[1]),
            Geometry::Disk { radius } => radius - x[0].hypot(x[1]),
        }
    }

    /// Radius of the largest ball inside the domain.
    pub fn inradius(&self) -> f64 {
        match *self {
            Geometry::Interval { lo, hi } => 0.5 * (hi - lo),
            Geometry::Rectangle { lo, hi } => 0.5 * (hi[0] - lo[0]).min(hi[1] - lo[1]),
            Geometry::Disk { radius } => radius,
        }
    }

    /// Lattice with `cells` cells along the first axis (the diameter for disks).
    pub fn lattice(&self, cells: usize) -> Result<LatticeDomain> {
        LatticeDomain::new(self.clone(), cells)
    }
}

/// Uniform lattice over a [`Geometry`] with a node classification.
///
/// Interval and rectangle lattices put nodes on the boundary and weight
/// boundary nodes and boundary edges by ½ per boundary axis (trapezoid rule).
/// Disk lattices mark as Boundary the non-interior nodes with an interior axis
/// neighbor; only interior nodes carry potential weight.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeDomain {
    pub geometry: Geometry,
    pub cells: usize,
    pub n: usize,
    /// Nodes per axis; the second entry is 1 in one dimension.
    pub shape: [usize; 2],
    pub h: f64,
    pub origin: [f64; 2],
    pub mask: Vec<NodeKind>,
    node_weight: Vec<f64>,
}

impl LatticeDomain {
    pub fn new(geometry: Geometry, cells: usize) -> Result<Self> {
        if cells < 2 {
            return Err(Error::Geometry("lattice needs at least two cells per axis".into()));
        }
        let n = geometry.n();
        let (shape, h, origin) = match geometry {
            Geometry::Interval { lo, hi } => {
                if !(hi > lo) {
                    return Err(Error::Geometry(format!("empty interval [{lo}, {hi}]")));
                }
                ([cells + 1, 1], (hi - lo) / cells as f64, [lo, 0.0])
            }
            Geometry::Rectangle { lo, hi } => {
                let (lx, ly) = (hi[0] - lo[0], hi[1] - lo[1]);
                if !(lx > 0.0 && ly > 0.0) {
                    return Err(Error::Geometry("rectangle has nonpositive side".into()));
                }
                let h = lx / cells as f64;
                let ny = (ly / h).round();
                if ny < 1.0 || (ny * h - ly).abs() > 1e-9 * ly {
                    return Err(Error::Geometry(format!("rectangle height {ly} is not a multiple of the spacing {h}")));
                }
                ([cells + 1, ny as usize + 1], h, lo)
            }
            Geometry::Disk { radius } => {
                if !(radius > 0.0) {
                    return Err(Error::Geometry("disk radius must be positive".into()));
                }
                let h = 2.0 * radius / cells as f64;
                ([cells + 1, cells + 1], h, [-radius, -radius])
            }
        };
        let len = shape[0] * shape[1];
        let mut mask = vec![NodeKind::Outside; len];
        let mut node_weight = vec![0.0; len];
        let end = |k: usize, axis: usize| k == 0 || k + 1 == shape[axis];
        match geometry {
            Geometry::Interval { .. } | Geometry::Rectangle { .. } => {
                for j in 0..shape[1] {
                    for i in 0..shape[0] {
                        let idx = i + j * shape[0];
                        let on_x = end(i, 0);
                        let on_y = n == 2 && end(j, 1);
                        mask[idx] = if on_x || on_y { NodeKind::Boundary } else { NodeKind::Interior };
                        node_weight[idx] = if on_x { 0.5 } else { 1.0 } * if on_y { 0.5 } else { 1.0 };
                    }
                }
            }
            Geometry::Disk { radius } => {
                let inside = |i: usize, j: usize| {
                    let x = origin[0] + i as f64 * h;
                    let y = origin[1] + j as f64 * h;
                    x.hypot(y) < radius
                };
                for j in 0..shape[1] {
                    for i in 0..shape[0] {
                        let idx = i + j * shape[0];
                        if inside(i, j) {
                            mask[idx] = NodeKind::Interior;
                            node_weight[idx] = 1.0;
                        } else {
                            let near = (i > 0 && inside(i - 1, j))
                                || (i + 1 < shape[0] && inside(i + 1, j))
                                || (j > 0 && inside(i, j - 1))
                                || (j + 1 < shape[1] && inside(i, j + 1));
                            if near {
                                mask[idx] = NodeKind::Boundary;
                            }
                        }
                    }
                }
            }
        }
        Ok(LatticeDomain { geometry, cells, n, shape, h, origin, mask, node_weight })
    }

    pub fn len(&self) -> usize {
        self.mask.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mask.is_empty()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i + j * self.shape[0]
    }

    #[inline]
    pub fn multi_index(&self, idx: usize) -> [usize; 2] {
        [idx % self.shape[0], idx / self.shape[0]]
    }

    #[inline]
    pub fn position(&self, idx: usize) -> [f64; 2] {
        let [i, j] = self.multi_index(idx);
        let y = if self.n == 2 { self.origin[1] + j as f64 * self.h } else { 0.0 };
        [self.origin[0] + i as f64 * self.h, y]
    }

    /// Node volume fraction used for the potential term (times `hⁿ`).
    #[inline]
    pub fn node_weight(&self, idx: usize) -> f64 {
        self.node_weight[idx]
    }

    /// Neighbor of `idx` one step along `axis` in direction `forward`.
    #[inline]
    pub fn neighbor(&self, idx: usize, axis: usize, forward: bool) -> Option<usize> {
        let [i, j] = self.multi_index(idx);
        let k = if axis == 0 { i } else { j };
        if axis >= self.n {
            return None;
        }
        if forward {
            (k + 1 < self.shape[axis]).then(|| if axis == 0 { idx + 1 } else { idx + self.shape[0] })
        } else {
            (k > 0).then(|| if axis == 0 { idx - 1 } else { idx - self.shape[0] })
        }
    }

    /// Weight of the edge from `idx` to its forward neighbor along `axis`.
    pub fn edge_weight(&self, idx: usize, axis: usize) -> f64 {
        let Some(other) = self.neighbor(idx, axis, true) else { return 0.0 };
        let (a, b) = (self.mask[idx], self.mask[other]);
        if a == NodeKind::Outside || b == NodeKind::Outside {
            return 0.0;
        }
        match self.geometry {
            Geometry::Disk { .. } => {
                if a == NodeKind::Interior || b == NodeKind::Interior {
                    1.0
                } else {
                    0.0
                }
            }
            _ => {
                if self.n == 1 {
                    return 1.0;
                }
                let [i, j] = self.multi_index(idx);
                let (k, axis_len) = if axis == 0 { (j, self.shape[1]) } else { (i, self.shape[0]) };
                if k == 0 || k + 1 == axis_len {
                    0.5
                } else {
                    1.0
                }
            }
        }
    }

    /// Cell volume `hⁿ`.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.n as i32)
    }

    fn metadata(&self) -> serde_json::Value {
        serde_json::json!({
            "n": self.n,
            "shape": &self.shape[..self.n],
            "h": self.h,
            "origin": &self.origin[..self.n],
            "mask_type": self.geometry.name(),
            "geometry": self.geometry,
        })
    }
}

/// Dirichlet data on the Boundary nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundarySpec {
    Constant {
        value: Vec<f64>,
    },
    /// `q · x/|x|`; requires `m = n`.
    Hedgehog,
    /// Hedgehog data set to zero on the boundary points whose polar angle lies
    /// within `half_width` of `angle`.
    HedgehogGap {
        angle: f64,
        half_width: f64,
    },
    /// Per-side constants; corners take the `left`/`right` value.
    Edges {
        left: Vec<f64>,
        right: Vec<f64>,
        bottom: Vec<f64>,
        top: Vec<f64>,
    },
}

fn angle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(std::f64::consts::TAU);
    d.min(std::f64::consts::TAU - d)
}

impl BoundarySpec {
    fn check_len(v: &[f64], m: usize) -> Result<()> {
        if v.len() != m {
            return Err(Error::Data(format!("boundary vector has {} components, expected {m}", v.len())));
        }
        Ok(())
    }

    /// Boundary value at the lattice node `idx`.
    pub fn value_at(&self, domain: &LatticeDomain, idx: usize, m: usize, q: f64) -> Result<Vec<f64>> {
        let x = domain.position(idx);
        let n = domain.n;
        let out = match self {
            BoundarySpec::Constant { value } => {
                Self::check_len(value, m)?;
                value.clone()
            }
            BoundarySpec::Hedgehog | BoundarySpec::HedgehogGap { .. } => {
                if m != n {
                    return Err(Error::Data(format!("hedgehog data needs m = n = {n}, got m = {m}")));
                }
                let norm = x[0].hypot(x[1]);
                if norm == 0.0 {
                    return Err(Error::Data("hedgehog data undefined at the origin".into()));
                }
                if let BoundarySpec::HedgehogGap { angle, half_width } = self {
                    if angle_distance(x[1].atan2(x[0]), *angle) <= *half_width {
                        return Ok(vec![0.0; m]);
                    }
                }
                x[..n].iter().map(|c| q * c / norm).collect()
            }
            BoundarySpec::Edges { left, right, bottom, top } => {
                let [i, j] = domain.multi_index(idx);
                let v = if i == 0 {
                    left
                } else if i + 1 == domain.shape[0] {
                    right
                } else if j == 0 {
                    bottom
                } else if j + 1 == domain.shape[1] {
                    top
                } else {
                    return Err(Error::Data("per-edge data needs a rectangle or interval lattice".into()));
                };
                Self::check_len(v, m)?;
                v.clone()
            }
        };
        let norm = out.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm > q * (1.0 + 1e-12) {
            return Err(Error::Data(format!("boundary value with |v| = {norm} exceeds q = {q}")));
        }
        Ok(out)
    }
}

/// `m`-vector field on a lattice with frozen boundary values.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub domain: LatticeDomain,
    pub m: usize,
    pub q: f64,
    /// Node-major components: node `k` owns `values[k·m .. (k+1)·m]`.
    pub values: Vec<f64>,
    /// Same layout; meaningful on Boundary nodes only.
    pub boundary_data: Vec<f64>,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn project(v: &mut [f64], q: f64) {
    let r = norm(v);
    if r > q {
        let s = q / r;
        v.iter_mut().for_each(|x| *x *= s);
    }
}

impl GridField {
    /// Field equal to the boundary data on Boundary nodes and zero elsewhere.
    pub fn new(domain: LatticeDomain, m: usize, q: f64, boundary: &BoundarySpec) -> Result<Self> {
        if m == 0 || !(q > 0.0) {
            return Err(Error::Domain("need m ≥ 1 and q > 0".into()));
        }
        let mut boundary_data = vec![0.0; domain.len() * m];
        for idx in 0..domain.len() {
            if domain.mask[idx] == NodeKind::Boundary {
                let v = boundary.value_at(&domain, idx, m, q)?;
                boundary_data[idx * m..(idx + 1) * m].copy_from_slice(&v);
            }
        }
        let values = boundary_data.clone();
        Ok(GridField { domain, m, q, values, boundary_data })
    }

    /// Field whose interior values are `f(x)` projected onto `|v| ≤ q`.
    pub fn from_fn<F: Fn([f64; 2]) -> Vec<f64>>(
        domain: LatticeDomain,
        m: usize,
        q: f64,
        boundary: &BoundarySpec,
        f: F,
    ) -> Result<Self> {
        let mut field = Self::new(domain, m, q, boundary)?;
        for idx in 0..field.domain.len() {
            if field.domain.mask[idx] == NodeKind::Interior {
                let mut v = f(field.domain.position(idx));
                GridField::check_components(&v, m)?;
                project(&mut v, q);
                field.values[idx * m..(idx + 1) * m].copy_from_slice(&v);
            }
        }
        Ok(field)
    }

    fn check_components(v: &[f64], m: usize) -> Result<()> {
        if v.len() != m {
            return Err(Error::Data(format!("field value has {} components, expected {m}", v.len())));
        }
        Ok(())
    }

    #[inline]
    pub fn at(&self, idx: usize) -> &[f64] {
        &self.values[idx * self.m..(idx + 1) * self.m]
    }

    /// `|u|` at every node; Outside nodes report 0.
    pub fn modulus_field(&self) -> Vec<f64> {
        (0..self.domain.len())
            .map(|k| if self.domain.mask[k] == NodeKind::Outside { 0.0 } else { norm(self.at(k)) })
            .collect()
    }

    /// Largest `|u| − q` over the lattice (nonpositive when the constraint holds).
    pub fn max_constraint_excess(&self) -> f64 {
        (0..self.domain.len()).map(|k| norm(self.at(k)) - self.q).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Replaces interior values by `sweeps` Jacobi iterations of the discrete
    /// Laplace equation started from zero, then projects onto `|u| ≤ q`.
    pub fn harmonic_init(&mut self, sweeps: usize) {
        let m = self.m;
        let d = &self.domain;
        for k in 0..d.len() {
            if d.mask[k] == NodeKind::Interior {
                self.values[k * m..(k + 1) * m].iter_mut().for_each(|x| *x = 0.0);
            }
        }
        let mut next = self.values.clone();
        for _ in 0..sweeps {
            next.par_chunks_mut(m).enumerate().for_each(|(k, out)| {
                if d.mask[k] != NodeKind::Interior {
                    return;
                }
                out.iter_mut().for_each(|x| *x = 0.0);
                let mut count = 0.0;
                for axis in 0..d.n {
                    for fwd in [false, true] {
                        if let Some(nb) = d.neighbor(k, axis, fwd) {
                            for c in 0..m {
                                out[c] += self.values[nb * m + c];
                            }
                            count += 1.0;
                        }
                    }
                }
                out.iter_mut().for_each(|x| *x /= count);
            });
            std::mem::swap(&mut self.values, &mut next);
        }
        let q = self.q;
        self.values.par_chunks_mut(m).for_each(|v| project(v, q));
    }

    /// Adds independent uniform noise of amplitude `amplitude` to interior
    /// components, then projects.
    pub fn jitter(&mut self, amplitude: f64, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = self.m;
        for k in 0..self.domain.len() {
            if self.domain.mask[k] == NodeKind::Interior {
                for c in 0..m {
                    self.values[k * m + c] += amplitude * (2.0 * rng.random::<f64>() - 1.0);
                }
                project(&mut self.values[k * m..(k + 1) * m], self.q);
            }
        }
    }

    /// Sets interior values by bilinear interpolation of `coarse`, ignoring
    /// coarse Outside nodes, then projects.
    pub fn interpolate_from(&mut self, coarse: &GridField) -> Result<()> {
        if coarse.m != self.m || coarse.domain.n != self.domain.n {
            return Err(Error::Data("interpolation between incompatible fields".into()));
        }
        let m = self.m;
        let cd = &coarse.domain;
        let fd = &self.domain;
        self.values.par_chunks_mut(m).enumerate().for_each(|(k, out)| {
            if fd.mask[k] != NodeKind::Interior {
                return;
            }
            let x = fd.position(k);
            let mut base = [0usize; 2];
            let mut frac = [0.0f64; 2];
            for axis in 0..cd.n {
                let t = ((x[axis] - cd.origin[axis]) / cd.h).clamp(0.0, (cd.shape[axis] - 1) as f64);
                let b = (t.floor() as usize).min(cd.shape[axis].saturating_sub(2));
                base[axis] = b;
                frac[axis] = t - b as f64;
            }
            let mut acc = vec![0.0; m];
            let mut total = 0.0;
            let corners: &[(usize, usize)] =
                if cd.n == 1 { &[(0, 0), (1, 0)] } else { &[(0, 0), (1, 0), (0, 1), (1, 1)] };
            for &(di, dj) in corners {
                let (i, j) = (base[0] + di, base[1] + dj);
                if i >= cd.shape[0] || j >= cd.shape[1] {
                    continue;
                }
                let idx = cd.index(i, j);
                if cd.mask[idx] == NodeKind::Outside {
                    continue;
                }
                let wx = if di == 1 { frac[0] } else { 1.0 - frac[0] };
                let wy = if cd.n == 1 {
                    1.0
                } else if dj == 1 {
                    frac[1]
                } else {
                    1.0 - frac[1]
                };
                let w = wx * wy;
                if w == 0.0 {
                    continue;
                }
                for c in 0..m {
                    acc[c] += w * coarse.values[idx * m + c];
                }
                total += w;
            }
            if total > 0.0 {
                for c in 0..m {
                    out[c] = acc[c] / total;
                }
            }
        });
        let q = self.q;
        self.values.par_chunks_mut(m).for_each(|v| project(v, q));
        Ok(())
    }

    /// CSV with header `i[,j],u1,…,um`, one row per non-Outside node.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let d = &self.domain;
        out.push('i');
        if d.n == 2 {
            out.push_str(",j");
        }
        for c in 1..=self.m {
            let _ = write!(out, ",u{c}");
        }
        out.push('\n');
        for k in 0..d.len() {
            if d.mask[k] == NodeKind::Outside {
                continue;
            }
            let [i, j] = d.multi_index(k);
            let _ = write!(out, "{i}");
            if d.n == 2 {
                let _ = write!(out, ",{j}");
            }
            for v in self.at(k) {
                let _ = write!(out, ",{}", fmt17(*v));
            }
            out.push('\n');
        }
        out
    }

    /// Domain metadata written next to the CSV.
    pub fn sidecar(&self) -> serde_json::Value {
        let mut meta = self.domain.metadata();
        meta["q"] = serde_json::json!(self.q);
        meta["m"] = serde_json::json!(self.m);
        meta
    }

    /// Writes `<stem>.csv` and `<stem>.json` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<()> {
        std::fs::write(dir.join(format!("{stem}.csv")), self.to_csv())?;
        std::fs::write(dir.join(format!("{stem}.json")), serde_json::to_string_pretty(&self.sidecar())? + "\n")?;
        Ok(())
    }
}

const CHUNK: usize = 4096;

/// Forward-difference Dirichlet energy plus the nodal potential term, both
/// weighted by `hⁿ`. Partial sums over fixed node chunks keep the result
/// independent of the thread count.
pub fn grid_energy(f: &GridField, spec: &PotentialSpec) -> f64 {
    objective_energy(f, spec, None)
}

/// Slope `c` of the ramp in the relaxed potential `min(W(u), c·|u|)` with
/// ramp width `delta`.
pub fn ramp_slope(spec: &PotentialSpec, delta: f64) -> f64 {
    spec.w_rad.value(delta.min(spec.q())) / delta
}

fn objective_energy(f: &GridField, spec: &PotentialSpec, ramp: Option<f64>) -> f64 {
    let d = &f.domain;
    let inv_h2 = 1.0 / (d.h * d.h);
    let partial: Vec<f64> = (0..d.len().div_ceil(CHUNK))
        .into_par_iter()
        .map(|chunk| {
            let mut sum = 0.0;
            for k in chunk * CHUNK..((chunk + 1) * CHUNK).min(d.len()) {
                if d.mask[k] == NodeKind::Outside {
                    continue;
                }
                let u = f.at(k);
                for axis in 0..d.n {
                    let w = d.edge_weight(k, axis);
                    if w > 0.0 {
                        let nb = d.neighbor(k, axis, true).expect("weighted edge has a neighbor");
                        let v = f.at(nb);
                        let diff2: f64 = u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
                        sum += w * 0.5 * diff2 * inv_h2;
                    }
                }
                let wn = d.node_weight(k);
                if wn > 0.0 {
                    let w = spec.eval_unchecked(u);
                    sum += wn * ramp.map_or(w, |c| w.min(c * norm(u)));
                }
            }
            sum
        })
        .collect();
    partial.iter().sum::<f64>() * d.cell_volume()
}

/// Proximal point of `s ↦ W_rad(s)` from `rho ≥ 0`:
/// `argmin_{0 ≤ s ≤ q} (s − rho)²/(2τ) + W_rad(s)`, smallest on ties.
pub fn prox_radial(p: &RadialPotential, rho: f64, tau: f64) -> f64 {
    if !(rho > 0.0) {
        return 0.0;
    }
    let q = p.q();
    let ub = rho.min(q);
    let phi = |s: f64| (s - rho) * (s - rho) / (2.0 * tau) + p.value(s);
    let pick = |candidates: &mut Vec<f64>| -> f64 {
        candidates.sort_by(f64::total_cmp);
        let mut best = (candidates[0], phi(candidates[0]));
        for &s in candidates.iter().skip(1) {
            let v = phi(s);
            if v < best.1 {
                best = (s, v);
            }
        }
        best.0
    };
    match p.kind() {
        RadialKind::Zero => ub,
        RadialKind::Quadratic => (rho / (1.0 + 2.0 * tau)).min(q),
        RadialKind::Characteristic => pick(&mut vec![0.0, ub]),
        RadialKind::PowerLaw { alpha } => {
            let alpha = *alpha;
            let dphi = |s: f64| (s - rho) / tau + alpha * s.powf(alpha - 1.0);
            if alpha == 1.0 {
                return (rho - tau).clamp(0.0, q);
            }
            let root = |mut lo: f64, mut hi: f64| {
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if dphi(mid) < 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            };
            if alpha > 1.0 {
                if dphi(ub) <= 0.0 {
                    ub
                } else {
                    root(0.0, ub)
                }
            } else {
                // φ is concave below s_c and convex above it.
                let s_c = (alpha * (1.0 - alpha) * tau).powf(1.0 / (2.0 - alpha));
                let mut candidates = vec![0.0, ub];
                if s_c < ub && dphi(s_c) < 0.0 && dphi(ub) > 0.0 {
                    candidates.push(root(s_c, ub));
                }
                pick(&mut candidates)
            }
        }
        RadialKind::Tabulated { breakpoints } => {
            let mut candidates = vec![0.0, ub];
            for (k, &(s_k, _)) in breakpoints.iter().enumerate() {
                if s_k >= ub {
                    break;
                }
                let next = breakpoints.get(k + 1).map_or(q, |b| b.0).min(ub);
                candidates.push(s_k);
                candidates.push(rho.clamp(s_k, next));
            }
            pick(&mut candidates)
        }
    }
}

fn golden_section<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..120 {
        if b - a <= 1e-14 * hi.abs().max(1.0) {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Proximal modulus along the unit direction `dir` from a point at distance
/// `rho` from the origin, for the full potential.
pub fn prox_ray(spec: &PotentialSpec, rho: f64, dir: &[f64], tau: f64) -> f64 {
    match &spec.w_0 {
        AngularPotential::None => prox_radial(&spec.w_rad, rho, tau),
        // A term linear in s shifts the quadratic's center.
        AngularPotential::Tilted { scale } => {
            let c = scale * (1.0 + dir[0]) / 2.0;
            prox_radial(&spec.w_rad, rho - c * tau, tau).min(rho.max(0.0))
        }
        AngularPotential::Custom { .. } => {
            if !(rho > 0.0) {
                return 0.0;
            }
            let ub = rho.min(spec.q());
            let phi = |s: f64| (s - rho) * (s - rho) / (2.0 * tau) + spec.eval_on_ray(s, dir);
            let mut cuts: Vec<f64> = spec.w_rad.discontinuities().into_iter().filter(|&d| d > 0.0 && d < ub).collect();
            cuts.insert(0, 0.0);
            cuts.push(ub);
            let mut best = (0.0, phi(0.0));
            let mut consider = |s: f64, v: f64| {
                if v < best.1 || (v == best.1 && s < best.0) {
                    best = (s, v);
                }
            };
            for w in cuts.windows(2) {
                consider(w[1], phi(w[1]));
                if w[1] > w[0] {
                    let (s, v) = golden_section(&phi, w[0], w[1]);
                    consider(s, v);
                }
            }
            best.0
        }
    }
}

/// Proximal point of `W` restricted to `|v| ≤ q`, written into `v` in place.
pub fn prox_point(spec: &PotentialSpec, v: &mut [f64], tau: f64) {
    prox_point_relaxed(spec, None, v, tau)
}

/// Proximal point of `min(W(v), c·|v|)`: the better of the two separate
/// proximal points, the smaller one on ties.
pub fn prox_point_relaxed(spec: &PotentialSpec, ramp: Option<f64>, v: &mut [f64], tau: f64) {
    let rho = norm(v);
    if rho == 0.0 {
        return;
    }
    let dir: Vec<f64> = v.iter().map(|x| x / rho).collect();
    let mut s = prox_ray(spec, rho, &dir, tau);
    if let Some(c) = ramp {
        let lin = (rho - c * tau).clamp(0.0, rho.min(spec.q()));
        let phi = |t: f64| (t - rho) * (t - rho) / (2.0 * tau) + spec.eval_on_ray(t, &dir).min(c * t);
        let (a, b) = (phi(lin), phi(s));
        if a < b || (a == b && lin < s) {
            s = lin;
        }
    }
    v.iter_mut().zip(&dir).for_each(|(x, d)| *x = s * d);
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSolveOptions {
    pub max_iters: usize,
    /// Stop once the mean energy decrease over `window` accepted iterations drops below `tol`.
    pub tol: f64,
    pub window: usize,
    /// Monotone momentum: extrapolated steps are kept only if they lower the energy.
    pub accelerate: bool,
    /// Ramp width `δ` of the relaxed potential `min(W(u), W_rad(δ)/δ · |u|)`;
    /// `None` minimizes the exact energy.
    pub relaxation: Option<f64>,
}

impl Default for FieldSolveOptions {
    fn default() -> Self {
        FieldSolveOptions { max_iters: 20_000, tol: 1e-12, window: 20, accelerate: true, relaxation: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub iterations: usize,
    pub final_energy: f64,
    pub last_energy_decrease: f64,
    pub max_constraint_violation_before_projection: f64,
    pub converged: bool,
    pub step: f64,
    /// Energy after every accepted iteration, starting with the initial energy.
    #[serde(skip)]
    pub energy_history: Vec<f64>,
}

fn fb_step(f: &GridField, spec: &PotentialSpec, ramp: Option<f64>, from: &[f64], out: &mut [f64], tau: f64) -> f64 {
    let d = &f.domain;
    let m = f.m;
    let inv_h2 = 1.0 / (d.h * d.h);
    out.par_chunks_mut(m)
        .enumerate()
        .map(|(k, o)| {
            match d.mask[k] {
                NodeKind::Interior => {}
                NodeKind::Boundary => {
                    o.copy_from_slice(&f.boundary_data[k * m..(k + 1) * m]);
                    return 0.0;
                }
                NodeKind::Outside => {
                    o.iter_mut().for_each(|x| *x = 0.0);
                    return 0.0;
                }
            }
            let u = &from[k * m..(k + 1) * m];
            o.copy_from_slice(u);
            for axis in 0..d.n {
                for fwd in [false, true] {
                    let nb = d.neighbor(k, axis, fwd).expect("interior nodes have all neighbors");
                    for c in 0..m {
                        o[c] -= tau * inv_h2 * (u[c] - from[nb * m + c]);
                    }
                }
            }
            prox_point_relaxed(spec, ramp, o, tau);
            let excess = norm(o) - f.q;
            project(o, f.q);
            excess.max(0.0)
        })
        .reduce(|| 0.0, f64::max)
}

/// Forward-backward minimization from `f0`. Boundary nodes stay frozen and the
/// recorded energy never increases.
pub fn minimize_field(
    f0: &GridField,
    spec: &PotentialSpec,
    opts: &FieldSolveOptions,
) -> Result<(GridField, SolveStats)> {
    if spec.m != f0.m {
        return Err(Error::Data(format!("potential acts on R^{} but the field has {} components", spec.m, f0.m)));
    }
    if (spec.q() - f0.q).abs() > 1e-12 * f0.q {
        return Err(Error::Data("field and potential disagree on q".into()));
    }
    if let Some(delta) = opts.relaxation {
        if !(delta > 0.0) {
            return Err(Error::Domain("relaxation width must be positive".into()));
        }
    }
    let ramp = opts.relaxation.map(|delta| ramp_slope(spec, delta));
    let n = f0.domain.n as f64;
    let mut tau = f0.domain.h * f0.domain.h / (4.0 * n);
    let mut field = f0.clone();
    let mut energy = objective_energy(&field, spec, ramp);
    let mut history = vec![energy];
    let mut previous = field.values.clone();
    let mut trial = field.clone();
    let mut extrapolated = field.values.clone();
    let mut momentum = 1.0f64;
    let mut max_violation = 0.0f64;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iters {
        iterations += 1;
        let mut accepted = false;
        if opts.accelerate && momentum > 1.0 {
            let next_momentum = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
            let beta = (momentum - 1.0) / next_momentum;
            extrapolated
                .par_iter_mut()
                .zip(field.values.par_iter().zip(previous.par_iter()))
                .for_each(|(e, (x, p))| *e = x + beta * (x - p));
            let v = fb_step(&field, spec, ramp, &extrapolated, &mut trial.values, tau);
            let e = objective_energy(&trial, spec, ramp);
            if e <= energy {
                max_violation = max_violation.max(v);
                std::mem::swap(&mut previous, &mut field.values);
                std::mem::swap(&mut field.values, &mut trial.values);
                energy = e;
                momentum = next_momentum;
                accepted = true;
            }
        }
        if !accepted {
            momentum = 1.0;
            loop {
                let v = fb_step(&field, spec, ramp, &field.values, &mut trial.values, tau);
                let e = objective_energy(&trial, spec, ramp);
                if e <= energy {
                    max_violation = max_violation.max(v);
                    std::mem::swap(&mut previous, &mut field.values);
                    std::mem::swap(&mut field.values, &mut trial.values);
                    energy = e;
                    if opts.accelerate {
                        momentum = 2.0;
                    }
                    break;
                }
                tau *= 0.5;
                if tau < 1e-300 {
                    return Err(Error::NonConvergence("step size underflow in forward-backward iteration".into()));
                }
            }
        }
        history.push(energy);
        let k = history.len() - 1;
        if k >= opts.window {
            let drop = history[k - opts.window] - energy;
            if drop <= opts.tol * opts.window as f64 {
                converged = true;
                break;
            }
        }
    }
    let k = history.len();
    let last = if k >= 2 { history[k - 2] - history[k - 1] } else { 0.0 };
    let stats = SolveStats {
        iterations,
        final_energy: energy,
        last_energy_decrease: last,
        max_constraint_violation_before_projection: max_violation,
        converged,
        step: tau,
        energy_history: history,
    };
    Ok((field, stats))
}

/// Field problem description shared by the cascade and the CLI.
#[derive(Debug, Clone)]
pub struct FieldProblem {
    pub geometry: Geometry,
    pub cells: usize,
    pub boundary: BoundarySpec,
    pub spec: PotentialSpec,
}

impl FieldProblem {
    pub fn field(&self, cells: usize) -> Result<GridField> {
        GridField::new(self.geometry.lattice(cells)?, self.spec.m, self.spec.q(), &self.boundary)
    }

    /// Solves on lattices with `cells / 2^k` cells for `k = levels−1, …, 0`,
    /// interpolating each result onto the next lattice.
    ///
    /// The coarsest lattice starts from the harmonic extension and first runs
    /// the relaxed problems with ramp widths `q, q/2, …, q/2^(continuation−1)`.
    /// A discontinuous `W` pins every node whose value exceeds about `h/2`,
    /// so plain descent from the harmonic extension stalls with an oversized
    /// support; the ramps remove most of the excess before that happens.
    pub fn solve_cascade(&self, opts: &CascadeOptions) -> Result<(GridField, Vec<SolveStats>)> {
        let levels = opts.levels.max(1);
        let mut stats = Vec::with_capacity(levels + opts.continuation);
        let mut current: Option<GridField> = None;
        for k in (0..levels).rev() {
            let cells = (self.cells >> k).max(2);
            let mut f = self.field(cells)?;
            match &current {
                None => {
                    f.harmonic_init(opts.harmonic_sweeps);
                    if let Some((amplitude, seed)) = opts.jitter {
                        f.jitter(amplitude, seed);
                    }
                    for stage in 0..opts.continuation {
                        let relaxed = FieldSolveOptions {
                            relaxation: Some(self.spec.q() * 0.5f64.powi(stage as i32)),
                            ..opts.solve.clone()
                        };
                        let (next, s) = minimize_field(&f, &self.spec, &relaxed)?;
                        stats.push(s);
                        f = next;
                    }
                }
                Some(coarse) => f.interpolate_from(coarse)?,
            }
            let (solved, s) = minimize_field(&f, &self.spec, &opts.solve)?;
            stats.push(s);
            current = Some(solved);
        }
        Ok((current.expect("at least one level"), stats))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeOptions {
    pub levels: usize,
    pub harmonic_sweeps: usize,
    /// Uniform noise `(amplitude, seed)` added after the harmonic start.
    pub jitter: Option<(f64, u64)>,
    pub continuation: usize,
    pub solve: FieldSolveOptions,
}

impl Default for CascadeOptions {
    fn default() -> Self {
        CascadeOptions {
            levels: 4,
            harmonic_sweeps: 300,
            jitter: None,
            continuation: 8,
            solve: FieldSolveOptions::default(),
        }
    }
}
