//! Quantitative checks of comparison bounds, dead cores, the Pohozaev
//! identity, the monotonicity formula, the first integral and the maximum
//! principle on solver output. Every check converts into a [`Check`] entry of
//! a JSON [`Report`].

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::field::{Geometry, GridField, NodeKind};
use crate::oracles::ClosedFormProfile;
use crate::potential::{IqVariant, PotentialSpec, RadialPotential};
use crate::quadrature;
use crate::radial::{ComparisonPair, RadialProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub params: Value,
    pub residuals: Value,
    pub tolerance: f64,
    pub verdict: Verdict,
}

/// Report written by the `verify` command: the resolved configuration plus
/// one entry per check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: Value,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new(config: Value) -> Self {
        Report { config, checks: Vec::new() }
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.verdict == Verdict::Pass)
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("report is serializable")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

/// Default pass tolerance `3·(h + q/M)` for comparison bounds.
pub fn comparison_tolerance(h: f64, q: f64, m: usize) -> f64 {
    3.0 * (h + q / m as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComparisonMode {
    /// Closed test ball inside the domain.
    Interior,
    /// Test ball meeting the boundary where the data vanish.
    Boundary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonVerdict {
    /// Largest `|u(x)| − Ψ̄_R(|x − x₀|)` over the checked nodes.
    pub max_violation: f64,
    pub worst_position: Option<[f64; 2]>,
    pub ball_center: [f64; 2],
    pub ball_radius: f64,
    pub nodes_checked: usize,
    pub mode: ComparisonMode,
    pub tolerance: f64,
    pub verdict: Verdict,
}

impl ComparisonVerdict {
    pub fn to_check(&self) -> Check {
        Check {
            name: "comparison".into(),
            params: json!({
                "center": self.ball_center,
                "radius": self.ball_radius,
                "mode": self.mode,
            }),
            residuals: json!({
                "max_violation": self.max_violation,
                "worst_position": self.worst_position,
                "nodes_checked": self.nodes_checked,
                "note": if self.verdict == Verdict::Inconclusive {
                    "bound exceeded: candidate may be non-minimizing or under-resolved"
                } else { "" },
            }),
            tolerance: self.tolerance,
            verdict: self.verdict,
        }
    }
}

fn distance(a: [f64; 2], b: [f64; 2], n: usize) -> f64 {
    if n == 1 {
        (a[0] - b[0]).abs()
    } else {
        (a[0] - b[0]).hypot(a[1] - b[1])
    }
}

/// Compares `|u|` with the upper comparison profile of `pair` centered at
/// `center`. Bounds exceeded beyond `3·(h + q/M)` give `Inconclusive`, since a
/// descent method may stop at a non-minimizing critical point.
pub fn verify_comparison(
    f: &GridField,
    pair: &ComparisonPair,
    center: [f64; 2],
    radius: f64,
    mode: ComparisonMode,
) -> Result<ComparisonVerdict> {
    let d = &f.domain;
    if pair.upper.grid.n() as usize != d.n {
        return Err(Error::Data(format!(
            "comparison profile is for n = {}, field has n = {}",
            pair.upper.grid.n(),
            d.n
        )));
    }
    if (pair.radius() - radius).abs() > 1e-9 * radius.max(1.0) {
        return Err(Error::Data(format!("comparison pair has R = {}, ball has R = {radius}", pair.radius())));
    }
    if (pair.upper.q() - f.q).abs() > 1e-12 * f.q {
        return Err(Error::Data("comparison pair and field disagree on q".into()));
    }
    match mode {
        ComparisonMode::Interior => {
            let depth = d.geometry.distance_to_boundary(center);
            if depth < radius {
                return Err(Error::Geometry(format!(
                    "closed ball of radius {radius} around {center:?} leaves the domain (depth {depth})"
                )));
            }
        }
        ComparisonMode::Boundary => {
            for k in 0..d.len() {
                if d.mask[k] == NodeKind::Boundary && distance(d.position(k), center, d.n) <= radius {
                    let v = &f.boundary_data[k * f.m..(k + 1) * f.m];
                    if v.iter().any(|c| c.abs() > 1e-12) {
                        return Err(Error::Data(format!(
                            "boundary data nonzero at {:?} inside the test ball",
                            d.position(k)
                        )));
                    }
                }
            }
        }
    }
    let modulus = f.modulus_field();
    let mut worst = f64::NEG_INFINITY;
    let mut worst_position = None;
    let mut checked = 0;
    for k in 0..d.len() {
        if d.mask[k] != NodeKind::Interior {
            continue;
        }
        let x = d.position(k);
        let dist = distance(x, center, d.n);
        if dist > radius {
            continue;
        }
        checked += 1;
        let excess = modulus[k] - pair.upper.eval(dist);
        if excess > worst {
            worst = excess;
            worst_position = Some(x);
        }
    }
    if checked == 0 {
        return Err(Error::EmptyRegion("no interior node in the test ball".into()));
    }
    let tolerance = comparison_tolerance(d.h, f.q, pair.levels.m());
    let verdict = if worst <= tolerance { Verdict::Pass } else { Verdict::Inconclusive };
    Ok(ComparisonVerdict {
        max_violation: worst,
        worst_position,
        ball_center: center,
        ball_radius: radius,
        nodes_checked: checked,
        mode,
        tolerance,
        verdict,
    })
}

/// One radius of a Pohozaev scan, with the surface measure dropped on both sides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PohozaevRecord {
    pub r: f64,
    /// `∫_{B_r} (n−2)/2 |∇u|² + n W(u)`.
    pub lhs: f64,
    /// `r ∫_{∂B_r} ½|∇u|² + W(u) − |∂_ν u|²`.
    pub rhs: f64,
    /// `E_{B_r}(u)`.
    pub energy: f64,
    /// `|lhs − rhs| / max(|lhs|, |rhs|, E_{B_r}, 1e−30)`.
    pub residual: f64,
}

impl PohozaevRecord {
    fn new(r: f64, lhs: f64, rhs: f64, energy: f64) -> Self {
        let scale = lhs.abs().max(rhs.abs()).max(energy.abs()).max(1e-30);
        PohozaevRecord { r, lhs, rhs, energy, residual: (lhs - rhs).abs() / scale }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PohozaevScan {
    pub records: Vec<PohozaevRecord>,
    /// Requested radii skipped because they sit within two cells of a jump of `W(u)`.
    pub excluded: Vec<f64>,
}

impl PohozaevScan {
    pub fn max_residual(&self) -> f64 {
        self.records.iter().map(|r| r.residual).fold(0.0, f64::max)
    }

    pub fn to_check(&self, tolerance: f64) -> Check {
        let max = self.max_residual();
        Check {
            name: "pohozaev".into(),
            params: json!({ "radii": self.records.iter().map(|r| r.r).collect::<Vec<_>>(), "excluded": self.excluded }),
            residuals: json!({ "max_residual": max, "records": self.records }),
            tolerance,
            verdict: if self.records.is_empty() {
                Verdict::Inconclusive
            } else if max <= tolerance {
                Verdict::Pass
            } else {
                Verdict::Fail
            },
        }
    }
}

fn check_radius(r: f64, limit: f64) -> Result<()> {
    if !(r > 0.0) || r > limit * (1.0 + 1e-12) {
        return Err(Error::Geometry(format!("scan radius {r} outside (0, {limit}]")));
    }
    Ok(())
}

/// Cell containing `r` and the fraction of it below `r`.
fn locate(profile: &RadialProfile, r: f64) -> (usize, f64) {
    let radii = profile.grid.radii();
    let k = radii.partition_point(|&x| x < r).clamp(1, radii.len() - 1) - 1;
    let t = ((r - radii[k]) / profile.grid.dr(k)).clamp(0.0, 1.0);
    (k, t)
}

/// Cell-rule integral `∫₀^r ρ^(n−1) (a·½h'² + b·λW(h)) dρ` of a discrete profile.
fn profile_integral(profile: &RadialProfile, p: &RadialPotential, r: f64, a: f64, b: f64) -> f64 {
    let (k, t) = locate(profile, r);
    let v = &profile.values;
    let mut total = 0.0;
    for i in 0..=k {
        let dr = profile.grid.dr(i);
        let slope = (v[i + 1] - v[i]) / dr;
        let frac = if i == k { t } else { 1.0 };
        total += profile.grid.weight(i) * frac * dr * (a * 0.5 * slope * slope + b * profile.lambda * p.value(v[i]));
    }
    total
}

/// Cells where the profile crosses a discontinuity of `W_rad`.
fn jump_cells(profile: &RadialProfile, p: &RadialPotential) -> Vec<usize> {
    let jumps = p.discontinuities();
    let v = &profile.values;
    (0..profile.grid.cells()).filter(|&i| jumps.iter().any(|&d| v[i] <= d && v[i + 1] > d)).collect()
}

/// Pohozaev scan of a discrete radial profile, using the same cell rule as
/// the discrete energy and the profile's multiplier `λ`.
pub fn pohozaev_profile(profile: &RadialProfile, p: &RadialPotential, radii: &[f64]) -> Result<PohozaevScan> {
    let n = profile.grid.n() as f64;
    let jumps = jump_cells(profile, p);
    let grid_radii = profile.grid.radii();
    let mut scan = PohozaevScan { records: Vec::new(), excluded: Vec::new() };
    for &r in radii {
        check_radius(r, profile.grid.radius())?;
        let near_jump = jumps.iter().any(|&i| {
            let dr = profile.grid.dr(i);
            r > grid_radii[i] - 2.0 * dr && r < grid_radii[i + 1] + 2.0 * dr
        });
        if near_jump {
            scan.excluded.push(r);
            continue;
        }
        let lhs = profile_integral(profile, p, r, n - 2.0, n);
        let energy = profile_integral(profile, p, r, 1.0, 1.0);
        let (k, _) = locate(profile, r);
        let slope = (profile.values[k + 1] - profile.values[k]) / profile.grid.dr(k);
        let w = profile.lambda * p.value(profile.values[k]);
        let rhs = r.powf(n) * (w - 0.5 * slope * slope);
        scan.records.push(PohozaevRecord::new(r, lhs, rhs, energy));
    }
    Ok(scan)
}

fn closed_form_integral(o: &ClosedFormProfile, p: &RadialPotential, r: f64, a: f64, b: f64) -> f64 {
    let n = o.n as i32;
    let mut f = |rho: f64| {
        let d = o.derivative(rho);
        rho.powi(n - 1) * (a * 0.5 * d * d + b * p.value(o.value(rho)))
    };
    quadrature::adaptive(&mut f, 0.0, r, &o.breakpoints(), 1e-15, 1e-13).value
}

/// Pohozaev scan of an exact profile by adaptive quadrature.
pub fn pohozaev_closed_form(o: &ClosedFormProfile, p: &RadialPotential, radii: &[f64]) -> Result<PohozaevScan> {
    let n = o.n as f64;
    let mut scan = PohozaevScan { records: Vec::new(), excluded: Vec::new() };
    for &r in radii {
        check_radius(r, o.radius)?;
        let lhs = closed_form_integral(o, p, r, n - 2.0, n);
        let energy = closed_form_integral(o, p, r, 1.0, 1.0);
        let d = o.derivative(r);
        let rhs = r.powf(n) * (p.value(o.value(r)) - 0.5 * d * d);
        scan.records.push(PohozaevRecord::new(r, lhs, rhs, energy));
    }
    Ok(scan)
}

/// Node Jacobian `∂u_c/∂x_a` stored as `[c·n + a]`, by central differences
/// where both neighbors exist and one-sided differences otherwise.
fn node_jacobian(f: &GridField, k: usize) -> Vec<f64> {
    let d = &f.domain;
    let mut jac = vec![0.0; f.m * d.n];
    for axis in 0..d.n {
        let usable = |nb: Option<usize>| nb.filter(|&j| d.mask[j] != NodeKind::Outside);
        let fwd = usable(d.neighbor(k, axis, true));
        let bwd = usable(d.neighbor(k, axis, false));
        let (a, b, span) = match (fwd, bwd) {
            (Some(a), Some(b)) => (a, b, 2.0 * d.h),
            (Some(a), None) => (a, k, d.h),
            (None, Some(b)) => (k, b, d.h),
            (None, None) => continue,
        };
        for c in 0..f.m {
            jac[c * d.n + axis] = (f.values[a * f.m + c] - f.values[b * f.m + c]) / span;
        }
    }
    jac
}

/// Bilinear (linear in 1D) interpolation of node data with `stride`
/// components; `None` when a supporting node is Outside.
fn interpolate(f: &GridField, data: &[f64], stride: usize, x: [f64; 2]) -> Option<Vec<f64>> {
    let d = &f.domain;
    let mut base = [0usize; 2];
    let mut frac = [0.0f64; 2];
    for axis in 0..d.n {
        let t = (x[axis] - d.origin[axis]) / d.h;
        if t < 0.0 || t > (d.shape[axis] - 1) as f64 {
            return None;
        }
        let b = (t.floor() as usize).min(d.shape[axis] - 2);
        base[axis] = b;
        frac[axis] = t - b as f64;
    }
    let mut out = vec![0.0; stride];
    let corners: &[(usize, usize)] = if d.n == 1 { &[(0, 0), (1, 0)] } else { &[(0, 0), (1, 0), (0, 1), (1, 1)] };
    for &(di, dj) in corners {
        let wx = if di == 1 { frac[0] } else { 1.0 - frac[0] };
        let wy = if d.n == 1 {
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
        let idx = d.index(base[0] + di, base[1] + dj);
        if d.mask[idx] == NodeKind::Outside {
            return None;
        }
        for c in 0..stride {
            out[c] += w * data[idx * stride + c];
        }
    }
    Some(out)
}

struct FieldScanData {
    jac: Vec<f64>,
    density: Vec<f64>,
}

fn field_scan_data(f: &GridField) -> FieldScanData {
    let d = &f.domain;
    let width = f.m * d.n;
    let mut jac = vec![0.0; d.len() * width];
    let mut density = vec![0.0; d.len()];
    for k in 0..d.len() {
        if d.mask[k] == NodeKind::Outside {
            continue;
        }
        let j = node_jacobian(f, k);
        density[k] = 0.5 * j.iter().map(|x| x * x).sum::<f64>();
        jac[k * width..(k + 1) * width].copy_from_slice(&j);
    }
    FieldScanData { jac, density }
}

fn check_field_center(f: &GridField, center: [f64; 2]) -> Result<()> {
    let d = &f.domain;
    let on_node = (0..d.n).all(|a| {
        let t = (center[a] - d.origin[a]) / d.h;
        (t - t.round()).abs() < 1e-9
    });
    if !on_node {
        return Err(Error::Geometry(format!("scan center {center:?} is not a lattice node")));
    }
    Ok(())
}

/// Bulk sums `(Σ ½|∇u|², Σ W(u))·hⁿ` over non-Outside nodes with `|x − c| < r`.
fn field_bulk(f: &GridField, spec: &PotentialSpec, data: &FieldScanData, center: [f64; 2], r: f64) -> (f64, f64) {
    let d = &f.domain;
    let (mut grad, mut pot) = (0.0, 0.0);
    for k in 0..d.len() {
        if d.mask[k] == NodeKind::Outside || distance(d.position(k), center, d.n) >= r {
            continue;
        }
        grad += data.density[k];
        pot += spec.eval_unchecked(f.at(k));
    }
    let vol = d.cell_volume();
    (grad * vol, pot * vol)
}

/// Sample points and quadrature weights on the sphere `|x − c| = r`: the two
/// endpoints in 1D, `32` points per cell of arc length in 2D.
fn shell_points(f: &GridField, center: [f64; 2], r: f64) -> Vec<([f64; 2], [f64; 2], f64)> {
    let d = &f.domain;
    if d.n == 1 {
        return vec![([center[0] - r, 0.0], [-1.0, 0.0], 1.0), ([center[0] + r, 0.0], [1.0, 0.0], 1.0)];
    }
    let count = (32.0 * (std::f64::consts::TAU * r / d.h).ceil()).max(64.0) as usize;
    let dl = std::f64::consts::TAU * r / count as f64;
    (0..count)
        .map(|k| {
            let th = std::f64::consts::TAU * (k as f64 + 0.5) / count as f64;
            let nu = [th.cos(), th.sin()];
            ([center[0] + r * nu[0], center[1] + r * nu[1]], nu, dl)
        })
        .collect()
}

/// `(∫ ½|∇u|² + W(u), ∫ |∂_ν u|²)` over the sphere of radius `r`.
fn field_shell(
    f: &GridField,
    spec: &PotentialSpec,
    data: &FieldScanData,
    center: [f64; 2],
    r: f64,
) -> Result<(f64, f64)> {
    let d = &f.domain;
    let width = f.m * d.n;
    let (mut energy, mut normal) = (0.0, 0.0);
    for (x, nu, w) in shell_points(f, center, r) {
        let u = interpolate(f, &f.values, f.m, x)
            .ok_or_else(|| Error::Geometry(format!("shell point {x:?} outside the lattice")))?;
        let jac = interpolate(f, &data.jac, width, x).expect("same support as the values");
        let grad2: f64 = jac.iter().map(|v| v * v).sum();
        let mut dnu2 = 0.0;
        for c in 0..f.m {
            let dn: f64 = (0..d.n).map(|a| jac[c * d.n + a] * nu[a]).sum();
            dnu2 += dn * dn;
        }
        let mut uu = u.clone();
        let s = uu.iter().map(|v| v * v).sum::<f64>().sqrt();
        if s > f.q {
            uu.iter_mut().for_each(|v| *v *= f.q / s);
        }
        energy += w * (0.5 * grad2 + spec.eval_unchecked(&uu));
        normal += w * dnu2;
    }
    Ok((energy, normal))
}

/// Pohozaev scan of a lattice field around the node `center`.
pub fn pohozaev_field(f: &GridField, spec: &PotentialSpec, center: [f64; 2], radii: &[f64]) -> Result<PohozaevScan> {
    check_field_center(f, center)?;
    let depth = f.domain.geometry.distance_to_boundary(center);
    let data = field_scan_data(f);
    let n = f.domain.n as f64;
    let mut scan = PohozaevScan { records: Vec::new(), excluded: Vec::new() };
    for &r in radii {
        check_radius(r, depth)?;
        let (grad, pot) = field_bulk(f, spec, &data, center, r);
        let (shell, normal) = field_shell(f, spec, &data, center, r)?;
        let lhs = (n - 2.0) * grad + n * pot;
        let rhs = r * (shell - normal);
        scan.records.push(PohozaevRecord::new(r, lhs, rhs, grad + pot));
    }
    Ok(scan)
}

/// `(r, r^(−(n−2))·E_{B_r}, slack)` samples of the monotonicity formula.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityScan {
    pub points: Vec<(f64, f64, f64)>,
    pub nondecreasing: bool,
    /// Largest drop between consecutive samples in excess of their combined slack.
    pub worst_drop: f64,
}

impl MonotonicityScan {
    fn from_points(mut points: Vec<(f64, f64, f64)>) -> Self {
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        let worst_drop =
            points.windows(2).map(|w| (w[0].1 - w[1].1) - (w[0].2 + w[1].2)).fold(f64::NEG_INFINITY, f64::max);
        MonotonicityScan { nondecreasing: !(worst_drop > 0.0), points, worst_drop }
    }

    pub fn to_check(&self) -> Check {
        Check {
            name: "monotonicity".into(),
            params: json!({ "radii": self.points.iter().map(|p| p.0).collect::<Vec<_>>() }),
            residuals: json!({ "points": self.points, "worst_drop": self.worst_drop }),
            tolerance: 0.0,
            verdict: if self.nondecreasing { Verdict::Pass } else { Verdict::Fail },
        }
    }
}

/// Monotonicity scan of a discrete profile; the slack is twice the energy of
/// the cell containing each radius.
pub fn monotonicity_profile(profile: &RadialProfile, p: &RadialPotential, radii: &[f64]) -> Result<MonotonicityScan> {
    let n = profile.grid.n() as f64;
    let v = &profile.values;
    let mut points = Vec::with_capacity(radii.len());
    for &r in radii {
        check_radius(r, profile.grid.radius())?;
        let scale = r.powf(-(n - 2.0));
        let e = profile_integral(profile, p, r, 1.0, 1.0);
        let (k, _) = locate(profile, r);
        let cell = crate::radial::cell_cost(
            profile.grid.weight(k),
            profile.grid.dr(k),
            profile.lambda,
            v[k],
            v[k + 1],
            p.value(v[k]),
        );
        points.push((r, scale * e, 2.0 * scale * cell));
    }
    Ok(MonotonicityScan::from_points(points))
}

/// Monotonicity scan of an exact profile; the slack is the quadrature tolerance.
pub fn monotonicity_closed_form(o: &ClosedFormProfile, p: &RadialPotential, radii: &[f64]) -> Result<MonotonicityScan> {
    let n = o.n as f64;
    let mut points = Vec::with_capacity(radii.len());
    for &r in radii {
        check_radius(r, o.radius)?;
        let e = r.powf(-(n - 2.0)) * closed_form_integral(o, p, r, 1.0, 1.0);
        points.push((r, e, 1e-12 * e.abs().max(1.0)));
    }
    Ok(MonotonicityScan::from_points(points))
}

/// Monotonicity scan of a lattice field around the node `center`; the slack
/// is twice the energy of the one-cell shell inside each radius.
pub fn monotonicity_field(
    f: &GridField,
    spec: &PotentialSpec,
    center: [f64; 2],
    radii: &[f64],
) -> Result<MonotonicityScan> {
    check_field_center(f, center)?;
    let depth = f.domain.geometry.distance_to_boundary(center);
    let data = field_scan_data(f);
    let n = f.domain.n as f64;
    let mut points = Vec::with_capacity(radii.len());
    for &r in radii {
        check_radius(r, depth)?;
        let (g, w) = field_bulk(f, spec, &data, center, r);
        let (gi, wi) = field_bulk(f, spec, &data, center, (r - f.domain.h).max(0.0));
        let scale = r.powf(-(n - 2.0));
        points.push((r, scale * (g + w), 2.0 * scale * ((g + w) - (gi + wi))));
    }
    Ok(MonotonicityScan::from_points(points))
}

/// Where the potential is sampled in a cell of the first-integral check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellRule {
    /// Inner node value, as in the discrete energy.
    #[default]
    LowerNode,
    /// Mean of the two node values.
    Midpoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianRecord {
    /// `(cell midpoint, ½ slope² − λ W_rad)` on the positive region.
    pub values: Vec<(f64, f64)>,
    pub mean: f64,
    pub max_deviation: f64,
    pub dead_core: bool,
    pub rule: CellRule,
    pub zero_tolerance: f64,
}

impl HamiltonianRecord {
    /// Pass when the deviation from the mean, and `|H|` in the presence of a
    /// dead core, stay below `tolerance`.
    pub fn to_check(&self, tolerance: f64) -> Check {
        let ok = self.max_deviation <= tolerance && (!self.dead_core || self.mean.abs() <= tolerance);
        Check {
            name: "hamiltonian".into(),
            params: json!({ "rule": self.rule, "zero_tolerance": self.zero_tolerance, "cells": self.values.len() }),
            residuals: json!({ "mean": self.mean, "max_deviation": self.max_deviation, "dead_core": self.dead_core }),
            tolerance,
            verdict: if ok { Verdict::Pass } else { Verdict::Fail },
        }
    }
}

/// Per-cell first integral of an `n = 1` profile on the cells whose inner
/// value exceeds `zero_tolerance`.
pub fn hamiltonian_check(
    profile: &RadialProfile,
    p: &RadialPotential,
    zero_tolerance: f64,
    rule: CellRule,
) -> Result<HamiltonianRecord> {
    if profile.grid.n() != 1 {
        return Err(Error::Precondition(format!("first integral needs n = 1, got n = {}", profile.grid.n())));
    }
    let v = &profile.values;
    let radii = profile.grid.radii();
    let values: Vec<(f64, f64)> = (0..profile.grid.cells())
        .filter(|&i| v[i] > zero_tolerance)
        .map(|i| {
            let slope = (v[i + 1] - v[i]) / profile.grid.dr(i);
            let s = match rule {
                CellRule::LowerNode => v[i],
                CellRule::Midpoint => 0.5 * (v[i] + v[i + 1]),
            };
            (0.5 * (radii[i] + radii[i + 1]), 0.5 * slope * slope - profile.lambda * p.value(s))
        })
        .collect();
    if values.is_empty() {
        return Err(Error::EmptyRegion("profile has no positive region".into()));
    }
    let mean = values.iter().map(|x| x.1).sum::<f64>() / values.len() as f64;
    let max_deviation = values.iter().map(|x| (x.1 - mean).abs()).fold(0.0, f64::max);
    Ok(HamiltonianRecord { values, mean, max_deviation, dead_core: v[0] <= zero_tolerance, rule, zero_tolerance })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaximumPrincipleRecord {
    pub min_value: f64,
    pub argmin: Option<[f64; 2]>,
    pub floor: f64,
    pub nodes_checked: usize,
    pub verdict: Verdict,
}

impl MaximumPrincipleRecord {
    pub fn to_check(&self) -> Check {
        Check {
            name: "maximum_principle".into(),
            params: json!({ "floor": self.floor }),
            residuals: json!({ "min_value": self.min_value, "argmin": self.argmin, "nodes_checked": self.nodes_checked }),
            tolerance: self.floor,
            verdict: self.verdict,
        }
    }
}

/// Positivity of a scalar field on the interior nodes of `subdomain` (the
/// whole lattice when `None`). Needs a divergent `I_q`, `W_0 ≡ 0` and positive
/// data on the boundary nodes. `floor` defaults to `q·1e−6`.
pub fn maximum_principle_check(
    f: &GridField,
    spec: &PotentialSpec,
    subdomain: Option<&Geometry>,
    floor: Option<f64>,
) -> Result<MaximumPrincipleRecord> {
    if f.m != 1 {
        return Err(Error::Precondition(format!("maximum principle check needs m = 1, got m = {}", f.m)));
    }
    if !spec.w_0.is_none() {
        return Err(Error::Precondition("maximum principle check needs a radial potential".into()));
    }
    if spec.w_rad.iq(IqVariant::SqrtW)?.is_finite() {
        return Err(Error::Precondition("I_q is finite: dead cores may occur, positivity is not implied".into()));
    }
    let d = &f.domain;
    let inside = |x: [f64; 2]| subdomain.is_none_or(|g| g.distance_to_boundary(x) >= -1e-12 * d.h);
    for k in 0..d.len() {
        if d.mask[k] == NodeKind::Boundary && inside(d.position(k)) && !(f.values[k] > 0.0) {
            return Err(Error::Precondition(format!(
                "boundary value {} at {:?} is not positive",
                f.values[k],
                d.position(k)
            )));
        }
    }
    let floor = floor.unwrap_or(f.q * 1e-6);
    let mut min_value = f64::INFINITY;
    let mut argmin = None;
    let mut checked = 0;
    for k in 0..d.len() {
        if d.mask[k] != NodeKind::Interior || !inside(d.position(k)) {
            continue;
        }
        checked += 1;
        if f.values[k] < min_value {
            min_value = f.values[k];
            argmin = Some(d.position(k));
        }
    }
    if checked == 0 {
        return Err(Error::EmptyRegion("no interior node in the subdomain".into()));
    }
    let verdict = if min_value > floor { Verdict::Pass } else { Verdict::Fail };
    Ok(MaximumPrincipleRecord { min_value, argmin, floor, nodes_checked: checked, verdict })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeadCoreFieldRecord {
    /// `(4n + √2)·I_q` with the `∫ 1/√W` definition.
    pub threshold: f64,
    pub iq: f64,
    pub inradius: f64,
    pub nodes_checked: usize,
    /// Largest `|u|` at depth `≥ threshold`.
    pub max_modulus: f64,
    pub zero_tolerance: f64,
    /// Largest depth of a node with `|u| > zero_tolerance`; every deeper node is in the core.
    pub empirical_depth: f64,
    pub verdict: Verdict,
}

impl DeadCoreFieldRecord {
    pub fn to_check(&self) -> Check {
        Check {
            name: "dead_core".into(),
            params: json!({ "threshold": self.threshold, "iq_sqrt_w": self.iq, "inradius": self.inradius }),
            residuals: json!({
                "max_modulus": self.max_modulus,
                "nodes_checked": self.nodes_checked,
                "empirical_depth": self.empirical_depth,
            }),
            tolerance: self.zero_tolerance,
            verdict: self.verdict,
        }
    }
}

/// Dead-core check on a field: `|u| ≤ zero_tolerance` at every node whose
/// distance to the boundary is at least `(4n + √2)·I_q`. Inconclusive when the
/// domain is too thin to contain such nodes.
pub fn dead_core_field_check(f: &GridField, spec: &PotentialSpec, zero_tolerance: f64) -> Result<DeadCoreFieldRecord> {
    let iq = spec.w_rad.iq(IqVariant::SqrtW)?;
    if !iq.is_finite() {
        return Err(Error::Precondition("I_q divergent: no dead core exists".into()));
    }
    let d = &f.domain;
    let threshold = (4.0 * d.n as f64 + std::f64::consts::SQRT_2) * iq.value;
    let modulus = f.modulus_field();
    let mut max_modulus: f64 = 0.0;
    let mut checked = 0;
    let mut empirical_depth: f64 = 0.0;
    for k in 0..d.len() {
        if d.mask[k] != NodeKind::Interior {
            continue;
        }
        let depth = d.geometry.distance_to_boundary(d.position(k));
        if modulus[k] > zero_tolerance {
            empirical_depth = empirical_depth.max(depth);
        }
        if depth >= threshold {
            checked += 1;
            max_modulus = max_modulus.max(modulus[k]);
        }
    }
    let verdict = if checked == 0 {
        Verdict::Inconclusive
    } else if max_modulus <= zero_tolerance {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(DeadCoreFieldRecord {
        threshold,
        iq: iq.value,
        inradius: d.geometry.inradius(),
        nodes_checked: checked,
        max_modulus,
        zero_tolerance,
        empirical_depth,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{BoundarySpec, FieldProblem};
    use crate::oracles::{cosh_profile_n1, first_integral_profile_n1};
    use crate::radial::{RadialGrid, RadialSolver};
    use approx::assert_relative_eq;

    fn zero_field(geometry: Geometry, cells: usize, m: usize) -> GridField {
        GridField::new(geometry.lattice(cells).unwrap(), m, 1.0, &BoundarySpec::Constant { value: vec![0.0; m] })
            .unwrap()
    }

    #[test]
    fn zero_field_is_below_any_comparison_profile() {
        let p = RadialPotential::characteristic(1.0).unwrap();
        let solver = RadialSolver { cells: 200, levels: crate::LevelSpec::Uniform { m: 40 }, ..Default::default() };
        let pair = solver.comparison_pair(&p, 2, 0.8).unwrap();
        let f = zero_field(Geometry::Disk { radius: 1.0 }, 40, 2);
        let v = verify_comparison(&f, &pair, [0.0, 0.0], 0.8, ComparisonMode::Interior).unwrap();
        assert!(v.max_violation <= 0.0);
        assert_eq!(v.verdict, Verdict::Pass);
        assert!(matches!(
            verify_comparison(&f, &pair, [0.5, 0.0], 0.8, ComparisonMode::Interior),
            Err(Error::Geometry(_))
        ));
        assert!(verify_comparison(&f, &pair, [0.5, 0.0], 0.8, ComparisonMode::Boundary).is_ok());
    }

    #[test]
    fn boundary_mode_rejects_nonzero_data() {
        let p = RadialPotential::characteristic(1.0).unwrap();
        let solver = RadialSolver { cells: 200, levels: crate::LevelSpec::Uniform { m: 40 }, ..Default::default() };
        let pair = solver.comparison_pair(&p, 2, 0.5).unwrap();
        let f = GridField::new(Geometry::Disk { radius: 1.0 }.lattice(40).unwrap(), 2, 1.0, &BoundarySpec::Hedgehog)
            .unwrap();
        assert!(matches!(verify_comparison(&f, &pair, [0.9, 0.0], 0.5, ComparisonMode::Boundary), Err(Error::Data(_))));
    }

    #[test]
    fn pohozaev_vanishes_on_first_integral_oracle() {
        let p = RadialPotential::power_law(1.0, 1.0).unwrap();
        let o = first_integral_profile_n1(&p, 3.0).unwrap();
        let radii: Vec<f64> = (1..=100).map(|k| 3.0 * k as f64 / 100.0).collect();
        let scan = pohozaev_closed_form(&o, &p, &radii).unwrap();
        assert_eq!(scan.records.len(), 100);
        assert!(scan.max_residual() <= 1e-8, "{}", scan.max_residual());
    }

    #[test]
    fn pohozaev_of_zero_field_is_trivial() {
        let f = zero_field(Geometry::Rectangle { lo: [-1.0, -1.0], hi: [1.0, 1.0] }, 20, 1);
        let spec = PotentialSpec::radial(RadialPotential::characteristic(1.0).unwrap(), 1).unwrap();
        let scan = pohozaev_field(&f, &spec, [0.0, 0.0], &[0.3, 0.6, 0.9]).unwrap();
        for r in &scan.records {
            assert_eq!((r.lhs, r.rhs, r.residual), (0.0, 0.0, 0.0));
        }
        assert!(matches!(pohozaev_field(&f, &spec, [0.0, 0.0], &[1.5]), Err(Error::Geometry(_))));
        assert!(matches!(pohozaev_field(&f, &spec, [0.05, 0.0], &[0.5]), Err(Error::Geometry(_))));
    }

    #[test]
    fn pohozaev_on_constant_field() {
        // u ≡ q: lhs = n·W·|B_r|, rhs = r·W·|∂B_r| = n·W·|B_r|.
        let spec = PotentialSpec::radial(RadialPotential::characteristic(1.0).unwrap(), 1).unwrap();
        let d = Geometry::Rectangle { lo: [-1.0, -1.0], hi: [1.0, 1.0] }.lattice(200).unwrap();
        let f = GridField::from_fn(d, 1, 1.0, &BoundarySpec::Constant { value: vec![1.0] }, |_| vec![1.0]).unwrap();
        let scan = pohozaev_field(&f, &spec, [0.0, 0.0], &[0.5]).unwrap();
        assert!(scan.records[0].residual < 0.02, "{:?}", scan.records[0]);
    }

    #[test]
    fn monotonicity_examples() {
        let spec = PotentialSpec::radial(RadialPotential::characteristic(1.0).unwrap(), 1).unwrap();
        let f = zero_field(Geometry::Rectangle { lo: [-1.0, -1.0], hi: [1.0, 1.0] }, 20, 1);
        let scan = monotonicity_field(&f, &spec, [0.0, 0.0], &[0.2, 0.5, 0.8]).unwrap();
        assert!(scan.nondecreasing && scan.points.iter().all(|p| p.1 == 0.0));

        let p = RadialPotential::characteristic(1.0).unwrap();
        let grid = RadialGrid::uniform(2, 1.0, 100).unwrap();
        let ones = RadialProfile { grid: grid.clone(), values: vec![1.0; 101], lambda: 1.0, energy: 0.0 };
        let scan = monotonicity_profile(&ones, &p, &[0.1, 0.4, 0.7, 1.0]).unwrap();
        assert!(scan.nondecreasing);
        assert!(scan.points.windows(2).all(|w| w[1].1 > w[0].1));
        assert_relative_eq!(scan.points[3].1, 0.5, max_relative = 1e-12);

        let quad = RadialPotential::power_law(2.0, 1.0).unwrap();
        let cosh = cosh_profile_n1(1.0, 1.0).unwrap();
        let radii: Vec<f64> = (1..=20).map(|k| k as f64 / 20.0).collect();
        assert!(monotonicity_closed_form(&cosh, &quad, &radii).unwrap().nondecreasing);
    }

    #[test]
    fn hamiltonian_examples() {
        let p = RadialPotential::power_law(1.0, 1.0).unwrap();
        let o = first_integral_profile_n1(&p, 3.0).unwrap();
        let grid = RadialGrid::uniform(1, 3.0, 3000).unwrap();
        let prof = o.to_profile(&grid, 1.0, &p);
        let rec = hamiltonian_check(&prof, &p, 0.0, CellRule::Midpoint).unwrap();
        assert!(rec.max_deviation <= 1e-6 && rec.mean.abs() <= 1e-6, "{} {}", rec.max_deviation, rec.mean);
        assert!(rec.dead_core);

        let quad = RadialPotential::power_law(2.0, 1.0).unwrap();
        let cosh = cosh_profile_n1(1.0, 1.0).unwrap();
        let grid = RadialGrid::uniform(1, 1.0, 1000).unwrap();
        let rec = hamiltonian_check(&cosh.to_profile(&grid, 1.0, &quad), &quad, 0.0, CellRule::Midpoint).unwrap();
        // ½ψ'² − ψ² = −a² with a = q/cosh(√2 R).
        let a = 1.0 / (2f64.sqrt()).cosh();
        assert!(rec.max_deviation <= 1e-4);
        assert_relative_eq!(rec.mean, -a * a, max_relative = 1e-3);

        let zero = RadialPotential::zero(1.0).unwrap();
        let ones = RadialProfile { grid: grid.clone(), values: vec![1.0; 1001], lambda: 1.0, energy: 0.0 };
        let rec = hamiltonian_check(&ones, &zero, 0.0, CellRule::LowerNode).unwrap();
        assert!(rec.values.iter().all(|v| v.1 == 0.0));

        let zeros = RadialProfile { grid, values: vec![0.0; 1001], lambda: 1.0, energy: 0.0 };
        assert!(matches!(hamiltonian_check(&zeros, &zero, 0.0, CellRule::LowerNode), Err(Error::EmptyRegion(_))));
    }

    #[test]
    fn maximum_principle_examples() {
        let quad = RadialPotential::power_law(2.0, 1.0).unwrap();
        let spec = PotentialSpec::radial(quad, 1).unwrap();
        let d = Geometry::Interval { lo: -1.0, hi: 1.0 }.lattice(200).unwrap();
        let cosh = cosh_profile_n1(1.0, 1.0).unwrap();
        let f = GridField::from_fn(d, 1, 1.0, &BoundarySpec::Constant { value: vec![1.0] }, |x| {
            vec![cosh.value(x[0].abs())]
        })
        .unwrap();
        let rec = maximum_principle_check(&f, &spec, None, None).unwrap();
        assert_eq!(rec.verdict, Verdict::Pass);
        assert_relative_eq!(rec.min_value, cosh.value(0.0), max_relative = 1e-14);

        let lin = PotentialSpec::radial(RadialPotential::power_law(1.0, 1.0).unwrap(), 1).unwrap();
        assert!(matches!(maximum_principle_check(&f, &lin, None, None), Err(Error::Precondition(_))));
    }

    #[test]
    fn dead_core_field_check_on_small_disk_is_inconclusive() {
        let p = RadialPotential::power_law(1.0, 1.0).unwrap();
        let spec = PotentialSpec::radial(p, 2).unwrap();
        let prob = FieldProblem {
            geometry: Geometry::Disk { radius: 1.0 },
            cells: 20,
            boundary: BoundarySpec::Hedgehog,
            spec: spec.clone(),
        };
        let f = prob.field(20).unwrap();
        let rec = dead_core_field_check(&f, &spec, 1e-3).unwrap();
        assert_eq!(rec.verdict, Verdict::Inconclusive);
        let quad = PotentialSpec::radial(RadialPotential::power_law(2.0, 1.0).unwrap(), 2).unwrap();
        assert!(matches!(dead_core_field_check(&f, &quad, 1e-3), Err(Error::Precondition(_))));
    }

    #[test]
    fn report_serializes_checks() {
        let mut report = Report::new(json!({"seed": 42}));
        report.push(Check {
            name: "x".into(),
            params: json!({}),
            residuals: json!({}),
            tolerance: 0.1,
            verdict: Verdict::Inconclusive,
        });
        let v = report.to_json();
        assert_eq!(v["checks"][0]["verdict"], "inconclusive");
        assert_eq!(v["config"]["seed"], 42);
        assert!(!report.all_pass());
    }
}
