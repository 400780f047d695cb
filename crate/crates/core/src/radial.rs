//! Global minimization of the radially reduced energy
//!
//! ```text
//! J^λ(h) = Σᵢ r̄ᵢ^(n−1) Δrᵢ [ ½ ((hᵢ₊₁ − hᵢ)/Δrᵢ)² + λ W_rad(hᵢ) ]
//! ```
//!
//! over nondecreasing profiles with `h(R) = q`, by dynamic programming over
//! (radial node, value level). The surface measure `|S^(n−1)|` is dropped
//! from every energy. The potential term of a cell uses the value at its inner
//! node, which for monotone profiles never overestimates a jump of `W_rad`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::{IqResult, IqVariant, RadialPotential};

/// Radial nodes `0 = r₀ < r₁ < … < r_N = R` in ambient dimension `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    n: u32,
    radii: Vec<f64>,
    #[serde(skip)]
    weights: Vec<f64>,
}

impl RadialGrid {
    pub fn uniform(n: u32, radius: f64, cells: usize) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::Domain(format!("ball radius must be positive, got {radius}")));
        }
        if cells == 0 {
            return Err(Error::Domain("grid needs at least one cell".into()));
        }
        let dr = radius / cells as f64;
        let mut radii: Vec<f64> = (0..=cells).map(|i| i as f64 * dr).collect();
        radii[cells] = radius;
        Self::from_radii(n, radii)
    }

    pub fn from_radii(n: u32, radii: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("dimension n must be positive".into()));
        }
        if radii.len() < 2 || radii[0] != 0.0 {
            return Err(Error::Domain("radii must start at 0 and contain at least two nodes".into()));
        }
        if radii.windows(2).any(|w| !(w[1] > w[0])) || !radii.iter().all(|r| r.is_finite()) {
            return Err(Error::Domain("radii must be strictly increasing and finite".into()));
        }
        let weights = radii.windows(2).map(|w| (0.5 * (w[0] + w[1])).powi(n as i32 - 1)).collect();
        Ok(RadialGrid { n, radii, weights })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn radius(&self) -> f64 {
        *self.radii.last().expect("nonempty grid")
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    /// Number of cells `N`.
    pub fn cells(&self) -> usize {
        self.radii.len() - 1
    }

    #[inline]
    pub fn dr(&self, cell: usize) -> f64 {
        self.radii[cell + 1] - self.radii[cell]
    }

    /// `r̄^(n−1)` at the midpoint of `cell`.
    #[inline]
    pub fn weight(&self, cell: usize) -> f64 {
        self.weights[cell]
    }

    /// Largest cell width.
    pub fn max_dr(&self) -> f64 {
        (0..self.cells()).map(|i| self.dr(i)).fold(0.0, f64::max)
    }
}

/// Energy of one cell with inner value `lower`, outer value `upper` and
/// `w_lower = W_rad(lower)`.
#[inline]
pub fn cell_cost(weight: f64, dr: f64, lambda: f64, lower: f64, upper: f64, w_lower: f64) -> f64 {
    let slope = (upper - lower) / dr;
    weight * dr * (0.5 * (slope * slope) + lambda * w_lower)
}

/// Discrete `J^λ` of arbitrary nodal values on `grid`, summed from the center outwards.
pub fn energy_of(grid: &RadialGrid, values: &[f64], lambda: f64, p: &RadialPotential) -> f64 {
    let mut total = 0.0;
    for i in 0..grid.cells() {
        total += cell_cost(grid.weight(i), grid.dr(i), lambda, values[i], values[i + 1], p.value(values[i]));
    }
    total
}

/// Set of admissible values for the dynamic program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LevelSpec {
    /// `m + 1` levels `q·j/m`.
    Uniform { m: usize },
    /// Uniform levels plus `extra` geometric levels `q/(m·2^k)` below the first
    /// nonzero one, so profiles can take very small positive values.
    Graded { m: usize, extra: usize },
}

impl LevelSpec {
    pub fn m(&self) -> usize {
        match *self {
            LevelSpec::Uniform { m } | LevelSpec::Graded { m, .. } => m,
        }
    }

    pub fn values(&self, q: f64) -> Vec<f64> {
        let m = self.m();
        let step = q / m as f64;
        let mut out = vec![0.0];
        if let LevelSpec::Graded { extra, .. } = *self {
            for k in (1..=extra).rev() {
                out.push(step * 0.5f64.powi(k as i32));
            }
        }
        out.extend((1..m).map(|j| j as f64 * step));
        out.push(q);
        out
    }

    /// Same family with `factor` times as many uniform levels.
    pub fn refined(&self, factor: usize) -> LevelSpec {
        match *self {
            LevelSpec::Uniform { m } => LevelSpec::Uniform { m: m * factor },
            LevelSpec::Graded { m, extra } => LevelSpec::Graded { m: m * factor, extra },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TieBreak {
    PreferLow,
    PreferHigh,
}

/// Monotone radial profile on a grid, with the `λ` it minimizes for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub grid: RadialGrid,
    pub values: Vec<f64>,
    pub lambda: f64,
    pub energy: f64,
}

impl RadialProfile {
    pub fn q(&self) -> f64 {
        *self.values.last().expect("nonempty profile")
    }

    /// Linear interpolation of the profile at radius `r` (clamped to `[0, R]`).
    pub fn eval(&self, r: f64) -> f64 {
        let radii = self.grid.radii();
        if r <= 0.0 {
            return self.values[0];
        }
        if r >= self.grid.radius() {
            return self.q();
        }
        let k = radii.partition_point(|&x| x <= r).clamp(1, radii.len() - 1);
        let (r0, r1) = (radii[k - 1], radii[k]);
        let t = (r - r0) / (r1 - r0);
        self.values[k - 1] + t * (self.values[k] - self.values[k - 1])
    }

    pub fn is_monotone(&self) -> bool {
        self.values.windows(2).all(|w| w[0] <= w[1])
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Radius of the largest ball `[0, r]` on which the profile stays below
    /// `tolerance`, with the crossing located by linear interpolation.
    pub fn zero_scan_radius(&self, tolerance: f64) -> f64 {
        if self.values[0] > tolerance {
            return 0.0;
        }
        let k = self.values.iter().position(|&v| v > tolerance);
        match k {
            None => self.grid.radius(),
            Some(k) => {
                let radii = self.grid.radii();
                let (v0, v1) = (self.values[k - 1], self.values[k]);
                let t = (tolerance - v0) / (v1 - v0);
                radii[k - 1] + t * (radii[k] - radii[k - 1])
            }
        }
    }
}

/// Discrete `J^λ` of a profile.
pub fn discrete_energy(profile: &RadialProfile, p: &RadialPotential) -> f64 {
    energy_of(&profile.grid, &profile.values, profile.lambda, p)
}

/// Default cap on `N · L²` inner-loop work for one dynamic program.
pub const DEFAULT_DP_BUDGET: f64 = 6e10;

/// One radial minimization problem: potential, grid and `λ`.
#[derive(Debug, Clone)]
pub struct RadialProblem {
    pub potential: RadialPotential,
    pub grid: RadialGrid,
    pub lambda: f64,
}

impl RadialProblem {
    pub fn new(potential: RadialPotential, grid: RadialGrid, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::Domain(format!("lambda must be positive, got {lambda}")));
        }
        Ok(RadialProblem { potential, grid, lambda })
    }

    pub fn uniform(potential: RadialPotential, n: u32, radius: f64, cells: usize, lambda: f64) -> Result<Self> {
        Self::new(potential, RadialGrid::uniform(n, radius, cells)?, lambda)
    }

    fn profile_from(&self, values: Vec<f64>) -> RadialProfile {
        let energy = energy_of(&self.grid, &values, self.lambda, &self.potential);
        RadialProfile { grid: self.grid.clone(), values, lambda: self.lambda, energy }
    }

    /// Exact minimizer of the discrete energy over monotone profiles taking
    /// values in `levels`, with `h(R) = q`.
    pub fn solve_dp(&self, levels: &LevelSpec, tie: TieBreak) -> Result<RadialProfile> {
        self.solve_dp_with_budget(levels, tie, DEFAULT_DP_BUDGET)
    }

    pub fn solve_dp_with_budget(&self, levels: &LevelSpec, tie: TieBreak, budget: f64) -> Result<RadialProfile> {
        let values = levels.values(self.potential.q());
        let last = values.len() - 1;
        let cells = self.grid.cells();
        let work = cells as f64 * (values.len() as f64).powi(2);
        if work > budget {
            return Err(Error::Resource(format!(
                "dynamic program needs N·L² = {work:.3e} operations, budget is {budget:.3e}"
            )));
        }
        let mut ranges = vec![(0, last); cells + 1];
        ranges[cells] = (last, last);
        let path = self.run_dp(&values, &ranges, tie)?;
        Ok(self.profile_from(path.into_iter().map(|j| values[j]).collect()))
    }

    /// Coarse dynamic program followed by `stages` dynamic programs on levels
    /// refined by `factor` each time, every one restricted to a tube of `tube`
    /// previous-stage levels around the previous solution.
    pub fn solve_dp_multires(
        &self,
        levels: &LevelSpec,
        tie: TieBreak,
        factor: usize,
        stages: usize,
        tube: usize,
        budget: f64,
    ) -> Result<RadialProfile> {
        let q = self.potential.q();
        let mut current = self.solve_dp_with_budget(levels, tie, budget)?;
        if factor <= 1 {
            return Ok(current);
        }
        let mut spec = *levels;
        for _ in 0..stages {
            let half_width = tube as f64 * q / spec.m() as f64;
            spec = spec.refined(factor);
            current = self.solve_tube(&current.values, &spec, tie, half_width, budget)?;
        }
        Ok(current)
    }

    /// Dynamic program on `levels` restricted to values within `half_width` of
    /// `center` at every node. The tube is re-centered on its own solution
    /// until the energy stops decreasing.
    pub fn solve_tube(
        &self,
        center: &[f64],
        levels: &LevelSpec,
        tie: TieBreak,
        half_width: f64,
        budget: f64,
    ) -> Result<RadialProfile> {
        const MAX_RECENTER: usize = 64;
        let cells = self.grid.cells();
        if center.len() != cells + 1 {
            return Err(Error::Precondition(format!(
                "tube center has {} values for {} nodes",
                center.len(),
                cells + 1
            )));
        }
        let values = levels.values(self.potential.q());
        let last = values.len() - 1;
        let half_width = half_width * (1.0 + 1e-12);
        let mut current: Option<RadialProfile> = None;
        for _ in 0..MAX_RECENTER {
            let around = current.as_ref().map_or(center, |c| &c.values[..]);
            let mut ranges: Vec<(usize, usize)> = around
                .iter()
                .map(|&v| {
                    let lo = values.partition_point(|&x| x < v - half_width).min(last);
                    let hi = values.partition_point(|&x| x <= v + half_width).saturating_sub(1);
                    (lo, hi.max(lo).min(last))
                })
                .collect();
            ranges[cells] = (last, last);
            let work: f64 = ranges.windows(2).map(|w| ((w[0].1 - w[0].0 + 1) * (w[1].1 - w[1].0 + 1)) as f64).sum();
            if work > budget {
                return Err(Error::Resource(format!(
                    "tube dynamic program needs {work:.3e} operations, budget is {budget:.3e}"
                )));
            }
            let path = self.run_dp(&values, &ranges, tie)?;
            let next = self.profile_from(path.into_iter().map(|j| values[j]).collect());
            let stop = match &current {
                None => false,
                Some(c) => !(next.energy < c.energy) || next.values == c.values,
            };
            current = Some(next);
            if stop {
                break;
            }
        }
        Ok(current.expect("at least one tube pass"))
    }

    /// Forward dynamic program over per-node index ranges of `levels`.
    /// Returns the level index of every node.
    fn run_dp(&self, levels: &[f64], ranges: &[(usize, usize)], tie: TieBreak) -> Result<Vec<usize>> {
        let cells = self.grid.cells();
        let lambda = self.lambda;
        let potential = &self.potential;

        // best[k] is the optimal energy of cells 0..i ending at level ranges[i].0 + k.
        let mut best = vec![0.0; ranges[0].1 + 1 - ranges[0].0];
        let mut preds: Vec<Vec<u32>> = Vec::with_capacity(cells);

        for i in 0..cells {
            let (alo, ahi) = ranges[i];
            let (blo, bhi) = ranges[i + 1];
            let weight = self.grid.weight(i);
            let dr = self.grid.dr(i);
            let wa: Vec<f64> = levels[alo..=ahi].iter().map(|&v| potential.value(v)).collect();
            let best_ref = &best;
            let relax = |b: usize| -> (f64, u32) {
                let vb = levels[b];
                let mut min = f64::INFINITY;
                let mut arg = u32::MAX;
                let top = ahi.min(b);
                if alo > top {
                    return (min, arg);
                }
                for a in alo..=top {
                    let fa = best_ref[a - alo];
                    if fa == f64::INFINITY {
                        continue;
                    }
                    let val = fa + cell_cost(weight, dr, lambda, levels[a], vb, wa[a - alo]);
                    let take = match tie {
                        TieBreak::PreferLow => val < min,
                        TieBreak::PreferHigh => val <= min,
                    };
                    if take {
                        min = val;
                        arg = a as u32;
                    }
                }
                (min, arg)
            };

            let work = (bhi + 1 - blo) * (ahi + 1 - alo);
            let relaxed: Vec<(f64, u32)> = if work >= 1 << 16 {
                (blo..=bhi).into_par_iter().map(relax).collect()
            } else {
                (blo..=bhi).map(relax).collect()
            };
            let (next, row): (Vec<f64>, Vec<u32>) = relaxed.into_iter().unzip();
            best = next;
            preds.push(row);
        }

        if best[0] == f64::INFINITY {
            return Err(Error::NonConvergence("no admissible monotone path through the level tube".into()));
        }
        let mut path = vec![0usize; cells + 1];
        path[cells] = ranges[cells].0;
        for i in (0..cells).rev() {
            let a = preds[i][path[i + 1] - ranges[i + 1].0];
            debug_assert!(a != u32::MAX);
            path[i] = a as usize;
        }
        Ok(path)
    }
}

/// Convenience wrapper: uniform grid with `cells` cells and `m + 1` uniform levels.
pub fn solve_dp(
    p: &RadialPotential,
    n: u32,
    radius: f64,
    lambda: f64,
    cells: usize,
    m: usize,
    tie: TieBreak,
) -> Result<RadialProfile> {
    if cells < 16 || m < 8 {
        return Err(Error::Precondition(format!("need N ≥ 16 and M ≥ 8, got N = {cells}, M = {m}")));
    }
    RadialProblem::uniform(p.clone(), n, radius, cells, lambda)?.solve_dp(&LevelSpec::Uniform { m }, tie)
}

fn golden_min<F: FnMut(f64) -> f64>(f: &mut F, lo: f64, hi: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let tol = (hi - lo).abs() * 1e-13;
    for _ in 0..200 {
        if (b - a) <= tol {
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

/// Coordinate-descent polish of a monotone profile: each free node is moved to
/// the minimizer of its two adjacent cell energies over `[h_{i−1}, h_{i+1}]`.
/// The total energy never increases and monotonicity is preserved.
pub fn refine_local(profile: &RadialProfile, p: &RadialPotential, passes: usize) -> RadialProfile {
    let grid = &profile.grid;
    let lambda = profile.lambda;
    let cells = grid.cells();
    let jumps = p.discontinuities();
    let mut values = profile.values.clone();
    let mut energy = energy_of(grid, &values, lambda, p);

    for pass in 0..passes {
        let snapshot = values.clone();
        let mut moved = 0.0f64;
        let order: Box<dyn Iterator<Item = usize>> =
            if pass % 2 == 0 { Box::new((0..cells).rev()) } else { Box::new(0..cells) };
        for i in order {
            let lo = if i == 0 { 0.0 } else { values[i - 1] };
            let hi = values[i + 1];
            if hi <= lo {
                continue;
            }
            let left = if i == 0 {
                None
            } else {
                Some((grid.weight(i - 1), grid.dr(i - 1), values[i - 1], p.value(values[i - 1])))
            };
            let (w_out, dr_out, outer) = (grid.weight(i), grid.dr(i), values[i + 1]);
            let mut local = |v: f64| {
                let inner = left.map_or(0.0, |(w, dr, h, wh)| cell_cost(w, dr, lambda, h, v, wh));
                inner + cell_cost(w_out, dr_out, lambda, v, outer, p.value(v))
            };
            let current = values[i];
            let mut best = (current, local(current));
            let consider = |x: f64, fx: f64, best: &mut (f64, f64)| {
                if fx < best.1 {
                    *best = (x, fx);
                }
            };
            let f_lo = local(lo);
            consider(lo, f_lo, &mut best);
            let f_hi = local(hi);
            consider(hi, f_hi, &mut best);
            let mut cuts: Vec<f64> = jumps.iter().copied().filter(|&d| d > lo && d < hi).collect();
            for &d in &cuts {
                let fd = local(d);
                consider(d, fd, &mut best);
            }
            cuts.insert(0, lo);
            cuts.push(hi);
            for w in cuts.windows(2) {
                let (x, fx) = golden_min(&mut local, w[0], w[1]);
                consider(x, fx, &mut best);
            }
            if best.0 != current {
                moved = moved.max((best.0 - current).abs());
                values[i] = best.0;
            }
        }
        let updated = energy_of(grid, &values, lambda, p);
        if updated > energy {
            values = snapshot;
            break;
        }
        energy = updated;
        if moved <= f64::EPSILON * profile.q() {
            break;
        }
    }
    RadialProfile { grid: grid.clone(), values, lambda, energy }
}

/// Iteration cap of [`polish_newton`] inside [`RadialSolver::profile`].
pub const NEWTON_ITERATIONS: usize = 50;

/// Safeguarded Newton iteration for the nodes whose values lie strictly
/// inside `(0, q)` and off the jumps of `W_rad`, followed by a hill climb on
/// the free boundaries: a node next to a plateau at `0` or at a jump of
/// `W_rad` is released from it or captured onto it, then re-polished, while
/// this lowers the energy.
///
/// The Hessian keeps only the convex part of `W_rad''`, so each step solves a
/// positive definite tridiagonal system. Steps are halved until the energy
/// decreases and the profile stays monotone.
pub fn polish_newton(profile: &RadialProfile, p: &RadialPotential, iterations: usize) -> RadialProfile {
    let grid = &profile.grid;
    let lambda = profile.lambda;
    let (mut values, mut energy) = newton_steps(grid, p, lambda, profile.values.clone(), iterations);
    let mut anchors = p.discontinuities();
    if !anchors.contains(&0.0) {
        anchors.insert(0, 0.0);
    }
    let slack = 1e-12 * p.q();
    let cells = grid.cells();
    for _ in 0..4 * cells {
        let mut best: Option<(Vec<f64>, f64)> = None;
        for k in 0..cells {
            let a = values[k];
            if !anchors.iter().any(|&x| (a - x).abs() <= slack) || values[k + 1] <= a + slack {
                continue;
            }
            let mut release = values.clone();
            release[k] = 0.5 * (a + values[k + 1]);
            let mut capture = values.clone();
            if k + 1 < cells {
                capture[k + 1] = a;
            }
            for trial in [release, capture] {
                if trial == values {
                    continue;
                }
                let (v, e) = newton_steps(grid, p, lambda, trial, iterations);
                if e < energy - 1e-15 * energy.abs() && best.as_ref().is_none_or(|b| e < b.1) {
                    best = Some((v, e));
                }
            }
        }
        match best {
            Some((v, e)) => {
                values = v;
                energy = e;
            }
            None => break,
        }
    }
    RadialProfile { grid: grid.clone(), values, lambda, energy }
}

fn newton_steps(
    grid: &RadialGrid,
    p: &RadialPotential,
    lambda: f64,
    mut values: Vec<f64>,
    iterations: usize,
) -> (Vec<f64>, f64) {
    let cells = grid.cells();
    let q = p.q();
    let jumps = p.discontinuities();
    let mut energy = energy_of(grid, &values, lambda, p);
    let slack = 1e-12 * q;

    for _ in 0..iterations {
        let free: Vec<bool> = (0..=cells)
            .map(|i| {
                let v = values[i];
                i < cells && v > slack && v < q - slack && jumps.iter().all(|&d| (v - d).abs() > slack)
            })
            .collect();
        if !free.iter().any(|&f| f) {
            break;
        }
        let mut diag = vec![1.0; cells + 1];
        let mut upper = vec![0.0; cells + 1];
        let mut rhs = vec![0.0; cells + 1];
        for i in 0..cells {
            if !free[i] {
                continue;
            }
            let (w_out, dr_out) = (grid.weight(i), grid.dr(i));
            let (d1, d2) = p.derivatives(values[i]);
            let mut g = -w_out * (values[i + 1] - values[i]) / dr_out + lambda * w_out * dr_out * d1;
            let mut h = w_out / dr_out + lambda * w_out * dr_out * d2.max(0.0);
            if i > 0 {
                let (w_in, dr_in) = (grid.weight(i - 1), grid.dr(i - 1));
                g += w_in * (values[i] - values[i - 1]) / dr_in;
                h += w_in / dr_in;
            }
            diag[i] = h;
            rhs[i] = -g;
            if free[i + 1] {
                upper[i] = -w_out / dr_out;
            }
        }
        // Thomas algorithm for the symmetric tridiagonal system.
        let mut c = vec![0.0; cells + 1];
        let mut d = vec![0.0; cells + 1];
        for i in 0..=cells {
            let lower = if i > 0 { upper[i - 1] } else { 0.0 };
            let prev_c = if i > 0 { c[i - 1] } else { 0.0 };
            let prev_d = if i > 0 { d[i - 1] } else { 0.0 };
            let denom = diag[i] - lower * prev_c;
            c[i] = upper[i] / denom;
            d[i] = (rhs[i] - lower * prev_d) / denom;
        }
        let mut step = vec![0.0; cells + 1];
        for i in (0..=cells).rev() {
            step[i] = d[i] - if i < cells { c[i] * step[i + 1] } else { 0.0 };
        }
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial: Vec<f64> = values
                .iter()
                .zip(&step)
                .zip(&free)
                .map(|((&v, &s), &f)| if f { (v + t * s).clamp(0.0, q) } else { v })
                .collect();
            if trial.windows(2).all(|w| w[0] <= w[1]) {
                let e = energy_of(grid, &trial, lambda, p);
                if e < energy {
                    accepted = energy - e > 1e-15 * energy.abs();
                    values = trial;
                    energy = e;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (values, energy)
}

/// Numerical upper and lower comparison functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonPair {
    pub upper: RadialProfile,
    pub lower: RadialProfile,
    /// `(λ₋, λ₊)` used for the upper and lower profile respectively.
    pub lambda_bracket: (f64, f64),
    pub levels: LevelSpec,
}

impl ComparisonPair {
    /// Largest amount by which `lower` exceeds `upper`.
    pub fn ordering_gap(&self) -> f64 {
        self.lower.values.iter().zip(&self.upper.values).map(|(l, u)| l - u).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn radius(&self) -> f64 {
        self.upper.grid.radius()
    }
}

/// Settings shared by the comparison-pair, dead-core and critical-radius routines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialSolver {
    /// Number of radial cells `N`.
    pub cells: usize,
    pub levels: LevelSpec,
    /// Offset of `λ` from 1 for the one-sided limits.
    pub eps: f64,
    pub refine_passes: usize,
    /// Level refinement factor of each tube stage; `1` disables them.
    pub multires: usize,
    /// Number of tube stages on the target grid.
    pub stages: usize,
    /// Ratio `M / N` on the coarsest grid of the radial cascade.
    pub levels_per_cell: usize,
    /// Half-width of the tube in coarse levels.
    pub tube: usize,
    pub budget: f64,
}

impl Default for RadialSolver {
    fn default() -> Self {
        RadialSolver {
            cells: 2000,
            levels: LevelSpec::Uniform { m: 400 },
            eps: 1e-3,
            refine_passes: 200,
            multires: 4,
            stages: 1,
            levels_per_cell: 2,
            tube: 3,
            budget: DEFAULT_DP_BUDGET,
        }
    }
}

/// Smallest `eps` tried before the ordering check is declared failed.
pub const MIN_EPS: f64 = 1e-6;

impl RadialSolver {
    /// Settings for [`RadialSolver::critical_radius`]: the coarse grid decides
    /// whether a core forms, so it gets more cells and levels than the default.
    pub fn bisection_preset() -> Self {
        RadialSolver { cells: 1000, levels: LevelSpec::Uniform { m: 1000 }, ..RadialSolver::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.cells < 16 {
            return Err(Error::Precondition(format!("need N ≥ 16, got {}", self.cells)));
        }
        if self.levels.m() < 8 {
            return Err(Error::Precondition(format!("need M ≥ 8, got {}", self.levels.m())));
        }
        if !(self.eps > 0.0 && self.eps < 0.5) {
            return Err(Error::Precondition(format!("eps must lie in (0, 0.5), got {}", self.eps)));
        }
        if self.levels_per_cell == 0 || self.tube == 0 {
            return Err(Error::Precondition("levels_per_cell and tube must be positive".into()));
        }
        if self.multires == 0 {
            return Err(Error::Precondition("multires factor must be at least 1".into()));
        }
        Ok(())
    }

    /// One level of quantization, `q / M`.
    pub fn level_step(&self, q: f64) -> f64 {
        q / self.levels.m() as f64
    }

    /// Threshold below which a profile value counts as zero: `q·1e−3 + q/M`.
    pub fn zero_tolerance(&self, q: f64) -> f64 {
        q * 1e-3 + self.level_step(q)
    }

    /// Number of cells of the coarsest grid in the radial cascade.
    pub fn base_cells(&self) -> usize {
        (self.levels.m() / self.levels_per_cell.max(1)).clamp(16, self.cells)
    }

    /// Cascade minimization on a uniform grid of `cells` cells:
    ///
    /// 1. full dynamic program on a coarse grid of about `M / levels_per_cell` cells;
    /// 2. repeated doubling of the grid, each time with twice as many levels and
    ///    a tube of `tube` previous levels around the interpolated solution;
    /// 3. `stages` tube passes on the target grid with levels refined by `multires`;
    /// 4. [`refine_local`] followed by [`polish_newton`].
    ///
    /// Value levels stay much finer than the profile increment per cell, which
    /// keeps quantization from biasing the minimizer towards flat staircases.
    pub fn profile(
        &self,
        p: &RadialPotential,
        n: u32,
        radius: f64,
        lambda: f64,
        tie: TieBreak,
    ) -> Result<RadialProfile> {
        self.validate()?;
        let q = p.q();
        let base = self.base_cells();
        let mut depth = 0u32;
        while self.cells.div_ceil(1 << depth) > base {
            depth += 1;
        }
        let mut spec = self.levels;
        let coarse = RadialProblem::uniform(p.clone(), n, radius, self.cells.div_ceil(1 << depth), lambda)?;
        let mut current = coarse.solve_dp_with_budget(&spec, tie, self.budget)?;
        let mut problem = coarse;
        for j in (0..depth).rev() {
            problem = RadialProblem::uniform(p.clone(), n, radius, self.cells.div_ceil(1 << j), lambda)?;
            let center: Vec<f64> = problem.grid.radii().iter().map(|&r| current.eval(r)).collect();
            let half_width = self.tube as f64 * q / self.levels.m() as f64;
            spec = spec.refined(2);
            current = problem.solve_tube(&center, &spec, tie, half_width, self.budget)?;
        }
        if self.multires > 1 {
            for _ in 0..self.stages {
                let half_width = self.tube as f64 * q / spec.m() as f64;
                spec = spec.refined(self.multires);
                current = problem.solve_tube(&current.values, &spec, tie, half_width, self.budget)?;
            }
        }
        let refined = refine_local(&current, p, self.refine_passes);
        Ok(polish_newton(&refined, p, NEWTON_ITERATIONS))
    }

    /// Upper profile at `λ = 1 − eps` (ties resolved upwards) and lower profile at
    /// `λ = 1 + eps` (ties resolved downwards). If the pair is not ordered within
    /// one value level, `eps` is reduced tenfold down to [`MIN_EPS`].
    pub fn comparison_pair(&self, p: &RadialPotential, n: u32, radius: f64) -> Result<ComparisonPair> {
        self.validate()?;
        let tolerance = self.level_step(p.q()) + 1e-12 * p.q();
        let mut eps = self.eps;
        loop {
            let upper = self.profile(p, n, radius, 1.0 - eps, TieBreak::PreferHigh)?;
            let lower = self.profile(p, n, radius, 1.0 + eps, TieBreak::PreferLow)?;
            let pair = ComparisonPair { upper, lower, lambda_bracket: (1.0 - eps, 1.0 + eps), levels: self.levels };
            if pair.ordering_gap() <= tolerance {
                return Ok(pair);
            }
            eps /= 10.0;
            if eps < MIN_EPS {
                return Err(Error::NonConvergence(format!(
                    "lower profile exceeds upper by {:.3e} for every eps down to {MIN_EPS:e}",
                    pair.ordering_gap()
                )));
            }
        }
    }

    pub fn dead_core_report(&self, pair: &ComparisonPair, p: &RadialPotential) -> Result<DeadCoreReport> {
        DeadCoreReport::new(pair, p, self.zero_tolerance(p.q()))
    }

    /// Whether the upper comparison function on `B_R` has a dead core.
    pub fn has_dead_core(&self, p: &RadialPotential, n: u32, radius: f64) -> Result<bool> {
        let upper = self.profile(p, n, radius, 1.0 - self.eps, TieBreak::PreferHigh)?;
        Ok(upper.zero_scan_radius(self.zero_tolerance(p.q())) > 0.0)
    }

    /// Bisection on `R` for the smallest ball whose upper comparison function
    /// has a dead core, to a bracket of width `tol`.
    pub fn critical_radius(&self, p: &RadialPotential, n: u32, tol: f64) -> Result<CriticalRadius> {
        let iq = p.iq(IqVariant::SqrtW)?;
        if !iq.is_finite() {
            return Err(Error::Precondition("I_q divergent: no dead core exists".into()));
        }
        if !(tol > 0.0) {
            return Err(Error::Precondition("bisection tolerance must be positive".into()));
        }
        let guarantee = (4.0 * n as f64 + 2f64.sqrt()) * iq.value;
        let cap = 10.0 * guarantee;
        let mut solves = 0usize;
        let mut hi = guarantee;
        loop {
            solves += 1;
            if self.has_dead_core(p, n, hi)? {
                break;
            }
            hi *= 2.0;
            if hi > cap {
                return Err(Error::Bracket(format!("no dead core found up to R = {cap:.6}")));
            }
        }
        let mut lo = hi / 2.0;
        let mut halvings = 0;
        loop {
            solves += 1;
            if !self.has_dead_core(p, n, lo)? {
                break;
            }
            hi = lo;
            lo /= 2.0;
            halvings += 1;
            if halvings > 60 {
                return Err(Error::Bracket("dead core persists for arbitrarily small radii".into()));
            }
        }
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            solves += 1;
            if self.has_dead_core(p, n, mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(CriticalRadius { estimate: 0.5 * (lo + hi), bracket: (lo, hi), solves, iq_sqrt_w: iq.value })
    }
}

/// Result of the critical-radius bisection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalRadius {
    pub estimate: f64,
    pub bracket: (f64, f64),
    pub solves: usize,
    pub iq_sqrt_w: f64,
}

/// Dead-core measurements of a comparison pair and the theoretical thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct DeadCoreReport {
    /// Radius of the zero region of the upper profile; `0` if none.
    pub core_radius: f64,
    /// `∫₀^q ds/sqrt(W_rad)`.
    pub iq: IqResult,
    /// `∫₀^q ds/sqrt(2 W_rad)`.
    pub iq_sqrt2w: IqResult,
    /// `(4n + √2) · I_q` with the `SqrtW` normalization.
    pub theorem2_threshold: f64,
    /// `R − √2 · I_q` with the `Sqrt2W` normalization.
    pub lemma_pl3_core_bound: f64,
    pub has_dead_core: bool,
    /// Raw zero-scan radius of the upper profile before the `I_q = ∞` gate.
    pub zero_scan_radius: f64,
    pub zero_tolerance: f64,
    pub n: u32,
    pub radius: f64,
    pub q: f64,
    pub cells: usize,
    pub m: usize,
    pub lambda_bracket: (f64, f64),
}

impl DeadCoreReport {
    pub fn new(pair: &ComparisonPair, p: &RadialPotential, zero_tolerance: f64) -> Result<Self> {
        // A potential vanishing on an interval has an integrand that is
        // infinite away from 0; the report records I_q = +∞ for it.
        let iq_or_infinite = |variant| match p.iq(variant) {
            Err(Error::Precondition(_)) => {
                Ok(IqResult { value: f64::INFINITY, definition_variant: variant, abs_error_estimate: 0.0 })
            }
            other => other,
        };
        let iq = iq_or_infinite(IqVariant::SqrtW)?;
        let iq_sqrt2w = iq_or_infinite(IqVariant::Sqrt2W)?;
        let grid = &pair.upper.grid;
        let n = grid.n();
        let radius = grid.radius();
        let zero_scan_radius = pair.upper.zero_scan_radius(zero_tolerance);
        // With I_q = ∞ the comparison functions are positive, so any
        // near-zero stretch is a resolution artifact rather than a core.
        let core_radius = if iq.is_finite() { zero_scan_radius } else { 0.0 };
        Ok(DeadCoreReport {
            core_radius,
            iq,
            iq_sqrt2w,
            theorem2_threshold: (4.0 * n as f64 + 2f64.sqrt()) * iq.value,
            lemma_pl3_core_bound: radius - 2f64.sqrt() * iq_sqrt2w.value,
            has_dead_core: core_radius > 0.0,
            zero_scan_radius,
            zero_tolerance,
            n,
            radius,
            q: p.q(),
            cells: grid.cells(),
            m: pair.levels.m(),
            lambda_bracket: pair.lambda_bracket,
        })
    }

    /// JSON object with the documented key set; infinite quantities become `null`.
    pub fn to_json(&self) -> serde_json::Value {
        fn finite(x: f64) -> serde_json::Value {
            if x.is_finite() {
                serde_json::json!(x)
            } else {
                serde_json::Value::Null
            }
        }
        serde_json::json!({
            "core_radius": self.core_radius,
            "iq_value": finite(self.iq.value),
            "iq_variant": self.iq.definition_variant.name(),
            "iq_sqrt2w_value": finite(self.iq_sqrt2w.value),
            "theorem2_threshold": finite(self.theorem2_threshold),
            "lemma_pl3_core_bound": finite(self.lemma_pl3_core_bound),
            "has_dead_core": self.has_dead_core,
            "n": self.n,
            "R": self.radius,
            "q": self.q,
            "N": self.cells,
            "M": self.m,
            "lambda_bracket": [self.lambda_bracket.0, self.lambda_bracket.1],
        })
    }
}

/// Free-function form of [`RadialSolver::comparison_pair`].
pub fn comparison_pair(
    p: &RadialPotential,
    n: u32,
    radius: f64,
    cells: usize,
    m: usize,
    eps: f64,
) -> Result<ComparisonPair> {
    let solver = RadialSolver { cells, levels: LevelSpec::Uniform { m }, eps, ..RadialSolver::default() };
    solver.comparison_pair(p, n, radius)
}

/// Free-function form of [`RadialSolver::dead_core_report`] using the pair's own level count.
pub fn dead_core_report(pair: &ComparisonPair, p: &RadialPotential) -> Result<DeadCoreReport> {
    let q = p.q();
    DeadCoreReport::new(pair, p, q * 1e-3 + q / pair.levels.m() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn constant_profile_energy_is_ball_volume() {
        let p = RadialPotential::characteristic(1.0).unwrap();
        for n in 1..=3u32 {
            let grid = RadialGrid::uniform(n, 1.0, 4000).unwrap();
            let values = vec![1.0; grid.cells() + 1];
            let e = energy_of(&grid, &values, 1.0, &p);
            // Midpoint rule for ∫₀¹ r^(n−1) dr is exact for n ≤ 2.
            assert_relative_eq!(e, 1.0 / n as f64, max_relative = 1e-7);
        }
        let zero = RadialPotential::zero(1.0).unwrap();
        let grid = RadialGrid::uniform(2, 3.0, 100).unwrap();
        assert_eq!(energy_of(&grid, &vec![1.0; 101], 1.0, &zero), 0.0);
    }

    #[test]
    fn level_specs() {
        assert_eq!(LevelSpec::Uniform { m: 4 }.values(2.0), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        let g = LevelSpec::Graded { m: 2, extra: 3 }.values(1.0);
        assert_eq!(g, vec![0.0, 0.0625, 0.125, 0.25, 0.5, 1.0]);
    }

    #[test]
    fn dp_zero_potential_gives_constant() {
        let p = RadialPotential::zero(1.5).unwrap();
        let prof = solve_dp(&p, 3, 2.0, 1.0, 32, 10, TieBreak::PreferLow).unwrap();
        assert!(prof.values.iter().all(|&v| v == 1.5));
        assert_eq!(prof.energy, 0.0);
    }

    #[test]
    fn dp_rejects_small_grids_and_budget() {
        let p = RadialPotential::characteristic(1.0).unwrap();
        assert!(matches!(solve_dp(&p, 2, 1.0, 1.0, 8, 10, TieBreak::PreferLow), Err(Error::Precondition(_))));
        let problem = RadialProblem::uniform(p, 2, 1.0, 100, 1.0).unwrap();
        let err = problem.solve_dp_with_budget(&LevelSpec::Uniform { m: 100 }, TieBreak::PreferLow, 1e3);
        assert!(matches!(err, Err(Error::Resource(_))));
    }

    #[test]
    fn dp_below_critical_radius_is_constant() {
        let p = RadialPotential::characteristic(1.0).unwrap();
        let r0 = (2.0 * std::f64::consts::E).sqrt();
        let prof = solve_dp(&p, 2, 0.5 * r0, 1.0, 200, 50, TieBreak::PreferHigh).unwrap();
        assert!(prof.values.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn dp_profiles_are_monotone_with_boundary_value() {
        let p = RadialPotential::power_law(0.7, 2.0).unwrap();
        for tie in [TieBreak::PreferLow, TieBreak::PreferHigh] {
            let prof = solve_dp(&p, 2, 3.0, 1.0, 60, 20, tie).unwrap();
            assert!(prof.is_monotone());
            assert_eq!(*prof.values.last().unwrap(), 2.0);
            assert!(prof.values.iter().all(|&v| (0.0..=2.0).contains(&v)));
            assert_eq!(prof.energy, discrete_energy(&prof, &p));
        }
    }

    #[test]
    fn tie_breaking_orders_minimizers() {
        // Zero potential with an interior flat direction is not available, so use
        // λ-symmetric ties from a tabulated step exactly on a level.
        let p = RadialPotential::tabulated(vec![(0.0, 1.0), (0.5, 1.0)], 1.0).unwrap();
        let lo = solve_dp(&p, 1, 0.5, 1.0, 20, 8, TieBreak::PreferLow).unwrap();
        let hi = solve_dp(&p, 1, 0.5, 1.0, 20, 8, TieBreak::PreferHigh).unwrap();
        assert_eq!(lo.energy, hi.energy);
        assert!(lo.values.iter().zip(&hi.values).all(|(a, b)| a <= b));
    }

    #[test]
    fn refine_never_increases_energy() {
        let p = RadialPotential::power_law(1.0, 1.0).unwrap();
        let prof = solve_dp(&p, 1, 3.0, 1.0, 200, 20, TieBreak::PreferLow).unwrap();
        let refined = refine_local(&prof, &p, 10);
        assert!(refined.energy <= prof.energy);
        assert!(refined.is_monotone());
        assert_eq!(*refined.values.last().unwrap(), 1.0);

        let zero = RadialPotential::zero(1.0).unwrap();
        let flat = solve_dp(&zero, 2, 1.0, 1.0, 20, 8, TieBreak::PreferLow).unwrap();
        assert_eq!(refine_local(&flat, &zero, 5).values, flat.values);
    }

    #[test]
    fn multires_matches_full_dp_on_small_instances() {
        let cases = [
            RadialPotential::power_law(1.0, 1.0).unwrap(),
            RadialPotential::power_law(0.5, 1.0).unwrap(),
            RadialPotential::characteristic(1.0).unwrap(),
            RadialPotential::tabulated(vec![(0.0, 0.3), (0.4, 1.0), (0.7, 1.5)], 1.0).unwrap(),
        ];
        for p in &cases {
            for &(n, radius) in &[(1u32, 2.5), (2, 4.0), (3, 5.0)] {
                let problem = RadialProblem::uniform(p.clone(), n, radius, 60, 1.0).unwrap();
                let full = problem.solve_dp(&LevelSpec::Uniform { m: 64 }, TieBreak::PreferLow).unwrap();
                let tube = problem
                    .solve_dp_multires(&LevelSpec::Uniform { m: 16 }, TieBreak::PreferLow, 4, 1, 3, 1e12)
                    .unwrap();
                assert!(
                    (tube.energy - full.energy).abs() <= 1e-12 * full.energy.abs().max(1.0),
                    "{p:?} n={n}: tube {} vs full {}",
                    tube.energy,
                    full.energy
                );
            }
        }
    }

    #[test]
    fn zero_scan_radius_interpolates() {
        let grid = RadialGrid::uniform(1, 1.0, 4).unwrap();
        let prof = RadialProfile { grid, values: vec![0.0, 0.0, 0.1, 0.5, 1.0], lambda: 1.0, energy: 0.0 };
        assert_relative_eq!(prof.zero_scan_radius(0.05), 0.375);
        assert_eq!(prof.zero_scan_radius(-1.0), 0.0);
        assert_relative_eq!(prof.eval(0.625), 0.3);
    }

    #[test]
    fn comparison_pair_zero_potential() {
        let p = RadialPotential::zero(1.0).unwrap();
        let pair = comparison_pair(&p, 2, 1.0, 64, 16, 1e-3).unwrap();
        assert!(pair.upper.values.iter().all(|&v| v == 1.0));
        assert!(pair.lower.values.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn critical_radius_rejects_divergent_iq() {
        let p = RadialPotential::power_law(2.0, 1.0).unwrap();
        let s = RadialSolver { cells: 64, levels: LevelSpec::Uniform { m: 16 }, ..Default::default() };
        assert!(matches!(s.critical_radius(&p, 1, 1e-2), Err(Error::Precondition(_))));
    }

    #[test]
    fn report_json_has_documented_keys() {
        let p = RadialPotential::power_law(2.0, 1.0).unwrap();
        let s =
            RadialSolver { cells: 64, levels: LevelSpec::Uniform { m: 16 }, refine_passes: 5, ..Default::default() };
        let pair = s.comparison_pair(&p, 1, 2.0).unwrap();
        let rep = s.dead_core_report(&pair, &p).unwrap();
        assert!(!rep.has_dead_core);
        let json = rep.to_json();
        for key in [
            "core_radius",
            "iq_value",
            "iq_variant",
            "theorem2_threshold",
            "lemma_pl3_core_bound",
            "has_dead_core",
            "n",
            "R",
            "q",
            "N",
            "M",
            "lambda_bracket",
        ] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
        assert!(json["iq_value"].is_null());
    }
}
