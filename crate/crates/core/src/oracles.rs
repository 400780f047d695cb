//! Closed-form radial profiles and an exhaustive reference minimizer.
//!
//! All profiles are evaluated lazily at a radius; nothing is tabulated.

use std::f64::consts::{E, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::{IqVariant, RadialKind, RadialPotential};
use crate::quadrature;
use crate::radial::{cell_cost, energy_of, LevelSpec, RadialGrid, RadialProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    /// Explicit n = 2 characteristic-potential profiles with the core at `R/√e`.
    Remark1N2Characteristic,
    /// n = 2 characteristic potential, harmonic outside a core whose edge satisfies
    /// the free-boundary condition `½h'² = W` there.
    HarmonicCoreN2Characteristic,
    /// n = 1 dead-core profile from `½β'² = W_rad(β)`.
    FirstIntegralN1,
    /// n = 1, `W_rad(s) = s²`: `q·cosh(√2 r)/cosh(√2 R)`.
    CoshN1Quadratic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    Upper,
    Lower,
}

#[derive(Debug, Clone)]
enum Shape {
    Constant,
    /// `coefficient · ln(r / edge)` for `r ≥ edge`, zero inside.
    LogCore {
        edge: f64,
        coefficient: f64,
    },
    /// `γ⁻¹(r − edge)` for `r ≥ edge`, zero inside.
    FirstIntegral {
        edge: f64,
        potential: RadialPotential,
    },
    Cosh,
}

/// Exact radial profile on `[0, R]` with `h(R) = q`.
#[derive(Debug, Clone)]
pub struct ClosedFormProfile {
    pub family: Family,
    pub n: u32,
    pub q: f64,
    pub radius: f64,
    shape: Shape,
}

/// `√(2e)·q`, the ball radius at which the n = 2 characteristic problem acquires a core.
pub fn critical_radius_n2_characteristic(q: f64) -> f64 {
    (2.0 * E).sqrt() * q
}

fn check_positive(q: f64, radius: f64) -> Result<()> {
    if !(q.is_finite() && q > 0.0) {
        return Err(Error::Domain(format!("q must be positive, got {q}")));
    }
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::Domain(format!("R must be positive, got {radius}")));
    }
    Ok(())
}

fn same_radius(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * b
}

/// Profiles stated for the n = 2 characteristic potential.
///
/// Below `R₀ = √(2e)q` both branches are `≡ q`. At `R₀` the upper branch is
/// `≡ q` and the lower one is `2q·ln(r/(√2 q))` outside `B_{√2 q}`. Above `R₀`
/// both are `2q·ln(√e·r/R)` outside `B_{R/√e}`.
pub fn remark1_profile(q: f64, radius: f64, branch: Branch) -> Result<ClosedFormProfile> {
    check_positive(q, radius)?;
    let r0 = critical_radius_n2_characteristic(q);
    let shape = if same_radius(radius, r0) {
        match branch {
            Branch::Upper => Shape::Constant,
            Branch::Lower => Shape::LogCore { edge: SQRT_2 * q, coefficient: 2.0 * q },
        }
    } else if radius < r0 {
        Shape::Constant
    } else {
        Shape::LogCore { edge: radius / E.sqrt(), coefficient: 2.0 * q }
    };
    Ok(ClosedFormProfile { family: Family::Remark1N2Characteristic, n: 2, q, radius, shape })
}

/// Core edge `a ∈ [R/e, R]` solving `a·ln(R/a) = q/√2`, or `None` if `R < e·q/√2`.
pub fn harmonic_core_edge(q: f64, radius: f64) -> Option<f64> {
    let target = q / SQRT_2;
    let f = |a: f64| a * (radius / a).ln();
    let (mut lo, mut hi) = (radius / E, radius);
    if f(lo) < target {
        return None;
    }
    // f decreases from R/e to R.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) >= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Minimizer of the n = 2 characteristic problem among profiles that are
/// constant or harmonic outside a core: `q·ln(r/a)/ln(R/a)` with `a` from
/// [`harmonic_core_edge`]. Coincides with [`remark1_profile`] for `R ≤ R₀`.
pub fn harmonic_core_profile(q: f64, radius: f64, branch: Branch) -> Result<ClosedFormProfile> {
    check_positive(q, radius)?;
    let r0 = critical_radius_n2_characteristic(q);
    let at_critical = same_radius(radius, r0);
    let shape = if radius < r0 && !at_critical || at_critical && branch == Branch::Upper {
        Shape::Constant
    } else {
        let edge =
            if at_critical { SQRT_2 * q } else { harmonic_core_edge(q, radius).expect("core edge exists above R₀") };
        Shape::LogCore { edge, coefficient: q / (radius / edge).ln() }
    };
    Ok(ClosedFormProfile { family: Family::HarmonicCoreN2Characteristic, n: 2, q, radius, shape })
}

/// n = 1 dead-core profile `β(r) = γ⁻¹(r − l)` with `γ(s) = ∫₀^s dt/√(2W_rad(t))`
/// and `l = R − γ(q)`.
pub fn first_integral_profile_n1(p: &RadialPotential, radius: f64) -> Result<ClosedFormProfile> {
    let q = p.q();
    check_positive(q, radius)?;
    if !(p.value(f64::MIN_POSITIVE) > 0.0) {
        return Err(Error::Precondition("W_rad must be positive on (0, q]".into()));
    }
    let iq = p.iq(IqVariant::Sqrt2W)?;
    if !iq.is_finite() {
        return Err(Error::Precondition("I_q is infinite: no dead-core profile".into()));
    }
    if radius < iq.value {
        return Err(Error::Precondition(format!("R = {radius} is below I_q = {}: no dead-core closed form", iq.value)));
    }
    Ok(ClosedFormProfile {
        family: Family::FirstIntegralN1,
        n: 1,
        q,
        radius,
        shape: Shape::FirstIntegral { edge: radius - iq.value, potential: p.clone() },
    })
}

/// `q·cosh(√2 r)/cosh(√2 R)`, the even solution of `ψ'' = 2ψ` with `ψ(R) = q`.
pub fn cosh_profile_n1(q: f64, radius: f64) -> Result<ClosedFormProfile> {
    check_positive(q, radius)?;
    Ok(ClosedFormProfile { family: Family::CoshN1Quadratic, n: 1, q, radius, shape: Shape::Cosh })
}

/// `cosh(a)/cosh(b)` without overflow.
fn cosh_ratio(a: f64, b: f64) -> f64 {
    (a - b).exp() * (1.0 + (-2.0 * a).exp()) / (1.0 + (-2.0 * b).exp())
}

fn sinh_over_cosh(a: f64, b: f64) -> f64 {
    (a - b).exp() * (1.0 - (-2.0 * a).exp()) / (1.0 + (-2.0 * b).exp())
}

/// Inverse of `γ` on `[0, γ(q)]`.
fn gamma_inverse(p: &RadialPotential, t: f64) -> f64 {
    let q = p.q();
    if t <= 0.0 {
        return 0.0;
    }
    match *p.kind() {
        RadialKind::PowerLaw { alpha } => {
            let e = 1.0 - 0.5 * alpha;
            (t * e * SQRT_2).powf(1.0 / e).min(q)
        }
        RadialKind::Characteristic => (t * SQRT_2).min(q),
        _ => {
            let (mut lo, mut hi) = (0.0, q);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let g = p.gamma(mid, IqVariant::Sqrt2W).unwrap_or(f64::INFINITY);
                if g < t {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        }
    }
}

impl ClosedFormProfile {
    /// Radius of the zero region, if any.
    pub fn core_edge(&self) -> Option<f64> {
        match self.shape {
            Shape::LogCore { edge, .. } | Shape::FirstIntegral { edge, .. } => Some(edge),
            Shape::Constant | Shape::Cosh => None,
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        let r = r.clamp(0.0, self.radius);
        if r == self.radius {
            return self.q;
        }
        match &self.shape {
            Shape::Constant => self.q,
            Shape::LogCore { edge, coefficient } => {
                if r <= *edge {
                    0.0
                } else {
                    coefficient * (r / edge).ln()
                }
            }
            Shape::FirstIntegral { edge, potential } => gamma_inverse(potential, r - edge),
            Shape::Cosh => self.q * cosh_ratio(SQRT_2 * r, SQRT_2 * self.radius),
        }
    }

    /// `h'(r)`, one-sided from the outside at the core edge.
    pub fn derivative(&self, r: f64) -> f64 {
        let r = r.clamp(0.0, self.radius);
        match &self.shape {
            Shape::Constant => 0.0,
            Shape::LogCore { edge, coefficient } => {
                if r <= *edge {
                    0.0
                } else {
                    coefficient / r
                }
            }
            Shape::FirstIntegral { edge, potential } => {
                if r <= *edge {
                    0.0
                } else {
                    (2.0 * potential.value(self.value(r))).sqrt()
                }
            }
            Shape::Cosh => self.q * SQRT_2 * sinh_over_cosh(SQRT_2 * r, SQRT_2 * self.radius),
        }
    }

    /// Nodal values on `grid`, with the last one exactly `q`.
    pub fn sample(&self, grid: &RadialGrid) -> Vec<f64> {
        let mut v: Vec<f64> = grid.radii().iter().map(|&r| self.value(r)).collect();
        *v.last_mut().expect("nonempty grid") = self.q;
        v
    }

    /// Nodal samples packaged as a profile with its discrete energy.
    pub fn to_profile(&self, grid: &RadialGrid, lambda: f64, p: &RadialPotential) -> RadialProfile {
        let values = self.sample(grid);
        let energy = energy_of(grid, &values, lambda, p);
        RadialProfile { grid: grid.clone(), values, lambda, energy }
    }

    /// `∫₀^r ρ^(n−1) (½h'² + W_rad(h)) dρ` by adaptive quadrature.
    pub fn energy_up_to(&self, r: f64, p: &RadialPotential) -> f64 {
        let r = r.clamp(0.0, self.radius);
        let breaks = self.breakpoints();
        let n = self.n as i32;
        let mut f = |rho: f64| {
            let d = self.derivative(rho);
            rho.powi(n - 1) * (0.5 * d * d + p.value(self.value(rho)))
        };
        quadrature::adaptive(&mut f, 0.0, r, &breaks, 1e-14, 1e-13).value
    }

    /// Radii where the profile's derivative or `W_rad` of the profile may jump.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut breaks: Vec<f64> = self.core_edge().into_iter().collect();
        if let Shape::FirstIntegral { edge, potential } = &self.shape {
            let gq = self.radius - edge;
            for d in potential.discontinuities() {
                if let Ok(g) = potential.gamma(d, IqVariant::Sqrt2W) {
                    if g > 0.0 && g < gq {
                        breaks.push(edge + g);
                    }
                }
            }
        }
        breaks
    }

    /// Continuum energy of the whole profile on `B_R` (surface measure dropped).
    pub fn energy(&self, p: &RadialPotential) -> f64 {
        self.energy_up_to(self.radius, p)
    }
}

/// Largest instance accepted by [`brute_force_dp_oracle`], in monotone paths.
pub const BRUTE_FORCE_PATH_CAP: f64 = 2e9;

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// Exact discrete minimizer by enumeration of every nondecreasing assignment of
/// the `M + 1` uniform levels to the nodes `0..N` (node `N` fixed at `q`).
///
/// Branches whose partial energy already exceeds the best complete path are
/// skipped; since every cell cost is nonnegative this never discards a minimizer.
pub fn brute_force_dp_oracle(
    p: &RadialPotential,
    n: u32,
    radius: f64,
    lambda: f64,
    cells: usize,
    m: usize,
) -> Result<RadialProfile> {
    if cells > 24 || m > 12 {
        return Err(Error::Resource(format!("enumeration limited to N ≤ 24, M ≤ 12; got N = {cells}, M = {m}")));
    }
    let paths = binomial(cells + m, m);
    if paths > BRUTE_FORCE_PATH_CAP {
        return Err(Error::Resource(format!("{paths:.3e} monotone paths exceed the enumeration cap")));
    }
    let grid = RadialGrid::uniform(n, radius, cells)?;
    let levels = LevelSpec::Uniform { m }.values(p.q());
    let wv: Vec<f64> = levels.iter().map(|&v| p.value(v)).collect();

    struct Search<'a> {
        grid: &'a RadialGrid,
        levels: &'a [f64],
        wv: &'a [f64],
        lambda: f64,
        path: Vec<usize>,
        best: f64,
        best_path: Vec<usize>,
    }

    impl Search<'_> {
        fn cost(&self, i: usize, a: usize, b: usize) -> f64 {
            cell_cost(self.grid.weight(i), self.grid.dr(i), self.lambda, self.levels[a], self.levels[b], self.wv[a])
        }

        // path[0..=i] is fixed; `partial` is the energy of cells 0..i.
        fn descend(&mut self, i: usize, partial: f64) {
            let cells = self.grid.cells();
            let a = self.path[i];
            if i + 1 == cells {
                let total = partial + self.cost(i, a, self.levels.len() - 1);
                if total < self.best {
                    self.best = total;
                    self.best_path.clone_from(&self.path);
                }
                return;
            }
            for b in a..self.levels.len() {
                let next = partial + self.cost(i, a, b);
                if next > self.best {
                    continue;
                }
                self.path[i + 1] = b;
                self.descend(i + 1, next);
            }
        }
    }

    let last = levels.len() - 1;
    let mut search = Search {
        grid: &grid,
        levels: &levels,
        wv: &wv,
        lambda,
        path: vec![last; cells + 1],
        best: f64::INFINITY,
        best_path: vec![last; cells + 1],
    };
    for a in 0..levels.len() {
        search.path[0] = a;
        search.descend(0, 0.0);
    }
    let values: Vec<f64> = search.best_path.iter().map(|&j| levels[j]).collect();
    let energy = energy_of(&grid, &values, lambda, p);
    debug_assert_eq!(energy, search.best);
    Ok(RadialProfile { grid, values, lambda, energy })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::{solve_dp, TieBreak};
    use approx::assert_relative_eq;

    #[test]
    fn remark1_pointwise_values() {
        let r0 = critical_radius_n2_characteristic(1.0);
        assert_eq!(remark1_profile(1.0, r0, Branch::Upper).unwrap().value(0.5), 1.0);
        assert_eq!(remark1_profile(1.0, r0, Branch::Lower).unwrap().value(SQRT_2), 0.0);
        for b in [Branch::Upper, Branch::Lower] {
            let p = remark1_profile(1.0, 2.0 * r0, b).unwrap();
            assert_eq!(p.value(2.0 * r0), 1.0);
            // 2·ln(√e) = 1 just inside the boundary too.
            assert_relative_eq!(p.value(2.0 * r0 * (1.0 - 1e-15)), 1.0, epsilon = 1e-12);
        }
        assert!(remark1_profile(0.0, 1.0, Branch::Upper).is_err());
        assert!(remark1_profile(1.0, -1.0, Branch::Upper).is_err());
    }

    #[test]
    fn remark1_branches_tie_at_critical_radius() {
        let p = RadialPotential::characteristic(1.0).unwrap();
        let r0 = critical_radius_n2_characteristic(1.0);
        let up = remark1_profile(1.0, r0, Branch::Upper).unwrap();
        let lo = remark1_profile(1.0, r0, Branch::Lower).unwrap();
        assert_relative_eq!(up.energy(&p), E, max_relative = 1e-12);
        assert_relative_eq!(lo.energy(&p), E, max_relative = 1e-10);
        let grid = RadialGrid::uniform(2, r0, 4000).unwrap();
        let eu = up.to_profile(&grid, 1.0, &p).energy;
        let el = lo.to_profile(&grid, 1.0, &p).energy;
        // The cell straddling the core edge carries an O(Δr) potential error.
        let edge_cell = SQRT_2 * grid.max_dr();
        assert!((eu - el).abs() <= 1.5 * edge_cell, "{eu} vs {el}");
    }

    #[test]
    fn log_profiles_are_harmonic_off_the_core() {
        let r0 = critical_radius_n2_characteristic(1.0);
        for prof in [
            remark1_profile(1.0, 2.0 * r0, Branch::Lower).unwrap(),
            harmonic_core_profile(1.0, 2.0 * r0, Branch::Lower).unwrap(),
        ] {
            let edge = prof.core_edge().unwrap();
            for &h in &[1e-2, 5e-3] {
                let r = 0.5 * (edge + prof.radius);
                let lap = (prof.value(r + h) - 2.0 * prof.value(r) + prof.value(r - h)) / (h * h)
                    + (prof.value(r + h) - prof.value(r - h)) / (2.0 * h * r);
                assert!(lap.abs() < 1e-3 * (h / 1e-2).powi(2), "{lap}");
            }
        }
    }

    #[test]
    fn harmonic_core_satisfies_free_boundary_condition() {
        let q = 1.3;
        let r0 = critical_radius_n2_characteristic(q);
        for &scale in &[1.01, 1.5, 2.0, 4.0] {
            let prof = harmonic_core_profile(q, scale * r0, Branch::Upper).unwrap();
            let a = prof.core_edge().unwrap();
            let slope = prof.derivative(a * (1.0 + 1e-12));
            assert_relative_eq!(0.5 * slope * slope, 1.0, max_relative = 1e-9);
            assert!(a > scale * r0 / E.sqrt());
            assert_eq!(prof.value(scale * r0), q);
        }
        let below = harmonic_core_profile(q, 0.9 * r0, Branch::Lower).unwrap();
        assert!(below.core_edge().is_none());
        let at = harmonic_core_profile(q, r0, Branch::Lower).unwrap();
        assert_relative_eq!(at.core_edge().unwrap(), SQRT_2 * q, max_relative = 1e-12);
    }

    #[test]
    fn harmonic_core_has_lower_energy_than_explicit_log_profile_above_r0() {
        let p = RadialPotential::characteristic(1.0).unwrap();
        let radius = 2.0 * critical_radius_n2_characteristic(1.0);
        let harmonic = harmonic_core_profile(1.0, radius, Branch::Upper).unwrap().energy(&p);
        let explicit = remark1_profile(1.0, radius, Branch::Upper).unwrap().energy(&p);
        let constant = 0.5 * radius * radius;
        assert!(harmonic < explicit && harmonic < constant, "{harmonic} {explicit} {constant}");
    }

    #[test]
    fn first_integral_power_law_one() {
        let p = RadialPotential::power_law(1.0, 1.0).unwrap();
        let prof = first_integral_profile_n1(&p, 3.0).unwrap();
        let l = 3.0 - SQRT_2;
        assert_relative_eq!(prof.core_edge().unwrap(), l, max_relative = 1e-12);
        assert_eq!(prof.value(3.0), 1.0);
        assert_eq!(prof.value(l), 0.0);
        for k in 0..=20 {
            let r = l + (3.0 - l) * k as f64 / 20.0;
            assert_relative_eq!(prof.value(r), 0.5 * (r - l).powi(2), epsilon = 1e-12);
        }
        assert!(matches!(first_integral_profile_n1(&p, 1.0), Err(Error::Precondition(_))));
    }

    #[test]
    fn first_integral_characteristic() {
        let p = RadialPotential::characteristic(1.0).unwrap();
        let prof = first_integral_profile_n1(&p, 2.0).unwrap();
        let l = 2.0 - 1.0 / SQRT_2;
        assert_relative_eq!(prof.core_edge().unwrap(), l, max_relative = 1e-12);
        assert_relative_eq!(prof.value(1.8), (1.8 - l) * SQRT_2, epsilon = 1e-12);
    }

    #[test]
    fn first_integral_tabulated_satisfies_hamiltonian_relation() {
        let p = RadialPotential::tabulated(vec![(0.0, 0.5), (0.3, 1.0), (0.6, 2.0)], 1.0).unwrap();
        let prof = first_integral_profile_n1(&p, 4.0).unwrap();
        let l = prof.core_edge().unwrap();
        assert!(l > 0.0);
        for k in 1..100 {
            let r = l + (4.0 - l) * k as f64 / 100.0;
            let beta = prof.value(r);
            let d = prof.derivative(r);
            assert!((0.5 * d * d - p.value(beta)).abs() <= 1e-8);
        }
        let zero = RadialPotential::zero(1.0).unwrap();
        assert!(first_integral_profile_n1(&zero, 4.0).is_err());
    }

    #[test]
    fn cosh_values() {
        let prof = cosh_profile_n1(1.0, 1.0).unwrap();
        assert_eq!(prof.value(1.0), 1.0);
        assert_relative_eq!(prof.value(0.0), 1.0 / (SQRT_2).cosh(), max_relative = 1e-14);
        assert_relative_eq!(prof.value(0.0), 0.459_098_131, max_relative = 1e-8);
        let far = cosh_profile_n1(2.0, 300.0).unwrap();
        assert!(far.value(0.0) >= 0.0 && far.value(299.0).is_finite());
        let d = prof.derivative(0.4);
        assert_relative_eq!(d, SQRT_2 * (SQRT_2 * 0.4).sinh() / SQRT_2.cosh(), max_relative = 1e-13);
    }

    #[test]
    fn brute_force_matches_dp_on_spec_instances() {
        let zero = RadialPotential::zero(1.0).unwrap();
        let bf = brute_force_dp_oracle(&zero, 2, 1.0, 1.0, 16, 8).unwrap();
        assert!(bf.values.iter().all(|&v| v == 1.0));

        let cases = [
            (RadialPotential::characteristic(1.0).unwrap(), 2u32, 1.0),
            (RadialPotential::power_law(1.0, 1.0).unwrap(), 1, 3.0),
        ];
        for (p, n, radius) in &cases {
            let bf = brute_force_dp_oracle(p, *n, *radius, 1.0, 16, 8).unwrap();
            let dp = solve_dp(p, *n, *radius, 1.0, 16, 8, TieBreak::PreferLow).unwrap();
            assert_eq!(bf.energy, dp.energy);
        }
        assert!(matches!(brute_force_dp_oracle(&zero, 1, 1.0, 1.0, 30, 8), Err(Error::Resource(_))));
    }
}
