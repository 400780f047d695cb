//! Potentials `W(u) = W_rad(|u|) + W_0(u)` on the closed ball of radius `q`,
//! evaluated as lower-semicontinuous functions, and the dead-core integral
//! `I_q = ∫₀^q ds / sqrt(c · W_rad(s))`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{self, SingularIntegral};

/// Shape of the radial part `W_rad`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RadialKind {
    /// `W_rad(s) = s^alpha`.
    PowerLaw { alpha: f64 },
    /// `W_rad(0) = 0`, `W_rad(s) = 1` for `s > 0`.
    Characteristic,
    /// `W_rad(s) = s²`.
    Quadratic,
    /// Piecewise constant: the pair `(s_k, v_k)` sets the value `v_k` on `(s_k, s_{k+1}]`.
    Tabulated { breakpoints: Vec<(f64, f64)> },
    /// `W_rad ≡ 0`.
    Zero,
}

/// Nondecreasing, lower-semicontinuous radial potential on `[0, q]` with `W_rad(0) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialPotential {
    kind: RadialKind,
    q: f64,
    sup_value: f64,
}

/// Which normalization of the dead-core integral to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IqVariant {
    /// `∫₀^q ds / sqrt(W_rad(s))`
    SqrtW,
    /// `∫₀^q ds / sqrt(2 W_rad(s))`
    Sqrt2W,
}

impl IqVariant {
    fn factor(self) -> f64 {
        match self {
            IqVariant::SqrtW => 1.0,
            IqVariant::Sqrt2W => 2.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            IqVariant::SqrtW => "sqrt_w",
            IqVariant::Sqrt2W => "sqrt_2w",
        }
    }
}

/// Value of the dead-core integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IqResult {
    /// `f64::INFINITY` when the integral diverges.
    pub value: f64,
    pub definition_variant: IqVariant,
    pub abs_error_estimate: f64,
}

impl IqResult {
    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }
}

const DOMAIN_SLACK: f64 = 1e-12;

fn check_q(q: f64) -> Result<()> {
    if !(q.is_finite() && q > 0.0) {
        return Err(Error::Domain(format!("q must be positive and finite, got {q}")));
    }
    Ok(())
}

impl RadialPotential {
    pub fn new(kind: RadialKind, q: f64) -> Result<Self> {
        check_q(q)?;
        match &kind {
            RadialKind::PowerLaw { alpha } => {
                if !(alpha.is_finite() && *alpha > 0.0) {
                    return Err(Error::Domain(format!("power-law exponent must be positive, got {alpha}")));
                }
            }
            RadialKind::Tabulated { breakpoints } => {
                if breakpoints.is_empty() {
                    return Err(Error::Domain("tabulated potential needs at least one breakpoint".into()));
                }
                let mut prev_s = f64::NEG_INFINITY;
                let mut prev_v = 0.0;
                for &(s, v) in breakpoints {
                    if !(s.is_finite() && v.is_finite()) {
                        return Err(Error::Domain("non-finite breakpoint".into()));
                    }
                    if s < 0.0 || s >= q {
                        return Err(Error::Domain(format!("breakpoint {s} outside [0, q)")));
                    }
                    if s <= prev_s {
                        return Err(Error::Domain("breakpoints must be strictly increasing".into()));
                    }
                    if v < prev_v {
                        return Err(Error::Domain("tabulated values must be nondecreasing and nonnegative".into()));
                    }
                    prev_s = s;
                    prev_v = v;
                }
            }
            RadialKind::Characteristic | RadialKind::Quadratic | RadialKind::Zero => {}
        }
        let mut p = RadialPotential { kind, q, sup_value: 0.0 };
        p.sup_value = p.value(q);
        Ok(p)
    }

    pub fn power_law(alpha: f64, q: f64) -> Result<Self> {
        Self::new(RadialKind::PowerLaw { alpha }, q)
    }

    pub fn characteristic(q: f64) -> Result<Self> {
        Self::new(RadialKind::Characteristic, q)
    }

    pub fn quadratic(q: f64) -> Result<Self> {
        Self::new(RadialKind::Quadratic, q)
    }

    pub fn zero(q: f64) -> Result<Self> {
        Self::new(RadialKind::Zero, q)
    }

    pub fn tabulated(breakpoints: Vec<(f64, f64)>, q: f64) -> Result<Self> {
        Self::new(RadialKind::Tabulated { breakpoints }, q)
    }

    pub fn kind(&self) -> &RadialKind {
        &self.kind
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// `W_rad(q)`, the supremum of the potential.
    pub fn sup_value(&self) -> f64 {
        self.sup_value
    }

    /// Evaluates `W_rad(s)`, rejecting arguments outside `[0, q]`.
    pub fn eval(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0 && s <= self.q) {
            return Err(Error::Domain(format!("s = {s} outside [0, {}]", self.q)));
        }
        Ok(self.value(s))
    }

    /// Unchecked evaluation; arguments are clamped into `[0, q]`.
    #[inline]
    pub fn value(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, self.q);
        match &self.kind {
            RadialKind::PowerLaw { alpha } => {
                if s == 0.0 {
                    0.0
                } else {
                    s.powf(*alpha)
                }
            }
            RadialKind::Characteristic => {
                if s > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            RadialKind::Quadratic => s * s,
            RadialKind::Tabulated { breakpoints } => {
                let count = breakpoints.partition_point(|&(sk, _)| sk < s);
                if count == 0 {
                    0.0
                } else {
                    breakpoints[count - 1].1
                }
            }
            RadialKind::Zero => 0.0,
        }
    }

    /// `(W_rad'(s), W_rad''(s))` on the smooth piece containing `s ∈ (0, q)`;
    /// zero for piecewise-constant kinds.
    pub fn derivatives(&self, s: f64) -> (f64, f64) {
        match &self.kind {
            RadialKind::PowerLaw { alpha } if s > 0.0 => {
                let a = *alpha;
                (a * s.powf(a - 1.0), a * (a - 1.0) * s.powf(a - 2.0))
            }
            RadialKind::Quadratic => (2.0 * s, 2.0),
            _ => (0.0, 0.0),
        }
    }

    /// Points of `[0, q]` where `W_rad` jumps.
    pub fn discontinuities(&self) -> Vec<f64> {
        match &self.kind {
            RadialKind::Characteristic => vec![0.0],
            RadialKind::Tabulated { breakpoints } => {
                let mut prev = 0.0;
                let mut out = Vec::new();
                for &(s, v) in breakpoints {
                    if v != prev {
                        out.push(s);
                    }
                    prev = v;
                }
                out
            }
            _ => Vec::new(),
        }
    }

    /// True if `W_rad` is identically zero on some interval `(0, s]` with `s > 0`,
    /// in which case the dead-core integral is infinite away from the origin.
    fn vanishes_near_zero(&self) -> bool {
        match &self.kind {
            RadialKind::Zero => true,
            RadialKind::Tabulated { breakpoints } => {
                let (s0, v0) = breakpoints[0];
                s0 > 0.0 || v0 == 0.0
            }
            _ => false,
        }
    }

    /// Dead-core integral `∫₀^q ds / sqrt(c · W_rad(s))`.
    pub fn iq(&self, variant: IqVariant) -> Result<IqResult> {
        let value = self.gamma(self.q, variant)?;
        let abs_error_estimate = match (&self.kind, value.is_finite()) {
            (RadialKind::Tabulated { .. }, true) => self.numeric_gamma(self.q, variant)?.1,
            (_, true) => 4.0 * f64::EPSILON * value,
            (_, false) => 0.0,
        };
        Ok(IqResult { value, definition_variant: variant, abs_error_estimate })
    }

    /// Dead-core integral computed by the dyadic adaptive quadrature regardless
    /// of whether a closed form exists.
    pub fn iq_numeric(&self, variant: IqVariant) -> Result<IqResult> {
        let (value, err) = self.numeric_gamma(self.q, variant)?;
        Ok(IqResult { value, definition_variant: variant, abs_error_estimate: err })
    }

    /// Partial integral `γ(s) = ∫₀^s dt / sqrt(c · W_rad(t))`; `+∞` when divergent.
    pub fn gamma(&self, s: f64, variant: IqVariant) -> Result<f64> {
        if !(s >= 0.0 && s <= self.q * (1.0 + DOMAIN_SLACK)) {
            return Err(Error::Domain(format!("s = {s} outside [0, {}]", self.q)));
        }
        let s = s.min(self.q);
        if s == 0.0 {
            return Ok(0.0);
        }
        let scale = variant.factor().sqrt();
        match &self.kind {
            RadialKind::Characteristic => Ok(s / scale),
            RadialKind::PowerLaw { alpha } if *alpha < 2.0 => {
                let e = 1.0 - alpha / 2.0;
                Ok(s.powf(e) / e / scale)
            }
            RadialKind::PowerLaw { .. } | RadialKind::Quadratic => Ok(f64::INFINITY),
            RadialKind::Tabulated { .. } | RadialKind::Zero => Ok(self.numeric_gamma(s, variant)?.0),
        }
    }

    fn numeric_gamma(&self, s: f64, variant: IqVariant) -> Result<(f64, f64)> {
        if self.vanishes_near_zero() {
            return Err(Error::Precondition(
                "W_rad vanishes on a set of positive measure in (0, q]; I_q is infinite away from 0".into(),
            ));
        }
        let c = variant.factor();
        let mut hit_zero = false;
        let mut integrand = |t: f64| {
            let w = self.value(t);
            if w <= 0.0 {
                hit_zero = true;
                0.0
            } else {
                1.0 / (c * w).sqrt()
            }
        };
        let breaks = self.discontinuities();
        let result = quadrature::dyadic_from_zero(&mut integrand, s, &breaks, 1e-13);
        if hit_zero {
            return Err(Error::Precondition("W_rad vanishes inside (0, q]".into()));
        }
        Ok(match result {
            SingularIntegral::Finite(e) => (e.value, e.abs_error),
            SingularIntegral::Divergent => (f64::INFINITY, 0.0),
        })
    }
}

/// Direction-dependent part `W_0(s ξ)` of the potential.
#[derive(Clone, Default)]
pub enum AngularPotential {
    #[default]
    None,
    /// `W_0(s ξ) = scale · s · (1 + ξ₁) / 2`.
    Tilted { scale: f64 },
    /// Arbitrary `(s, ξ) ↦ W_0(s ξ)`; must be nonnegative, zero at `s = 0`
    /// and nondecreasing in `s` along every ray.
    Custom { name: String, f: Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync> },
}

impl fmt::Debug for AngularPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AngularPotential::None => write!(f, "None"),
            AngularPotential::Tilted { scale } => write!(f, "Tilted {{ scale: {scale} }}"),
            AngularPotential::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

impl AngularPotential {
    pub fn is_none(&self) -> bool {
        matches!(self, AngularPotential::None)
    }

    #[inline]
    pub fn value(&self, s: f64, direction: &[f64]) -> f64 {
        match self {
            AngularPotential::None => 0.0,
            AngularPotential::Tilted { scale } => scale * s * (1.0 + direction[0]) / 2.0,
            AngularPotential::Custom { f, .. } => f(s, direction),
        }
    }
}

/// Full potential `W(u) = W_rad(|u|) + W_0(u)` on the closed ball of radius `q` in `R^m`.
#[derive(Debug, Clone)]
pub struct PotentialSpec {
    pub w_rad: RadialPotential,
    pub w_0: AngularPotential,
    pub m: usize,
}

impl PotentialSpec {
    pub fn new(w_rad: RadialPotential, w_0: AngularPotential, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::Domain("target dimension m must be positive".into()));
        }
        if let AngularPotential::Tilted { scale } = w_0 {
            if !(scale >= 0.0 && scale.is_finite()) {
                return Err(Error::Domain("tilted angular part needs a nonnegative scale".into()));
            }
        }
        Ok(PotentialSpec { w_rad, w_0, m })
    }

    /// Radial-only potential (`W_0 ≡ 0`).
    pub fn radial(w_rad: RadialPotential, m: usize) -> Result<Self> {
        Self::new(w_rad, AngularPotential::None, m)
    }

    pub fn q(&self) -> f64 {
        self.w_rad.q()
    }

    /// Evaluates `W(u)`; `u` must have length `m` and `|u| ≤ q` up to `1e-12`.
    pub fn eval(&self, u: &[f64]) -> Result<f64> {
        if u.len() != self.m {
            return Err(Error::Domain(format!("expected {} components, got {}", self.m, u.len())));
        }
        let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm <= self.q() + DOMAIN_SLACK) {
            return Err(Error::Domain(format!("|u| = {norm} exceeds q = {}", self.q())));
        }
        Ok(self.eval_unchecked(u))
    }

    /// Evaluation without argument checks; `|u|` is clamped to `q`.
    #[inline]
    pub fn eval_unchecked(&self, u: &[f64]) -> f64 {
        let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        let s = norm.min(self.q());
        let radial = self.w_rad.value(s);
        if self.w_0.is_none() {
            return radial;
        }
        let dir: Vec<f64> = u.iter().map(|x| x / norm).collect();
        radial + self.w_0.value(s, &dir)
    }

    /// `W(s ξ)` for a unit direction `ξ`.
    #[inline]
    pub fn eval_on_ray(&self, s: f64, direction: &[f64]) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        let s = s.min(self.q());
        self.w_rad.value(s) + self.w_0.value(s, direction)
    }
}
