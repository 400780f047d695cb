//! Adaptive Gauss–Kronrod quadrature and the dyadic scheme used for
//! integrands with an integrable (or divergent) singularity at the origin.

/// Kronrod abscissae of the 15-point rule on [-1, 1] (nonnegative half).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Weights of the embedded 7-point Gauss rule (abscissae XGK[1], XGK[3], XGK[5], XGK[7]).
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Result of a finite-interval integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub abs_error: f64,
}

/// One application of the 7–15 Gauss–Kronrod pair on `[a, b]`.
pub fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Estimate {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Estimate { value: kronrod * half, abs_error: ((kronrod - gauss) * half).abs() }
}

/// Globally adaptive integration on `[a, b]`.
///
/// `breaks` are interior points where the integrand may be discontinuous;
/// they seed the initial partition so no panel straddles a jump.
pub fn adaptive<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
) -> Estimate {
    if b <= a {
        return Estimate { value: 0.0, abs_error: 0.0 };
    }
    let mut nodes: Vec<f64> = std::iter::once(a)
        .chain(breaks.iter().copied().filter(|&x| x > a && x < b))
        .chain(std::iter::once(b))
        .collect();
    nodes.sort_by(|x, y| x.total_cmp(y));
    nodes.dedup();

    let mut panels: Vec<(f64, f64, Estimate)> = nodes.windows(2).map(|w| (w[0], w[1], gk15(f, w[0], w[1]))).collect();

    const MAX_PANELS: usize = 2000;
    loop {
        let value: f64 = panels.iter().map(|p| p.2.value).sum();
        let error: f64 = panels.iter().map(|p| p.2.abs_error).sum();
        if error <= abs_tol.max(rel_tol * value.abs()) || panels.len() >= MAX_PANELS {
            return Estimate { value, abs_error: error };
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2.abs_error.total_cmp(&y.1 .2.abs_error))
            .expect("at least one panel");
        let (lo, hi, _) = panels.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // Panel cannot be split further in floating point.
            let value: f64 = panels.iter().map(|p| p.2.value).sum();
            let error: f64 = panels.iter().map(|p| p.2.abs_error).sum();
            return Estimate { value, abs_error: error };
        }
        panels.push((lo, mid, gk15(f, lo, mid)));
        panels.push((mid, hi, gk15(f, mid, hi)));
    }
}

/// Outcome of integrating a nonnegative integrand that may blow up at 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SingularIntegral {
    Finite(Estimate),
    Divergent,
}

/// Number of dyadic levels examined before the tail is extrapolated.
pub const DYADIC_LEVELS: usize = 60;
/// Partial sums beyond this are treated as divergent.
pub const DIVERGENCE_CAP: f64 = 1e12;
/// Ratios of successive dyadic contributions at or above this are not geometric decay.
pub const RATIO_LIMIT: f64 = 1.0 - 1e-3;

/// Integrates a nonnegative `f` on `(0, upper]` by summing contributions of the
/// dyadic panels `[upper/2^(k+1), upper/2^k]`.
///
/// Divergence is declared when the partial sum passes [`DIVERGENCE_CAP`] or when
/// the last contributions fail to shrink geometrically. Otherwise the tail
/// below the last panel is extrapolated as a geometric series and included in
/// both the value and the error estimate.
pub fn dyadic_from_zero<F: FnMut(f64) -> f64>(f: &mut F, upper: f64, breaks: &[f64], rel_tol: f64) -> SingularIntegral {
    let mut total = 0.0;
    let mut error = 0.0;
    let mut contributions: Vec<f64> = Vec::with_capacity(DYADIC_LEVELS);
    let mut hi = upper;
    for _ in 0..DYADIC_LEVELS {
        let lo = 0.5 * hi;
        let est = adaptive(f, lo, hi, breaks, 0.0, rel_tol);
        if !est.value.is_finite() {
            return SingularIntegral::Divergent;
        }
        total += est.value;
        error += est.abs_error;
        contributions.push(est.value);
        if total > DIVERGENCE_CAP {
            return SingularIntegral::Divergent;
        }
        hi = lo;
        let k = contributions.len();
        if k >= 8 && est.value <= f64::EPSILON * 1e-2 * total {
            // Remaining tail is below rounding of the sum; still require decay.
            let recent = &contributions[k - 4..];
            if recent.windows(2).all(|w| w[1] <= w[0] * RATIO_LIMIT || w[1] == 0.0) {
                return SingularIntegral::Finite(Estimate { value: total, abs_error: error });
            }
        }
    }

    let k = contributions.len();
    let recent = &contributions[k - 4..];
    let ratios: Vec<f64> = recent.windows(2).map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 }).collect();
    let worst = ratios.iter().copied().fold(0.0_f64, f64::max);
    if worst >= RATIO_LIMIT {
        return SingularIntegral::Divergent;
    }
    let last = contributions[k - 1];
    let tail = last * worst / (1.0 - worst);
    SingularIntegral::Finite(Estimate { value: total + tail, abs_error: error + tail })
}
