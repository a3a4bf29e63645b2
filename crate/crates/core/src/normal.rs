//! Standard normal helpers shared by the acquisitions, the penalisers and EP.
//!
//! `erf`/`erfc` come from `libm`; the scaled complementary error function
//! and the log-CDF are built on top of them so that tail ratios stay accurate
//! far beyond the point where `erfc` itself underflows.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

#[inline]
pub fn pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

#[inline]
pub fn log_pdf(x: f64) -> f64 {
    -0.5 * x * x - LN_SQRT_2PI
}

/// Φ(x), accurate in both tails.
#[inline]
pub fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

#[inline]
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

#[inline]
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

/// exp(x²)·erfc(x), for any real x (overflows only for x < -26).
pub fn erfcx(x: f64) -> f64 {
    if x < 0.5 {
        return (x * x).exp() * libm::erfc(x);
    }
    if x < 26.0 {
        // exp of the exact square: x² = hi + lo.
        let hi = x * x;
        let lo = x.mul_add(x, -hi);
        return hi.exp() * lo.exp() * libm::erfc(x);
    }
    // Continued fraction (Lentz-free, fixed depth) for large arguments.
    let mut frac = 0.0;
    for k in (1..=40).rev() {
        frac = (k as f64 * 0.5) / (x + frac);
    }
    1.0 / ((x + frac) * PI.sqrt())
}

/// ln Φ(x), finite for every finite x.
pub fn log_cdf(x: f64) -> f64 {
    if x > -5.0 {
        cdf(x).ln()
    } else {
        // Φ(x) = ½·erfcx(-x/√2)·exp(-x²/2)
        let t = -x * FRAC_1_SQRT_2;
        (0.5 * erfcx(t)).ln() - 0.5 * x * x
    }
}

/// φ(x)/Φ(-x) = φ(x)/(1-Φ(x)), the inverse Mills ratio of the upper tail.
pub fn upper_mills_ratio(x: f64) -> f64 {
    // φ(x) / (½ erfcx(x/√2) e^{-x²/2}) = √(2/π) / erfcx(x/√2)
    (2.0 / PI).sqrt() / erfcx(x / SQRT_2)
}

/// Inverse of Φ (Acklam's rational approximation, refined by one Halley step).
pub fn quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;
    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let e = cdf(x) - p;
    let u = e / pdf(x);
    x - u / (1.0 + 0.5 * x * u)
}

/// ln(1 + eᶻ) without overflow.
#[inline]
pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erfcx_is_continuous_across_branches() {
        for &x in &[0.5f64, 26.0] {
            let a = erfcx(x - 1e-9);
            let b = erfcx(x + 1e-9);
            assert!((a - b).abs() / a < 1e-8, "jump at {x}: {a} vs {b}");
        }
        // erfcx(x) ~ 1/(x√π) for large x
        let x = 1e4;
        assert!((erfcx(x) * x * PI.sqrt() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn log_cdf_matches_direct_where_both_work() {
        for i in 0..60 {
            let x = -30.0 + i as f64;
            let direct = cdf(x).ln();
            assert!((log_cdf(x) - direct).abs() < 1e-10 * direct.abs().max(1.0), "x={x}");
        }
        assert!(log_cdf(-100.0).is_finite());
    }

    #[test]
    fn quantile_inverts_cdf() {
        for &p in &[1e-12, 1e-5, 0.01, 0.3, 0.5, 0.77, 0.999, 1.0 - 1e-9] {
            assert!((cdf(quantile(p)) - p).abs() < 1e-12 * p.max(1e-3) + 1e-15, "p={p}");
        }
    }

    #[test]
    fn softplus_limits() {
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(softplus(800.0), 800.0);
        assert!(softplus(-800.0) >= 0.0);
    }
}
