//! Scalar special functions shared by the densities and samplers.
//!
//! Everything here is pure and works in `f64`. Quantities that overflow in
//! linear space (Bessel functions at large argument, tails of the normal
//! CDF) are returned in log space.

use std::f64::consts::{LN_2, PI, SQRT_2};

use crate::error::{Error, Result};

/// ln(2π)
pub const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Natural log of the gamma function for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain("log_gamma", format!("x must be positive and finite, got {x}")));
    }
    Ok(libm::lgamma_r(x).0)
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    0.5 * libm::erfc(-x / SQRT_2)
}

/// ln Φ(x), accurate far into the lower tail where Φ itself underflows.
pub fn log_normal_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if x > 5.0 {
        // Φ(x) = 1 - Φ(-x); keep the small complement exact.
        return (-0.5 * libm::erfc(x / SQRT_2)).ln_1p();
    }
    if x > -30.0 {
        return (0.5 * libm::erfc(-x / SQRT_2)).ln();
    }
    // Asymptotic Mills-ratio expansion.
    let z2 = 1.0 / (x * x);
    let series = 1.0 - z2 * (1.0 - 3.0 * z2 * (1.0 - 5.0 * z2 * (1.0 - 7.0 * z2)));
    -0.5 * x * x - (-x).ln() - 0.5 * LN_2PI + series.ln()
}

/// ln I_ν(x) − x, the exponentially scaled log of the modified Bessel
/// function of the first kind.
///
/// Uses the ascending power series (all terms positive, no cancellation)
/// for moderate arguments and the Hankel large-argument expansion once
/// `x > max(30, ν²)`.
pub fn log_bessel_i_scaled(order: f64, x: f64) -> Result<f64> {
    if !(order >= 0.0) || !order.is_finite() {
        return Err(Error::domain("log_bessel_i_scaled", format!("order must be >= 0, got {order}")));
    }
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::domain("log_bessel_i_scaled", format!("x must be >= 0 and finite, got {x}")));
    }
    if x == 0.0 {
        return Ok(if order == 0.0 { 0.0 } else { f64::NEG_INFINITY });
    }
    if x > (order * order).max(30.0) {
        Ok(bessel_i_hankel_scaled(order, x))
    } else {
        Ok(bessel_i_series_log(order, x)? - x)
    }
}

fn bessel_i_series_log(order: f64, x: f64) -> Result<f64> {
    const RESCALE: f64 = 1e250;
    let quarter_x2 = 0.25 * x * x;
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    let mut log_scale = 0.0_f64;
    let mut k = 0.0_f64;
    loop {
        k += 1.0;
        term *= quarter_x2 / (k * (k + order));
        sum += term;
        if sum > RESCALE {
            sum /= RESCALE;
            term /= RESCALE;
            log_scale += RESCALE.ln();
        }
        if term < sum * 1e-17 && k > 0.5 * x {
            break;
        }
    }
    Ok(order * (0.5 * x).ln() - log_gamma(order + 1.0)? + sum.ln() + log_scale)
}

fn bessel_i_hankel_scaled(order: f64, x: f64) -> f64 {
    let mu = 4.0 * order * order;
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    let mut prev_abs = f64::INFINITY;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        let next = -term * (mu - odd * odd) / (k as f64 * 8.0 * x);
        let abs = next.abs();
        if abs >= prev_abs {
            // Optimal truncation point of the asymptotic series.
            break;
        }
        term = next;
        sum += term;
        prev_abs = abs;
        if abs < 1e-17 * sum.abs() {
            break;
        }
    }
    sum.ln() - 0.5 * (2.0 * PI * x).ln()
}

/// Mean resultant length of the vMF law on S^{d−1}:
/// A_d(κ) = I_{d/2}(κ) / I_{d/2−1}(κ), by continued fraction.
pub fn bessel_ratio(d: usize, kappa: f64) -> f64 {
    debug_assert!(d >= 2);
    if kappa <= 0.0 {
        return 0.0;
    }
    if !kappa.is_finite() {
        return 1.0;
    }
    // I_ν / I_{ν−1} = 1 / (b_0 + 1/(b_1 + 1/(b_2 + ...))), b_j = 2(ν + j)/κ.
    // Modified Lentz evaluation.
    const TINY: f64 = 1e-300;
    let nu = 0.5 * d as f64;
    let b = |j: usize| 2.0 * (nu + j as f64) / kappa;
    let mut f = b(0).max(TINY);
    let mut c = f;
    let mut dd = 0.0;
    for j in 1..2_000_000 {
        let bj = b(j);
        dd += bj;
        if dd.abs() < TINY {
            dd = TINY;
        }
        c = bj + 1.0 / c;
        if c.abs() < TINY {
            c = TINY;
        }
        dd = 1.0 / dd;
        let delta = c * dd;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    1.0 / f
}

/// ln of the surface area of the unit sphere S^{d−1} ⊂ R^d.
pub fn log_sphere_area(d: usize) -> f64 {
    let half = 0.5 * d as f64;
    LN_2 + half * PI.ln() - libm::lgamma_r(half).0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn log_gamma_reference_points() {
        assert_eq!(log_gamma(1.0).unwrap(), 0.0);
        // ln √π
        assert!(rel(log_gamma(0.5).unwrap(), 0.572_364_942_924_700_1) < 1e-13);
        assert!(rel(log_gamma(5.0).unwrap(), 24f64.ln()) < 1e-13);
        // mpmath.loggamma(1e6)
        assert!(rel(log_gamma(1e6).unwrap(), 12_815_504.569_147_61) < 1e-12);
        // mpmath.loggamma(123.25)
        assert!(rel(log_gamma(123.25).unwrap(), 468.614_482_950_516_6) < 1e-12);
    }

    #[test]
    fn log_gamma_rejects_nonpositive() {
        assert!(log_gamma(0.0).is_err());
        assert!(log_gamma(-2.5).is_err());
        assert!(log_gamma(f64::NAN).is_err());
    }

    #[test]
    fn log_gamma_recurrence() {
        let mut x = 0.5;
        while x <= 100.0 {
            let lhs = log_gamma(x + 1.0).unwrap() - log_gamma(x).unwrap() - x.ln();
            assert!(lhs.abs() <= 1e-11, "x={x} residual={lhs}");
            x += 0.5;
        }
    }

    #[test]
    fn normal_cdf_reference_points() {
        assert_eq!(normal_cdf(0.0), 0.5);
        // mpmath.ncdf(-3.5)
        assert!((normal_cdf(-3.5) - 2.326_290_790_355_250_4e-4).abs() <= 1e-15);
        assert!((normal_cdf(-1.0) - 0.158_655_253_931_457_05).abs() <= 1e-15);
        assert_eq!(normal_cdf(40.0), 1.0);
        assert_eq!(normal_cdf(-40.0), 0.0);
    }

    #[test]
    fn normal_cdf_symmetry_and_monotone() {
        let mut prev = 0.0;
        for i in -800..=800 {
            let x = i as f64 / 100.0;
            let s = normal_cdf(x) + normal_cdf(-x);
            assert!((s - 1.0).abs() <= 1e-14, "x={x}");
            let p = normal_cdf(x);
            assert!(p >= prev);
            prev = p;
        }
    }

    #[test]
    fn log_normal_cdf_tail() {
        // mpmath.log(mpmath.ncdf(-40)), mpmath.log(mpmath.ncdf(-30.5))
        assert!(rel(log_normal_cdf(-40.0), -804.608_442_013_754_9) < 1e-12);
        assert!(rel(log_normal_cdf(-30.5), -469.462_737_322_912_1) < 1e-12);
        assert!((log_normal_cdf(-3.5) - normal_cdf(-3.5).ln()).abs() < 1e-14);
        // ln Φ(8) ≈ -Φ(-8)
        assert!(rel(log_normal_cdf(8.0), -6.220_960_574_271_785e-16) < 1e-10);
        // continuity across the branch switch
        let a = log_normal_cdf(-30.0 + 1e-9);
        let b = log_normal_cdf(-30.0 - 1e-9);
        assert!(rel(a, b) < 1e-9);
    }

    #[test]
    fn bessel_scaled_reference_points() {
        assert_eq!(log_bessel_i_scaled(0.0, 0.0).unwrap(), 0.0);
        // I_{1/2}(x) = sqrt(2/(πx)) sinh x
        let closed = ((2.0 / (PI * 2.0)).sqrt() * 2f64.sinh()).ln() - 2.0;
        assert!(rel(log_bessel_i_scaled(0.5, 2.0).unwrap(), closed) < 1e-12);
        assert!(rel(log_bessel_i_scaled(0.5, 2.0).unwrap(), -1.283_997_570_310_532) < 1e-12);
        assert!(rel(log_bessel_i_scaled(1.0, 2.0).unwrap(), -1.535_865_526_453_840_3) < 1e-12);
        assert!(log_bessel_i_scaled(0.0, -1.0).is_err());
        assert!(log_bessel_i_scaled(2.0, 0.0).unwrap().is_infinite());
    }

    #[test]
    fn bessel_scaled_matches_mpmath_across_regimes() {
        // (order, x, mpmath.log(besseli(order, x)) - x)
        let table = [
            (0.0, 29.0, -2.598_198_962_849_769_8),
            (0.0, 31.0, -2.631_832_537_633_586_5),
            (0.0, 1e5, -6.675_400_015_683_537),
            (4.0, 10.0, -2.888_087_851_162_449_4),
            (4.0, 17.0, -2.810_788_931_245_000_4),
            (4.0, 1e4, -5.524_896_258_561_363),
            (9.0, 80.0, -3.617_284_740_832_078),
            (9.0, 82.0, -3.617_206_305_729_860_3),
            (0.5, 500.0, -4.026_242_582_415_769),
        ];
        for (nu, x, want) in table {
            let got = log_bessel_i_scaled(nu, x).unwrap();
            assert!(rel(got, want) < 1e-10, "nu={nu} x={x} got={got} want={want}");
        }
    }

    #[test]
    fn bessel_ratio_reference_points() {
        assert_eq!(bessel_ratio(3, 0.0), 0.0);
        let coth2 = 1.0 / 2f64.tanh();
        assert!((bessel_ratio(3, 2.0) - (coth2 - 0.5)).abs() < 1e-13);
        assert!(bessel_ratio(3, 1e4) >= 0.999);
        assert!(bessel_ratio(3, 1e4) < 1.0);
        // d = 2: I_1(1)/I_0(1)
        assert!((bessel_ratio(2, 1.0) - 0.446_389_965_896_534_5).abs() < 1e-13);
    }

    #[test]
    fn bessel_ratio_monotone_and_bounded() {
        for d in [2usize, 3, 5, 10, 20] {
            let mut prev = -1.0;
            for i in 0..=120 {
                let kappa = 10f64.powf(-4.0 + i as f64 / 15.0);
                let a = bessel_ratio(d, kappa);
                assert!((0.0..1.0).contains(&a), "d={d} kappa={kappa} a={a}");
                assert!(a > prev, "d={d} kappa={kappa}");
                prev = a;
            }
        }
    }

    #[test]
    fn sphere_area() {
        assert!((log_sphere_area(3) - (4.0 * PI).ln()).abs() < 1e-14);
        assert!((log_sphere_area(2) - (2.0 * PI).ln()).abs() < 1e-14);
    }
}
