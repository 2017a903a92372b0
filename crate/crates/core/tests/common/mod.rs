#![allow(dead_code)]

use statrs::distribution::{ChiSquared, ContinuousCDF, Gamma};

/// Two-sided Kolmogorov–Smirnov statistic of `draws` against `cdf`.
pub fn ks_statistic(mut draws: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    draws.sort_by(f64::total_cmp);
    let n = draws.len() as f64;
    draws
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Critical KS value at level 0.01.
pub fn ks_critical_01(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

/// Nakagami(m, Ω) CDF: r² ~ Gamma(shape m, rate m/Ω).
pub fn nakagami_cdf(r: f64, m: f64, omega: f64) -> f64 {
    Gamma::new(m, m / omega).unwrap().cdf(r * r)
}

/// CDF of 1/R for R ~ Nakagami(m, Ω).
pub fn inv_nakagami_cdf(r: f64, m: f64, omega: f64) -> f64 {
    1.0 - nakagami_cdf(1.0 / r, m, omega)
}

/// CDF of ‖u‖ for u ~ N(0, I_d).
pub fn chi_cdf(r: f64, d: usize) -> f64 {
    ChiSquared::new(d as f64).unwrap().cdf(r * r)
}

pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
