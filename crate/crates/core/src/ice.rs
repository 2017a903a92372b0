//! Outer adaptive loops: improved cross-entropy (ICE) and its safe variant.

use serde::{Deserialize, Serialize};

use crate::em::{fit, EmOptions, WeightedSampleSet};
use crate::error::{Error, Result};
use crate::mixtures::{prior_ln_pdf, safe_logpdf, safe_sample, Origin, PolarSample, SafeMixtureParams, VmfnmParams};
use crate::problems::Problem;
use crate::rng::RngStream;
use crate::special::{log_normal_cdf, normal_cdf};
use crate::vector::log_sum_exp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Plain ICE: light mixture only, unpenalized EM, fixed K.
    Ice,
    /// Safe mixture with annealed λ and penalized EM with pruning.
    SafeIce,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ice" => Ok(Method::Ice),
            "safe-ice" => Ok(Method::SafeIce),
            other => Err(Error::InvalidParameter(format!("unknown method '{other}' (expected ice or safe-ice)"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Ice => "ice",
            Method::SafeIce => "safe-ice",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    /// Samples per iteration N.
    pub n_per_iter: usize,
    /// Initial number of mixture components K₀.
    pub k_init: usize,
    /// Stopping threshold δ* on the CV of the failure-indicator ratio.
    pub delta_star: f64,
    /// Target CV δ_target of the intermediate weights.
    pub delta_target: f64,
    /// Initial smoothing width σ₀.
    pub sigma0: f64,
    /// Annealing horizon M; `None` uses σ₀.
    pub anneal_horizon: Option<f64>,
    pub max_outer: usize,
    pub em_tol: f64,
    pub max_em: usize,
    pub seed: u64,
    pub method: Method,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n_per_iter: 1000,
            k_init: 20,
            delta_star: 1.5,
            delta_target: 4.0,
            sigma0: 10.0,
            anneal_horizon: None,
            max_outer: 20,
            em_tol: 1e-4,
            max_em: 20,
            seed: 0,
            method: Method::SafeIce,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.n_per_iter < 100 {
            return bad(format!("n_per_iter must be >= 100, got {}", self.n_per_iter));
        }
        if self.k_init < 1 {
            return bad("k_init must be >= 1".into());
        }
        for (name, v) in [
            ("delta_star", self.delta_star),
            ("delta_target", self.delta_target),
            ("sigma0", self.sigma0),
            ("em_tol", self.em_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if let Some(m) = self.anneal_horizon {
            if !(m > 0.0 && m.is_finite()) {
                return bad(format!("anneal_horizon must be positive and finite, got {m}"));
            }
        }
        if self.max_outer < 1 {
            return bad("max_outer must be >= 1".into());
        }
        if self.max_em < 1 {
            return bad("max_em must be >= 1".into());
        }
        Ok(())
    }

    pub fn horizon(&self) -> f64 {
        self.anneal_horizon.unwrap_or(self.sigma0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunResult {
    pub pf_estimate: f64,
    /// Number of adaptation steps T.
    pub iterations: usize,
    pub final_k: usize,
    /// N (T + 1).
    pub lsf_evals: usize,
    /// σ_0, …, σ_T.
    pub sigma_trace: Vec<f64>,
    pub lambda_trace: Vec<f64>,
    pub k_trace: Vec<usize>,
    pub stop_cv_trace: Vec<f64>,
    /// The stopping criterion was met before `max_outer`.
    pub converged: bool,
    /// σ landed at the upper end of its search range on two consecutive steps.
    pub stagnated: bool,
    /// The final sample set held no failure, so the estimate is 0.
    pub no_failure_samples: bool,
    pub seed: u64,
    pub method: Method,
}

/// State handed to an observer after each outer iteration's samples are
/// evaluated.
#[derive(Debug)]
pub struct IterationSnapshot<'a> {
    pub t: usize,
    pub sigma: f64,
    pub lambda: f64,
    pub stop_cv: f64,
    pub proposal: &'a SafeMixtureParams,
    pub samples: &'a [PolarSample],
}

/// h_σ(g) = Φ(−g/σ).
pub fn smooth_indicator(g: f64, sigma: f64) -> f64 {
    normal_cdf(-g / sigma)
}

pub fn log_smooth_indicator(g: f64, sigma: f64) -> f64 {
    log_normal_cdf(-g / sigma)
}

/// Sample coefficient of variation std/mean with the n − 1 denominator.
/// Infinite when the mean is zero or fewer than two values are given.
pub fn cv(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return f64::INFINITY;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if mean == 0.0 {
        return f64::INFINITY;
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    var.sqrt() / mean
}

/// CV of weights given in log space (scale-free, so shifted by the maximum).
pub fn cv_from_log(log_values: &[f64]) -> f64 {
    let max = log_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::INFINITY;
    }
    let w: Vec<f64> = log_values.iter().map(|l| (l - max).exp()).collect();
    cv(&w)
}

/// ln W_i(σ) = ln Φ(−g_i/σ) + ln p(u_i) − ln q(u_i).
pub fn intermediate_log_weights(g: &[f64], log_ratio: &[f64], sigma: f64) -> Vec<f64> {
    g.iter().zip(log_ratio).map(|(&g, &lr)| log_smooth_indicator(g, sigma) + lr).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaChoice {
    pub sigma: f64,
    /// (cv − δ_target)² at the chosen σ.
    pub objective: f64,
    /// The minimizer sits at the upper end of the search range.
    pub at_boundary: bool,
}

const SIGMA_GRID: usize = 50;
const SIGMA_LOWER_FACTOR: f64 = 1e-8;
/// Upper end of the search range relative to σ_prev, kept below 1 so every
/// step strictly decreases σ.
pub const SIGMA_UPPER_FACTOR: f64 = 0.999;

/// Minimizes (cv(W(σ)) − δ_target)² over σ ∈ [1e-8 σ_prev, 0.999 σ_prev] with a
/// log-spaced grid refined by golden-section search in ln σ.
pub fn select_sigma(g: &[f64], log_ratio: &[f64], sigma_prev: f64, delta_target: f64) -> SigmaChoice {
    let objective = |ln_s: f64| {
        let c = cv_from_log(&intermediate_log_weights(g, log_ratio, ln_s.exp()));
        if c.is_finite() {
            (c - delta_target) * (c - delta_target)
        } else {
            f64::INFINITY
        }
    };
    let hi = (SIGMA_UPPER_FACTOR * sigma_prev).ln();
    let lo = (SIGMA_LOWER_FACTOR * sigma_prev).ln();
    let grid: Vec<f64> = (0..SIGMA_GRID)
        .map(|i| lo + (hi - lo) * i as f64 / (SIGMA_GRID - 1) as f64)
        .collect();
    let values: Vec<f64> = grid.iter().map(|&x| objective(x)).collect();
    // Ties go to the larger σ: prefer the least aggressive step.
    let mut best = SIGMA_GRID - 1;
    for i in (0..SIGMA_GRID).rev() {
        if values[i] < values[best] {
            best = i;
        }
    }
    let (mut x, mut fx) = (grid[best], values[best]);

    let mut a = grid[best.saturating_sub(1)];
    let mut b = grid[(best + 1).min(SIGMA_GRID - 1)];
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (objective(c), objective(d));
    for _ in 0..60 {
        if (b - a).abs() < 1e-10 {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = objective(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = objective(d);
        }
    }
    for (cand, fcand) in [(c, fc), (d, fd)] {
        if fcand < fx {
            x = cand;
            fx = fcand;
        }
    }
    let sigma = x.exp().min(SIGMA_UPPER_FACTOR * sigma_prev);
    SigmaChoice {
        sigma,
        objective: fx,
        at_boundary: x >= hi - 1e-12,
    }
}

/// CV of 𝕀{g ≤ 0}/h_σ(g) over the light-origin samples; infinite when there
/// are none or none of them fail.
pub fn stop_cv(samples: &[PolarSample], sigma: f64) -> f64 {
    let w: Vec<f64> = samples
        .iter()
        .filter(|s| s.origin == Origin::Light)
        .map(|s| if s.is_failure() { 1.0 / smooth_indicator(s.g, sigma) } else { 0.0 })
        .collect();
    cv(&w)
}

/// λ(σ) = 0 for σ > M, otherwise (1 + cos(πσ/M))/2.
pub fn lambda_schedule(sigma: f64, horizon: f64) -> f64 {
    if sigma > horizon {
        0.0
    } else {
        0.5 * (1.0 + (std::f64::consts::PI * sigma / horizon).cos())
    }
}

/// P̂ = (1/N) Σ 𝕀{g ≤ 0} p/q from precomputed ln(p/q).
pub fn estimate_pf_from_log_ratio(samples: &[PolarSample], log_ratio: &[f64]) -> f64 {
    let terms: Vec<f64> = samples
        .iter()
        .zip(log_ratio)
        .filter(|(s, _)| s.is_failure())
        .map(|(_, &lr)| lr)
        .collect();
    if terms.is_empty() {
        return 0.0;
    }
    (log_sum_exp(&terms) - (samples.len() as f64).ln()).exp()
}

/// Final importance-sampling estimate with proposal `phi`.
pub fn estimate_pf(samples: &[PolarSample], phi: &SafeMixtureParams) -> f64 {
    let lr: Vec<f64> = samples.iter().map(|s| prior_ln_pdf(s) - safe_logpdf(s, phi)).collect();
    estimate_pf_from_log_ratio(samples, &lr)
}

fn evaluate_all(problem: &Problem, samples: &mut [PolarSample]) -> Result<()> {
    let eval = |s: &mut PolarSample| -> Result<()> {
        let g = problem.evaluate(&s.to_cartesian())?;
        if g.is_nan() {
            return Err(Error::NonFinite(format!("{} returned NaN", problem.name())));
        }
        s.g = g;
        Ok(())
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        samples.par_iter_mut().try_for_each(eval)
    }
    #[cfg(not(feature = "parallel"))]
    {
        samples.iter_mut().try_for_each(eval)
    }
}

pub fn run(problem: &Problem, config: &RunConfig) -> Result<RunResult> {
    run_with_observer(problem, config, |_| {})
}

pub fn run_safe_ice(problem: &Problem, config: &RunConfig) -> Result<RunResult> {
    run(problem, &RunConfig { method: Method::SafeIce, ..config.clone() })
}

pub fn run_ice(problem: &Problem, config: &RunConfig) -> Result<RunResult> {
    run(problem, &RunConfig { method: Method::Ice, ..config.clone() })
}

/// Runs the configured method, calling `observer` once per outer iteration
/// after the limit state has been evaluated on the new samples.
pub fn run_with_observer(
    problem: &Problem,
    config: &RunConfig,
    mut observer: impl FnMut(&IterationSnapshot<'_>),
) -> Result<RunResult> {
    config.validate()?;
    let d = problem.dim();
    if d < 2 {
        return Err(Error::Dimension {
            problem: problem.name().to_string(),
            expected: ">= 2".into(),
            got: d,
        });
    }
    let safe = config.method == Method::SafeIce;
    let horizon = config.horizon();
    let lambda_for = |sigma: f64| if safe { lambda_schedule(sigma, horizon) } else { 1.0 };
    let em_opts = EmOptions {
        tol: config.em_tol,
        max_iter: config.max_em,
        penalized: safe,
        beta0: 1.0,
    };

    let mut rng = RngStream::new(config.seed);
    let n = config.n_per_iter;
    let mut sigma = config.sigma0;
    let mut phi = SafeMixtureParams::new(VmfnmParams::prior_like(d, config.k_init, &mut rng)?, lambda_for(sigma))?;

    let mut sigma_trace = Vec::new();
    let mut lambda_trace = Vec::new();
    let mut k_trace = Vec::new();
    let mut stop_cv_trace = Vec::new();
    let mut boundary_streak = 0;
    let mut stagnated = false;
    let mut converged = false;
    let mut t = 0;

    let (samples, log_ratio) = loop {
        let mut samples = safe_sample(&mut rng, &phi, n);
        evaluate_all(problem, &mut samples)?;
        let log_ratio: Vec<f64> = samples.iter().map(|s| prior_ln_pdf(s) - safe_logpdf(s, &phi)).collect();
        if let Some(bad) = log_ratio.iter().find(|v| v.is_nan()) {
            return Err(Error::NonFinite(format!("importance ratio is {bad} at iteration {t}")));
        }
        let delta = stop_cv(&samples, sigma);
        sigma_trace.push(sigma);
        lambda_trace.push(phi.lambda);
        k_trace.push(phi.k());
        stop_cv_trace.push(delta);
        observer(&IterationSnapshot {
            t,
            sigma,
            lambda: phi.lambda,
            stop_cv: delta,
            proposal: &phi,
            samples: &samples,
        });
        if delta <= config.delta_star {
            converged = true;
            break (samples, log_ratio);
        }
        if t == config.max_outer {
            break (samples, log_ratio);
        }

        let g: Vec<f64> = samples.iter().map(|s| s.g).collect();
        let choice = select_sigma(&g, &log_ratio, sigma, config.delta_target);
        if choice.at_boundary {
            boundary_streak += 1;
            if boundary_streak >= 2 {
                stagnated = true;
            }
        } else {
            boundary_streak = 0;
        }
        sigma = choice.sigma;

        let log_w = intermediate_log_weights(&g, &log_ratio, sigma);
        let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = log_w.iter().map(|l| (l - max).exp()).collect();
        let data = WeightedSampleSet::new(&samples, &weights)?;
        let em = fit(&data, &phi.light, &em_opts)?;
        phi = SafeMixtureParams::new(em.params, lambda_for(sigma))?;
        t += 1;
    };

    let pf_estimate = estimate_pf_from_log_ratio(&samples, &log_ratio);
    Ok(RunResult {
        pf_estimate,
        iterations: t,
        final_k: phi.k(),
        lsf_evals: n * (t + 1),
        sigma_trace,
        lambda_trace,
        k_trace,
        stop_cv_trace,
        converged,
        stagnated,
        no_failure_samples: !samples.iter().any(|s| s.is_failure()),
        seed: config.seed,
        method: config.method,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::registry;

    #[test]
    fn smooth_indicator_examples() {
        assert_eq!(smooth_indicator(0.0, 1.0), 0.5);
        assert!(smooth_indicator(1.0, 1e-6) < 1e-300);
        assert!((smooth_indicator(-1.0, 1e-6) - 1.0).abs() < 1e-15);
        assert!((log_smooth_indicator(2.0, 1.0) - normal_cdf(-2.0).ln()).abs() < 1e-14);
    }

    #[test]
    fn cv_examples() {
        assert_eq!(cv(&[1.0, 1.0, 1.0]), 0.0);
        assert!((cv(&[1.0, 3.0]) - 2f64.sqrt() / 2.0).abs() < 1e-15);
        assert_eq!(cv(&[0.0, 0.0]), f64::INFINITY);
        assert!((cv_from_log(&[0.0, 3f64.ln()]) - cv(&[1.0, 3.0])).abs() < 1e-15);
        assert!((cv_from_log(&[-800.0, -800.0 + 3f64.ln()]) - cv(&[1.0, 3.0])).abs() < 1e-12);
    }

    #[test]
    fn lambda_schedule_examples() {
        assert_eq!(lambda_schedule(10.0, 10.0), 0.0);
        assert!(lambda_schedule(10.0, 10.0).abs() < 1e-15);
        assert!((lambda_schedule(5.0, 10.0) - 0.5).abs() < 1e-15);
        assert_eq!(lambda_schedule(0.0, 10.0), 1.0);
        assert_eq!(lambda_schedule(12.0, 10.0), 0.0);
        let mut prev = 0.0;
        for i in (0..=100).rev() {
            let l = lambda_schedule(i as f64 * 0.1, 10.0);
            assert!(l >= prev);
            prev = l;
        }
    }

    fn sample_at(g: f64, origin: Origin) -> PolarSample {
        let mut s = PolarSample::new(1.0, vec![1.0, 0.0], origin, 0);
        s.g = g;
        s
    }

    #[test]
    fn stop_cv_uses_light_samples_only() {
        let s = vec![sample_at(-1.0, Origin::Light), sample_at(-1.0, Origin::Light), sample_at(3.0, Origin::Heavy)];
        assert!(stop_cv(&s, 1e-3).abs() < 1e-12);
        let none = vec![sample_at(1.0, Origin::Light), sample_at(2.0, Origin::Light)];
        assert_eq!(stop_cv(&none, 1.0), f64::INFINITY);
        let heavy = vec![sample_at(-1.0, Origin::Heavy), sample_at(-1.0, Origin::Heavy)];
        assert_eq!(stop_cv(&heavy, 1.0), f64::INFINITY);
    }

    #[test]
    fn select_sigma_stays_in_range() {
        let mut rng = RngStream::new(3);
        let g: Vec<f64> = (0..500).map(|_| 3.0 + rng.standard_normal()).collect();
        let lr = vec![0.0; 500];
        let c = select_sigma(&g, &lr, 5.0, 4.0);
        assert!(c.sigma < 5.0 && c.sigma >= 5e-8);
        let achieved = cv_from_log(&intermediate_log_weights(&g, &lr, c.sigma));
        assert!((achieved - 4.0).abs() < 0.05, "cv {achieved}");
    }

    #[test]
    fn estimate_pf_examples() {
        let s = vec![sample_at(-1.0, Origin::Light), sample_at(1.0, Origin::Light)];
        let p = estimate_pf_from_log_ratio(&s, &[0.5f64.ln(), 0.0]);
        assert!((p - 0.25).abs() < 1e-15);
        assert_eq!(estimate_pf_from_log_ratio(&s[1..], &[0.0]), 0.0);
    }

    #[test]
    fn config_validation() {
        assert!(RunConfig::default().validate().is_ok());
        for cfg in [
            RunConfig { n_per_iter: 10, ..RunConfig::default() },
            RunConfig { k_init: 0, ..RunConfig::default() },
            RunConfig { delta_star: 0.0, ..RunConfig::default() },
            RunConfig { sigma0: -1.0, ..RunConfig::default() },
            RunConfig { max_outer: 0, ..RunConfig::default() },
        ] {
            assert!(matches!(cfg.validate(), Err(Error::InvalidParameter(_))));
        }
    }

    #[test]
    fn run_is_reproducible_and_consistent() {
        let p = registry("two-mode", 3.0, 2).unwrap();
        let cfg = RunConfig { n_per_iter: 500, k_init: 5, seed: 11, ..RunConfig::default() };
        let a = run(&p, &cfg).unwrap();
        let b = run(&p, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.lsf_evals, 500 * (a.iterations + 1));
        assert_eq!(a.sigma_trace.len(), a.iterations + 1);
        assert!(a.sigma_trace.windows(2).all(|w| w[1] < w[0]));
        assert!(a.k_trace.windows(2).all(|w| w[1] <= w[0]));
        assert!(a.pf_estimate > 0.0);
    }

    #[test]
    fn ice_keeps_lambda_one_and_k_fixed() {
        let p = registry("two-mode", 2.5, 2).unwrap();
        let cfg = RunConfig { n_per_iter: 500, k_init: 3, seed: 5, method: Method::Ice, ..RunConfig::default() };
        let r = run(&p, &cfg).unwrap();
        assert!(r.lambda_trace.iter().all(|&l| l == 1.0));
        assert!(r.k_trace.iter().all(|&k| k == 3));
    }
}
