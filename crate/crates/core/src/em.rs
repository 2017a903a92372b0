//! Weighted EM for vMFNM mixtures with a cross-entropy penalty on the
//! mixture weights.
//!
//! The penalty drives the weights of redundant components to zero or below;
//! such components are pruned between the weight update and the closed-form
//! update of the remaining parameters. With the penalty switched off the
//! procedure is plain weighted EM.

use serde::Serialize;

use crate::distributions::{NakagamiParams, VmfParams};
use crate::error::{Error, Result};
use crate::mixtures::{PolarSample, VmfnmComponent, VmfnmParams};
use crate::vector::{dot, log_sum_exp, normalize_in_place};

pub const M_MIN: f64 = 0.5 + 1e-6;
pub const M_MAX: f64 = 1e4;
pub const KAPPA_MAX: f64 = 1e4;

/// Samples paired with their (unnormalized) importance weights.
#[derive(Debug, Clone, Copy)]
pub struct WeightedSampleSet<'a> {
    samples: &'a [PolarSample],
    weights: &'a [f64],
}

impl<'a> WeightedSampleSet<'a> {
    pub fn new(samples: &'a [PolarSample], weights: &'a [f64]) -> Result<Self> {
        if samples.len() != weights.len() {
            return Err(Error::InvalidParameter(format!(
                "{} samples but {} weights",
                samples.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::InvalidParameter("weights must be finite and non-negative".into()));
        }
        if !weights.iter().any(|w| *w > 0.0) {
            return Err(Error::EmptyInput("at least one weight must be positive".into()));
        }
        Ok(Self { samples, weights })
    }

    pub fn samples(&self) -> &'a [PolarSample] {
        self.samples
    }

    pub fn weights(&self) -> &'a [f64] {
        self.weights
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Row-major N×K matrix of posterior membership probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct Responsibilities {
    gamma: Vec<f64>,
    n: usize,
    k: usize,
}

impl Responsibilities {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let k = rows.first().map_or(0, Vec::len);
        if n == 0 || k == 0 || rows.iter().any(|r| r.len() != k) {
            return Err(Error::InvalidParameter("responsibilities must be a non-empty rectangular matrix".into()));
        }
        Ok(Self {
            gamma: rows.concat(),
            n,
            k,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.gamma[i * self.k..(i + 1) * self.k]
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.gamma[i * self.k + k]
    }

    /// Σ_i γ_ik W_i for every k.
    fn weighted_column_sums(&self, weights: &[f64]) -> Vec<f64> {
        let mut sums = vec![0.0; self.k];
        for (i, w) in weights.iter().enumerate() {
            for (s, g) in sums.iter_mut().zip(self.row(i)) {
                *s += g * w;
            }
        }
        sums
    }
}

/// Flags raised by the EM steps when a guard engaged.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct EmDiagnostics {
    /// Samples with zero density under every component (uniform rows used).
    pub degenerate_rows: usize,
    pub m_clamped: bool,
    pub kappa_clamped: bool,
    /// A component with no weighted mass kept its previous parameters.
    pub empty_component: bool,
}

impl EmDiagnostics {
    fn merge(&mut self, other: EmDiagnostics) {
        self.degenerate_rows += other.degenerate_rows;
        self.m_clamped |= other.m_clamped;
        self.kappa_clamped |= other.kappa_clamped;
        self.empty_component |= other.empty_component;
    }
}

/// γ_k^(i) = π_k q_k(u_i) / Σ_s π_s q_s(u_i), evaluated in log space.
pub fn e_step(data: &WeightedSampleSet<'_>, v: &VmfnmParams) -> (Responsibilities, EmDiagnostics) {
    let k = v.k();
    let mut gamma = Vec::with_capacity(data.len() * k);
    let mut diag = EmDiagnostics::default();
    let mut buf = Vec::with_capacity(k);
    for s in data.samples() {
        v.component_ln_joint(s, &mut buf);
        let total = log_sum_exp(&buf);
        if total.is_finite() {
            gamma.extend(buf.iter().map(|l| (l - total).exp()));
        } else {
            diag.degenerate_rows += 1;
            gamma.extend(std::iter::repeat_n(1.0 / k as f64, k));
        }
    }
    (
        Responsibilities {
            gamma,
            n: data.len(),
            k,
        },
        diag,
    )
}

/// Hard assignment of every sample to the component whose mean direction
/// is closest. Used to seed EM when the angular laws carry no information.
pub fn directional_assignment(data: &WeightedSampleSet<'_>, v: &VmfnmParams) -> Responsibilities {
    let k = v.k();
    let mut gamma = vec![0.0; data.len() * k];
    for (i, s) in data.samples().iter().enumerate() {
        let best = v
            .components()
            .iter()
            .enumerate()
            .map(|(j, c)| (j, dot(c.angular.mu(), &s.a)))
            .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc })
            .0;
        gamma[i * k + best] = 1.0;
    }
    Responsibilities { gamma, n: data.len(), k }
}

/// π_k^EM = Σ_i γ_ik W_i / Σ_i Σ_s γ_is W_i.
pub fn em_weight_update(data: &WeightedSampleSet<'_>, gamma: &Responsibilities) -> Vec<f64> {
    let sums = gamma.weighted_column_sums(data.weights());
    let total: f64 = sums.iter().sum();
    sums.into_iter().map(|s| s / total).collect()
}

/// Σ_k π_k ln π_k (≤ 0).
pub fn entropy_term(pi: &[f64]) -> f64 {
    pi.iter().filter(|p| **p > 0.0).map(|p| p * p.ln()).sum()
}

/// Penalized weight update. Entries may come out non-positive; those are
/// the components to prune.
pub fn penalized_weight_update(
    data: &WeightedSampleSet<'_>,
    gamma: &Responsibilities,
    pi_old: &[f64],
    beta: f64,
) -> Vec<f64> {
    let sums = gamma.weighted_column_sums(data.weights());
    let total: f64 = sums.iter().sum();
    let pi_em: Vec<f64> = sums.iter().map(|s| s / total).collect();
    penalize(&pi_em, data.total_weight() / total, pi_old, beta)
}

fn penalize(pi_em: &[f64], factor: f64, pi_old: &[f64], beta: f64) -> Vec<f64> {
    if beta == 0.0 {
        return pi_em.to_vec();
    }
    let e = entropy_term(pi_old);
    pi_em
        .iter()
        .zip(pi_old)
        .map(|(em, old)| {
            let penalty = if *old > 0.0 { old * (old.ln() - e) } else { 0.0 };
            em + beta * factor * penalty
        })
        .collect()
}

/// Result of dropping the non-positive weights.
#[derive(Debug, Clone)]
pub struct Pruned {
    pub params: VmfnmParams,
    pub gamma: Responsibilities,
    /// Indices (into the input) of the surviving components.
    pub kept: Vec<usize>,
}

impl Pruned {
    pub fn k(&self) -> usize {
        self.kept.len()
    }
}

/// Weights at or below this are treated as zero when pruning, so that
/// rounding residue of order 1e-17 does not keep a dead component alive.
pub const PRUNE_FLOOR: f64 = 1e-10;

/// Drops components with π ≤ PRUNE_FLOOR, renormalizes the survivors' weights and
/// the responsibility rows. The surviving components of `v` take the
/// renormalized weights; their other parameters are unchanged.
pub fn prune(pi_new: &[f64], gamma: &Responsibilities, v: &VmfnmParams) -> Result<Pruned> {
    let kept: Vec<usize> = (0..pi_new.len()).filter(|&k| pi_new[k] > PRUNE_FLOOR).collect();
    if kept.is_empty() {
        return Err(Error::AllWeightsPruned);
    }
    let total: f64 = kept.iter().map(|&k| pi_new[k]).sum();
    let components: Vec<VmfnmComponent> = kept
        .iter()
        .map(|&k| {
            let mut c = v.components()[k].clone();
            c.weight = pi_new[k] / total;
            c
        })
        .collect();
    let k_new = kept.len();
    let mut rows = Vec::with_capacity(gamma.n() * k_new);
    for i in 0..gamma.n() {
        let row = gamma.row(i);
        let s: f64 = kept.iter().map(|&k| row[k]).sum();
        if s > 0.0 {
            rows.extend(kept.iter().map(|&k| row[k] / s));
        } else {
            rows.extend(std::iter::repeat_n(1.0 / k_new as f64, k_new));
        }
    }
    Ok(Pruned {
        params: VmfnmParams::from_parts_unchecked(components, v.dim()),
        gamma: Responsibilities {
            gamma: rows,
            n: gamma.n(),
            k: k_new,
        },
        kept,
    })
}

/// Plain EM keeps every component, including ones whose weight vanished.
fn reweight(pi_new: &[f64], gamma: Responsibilities, v: &VmfnmParams) -> Pruned {
    let components = v
        .components()
        .iter()
        .zip(pi_new)
        .map(|(c, &w)| VmfnmComponent { weight: w, ..c.clone() })
        .collect();
    Pruned {
        params: VmfnmParams::from_parts_unchecked(components, v.dim()),
        gamma,
        kept: (0..pi_new.len()).collect(),
    }
}

/// Damping η = min{1, 0.5^⌊d/2 − 1⌋}.
pub fn eta(d: usize) -> f64 {
    let exponent = (0.5 * d as f64 - 1.0).floor();
    0.5f64.powf(exponent).min(1.0)
}

/// Next penalty strength.
pub fn beta_update(pi_new: &[f64], pi_old: &[f64], pi_em: &[f64], d: usize, n_samples: usize) -> f64 {
    let k = pi_old.len();
    let e = entropy_term(pi_old);
    if k <= 1 || e == 0.0 {
        return 0.0;
    }
    let scale = eta(d) * n_samples as f64;
    let first = pi_new
        .iter()
        .zip(pi_old)
        .map(|(a, b)| (-scale * (a - b).abs()).exp())
        .sum::<f64>()
        / k as f64;
    let max_em = pi_em.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let max_old = pi_old.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let second = (1.0 - max_em) / (-max_old * e);
    if second.is_finite() && second >= 0.0 {
        first.min(second)
    } else {
        first
    }
}

/// Closed-form radial and angular parameters of one component.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentFit {
    pub radial: NakagamiParams,
    pub angular: VmfParams,
}

/// Weighted moment updates for every component, given responsibilities.
///
/// A component whose weighted mass is zero yields `None` (the caller keeps
/// its previous parameters).
pub fn m_step_params(
    data: &WeightedSampleSet<'_>,
    gamma: &Responsibilities,
) -> Result<(Vec<Option<ComponentFit>>, EmDiagnostics)> {
    let d = data.samples().first().map_or(0, PolarSample::dim);
    let mut diag = EmDiagnostics::default();
    let mut fits = Vec::with_capacity(gamma.k());
    for k in 0..gamma.k() {
        let mut sc = 0.0;
        let mut s2 = 0.0;
        let mut s4 = 0.0;
        let mut sa = vec![0.0; d];
        for (i, (s, w)) in data.samples().iter().zip(data.weights()).enumerate() {
            let c = gamma.get(i, k) * w;
            if c == 0.0 {
                continue;
            }
            let r2 = s.r * s.r;
            sc += c;
            s2 += c * r2;
            s4 += c * r2 * r2;
            for (acc, x) in sa.iter_mut().zip(&s.a) {
                *acc += c * x;
            }
        }
        if !(sc > 0.0) {
            diag.empty_component = true;
            fits.push(None);
            continue;
        }
        let omega = s2 / sc;
        let var = s4 / sc - omega * omega;
        let m_raw = if var > 0.0 { omega * omega / var } else { f64::INFINITY };
        let m = m_raw.clamp(M_MIN, M_MAX);
        diag.m_clamped |= m != m_raw;

        let resultant = sa.iter().map(|x| x * x).sum::<f64>().sqrt();
        let rbar = (resultant / sc).min(1.0);
        let mut mu = sa;
        if !normalize_in_place(&mut mu) {
            // No preferred direction: any unit vector with κ = 0.
            mu = vec![0.0; d];
            mu[0] = 1.0;
        }
        let df = d as f64;
        let kappa_raw = if rbar < 1.0 {
            rbar * (df - rbar * rbar) / (1.0 - rbar * rbar)
        } else {
            f64::INFINITY
        };
        let kappa = kappa_raw.clamp(0.0, KAPPA_MAX);
        diag.kappa_clamped |= kappa != kappa_raw;

        fits.push(Some(ComponentFit {
            radial: NakagamiParams::new(m, omega)?,
            angular: VmfParams::new(mu, kappa)?,
        }));
    }
    Ok((fits, diag))
}

/// Σ_i W_i ln q(u_i; v).
pub fn weighted_loglik(data: &WeightedSampleSet<'_>, v: &VmfnmParams) -> f64 {
    let mut buf = Vec::with_capacity(v.k());
    data.samples()
        .iter()
        .zip(data.weights())
        .filter(|(_, w)| **w > 0.0)
        .map(|(s, w)| {
            v.component_ln_joint(s, &mut buf);
            w * log_sum_exp(&buf)
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmOptions {
    /// Relative log-likelihood change below which the inner loop stops.
    pub tol: f64,
    pub max_iter: usize,
    /// Cross-entropy penalty with pruning (true) or plain weighted EM.
    pub penalized: bool,
    /// Initial penalty strength β(0).
    pub beta0: f64,
}

impl Default for EmOptions {
    fn default() -> Self {
        Self {
            tol: 1e-4,
            max_iter: 20,
            penalized: true,
            beta0: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EmFit {
    pub params: VmfnmParams,
    pub iterations: usize,
    pub converged: bool,
    pub k_trace: Vec<usize>,
    pub beta_trace: Vec<f64>,
    /// Weight vectors after each weight update (post-pruning, normalized).
    pub weight_trace: Vec<Vec<f64>>,
    pub loglik_trace: Vec<f64>,
    pub diagnostics: EmDiagnostics,
}

impl EmFit {
    pub fn k(&self) -> usize {
        self.params.k()
    }
}

/// Runs the inner EM loop from `v_init` on a fixed weighted sample set.
///
/// Each iteration: E-step, (penalized) weight update, pruning, β update,
/// closed-form M-step, weighted log-likelihood. Stops once
/// |l(j) − l(j−1)| < tol·|l(j)| or after `max_iter` iterations. When every
/// component of `v_init` has κ = 0 the first E-step is replaced by a hard
/// nearest-direction assignment, since uniform angular laws cannot tell the
/// components apart.
pub fn fit(data: &WeightedSampleSet<'_>, v_init: &VmfnmParams, opts: &EmOptions) -> Result<EmFit> {
    if opts.max_iter == 0 {
        return Err(Error::InvalidParameter("max_iter must be >= 1".into()));
    }
    // Weight scale is irrelevant to every update; normalize for range safety.
    let total = data.total_weight();
    let scaled: Vec<f64> = data.weights().iter().map(|w| w / total).collect();
    let data = WeightedSampleSet {
        samples: data.samples(),
        weights: &scaled,
    };
    let d = v_init.dim();
    let n = data.len();

    let mut v = v_init.clone();
    let mut beta = if opts.penalized { opts.beta0 } else { 0.0 };
    let mut prev_ll = f64::INFINITY;
    let mut diagnostics = EmDiagnostics::default();
    let mut k_trace = Vec::new();
    let mut beta_trace = Vec::new();
    let mut weight_trace = Vec::new();
    let mut loglik_trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let seed_directions = v.k() > 1 && v.components().iter().all(|c| c.angular.kappa() == 0.0);

    for j in 0..opts.max_iter {
        iterations = j + 1;
        let gamma = if j == 0 && seed_directions {
            directional_assignment(&data, &v)
        } else {
            let (g, diag) = e_step(&data, &v);
            diagnostics.merge(diag);
            g
        };

        let pi_old = v.weights();
        let sums = gamma.weighted_column_sums(data.weights());
        let sum_all: f64 = sums.iter().sum();
        let pi_em: Vec<f64> = sums.iter().map(|s| s / sum_all).collect();
        let pi_new = penalize(&pi_em, data.total_weight() / sum_all, &pi_old, beta);

        let pruned = if opts.penalized {
            prune(&pi_new, &gamma, &v)?
        } else {
            reweight(&pi_new, gamma, &v)
        };
        if opts.penalized {
            beta = beta_update(&pi_new, &pi_old, &pi_em, d, n);
        }

        let (fits, diag) = m_step_params(&data, &pruned.gamma)?;
        diagnostics.merge(diag);
        let components: Vec<VmfnmComponent> = pruned
            .params
            .components()
            .iter()
            .zip(fits)
            .map(|(c, f)| match f {
                Some(f) => VmfnmComponent {
                    weight: c.weight,
                    radial: f.radial,
                    angular: f.angular,
                },
                None => c.clone(),
            })
            .collect();
        v = VmfnmParams::from_parts_unchecked(components, d);

        let ll = weighted_loglik(&data, &v);
        k_trace.push(v.k());
        beta_trace.push(beta);
        weight_trace.push(v.weights());
        loglik_trace.push(ll);
        if (ll - prev_ll).abs() < opts.tol * ll.abs() {
            converged = true;
            break;
        }
        prev_ll = ll;
    }

    Ok(EmFit {
        params: v,
        iterations,
        converged,
        k_trace,
        beta_trace,
        weight_trace,
        loglik_trace,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixtures::Origin;
    use crate::rng::RngStream;

    fn two_samples() -> Vec<PolarSample> {
        vec![
            PolarSample::new(1.0, vec![1.0, 0.0], Origin::Light, 0),
            PolarSample::new(2.0, vec![0.0, 1.0], Origin::Light, 0),
        ]
    }

    fn comp(w: f64, m: f64, omega: f64, mu: Vec<f64>, kappa: f64) -> VmfnmComponent {
        VmfnmComponent {
            weight: w,
            radial: NakagamiParams::new(m, omega).unwrap(),
            angular: VmfParams::new(mu, kappa).unwrap(),
        }
    }

    fn diag_gamma() -> Responsibilities {
        Responsibilities::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap()
    }

    #[test]
    fn e_step_single_component() {
        let s = two_samples();
        let w = [1.0, 1.0];
        let data = WeightedSampleSet::new(&s, &w).unwrap();
        let v = VmfnmParams::new(vec![comp(1.0, 1.0, 2.0, vec![1.0, 0.0], 1.0)]).unwrap();
        let (g, diag) = e_step(&data, &v);
        assert_eq!(diag.degenerate_rows, 0);
        assert!((0..2).all(|i| g.get(i, 0) == 1.0));
    }

    #[test]
    fn e_step_separated_and_symmetric() {
        let v = VmfnmParams::new(vec![
            comp(0.5, 50.0, 9.0, vec![1.0, 0.0], 200.0),
            comp(0.5, 50.0, 9.0, vec![-1.0, 0.0], 200.0),
        ])
        .unwrap();
        let s = vec![
            PolarSample::new(3.0, vec![1.0, 0.0], Origin::Light, 0),
            PolarSample::new(3.0, vec![0.0, 1.0], Origin::Light, 0),
        ];
        let w = [1.0, 1.0];
        let data = WeightedSampleSet::new(&s, &w).unwrap();
        let (g, _) = e_step(&data, &v);
        assert!(g.get(0, 0) >= 0.999);
        assert!((g.get(1, 0) - 0.5).abs() < 1e-12 && (g.get(1, 1) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn e_step_far_sample_stays_normalized() {
        // every density underflows in linear space, not in log space
        let v = VmfnmParams::new(vec![
            comp(0.5, 1e4, 1.0, vec![1.0, 0.0], 0.0),
            comp(0.5, 1e4, 1.0, vec![0.0, 1.0], 0.0),
        ])
        .unwrap();
        let s = vec![PolarSample::new(1e3, vec![1.0, 0.0], Origin::Light, 0)];
        let w = [1.0];
        let data = WeightedSampleSet::new(&s, &w).unwrap();
        let (g, diag) = e_step(&data, &v);
        assert_eq!(diag.degenerate_rows, 0);
        assert!((g.row(0).iter().sum::<f64>() - 1.0).abs() < 1e-5);
        assert!((g.get(0, 0) - 0.5).abs() < 1e-5);
    }

    #[test]
    fn em_weight_update_examples() {
        let s = two_samples();
        let uniform = Responsibilities::from_rows(&[vec![1.0 / 3.0; 3], vec![1.0 / 3.0; 3]]).unwrap();
        let w = [5.0, 0.25];
        let data = WeightedSampleSet::new(&s, &w).unwrap();
        for p in em_weight_update(&data, &uniform) {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
        let w = [1.0, 1.0];
        let data = WeightedSampleSet::new(&s, &w).unwrap();
        assert_eq!(em_weight_update(&data, &diag_gamma()), vec![0.5, 0.5]);
        let w = [3.0, 1.0];
        let data = WeightedSampleSet::new(&s, &w).unwrap();
        assert_eq!(em_weight_update(&data, &diag_gamma()), vec![0.75, 0.25]);
    }

    #[test]
    fn penalized_update_examples() {
        let s = two_samples();
        let w = [1.0, 1.0];
        let data = WeightedSampleSet::new(&s, &w).unwrap();
        let g = diag_gamma();
        let pi_old = [0.9, 0.1];
        assert_eq!(penalized_weight_update(&data, &g, &pi_old, 0.0), em_weight_update(&data, &g));
        assert_eq!(penalized_weight_update(&data, &g, &[0.5, 0.5], 1.0), vec![0.5, 0.5]);

        // Hand evaluation: E = 0.9 ln 0.9 + 0.1 ln 0.1
        let e = 0.9f64 * 0.9f64.ln() + 0.1 * 0.1f64.ln();
        assert!((e + 0.325_082_973_391_448_2).abs() < 1e-15);
        let p = penalized_weight_update(&data, &g, &pi_old, 1.0);
        assert!((p[0] - 0.697_750).abs() < 1e-6);
        assert!((p[1] - 0.302_249).abs() < 1e-6);
        assert!((p[0] - (0.5 + 0.9 * (0.9f64.ln() - e))).abs() < 1e-15);
    }

    #[test]
    fn prune_examples() {
        let v = VmfnmParams::new(vec![
            comp(0.2, 1.0, 1.0, vec![1.0, 0.0], 0.0),
            comp(0.3, 1.0, 1.0, vec![0.0, 1.0], 0.0),
            comp(0.5, 1.0, 1.0, vec![-1.0, 0.0], 0.0),
        ])
        .unwrap();
        let g = Responsibilities::from_rows(&[vec![0.2, 0.3, 0.5]]).unwrap();
        let out = prune(&[0.6, 0.5, -0.1], &g, &v).unwrap();
        assert_eq!(out.k(), 2);
        assert_eq!(out.kept, vec![0, 1]);
        let w = out.params.weights();
        assert!((w[0] - 0.545_454_545_454_545_5).abs() < 1e-15);
        assert!((w[1] - 0.454_545_454_545_454_5).abs() < 1e-15);
        assert!((out.gamma.get(0, 0) - 0.4).abs() < 1e-15);
        assert!((out.gamma.get(0, 1) - 0.6).abs() < 1e-15);

        let same = prune(&[0.2, 0.3, 0.5], &g, &v).unwrap();
        assert_eq!(same.params, v);
        assert_eq!(same.gamma, g);

        assert!(matches!(prune(&[0.0, -0.2, -1.0], &g, &v), Err(Error::AllWeightsPruned)));
    }

    #[test]
    fn eta_examples() {
        assert_eq!(eta(2), 1.0);
        assert_eq!(eta(3), 1.0);
        assert_eq!(eta(10), 0.0625);
        assert_eq!(eta(20), 0.5f64.powi(9));
    }

    #[test]
    fn beta_update_examples() {
        let pi = [0.3, 0.7];
        let em = [0.3, 0.7];
        let e = entropy_term(&pi);
        let second = (1.0 - 0.7) / (0.7 * -e);
        assert!((beta_update(&pi, &pi, &em, 2, 100) - second.min(1.0)).abs() < 1e-15);

        let old = [0.9, 0.1];
        let em = [0.75, 0.25];
        let b = beta_update(&[0.75, 0.25], &old, &em, 2, 1000);
        // first argument is e^{-150}
        assert!(b < 1e-60);
        let b = beta_update(&old, &old, &em, 2, 1000);
        assert!((b - 0.854_482_702_923_022_8).abs() < 1e-12);

        assert_eq!(beta_update(&[1.0], &[1.0], &[1.0], 2, 10), 0.0);
        // max π^EM = 1: second argument is 0, still a valid bound
        assert_eq!(beta_update(&[0.5, 0.5], &[0.5, 0.5], &[1.0, 0.0], 2, 10), 0.0);
    }

    #[test]
    fn m_step_examples() {
        let s: Vec<PolarSample> = (0..4)
            .map(|i| {
                let t = i as f64;
                PolarSample::new(2.0, vec![t.cos(), t.sin()], Origin::Light, 0)
            })
            .collect();
        let w = [1.0; 4];
        let data = WeightedSampleSet::new(&s, &w).unwrap();
        let g = Responsibilities::from_rows(&vec![vec![1.0]; 4]).unwrap();
        let (fits, diag) = m_step_params(&data, &g).unwrap();
        let f = fits[0].as_ref().unwrap();
        assert!((f.radial.omega - 4.0).abs() < 1e-14);
        assert_eq!(f.radial.m, M_MAX);
        assert!(diag.m_clamped);

        let s = vec![
            PolarSample::new(1.0, vec![1.0, 0.0], Origin::Light, 0),
            PolarSample::new(3f64.sqrt(), vec![1.0, 0.0], Origin::Light, 0),
        ];
        let w = [1.0; 2];
        let data = WeightedSampleSet::new(&s, &w).unwrap();
        let g = Responsibilities::from_rows(&vec![vec![1.0]; 2]).unwrap();
        let (fits, diag) = m_step_params(&data, &g).unwrap();
        let f = fits[0].as_ref().unwrap();
        assert!((f.radial.omega - 2.0).abs() < 1e-14);
        assert!((f.radial.m - 4.0).abs() < 1e-12);
        assert_eq!(f.angular.mu(), &[1.0, 0.0]);
        assert_eq!(f.angular.kappa(), KAPPA_MAX);
        assert!(diag.kappa_clamped);
    }

    #[test]
    fn m_step_empty_component() {
        let s = two_samples();
        let w = [1.0, 0.0];
        let data = WeightedSampleSet::new(&s, &w).unwrap();
        let g = Responsibilities::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let (fits, diag) = m_step_params(&data, &g).unwrap();
        assert!(fits[0].is_some() && fits[1].is_none());
        assert!(diag.empty_component);
    }

    #[test]
    fn weighted_loglik_examples() {
        let s = two_samples();
        let v = VmfnmParams::new(vec![
            comp(0.25, 1.0, 1.0, vec![1.0, 0.0], 0.0),
            comp(0.75, 2.0, 4.0, vec![0.0, 1.0], 0.0),
        ])
        .unwrap();
        let w = [2.0, 0.5];
        let data = WeightedSampleSet::new(&s, &w).unwrap();
        // uniform angular law on the circle: 1/(2π)
        let ang = -(2.0 * std::f64::consts::PI).ln();
        let q = |r: f64| {
            let n1 = 2.0 * r * (-r * r).exp();
            let n2 = 2.0 * 4.0 / 16.0 * r.powi(3) * (-r * r / 2.0).exp();
            (0.25 * n1 + 0.75 * n2).ln() + ang
        };
        let want = 2.0 * q(1.0) + 0.5 * q(2.0);
        assert!((weighted_loglik(&data, &v) - want).abs() < 1e-12);
        let w7 = [14.0, 3.5];
        let data7 = WeightedSampleSet::new(&s, &w7).unwrap();
        assert!((weighted_loglik(&data7, &v) - 7.0 * want).abs() < 1e-11);
    }

    #[test]
    fn fit_degenerate_single_weight() {
        let mut rng = RngStream::new(4);
        let v0 = VmfnmParams::prior_like(2, 5, &mut rng).unwrap();
        let phi = crate::mixtures::SafeMixtureParams::new(v0.clone(), 1.0).unwrap();
        let samples = crate::mixtures::safe_sample(&mut rng, &phi, 200);
        let mut w = vec![0.0; 200];
        w[17] = 1.0;
        let data = WeightedSampleSet::new(&samples, &w).unwrap();
        let out = fit(&data, &v0, &EmOptions::default()).unwrap();
        assert_eq!(out.k(), 1);
        let c = &out.params.components()[0];
        assert!((c.radial.omega - samples[17].r.powi(2)).abs() < 1e-9);
        assert!(dot(c.angular.mu(), &samples[17].a) > 1.0 - 1e-12);
        assert!(out.diagnostics.m_clamped && out.diagnostics.kappa_clamped);
    }

    #[test]
    fn fit_rejects_zero_iterations() {
        let s = two_samples();
        let w = [1.0, 1.0];
        let data = WeightedSampleSet::new(&s, &w).unwrap();
        let v = VmfnmParams::new(vec![comp(1.0, 1.0, 1.0, vec![1.0, 0.0], 0.0)]).unwrap();
        let opts = EmOptions {
            max_iter: 0,
            ..EmOptions::default()
        };
        assert!(fit(&data, &v, &opts).is_err());
    }

    #[test]
    fn weighted_set_validation() {
        let s = two_samples();
        assert!(WeightedSampleSet::new(&s, &[1.0]).is_err());
        assert!(WeightedSampleSet::new(&s, &[0.0, 0.0]).is_err());
        assert!(WeightedSampleSet::new(&s, &[-1.0, 2.0]).is_err());
        assert!(WeightedSampleSet::new(&s, &[f64::NAN, 2.0]).is_err());
    }
}
