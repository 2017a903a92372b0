//! vMFNM mixtures, the inverse-Nakagami heavy companion and the safe
//! two-family mixture used as the sampling proposal.
//!
//! Every density here is expressed on the polar representation u = r·a
//! (radial part w.r.t. dr, angular part w.r.t. the sphere surface measure),
//! the same measure used by [`prior_ln_pdf`], so importance ratios between
//! them carry no Jacobian.

use serde::Serialize;

use crate::distributions::{
    inv_nakagami_sample, nakagami_sample, prior_polar_ln_pdf, uniform_direction, vmf_sample,
    InverseNakagamiParams, NakagamiParams, VmfParams,
};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::vector::{log_add_exp, log_sum_exp, norm};

/// Which family of the safe mixture produced a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Light,
    Heavy,
}

/// A point of R^d stored as radius and unit direction, with its cached
/// limit-state value.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarSample {
    pub r: f64,
    pub a: Vec<f64>,
    /// NaN until the limit-state function has been evaluated.
    pub g: f64,
    pub origin: Origin,
    pub component: usize,
}

impl PolarSample {
    pub fn new(r: f64, a: Vec<f64>, origin: Origin, component: usize) -> Self {
        Self {
            r,
            a,
            g: f64::NAN,
            origin,
            component,
        }
    }

    /// Polar form of a Cartesian point. Returns `None` at the origin.
    pub fn from_cartesian(u: &[f64]) -> Option<Self> {
        let r = norm(u);
        if !(r > 0.0 && r.is_finite()) {
            return None;
        }
        let a = u.iter().map(|x| x / r).collect();
        Some(Self::new(r, a, Origin::Light, 0))
    }

    pub fn to_cartesian(&self) -> Vec<f64> {
        self.a.iter().map(|x| x * self.r).collect()
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn is_failure(&self) -> bool {
        self.g <= 0.0
    }
}

/// Log-density of the standard normal prior at a polar sample.
#[inline]
pub fn prior_ln_pdf(s: &PolarSample) -> f64 {
    prior_polar_ln_pdf(s.r, s.dim())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VmfnmComponent {
    pub weight: f64,
    pub radial: NakagamiParams,
    pub angular: VmfParams,
}

/// Light-tailed von Mises–Fisher–Nakagami mixture.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VmfnmParams {
    components: Vec<VmfnmComponent>,
    dim: usize,
}

impl VmfnmParams {
    pub fn new(components: Vec<VmfnmComponent>) -> Result<Self> {
        let Some(first) = components.first() else {
            return Err(Error::InvalidParameter("mixture needs at least one component".into()));
        };
        let dim = first.angular.dim();
        let mut total = 0.0;
        for (k, c) in components.iter().enumerate() {
            if !(c.weight > 0.0 && c.weight.is_finite()) {
                return Err(Error::InvalidParameter(format!("weight of component {k} must be > 0, got {}", c.weight)));
            }
            if c.angular.dim() != dim {
                return Err(Error::InvalidParameter(format!("component {k} has dimension {}, expected {dim}", c.angular.dim())));
            }
            NakagamiParams::new(c.radial.m, c.radial.omega)?;
            total += c.weight;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("mixture weights sum to {total}, expected 1")));
        }
        Ok(Self { components, dim })
    }

    /// `k` identical prior-like components: chi(d) radial law and uniform
    /// angular law, each carrying a random (inactive) mean direction.
    pub fn prior_like(d: usize, k: usize, rng: &mut RngStream) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidParameter(format!("dimension must be >= 2, got {d}")));
        }
        if k == 0 {
            return Err(Error::InvalidParameter("k must be >= 1".into()));
        }
        let weight = 1.0 / k as f64;
        let components = (0..k)
            .map(|_| {
                Ok(VmfnmComponent {
                    weight,
                    radial: NakagamiParams::chi(d),
                    angular: VmfParams::uniform(uniform_direction(rng, d))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        // Equal weights may not sum to exactly 1 in floating point.
        Ok(Self { components, dim: d })
    }

    pub fn components(&self) -> &[VmfnmComponent] {
        &self.components
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weights(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.weight).collect()
    }

    /// ln π_k + ln q_k(s) for every component.
    pub fn component_ln_joint(&self, s: &PolarSample, out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.components.iter().map(|c| c.weight.ln() + c.radial.ln_pdf(s.r) + c.angular.ln_pdf(&s.a)));
    }

    pub(crate) fn from_parts_unchecked(components: Vec<VmfnmComponent>, dim: usize) -> Self {
        Self { components, dim }
    }
}

pub fn vmfnm_logpdf(s: &PolarSample, v: &VmfnmParams) -> f64 {
    let mut buf = Vec::with_capacity(v.k());
    v.component_ln_joint(s, &mut buf);
    log_sum_exp(&buf)
}

/// Radial parameters of the heavy companion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeavyParams {
    /// Shared inverse-Nakagami shape ⌈√d⌉.
    pub shape: f64,
    /// Per-component inverse-Nakagami spreads.
    pub spreads: Vec<f64>,
}

/// Inverse-Nakagami shape ⌈√d⌉ used by the heavy companion.
pub fn heavy_shape(d: usize) -> f64 {
    let s = (d as f64).sqrt().ceil();
    // guard against sqrt rounding on perfect squares
    if ((s - 1.0) * (s - 1.0)) as usize >= d {
        s - 1.0
    } else {
        s
    }
}

/// Spread placing the inverse-Nakagami mode on the Nakagami mean:
/// Ω^IN = 2m^IN/(2m^IN + 1) · (Γ(m)/Γ(m + ½))² · m/Ω.
pub fn heavy_spread(shape: f64, radial: &NakagamiParams) -> f64 {
    let m = radial.m;
    let log_ratio = libm::lgamma_r(m).0 - libm::lgamma_r(m + 0.5).0;
    2.0 * shape / (2.0 * shape + 1.0) * (2.0 * log_ratio).exp() * m / radial.omega
}

pub fn heavy_params_from_light(v: &VmfnmParams) -> HeavyParams {
    let shape = heavy_shape(v.dim());
    let spreads = v.components.iter().map(|c| heavy_spread(shape, &c.radial)).collect();
    HeavyParams { shape, spreads }
}

/// φ = {light vMFNM, heavy companion, λ}.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SafeMixtureParams {
    pub light: VmfnmParams,
    pub heavy: HeavyParams,
    pub lambda: f64,
}

impl SafeMixtureParams {
    /// Derives the heavy companion from `light` by mode/mean matching.
    pub fn new(light: VmfnmParams, lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidParameter(format!("lambda must lie in [0, 1], got {lambda}")));
        }
        let heavy = heavy_params_from_light(&light);
        Ok(Self { light, heavy, lambda })
    }

    pub fn k(&self) -> usize {
        self.light.k()
    }

    pub fn heavy_radial(&self, k: usize) -> InverseNakagamiParams {
        InverseNakagamiParams {
            m: self.heavy.shape,
            omega: self.heavy.spreads[k],
        }
    }
}

/// ln q_safe(s) = ln Σ_k π_k [λ N_k(r) + (1 − λ) IN_k(r)] vMF_k(a).
pub fn safe_logpdf(s: &PolarSample, phi: &SafeMixtureParams) -> f64 {
    let ln_light = if phi.lambda > 0.0 { phi.lambda.ln() } else { f64::NEG_INFINITY };
    let ln_heavy = if phi.lambda < 1.0 { (-phi.lambda).ln_1p() } else { f64::NEG_INFINITY };
    let terms: Vec<f64> = phi
        .light
        .components
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let light = if ln_light.is_finite() {
                ln_light + c.radial.ln_pdf(s.r)
            } else {
                f64::NEG_INFINITY
            };
            let heavy = if ln_heavy.is_finite() {
                ln_heavy + phi.heavy_radial(k).ln_pdf(s.r)
            } else {
                f64::NEG_INFINITY
            };
            c.weight.ln() + log_add_exp(light, heavy) + c.angular.ln_pdf(&s.a)
        })
        .collect();
    log_sum_exp(&terms)
}

/// Draws `n` samples with the light/heavy split fixed at round(λn) light
/// draws followed by heavy draws. Components are chosen i.i.d. by weight.
pub fn safe_sample(rng: &mut RngStream, phi: &SafeMixtureParams, n: usize) -> Vec<PolarSample> {
    let n_light = light_count(phi.lambda, n);
    let cumulative: Vec<f64> = phi
        .light
        .components
        .iter()
        .scan(0.0, |acc, c| {
            *acc += c.weight;
            Some(*acc)
        })
        .collect();
    let total = *cumulative.last().expect("non-empty mixture");
    (0..n)
        .map(|i| {
            let u = rng.uniform() * total;
            let k = cumulative.partition_point(|&c| c <= u).min(cumulative.len() - 1);
            let comp = &phi.light.components[k];
            let (r, origin) = if i < n_light {
                (nakagami_sample(rng, &comp.radial), Origin::Light)
            } else {
                (inv_nakagami_sample(rng, &phi.heavy_radial(k)), Origin::Heavy)
            };
            let a = vmf_sample(rng, &comp.angular);
            PolarSample::new(r, a, origin, k)
        })
        .collect()
}

/// round(λ n), clamped to [0, n].
pub fn light_count(lambda: f64, n: usize) -> usize {
    ((lambda * n as f64).round() as usize).min(n)
}
