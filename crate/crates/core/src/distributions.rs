//! Radial and angular distribution families used by the proposals and
//! the standard-normal prior in polar form.
//!
//! Radial densities are with respect to `dr`, angular densities with
//! respect to the surface measure of the unit sphere. All densities are
//! exposed in log space only.

use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::special::{log_bessel_i_scaled, log_sphere_area, LN_2PI};
use crate::vector::{dot, norm, normalize_in_place};

/// Tolerance on ‖a‖ − 1 accepted by the angular densities.
pub const UNIT_NORM_TOL: f64 = 1e-8;

/// Nakagami(m, Ω) radial law. `Ω = E[r²]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NakagamiParams {
    pub m: f64,
    pub omega: f64,
}

/// Law of 1/X for X ~ Nakagami(m, Ω).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InverseNakagamiParams {
    pub m: f64,
    pub omega: f64,
}

fn check_shape_spread(kind: &str, m: f64, omega: f64) -> Result<()> {
    if !(m > 0.5 && m.is_finite()) {
        return Err(Error::InvalidParameter(format!("{kind} shape m must be finite and > 0.5, got {m}")));
    }
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::InvalidParameter(format!("{kind} spread omega must be finite and > 0, got {omega}")));
    }
    Ok(())
}

/// ln[2 m^m / (Γ(m) Ω^m)], shared by the Nakagami and inverse-Nakagami laws.
fn log_norm_const(m: f64, omega: f64) -> f64 {
    std::f64::consts::LN_2 + m * m.ln() - libm::lgamma_r(m).0 - m * omega.ln()
}

impl NakagamiParams {
    pub fn new(m: f64, omega: f64) -> Result<Self> {
        check_shape_spread("Nakagami", m, omega)?;
        Ok(Self { m, omega })
    }

    /// The chi(d) law of ‖u‖ for u standard normal in R^d.
    pub fn chi(d: usize) -> Self {
        Self {
            m: 0.5 * d as f64,
            omega: d as f64,
        }
    }

    /// Log-density for `r > 0` (no domain check).
    #[inline]
    pub fn ln_pdf(&self, r: f64) -> f64 {
        log_norm_const(self.m, self.omega) + (2.0 * self.m - 1.0) * r.ln() - self.m * r * r / self.omega
    }

    /// E[r] = Γ(m + ½)/Γ(m) · √(Ω/m).
    pub fn mean(&self) -> f64 {
        let lg = libm::lgamma_r(self.m + 0.5).0 - libm::lgamma_r(self.m).0;
        lg.exp() * (self.omega / self.m).sqrt()
    }

    pub fn mode(&self) -> f64 {
        ((2.0 * self.m - 1.0) / (2.0 * self.m) * self.omega).sqrt()
    }
}

impl InverseNakagamiParams {
    pub fn new(m: f64, omega: f64) -> Result<Self> {
        check_shape_spread("inverse Nakagami", m, omega)?;
        Ok(Self { m, omega })
    }

    #[inline]
    pub fn ln_pdf(&self, r: f64) -> f64 {
        log_norm_const(self.m, self.omega) - (2.0 * self.m + 1.0) * r.ln() - self.m / (self.omega * r * r)
    }

    /// argmax_r of the density: √(2m / ((2m + 1) Ω)).
    pub fn mode(&self) -> f64 {
        (2.0 * self.m / ((2.0 * self.m + 1.0) * self.omega)).sqrt()
    }
}

pub fn nakagami_logpdf(r: f64, p: &NakagamiParams) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::domain("nakagami_logpdf", format!("radius must be > 0, got {r}")));
    }
    Ok(p.ln_pdf(r))
}

/// √G with G ~ Gamma(shape m, scale Ω/m).
pub fn nakagami_sample(rng: &mut RngStream, p: &NakagamiParams) -> f64 {
    let gamma = Gamma::new(p.m, p.omega / p.m).expect("validated Nakagami parameters");
    loop {
        let g: f64 = gamma.sample(rng.inner());
        // Gamma draws of exactly zero are possible for tiny shapes in f64.
        if g > 0.0 {
            return g.sqrt();
        }
    }
}

pub fn inv_nakagami_logpdf(r: f64, p: &InverseNakagamiParams) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::domain("inv_nakagami_logpdf", format!("radius must be > 0, got {r}")));
    }
    Ok(p.ln_pdf(r))
}

pub fn inv_nakagami_sample(rng: &mut RngStream, p: &InverseNakagamiParams) -> f64 {
    let x = nakagami_sample(rng, &NakagamiParams { m: p.m, omega: p.omega });
    1.0 / x
}

/// von Mises–Fisher law on S^{d−1}. The log normalizer is cached.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VmfParams {
    mu: Vec<f64>,
    kappa: f64,
    #[serde(skip)]
    log_norm: f64,
}

impl VmfParams {
    pub fn new(mu: Vec<f64>, kappa: f64) -> Result<Self> {
        let d = mu.len();
        if d < 2 {
            return Err(Error::InvalidParameter(format!("vMF dimension must be >= 2, got {d}")));
        }
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidParameter(format!("vMF kappa must be finite and >= 0, got {kappa}")));
        }
        let n = norm(&mu);
        if !n.is_finite() || (n - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("vMF mean direction must have unit norm, got {n}")));
        }
        let log_norm = vmf_log_normalizer(d, kappa)?;
        Ok(Self { mu, kappa, log_norm })
    }

    /// Uniform law on the sphere with a placeholder mean direction.
    pub fn uniform(mu: Vec<f64>) -> Result<Self> {
        Self::new(mu, 0.0)
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    /// ln C_d(κ).
    pub fn log_normalizer(&self) -> f64 {
        self.log_norm
    }

    /// Log-density for a unit vector (no norm check).
    #[inline]
    pub fn ln_pdf(&self, a: &[f64]) -> f64 {
        if self.kappa == 0.0 {
            self.log_norm
        } else {
            self.log_norm + self.kappa * dot(&self.mu, a)
        }
    }
}

/// ln C_d(κ) = (d/2 − 1) ln κ − (d/2) ln 2π − ln I_{d/2−1}(κ); κ = 0 is the
/// uniform sphere.
pub fn vmf_log_normalizer(d: usize, kappa: f64) -> Result<f64> {
    if kappa == 0.0 {
        return Ok(-log_sphere_area(d));
    }
    let nu = 0.5 * d as f64 - 1.0;
    let lbi = log_bessel_i_scaled(nu, kappa)?;
    Ok(nu * kappa.ln() - 0.5 * d as f64 * LN_2PI - (lbi + kappa))
}

pub fn vmf_logpdf(a: &[f64], p: &VmfParams) -> Result<f64> {
    if a.len() != p.dim() {
        return Err(Error::domain("vmf_logpdf", format!("dimension mismatch: {} vs {}", a.len(), p.dim())));
    }
    let n = norm(a);
    if !((n - 1.0).abs() <= UNIT_NORM_TOL) {
        return Err(Error::domain("vmf_logpdf", format!("direction must be a unit vector, norm {n}")));
    }
    Ok(p.ln_pdf(a))
}

/// Uniform direction on S^{d−1}.
pub fn uniform_direction(rng: &mut RngStream, d: usize) -> Vec<f64> {
    loop {
        let mut v = rng.normal_vec(d);
        if normalize_in_place(&mut v) {
            return v;
        }
    }
}

/// Wood's rejection sampler.
pub fn vmf_sample(rng: &mut RngStream, p: &VmfParams) -> Vec<f64> {
    let d = p.dim();
    let kappa = p.kappa;
    if kappa == 0.0 {
        return uniform_direction(rng, d);
    }
    let dm1 = (d - 1) as f64;
    // b written in the cancellation-free form.
    let b = dm1 / (2.0 * kappa + (4.0 * kappa * kappa + dm1 * dm1).sqrt());
    let x0 = (1.0 - b) / (1.0 + b);
    let c = kappa * x0 + dm1 * (1.0 - x0 * x0).ln();
    let beta = Beta::new(0.5 * dm1, 0.5 * dm1).expect("valid beta parameters");
    let w = loop {
        let z: f64 = beta.sample(rng.inner());
        let w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
        let u: f64 = rng.inner().random::<f64>();
        if kappa * w + dm1 * (1.0 - x0 * w).ln() - c >= u.ln() {
            break w;
        }
    };
    // Tangent direction orthogonal to mu.
    let mu = &p.mu;
    let tangent = loop {
        let mut v = rng.normal_vec(d);
        let proj = dot(&v, mu);
        for (vi, mi) in v.iter_mut().zip(mu) {
            *vi -= proj * mi;
        }
        if normalize_in_place(&mut v) {
            break v;
        }
    };
    let s = (1.0 - w * w).max(0.0).sqrt();
    let mut a: Vec<f64> = mu.iter().zip(&tangent).map(|(m, t)| w * m + s * t).collect();
    normalize_in_place(&mut a);
    a
}

/// Log-density of ‖u‖ under the standard normal prior on R^d (chi(d)).
pub fn prior_radial_logpdf(r: f64, d: usize) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::domain("prior_radial_logpdf", format!("radius must be > 0, got {r}")));
    }
    if d < 2 {
        return Err(Error::domain("prior_radial_logpdf", format!("dimension must be >= 2, got {d}")));
    }
    Ok(NakagamiParams::chi(d).ln_pdf(r))
}

/// Log-density of the standard normal prior in polar coordinates
/// (radial chi(d) times the uniform sphere).
#[inline]
pub fn prior_polar_ln_pdf(r: f64, d: usize) -> f64 {
    NakagamiParams::chi(d).ln_pdf(r) - log_sphere_area(d)
}
