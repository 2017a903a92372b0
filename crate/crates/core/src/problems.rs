//! Benchmark limit-state functions in standard-normal space.
//!
//! Failure is `g(u) <= 0`. Every problem carries a threshold `z` that
//! shifts the failure probability.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};

pub const PROBLEM_NAMES: [&str; 4] = ["four-branch", "three-mode", "two-mode", "oscillator"];

/// Four-component series system (d = 2).
pub fn four_branch(u: &[f64], z: f64) -> f64 {
    let (u1, u2) = (u[0], u[1]);
    let diff2 = 0.1 * (u1 - u2) * (u1 - u2);
    let sum = (u1 + u2) * FRAC_1_SQRT_2;
    let c = 7.0 * FRAC_1_SQRT_2;
    let b1 = diff2 - sum + 3.0;
    let b2 = diff2 + sum + 3.0;
    let b3 = u1 - u2 + c;
    let b4 = u2 - u1 + c;
    b1.min(b2).min(b3).min(b4) + z
}

/// Two-dimensional problem with three failure regions.
pub fn three_mode(u: &[f64], z: f64) -> f64 {
    let (u1, u2) = (u[0], u[1]);
    let first = z - 1.0 - u2 + (-u1 * u1 / 10.0).exp() + (u1 / 5.0).powi(4);
    let second = 0.5 * z * z - u1 * u2;
    first.min(second)
}

/// Two opposite linear limit states; P(g ≤ 0) = 2Φ(−z) in any dimension.
pub fn two_mode(u: &[f64], z: f64) -> f64 {
    let s = u.iter().sum::<f64>() / (u.len() as f64).sqrt();
    (z - s).min(z + s)
}

/// Hysteretic single-degree-of-freedom oscillator with Bouc–Wen
/// hysteresis under a spectrally discretized white-noise ground motion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OscillatorConfig {
    /// Mass [kg].
    pub mass: f64,
    /// Linear stiffness [N/m].
    pub stiffness: f64,
    pub damping_ratio: f64,
    /// Yield displacement x_y [m].
    pub yield_displacement: f64,
    /// Share of the elastic restoring force.
    pub alpha: f64,
    pub bw_a: f64,
    pub bw_beta: f64,
    pub bw_gamma: f64,
    pub bw_n: f64,
    /// White-noise intensity S [m²/s³].
    pub noise_intensity: f64,
    /// Cut-off frequency [rad/s].
    pub cutoff: f64,
    pub dim: usize,
    pub t_end: f64,
    pub dt: f64,
}

impl Default for OscillatorConfig {
    fn default() -> Self {
        Self {
            mass: 6e4,
            stiffness: 5e6,
            damping_ratio: 0.05,
            yield_displacement: 0.04,
            alpha: 0.1,
            bw_a: 1.0,
            bw_beta: 0.5,
            bw_gamma: 0.5,
            bw_n: 3.0,
            noise_intensity: 0.005,
            cutoff: 15.0 * PI,
            dim: 10,
            t_end: 8.0,
            dt: 0.01,
        }
    }
}

impl OscillatorConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mass", self.mass),
            ("stiffness", self.stiffness),
            ("damping_ratio", self.damping_ratio),
            ("yield_displacement", self.yield_displacement),
            ("bw_a", self.bw_a),
            ("bw_n", self.bw_n),
            ("noise_intensity", self.noise_intensity),
            ("cutoff", self.cutoff),
            ("t_end", self.t_end),
            ("dt", self.dt),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("oscillator {name} must be positive, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidParameter(format!("oscillator alpha must lie in [0, 1], got {}", self.alpha)));
        }
        if self.dim < 2 || !self.dim.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!("oscillator dimension must be even and >= 2, got {}", self.dim)));
        }
        Ok(())
    }

    /// Δω = 2 ω_cut / d.
    pub fn frequency_step(&self) -> f64 {
        2.0 * self.cutoff / self.dim as f64
    }

    /// σ = √(2 S Δω).
    pub fn load_scale(&self) -> f64 {
        (2.0 * self.noise_intensity * self.frequency_step()).sqrt()
    }

    pub fn damping(&self) -> f64 {
        2.0 * self.mass * self.damping_ratio * (self.stiffness / self.mass).sqrt()
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

/// Precomputed cos/sin tables at every RK4 stage time (half steps).
#[derive(Debug)]
struct ForcingBasis {
    half_steps: usize,
    n_freq: usize,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl ForcingBasis {
    fn new(cfg: &OscillatorConfig) -> Self {
        let half_steps = 2 * cfg.steps() + 1;
        let n_freq = cfg.dim / 2;
        let dw = cfg.frequency_step();
        let mut cos = Vec::with_capacity(half_steps * n_freq);
        let mut sin = Vec::with_capacity(half_steps * n_freq);
        for j in 0..half_steps {
            let t = 0.5 * cfg.dt * j as f64;
            for i in 1..=n_freq {
                let (s, c) = (i as f64 * dw * t).sin_cos();
                cos.push(c);
                sin.push(s);
            }
        }
        Self {
            half_steps,
            n_freq,
            cos,
            sin,
        }
    }

    /// Σ_i [U_i cos ω_i t_j + U_{d/2+i} sin ω_i t_j] for every half step j.
    fn superpose(&self, u: &[f64]) -> Vec<f64> {
        let (uc, us) = u.split_at(self.n_freq);
        (0..self.half_steps)
            .map(|j| {
                let row = j * self.n_freq..(j + 1) * self.n_freq;
                let c: f64 = self.cos[row.clone()].iter().zip(uc).map(|(a, b)| a * b).sum();
                let s: f64 = self.sin[row].iter().zip(us).map(|(a, b)| a * b).sum();
                c + s
            })
            .collect()
    }
}

/// One classical RK4 step for `y' = f(y, stage)`, where the forcing at the
/// start, midpoint and end of the step is passed in explicitly.
#[inline]
pub fn rk4_step<const N: usize>(
    y: [f64; N],
    dt: f64,
    forcing: [f64; 3],
    rhs: impl Fn(&[f64; N], f64) -> [f64; N],
) -> [f64; N] {
    let add = |a: &[f64; N], b: &[f64; N], h: f64| {
        let mut out = *a;
        for (o, v) in out.iter_mut().zip(b) {
            *o += h * v;
        }
        out
    };
    let k1 = rhs(&y, forcing[0]);
    let k2 = rhs(&add(&y, &k1, 0.5 * dt), forcing[1]);
    let k3 = rhs(&add(&y, &k2, 0.5 * dt), forcing[1]);
    let k4 = rhs(&add(&y, &k3, dt), forcing[2]);
    let mut out = y;
    for i in 0..N {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Oscillator limit state with its cached forcing basis.
#[derive(Debug, Clone)]
pub struct Oscillator {
    config: OscillatorConfig,
    basis: Arc<ForcingBasis>,
}

impl Oscillator {
    pub fn new(config: OscillatorConfig) -> Result<Self> {
        config.validate()?;
        let basis = Arc::new(ForcingBasis::new(&config));
        Ok(Self { config, basis })
    }

    pub fn config(&self) -> &OscillatorConfig {
        &self.config
    }

    /// Displacement history x(t_j) at the full steps j = 0..=steps.
    pub fn displacement_history(&self, u: &[f64]) -> Result<Vec<f64>> {
        let cfg = &self.config;
        if u.len() != cfg.dim {
            return Err(Error::Dimension {
                problem: "oscillator".into(),
                expected: cfg.dim.to_string(),
                got: u.len(),
            });
        }
        let load = self.basis.superpose(u);
        let force_scale = -cfg.mass * cfg.load_scale();
        let c = cfg.damping();
        let (m, k, a, xy) = (cfg.mass, cfg.stiffness, cfg.alpha, cfg.yield_displacement);
        let n = cfg.bw_n;
        let rhs = |y: &[f64; 3], f: f64| {
            let (x, v, zb) = (y[0], y[1], y[2]);
            let restoring = k * (a * x + (1.0 - a) * xy * zb);
            let az = zb.abs();
            let dz = (cfg.bw_a * v - cfg.bw_beta * v.abs() * az.powf(n - 1.0) * zb - cfg.bw_gamma * v * az.powf(n)) / xy;
            [v, (f - c * v - restoring) / m, dz]
        };
        let mut y = [0.0; 3];
        let steps = cfg.steps();
        let mut hist = Vec::with_capacity(steps + 1);
        hist.push(0.0);
        for s in 0..steps {
            let f = [
                force_scale * load[2 * s],
                force_scale * load[2 * s + 1],
                force_scale * load[2 * s + 2],
            ];
            y = rk4_step(y, cfg.dt, f, rhs);
            if !y.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite(format!("oscillator state diverged at step {}", s + 1)));
            }
            hist.push(y[0]);
        }
        Ok(hist)
    }

    /// g = z − x(t_end).
    pub fn lsf(&self, u: &[f64], z: f64) -> Result<f64> {
        let hist = self.displacement_history(u)?;
        Ok(z - hist[hist.len() - 1])
    }
}

pub fn oscillator_lsf(u: &[f64], z: f64, cfg: &OscillatorConfig) -> Result<f64> {
    Oscillator::new(cfg.clone())?.lsf(u, z)
}

#[derive(Debug, Clone)]
pub enum ProblemKind {
    FourBranch,
    ThreeMode,
    TwoMode,
    Oscillator(Oscillator),
}

/// A configured limit-state function.
#[derive(Debug, Clone)]
pub struct Problem {
    name: String,
    dim: usize,
    z: f64,
    kind: ProblemKind,
}

impl Problem {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn kind(&self) -> &ProblemKind {
        &self.kind
    }

    pub fn evaluate(&self, u: &[f64]) -> Result<f64> {
        if u.len() != self.dim {
            return Err(Error::Dimension {
                problem: self.name.clone(),
                expected: self.dim.to_string(),
                got: u.len(),
            });
        }
        match &self.kind {
            ProblemKind::FourBranch => Ok(four_branch(u, self.z)),
            ProblemKind::ThreeMode => Ok(three_mode(u, self.z)),
            ProblemKind::TwoMode => Ok(two_mode(u, self.z)),
            ProblemKind::Oscillator(osc) => osc.lsf(u, self.z),
        }
    }

    /// Closed-form failure probability, where one exists.
    pub fn analytic_pf(&self) -> Option<f64> {
        match self.kind {
            ProblemKind::TwoMode => Some(2.0 * crate::special::normal_cdf(-self.z)),
            _ => None,
        }
    }

    /// Build a problem from an arbitrary limit-state closure (test and
    /// experiment helper).
    pub fn custom(name: &str, dim: usize, z: f64, kind: ProblemKind) -> Self {
        Self {
            name: name.to_string(),
            dim,
            z,
            kind,
        }
    }
}

/// Problem by name. four-branch and three-mode need d = 2, the oscillator
/// d = 10, two-mode any d ≥ 2.
pub fn registry(name: &str, z: f64, d: usize) -> Result<Problem> {
    if !z.is_finite() {
        return Err(Error::InvalidParameter(format!("threshold z must be finite, got {z}")));
    }
    let dim_error = |expected: &str| Error::Dimension {
        problem: name.to_string(),
        expected: expected.to_string(),
        got: d,
    };
    let kind = match name {
        "four-branch" | "three-mode" if d != 2 => return Err(dim_error("2")),
        "four-branch" => ProblemKind::FourBranch,
        "three-mode" => ProblemKind::ThreeMode,
        "two-mode" if d < 2 => return Err(dim_error(">= 2")),
        "two-mode" => ProblemKind::TwoMode,
        "oscillator" => {
            let cfg = OscillatorConfig::default();
            if d != cfg.dim {
                return Err(dim_error("10"));
            }
            ProblemKind::Oscillator(Oscillator::new(cfg)?)
        }
        other => return Err(Error::UnknownProblem(other.to_string())),
    };
    Ok(Problem {
        name: name.to_string(),
        dim: d,
        z,
        kind,
    })
}

/// Registry entry description used by `list-problems`.
#[derive(Debug, Clone, Serialize)]
pub struct ProblemInfo {
    pub name: &'static str,
    pub dims: &'static str,
    pub description: &'static str,
}

pub fn catalog() -> Vec<ProblemInfo> {
    vec![
        ProblemInfo {
            name: "four-branch",
            dims: "2",
            description: "four-component series system, g = min of four branches + z",
        },
        ProblemInfo {
            name: "three-mode",
            dims: "2",
            description: "three failure regions, g = min{z - 1 - u2 + exp(-u1^2/10) + (u1/5)^4, z^2/2 - u1 u2}",
        },
        ProblemInfo {
            name: "two-mode",
            dims: ">= 2",
            description: "two opposite linear limit states, P_F = 2 Phi(-z)",
        },
        ProblemInfo {
            name: "oscillator",
            dims: "10",
            description: "Bouc-Wen hysteretic oscillator, g = z - x(8 s)",
        },
    ]
}
