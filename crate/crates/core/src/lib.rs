//! Rare-event failure probability estimation by adaptive importance
//! sampling.
//!
//! The crate implements the improved cross-entropy (ICE) method with a
//! von Mises–Fisher–Nakagami mixture proposal and its safe variant, which
//! fits the mixture by cross-entropy penalized EM (pruning redundant
//! components) and samples from a blend of the fitted light-tailed mixture
//! and an inverse-Nakagami heavy-tailed companion.
//!
//! ```no_run
//! use safe_ice::{problems, ice::{RunConfig, Method, run}};
//!
//! let problem = problems::registry("two-mode", 3.5, 2).unwrap();
//! let config = RunConfig { method: Method::SafeIce, seed: 1, ..RunConfig::default() };
//! let result = run(&problem, &config).unwrap();
//! println!("P_F ≈ {:.4e} after {} iterations", result.pf_estimate, result.iterations);
//! ```

pub mod bench;
pub mod distributions;
pub mod em;
pub mod error;
pub mod ice;
pub mod mixtures;
pub mod oracle;
pub mod problems;
pub mod rng;
pub mod special;
pub mod vector;

#[cfg(feature = "cli")]
pub mod cli;

pub use error::{Error, Result};
pub use rng::RngStream;
