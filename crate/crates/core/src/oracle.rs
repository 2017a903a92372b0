//! Crude Monte Carlo reference estimates.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::problems::Problem;
use crate::rng::RngStream;

pub const MIN_SAMPLES: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub pf: f64,
    pub n_total: u64,
    pub n_fail: u64,
    /// √((1 − P̂)/(n P̂)); infinite when no failure was observed.
    pub cv: f64,
}

fn count_batch(problem: &Problem, seed: u64, batch: u64, size: u64) -> Result<u64> {
    let mut rng = RngStream::substream(seed, batch);
    let mut fails = 0;
    for _ in 0..size {
        let u = rng.normal_vec(problem.dim());
        if problem.evaluate(&u)? <= 0.0 {
            fails += 1;
        }
    }
    Ok(fails)
}

/// P̂ = (1/n) Σ 𝕀{g(u_i) ≤ 0} with u_i ~ N(0, I). Batch b draws from
/// substream b of `seed`, so the result does not depend on thread count.
pub fn mc_estimate(problem: &Problem, n_total: u64, batch_size: u64, seed: u64) -> Result<McEstimate> {
    if n_total < MIN_SAMPLES {
        return Err(Error::InvalidParameter(format!("n_total must be >= {MIN_SAMPLES}, got {n_total}")));
    }
    if batch_size == 0 || batch_size > n_total {
        return Err(Error::InvalidParameter(format!(
            "batch_size must lie in [1, n_total], got {batch_size}"
        )));
    }
    let n_batches = n_total.div_ceil(batch_size);
    let size_of = |b: u64| batch_size.min(n_total - b * batch_size);
    #[cfg(feature = "parallel")]
    let n_fail: u64 = {
        use rayon::prelude::*;
        (0..n_batches)
            .into_par_iter()
            .map(|b| count_batch(problem, seed, b, size_of(b)))
            .collect::<Result<Vec<u64>>>()?
            .into_iter()
            .sum()
    };
    #[cfg(not(feature = "parallel"))]
    let n_fail: u64 = (0..n_batches)
        .map(|b| count_batch(problem, seed, b, size_of(b)))
        .collect::<Result<Vec<u64>>>()?
        .into_iter()
        .sum();

    let pf = n_fail as f64 / n_total as f64;
    let cv = if n_fail == 0 {
        f64::INFINITY
    } else {
        ((1.0 - pf) / (n_total as f64 * pf)).sqrt()
    };
    Ok(McEstimate {
        pf,
        n_total,
        n_fail,
        cv,
    })
}
