//! Repeated seeded runs and the evaluation statistics ε, δ, mean T, mean K.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ice::{run, RunConfig, RunResult};
use crate::problems::Problem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Jsonl,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" => Ok(Format::Jsonl),
            "csv" => Ok(Format::Csv),
            other => Err(Error::InvalidParameter(format!("unknown format '{other}' (expected jsonl or csv)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub pf: f64,
    pub iterations: usize,
    pub final_k: usize,
    pub lsf_evals: usize,
    pub converged: bool,
}

impl RunRecord {
    pub fn from_result(run: usize, r: &RunResult) -> Self {
        Self {
            run,
            seed: r.seed,
            pf: r.pf_estimate,
            iterations: r.iterations,
            final_k: r.final_k,
            lsf_evals: r.lsf_evals,
            converged: r.converged,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub summary: bool,
    pub p_ref: f64,
    pub rel_error: f64,
    pub cv: f64,
    pub mean_t: f64,
    pub mean_k: f64,
    pub n_runs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkStats {
    pub p_ref: f64,
    /// ε = |P_ref − mean P̂| / P_ref.
    pub rel_error: f64,
    /// δ = std(P̂)/mean(P̂), divisor n − 1.
    pub cv: f64,
    pub mean_t: f64,
    pub mean_k: f64,
    pub mean_pf: f64,
    pub std_pf: f64,
    pub runs: Vec<RunRecord>,
}

impl BenchmarkStats {
    pub fn n_runs(&self) -> usize {
        self.runs.len()
    }

    /// Aggregates run records (any order; sorted by run index first).
    pub fn from_runs(mut runs: Vec<RunRecord>, p_ref: f64) -> Result<Self> {
        if runs.len() < 2 {
            return Err(Error::InvalidParameter(format!("need at least 2 runs, got {}", runs.len())));
        }
        if !(p_ref > 0.0 && p_ref.is_finite()) {
            return Err(Error::InvalidParameter(format!("p_ref must be positive, got {p_ref}")));
        }
        runs.sort_by_key(|r| r.run);
        let n = runs.len() as f64;
        let mean_pf = runs.iter().map(|r| r.pf).sum::<f64>() / n;
        let var = runs.iter().map(|r| (r.pf - mean_pf).powi(2)).sum::<f64>() / (n - 1.0);
        let std_pf = var.sqrt();
        Ok(Self {
            p_ref,
            rel_error: (p_ref - mean_pf).abs() / p_ref,
            cv: if mean_pf > 0.0 { std_pf / mean_pf } else { f64::INFINITY },
            mean_t: runs.iter().map(|r| r.iterations as f64).sum::<f64>() / n,
            mean_k: runs.iter().map(|r| r.final_k as f64).sum::<f64>() / n,
            mean_pf,
            std_pf,
            runs,
        })
    }

    pub fn summary(&self) -> Summary {
        Summary {
            summary: true,
            p_ref: self.p_ref,
            rel_error: self.rel_error,
            cv: self.cv,
            mean_t: self.mean_t,
            mean_k: self.mean_k,
            n_runs: self.n_runs(),
        }
    }
}

/// Runs `n_runs` repetitions with seeds `config.seed + i`, in parallel when
/// the `parallel` feature is on (inside the caller's rayon pool).
pub fn run_repetitions_full(problem: &Problem, config: &RunConfig, n_runs: usize) -> Result<Vec<RunResult>> {
    if n_runs < 2 {
        return Err(Error::InvalidParameter(format!("n_runs must be >= 2, got {n_runs}")));
    }
    config.validate()?;
    let one = |i: usize| {
        let cfg = RunConfig {
            seed: config.seed.wrapping_add(i as u64),
            ..config.clone()
        };
        run(problem, &cfg)
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n_runs).into_par_iter().map(one).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n_runs).map(one).collect()
    }
}

pub fn run_repetitions(problem: &Problem, config: &RunConfig, n_runs: usize, p_ref: f64) -> Result<BenchmarkStats> {
    if !(p_ref > 0.0 && p_ref.is_finite()) {
        return Err(Error::InvalidParameter(format!("p_ref must be positive, got {p_ref}")));
    }
    let results = run_repetitions_full(problem, config, n_runs)?;
    let runs = results.iter().enumerate().map(|(i, r)| RunRecord::from_result(i, r)).collect();
    BenchmarkStats::from_runs(runs, p_ref)
}

pub const CSV_COLUMNS: [&str; 14] = [
    "summary",
    "run",
    "seed",
    "pf",
    "iterations",
    "final_k",
    "lsf_evals",
    "converged",
    "p_ref",
    "rel_error",
    "cv",
    "mean_t",
    "mean_k",
    "n_runs",
];

/// One CSV row; run rows leave the summary columns empty and vice versa.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub summary: bool,
    pub run: Option<usize>,
    pub seed: Option<u64>,
    pub pf: Option<f64>,
    pub iterations: Option<usize>,
    pub final_k: Option<usize>,
    pub lsf_evals: Option<usize>,
    pub converged: Option<bool>,
    pub p_ref: Option<f64>,
    pub rel_error: Option<f64>,
    pub cv: Option<f64>,
    pub mean_t: Option<f64>,
    pub mean_k: Option<f64>,
    pub n_runs: Option<usize>,
}

impl From<&RunRecord> for CsvRow {
    fn from(r: &RunRecord) -> Self {
        Self {
            summary: false,
            run: Some(r.run),
            seed: Some(r.seed),
            pf: Some(r.pf),
            iterations: Some(r.iterations),
            final_k: Some(r.final_k),
            lsf_evals: Some(r.lsf_evals),
            converged: Some(r.converged),
            ..Self::default()
        }
    }
}

impl From<&Summary> for CsvRow {
    fn from(s: &Summary) -> Self {
        Self {
            summary: true,
            p_ref: Some(s.p_ref),
            rel_error: Some(s.rel_error),
            cv: Some(s.cv),
            mean_t: Some(s.mean_t),
            mean_k: Some(s.mean_k),
            n_runs: Some(s.n_runs),
            ..Self::default()
        }
    }
}

/// Writes one record per run followed by the summary record. Floats are
/// written in shortest round-trip form, so parsing restores them exactly.
pub fn persist(stats: &BenchmarkStats, path: &Path, format: Format) -> Result<()> {
    if stats.runs.is_empty() {
        return Err(Error::EmptyInput("benchmark stats hold no runs".into()));
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    match format {
        Format::Jsonl => {
            for r in &stats.runs {
                serde_json::to_writer(&mut out, r)?;
                out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
            }
            serde_json::to_writer(&mut out, &stats.summary())?;
            out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            let csv_err = |e: csv::Error| Error::io(path, std::io::Error::other(e));
            for r in &stats.runs {
                w.serialize(CsvRow::from(r)).map_err(csv_err)?;
            }
            w.serialize(CsvRow::from(&stats.summary())).map_err(csv_err)?;
            w.flush().map_err(|e| Error::io(path, e))?;
        }
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Parses a file written by [`persist`] back into run records and summary.
pub fn load(path: &Path, format: Format) -> Result<(Vec<RunRecord>, Summary)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut runs = Vec::new();
    let mut summary = None;
    match format {
        Format::Jsonl => {
            for line in text.lines().filter(|l| !l.trim().is_empty()) {
                let v: serde_json::Value = serde_json::from_str(line)?;
                if v.get("summary").and_then(|s| s.as_bool()) == Some(true) {
                    summary = Some(serde_json::from_value(v)?);
                } else {
                    runs.push(serde_json::from_value(v)?);
                }
            }
        }
        Format::Csv => {
            let mut rdr = csv::Reader::from_reader(text.as_bytes());
            let bad = |what: &str| Error::InvalidParameter(format!("{}: malformed csv row ({what})", path.display()));
            for row in rdr.deserialize::<CsvRow>() {
                let row = row.map_err(|e| Error::io(path, std::io::Error::other(e)))?;
                if row.summary {
                    summary = Some(Summary {
                        summary: true,
                        p_ref: row.p_ref.ok_or_else(|| bad("p_ref"))?,
                        rel_error: row.rel_error.ok_or_else(|| bad("rel_error"))?,
                        cv: row.cv.ok_or_else(|| bad("cv"))?,
                        mean_t: row.mean_t.ok_or_else(|| bad("mean_t"))?,
                        mean_k: row.mean_k.ok_or_else(|| bad("mean_k"))?,
                        n_runs: row.n_runs.ok_or_else(|| bad("n_runs"))?,
                    });
                } else {
                    runs.push(RunRecord {
                        run: row.run.ok_or_else(|| bad("run"))?,
                        seed: row.seed.ok_or_else(|| bad("seed"))?,
                        pf: row.pf.ok_or_else(|| bad("pf"))?,
                        iterations: row.iterations.ok_or_else(|| bad("iterations"))?,
                        final_k: row.final_k.ok_or_else(|| bad("final_k"))?,
                        lsf_evals: row.lsf_evals.ok_or_else(|| bad("lsf_evals"))?,
                        converged: row.converged.ok_or_else(|| bad("converged"))?,
                    });
                }
            }
        }
    }
    let summary = summary.ok_or_else(|| Error::EmptyInput(format!("{}: no summary record", path.display())))?;
    Ok((runs, summary))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(run: usize, pf: f64) -> RunRecord {
        RunRecord {
            run,
            seed: 100 + run as u64,
            pf,
            iterations: 3,
            final_k: 2,
            lsf_evals: 4000,
            converged: true,
        }
    }

    #[test]
    fn identical_runs_give_zero_error() {
        let s = BenchmarkStats::from_runs(vec![record(0, 2e-4), record(1, 2e-4)], 2e-4).unwrap();
        assert_eq!(s.rel_error, 0.0);
        assert_eq!(s.cv, 0.0);
    }

    #[test]
    fn two_run_example() {
        let s = BenchmarkStats::from_runs(vec![record(0, 1e-4), record(1, 3e-4)], 2e-4).unwrap();
        assert!(s.rel_error < 1e-12);
        assert!((s.cv - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn permutation_invariant() {
        let a = BenchmarkStats::from_runs(vec![record(0, 1e-4), record(1, 3e-4), record(2, 7e-5)], 2e-4).unwrap();
        let b = BenchmarkStats::from_runs(vec![record(2, 7e-5), record(0, 1e-4), record(1, 3e-4)], 2e-4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_too_few_runs() {
        assert!(BenchmarkStats::from_runs(vec![record(0, 1e-4)], 1e-4).is_err());
    }

    #[test]
    fn empty_stats_are_not_persisted() {
        let s = BenchmarkStats {
            p_ref: 1.0,
            rel_error: 0.0,
            cv: 0.0,
            mean_t: 0.0,
            mean_k: 0.0,
            mean_pf: 0.0,
            std_pf: 0.0,
            runs: vec![],
        };
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(persist(&s, &dir.path().join("x.jsonl"), Format::Jsonl), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let runs = vec![record(0, 1.234_567_890_123_456_7e-7), record(1, 0.1 + 0.2), record(2, 5e-324)];
        let s = BenchmarkStats::from_runs(runs, std::f64::consts::PI * 1e-7).unwrap();
        let dir = tempfile::tempdir().unwrap();
        for (name, fmt) in [("r.jsonl", Format::Jsonl), ("r.csv", Format::Csv)] {
            let p = dir.path().join(name);
            persist(&s, &p, fmt).unwrap();
            let (runs, summary) = load(&p, fmt).unwrap();
            assert_eq!(runs, s.runs);
            assert_eq!(summary, s.summary());
            assert_eq!(summary.cv.to_bits(), s.cv.to_bits());
        }
    }

    #[test]
    fn csv_header_order() {
        let s = BenchmarkStats::from_runs(vec![record(0, 1e-4), record(1, 3e-4)], 2e-4).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        persist(&s, &p, Format::Csv).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_COLUMNS.join(","));
        assert_eq!(text.lines().count(), 4);
    }
}
