//! Multi-start randomized greedy search.
//!
//! Iteration `j` belongs to weight trial `j / (1 + I)`. The first run of each
//! trial is pure greedy, the other `I` extract from a window of `E`. Every
//! random draw comes from a ChaCha stream fixed by `(master_seed, j)`, so
//! the outcome does not depend on how many workers execute the iterations.

use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, SbraError};
use crate::greedy::Prepared;
use crate::model::{MultiStartParams, Scenario, WeightSet};
use crate::result::{Algorithm, ReconfigResult};

const WEIGHT_STREAM_BASE: u64 = 1 << 63;

/// Weight set of trial `omega_index`, uniform per component on `[0, 1]`.
pub fn draw_weights(master_seed: u64, omega_index: usize) -> WeightSet {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(WEIGHT_STREAM_BASE | omega_index as u64);
    WeightSet::new(std::array::from_fn(|_| rng.random_range(0.0..=1.0))).expect("unit interval")
}

/// Selection stream of iteration `iter`.
pub fn iteration_rng(master_seed: u64, iter: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(iter as u64);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub omega_index: usize,
    pub xi: usize,
    pub weights: WeightSet,
    pub total_loss_bytes: f64,
    pub runtime_ms: f64,
}

#[derive(Debug, Clone)]
pub struct MultiStartOutcome {
    pub best: ReconfigResult,
    pub best_iter: usize,
    pub log: Vec<IterationRecord>,
}

impl MultiStartOutcome {
    /// Lowest loss seen up to and including each iteration.
    pub fn best_so_far(&self) -> Vec<f64> {
        self.log
            .iter()
            .scan(f64::INFINITY, |best, r| {
                *best = best.min(r.total_loss_bytes);
                Some(*best)
            })
            .collect()
    }

    /// Equality of everything except wall-clock fields.
    pub fn same_outcome(&self, other: &Self) -> bool {
        let strip = |log: &[IterationRecord]| -> Vec<IterationRecord> {
            log.iter().map(|r| IterationRecord { runtime_ms: 0.0, ..r.clone() }).collect()
        };
        self.best_iter == other.best_iter && self.best.same_outcome(&other.best) && strip(&self.log) == strip(&other.log)
    }
}

/// Runs `Ω·(1+I)` greedy iterations on up to `workers` threads (0 picks the
/// machine default) and returns the lowest-loss result, earliest on ties.
pub fn ms_greedy_sbra(s: &Scenario, p: &MultiStartParams, workers: usize) -> Result<MultiStartOutcome> {
    p.validate()?;
    let t0 = Instant::now();
    let prepared = Prepared::new(s)?;
    let per_trial = 1 + p.restarts_per_trial;
    let weights: Vec<WeightSet> = (0..p.weight_trials).map(|o| draw_weights(p.master_seed, o)).collect();
    let run = |j: usize| -> Result<(IterationRecord, ReconfigResult)> {
        let t = Instant::now();
        let omega_index = j / per_trial;
        let xi = if j % per_trial == 0 { 1 } else { p.extraction_window };
        let w = weights[omega_index];
        let r = prepared.run(&w, xi, &mut iteration_rng(p.master_seed, j))?;
        let rec = IterationRecord {
            iter: j,
            omega_index,
            xi,
            weights: w,
            total_loss_bytes: r.total_loss_bytes(),
            runtime_ms: t.elapsed().as_secs_f64() * 1e3,
        };
        Ok((rec, r))
    };
    let total = p.total_iterations();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| SbraError::InvalidParams(format!("thread pool: {e}")))?;
    let runs: Vec<(IterationRecord, ReconfigResult)> =
        pool.install(|| (0..total).into_par_iter().map(run).collect::<Result<Vec<_>>>())?;
    let mut best_iter = 0;
    for (j, (rec, _)) in runs.iter().enumerate() {
        if rec.total_loss_bytes < runs[best_iter].0.total_loss_bytes {
            best_iter = j;
        }
    }
    let mut log = Vec::with_capacity(total);
    let mut best = None;
    for (j, (rec, r)) in runs.into_iter().enumerate() {
        log.push(rec);
        if j == best_iter {
            best = Some(r);
        }
    }
    let mut best = best.expect("at least one iteration");
    best.algorithm = Algorithm::MsGreedy;
    best.seed = Some(p.master_seed);
    best.timings.total_ms = t0.elapsed().as_secs_f64() * 1e3;
    Ok(MultiStartOutcome { best, best_iter, log })
}

/// Iteration log as CSV: `iter,omega_index,xi,w1..w7,total_loss_bytes,runtime_ms`.
pub fn write_log_csv(log: &[IterationRecord], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["iter".to_string(), "omega_index".into(), "xi".into()];
    header.extend((1..=7).map(|i| format!("w{i}")));
    header.extend(["total_loss_bytes".to_string(), "runtime_ms".into()]);
    w.write_record(&header)?;
    for r in log {
        let mut row = vec![r.iter.to_string(), r.omega_index.to_string(), r.xi.to_string()];
        row.extend(r.weights.values().iter().map(|x| x.to_string()));
        row.push(format!("{}", r.total_loss_bytes));
        row.push(format!("{:.3}", r.runtime_ms));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
