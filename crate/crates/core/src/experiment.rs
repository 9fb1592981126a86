//! K-sweeps and weight-grid tuning with CSV output.

use std::io::Write;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{self, OracleLimits};
use crate::error::{Result, SbraError};
use crate::greedy::Prepared;
use crate::model::{validate_scenario, MultiStartParams, Scenario, WeightSet};
use crate::multistart;
use crate::result::{Algorithm, ReconfigResult, TOOL_NAME, TOOL_VERSION};
use crate::scenarios::{self, Topology};

/// Slot counts swept by default.
pub const DEFAULT_K_VALUES: [usize; 6] = [19, 20, 21, 25, 30, 35];
pub const DEFAULT_GRID: [f64; 4] = [0.0, 0.33, 0.66, 1.0];
pub const GRID_WARN_ROWS: u128 = 100_000;

/// Algorithm settings shared by every cell of a sweep or a single run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgoParams {
    pub weights: WeightSet,
    pub ms: MultiStartParams,
    pub oracle_limits: OracleLimits,
}

/// Runs one algorithm. `seed` drives the multi-start streams; `workers`
/// caps the multi-start thread pool.
pub fn run_algorithm(s: &Scenario, algo: Algorithm, p: &AlgoParams, seed: u64, workers: usize) -> Result<ReconfigResult> {
    match algo {
        Algorithm::Greedy => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut r = Prepared::new(s)?.run(&p.weights, 1, &mut rng)?;
            r.seed = Some(seed);
            Ok(r)
        }
        Algorithm::MsGreedy => {
            let ms = MultiStartParams { master_seed: seed, ..p.ms };
            Ok(multistart::ms_greedy_sbra(s, &ms, workers)?.best)
        }
        Algorithm::AllFixed => baselines::all_links_fixed(s),
        Algorithm::Oracle => baselines::exhaustive_oracle(s, &p.oracle_limits),
    }
}

/// Where sweep instances come from.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepSource {
    /// A fresh instance per seed; the layout does not depend on K.
    Generate { topology: Topology, iface_count: usize },
    /// One scenario whose slot count is overridden per cell.
    Template { name: String, scenario: Box<Scenario> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub source: SweepSource,
    pub k_values: Vec<usize>,
    pub algos: Vec<Algorithm>,
    pub seeds: Vec<u64>,
    pub params: AlgoParams,
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub topology: String,
    pub n: usize,
    pub k: usize,
    pub algo: Algorithm,
    pub seed: u64,
    pub loss_bytes: Option<u64>,
    pub loss_mbps_slots: Option<f64>,
    pub runtime_ms: f64,
    pub error: Option<String>,
}

fn cell_scenario(source: &SweepSource, k: usize, seed: u64) -> Result<(String, usize, Scenario)> {
    match source {
        SweepSource::Generate { topology, iface_count } => {
            Ok((topology.name().into(), *iface_count, scenarios::generate(*topology, *iface_count, k, seed)?))
        }
        SweepSource::Template { name, scenario } => {
            let mut s = (**scenario).clone();
            s.slot_count = k;
            let v = validate_scenario(&s);
            if !v.is_empty() {
                return Err(SbraError::InvalidScenario(v));
            }
            Ok((name.clone(), s.iface_count, s))
        }
    }
}

/// Executes the full (K × algorithm × seed) cross product. Failures are
/// recorded in the row and do not stop the sweep. Rows come back sorted.
pub fn sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    let mut cells = Vec::new();
    for &k in &spec.k_values {
        for &algo in &spec.algos {
            for &seed in &spec.seeds {
                cells.push((k, algo, seed));
            }
        }
    }
    let (label, n) = match &spec.source {
        SweepSource::Generate { topology, iface_count } => (topology.name().to_string(), *iface_count),
        SweepSource::Template { name, scenario } => (name.clone(), scenario.iface_count),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| SbraError::InvalidParams(format!("thread pool: {e}")))?;
    let mut rows: Vec<SweepRow> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(k, algo, seed)| {
                let t0 = Instant::now();
                let outcome = cell_scenario(&spec.source, k, seed)
                    .and_then(|(_, _, s)| run_algorithm(&s, algo, &spec.params, seed, 1).map(|r| (s, r)));
                let mut row = SweepRow {
                    topology: label.clone(),
                    n,
                    k,
                    algo,
                    seed,
                    loss_bytes: None,
                    loss_mbps_slots: None,
                    runtime_ms: t0.elapsed().as_secs_f64() * 1e3,
                    error: None,
                };
                match outcome {
                    Ok((_, r)) => {
                        row.loss_bytes = Some(r.loss.total_bytes.round() as u64);
                        row.loss_mbps_slots = Some(r.loss.total_mbps_slots);
                        row.runtime_ms = r.timings.total_ms;
                    }
                    Err(e) => row.error = Some(e.to_string()),
                }
                row
            })
            .collect()
    });
    rows.sort_by(|a, b| (a.k, a.algo, a.seed).cmp(&(b.k, b.algo, b.seed)));
    Ok(rows)
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub topology: String,
    pub n: usize,
    pub k: usize,
    pub algo: Algorithm,
    pub runs: usize,
    pub failures: usize,
    pub median_loss_bytes: Option<f64>,
    pub median_runtime_ms: Option<f64>,
}

/// Median over seeds for every (K, algorithm) pair.
pub fn summarize(rows: &[SweepRow]) -> Vec<SummaryRow> {
    let mut keys: Vec<(String, usize, usize, Algorithm)> =
        rows.iter().map(|r| (r.topology.clone(), r.n, r.k, r.algo)).collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .map(|(topology, n, k, algo)| {
            let group: Vec<&SweepRow> =
                rows.iter().filter(|r| r.topology == topology && r.n == n && r.k == k && r.algo == algo).collect();
            let ok: Vec<&&SweepRow> = group.iter().filter(|r| r.error.is_none()).collect();
            SummaryRow {
                topology,
                n,
                k,
                algo,
                runs: group.len(),
                failures: group.len() - ok.len(),
                median_loss_bytes: median(ok.iter().filter_map(|r| r.loss_bytes.map(|b| b as f64)).collect()),
                median_runtime_ms: median(ok.iter().map(|r| r.runtime_ms).collect()),
            }
        })
        .collect()
}

fn write_meta(out: &mut impl Write, params: &serde_json::Value) -> Result<()> {
    writeln!(out, "# tool={TOOL_NAME} version={TOOL_VERSION}")?;
    writeln!(out, "# params={}", serde_json::to_string(params)?)?;
    Ok(())
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

/// Sweep rows as CSV preceded by `#` metadata lines.
pub fn write_sweep_csv(rows: &[SweepRow], params: &serde_json::Value, mut out: impl Write) -> Result<()> {
    write_meta(&mut out, params)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "topology", "n", "k", "algo", "seed", "loss_bytes", "loss_mbps_slots", "runtime_ms", "error",
    ])?;
    for r in rows {
        w.write_record([
            r.topology.clone(),
            r.n.to_string(),
            r.k.to_string(),
            r.algo.name().into(),
            r.seed.to_string(),
            opt(&r.loss_bytes),
            opt(&r.loss_mbps_slots),
            format!("{:.3}", r.runtime_ms),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_csv(rows: &[SummaryRow], params: &serde_json::Value, mut out: impl Write) -> Result<()> {
    write_meta(&mut out, params)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["topology", "n", "k", "algo", "runs", "failures", "median_loss_bytes", "median_runtime_ms"])?;
    for r in rows {
        w.write_record([
            r.topology.clone(),
            r.n.to_string(),
            r.k.to_string(),
            r.algo.name().into(),
            r.runs.to_string(),
            r.failures.to_string(),
            opt(&r.median_loss_bytes),
            r.median_runtime_ms.map(|x| format!("{x:.3}")).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Which weight combinations a tuning run evaluates.
#[derive(Debug, Clone, PartialEq)]
pub struct TuneSpec {
    /// Values tried for each of the seven weights.
    pub grid: Vec<f64>,
    /// Evaluate only this many combinations, drawn without replacement.
    pub subsample: Option<usize>,
    pub seed: u64,
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuneRow {
    pub index: u128,
    pub weights: WeightSet,
    pub loss_bytes: u64,
    pub loss_mbps_slots: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneOutcome {
    pub rows: Vec<TuneRow>,
    pub best: usize,
    pub warning: Option<String>,
}

impl TuneOutcome {
    pub fn best_row(&self) -> &TuneRow {
        &self.rows[self.best]
    }
}

pub fn grid_size(values: usize) -> u128 {
    (values as u128).pow(7)
}

/// Weights of combination `index`, first weight varying slowest.
pub fn grid_weights(grid: &[f64], mut index: u128) -> Result<WeightSet> {
    let b = grid.len() as u128;
    let mut w = [0.0; 7];
    for slot in w.iter_mut().rev() {
        *slot = grid[(index % b) as usize];
        index /= b;
    }
    WeightSet::new(w)
}

/// Evaluates weight combinations with pure greedy and returns every row and
/// the argmin (lowest index on ties).
pub fn tune(s: &Scenario, spec: &TuneSpec) -> Result<TuneOutcome> {
    if spec.grid.is_empty() {
        return Err(SbraError::InvalidParams("empty weight grid".into()));
    }
    for v in &spec.grid {
        if !(0.0..=1.0).contains(v) {
            return Err(SbraError::InvalidParams(format!("grid value {v} outside [0, 1]")));
        }
    }
    let total = grid_size(spec.grid.len());
    let indices: Vec<u128> = match spec.subsample {
        Some(m) if (m as u128) < total => {
            if total > usize::MAX as u128 {
                return Err(SbraError::InvalidParams("grid too large to subsample".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let mut picked: Vec<u128> =
                rand::seq::index::sample(&mut rng, total as usize, m).into_iter().map(|i| i as u128).collect();
            picked.sort_unstable();
            picked
        }
        _ => (0..total).collect(),
    };
    if indices.is_empty() {
        return Err(SbraError::InvalidParams("no weight combinations selected".into()));
    }
    let warning = (indices.len() as u128 > GRID_WARN_ROWS)
        .then(|| format!("evaluating {} weight combinations; consider subsampling", indices.len()));
    let prepared = Prepared::new(s)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| SbraError::InvalidParams(format!("thread pool: {e}")))?;
    let rows: Vec<TuneRow> = pool.install(|| {
        indices
            .par_iter()
            .map(|&index| {
                let w = grid_weights(&spec.grid, index)?;
                let r = prepared.run(&w, 1, &mut ChaCha8Rng::seed_from_u64(0))?;
                Ok(TuneRow {
                    index,
                    weights: w,
                    loss_bytes: r.loss.total_bytes.round() as u64,
                    loss_mbps_slots: r.loss.total_mbps_slots,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut best = 0;
    for (i, r) in rows.iter().enumerate() {
        if r.loss_mbps_slots < rows[best].loss_mbps_slots {
            best = i;
        }
    }
    Ok(TuneOutcome { rows, best, warning })
}

pub fn write_tune_csv(rows: &[TuneRow], params: &serde_json::Value, mut out: impl Write) -> Result<()> {
    write_meta(&mut out, params)?;
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["index".to_string()];
    header.extend((1..=7).map(|i| format!("w{i}")));
    header.extend(["loss_bytes".to_string(), "loss_mbps_slots".into()]);
    w.write_record(&header)?;
    for r in rows {
        let mut row = vec![r.index.to_string()];
        row.extend(r.weights.values().iter().map(|x| x.to_string()));
        row.push(r.loss_bytes.to_string());
        row.push(r.loss_mbps_slots.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
