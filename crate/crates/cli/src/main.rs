use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::json;

use sbra_core::baselines::OracleLimits;
use sbra_core::experiment::{self, AlgoParams, SweepSource, SweepSpec, TuneSpec};
use sbra_core::greedy::{default_weights, Prepared};
use sbra_core::model::validate_scenario;
use sbra_core::scenarios::{self, Topology};
use sbra_core::{multistart, preprocess, Algorithm, MultiStartParams, Scenario, SbraError, WeightSet};

#[derive(Parser)]
#[command(name = "sbra", version, about = "Plan antenna rotations and routing for backhaul reconfiguration")]
struct Cli {
    /// TOML or JSON file whose keys mirror the long flag names.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a scenario (grid, hex-small or hex-large).
    Generate(Flags),
    /// Run one algorithm on a scenario file.
    Run(Flags),
    /// Run algorithms over a list of K values and seeds.
    Sweep(Flags),
    /// Evaluate a grid of weight sets with the pure greedy.
    Tune(Flags),
    /// Dump the candidate link table.
    Candidates(Flags),
}

#[derive(Args, Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct Flags {
    #[arg(long)]
    topology: Option<String>,
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Interfaces per node.
    #[arg(long)]
    n: Option<usize>,
    /// Slot count; a comma-separated list for `sweep`.
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<usize>>,
    #[arg(long)]
    seed: Option<u64>,
    /// Seeds for `sweep`: a list (1,2,3) or a half-open range (0..5).
    #[arg(long)]
    seeds: Option<String>,
    /// Algorithm; a comma-separated list for `sweep`.
    #[arg(long, value_delimiter = ',')]
    algo: Option<Vec<String>>,
    #[arg(long)]
    omega: Option<usize>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    window: Option<usize>,
    /// Seven comma-separated weights in [0, 1].
    #[arg(long, value_delimiter = ',')]
    weights: Option<Vec<f64>>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for `sweep` outputs.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Per-iteration CSV for `run --algo ms-greedy`.
    #[arg(long)]
    log: Option<PathBuf>,
    /// Grid values per weight for `tune`.
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<f64>>,
    #[arg(long)]
    subsample: Option<usize>,
    /// Grid jitter standard deviation in meters.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    max_states: Option<u128>,
}

macro_rules! merge {
    ($dst:ident, $src:ident, $($f:ident),*) => { $( if $dst.$f.is_none() { $dst.$f = $src.$f; } )* };
}

impl Flags {
    fn with_config(mut self, cfg: Flags) -> Self {
        merge!(self, cfg, topology, scenario, n, k, seed, seeds, algo, omega, iters, window, weights, workers, out,
            out_dir, log, grid, subsample, sigma, max_states);
        self
    }

    fn workers(&self) -> anyhow::Result<usize> {
        if let Some(w) = self.workers {
            return Ok(w);
        }
        match std::env::var("SBRA_WORKERS") {
            Ok(v) => v.trim().parse().with_context(|| format!("SBRA_WORKERS={v:?} is not a count")),
            Err(_) => Ok(0),
        }
    }

    fn single_k(&self) -> anyhow::Result<Option<usize>> {
        match self.k.as_deref() {
            None => Ok(None),
            Some([k]) => Ok(Some(*k)),
            Some(_) => bail!("--k takes a single value here"),
        }
    }

    fn topology(&self) -> anyhow::Result<Topology> {
        let t = self.topology.as_deref().ok_or_else(|| anyhow!("--topology is required"))?;
        Topology::parse(t).ok_or_else(|| anyhow!("unknown topology {t:?} (grid, hex-small, hex-large)"))
    }

    fn weight_set(&self) -> anyhow::Result<WeightSet> {
        match &self.weights {
            Some(w) => Ok(WeightSet::from_slice(w)?),
            None => Ok(default_weights()),
        }
    }

    fn ms_params(&self) -> MultiStartParams {
        MultiStartParams {
            weight_trials: self.omega.unwrap_or(20),
            restarts_per_trial: self.iters.unwrap_or(10),
            extraction_window: self.window.unwrap_or(10),
            master_seed: self.seed.unwrap_or(0),
        }
    }

    fn limits(&self) -> OracleLimits {
        let mut l = OracleLimits::default();
        if let Some(m) = self.max_states {
            l.max_states = m;
        }
        l
    }

    fn algo_params(&self) -> anyhow::Result<AlgoParams> {
        Ok(AlgoParams { weights: self.weight_set()?, ms: self.ms_params(), oracle_limits: self.limits() })
    }

    fn load_scenario(&self) -> anyhow::Result<Scenario> {
        let path = self.scenario.as_ref().ok_or_else(|| anyhow!("--scenario is required"))?;
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut s: Scenario = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        if let Some(k) = self.single_k()? {
            s.slot_count = k;
        }
        let v = validate_scenario(&s);
        if !v.is_empty() {
            for x in &v {
                eprintln!("violation: {x}");
            }
            return Err(SbraError::InvalidScenario(v).into());
        }
        Ok(s)
    }
}

fn parse_algo(name: &str) -> anyhow::Result<Algorithm> {
    Algorithm::parse(name).ok_or_else(|| anyhow!("unknown algorithm {name:?} (greedy, ms-greedy, all-fixed, oracle)"))
}

fn parse_seeds(spec: &str) -> anyhow::Result<Vec<u64>> {
    if let Some((a, b)) = spec.split_once("..") {
        let (a, b): (u64, u64) = (a.trim().parse()?, b.trim().parse()?);
        return Ok((a..b).collect());
    }
    spec.split(',').map(|x| x.trim().parse().map_err(Into::into)).collect()
}

fn load_config(path: &Path) -> anyhow::Result<Flags> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if path.extension().is_some_and(|e| e == "json") {
        Ok(serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?)
    } else {
        Ok(toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?)
    }
}

fn sink(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn cmd_generate(f: &Flags) -> anyhow::Result<()> {
    let topology = f.topology()?;
    let n = f.n.unwrap_or(3);
    let k = f.single_k()?.unwrap_or(20);
    let seed = f.seed.unwrap_or(0);
    let sk = match (topology, f.sigma) {
        (Topology::Grid, Some(sigma)) => scenarios::gen_grid(seed, sigma)?,
        _ => topology.skeleton(seed)?,
    };
    let s = scenarios::build_scenario(&sk, &scenarios::GenOptions::new(n, k, seed))?;
    let mut out = sink(f.out.as_deref())?;
    writeln!(out, "{}", s.to_json()?)?;
    out.flush()?;
    eprintln!("digest {}  nodes {}  total demand {} Mbps", s.digest(), s.node_count, s.total_demand());
    Ok(())
}

fn cmd_run(f: &Flags) -> anyhow::Result<()> {
    let s = f.load_scenario()?;
    let algos = f.algo.clone().unwrap_or_else(|| vec!["greedy".into()]);
    let [name] = algos.as_slice() else { bail!("run takes one --algo") };
    let algo = parse_algo(name)?;
    let p = f.algo_params()?;
    let seed = f.seed.unwrap_or(0);
    let workers = f.workers()?;
    let mut params = json!({
        "algo": algo.name(),
        "seed": seed,
        "k": s.slot_count,
        "workers": workers,
    });
    let result = match algo {
        Algorithm::MsGreedy => {
            let ms = p.ms;
            ms.validate()?;
            let out = multistart::ms_greedy_sbra(&s, &ms, workers)?;
            params["omega"] = json!(ms.weight_trials);
            params["iters"] = json!(ms.restarts_per_trial);
            params["window"] = json!(ms.extraction_window);
            params["iterations"] = json!(out.log.len());
            params["best_iteration"] = json!(out.best_iter);
            if let Some(path) = &f.log {
                multistart::write_log_csv(&out.log, File::create(path)?)?;
            }
            eprintln!("{} iterations, best at {}", out.log.len(), out.best_iter);
            out.best
        }
        Algorithm::Greedy => {
            params["weights"] = json!(p.weights);
            params["xi"] = json!(1);
            experiment::run_algorithm(&s, algo, &p, seed, workers)?
        }
        Algorithm::Oracle => {
            params["oracle_limits"] = json!(p.oracle_limits);
            experiment::run_algorithm(&s, algo, &p, seed, workers)?
        }
        Algorithm::AllFixed => experiment::run_algorithm(&s, algo, &p, seed, workers)?,
    };
    let doc = result.document(&s, params);
    let mut out = sink(f.out.as_deref())?;
    writeln!(out, "{}", serde_json::to_string_pretty(&doc)?)?;
    out.flush()?;
    eprintln!("{}: total loss {:.0} bytes", algo.name(), doc.total_loss_bytes);
    Ok(())
}

fn cmd_sweep(f: &Flags) -> anyhow::Result<()> {
    let source = match &f.scenario {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let s: Scenario = serde_json::from_str(&text)?;
            let name = path.file_stem().map(|x| x.to_string_lossy().into_owned()).unwrap_or_else(|| "scenario".into());
            SweepSource::Template { name, scenario: Box::new(s) }
        }
        None => SweepSource::Generate { topology: f.topology()?, iface_count: f.n.unwrap_or(3) },
    };
    let algos = f
        .algo
        .clone()
        .unwrap_or_else(|| vec!["greedy".into(), "all-fixed".into()])
        .iter()
        .map(|a| parse_algo(a))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let seeds = match &f.seeds {
        Some(spec) => parse_seeds(spec)?,
        None => vec![f.seed.unwrap_or(0)],
    };
    let spec = SweepSpec {
        source,
        k_values: f.k.clone().unwrap_or_else(|| experiment::DEFAULT_K_VALUES.to_vec()),
        algos,
        seeds,
        params: f.algo_params()?,
        workers: f.workers()?,
    };
    let rows = experiment::sweep(&spec)?;
    let summary = experiment::summarize(&rows);
    let params = json!({
        "source": match &spec.source {
            SweepSource::Generate { topology, iface_count } => json!({"topology": topology.name(), "n": iface_count}),
            SweepSource::Template { name, scenario } => json!({"scenario": name, "digest": scenario.digest()}),
        },
        "k": spec.k_values,
        "algo": spec.algos.iter().map(|a| a.name()).collect::<Vec<_>>(),
        "seeds": spec.seeds,
        "params": spec.params,
    });
    let dir = f.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)?;
    experiment::write_sweep_csv(&rows, &params, File::create(dir.join("sweep.csv"))?)?;
    experiment::write_summary_csv(&summary, &params, File::create(dir.join("sweep_summary.csv"))?)?;
    let failures = rows.iter().filter(|r| r.error.is_some()).count();
    eprintln!("{} rows ({failures} failed) written to {}", rows.len(), dir.display());
    Ok(())
}

fn cmd_tune(f: &Flags) -> anyhow::Result<()> {
    let s = f.load_scenario()?;
    let spec = TuneSpec {
        grid: f.grid.clone().unwrap_or_else(|| experiment::DEFAULT_GRID.to_vec()),
        subsample: f.subsample,
        seed: f.seed.unwrap_or(0),
        workers: f.workers()?,
    };
    let total = experiment::grid_size(spec.grid.len());
    if total > experiment::GRID_WARN_ROWS && spec.subsample.is_none() {
        eprintln!("warning: {total} weight combinations; consider --subsample");
    }
    let outcome = experiment::tune(&s, &spec)?;
    if let Some(w) = &outcome.warning {
        eprintln!("warning: {w}");
    }
    let params = json!({"scenario_digest": s.digest(), "grid": spec.grid, "subsample": spec.subsample, "seed": spec.seed});
    experiment::write_tune_csv(&outcome.rows, &params, sink(f.out.as_deref())?)?;
    let best = outcome.best_row();
    eprintln!(
        "best index {} weights {:?} loss {} bytes over {} rows",
        best.index,
        best.weights.values(),
        best.loss_bytes,
        outcome.rows.len()
    );
    Ok(())
}

fn cmd_candidates(f: &Flags) -> anyhow::Result<()> {
    let s = f.load_scenario()?;
    let prepared = Prepared::new(&s)?;
    preprocess::write_candidates_csv(&prepared.candidates, sink(f.out.as_deref())?)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = || -> anyhow::Result<()> {
        let cfg = match &cli.config {
            Some(p) => load_config(p)?,
            None => Flags::default(),
        };
        match cli.cmd {
            Command::Generate(f) => cmd_generate(&f.with_config(cfg)),
            Command::Run(f) => cmd_run(&f.with_config(cfg)),
            Command::Sweep(f) => cmd_sweep(&f.with_config(cfg)),
            Command::Tune(f) => cmd_tune(&f.with_config(cfg)),
            Command::Candidates(f) => cmd_candidates(&f.with_config(cfg)),
        }
    };
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let infeasible = e.downcast_ref::<SbraError>().is_some_and(SbraError::is_infeasible);
            ExitCode::from(if infeasible { 2 } else { 1 })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_lists_and_ranges() {
        assert_eq!(parse_seeds("0..3").unwrap(), vec![0, 1, 2]);
        assert_eq!(parse_seeds("4, 9").unwrap(), vec![4, 9]);
        assert!(parse_seeds("x").is_err());
    }

    #[test]
    fn flags_override_config() {
        let cfg: Flags = toml::from_str("n = 4\nseed = 9\nworkers = 3\n").unwrap();
        let f = Flags { seed: Some(1), ..Flags::default() }.with_config(cfg);
        assert_eq!((f.n, f.seed, f.workers), (Some(4), Some(1), Some(3)));
        assert!(toml::from_str::<Flags>("bogus = 1").is_err());
    }
}
