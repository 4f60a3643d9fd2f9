//! Seeded trial sweeps over transmit power or IRS size, with paired channel
//! realizations across algorithms and CSV output.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::ao::{self, Algorithm, AoSettings, BeamformingState, SolveReport};
use crate::error::{Error, Result};
use crate::model::SystemParams;
use crate::scenario::{generate_scenario, ChannelSet, ConfigViolation, ScenarioConfig};

pub const SUMMARY_FILE: &str = "summary.csv";
pub const TRACE_FILE: &str = "trace.csv";

/// Axis swept over; every point reuses the same trial seeds.
#[derive(Debug, Clone, PartialEq)]
pub enum Sweep {
    None,
    /// Transmit power budgets in Watts.
    Power(Vec<f64>),
    /// IRS element counts.
    Elements(Vec<usize>),
}

impl Sweep {
    fn points(&self, base: &ScenarioConfig) -> Vec<(String, ScenarioConfig)> {
        match self {
            Sweep::None => vec![("base".to_string(), base.clone())],
            Sweep::Power(ps) => ps.iter().map(|&p| (format!("p{p}"), base.clone().with_power(p))).collect(),
            Sweep::Elements(ms) => ms.iter().map(|&m| (format!("m{m}"), base.clone().with_elements(m))).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub base: ScenarioConfig,
    pub sweep: Sweep,
    pub algorithms: Vec<Algorithm>,
    pub trials: usize,
    /// Trial `i` uses seed `seed + i` for both the channels and the start.
    pub seed: u64,
    pub settings: AoSettings,
    /// When false the `wall_ms` column is written as 0 so repeated runs are
    /// byte-identical.
    pub timing: bool,
}

impl ExperimentSpec {
    pub fn new(base: ScenarioConfig, algorithms: Vec<Algorithm>) -> Self {
        let seed = base.seed;
        Self { base, sweep: Sweep::None, algorithms, trials: 1, seed, settings: AoSettings::default(), timing: true }
    }

    pub fn validate(&self) -> Result<()> {
        let mut v = Vec::new();
        let push = |v: &mut Vec<ConfigViolation>, field: &str, message: String| {
            v.push(ConfigViolation { field: field.into(), message })
        };
        if self.algorithms.is_empty() {
            push(&mut v, "algorithms", "at least one algorithm is required".into());
        }
        if self.trials == 0 {
            push(&mut v, "trials", "must be at least 1".into());
        }
        match &self.sweep {
            Sweep::Power(ps) if ps.is_empty() => push(&mut v, "sweep.values", "empty power list".into()),
            Sweep::Power(ps) => {
                for p in ps.iter().filter(|p| !(p.is_finite() && **p > 0.0)) {
                    push(&mut v, "sweep.values", format!("power {p} W is not positive"));
                }
            }
            Sweep::Elements(ms) if ms.is_empty() => push(&mut v, "sweep.values", "empty element list".into()),
            _ => {}
        }
        if self.algorithms.contains(&Algorithm::AoFast) && self.base.num_pus != 1 {
            push(&mut v, "num_pus", format!("ao-fast needs exactly one PU, config has {}", self.base.num_pus));
        }
        for (id, cfg) in self.sweep.points(&self.base) {
            for mut e in cfg.violations() {
                e.field = format!("{id}.{}", e.field);
                v.push(e);
            }
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub scenario_id: String,
    pub algorithm: String,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "P_max_W")]
    pub p_max_w: f64,
    pub final_wsr_bits_per_hz: f64,
    #[serde(rename = "power_W")]
    pub power_w: f64,
    #[serde(rename = "max_interference_W")]
    pub max_interference_w: f64,
    pub iterations: usize,
    pub wall_ms: f64,
    pub channel_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub scenario_id: String,
    pub algorithm: String,
    pub iteration: usize,
    pub wsr_bits_per_hz: f64,
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentResults {
    pub summary: Vec<SummaryRow>,
    pub traces: Vec<TraceRow>,
}

/// Start shared by every algorithm of a trial. The stream differs from the
/// one that drew the channels.
pub fn seeded_start(ch: &ChannelSet, params: &SystemParams, seed: u64) -> Result<BeamformingState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    ao::initialize(ch, params, &mut rng)
}

struct TrialOutput {
    rows: Vec<SummaryRow>,
    traces: Vec<TraceRow>,
}

fn run_trial(spec: &ExperimentSpec, point_id: &str, cfg: &ScenarioConfig, trial: usize) -> Result<TrialOutput> {
    let seed = spec.seed.wrapping_add(trial as u64);
    let cfg = cfg.clone().with_seed(seed);
    let sc = generate_scenario(&cfg)?;
    let params = SystemParams::from(&cfg);
    let init = seeded_start(&sc.channels, &params, seed)?;
    let hash = sc.channels.fingerprint();
    let scenario_id = format!("{point_id}-t{trial}");

    let mut rows = Vec::new();
    let mut traces = Vec::new();
    for &alg in &spec.algorithms {
        let start = Instant::now();
        let rep: SolveReport = ao::solve(&sc.channels, &params, alg, &init, &spec.settings)?;
        let wall_ms = if spec.timing { start.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
        if let ao::Termination::SubsolverFailure(msg) = &rep.termination {
            log::warn!("{scenario_id} {alg}: {msg}");
        }
        for (k, (it, cap)) in rep.evaluation.interference.iter().zip(&params.caps).enumerate() {
            if *it > cap * (1.0 + 1e-6) {
                return Err(Error::Numerical(format!(
                    "{scenario_id} {alg}: interference {it:e} W at PU {k} exceeds cap {cap:e} W"
                )));
            }
        }
        rows.push(SummaryRow {
            scenario_id: scenario_id.clone(),
            algorithm: alg.to_string(),
            m: cfg.num_elements,
            p_max_w: cfg.p_max_w,
            final_wsr_bits_per_hz: rep.final_wsr(),
            power_w: rep.evaluation.power,
            max_interference_w: rep.evaluation.max_interference(),
            iterations: rep.iterations(),
            wall_ms,
            channel_hash: hash.clone(),
        });
        traces.extend(rep.records.iter().map(|r| TraceRow {
            scenario_id: scenario_id.clone(),
            algorithm: alg.to_string(),
            iteration: r.iteration,
            wsr_bits_per_hz: r.wsr,
        }));
    }
    Ok(TrialOutput { rows, traces })
}

/// Runs every (sweep point, trial) pair, trials in parallel, and returns the
/// rows ordered by point, trial and the algorithm order of the spec.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResults> {
    spec.validate()?;
    let points = spec.sweep.points(&spec.base);
    let jobs: Vec<(usize, usize)> =
        (0..points.len()).flat_map(|p| (0..spec.trials).map(move |t| (p, t))).collect();
    let outputs: Vec<Result<TrialOutput>> = jobs
        .par_iter()
        .map(|&(p, t)| run_trial(spec, &points[p].0, &points[p].1, t))
        .collect();
    let mut res = ExperimentResults::default();
    for out in outputs {
        let out = out?;
        res.summary.extend(out.rows);
        res.traces.extend(out.traces);
    }
    Ok(res)
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `summary.csv` (and `trace.csv` when asked) into `dir`, creating it
/// if needed. Returns the paths written.
pub fn write_results(res: &ExperimentResults, dir: &Path, trace: bool) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = vec![dir.join(SUMMARY_FILE)];
    write_rows(&written[0], &res.summary)?;
    if trace {
        written.push(dir.join(TRACE_FILE));
        write_rows(&written[1], &res.traces)?;
    }
    Ok(written)
}

/// Parses a JSON scenario file and checks every invariant.
pub fn validate_config(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    ScenarioConfig::from_json_file(path)
}
