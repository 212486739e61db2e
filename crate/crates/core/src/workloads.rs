//! Demand matrices from task-submission traces, a seeded bursty generator,
//! and the small hand-worked instances used throughout the tests.
//!
//! Randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//! `seed_from_u64`; [`RNG_NAME`] is written into run metadata.

use std::collections::BTreeMap;
use std::io::Read;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Instance, ModelError};
use crate::num::Num;

pub const RNG_NAME: &str = "chacha8";

/// Fifteen minutes in microseconds.
pub const DEFAULT_ROUND_LENGTH_US: u64 = 15 * 60 * 1_000_000;

#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error("trace contains no events")]
    EmptyTrace,
    #[error("no agents survive the constant-demand and minimum-mean filters")]
    NoAgentsSurvive,
    #[error("only {survived} of {wanted} generated agents survive the filters")]
    TooFewAgents { survived: usize, wanted: usize },
    #[error("round length must be positive")]
    ZeroRoundLength,
    #[error("degenerate configuration: {0}")]
    Degenerate(&'static str),
    #[error("negative cpu request {value} for agent `{agent}`")]
    NegativeRequest { agent: String, value: Num },
    #[error("unknown built-in instance `{0}`")]
    UnknownInstance(String),
    #[error("trace line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskEvent {
    pub timestamp_us: u64,
    pub agent_id: String,
    pub cpu_request: Num,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentSelection {
    /// Keep the agents with the largest total demand (ties by id).
    #[default]
    TopByDemand,
    /// Uniform sample using the config seed.
    Random,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkloadConfig {
    pub round_length_us: u64,
    pub min_mean_demand: Num,
    pub max_agents: Option<usize>,
    pub max_rounds: Option<usize>,
    pub selection: AgentSelection,
    pub seed: u64,
}

impl Default for WorkloadConfig {
    fn default() -> Self {
        WorkloadConfig {
            round_length_us: DEFAULT_ROUND_LENGTH_US,
            min_mean_demand: Num::ratio(1, 100),
            max_agents: None,
            max_rounds: None,
            selection: AgentSelection::TopByDemand,
            seed: 0,
        }
    }
}

#[derive(Deserialize)]
struct RawEvent {
    timestamp_us: u64,
    agent_id: String,
    cpu_request: String,
}

/// Reads `timestamp_us,agent_id,cpu_request` CSV with a header row.
/// Requests are parsed exactly (`0.25`, `1/4` and `3` are all accepted).
pub fn read_trace_csv<R: Read>(reader: R) -> Result<Vec<TaskEvent>, WorkloadError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for rec in rdr.deserialize::<RawEvent>() {
        let raw = rec?;
        let cpu_request = raw.cpu_request.parse::<Num>().map_err(|e| WorkloadError::Parse {
            line: out.len() as u64 + 2,
            message: e.to_string(),
        })?;
        out.push(TaskEvent {
            timestamp_us: raw.timestamp_us,
            agent_id: raw.agent_id,
            cpu_request,
        });
    }
    Ok(out)
}

/// Drops agents with identical demand in every round or mean demand below
/// the threshold, then applies the agent cap. Endowments are reset to the
/// retained rows' means.
pub fn filter_agents(instance: &Instance, config: &WorkloadConfig) -> Result<Instance, WorkloadError> {
    let rounds = instance.rounds();
    if rounds == 0 {
        return Err(WorkloadError::Degenerate("zero rounds"));
    }
    let column = |i: usize| instance.demands().iter().map(move |r| &r[i]);
    let mut keep: Vec<usize> = (0..instance.agents())
        .filter(|&i| {
            let first = &instance.demands()[0][i];
            let constant = column(i).all(|d| d == first);
            let mean = column(i).sum::<Num>() / Num::from(rounds as i64);
            !constant && mean >= config.min_mean_demand
        })
        .collect();
    if keep.is_empty() {
        return Err(WorkloadError::NoAgentsSurvive);
    }
    if let Some(cap) = config.max_agents.filter(|&c| c < keep.len()) {
        keep = match config.selection {
            AgentSelection::TopByDemand => {
                let label = |i: usize| instance.agent_ids().map(|ids| ids[i].clone()).unwrap_or_default();
                let mut ranked: Vec<(Num, String, usize)> =
                    keep.iter().map(|&i| (column(i).sum::<Num>(), label(i), i)).collect();
                ranked.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
                let mut top: Vec<usize> = ranked.into_iter().take(cap).map(|r| r.2).collect();
                top.sort_unstable();
                top
            }
            AgentSelection::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                let mut picked: Vec<usize> = index::sample(&mut rng, keep.len(), cap)
                    .into_iter()
                    .map(|k| keep[k])
                    .collect();
                picked.sort_unstable();
                picked
            }
        };
    }
    let demands: Vec<Vec<Num>> = instance
        .demands()
        .iter()
        .map(|r| keep.iter().map(|&i| r[i].clone()).collect())
        .collect();
    let endowments = keep
        .iter()
        .map(|&i| column(i).sum::<Num>() / Num::from(rounds as i64))
        .collect();
    let mut out = Instance::new(endowments, demands)?;
    if let Some(ids) = instance.agent_ids() {
        out = out.with_agent_ids(keep.iter().map(|&i| ids[i].clone()).collect())?;
    }
    Ok(out)
}

/// Sums each agent's requests per round (rounds counted from timestamp 0),
/// then filters as in [`filter_agents`].
pub fn bucket_trace<I>(events: I, config: &WorkloadConfig) -> Result<Instance, WorkloadError>
where
    I: IntoIterator<Item = TaskEvent>,
{
    if config.round_length_us == 0 {
        return Err(WorkloadError::ZeroRoundLength);
    }
    let mut per_agent: BTreeMap<String, BTreeMap<usize, Num>> = BTreeMap::new();
    let mut last_round = None;
    for ev in events {
        if ev.cpu_request.is_negative() {
            return Err(WorkloadError::NegativeRequest {
                agent: ev.agent_id,
                value: ev.cpu_request,
            });
        }
        let round = (ev.timestamp_us / config.round_length_us) as usize;
        if config.max_rounds.is_some_and(|cap| round >= cap) {
            continue;
        }
        last_round = last_round.max(Some(round));
        *per_agent.entry(ev.agent_id).or_default().entry(round).or_default() += &ev.cpu_request;
    }
    let rounds = last_round.ok_or(WorkloadError::EmptyTrace)? + 1;
    let ids: Vec<String> = per_agent.keys().cloned().collect();
    let demands: Vec<Vec<Num>> = (0..rounds)
        .map(|t| {
            per_agent
                .values()
                .map(|m| m.get(&t).cloned().unwrap_or_default())
                .collect()
        })
        .collect();
    // Placeholder endowments; filter_agents replaces them with row means.
    let raw = Instance::new(vec![Num::one(); ids.len()], demands)?.with_agent_ids(ids)?;
    filter_agents(&raw, config)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub agents: usize,
    pub rounds: usize,
    /// Each agent's mean demand (its endowment) is a uniform integer in
    /// `1..=max_mean`. Small integer endowments keep exact denominators
    /// bounded over long runs.
    pub max_mean: u32,
    /// Per-round probability that an idle agent starts a burst.
    pub burst_prob: f64,
    /// Mean burst length in rounds.
    pub mean_burst_len: f64,
    /// Burst-to-base demand ratio, drawn per agent as `1 + (max_amplitude - 1) * u^2`
    /// with `u` uniform, so most agents are close to steady and a few are very bursty.
    pub max_amplitude: f64,
    pub min_mean_demand: Num,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            agents: 50,
            rounds: 500,
            max_mean: 4,
            burst_prob: 0.05,
            mean_burst_len: 8.0,
            max_amplitude: 6.0,
            min_mean_demand: Num::ratio(1, 100),
            seed: 0,
        }
    }
}

/// Splits `total` integer units over rounds in proportion to `shape`
/// (largest-remainder rounding, ties to the earlier round).
fn apportion(total: u64, shape: &[f64]) -> Vec<u64> {
    let sum: f64 = shape.iter().sum();
    let raw: Vec<f64> = shape.iter().map(|f| total as f64 * f / sum).collect();
    let mut units: Vec<u64> = raw.iter().map(|r| r.floor() as u64).collect();
    let mut order: Vec<usize> = (0..shape.len()).collect();
    order.sort_by(|&a, &b| {
        (raw[b] - raw[b].floor())
            .total_cmp(&(raw[a] - raw[a].floor()))
            .then(a.cmp(&b))
    });
    let assigned: u64 = units.iter().sum();
    if assigned <= total {
        for &k in order.iter().cycle().take((total - assigned) as usize) {
            units[k] += 1;
        }
    } else {
        let mut excess = assigned - total;
        for &k in order.iter().rev().cycle() {
            if excess == 0 {
                break;
            }
            if units[k] > 0 {
                units[k] -= 1;
                excess -= 1;
            }
        }
    }
    units
}

fn synth_row(cfg: &SynthConfig, rng: &mut ChaCha8Rng, durations: &Geometric) -> Vec<Num> {
    let mean = rng.gen_range(1..=cfg.max_mean) as u64;
    let u: f64 = rng.gen();
    let amp = 1.0 + (cfg.max_amplitude - 1.0) * u * u;
    let mut shape = Vec::with_capacity(cfg.rounds);
    let mut remaining = 0u64;
    for _ in 0..cfg.rounds {
        if remaining == 0 && rng.gen_bool(cfg.burst_prob) {
            remaining = 1 + durations.sample(rng);
        }
        if remaining > 0 {
            remaining -= 1;
            shape.push(amp);
        } else {
            shape.push(1.0);
        }
    }
    // Demands in hundredths, summing to exactly `rounds * mean`.
    apportion(100 * mean * cfg.rounds as u64, &shape)
        .into_iter()
        .map(|u| Num::ratio(u as i64, 100))
        .collect()
}

/// Seeded bursty workload. Each candidate agent gets an integer mean, a
/// burst amplitude and geometric burst episodes; candidates are drawn until
/// `agents` of them survive the filters. Endowments are row means.
pub fn synth_bursty(cfg: &SynthConfig) -> Result<Instance, WorkloadError> {
    if cfg.agents == 0 || cfg.rounds == 0 {
        return Err(WorkloadError::Degenerate("zero agents or rounds"));
    }
    if cfg.max_mean == 0
        || cfg.max_amplitude < 1.0
        || cfg.mean_burst_len < 1.0
        || !(0.0..=1.0).contains(&cfg.burst_prob)
    {
        return Err(WorkloadError::Degenerate("invalid burst parameters"));
    }
    let durations = Geometric::new(1.0 / cfg.mean_burst_len).map_err(|_| WorkloadError::Degenerate("burst length"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let filter = WorkloadConfig {
        min_mean_demand: cfg.min_mean_demand.clone(),
        ..WorkloadConfig::default()
    };
    let budget = 20 * cfg.agents + 100;
    let mut rows: Vec<Vec<Num>> = Vec::with_capacity(cfg.agents);
    for _ in 0..budget {
        if rows.len() == cfg.agents {
            break;
        }
        let row = synth_row(cfg, &mut rng, &durations);
        let first = &row[0];
        let mean = row.iter().sum::<Num>() / Num::from(cfg.rounds as i64);
        if row.iter().any(|d| d != first) && mean >= cfg.min_mean_demand {
            rows.push(row);
        }
    }
    if rows.is_empty() {
        return Err(WorkloadError::NoAgentsSurvive);
    }
    if rows.len() < cfg.agents {
        return Err(WorkloadError::TooFewAgents {
            survived: rows.len(),
            wanted: cfg.agents,
        });
    }
    let demands: Vec<Vec<Num>> = (0..cfg.rounds)
        .map(|t| rows.iter().map(|r| r[t].clone()).collect())
        .collect();
    let raw = Instance::new(vec![Num::one(); cfg.agents], demands)?;
    filter_agents(&raw, &filter)
}

pub const BUILTIN_INSTANCES: [&str; 4] = [
    "motivating_example",
    "smmf_unfair",
    "misreport_gain",
    "misreport_gain_lie",
];

fn int_rows(rows: &[&[i64]]) -> Vec<Vec<Num>> {
    rows.iter().map(|r| r.iter().map(|&v| Num::from(v)).collect()).collect()
}

const MISREPORT_GAIN: [&[i64]; 5] = [&[1, 3, 0], &[2, 0, 2], &[0, 1, 2], &[0, 1, 2], &[3, 2, 0]];

/// Small hand-worked instances by name (see [`BUILTIN_INSTANCES`]).
pub fn builtin_instance(name: &str) -> Result<Instance, WorkloadError> {
    let unit = |n: usize| vec![Num::one(); n];
    let inst = match name {
        "motivating_example" => Instance::new(unit(3), int_rows(&[&[2, 2, 0], &[2, 2, 0], &[2, 2, 6]]))?,
        "smmf_unfair" => Instance::new(unit(2), int_rows(&[&[0, 2], &[2, 2]]))?,
        "misreport_gain" => Instance::new(unit(3), int_rows(&MISREPORT_GAIN))?,
        "misreport_gain_lie" => {
            let mut reports = int_rows(&MISREPORT_GAIN);
            reports[0][0] = Num::zero();
            Instance::with_true_demands(unit(3), reports, Some(int_rows(&MISREPORT_GAIN)))?
        }
        other => return Err(WorkloadError::UnknownInstance(other.to_string())),
    };
    Ok(inst)
}
