//! `creditfair` command-line front end.
//!
//! Exit codes: 0 success, 1 a verdict failed (audit FAIL/REFUTED, repro
//! mismatch), 2 usage, parse or I/O error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs::File;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::credit_audit::{
    audit_explicit, check_osp, refute_credit_existence, sp_probe, sp_search, DeviationGrid, OspVerdict, Refutation,
};
use crate::io::{
    fmt_float, load_config, load_instance_json, metrics_csv, summary_csv, trace_csv, write_text, TraceDocument,
};
use crate::mechanisms::{run, Mechanism};
use crate::metrics::{MetricsRow, SummaryRow};
use crate::model::{static_utility, Instance};
use crate::num::Num;
use crate::repro::{repro, ReproTarget};
use crate::workloads::{
    bucket_trace, builtin_instance, read_trace_csv, synth_bursty, AgentSelection, SynthConfig, WorkloadConfig, RNG_NAME,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERDICT: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

// Stdout writes that stop quietly when the reader closes the pipe.
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = write!(std::io::stdout().lock(), $($arg)*);
    }};
}

macro_rules! outln {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

/// Largest number of full schedules `audit --mode sp` enumerates per agent.
const SP_SEARCH_LIMIT: usize = 200_000;

#[derive(Debug, Parser)]
#[command(name = "creditfair", version, about = "Online fair allocation with credit auditing")]
pub struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate mechanisms over seeds and write traces, metrics and a summary.
    Run(RunArgs),
    /// Re-run the hand-worked examples and report expected vs actual values.
    Repro(ReproArgs),
    /// Audit a saved trace document.
    Audit(AuditArgs),
    /// Write an instance as JSON.
    Gen(GenArgs),
}

#[derive(Debug, Default, clap::Args)]
struct RunArgs {
    /// builtin:<name> | trace:<csv> | json:<path> | synthetic
    #[arg(long)]
    instance: Option<String>,
    /// Comma-separated: lendrecoup, smmf, dmmf, karma, karma:<alpha>, static
    #[arg(long)]
    mechanisms: Option<String>,
    /// Karma guarantee fraction used for a bare `karma`
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long)]
    agents: Option<usize>,
    /// `a..b` (exclusive), `a..=b`, or a comma list
    #[arg(long)]
    seeds: Option<String>,
    /// Seeds 0..repetitions when --seeds is absent
    #[arg(long)]
    repetitions: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated trace formats: json, csv
    #[arg(long)]
    format: Option<String>,
    /// Flat `key = value` file using the long flag names; flags win
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads; 1 runs sequentially
    #[arg(long)]
    jobs: Option<usize>,
    /// Agent cap policy for traces: top (by total demand) or random
    #[arg(long)]
    selection: Option<String>,
}

#[derive(Debug, clap::Args)]
struct ReproArgs {
    /// all | motivating | smmf_unfair | misreport_gain | static_cf
    #[arg(default_value = "all")]
    target: String,
    /// Print the report as JSON
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AuditMode {
    Explicit,
    Refute,
    Osp,
    Sp,
}

#[derive(Debug, clap::Args)]
struct AuditArgs {
    /// Trace document written by `run`
    trace: PathBuf,
    #[arg(long, value_enum, default_value = "explicit")]
    mode: AuditMode,
    /// 1-based agent for sp mode (default: every agent)
    #[arg(long)]
    agent: Option<usize>,
    /// Comma-separated misreport schedule for sp mode
    #[arg(long)]
    schedule: Option<String>,
    /// Write the verdict as JSON
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
struct GenArgs {
    #[arg(long, default_value = "synthetic")]
    instance: String,
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long)]
    agents: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    selection: Option<String>,
    /// Output path (stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Runtime(String),
}

impl<E: std::error::Error> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Runtime(e.to_string())
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Parses `a..b`, `a..=b`, `a,b,c` or a single seed.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>, String> {
    let s = s.trim();
    let num = |t: &str| t.trim().parse::<u64>().map_err(|_| format!("bad seed `{t}` in `{s}`"));
    let seeds: Vec<u64> = if let Some((a, b)) = s.split_once("..=") {
        (num(a)?..=num(b)?).collect()
    } else if let Some((a, b)) = s.split_once("..") {
        (num(a)?..num(b)?).collect()
    } else {
        s.split(',').map(num).collect::<Result<_, _>>()?
    };
    if seeds.is_empty() {
        return Err(format!("seed range `{s}` is empty"));
    }
    Ok(seeds)
}

/// Comma-separated mechanism list; a bare `karma` takes `alpha`.
pub fn parse_mechanisms(s: &str, alpha: &Num) -> Result<Vec<Mechanism>, String> {
    let list: Vec<Mechanism> = s
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            if t.trim().eq_ignore_ascii_case("karma") {
                Mechanism::karma(alpha.clone())
            } else {
                t.parse()
            }
            .map_err(|e| e.to_string())
        })
        .collect::<Result<_, _>>()?;
    if list.is_empty() {
        return Err("at least one mechanism is required".into());
    }
    Ok(list)
}

fn parse_selection(s: Option<&str>) -> Result<AgentSelection, CliError> {
    match s.map(str::to_ascii_lowercase).as_deref() {
        None | Some("top") | Some("top_by_demand") => Ok(AgentSelection::TopByDemand),
        Some("random") => Ok(AgentSelection::Random),
        Some(other) => Err(usage(format!("unknown selection `{other}` (top or random)"))),
    }
}

#[derive(Debug, Clone)]
enum Source {
    Builtin(String),
    Trace(PathBuf),
    Json(PathBuf),
    Synthetic,
}

impl Source {
    fn parse(s: &str) -> Result<Source, CliError> {
        match s.split_once(':') {
            Some(("builtin", name)) => Ok(Source::Builtin(name.to_string())),
            Some(("trace", p)) => Ok(Source::Trace(PathBuf::from(p))),
            Some(("json", p)) => Ok(Source::Json(PathBuf::from(p))),
            None if s == "synthetic" => Ok(Source::Synthetic),
            _ => Err(usage(format!(
                "bad instance source `{s}` (builtin:<name>, trace:<csv>, json:<path> or synthetic)"
            ))),
        }
    }

    fn build(
        &self,
        agents: Option<usize>,
        rounds: Option<usize>,
        selection: AgentSelection,
        seed: u64,
    ) -> Result<Instance, CliError> {
        Ok(match self {
            Source::Builtin(name) => builtin_instance(name)?,
            Source::Json(path) => load_instance_json(path)?,
            Source::Trace(path) => {
                let file = File::open(path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
                let cfg = WorkloadConfig {
                    max_agents: agents,
                    max_rounds: rounds,
                    selection,
                    seed,
                    ..WorkloadConfig::default()
                };
                bucket_trace(read_trace_csv(file)?, &cfg)?
            }
            Source::Synthetic => {
                let defaults = SynthConfig::default();
                synth_bursty(&SynthConfig {
                    agents: agents.unwrap_or(defaults.agents),
                    rounds: rounds.unwrap_or(defaults.rounds),
                    seed,
                    ..defaults
                })?
            }
        })
    }
}

const RUN_KEYS: [&str; 11] = [
    "instance",
    "mechanisms",
    "alpha",
    "rounds",
    "agents",
    "seeds",
    "repetitions",
    "out",
    "format",
    "jobs",
    "selection",
];

struct RunPlan {
    source: Source,
    mechanisms: Vec<Mechanism>,
    seeds: Vec<u64>,
    agents: Option<usize>,
    rounds: Option<usize>,
    selection: AgentSelection,
    out: PathBuf,
    json: bool,
    csv: bool,
    jobs: Option<usize>,
}

fn resolve_run(args: RunArgs) -> Result<RunPlan, CliError> {
    let mut cfg: BTreeMap<String, String> = match &args.config {
        Some(p) => load_config(p).map_err(|e| usage(e.to_string()))?,
        None => BTreeMap::new(),
    };
    if let Some(k) = cfg.keys().find(|k| !RUN_KEYS.contains(&k.as_str())) {
        return Err(usage(format!("unknown config key `{k}`")));
    }
    let mut set = |k: &str, v: Option<String>| {
        if let Some(v) = v {
            cfg.insert(k.to_string(), v);
        }
    };
    set("instance", args.instance);
    set("mechanisms", args.mechanisms);
    set("alpha", args.alpha);
    set("rounds", args.rounds.map(|v| v.to_string()));
    set("agents", args.agents.map(|v| v.to_string()));
    set("seeds", args.seeds);
    set("repetitions", args.repetitions.map(|v| v.to_string()));
    set("out", args.out.map(|p| p.display().to_string()));
    set("format", args.format);
    set("jobs", args.jobs.map(|v| v.to_string()));
    set("selection", args.selection);

    let get = |k: &str| cfg.get(k).map(String::as_str);
    let count = |k: &str| -> Result<Option<usize>, CliError> {
        get(k)
            .map(|v| {
                v.parse::<usize>()
                    .map_err(|_| usage(format!("{k} must be a nonnegative integer, got `{v}`")))
            })
            .transpose()
    };
    let alpha: Num = get("alpha")
        .unwrap_or("1/2")
        .parse()
        .map_err(|e| usage(format!("alpha: {e}")))?;
    if alpha.is_negative() || alpha > 1 {
        return Err(usage(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    let mechanisms =
        parse_mechanisms(get("mechanisms").unwrap_or("lendrecoup,smmf,dmmf,karma"), &alpha).map_err(usage)?;
    let seeds = match get("seeds") {
        Some(s) => parse_seeds(s).map_err(usage)?,
        None => {
            let reps = count("repetitions")?.unwrap_or(1);
            if reps == 0 {
                return Err(usage("repetitions must be at least 1"));
            }
            (0..reps as u64).collect()
        }
    };
    let mut json = false;
    let mut csv = false;
    for f in get("format").unwrap_or("json").split(',') {
        match f.trim() {
            "json" => json = true,
            "csv" => csv = true,
            other => return Err(usage(format!("unknown format `{other}` (json, csv)"))),
        }
    }
    let jobs = count("jobs")?;
    if jobs == Some(0) {
        return Err(usage("jobs must be at least 1"));
    }
    Ok(RunPlan {
        source: Source::parse(get("instance").unwrap_or("synthetic"))?,
        mechanisms,
        seeds,
        agents: count("agents")?,
        rounds: count("rounds")?,
        selection: parse_selection(get("selection"))?,
        out: PathBuf::from(get("out").unwrap_or("results")),
        json,
        csv,
        jobs,
    })
}

#[derive(Serialize)]
struct RunMetadata<'a> {
    schema_id: &'static str,
    rng: &'static str,
    instance: String,
    mechanisms: Vec<String>,
    seeds: &'a [u64],
    summary: &'a [SummaryRow],
}

fn cmd_run(args: RunArgs) -> Result<i32, CliError> {
    let plan = resolve_run(args)?;
    let instances: Vec<Instance> = plan
        .seeds
        .iter()
        .map(|&s| plan.source.build(plan.agents, plan.rounds, plan.selection, s))
        .collect::<Result<_, _>>()?;
    log::info!(
        "{} seeds x {} mechanisms on {:?}",
        plan.seeds.len(),
        plan.mechanisms.len(),
        plan.source
    );
    let jobs: Vec<(usize, usize)> = (0..plan.seeds.len())
        .flat_map(|s| (0..plan.mechanisms.len()).map(move |m| (s, m)))
        .collect();
    let work = |&(s, m): &(usize, usize)| -> Result<(TraceDocument, MetricsRow), CliError> {
        let inst = &instances[s];
        let mech = &plan.mechanisms[m];
        let out = run(mech, inst)?;
        log::info!("seed {}: {mech} finished {} rounds", plan.seeds[s], inst.rounds());
        let utilities = out.trace.realized_utilities(inst.true_demands());
        let row = MetricsRow::compute(&mech.to_string(), &utilities, &static_utility(inst), inst.endowments());
        let mut doc = TraceDocument::new(mech.clone(), inst.clone(), out);
        doc.seed = Some(plan.seeds[s]);
        doc.rng = Some(RNG_NAME.to_string());
        Ok((doc, row))
    };
    let results: Vec<(TraceDocument, MetricsRow)> = match plan.jobs {
        Some(1) => jobs.iter().map(work).collect::<Result<_, _>>()?,
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Runtime(e.to_string()))?
            .install(|| jobs.par_iter().map(work).collect::<Result<_, _>>())?,
        None => jobs.par_iter().map(work).collect::<Result<_, _>>()?,
    };

    let traces = plan.out.join("traces");
    for (doc, _) in &results {
        let stem = format!("{}_seed{}", doc.mechanism.label(), doc.seed.unwrap_or(0));
        if plan.json {
            doc.save(&traces.join(format!("{stem}.json")))?;
        }
        if plan.csv {
            write_text(&traces.join(format!("{stem}.csv")), &trace_csv(doc)?)?;
        }
    }
    for (k, seed) in plan.seeds.iter().enumerate() {
        let rows: Vec<MetricsRow> = results[k * plan.mechanisms.len()..(k + 1) * plan.mechanisms.len()]
            .iter()
            .map(|(_, r)| r.clone())
            .collect();
        write_text(&plan.out.join(format!("metrics_seed{seed}.csv")), &metrics_csv(&rows)?)?;
    }
    let summary: Vec<SummaryRow> = plan
        .mechanisms
        .iter()
        .enumerate()
        .map(|(m, mech)| {
            let rows: Vec<MetricsRow> = results
                .iter()
                .skip(m)
                .step_by(plan.mechanisms.len())
                .map(|(_, r)| r.clone())
                .collect();
            SummaryRow::aggregate(&mech.to_string(), &rows)
        })
        .collect();
    let summary_text = summary_csv(&summary)?;
    write_text(&plan.out.join("summary.csv"), &summary_text)?;
    let meta = RunMetadata {
        schema_id: "creditfair.run.v1",
        rng: RNG_NAME,
        instance: format!("{:?}", plan.source),
        mechanisms: plan.mechanisms.iter().map(ToString::to_string).collect(),
        seeds: &plan.seeds,
        summary: &summary,
    };
    write_text(&plan.out.join("run.json"), &serde_json::to_string_pretty(&meta)?)?;
    out!("{}", render_summary(&summary));
    outln!("wrote {} traces to {}", results.len(), plan.out.display());
    Ok(EXIT_OK)
}

fn render_summary(rows: &[SummaryRow]) -> String {
    let mut out = String::new();
    let cell = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.4}"));
    let _ = writeln!(
        out,
        "{:<14} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8}",
        "mechanism", "nw", "min_six", "si_viol%", "wmm", "nmm", "weq", "neq"
    );
    for r in rows {
        let _ = write!(out, "{:<14}", r.mechanism);
        for v in r.mean {
            let _ = write!(out, " {:>8}", cell(v));
        }
        out.push('\n');
    }
    out
}

fn cmd_repro(args: ReproArgs) -> Result<i32, CliError> {
    let target: ReproTarget = args.target.parse().map_err(usage)?;
    let report = repro(target);
    if args.json {
        outln!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        out!("{}", report.render());
    }
    Ok(if report.passed() { EXIT_OK } else { EXIT_VERDICT })
}

fn write_verdict<T: Serialize>(out: Option<&Path>, verdict: &T) -> Result<(), CliError> {
    if let Some(p) = out {
        write_text(p, &serde_json::to_string_pretty(verdict)?)?;
    }
    Ok(())
}

fn sp_values(inst: &Instance) -> Vec<Num> {
    let max = inst.true_demands().iter().flatten().max().cloned().unwrap_or_default();
    DeviationGrid::integers(&max).0
}

fn cmd_audit(args: AuditArgs) -> Result<i32, CliError> {
    let doc = TraceDocument::load(&args.trace).map_err(|e| usage(e.to_string()))?;
    let inst = &doc.instance;
    let out = args.out.as_deref();
    match args.mode {
        AuditMode::Explicit => {
            let report = audit_explicit(inst, &doc.trace)?;
            out!("{}", report.render_table());
            write_verdict(out, &report)?;
            Ok(if report.passed() { EXIT_OK } else { EXIT_VERDICT })
        }
        AuditMode::Refute => {
            let verdict = refute_credit_existence(inst, &doc.trace)?;
            match &verdict {
                Refutation::Refuted {
                    round,
                    condition,
                    agent,
                    other,
                    detail,
                    ..
                } => {
                    let j = other.map(|j| format!(" j = {}", j + 1)).unwrap_or_default();
                    outln!(
                        "REFUTED at round {} by {condition} (agent {}{j}): {detail}",
                        round + 1,
                        agent + 1
                    );
                }
                Refutation::Consistent { .. } => outln!("CONSISTENT: no contradiction found"),
            }
            write_verdict(out, &verdict)?;
            Ok(if verdict.is_refuted() { EXIT_VERDICT } else { EXIT_OK })
        }
        AuditMode::Osp => {
            let verdict = check_osp(&doc.mechanism, inst, &DeviationGrid::default_for(inst))?;
            match &verdict {
                OspVerdict::Pass { probes } => outln!("PASS: {probes} single-round deviations, none profitable"),
                OspVerdict::Fail(d) => outln!(
                    "FAIL: agent {} reporting {} in round {} gains {} over {}",
                    d.agent + 1,
                    d.report,
                    d.round + 1,
                    d.deviating_utility,
                    d.truthful_utility
                ),
            }
            write_verdict(out, &verdict)?;
            Ok(if verdict.passed() { EXIT_OK } else { EXIT_VERDICT })
        }
        AuditMode::Sp => {
            let agents: Vec<usize> = match args.agent {
                Some(0) => return Err(usage("agents are numbered from 1")),
                Some(a) if a > inst.agents() => {
                    return Err(usage(format!("agent {a} out of range 1..={}", inst.agents())))
                }
                Some(a) => vec![a - 1],
                None => (0..inst.agents()).collect(),
            };
            let mut probes = Vec::new();
            if let Some(s) = &args.schedule {
                let schedule: Vec<Num> = s
                    .split(',')
                    .map(|v| v.parse().map_err(|e| usage(format!("schedule: {e}"))))
                    .collect::<Result<_, _>>()?;
                for &a in &agents {
                    probes.push(sp_probe(&doc.mechanism, inst, a, &schedule).map_err(|e| usage(e.to_string()))?);
                }
            } else {
                let values = sp_values(inst);
                let space = values
                    .len()
                    .checked_pow(inst.rounds() as u32)
                    .filter(|&n| n <= SP_SEARCH_LIMIT);
                if space.is_none() {
                    return Err(usage(format!(
                        "{}^{} schedules is too many to enumerate; pass --schedule",
                        values.len(),
                        inst.rounds()
                    )));
                }
                for &a in &agents {
                    probes.push(sp_search(&doc.mechanism, inst, a, &values)?.0);
                }
            }
            let mut gain = false;
            for p in &probes {
                let sched: Vec<String> = p.schedule.iter().map(Num::to_string).collect();
                outln!(
                    "agent {}: truthful {} misreport {} delta {} schedule ({})",
                    p.agent + 1,
                    p.truthful_utility,
                    p.misreport_utility,
                    p.delta,
                    sched.join(",")
                );
                gain |= p.delta.is_positive();
            }
            write_verdict(out, &probes)?;
            Ok(if gain { EXIT_VERDICT } else { EXIT_OK })
        }
    }
}

fn cmd_gen(args: GenArgs) -> Result<i32, CliError> {
    let source = Source::parse(&args.instance)?;
    let inst = source.build(
        args.agents,
        args.rounds,
        parse_selection(args.selection.as_deref())?,
        args.seed,
    )?;
    let json = serde_json::to_string_pretty(&inst)?;
    match &args.out {
        Some(p) => {
            write_text(p, &json)?;
            outln!(
                "wrote {} agents x {} rounds (total endowment {}) to {}",
                inst.agents(),
                inst.rounds(),
                fmt_float(inst.total_endowment().to_f64()),
                p.display()
            );
        }
        None => outln!("{json}"),
    }
    Ok(EXIT_OK)
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    init_logging(cli.verbose);
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Repro(a) => cmd_repro(a),
        Command::Audit(a) => cmd_audit(a),
        Command::Gen(a) => cmd_gen(a),
    };
    match result {
        Ok(code) => code,
        Err(CliError::Usage(msg)) | Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::q;

    #[test]
    fn seeds_syntax() {
        assert_eq!(parse_seeds("0..3").unwrap(), vec![0, 1, 2]);
        assert_eq!(parse_seeds("2..=4").unwrap(), vec![2, 3, 4]);
        assert_eq!(parse_seeds("7").unwrap(), vec![7]);
        assert_eq!(parse_seeds("1, 5,9").unwrap(), vec![1, 5, 9]);
        assert!(parse_seeds("3..3").is_err());
        assert!(parse_seeds("x").is_err());
    }

    #[test]
    fn mechanism_lists() {
        let m = parse_mechanisms("lendrecoup,karma,karma:1/4", &q("1/3")).unwrap();
        assert_eq!(m[1], Mechanism::Karma { alpha: q("1/3") });
        assert_eq!(m[2], Mechanism::Karma { alpha: q("1/4") });
        assert!(parse_mechanisms("", &q("1/2")).is_err());
        assert!(parse_mechanisms("fifo", &q("1/2")).is_err());
    }

    #[test]
    fn flags_override_config() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("exp.cfg");
        std::fs::write(&cfg, "agents = 7\nrounds = 9\nmechanisms = smmf\n").unwrap();
        let plan = resolve_run(RunArgs {
            config: Some(cfg.clone()),
            rounds: Some(11),
            ..RunArgs::default()
        })
        .unwrap();
        assert_eq!((plan.agents, plan.rounds), (Some(7), Some(11)));
        assert_eq!(plan.mechanisms, vec![Mechanism::Smmf]);
        assert_eq!(plan.seeds, vec![0]);

        std::fs::write(&cfg, "colour = blue\n").unwrap();
        let err = resolve_run(RunArgs {
            config: Some(cfg),
            ..RunArgs::default()
        });
        assert!(matches!(err, Err(CliError::Usage(_))));
    }

    #[test]
    fn alpha_must_be_in_unit_interval() {
        let err = resolve_run(RunArgs {
            alpha: Some("3/2".into()),
            ..RunArgs::default()
        });
        assert!(matches!(err, Err(CliError::Usage(_))));
    }
}
