//! Golden reproductions of the hand-worked examples, shared by the CLI
//! `repro` command and the test suites.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::credit_audit::{audit_explicit, refute_credit_existence, sp_probe, Condition, Refutation};
use crate::mechanisms::{bookkeeping_ledger, run, Mechanism};
use crate::model::{is_pareto_efficient, Instance};
use crate::num::Num;
use crate::workloads::builtin_instance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReproTarget {
    All,
    Motivating,
    SmmfUnfair,
    MisreportGain,
    StaticCf,
}

impl ReproTarget {
    pub const EACH: [ReproTarget; 4] = [
        ReproTarget::Motivating,
        ReproTarget::SmmfUnfair,
        ReproTarget::MisreportGain,
        ReproTarget::StaticCf,
    ];
}

impl FromStr for ReproTarget {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "all" => Ok(ReproTarget::All),
            "motivating" | "motivating_example" => Ok(ReproTarget::Motivating),
            "smmf_unfair" => Ok(ReproTarget::SmmfUnfair),
            "misreport_gain" => Ok(ReproTarget::MisreportGain),
            "static_cf" | "static" => Ok(ReproTarget::StaticCf),
            other => Err(format!(
                "unknown repro target `{other}` (expected all, motivating, smmf_unfair, misreport_gain, static_cf)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub expected: String,
    pub actual: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ReproReport {
    pub checks: Vec<Check>,
}

impl ReproReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, name: impl Into<String>, expected: impl fmt::Display, actual: impl fmt::Display) {
        let (expected, actual) = (expected.to_string(), actual.to_string());
        self.checks.push(Check {
            name: name.into(),
            passed: expected == actual,
            expected,
            actual,
        });
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            let _ = writeln!(out, "{tag} {}: expected {}, got {}", c.name, c.expected, c.actual);
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        let _ = writeln!(out, "{} checks, {} failed", self.checks.len(), failed);
        out
    }
}

fn row(v: &[Num]) -> String {
    let items: Vec<String> = v.iter().map(Num::to_string).collect();
    format!("({})", items.join(","))
}

fn rows(m: &[Vec<Num>]) -> String {
    m.iter().map(|r| row(r)).collect::<Vec<_>>().join(" ")
}

fn ints(v: &[i64]) -> Vec<Num> {
    v.iter().map(|&x| Num::from(x)).collect()
}

fn table(m: &[&[i64]]) -> String {
    rows(&m.iter().map(|r| ints(r)).collect::<Vec<_>>())
}

fn instance(name: &str) -> Instance {
    builtin_instance(name).expect("built-in instance")
}

fn mech_error(report: &mut ReproReport, name: &str, err: impl fmt::Display) {
    report.push(name, "ok", format!("error: {err}"));
}

fn motivating(report: &mut ReproReport) {
    let inst = instance("motivating_example");
    match run(&Mechanism::Smmf, &inst) {
        Ok(out) => report.push(
            "motivating/smmf utilities",
            row(&ints(&[4, 4, 1])),
            row(&out.trace.final_utilities(inst.agents())),
        ),
        Err(e) => mech_error(report, "motivating/smmf", e),
    }
    match run(&Mechanism::LendRecoup, &inst) {
        Ok(out) => {
            report.push(
                "motivating/lendrecoup allocations",
                rows(
                    &[ints(&[3, 3, 0]), ints(&[3, 3, 0]), ints(&[0, 0, 6])]
                        .map(|r| r.iter().map(|x| x / Num::from(2)).collect::<Vec<_>>()),
                ),
                rows(&out.trace.allocations),
            );
            report.push(
                "motivating/lendrecoup utilities",
                row(&ints(&[3, 3, 3])),
                row(&out.trace.final_utilities(inst.agents())),
            );
            let audit = audit_explicit(&inst, &out.trace).map(|r| if r.passed() { "PASS" } else { "FAIL" });
            report.push("motivating/lendrecoup credit audit", "PASS", audit.unwrap_or("error"));
            let pe = is_pareto_efficient(&inst, &out.trace).map(|v| if v.passed() { "PASS" } else { "FAIL" });
            report.push("motivating/lendrecoup pareto efficiency", "PASS", pe.unwrap_or("error"));
        }
        Err(e) => mech_error(report, "motivating/lendrecoup", e),
    }
}

fn smmf_unfair(report: &mut ReproReport) {
    let inst = instance("smmf_unfair");
    let smmf = match run(&Mechanism::Smmf, &inst) {
        Ok(out) => out,
        Err(e) => return mech_error(report, "smmf_unfair/smmf", e),
    };
    report.push(
        "smmf_unfair/smmf allocations",
        table(&[&[0, 2], &[1, 1]]),
        rows(&smmf.trace.allocations),
    );
    match run(&Mechanism::Dmmf, &inst) {
        Ok(out) => report.push(
            "smmf_unfair/dmmf allocations",
            table(&[&[0, 2], &[2, 0]]),
            rows(&out.trace.allocations),
        ),
        Err(e) => mech_error(report, "smmf_unfair/dmmf", e),
    }
    let verdict = match refute_credit_existence(&inst, &smmf.trace) {
        Ok(Refutation::Refuted {
            round,
            condition,
            agent,
            other,
            ..
        }) => format!(
            "REFUTED round {} {} agent {} j {}",
            round + 1,
            condition,
            agent + 1,
            other.map_or("-".to_string(), |j| (j + 1).to_string())
        ),
        Ok(Refutation::Consistent { .. }) => "CONSISTENT".to_string(),
        Err(e) => format!("error: {e}"),
    };
    report.push(
        "smmf_unfair/smmf refutation",
        "REFUTED round 2 CF5 agent 1 j 2",
        verdict,
    );

    let mut forced = smmf.trace.clone();
    forced.credits = Some(bookkeeping_ledger(inst.endowments(), &forced.allocations));
    let first_fail = audit_explicit(&inst, &forced).map(|r| {
        r.failures()
            .next()
            .map(|f| format!("FAIL {} round {}", f.condition, f.round + 1))
            .unwrap_or_else(|| "PASS".to_string())
    });
    report.push(
        "smmf_unfair/smmf with bookkeeping ledger",
        format!("FAIL {} round 2", Condition::Cf5),
        first_fail.unwrap_or_else(|e| format!("error: {e}")),
    );
}

fn misreport_gain(report: &mut ReproReport) {
    let inst = instance("misreport_gain");
    match run(&Mechanism::LendRecoup, &inst) {
        Ok(out) => {
            report.push(
                "misreport_gain/lendrecoup allocations",
                table(&[&[1, 2, 0], &[1, 0, 2], &[0, 1, 2], &[0, 1, 2], &[2, 1, 0]]),
                rows(&out.trace.allocations),
            );
            let credits = out.trace.credits.as_ref().map(|c| rows(&c[..5])).unwrap_or_default();
            report.push(
                "misreport_gain/lendrecoup credits at round start",
                table(&[&[0, 0, 0], &[0, -1, 1], &[0, 0, 0], &[1, 0, -1], &[2, 0, -2]]),
                credits,
            );
        }
        Err(e) => mech_error(report, "misreport_gain/lendrecoup", e),
    }
    let schedule = ints(&[0, 2, 0, 0, 3]);
    match sp_probe(&Mechanism::LendRecoup, &inst, 0, &schedule) {
        Ok(p) => {
            report.push(
                "misreport_gain/agent 1 truthful utility",
                Num::from(4),
                &p.truthful_utility,
            );
            report.push(
                "misreport_gain/agent 1 misreport utility",
                Num::ratio(9, 2),
                &p.misreport_utility,
            );
        }
        Err(e) => mech_error(report, "misreport_gain/misreport", e),
    }
    let lie = instance("misreport_gain_lie");
    match run(&Mechanism::LendRecoup, &lie) {
        Ok(out) => report.push(
            "misreport_gain/misreport allocations",
            rows(&[
                ints(&[0, 3, 0]),
                vec![Num::ratio(3, 2), Num::zero(), Num::ratio(3, 2)],
                ints(&[0, 1, 2]),
                ints(&[0, 1, 2]),
                ints(&[3, 0, 0]),
            ]),
            rows(&out.trace.allocations),
        ),
        Err(e) => mech_error(report, "misreport_gain/misreport", e),
    }
}

/// Seeded small instances: `n <= 5` agents, `T <= 8` rounds, integer
/// endowments in `1..=3` and integer demands in `0..=6`.
pub fn random_small_instance(rng: &mut ChaCha8Rng, max_agents: usize, max_rounds: usize, max_demand: i64) -> Instance {
    let n = rng.gen_range(1..=max_agents);
    let t = rng.gen_range(1..=max_rounds);
    let e = (0..n).map(|_| Num::from(rng.gen_range(1..=3))).collect();
    let d = (0..t)
        .map(|_| (0..n).map(|_| Num::from(rng.gen_range(0..=max_demand))).collect())
        .collect();
    Instance::new(e, d).expect("generated instance is valid")
}

fn static_cf(report: &mut ReproReport) {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5747);
    let mut insts: Vec<Instance> = ["motivating_example", "smmf_unfair", "misreport_gain"]
        .iter()
        .map(|n| instance(n))
        .collect();
    insts.extend((0..200).map(|_| random_small_instance(&mut rng, 5, 8, 6)));
    let failures = insts
        .iter()
        .filter(|inst| {
            run(&Mechanism::Static, inst)
                .ok()
                .and_then(|out| audit_explicit(inst, &out.trace).ok())
                .is_none_or(|r| !r.passed())
        })
        .count();
    report.push(
        format!("static_cf/static passes credit audit on {} instances", insts.len()),
        "0 failures",
        format!("{failures} failures"),
    );
}

pub fn repro(target: ReproTarget) -> ReproReport {
    let mut report = ReproReport::default();
    let targets: &[ReproTarget] = if target == ReproTarget::All {
        &ReproTarget::EACH
    } else {
        std::slice::from_ref(&target)
    };
    for t in targets {
        match t {
            ReproTarget::Motivating => motivating(&mut report),
            ReproTarget::SmmfUnfair => smmf_unfair(&mut report),
            ReproTarget::MisreportGain => misreport_gain(&mut report),
            ReproTarget::StaticCf => static_cf(&mut report),
            ReproTarget::All => unreachable!(),
        }
    }
    report
}
