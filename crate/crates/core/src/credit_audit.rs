//! Credit-fairness auditing.
//!
//! Three tools:
//!
//! * [`audit_explicit`] evaluates the five credit-fairness conditions against
//!   a trace that carries its own ledger.
//! * [`refute_credit_existence`] tries to prove that *no* ledger can make a
//!   Pareto-efficient trace credit fair. It propagates a per-agent interval
//!   `[lower, upper]` for each balance. The box always contains every
//!   feasible ledger, so an empty interval is a proof; surviving the sweep
//!   proves nothing.
//! * [`check_osp`] and [`sp_probe`] replay a mechanism under misreports.
//!
//! Conditions, with `u'` utility against reports and `dc = c_{t+1} - c_t`:
//!
//! 1. `min(0, e - u') <= dc <= max(0, e - u')`
//! 2. if `sum_{j != i} u'_j > E_{-i}` then `dc_i >= sum_{j != i} u'_j - E_{-i}`
//! 3. `sum_i dc_i <= 0`
//! 4. `a_i >= min(d'_i, e_i + min(0, c_i))`
//! 5. if some `a_j > max(0, e_j + c_j)` then every `i` has `a_i >= d'_i` or `a_i >= e_i + c_i`

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mechanisms::{replay_states, Mechanism, MechanismError};
use crate::model::{check_shape, is_pareto_efficient, utility, AllocationTrace, Instance, ModelError, PeVerdict};
use crate::num::Num;

#[derive(Debug, Error)]
pub enum AuditError {
    #[error("trace carries no credit ledger")]
    MissingCredits,
    #[error("credit ledger has {got} rows, expected {expected}")]
    CreditRows { got: usize, expected: usize },
    #[error("credit ledger row 0 must be all zeros")]
    NonZeroInitialCredits,
    #[error("trace is not Pareto efficient (round {round}, agent {agent}); refutation requires PE")]
    NotParetoEfficient { round: usize, agent: usize },
    #[error("misreport schedule has {got} entries, instance has {expected} rounds")]
    ScheduleLength { got: usize, expected: usize },
    #[error("agent {agent} out of range for {agents} agents")]
    AgentOutOfRange { agent: usize, agents: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Mechanism(#[from] MechanismError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Condition {
    #[serde(rename = "CF1")]
    Cf1,
    #[serde(rename = "CF2")]
    Cf2,
    #[serde(rename = "CF3")]
    Cf3,
    #[serde(rename = "CF4")]
    Cf4,
    #[serde(rename = "CF5")]
    Cf5,
}

impl Condition {
    pub const ALL: [Condition; 5] = [
        Condition::Cf1,
        Condition::Cf2,
        Condition::Cf3,
        Condition::Cf4,
        Condition::Cf5,
    ];
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = match self {
            Condition::Cf1 => 1,
            Condition::Cf2 => 2,
            Condition::Cf3 => 3,
            Condition::Cf4 => 4,
            Condition::Cf5 => 5,
        };
        write!(f, "CF{n}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub round: usize,
    /// `None` for the round-level CF3 check.
    pub agent: Option<usize>,
    /// CF5's triggering agent `j`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub other: Option<usize>,
    pub condition: Condition,
    pub verdict: Verdict,
    pub witness: BTreeMap<String, Num>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditReport {
    pub overall: Verdict,
    pub entries: Vec<AuditEntry>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.overall == Verdict::Pass
    }

    pub fn failures(&self) -> impl Iterator<Item = &AuditEntry> {
        self.entries.iter().filter(|e| e.verdict == Verdict::Fail)
    }

    pub fn count(&self, condition: Condition, verdict: Verdict) -> usize {
        self.entries
            .iter()
            .filter(|e| e.condition == condition && e.verdict == verdict)
            .count()
    }

    /// Per-condition pass/fail/n.a. table followed by the failures (1-based).
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<5} {:>8} {:>8} {:>8}", "cond", "pass", "fail", "n/a");
        for c in Condition::ALL {
            let _ = writeln!(
                out,
                "{:<5} {:>8} {:>8} {:>8}",
                c.to_string(),
                self.count(c, Verdict::Pass),
                self.count(c, Verdict::Fail),
                self.count(c, Verdict::NotApplicable)
            );
        }
        for e in self.failures() {
            let agent = e.agent.map_or("-".to_string(), |a| (a + 1).to_string());
            let _ = write!(out, "FAIL {} round {} agent {}", e.condition, e.round + 1, agent);
            if let Some(j) = e.other {
                let _ = write!(out, " (j = {})", j + 1);
            }
            for (k, v) in &e.witness {
                let _ = write!(out, " {k}={v}");
            }
            out.push('\n');
        }
        let _ = writeln!(out, "overall: {:?}", self.overall);
        out
    }
}

fn witness(pairs: &[(&str, &Num)]) -> BTreeMap<String, Num> {
    pairs.iter().map(|(k, v)| (k.to_string(), (*v).clone())).collect()
}

fn check_ledger(instance: &Instance, trace: &AllocationTrace) -> Result<(), AuditError> {
    check_shape(instance, &trace.allocations)?;
    let credits = trace.credits.as_ref().ok_or(AuditError::MissingCredits)?;
    if credits.len() != instance.rounds() + 1 {
        return Err(AuditError::CreditRows {
            got: credits.len(),
            expected: instance.rounds() + 1,
        });
    }
    if credits.iter().any(|r| r.len() != instance.agents()) {
        return Err(ModelError::ShapeMismatch {
            got_rounds: credits.len(),
            got_agents: credits
                .iter()
                .map(Vec::len)
                .find(|&l| l != instance.agents())
                .unwrap_or(0),
            rounds: instance.rounds() + 1,
            agents: instance.agents(),
        }
        .into());
    }
    if credits[0].iter().any(|c| !c.is_zero()) {
        return Err(AuditError::NonZeroInitialCredits);
    }
    Ok(())
}

/// Evaluates CF1-CF5 at every round against the trace's own ledger.
pub fn audit_explicit(instance: &Instance, trace: &AllocationTrace) -> Result<AuditReport, AuditError> {
    check_ledger(instance, trace)?;
    let credits = trace.credits.as_ref().expect("checked");
    let e = instance.endowments();
    let total = instance.total_endowment();
    let n = instance.agents();
    let zero = Num::zero();
    let mut entries = Vec::with_capacity(instance.rounds() * (4 * n + 1));

    for (t, (a, d)) in trace.allocations.iter().zip(instance.demands()).enumerate() {
        let c = &credits[t];
        let dc: Vec<Num> = credits[t + 1].iter().zip(c).map(|(next, cur)| next - cur).collect();
        let u: Vec<Num> = a.iter().zip(d).map(|(a, d)| utility(a, d)).collect();
        let u_sum: Num = u.iter().sum();

        for i in 0..n {
            let slack = &e[i] - &u[i];
            let lo = Num::min_of(&zero, &slack);
            let hi = Num::max_of(&zero, &slack);
            let ok = lo <= dc[i] && dc[i] <= hi;
            entries.push(AuditEntry {
                round: t,
                agent: Some(i),
                other: None,
                condition: Condition::Cf1,
                verdict: if ok { Verdict::Pass } else { Verdict::Fail },
                witness: witness(&[("delta_c", &dc[i]), ("lower", &lo), ("upper", &hi)]),
            });
        }

        for i in 0..n {
            let others_u = &u_sum - &u[i];
            let others_e = &total - &e[i];
            let (verdict, w) = if others_u > others_e {
                let need = &others_u - &others_e;
                let ok = dc[i] >= need;
                (
                    if ok { Verdict::Pass } else { Verdict::Fail },
                    witness(&[("delta_c", &dc[i]), ("required", &need)]),
                )
            } else {
                (
                    Verdict::NotApplicable,
                    witness(&[("others_utility", &others_u), ("others_endowment", &others_e)]),
                )
            };
            entries.push(AuditEntry {
                round: t,
                agent: Some(i),
                other: None,
                condition: Condition::Cf2,
                verdict,
                witness: w,
            });
        }

        let dc_sum: Num = dc.iter().sum();
        entries.push(AuditEntry {
            round: t,
            agent: None,
            other: None,
            condition: Condition::Cf3,
            verdict: if dc_sum <= zero { Verdict::Pass } else { Verdict::Fail },
            witness: witness(&[("sum_delta_c", &dc_sum)]),
        });

        for i in 0..n {
            let floor = Num::min_of(&d[i], &(&e[i] + &Num::min_of(&zero, &c[i])));
            let ok = a[i] >= floor;
            entries.push(AuditEntry {
                round: t,
                agent: Some(i),
                other: None,
                condition: Condition::Cf4,
                verdict: if ok { Verdict::Pass } else { Verdict::Fail },
                witness: witness(&[("allocation", &a[i]), ("guarantee", &floor), ("credit", &c[i])]),
            });
        }

        let trigger = (0..n).find(|&j| a[j] > Num::max_of(&zero, &(&e[j] + &c[j])));
        for i in 0..n {
            let adjusted = &e[i] + &c[i];
            let (verdict, other) = match trigger {
                None => (Verdict::NotApplicable, None),
                Some(j) => {
                    let ok = a[i] >= d[i] || a[i] >= adjusted;
                    (if ok { Verdict::Pass } else { Verdict::Fail }, Some(j))
                }
            };
            entries.push(AuditEntry {
                round: t,
                agent: Some(i),
                other,
                condition: Condition::Cf5,
                verdict,
                witness: witness(&[
                    ("allocation", &a[i]),
                    ("report", &d[i]),
                    ("adjusted_endowment", &adjusted),
                ]),
            });
        }
    }

    let overall = if entries.iter().any(|e| e.verdict == Verdict::Fail) {
        Verdict::Fail
    } else {
        Verdict::Pass
    };
    Ok(AuditReport { overall, entries })
}

/// Interval enclosure of every feasible balance at the start of a round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CreditBounds {
    pub lower: Vec<Num>,
    pub upper: Vec<Num>,
}

impl CreditBounds {
    fn zeros(n: usize) -> Self {
        CreditBounds {
            lower: vec![Num::zero(); n],
            upper: vec![Num::zero(); n],
        }
    }

    fn empty_agent(&self) -> Option<usize> {
        self.lower.iter().zip(&self.upper).position(|(l, u)| l > u)
    }

    fn tighten_upper(&mut self, i: usize, v: Num) -> bool {
        if v < self.upper[i] {
            self.upper[i] = v;
            true
        } else {
            false
        }
    }

    fn tighten_lower(&mut self, i: usize, v: Num) -> bool {
        if v > self.lower[i] {
            self.lower[i] = v;
            true
        } else {
            false
        }
    }

    /// Balances always sum to at most zero, so `c_i <= -sum_{j != i} lower_j`.
    fn couple_sum(&mut self) -> bool {
        let total: Num = self.lower.iter().sum();
        let mut changed = false;
        for i in 0..self.lower.len() {
            let cap = -(&total - &self.lower[i]);
            changed |= self.tighten_upper(i, cap);
        }
        changed
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Refutation {
    /// No credit system can satisfy CF1-CF5 on this trace.
    Refuted {
        round: usize,
        condition: Condition,
        agent: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        other: Option<usize>,
        detail: String,
        bounds: CreditBounds,
    },
    /// The interval relaxation found no contradiction; not a proof of fairness.
    Consistent { bounds: Vec<CreditBounds> },
}

impl Refutation {
    pub fn is_refuted(&self) -> bool {
        matches!(self, Refutation::Refuted { .. })
    }
}

struct Context<'a> {
    round: usize,
    a: &'a [Num],
    d: &'a [Num],
    e: &'a [Num],
}

impl Context<'_> {
    fn refuted(
        &self,
        condition: Condition,
        agent: usize,
        other: Option<usize>,
        detail: String,
        bounds: &CreditBounds,
    ) -> Refutation {
        Refutation::Refuted {
            round: self.round,
            condition,
            agent,
            other,
            detail,
            bounds: bounds.clone(),
        }
    }

    fn underserved(&self, i: usize) -> bool {
        self.a[i] < self.d[i]
    }

    /// `j` exceeds its credit-adjusted endowment for every balance in the box.
    fn certain_trigger(&self, b: &CreditBounds, j: usize) -> bool {
        self.a[j] > Num::max_of(&Num::zero(), &(&self.e[j] + &b.upper[j]))
    }

    /// `i` misses both CF5 escape clauses for every balance in the box.
    fn certain_violation(&self, b: &CreditBounds, i: usize) -> bool {
        self.underserved(i) && self.a[i] < &self.e[i] + &b.lower[i]
    }

    /// CF4 and CF5 constraints on the balances at the start of the round.
    fn tighten_start(&self, b: &mut CreditBounds) -> Option<Refutation> {
        let n = self.a.len();
        for i in 0..n {
            // a_i < min(d'_i, e_i) forces e_i + c_i <= a_i.
            if self.underserved(i) && self.a[i] < self.e[i] {
                b.tighten_upper(i, &self.a[i] - &self.e[i]);
                if b.lower[i] > b.upper[i] {
                    let detail = format!(
                        "allocation {} below min(report {}, endowment {}) needs credit <= {}, but credit >= {}",
                        self.a[i], self.d[i], self.e[i], b.upper[i], b.lower[i]
                    );
                    return Some(self.refuted(Condition::Cf4, i, None, detail, b));
                }
            }
        }

        for _ in 0..(4 * n + 4) {
            let mut changed = b.couple_sum();
            if let Some(i) = b.empty_agent() {
                let detail = format!(
                    "balances must sum to <= 0 but lower bounds force {} > {}",
                    b.lower[i], b.upper[i]
                );
                return Some(self.refuted(Condition::Cf3, i, None, detail, b));
            }
            let trigger = (0..n).find(|&j| self.certain_trigger(b, j));
            let victim = (0..n).find(|&i| self.certain_violation(b, i));
            if let (Some(j), Some(i)) = (trigger, victim) {
                let detail = format!(
                    "agent {} gets {} > max(0, e + c) for every c <= {}; agent {} gets {} < report {} and < e + c for every c >= {}",
                    j + 1,
                    self.a[j],
                    b.upper[j],
                    i + 1,
                    self.a[i],
                    self.d[i],
                    b.lower[i]
                );
                return Some(self.refuted(Condition::Cf5, i, Some(j), detail, b));
            }
            if trigger.is_some() {
                for i in (0..n).filter(|&i| self.underserved(i)) {
                    changed |= b.tighten_upper(i, &self.a[i] - &self.e[i]);
                }
            }
            if victim.is_some() {
                for j in (0..n).filter(|&j| self.a[j].is_positive()) {
                    changed |= b.tighten_lower(j, &self.a[j] - &self.e[j]);
                }
            }
            if let Some(i) = b.empty_agent() {
                let detail = format!(
                    "CF5 forces credit of agent {} into [{}, {}]",
                    i + 1,
                    b.lower[i],
                    b.upper[i]
                );
                return Some(self.refuted(Condition::Cf5, i, trigger, detail, b));
            }
            if !changed {
                break;
            }
        }
        None
    }
}

/// Sound refutation of credit fairness for a Pareto-efficient trace.
///
/// Shortage rounds (`sum d' > E`) force `dc = e - a`. Other rounds intersect
/// the CF1 interval with the CF2 floor and couple uppers through CF3. CF4 and
/// CF5 then tighten the balances at the start of each round, taking the
/// interpretation most favorable to the mechanism.
pub fn refute_credit_existence(instance: &Instance, trace: &AllocationTrace) -> Result<Refutation, AuditError> {
    if let PeVerdict::Fail { round, agent, .. } = is_pareto_efficient(instance, trace)? {
        return Err(AuditError::NotParetoEfficient { round, agent });
    }
    let n = instance.agents();
    let e = instance.endowments();
    let total = instance.total_endowment();
    let zero = Num::zero();
    let mut bounds = CreditBounds::zeros(n);
    let mut history = vec![bounds.clone()];

    for (t, (a, d)) in trace.allocations.iter().zip(instance.demands()).enumerate() {
        let ctx = Context { round: t, a, d, e };
        if let Some(r) = ctx.tighten_start(&mut bounds) {
            return Ok(r);
        }
        *history.last_mut().expect("nonempty") = bounds.clone();

        let shortage = d.iter().sum::<Num>() > total;
        let (lo, hi): (Vec<Num>, Vec<Num>) = if shortage {
            let forced: Vec<Num> = e.iter().zip(a).map(|(e, a)| e - a).collect();
            (forced.clone(), forced)
        } else {
            let u: Vec<Num> = a.iter().zip(d).map(|(a, d)| utility(a, d)).collect();
            let u_sum: Num = u.iter().sum();
            let mut lo = Vec::with_capacity(n);
            let mut hi = Vec::with_capacity(n);
            for i in 0..n {
                let slack = &e[i] - &u[i];
                let mut l = Num::min_of(&zero, &slack);
                let h = Num::max_of(&zero, &slack);
                let lent = &(&u_sum - &u[i]) - &(&total - &e[i]);
                if lent.is_positive() {
                    l = Num::max_of(&l, &lent);
                }
                if l > h {
                    let detail = format!("CF2 needs delta >= {l} but CF1 caps it at {h}");
                    return Ok(ctx.refuted(Condition::Cf2, i, None, detail, &bounds));
                }
                lo.push(l);
                hi.push(h);
            }
            let lo_sum: Num = lo.iter().sum();
            if lo_sum.is_positive() {
                let i = lo.iter().position(Num::is_positive).unwrap_or(0);
                let detail = format!("lower bounds on credit changes sum to {lo_sum} > 0");
                return Ok(ctx.refuted(Condition::Cf3, i, None, detail, &bounds));
            }
            for i in 0..n {
                let cap = -(&lo_sum - &lo[i]);
                if cap < hi[i] {
                    hi[i] = cap;
                }
            }
            (lo, hi)
        };

        for i in 0..n {
            bounds.lower[i] += &lo[i];
            bounds.upper[i] += &hi[i];
        }
        bounds.couple_sum();
        if let Some(i) = bounds.empty_agent() {
            let detail = format!(
                "credit of agent {} after round {} must lie in empty [{}, {}]",
                i + 1,
                t + 1,
                bounds.lower[i],
                bounds.upper[i]
            );
            return Ok(ctx.refuted(Condition::Cf3, i, None, detail, &bounds));
        }
        history.push(bounds.clone());
    }
    Ok(Refutation::Consistent { bounds: history })
}

/// Alternative round-`t` reports tried by [`check_osp`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviationGrid(pub Vec<Num>);

impl DeviationGrid {
    /// `0, 1/2, 1, ..., max` (max rounded up to an integer).
    pub fn half_integers(max: &Num) -> Self {
        let top = max.ceil();
        let mut v = Vec::new();
        let mut x = Num::zero();
        let half = Num::ratio(1, 2);
        while x <= top {
            v.push(x.clone());
            x += &half;
        }
        DeviationGrid(v)
    }

    pub fn integers(max: &Num) -> Self {
        let top = max.ceil();
        let mut v = Vec::new();
        let mut x = Num::zero();
        while x <= top {
            v.push(x.clone());
            x += Num::one();
        }
        DeviationGrid(v)
    }

    /// Half-integers from 0 to one above the largest demand in the instance.
    pub fn default_for(instance: &Instance) -> Self {
        let max = instance
            .demands()
            .iter()
            .chain(instance.true_demands())
            .flatten()
            .max()
            .cloned()
            .unwrap_or_else(Num::zero);
        Self::half_integers(&(max + Num::one()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Deviation {
    pub agent: usize,
    pub round: usize,
    pub report: Num,
    pub truthful_utility: Num,
    pub deviating_utility: Num,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum OspVerdict {
    Pass { probes: usize },
    Fail(Deviation),
}

impl OspVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, OspVerdict::Pass { .. })
    }
}

/// Reports where `agent` tells the truth and everyone else keeps their reports.
fn truthful_for(instance: &Instance, agent: usize) -> Vec<Vec<Num>> {
    instance
        .demands()
        .iter()
        .zip(instance.true_demands())
        .map(|(r, d)| {
            let mut row = r.clone();
            row[agent] = d[agent].clone();
            row
        })
        .collect()
}

/// Online strategyproofness probe: for every agent and round, replay the
/// truthful history and try every grid report in that round alone.
pub fn check_osp(mechanism: &Mechanism, instance: &Instance, grid: &DeviationGrid) -> Result<OspVerdict, AuditError> {
    let mut probes = 0;
    for agent in 0..instance.agents() {
        let reports = truthful_for(instance, agent);
        let states = replay_states(mechanism, instance.endowments(), &reports)?;
        for (t, row) in reports.iter().enumerate() {
            let truth = &instance.true_demands()[t][agent];
            let honest = mechanism.step(&states[t], row)?;
            let honest_u = utility(&honest.allocations[agent], truth);
            for r in grid.0.iter().filter(|r| *r != truth) {
                let mut lie = row.clone();
                lie[agent] = r.clone();
                let dev = mechanism.step(&states[t], &lie)?;
                let dev_u = utility(&dev.allocations[agent], truth);
                probes += 1;
                if dev_u > honest_u {
                    return Ok(OspVerdict::Fail(Deviation {
                        agent,
                        round: t,
                        report: r.clone(),
                        truthful_utility: honest_u,
                        deviating_utility: dev_u,
                    }));
                }
            }
        }
    }
    Ok(OspVerdict::Pass { probes })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpProbe {
    pub agent: usize,
    pub schedule: Vec<Num>,
    /// Utilities against true demands.
    pub truthful_utility: Num,
    pub misreport_utility: Num,
    pub delta: Num,
}

/// Runs the mechanism twice, once with `agent` truthful and once following
/// `schedule`, and compares `agent`'s true-demand utility.
pub fn sp_probe(
    mechanism: &Mechanism,
    instance: &Instance,
    agent: usize,
    schedule: &[Num],
) -> Result<SpProbe, AuditError> {
    if agent >= instance.agents() {
        return Err(AuditError::AgentOutOfRange {
            agent,
            agents: instance.agents(),
        });
    }
    if schedule.len() != instance.rounds() {
        return Err(AuditError::ScheduleLength {
            got: schedule.len(),
            expected: instance.rounds(),
        });
    }
    let truth = truthful_for(instance, agent);
    let mut lie = truth.clone();
    for (row, r) in lie.iter_mut().zip(schedule) {
        row[agent] = r.clone();
    }
    let realized = |reports: Vec<Vec<Num>>| -> Result<Num, AuditError> {
        let inst = instance.with_reports(reports)?;
        let out = crate::mechanisms::run(mechanism, &inst)?;
        Ok(out.trace.realized_utilities(instance.true_demands())[agent].clone())
    };
    let truthful_utility = realized(truth)?;
    let misreport_utility = realized(lie)?;
    Ok(SpProbe {
        agent,
        schedule: schedule.to_vec(),
        delta: &misreport_utility - &truthful_utility,
        truthful_utility,
        misreport_utility,
    })
}

/// Tries every schedule in `values^T` for `agent`; returns the most
/// profitable probe (first found on ties) and the number of schedules tried.
pub fn sp_search(
    mechanism: &Mechanism,
    instance: &Instance,
    agent: usize,
    values: &[Num],
) -> Result<(SpProbe, usize), AuditError> {
    let rounds = instance.rounds();
    let truthful: Vec<Num> = instance.true_demands().iter().map(|r| r[agent].clone()).collect();
    let mut best = sp_probe(mechanism, instance, agent, &truthful)?;
    let mut tried = 1;
    if values.is_empty() {
        return Ok((best, tried));
    }
    let mut idx = vec![0usize; rounds];
    loop {
        let schedule: Vec<Num> = idx.iter().map(|&k| values[k].clone()).collect();
        let probe = sp_probe(mechanism, instance, agent, &schedule)?;
        tried += 1;
        if probe.delta > best.delta {
            best = probe;
        }
        // Odometer increment.
        let mut pos = 0;
        while pos < rounds {
            idx[pos] += 1;
            if idx[pos] < values.len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
        if pos == rounds {
            break;
        }
    }
    Ok((best, tried))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::{bookkeeping_ledger, run};
    use crate::num::{ints, q, qs};

    fn inst(e: &[i64], rows: &[&[i64]]) -> Instance {
        Instance::new(ints(e), rows.iter().map(|r| ints(r)).collect()).unwrap()
    }

    fn smmf_unfair() -> Instance {
        inst(&[1, 1], &[&[0, 2], &[2, 2]])
    }

    #[test]
    fn lendrecoup_motivating_passes() {
        let i = inst(&[1, 1, 1], &[&[2, 2, 0], &[2, 2, 0], &[2, 2, 6]]);
        let out = run(&Mechanism::LendRecoup, &i).unwrap();
        let rep = audit_explicit(&i, &out.trace).unwrap();
        assert!(rep.passed(), "{}", rep.render_table());
        assert_eq!(rep.entries.len(), 3 * (4 * 3 + 1));
    }

    #[test]
    fn static_passes() {
        let i = inst(&[1, 2], &[&[3, 0], &[0, 5], &[1, 1]]);
        let out = run(&Mechanism::Static, &i).unwrap();
        assert!(audit_explicit(&i, &out.trace).unwrap().passed());
    }

    #[test]
    fn smmf_smmf_unfair_forced_ledger_fails_cf5() {
        let i = smmf_unfair();
        let mut trace = run(&Mechanism::Smmf, &i).unwrap().trace;
        let ledger = bookkeeping_ledger(i.endowments(), &trace.allocations);
        assert_eq!(ledger[1], ints(&[1, -1]));
        trace.credits = Some(ledger);
        let rep = audit_explicit(&i, &trace).unwrap();
        assert!(!rep.passed());
        let fails: Vec<_> = rep.failures().collect();
        assert_eq!(fails.len(), 1);
        assert_eq!(fails[0].condition, Condition::Cf5);
        assert_eq!((fails[0].round, fails[0].agent, fails[0].other), (1, Some(0), Some(1)));
        assert!(rep.render_table().contains("FAIL CF5 round 2 agent 1 (j = 2)"));
    }

    #[test]
    fn ledger_shape_errors() {
        let i = smmf_unfair();
        let mut trace = run(&Mechanism::Smmf, &i).unwrap().trace;
        assert!(matches!(audit_explicit(&i, &trace), Err(AuditError::MissingCredits)));
        trace.credits = Some(vec![ints(&[0, 0])]);
        assert!(matches!(audit_explicit(&i, &trace), Err(AuditError::CreditRows { .. })));
        trace.credits = Some(vec![ints(&[1, 0]), ints(&[0, 0]), ints(&[0, 0])]);
        assert!(matches!(
            audit_explicit(&i, &trace),
            Err(AuditError::NonZeroInitialCredits)
        ));
    }

    #[test]
    fn refutes_smmf_on_smmf_unfair() {
        let i = smmf_unfair();
        let trace = run(&Mechanism::Smmf, &i).unwrap().trace;
        match refute_credit_existence(&i, &trace).unwrap() {
            Refutation::Refuted {
                round,
                condition,
                agent,
                other,
                ..
            } => {
                assert_eq!((round, condition, agent, other), (1, Condition::Cf5, 0, Some(1)));
            }
            other => panic!("expected refutation, got {other:?}"),
        }
    }

    #[test]
    fn lendrecoup_misreport_gain_is_consistent_with_pinned_bounds() {
        let i = inst(
            &[1, 1, 1],
            &[&[1, 3, 0], &[2, 0, 2], &[0, 1, 2], &[0, 1, 2], &[3, 2, 0]],
        );
        let out = run(&Mechanism::LendRecoup, &i).unwrap();
        let Refutation::Consistent { bounds } = refute_credit_existence(&i, &out.trace).unwrap() else {
            panic!("LendRecoup trace refuted");
        };
        // Shortage rounds pin the ledger exactly where forcing applies.
        assert_eq!(bounds[1].lower, ints(&[0, -1, 1]));
        assert_eq!(bounds[1].upper, ints(&[0, -1, 1]));
    }

    #[test]
    fn refuter_requires_pe() {
        let i = inst(&[1, 1], &[&[2, 2]]);
        let trace = AllocationTrace::from_allocations(&i, vec![ints(&[1, 0])], None).unwrap();
        assert!(matches!(
            refute_credit_existence(&i, &trace),
            Err(AuditError::NotParetoEfficient { round: 0, agent: 0 })
        ));
    }

    #[test]
    fn grids() {
        assert_eq!(
            DeviationGrid::half_integers(&q("3/2")).0,
            qs(&["0", "1/2", "1", "3/2", "2"])
        );
        assert_eq!(DeviationGrid::integers(&q("2")).0, ints(&[0, 1, 2]));
        let i = inst(&[1], &[&[2]]);
        assert_eq!(DeviationGrid::default_for(&i).0.len(), 7);
    }

    #[test]
    fn sp_probe_misreport_gain_gain() {
        let i = inst(
            &[1, 1, 1],
            &[&[1, 3, 0], &[2, 0, 2], &[0, 1, 2], &[0, 1, 2], &[3, 2, 0]],
        );
        let p = sp_probe(&Mechanism::LendRecoup, &i, 0, &ints(&[0, 2, 0, 0, 3])).unwrap();
        assert_eq!(p.truthful_utility, q("4"));
        assert_eq!(p.misreport_utility, q("9/2"));
        assert_eq!(p.delta, q("1/2"));
        let honest = sp_probe(&Mechanism::LendRecoup, &i, 0, &ints(&[1, 2, 0, 0, 3])).unwrap();
        assert!(honest.delta.is_zero());
        assert!(matches!(
            sp_probe(&Mechanism::LendRecoup, &i, 0, &ints(&[1])),
            Err(AuditError::ScheduleLength { .. })
        ));
        assert!(matches!(
            sp_probe(&Mechanism::LendRecoup, &i, 7, &ints(&[0; 5])),
            Err(AuditError::AgentOutOfRange { .. })
        ));
    }

    #[test]
    fn osp_passes_for_lendrecoup_and_smmf_on_misreport_gain() {
        let i = inst(
            &[1, 1, 1],
            &[&[1, 3, 0], &[2, 0, 2], &[0, 1, 2], &[0, 1, 2], &[3, 2, 0]],
        );
        let g = DeviationGrid::default_for(&i);
        assert!(check_osp(&Mechanism::LendRecoup, &i, &g).unwrap().passed());
        assert!(check_osp(&Mechanism::Smmf, &i, &g).unwrap().passed());
    }

    #[test]
    fn sp_search_finds_misreport_gain_deviation() {
        let i = inst(
            &[1, 1, 1],
            &[&[1, 3, 0], &[2, 0, 2], &[0, 1, 2], &[0, 1, 2], &[3, 2, 0]],
        );
        let (best, tried) = sp_search(&Mechanism::LendRecoup, &i, 0, &ints(&[0, 1, 2, 3])).unwrap();
        assert_eq!(tried, 1 + 4usize.pow(5));
        assert!(best.delta >= q("1/2"));
    }
}
