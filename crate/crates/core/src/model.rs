//! Agents, endowments, demand matrices, allocation traces and the checkable
//! forms of Pareto efficiency and sharing incentives.
//!
//! Indexing is zero-based everywhere in the API (`round` 0 is the first
//! round, `agent` 0 the first agent). Human-readable renderings add one.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::Num;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("instance has no agents")]
    NoAgents,
    #[error("endowment of agent {agent} is {value}, must be > 0")]
    NonPositiveEndowment { agent: usize, value: Num },
    #[error("{what} row {round} has {got} entries, expected {expected}")]
    RaggedRow {
        what: &'static str,
        round: usize,
        got: usize,
        expected: usize,
    },
    #[error("{what}[{round}][{agent}] = {value} is negative")]
    NegativeDemand {
        what: &'static str,
        round: usize,
        agent: usize,
        value: Num,
    },
    #[error("true demand matrix has {got} rounds, reports have {expected}")]
    TrueDemandRounds { got: usize, expected: usize },
    #[error("agent label count {got} does not match agent count {expected}")]
    LabelCount { got: usize, expected: usize },
    #[error("trace shape {got_rounds}x{got_agents} does not match instance {rounds}x{agents}")]
    ShapeMismatch {
        got_rounds: usize,
        got_agents: usize,
        rounds: usize,
        agents: usize,
    },
}

/// `u(a, d) = min(a, d)`: one unit of utility per allocated unit up to demand.
pub fn utility(alloc: &Num, demand: &Num) -> Num {
    Num::min_of(alloc, demand)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "InstanceRepr", into = "InstanceRepr")]
pub struct Instance {
    endowments: Vec<Num>,
    demands: Vec<Vec<Num>>,
    true_demands: Option<Vec<Vec<Num>>>,
    agent_ids: Option<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
struct InstanceRepr {
    endowments: Vec<Num>,
    demands: Vec<Vec<Num>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    true_demands: Option<Vec<Vec<Num>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    agent_ids: Option<Vec<String>>,
}

impl TryFrom<InstanceRepr> for Instance {
    type Error = ModelError;

    fn try_from(r: InstanceRepr) -> Result<Self, Self::Error> {
        let mut inst = Instance::with_true_demands(r.endowments, r.demands, r.true_demands)?;
        if let Some(ids) = r.agent_ids {
            inst = inst.with_agent_ids(ids)?;
        }
        Ok(inst)
    }
}

impl From<Instance> for InstanceRepr {
    fn from(i: Instance) -> Self {
        InstanceRepr {
            endowments: i.endowments,
            demands: i.demands,
            true_demands: i.true_demands,
            agent_ids: i.agent_ids,
        }
    }
}

fn validate_matrix(what: &'static str, m: &[Vec<Num>], n: usize) -> Result<(), ModelError> {
    for (t, row) in m.iter().enumerate() {
        if row.len() != n {
            return Err(ModelError::RaggedRow {
                what,
                round: t,
                got: row.len(),
                expected: n,
            });
        }
        if let Some((i, v)) = row.iter().enumerate().find(|(_, v)| v.is_negative()) {
            return Err(ModelError::NegativeDemand {
                what,
                round: t,
                agent: i,
                value: v.clone(),
            });
        }
    }
    Ok(())
}

impl Instance {
    /// Reported demands only; true demands default to the reports.
    pub fn new(endowments: Vec<Num>, demands: Vec<Vec<Num>>) -> Result<Self, ModelError> {
        Self::with_true_demands(endowments, demands, None)
    }

    pub fn with_true_demands(
        endowments: Vec<Num>,
        demands: Vec<Vec<Num>>,
        true_demands: Option<Vec<Vec<Num>>>,
    ) -> Result<Self, ModelError> {
        if endowments.is_empty() {
            return Err(ModelError::NoAgents);
        }
        if let Some((i, v)) = endowments.iter().enumerate().find(|(_, v)| !v.is_positive()) {
            return Err(ModelError::NonPositiveEndowment {
                agent: i,
                value: v.clone(),
            });
        }
        let n = endowments.len();
        validate_matrix("demands", &demands, n)?;
        if let Some(td) = &true_demands {
            if td.len() != demands.len() {
                return Err(ModelError::TrueDemandRounds {
                    got: td.len(),
                    expected: demands.len(),
                });
            }
            validate_matrix("true_demands", td, n)?;
        }
        Ok(Instance {
            endowments,
            demands,
            true_demands,
            agent_ids: None,
        })
    }

    pub fn with_agent_ids(mut self, ids: Vec<String>) -> Result<Self, ModelError> {
        if ids.len() != self.agents() {
            return Err(ModelError::LabelCount {
                got: ids.len(),
                expected: self.agents(),
            });
        }
        self.agent_ids = Some(ids);
        Ok(self)
    }

    pub fn agents(&self) -> usize {
        self.endowments.len()
    }

    pub fn rounds(&self) -> usize {
        self.demands.len()
    }

    pub fn endowments(&self) -> &[Num] {
        &self.endowments
    }

    /// Reported demands `d'`, one row per round.
    pub fn demands(&self) -> &[Vec<Num>] {
        &self.demands
    }

    /// True demands `d`; the reports when no separate matrix was given.
    pub fn true_demands(&self) -> &[Vec<Num>] {
        self.true_demands.as_deref().unwrap_or(&self.demands)
    }

    pub fn has_true_demands(&self) -> bool {
        self.true_demands.is_some()
    }

    pub fn agent_ids(&self) -> Option<&[String]> {
        self.agent_ids.as_deref()
    }

    /// `E`.
    pub fn total_endowment(&self) -> Num {
        self.endowments.iter().sum()
    }

    /// `E_{-i}`.
    pub fn others_endowment(&self, agent: usize) -> Num {
        self.total_endowment() - &self.endowments[agent]
    }

    /// Same endowments and true demands, with `reports` as the reported matrix.
    pub fn with_reports(&self, reports: Vec<Vec<Num>>) -> Result<Self, ModelError> {
        let truth = self.true_demands().to_vec();
        let mut inst = Instance::with_true_demands(self.endowments.clone(), reports, Some(truth))?;
        inst.agent_ids = self.agent_ids.clone();
        Ok(inst)
    }

    /// Reorders agents: new agent `k` is old agent `perm[k]`.
    pub fn permute_agents(&self, perm: &[usize]) -> Self {
        let pick = |row: &Vec<Num>| perm.iter().map(|&j| row[j].clone()).collect::<Vec<_>>();
        Instance {
            endowments: pick(&self.endowments),
            demands: self.demands.iter().map(pick).collect(),
            true_demands: self.true_demands.as_ref().map(|m| m.iter().map(pick).collect()),
            agent_ids: self
                .agent_ids
                .as_ref()
                .map(|ids| perm.iter().map(|&j| ids[j].clone()).collect()),
        }
    }
}

/// Round-by-round record of a mechanism run.
///
/// `credits` has one more row than there are rounds: row `t` holds balances
/// at the start of round `t`, row 0 is all zeros. Utilities are measured
/// against reported demands.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AllocationTrace {
    pub allocations: Vec<Vec<Num>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub credits: Option<Vec<Vec<Num>>>,
    pub utilities: Vec<Vec<Num>>,
    pub cumulative_utilities: Vec<Vec<Num>>,
}

impl AllocationTrace {
    /// Builds utilities from allocations and the instance's reports.
    pub fn from_allocations(
        instance: &Instance,
        allocations: Vec<Vec<Num>>,
        credits: Option<Vec<Vec<Num>>>,
    ) -> Result<Self, ModelError> {
        check_shape(instance, &allocations)?;
        let utilities: Vec<Vec<Num>> = allocations
            .iter()
            .zip(instance.demands())
            .map(|(a, d)| a.iter().zip(d).map(|(a, d)| utility(a, d)).collect())
            .collect();
        let cumulative_utilities = prefix_sums(&utilities, instance.agents());
        Ok(AllocationTrace {
            allocations,
            credits,
            utilities,
            cumulative_utilities,
        })
    }

    pub fn rounds(&self) -> usize {
        self.allocations.len()
    }

    /// Final cumulative utility per agent (against reports).
    pub fn final_utilities(&self, agents: usize) -> Vec<Num> {
        self.cumulative_utilities
            .last()
            .cloned()
            .unwrap_or_else(|| vec![Num::zero(); agents])
    }

    /// Cumulative utility per agent measured against `demands` instead of the reports.
    pub fn realized_utilities(&self, demands: &[Vec<Num>]) -> Vec<Num> {
        let n = demands.first().map_or(0, Vec::len);
        let mut acc = vec![Num::zero(); n];
        for (a, d) in self.allocations.iter().zip(demands) {
            for i in 0..n {
                acc[i] += utility(&a[i], &d[i]);
            }
        }
        acc
    }
}

fn prefix_sums(rows: &[Vec<Num>], n: usize) -> Vec<Vec<Num>> {
    let mut acc = vec![Num::zero(); n];
    rows.iter()
        .map(|row| {
            for (s, v) in acc.iter_mut().zip(row) {
                *s += v;
            }
            acc.clone()
        })
        .collect()
}

pub(crate) fn check_shape(instance: &Instance, allocations: &[Vec<Num>]) -> Result<(), ModelError> {
    let agents = instance.agents();
    let bad_row = allocations.iter().find(|r| r.len() != agents);
    if allocations.len() != instance.rounds() || bad_row.is_some() {
        return Err(ModelError::ShapeMismatch {
            got_rounds: allocations.len(),
            got_agents: bad_row.or(allocations.first()).map_or(agents, Vec::len),
            rounds: instance.rounds(),
            agents,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PeVerdict {
    Pass,
    /// `agent` is under-served in `round` while valued utility is below `E`.
    Fail {
        round: usize,
        agent: usize,
        utility_sum: Num,
    },
}

impl PeVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, PeVerdict::Pass)
    }
}

/// Pareto efficiency against reported demands: whenever some agent gets less
/// than its report, the round's utilities must sum to `E`.
pub fn is_pareto_efficient(instance: &Instance, trace: &AllocationTrace) -> Result<PeVerdict, ModelError> {
    check_shape(instance, &trace.allocations)?;
    let total = instance.total_endowment();
    for (t, (a, d)) in trace.allocations.iter().zip(instance.demands()).enumerate() {
        let Some(agent) = a.iter().zip(d).position(|(a, d)| a < d) else {
            continue;
        };
        let utility_sum: Num = a.iter().zip(d).map(|(a, d)| utility(a, d)).sum();
        if utility_sum != total {
            return Ok(PeVerdict::Fail {
                round: t,
                agent,
                utility_sum,
            });
        }
    }
    Ok(PeVerdict::Pass)
}

/// `U_i^static = sum_t min(d_{i,t}, e_i)` over true demands.
pub fn static_utility(instance: &Instance) -> Vec<Num> {
    static_utility_prefixes(instance)
        .pop()
        .unwrap_or_else(|| vec![Num::zero(); instance.agents()])
}

fn static_utility_prefixes(instance: &Instance) -> Vec<Vec<Num>> {
    let e = instance.endowments();
    let per_round: Vec<Vec<Num>> = instance
        .true_demands()
        .iter()
        .map(|d| d.iter().zip(e).map(|(d, e)| utility(e, d)).collect())
        .collect();
    prefix_sums(&per_round, instance.agents())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiViolation {
    pub agent: usize,
    /// Last round of the shortest violating prefix.
    pub round: usize,
    pub realized: Num,
    pub baseline: Num,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiReport {
    /// Per agent, the first prefix where cumulative utility drops below the
    /// keep-your-endowment baseline.
    pub per_agent: Vec<Option<SiViolation>>,
}

impl SiReport {
    pub fn passed(&self) -> bool {
        self.per_agent.iter().all(Option::is_none)
    }

    pub fn violations(&self) -> impl Iterator<Item = &SiViolation> {
        self.per_agent.iter().flatten()
    }
}

/// Sharing incentives at every prefix, with utilities against true demands.
pub fn check_sharing_incentives(instance: &Instance, trace: &AllocationTrace) -> Result<SiReport, ModelError> {
    check_shape(instance, &trace.allocations)?;
    let n = instance.agents();
    let baseline = static_utility_prefixes(instance);
    let mut realized = vec![Num::zero(); n];
    let mut per_agent: Vec<Option<SiViolation>> = vec![None; n];
    for (t, (a, d)) in trace.allocations.iter().zip(instance.true_demands()).enumerate() {
        for i in 0..n {
            realized[i] += utility(&a[i], &d[i]);
            if per_agent[i].is_none() && realized[i] < baseline[t][i] {
                per_agent[i] = Some(SiViolation {
                    agent: i,
                    round: t,
                    realized: realized[i].clone(),
                    baseline: baseline[t][i].clone(),
                });
            }
        }
    }
    Ok(SiReport { per_agent })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{ints, q, qs};

    fn motivating() -> Instance {
        Instance::new(
            ints(&[1, 1, 1]),
            vec![ints(&[2, 2, 0]), ints(&[2, 2, 0]), ints(&[2, 2, 6])],
        )
        .unwrap()
    }

    #[test]
    fn utility_examples() {
        assert_eq!(utility(&q("1.5"), &q("2")), q("3/2"));
        assert_eq!(utility(&q("0"), &q("5")), q("0"));
        assert_eq!(utility(&q("3"), &q("1")), q("1"));
    }

    #[test]
    fn rejects_bad_instances() {
        assert_eq!(Instance::new(vec![], vec![]), Err(ModelError::NoAgents));
        assert!(matches!(
            Instance::new(ints(&[1, 0]), vec![]),
            Err(ModelError::NonPositiveEndowment { agent: 1, .. })
        ));
        assert!(matches!(
            Instance::new(ints(&[1, 1]), vec![ints(&[1])]),
            Err(ModelError::RaggedRow { round: 0, .. })
        ));
        assert!(matches!(
            Instance::new(ints(&[1, 1]), vec![ints(&[1, -1])]),
            Err(ModelError::NegativeDemand { agent: 1, .. })
        ));
        assert!(matches!(
            Instance::with_true_demands(ints(&[1]), vec![ints(&[1])], Some(vec![])),
            Err(ModelError::TrueDemandRounds { .. })
        ));
    }

    #[test]
    fn totals() {
        let inst = Instance::new(qs(&["1", "1/2", "2"]), vec![]).unwrap();
        assert_eq!(inst.total_endowment(), q("7/2"));
        assert_eq!(inst.others_endowment(1), q("3"));
        assert_eq!(inst.true_demands().len(), 0);
    }

    #[test]
    fn instance_json_roundtrip_and_schema() {
        let inst = motivating();
        let s = serde_json::to_string(&inst).unwrap();
        assert_eq!(
            s,
            r#"{"endowments":["1","1","1"],"demands":[["2","2","0"],["2","2","0"],["2","2","6"]]}"#
        );
        let back: Instance = serde_json::from_str(&s).unwrap();
        assert_eq!(back, inst);
        let bad = r#"{"endowments":["0"],"demands":[]}"#;
        assert!(serde_json::from_str::<Instance>(bad).is_err());
    }

    #[test]
    fn pe_on_motivating_smmf_allocations() {
        let inst = motivating();
        let alloc = vec![qs(&["3/2", "3/2", "0"]), qs(&["3/2", "3/2", "0"]), ints(&[1, 1, 1])];
        let trace = AllocationTrace::from_allocations(&inst, alloc, None).unwrap();
        assert_eq!(is_pareto_efficient(&inst, &trace).unwrap(), PeVerdict::Pass);
        assert_eq!(trace.final_utilities(3), ints(&[4, 4, 1]));
    }

    #[test]
    fn pe_trivial_and_failing() {
        let zero = Instance::new(ints(&[1, 1]), vec![ints(&[0, 0])]).unwrap();
        let t = AllocationTrace::from_allocations(&zero, vec![ints(&[0, 0])], None).unwrap();
        assert!(is_pareto_efficient(&zero, &t).unwrap().passed());

        let inst = Instance::new(ints(&[1, 1]), vec![ints(&[2, 2])]).unwrap();
        let t = AllocationTrace::from_allocations(&inst, vec![qs(&["1", "1/2"])], None).unwrap();
        assert_eq!(
            is_pareto_efficient(&inst, &t).unwrap(),
            PeVerdict::Fail {
                round: 0,
                agent: 0,
                utility_sum: q("3/2")
            }
        );
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let inst = motivating();
        let err = AllocationTrace::from_allocations(&inst, vec![ints(&[1, 1, 1])], None);
        assert!(matches!(err, Err(ModelError::ShapeMismatch { .. })));
    }

    #[test]
    fn static_utility_examples() {
        assert_eq!(static_utility(&motivating()), ints(&[3, 3, 1]));
        let zero = Instance::new(ints(&[1, 2]), vec![ints(&[0, 0]); 3]).unwrap();
        assert_eq!(static_utility(&zero), ints(&[0, 0]));
        let single = Instance::new(ints(&[2]), vec![ints(&[5]), ints(&[5])]).unwrap();
        assert_eq!(static_utility(&single), ints(&[4]));
    }

    #[test]
    fn si_checks_every_prefix() {
        let inst = motivating();
        let smmf = vec![qs(&["3/2", "3/2", "0"]), qs(&["3/2", "3/2", "0"]), ints(&[1, 1, 1])];
        let t = AllocationTrace::from_allocations(&inst, smmf, None).unwrap();
        assert!(check_sharing_incentives(&inst, &t).unwrap().passed());

        let stat = vec![ints(&[1, 1, 1]); 3];
        let t = AllocationTrace::from_allocations(&inst, stat, None).unwrap();
        assert!(check_sharing_incentives(&inst, &t).unwrap().passed());

        // Agent 0 falls behind in round 0 and catches up later: the prefix still fails.
        let inst = Instance::new(ints(&[1, 1]), vec![ints(&[1, 1]), ints(&[2, 0])]).unwrap();
        let t = AllocationTrace::from_allocations(&inst, vec![ints(&[0, 2]), ints(&[2, 0])], None).unwrap();
        let rep = check_sharing_incentives(&inst, &t).unwrap();
        assert_eq!(
            rep.per_agent[0],
            Some(SiViolation {
                agent: 0,
                round: 0,
                realized: q("0"),
                baseline: q("1")
            })
        );
        assert!(rep.per_agent[1].is_none());
    }

    #[test]
    fn permute_agents_reorders_everything() {
        let inst = motivating()
            .with_agent_ids(vec!["a".into(), "b".into(), "c".into()])
            .unwrap();
        let p = inst.permute_agents(&[2, 0, 1]);
        assert_eq!(p.demands()[2], ints(&[6, 2, 2]));
        assert_eq!(p.agent_ids().unwrap(), &["c", "a", "b"]);
    }
}
