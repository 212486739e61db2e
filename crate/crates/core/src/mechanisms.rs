//! Round-by-round allocation mechanisms.
//!
//! Every mechanism is a pure step function `(state, reports) -> RoundResult`;
//! [`run`] folds it over an instance. All of them hand out the whole pool in
//! rounds without shortage by water-filling above the reports
//! (`PSWC(A=E, w=e, m=d', l=inf)`), so they differ only in shortage rounds.
//!
//! * LendRecoup first serves reports up to the credit-adjusted endowment
//!   `max(0, e_i + c_i)`, then spends any remainder equalizing cumulative
//!   allocations. Credits move one-for-one with lending: `c += e - a`.
//! * SMMF water-fills the round on its own.
//! * DMMF water-fills cumulative utilities.
//! * Karma(alpha) is a reconstruction: each agent is first guaranteed
//!   `min(d'_i, alpha * e_i)`, the rest goes to the lowest cumulative
//!   allocations. The cumulative allocation it ranks by counts only units
//!   received up to the report, so surplus handed out in slack rounds does not
//!   count against an agent. With `alpha = 0` it coincides with DMMF. Its
//!   credit ledger is bookkeeping only.
//! * Static gives everyone their endowment.
//!
//! All water-filling is weighted by endowments.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{utility, AllocationTrace, Instance, ModelError};
use crate::num::Num;
use crate::pswc::{solve, Limit, PswcError, PswcProblem};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MechanismError {
    #[error("karma alpha {0} outside [0, 1]")]
    AlphaOutOfRange(Num),
    #[error("round {round}: {got} reports for {expected} agents")]
    ReportCount { round: usize, got: usize, expected: usize },
    #[error("round {round}: negative report {value} for agent {agent}")]
    NegativeReport { round: usize, agent: usize, value: Num },
    #[error("round {round}: water-filling failed: {source}")]
    Pswc {
        round: usize,
        #[source]
        source: PswcError,
    },
    #[error("unknown mechanism `{0}`")]
    Unknown(String),
    #[error("invalid mechanism parameter in `{0}`")]
    BadParameter(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Which branch produced a round's allocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    NoShortage,
    /// Shortage round of a mechanism without LendRecoup's inner split.
    Shortage,
    /// LendRecoup shortage where capped demands cover the pool.
    ShortageCapped,
    /// LendRecoup shortage with surplus after capped demands.
    ShortageSurplus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Mechanism {
    LendRecoup,
    Smmf,
    Dmmf,
    Karma { alpha: Num },
    Static,
}

impl Mechanism {
    pub fn karma(alpha: Num) -> Result<Self, MechanismError> {
        if alpha.is_negative() || alpha > 1 {
            return Err(MechanismError::AlphaOutOfRange(alpha));
        }
        Ok(Mechanism::Karma { alpha })
    }

    /// Whether the mechanism maintains a credit ledger.
    pub fn has_ledger(&self) -> bool {
        matches!(
            self,
            Mechanism::LendRecoup | Mechanism::Karma { .. } | Mechanism::Static
        )
    }

    pub fn step(&self, state: &MechanismState, reports: &[Num]) -> Result<RoundResult, MechanismError> {
        state.check_reports(reports)?;
        match self {
            Mechanism::LendRecoup => lendrecoup_step(state, reports),
            Mechanism::Smmf => smmf_step(state, reports),
            Mechanism::Dmmf => dmmf_step(state, reports),
            Mechanism::Karma { alpha } => karma_step(state, reports, alpha),
            Mechanism::Static => Ok(static_step(state, reports)),
        }
    }

    /// Short label used in file names and tables.
    pub fn label(&self) -> String {
        match self {
            Mechanism::LendRecoup => "lendrecoup".into(),
            Mechanism::Smmf => "smmf".into(),
            Mechanism::Dmmf => "dmmf".into(),
            Mechanism::Karma { alpha } => format!("karma_{}", alpha.to_string().replace('/', "_")),
            Mechanism::Static => "static".into(),
        }
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mechanism::LendRecoup => f.write_str("lendrecoup"),
            Mechanism::Smmf => f.write_str("smmf"),
            Mechanism::Dmmf => f.write_str("dmmf"),
            Mechanism::Karma { alpha } => write!(f, "karma:{alpha}"),
            Mechanism::Static => f.write_str("static"),
        }
    }
}

impl FromStr for Mechanism {
    type Err = MechanismError;

    /// `lendrecoup`, `smmf`, `dmmf`, `static`, `karma` (alpha 1/2) or `karma:<alpha>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        let (name, param) = match lower.split_once(':') {
            Some((n, p)) => (n, Some(p)),
            None => (lower.as_str(), None),
        };
        let no_param = |m: Mechanism| match param {
            None => Ok(m),
            Some(_) => Err(MechanismError::BadParameter(s.to_string())),
        };
        match name {
            "lendrecoup" | "lend_recoup" | "lend-recoup" => no_param(Mechanism::LendRecoup),
            "smmf" => no_param(Mechanism::Smmf),
            "dmmf" => no_param(Mechanism::Dmmf),
            "static" => no_param(Mechanism::Static),
            "karma" => {
                let alpha = match param {
                    Some(p) => p
                        .parse::<Num>()
                        .map_err(|_| MechanismError::BadParameter(s.to_string()))?,
                    None => Num::ratio(1, 2),
                };
                Mechanism::karma(alpha)
            }
            _ => Err(MechanismError::Unknown(s.to_string())),
        }
    }
}

/// Everything a step needs from the history.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MechanismState {
    pub endowments: Vec<Num>,
    pub total: Num,
    /// Completed rounds; the next step is round `round` (zero-based).
    pub round: usize,
    pub cumulative_allocations: Vec<Num>,
    /// Cumulative utilities against reports.
    pub cumulative_utilities: Vec<Num>,
    /// Balances at the start of the next round.
    pub credits: Vec<Num>,
}

impl MechanismState {
    pub fn new(endowments: &[Num]) -> Self {
        let n = endowments.len();
        MechanismState {
            endowments: endowments.to_vec(),
            total: endowments.iter().sum(),
            round: 0,
            cumulative_allocations: vec![Num::zero(); n],
            cumulative_utilities: vec![Num::zero(); n],
            credits: vec![Num::zero(); n],
        }
    }

    pub fn agents(&self) -> usize {
        self.endowments.len()
    }

    fn check_reports(&self, reports: &[Num]) -> Result<(), MechanismError> {
        if reports.len() != self.agents() {
            return Err(MechanismError::ReportCount {
                round: self.round,
                got: reports.len(),
                expected: self.agents(),
            });
        }
        if let Some((i, v)) = reports.iter().enumerate().find(|(_, v)| v.is_negative()) {
            return Err(MechanismError::NegativeReport {
                round: self.round,
                agent: i,
                value: v.clone(),
            });
        }
        Ok(())
    }

    /// State after `result` was applied for `reports`.
    pub fn advance(&self, reports: &[Num], result: &RoundResult) -> MechanismState {
        let mut next = self.clone();
        next.round += 1;
        for i in 0..self.agents() {
            let a = &result.allocations[i];
            next.cumulative_allocations[i] += a;
            next.cumulative_utilities[i] += utility(a, &reports[i]);
            if let Some(dc) = &result.credit_deltas {
                next.credits[i] += &dc[i];
            }
        }
        next
    }

    fn pswc(&self, problem: PswcProblem) -> Result<Vec<Num>, MechanismError> {
        solve(&problem)
            .map(|s| s.allocation)
            .map_err(|source| MechanismError::Pswc {
                round: self.round,
                source,
            })
    }

    /// Slack round: everyone gets their report, the rest is spread by endowment.
    fn fill_above_reports(&self, reports: &[Num]) -> Result<Vec<Num>, MechanismError> {
        self.pswc(PswcProblem::new(
            self.total.clone(),
            self.endowments.clone(),
            reports.to_vec(),
            vec![Limit::Unbounded; self.agents()],
        ))
    }

    /// Water-fill `base + a` with `base + floor <= base + a <= base + reports`
    /// using the pool plus the sum of `base`; returns `a`.
    fn fill_cumulative(
        &self,
        base: &[Num],
        floor: &[Num],
        reports: &[Num],
        capacity: Num,
    ) -> Result<Vec<Num>, MechanismError> {
        let minima = base.iter().zip(floor).map(|(b, f)| b + f).collect();
        let limits = base.iter().zip(reports).map(|(b, d)| Limit::Finite(b + d)).collect();
        let tilde = self.pswc(PswcProblem::new(capacity, self.endowments.clone(), minima, limits))?;
        Ok(tilde.iter().zip(base).map(|(t, b)| t - b).collect())
    }

    fn is_shortage(&self, reports: &[Num]) -> bool {
        reports.iter().sum::<Num>() > self.total
    }

    fn ledger_deltas(&self, allocations: &[Num]) -> Vec<Num> {
        self.endowments.iter().zip(allocations).map(|(e, a)| e - a).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundResult {
    pub allocations: Vec<Num>,
    /// `c_{t+1} - c_t`, for mechanisms with a ledger.
    pub credit_deltas: Option<Vec<Num>>,
    /// LendRecoup's `min(d', max(0, e + c))`, when computed.
    pub capped_demands: Option<Vec<Num>>,
    pub branch: Branch,
}

pub fn lendrecoup_step(state: &MechanismState, reports: &[Num]) -> Result<RoundResult, MechanismError> {
    let (allocations, capped, branch) = if !state.is_shortage(reports) {
        (state.fill_above_reports(reports)?, None, Branch::NoShortage)
    } else {
        let capped: Vec<Num> = (0..state.agents())
            .map(|i| {
                let cap = Num::max_of(&Num::zero(), &(&state.endowments[i] + &state.credits[i]));
                Num::min_of(&reports[i], &cap)
            })
            .collect();
        if state.total <= capped.iter().sum::<Num>() {
            let a = state.pswc(PswcProblem::new(
                state.total.clone(),
                state.endowments.clone(),
                vec![Num::zero(); state.agents()],
                capped.iter().cloned().map(Limit::Finite).collect(),
            ))?;
            (a, Some(capped), Branch::ShortageCapped)
        } else {
            // Re-divide all t+1 rounds of supply with past allocations as floors.
            let capacity = Num::from_int(state.round as i64 + 1) * &state.total;
            let a = state.fill_cumulative(&state.cumulative_allocations, &capped, reports, capacity)?;
            (a, Some(capped), Branch::ShortageSurplus)
        }
    };
    let deltas = state.ledger_deltas(&allocations);
    Ok(RoundResult {
        allocations,
        credit_deltas: Some(deltas),
        capped_demands: capped,
        branch,
    })
}

pub fn smmf_step(state: &MechanismState, reports: &[Num]) -> Result<RoundResult, MechanismError> {
    if !state.is_shortage(reports) {
        return Ok(RoundResult {
            allocations: state.fill_above_reports(reports)?,
            credit_deltas: None,
            capped_demands: None,
            branch: Branch::NoShortage,
        });
    }
    let allocations = state.pswc(PswcProblem::new(
        state.total.clone(),
        state.endowments.clone(),
        vec![Num::zero(); state.agents()],
        reports.iter().cloned().map(Limit::Finite).collect(),
    ))?;
    Ok(RoundResult {
        allocations,
        credit_deltas: None,
        capped_demands: None,
        branch: Branch::Shortage,
    })
}

pub fn dmmf_step(state: &MechanismState, reports: &[Num]) -> Result<RoundResult, MechanismError> {
    if !state.is_shortage(reports) {
        return Ok(RoundResult {
            allocations: state.fill_above_reports(reports)?,
            credit_deltas: None,
            capped_demands: None,
            branch: Branch::NoShortage,
        });
    }
    let base = &state.cumulative_utilities;
    let capacity = base.iter().sum::<Num>() + &state.total;
    let zeros = vec![Num::zero(); state.agents()];
    let allocations = state.fill_cumulative(base, &zeros, reports, capacity)?;
    Ok(RoundResult {
        allocations,
        credit_deltas: None,
        capped_demands: None,
        branch: Branch::Shortage,
    })
}

pub fn karma_step(state: &MechanismState, reports: &[Num], alpha: &Num) -> Result<RoundResult, MechanismError> {
    if alpha.is_negative() || *alpha > 1 {
        return Err(MechanismError::AlphaOutOfRange(alpha.clone()));
    }
    let (allocations, branch) = if !state.is_shortage(reports) {
        (state.fill_above_reports(reports)?, Branch::NoShortage)
    } else {
        let guaranteed: Vec<Num> = reports
            .iter()
            .zip(&state.endowments)
            .map(|(d, e)| Num::min_of(d, &(alpha * e)))
            .collect();
        // Priority by units received up to the report so far.
        let base = &state.cumulative_utilities;
        let capacity = base.iter().sum::<Num>() + &state.total;
        let a = state.fill_cumulative(base, &guaranteed, reports, capacity)?;
        (a, Branch::Shortage)
    };
    let deltas = state.ledger_deltas(&allocations);
    Ok(RoundResult {
        allocations,
        credit_deltas: Some(deltas),
        capped_demands: None,
        branch,
    })
}

pub fn static_step(state: &MechanismState, reports: &[Num]) -> RoundResult {
    RoundResult {
        allocations: state.endowments.clone(),
        credit_deltas: Some(vec![Num::zero(); state.agents()]),
        capped_demands: None,
        branch: if state.is_shortage(reports) {
            Branch::Shortage
        } else {
            Branch::NoShortage
        },
    }
}

/// A full run: the trace plus the branch taken in each round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunOutput {
    pub trace: AllocationTrace,
    pub branches: Vec<Branch>,
}

/// Runs `mechanism` over every round of `instance` on the reported demands.
pub fn run(mechanism: &Mechanism, instance: &Instance) -> Result<RunOutput, MechanismError> {
    let mut state = MechanismState::new(instance.endowments());
    let mut allocations = Vec::with_capacity(instance.rounds());
    let mut branches = Vec::with_capacity(instance.rounds());
    let mut credits = mechanism.has_ledger().then(|| vec![state.credits.clone()]);
    for reports in instance.demands() {
        let result = mechanism.step(&state, reports)?;
        state = state.advance(reports, &result);
        if let Some(c) = credits.as_mut() {
            c.push(state.credits.clone());
        }
        branches.push(result.branch);
        allocations.push(result.allocations);
    }
    let trace = AllocationTrace::from_allocations(instance, allocations, credits)?;
    Ok(RunOutput { trace, branches })
}

/// States before each round of a run, `states[t]` being the state round `t` sees.
pub fn replay_states(
    mechanism: &Mechanism,
    endowments: &[Num],
    reports: &[Vec<Num>],
) -> Result<Vec<MechanismState>, MechanismError> {
    let mut states = Vec::with_capacity(reports.len() + 1);
    let mut state = MechanismState::new(endowments);
    for r in reports {
        let result = mechanism.step(&state, r)?;
        let next = state.advance(r, &result);
        states.push(state);
        state = next;
    }
    states.push(state);
    Ok(states)
}

/// Ledger implied by `c_{t+1} = c_t + e - a` for arbitrary allocations.
pub fn bookkeeping_ledger(endowments: &[Num], allocations: &[Vec<Num>]) -> Vec<Vec<Num>> {
    let mut c = vec![Num::zero(); endowments.len()];
    let mut rows = vec![c.clone()];
    for a in allocations {
        for i in 0..c.len() {
            c[i] += &(&endowments[i] - &a[i]);
        }
        rows.push(c.clone());
    }
    rows
}
