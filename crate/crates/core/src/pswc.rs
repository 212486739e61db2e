//! Proportional sharing with constraints.
//!
//! Given capacity `A`, positive weights `w`, minima `m` and limits `l`, find a
//! level `x >= 0` such that `a_i = clamp(x * w_i, m_i, l_i)` and `sum a_i = A`.
//! The allocation is unique; the reported level is the smallest valid one.
//!
//! [`solve`] sweeps the sorted breakpoints `m_i / w_i` and `l_i / w_i` with
//! running sums, so it runs in `O(n log n)` and solves the final linear
//! segment exactly. [`oracle_solve`] is an independent dyadic bisection used
//! to cross-check it.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::Num;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Limit {
    Finite(Num),
    Unbounded,
}

impl Limit {
    pub fn finite(&self) -> Option<&Num> {
        match self {
            Limit::Finite(v) => Some(v),
            Limit::Unbounded => None,
        }
    }
}

impl From<Num> for Limit {
    fn from(v: Num) -> Self {
        Limit::Finite(v)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PswcError {
    #[error("problem has no agents")]
    Empty,
    #[error("length mismatch: {weights} weights, {minima} minima, {limits} limits")]
    LengthMismatch {
        weights: usize,
        minima: usize,
        limits: usize,
    },
    #[error("capacity {0} is negative")]
    NegativeCapacity(Num),
    #[error("weight of agent {agent} is {value}, must be > 0")]
    NonPositiveWeight { agent: usize, value: Num },
    #[error("minimum of agent {agent} is {value}, must be >= 0")]
    NegativeMinimum { agent: usize, value: Num },
    #[error("agent {agent}: minimum {minimum} exceeds limit {limit}")]
    MinimumAboveLimit { agent: usize, minimum: Num, limit: Num },
    #[error("capacity {capacity} is below the sum of minima {minima}")]
    InfeasibleLow { capacity: Num, minima: Num },
    #[error("capacity {capacity} exceeds the sum of limits {limits}")]
    InfeasibleHigh { capacity: Num, limits: Num },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PswcProblem {
    pub capacity: Num,
    pub weights: Vec<Num>,
    pub minima: Vec<Num>,
    pub limits: Vec<Limit>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PswcSolution {
    pub allocation: Vec<Num>,
    /// Water level `x`; `allocation[i] == clamp(x * w_i, m_i, l_i)`.
    pub level: Num,
}

impl PswcProblem {
    pub fn new(capacity: Num, weights: Vec<Num>, minima: Vec<Num>, limits: Vec<Limit>) -> Self {
        PswcProblem {
            capacity,
            weights,
            minima,
            limits,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Checks structure and feasibility.
    pub fn validate(&self) -> Result<(), PswcError> {
        let n = self.weights.len();
        if n == 0 {
            return Err(PswcError::Empty);
        }
        if self.minima.len() != n || self.limits.len() != n {
            return Err(PswcError::LengthMismatch {
                weights: n,
                minima: self.minima.len(),
                limits: self.limits.len(),
            });
        }
        if self.capacity.is_negative() {
            return Err(PswcError::NegativeCapacity(self.capacity.clone()));
        }
        for i in 0..n {
            if !self.weights[i].is_positive() {
                return Err(PswcError::NonPositiveWeight {
                    agent: i,
                    value: self.weights[i].clone(),
                });
            }
            if self.minima[i].is_negative() {
                return Err(PswcError::NegativeMinimum {
                    agent: i,
                    value: self.minima[i].clone(),
                });
            }
            if let Limit::Finite(l) = &self.limits[i] {
                if &self.minima[i] > l {
                    return Err(PswcError::MinimumAboveLimit {
                        agent: i,
                        minimum: self.minima[i].clone(),
                        limit: l.clone(),
                    });
                }
            }
        }
        let minima: Num = self.minima.iter().sum();
        if self.capacity < minima {
            return Err(PswcError::InfeasibleLow {
                capacity: self.capacity.clone(),
                minima,
            });
        }
        if self.limits.iter().all(|l| matches!(l, Limit::Finite(_))) {
            let limits: Num = self.limits.iter().filter_map(Limit::finite).sum();
            if self.capacity > limits {
                return Err(PswcError::InfeasibleHigh {
                    capacity: self.capacity.clone(),
                    limits,
                });
            }
        }
        Ok(())
    }

    /// `clamp(x * w_i, m_i, l_i)` for every agent.
    pub fn allocation_at(&self, level: &Num) -> Vec<Num> {
        (0..self.len())
            .map(|i| (level * &self.weights[i]).clamp_to(&self.minima[i], self.limits[i].finite()))
            .collect()
    }

    /// `phi(x) = sum_i clamp(x * w_i, m_i, l_i)`, nondecreasing in `x`.
    pub fn filled(&self, level: &Num) -> Num {
        self.allocation_at(level).into_iter().sum()
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum EventKind {
    // Leaves its minimum and starts tracking x * w_i.
    Activate,
    // Reaches its limit.
    Saturate,
}

struct Event {
    at: Num,
    kind: EventKind,
    agent: usize,
}

/// Solves the problem by a breakpoint sweep.
pub fn solve(problem: &PswcProblem) -> Result<PswcSolution, PswcError> {
    problem.validate()?;
    let n = problem.len();
    let target = &problem.capacity;

    let mut events: Vec<Event> = Vec::with_capacity(2 * n);
    for i in 0..n {
        let w = &problem.weights[i];
        events.push(Event {
            at: &problem.minima[i] / w,
            kind: EventKind::Activate,
            agent: i,
        });
        if let Limit::Finite(l) = &problem.limits[i] {
            events.push(Event {
                at: l / w,
                kind: EventKind::Saturate,
                agent: i,
            });
        }
    }
    // Activation before saturation at equal breakpoints (m_i == l_i).
    events.sort_by(|a, b| match a.at.cmp(&b.at) {
        Ordering::Equal => match (a.kind, b.kind) {
            (EventKind::Activate, EventKind::Saturate) => Ordering::Less,
            (EventKind::Saturate, EventKind::Activate) => Ordering::Greater,
            _ => a.agent.cmp(&b.agent),
        },
        other => other,
    });

    // On the current segment phi(x) = fixed + x * slope.
    let mut fixed: Num = problem.minima.iter().sum();
    let mut slope = Num::zero();
    let mut prev = Num::zero();

    if &fixed == target {
        return Ok(PswcSolution {
            allocation: problem.minima.clone(),
            level: Num::zero(),
        });
    }

    let mut k = 0;
    while k < events.len() {
        let at = events[k].at.clone();
        if at > prev {
            let reached = &fixed + &(&at * &slope);
            if &reached >= target {
                break;
            }
            prev = at.clone();
        }
        while k < events.len() && events[k].at == at {
            let ev = &events[k];
            let i = ev.agent;
            match ev.kind {
                EventKind::Activate => {
                    fixed -= &problem.minima[i];
                    slope += &problem.weights[i];
                }
                EventKind::Saturate => {
                    slope -= &problem.weights[i];
                    if let Limit::Finite(l) = &problem.limits[i] {
                        fixed += l;
                    }
                }
            }
            k += 1;
        }
    }

    // validate() rules out a target beyond the reachable maximum, so slope > 0 here.
    debug_assert!(slope.is_positive(), "segment with zero slope below target");
    let level = (target - &fixed) / &slope;
    let allocation = problem.allocation_at(&level);
    debug_assert_eq!(&allocation.iter().sum::<Num>(), target);
    Ok(PswcSolution { allocation, level })
}

/// Bisection oracle on `phi(x)` with dyadic midpoints, stopping once
/// `|phi(x) - A| <= tol`; returns the exact clamp evaluation at that `x`.
///
/// Independent of the breakpoint sweep; each component lies within `tol` of
/// the exact solution because every `a_i(x)` moves in the same direction as
/// `phi(x)`.
pub fn oracle_solve(problem: &PswcProblem, tol: &Num) -> Result<PswcSolution, PswcError> {
    problem.validate()?;
    let target = &problem.capacity;
    let two = Num::from_int(2);

    let mut lo = Num::zero();
    let mut hi = Num::one();
    while &problem.filled(&hi) < target {
        lo = hi.clone();
        hi = &hi * &two;
    }
    let mut level = lo.clone();
    for _ in 0..400 {
        let phi = problem.filled(&level);
        if (&phi - target).abs() <= *tol {
            break;
        }
        let mid = (&lo + &hi) / &two;
        if &problem.filled(&mid) < target {
            lo = mid.clone();
        } else {
            hi = mid.clone();
        }
        level = mid;
    }
    Ok(PswcSolution {
        allocation: problem.allocation_at(&level),
        level,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{ints, q, qs};

    fn fin(v: &[i64]) -> Vec<Limit> {
        v.iter().map(|&x| Limit::Finite(Num::from_int(x))).collect()
    }

    fn unbounded(n: usize) -> Vec<Limit> {
        vec![Limit::Unbounded; n]
    }

    fn assert_close(got: &[Num], want: &[Num], tol: &Num) {
        assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() <= *tol, "{g} vs {w}");
        }
    }

    // Values below were produced by oracle_solve (bisection) and frozen.
    #[test]
    fn cumulative_round_one_of_lendrecoup() {
        let p = PswcProblem::new(q("3"), ints(&[1, 1, 1]), ints(&[1, 1, 0]), fin(&[1, 3, 0]));
        let s = solve(&p).unwrap();
        assert_eq!(s.allocation, ints(&[1, 2, 0]));
        assert_eq!(s.level, q("2"));
    }

    #[test]
    fn equal_split_below_limits() {
        let p = PswcProblem::new(q("3"), ints(&[1, 1, 1]), ints(&[1, 1, 0]), fin(&[2, 3, 0]));
        let s = solve(&p).unwrap();
        assert_eq!(s.allocation, qs(&["3/2", "3/2", "0"]));
        assert_eq!(s.level, q("3/2"));
    }

    #[test]
    fn minima_exhaust_capacity() {
        let p = PswcProblem::new(
            q("4"),
            ints(&[1, 1, 1]),
            ints(&[2, 2, 0]),
            vec![q("3.5").into(), q("3.5").into(), q("0").into()],
        );
        let s = solve(&p).unwrap();
        assert_eq!(s.allocation, ints(&[2, 2, 0]));
        assert_eq!(s.level, Num::zero());
        assert_eq!(p.allocation_at(&s.level), s.allocation);
    }

    #[test]
    fn interior_level() {
        let p = PswcProblem::new(
            q("6"),
            ints(&[1, 1, 1]),
            ints(&[2, 2, 0]),
            vec![q("3.5").into(), q("3.5").into(), q("0").into()],
        );
        let s = solve(&p).unwrap();
        assert_eq!(s.allocation, ints(&[3, 3, 0]));
        assert_eq!(s.level, q("3"));
    }

    #[test]
    fn weighted_proportional() {
        let p = PswcProblem::new(q("3"), ints(&[1, 2]), ints(&[0, 0]), unbounded(2));
        let s = solve(&p).unwrap();
        assert_eq!(s.allocation, ints(&[1, 2]));
        assert_eq!(s.level, q("1"));
        let tol = q("1/1000000000");
        assert_close(&oracle_solve(&p, &tol).unwrap().allocation, &ints(&[1, 2]), &tol);
    }

    #[test]
    fn limits_exhaust_capacity() {
        let p = PswcProblem::new(q("3"), ints(&[1, 1, 1]), ints(&[0, 0, 0]), fin(&[1, 0, 2]));
        let s = solve(&p).unwrap();
        assert_eq!(s.allocation, ints(&[1, 0, 2]));
        assert_eq!(s.level, q("2"));
        let tol = q("1/1000000000");
        assert_close(&oracle_solve(&p, &tol).unwrap().allocation, &ints(&[1, 0, 2]), &tol);
    }

    #[test]
    fn smallest_level_reported_on_flat_segment() {
        // Agent 0 saturates at x=1, agent 1 only starts at x=3: phi is flat on [1,3].
        let p = PswcProblem::new(q("1"), ints(&[1, 1]), ints(&[0, 3]), vec![q("1").into(), q("3").into()]);
        let err = solve(&p).unwrap_err();
        assert!(matches!(err, PswcError::InfeasibleLow { .. }));
        let p = PswcProblem::new(
            q("4"),
            ints(&[1, 1]),
            ints(&[0, 3]),
            vec![q("1").into(), Limit::Unbounded],
        );
        let s = solve(&p).unwrap();
        assert_eq!(s.allocation, ints(&[1, 3]));
        assert_eq!(s.level, q("1"));
    }

    #[test]
    fn degenerate_equal_min_and_limit() {
        let p = PswcProblem::new(
            q("5"),
            ints(&[1, 1, 2]),
            ints(&[1, 2, 0]),
            vec![q("1").into(), q("2").into(), Limit::Unbounded],
        );
        let s = solve(&p).unwrap();
        assert_eq!(s.allocation, ints(&[1, 2, 2]));
        assert_eq!(s.level, q("1"));
    }

    #[test]
    fn zero_capacity() {
        let p = PswcProblem::new(q("0"), ints(&[1, 1]), ints(&[0, 0]), fin(&[0, 5]));
        let s = solve(&p).unwrap();
        assert_eq!(s.allocation, ints(&[0, 0]));
    }

    #[test]
    fn errors() {
        let low = PswcProblem::new(q("1"), ints(&[1, 1]), ints(&[1, 1]), unbounded(2));
        assert!(matches!(solve(&low), Err(PswcError::InfeasibleLow { .. })));
        let high = PswcProblem::new(q("5"), ints(&[1, 1]), ints(&[0, 0]), fin(&[2, 2]));
        assert!(matches!(solve(&high), Err(PswcError::InfeasibleHigh { .. })));
        let zero_w = PswcProblem::new(q("1"), ints(&[1, 0]), ints(&[0, 0]), unbounded(2));
        assert!(matches!(
            solve(&zero_w),
            Err(PswcError::NonPositiveWeight { agent: 1, .. })
        ));
        let inverted = PswcProblem::new(q("1"), ints(&[1]), ints(&[2]), fin(&[1]));
        assert!(matches!(solve(&inverted), Err(PswcError::MinimumAboveLimit { .. })));
        let ragged = PswcProblem::new(q("1"), ints(&[1]), ints(&[0, 0]), unbounded(1));
        assert!(matches!(solve(&ragged), Err(PswcError::LengthMismatch { .. })));
        let empty = PswcProblem::new(q("0"), vec![], vec![], vec![]);
        assert_eq!(solve(&empty), Err(PswcError::Empty));
        assert!(matches!(
            oracle_solve(&high, &q("1/100")),
            Err(PswcError::InfeasibleHigh { .. })
        ));
    }

    #[test]
    fn limit_serde_shape() {
        let v = vec![Limit::Finite(q("3/2")), Limit::Unbounded];
        assert_eq!(serde_json::to_string(&v).unwrap(), r#"["3/2",null]"#);
        let back: Vec<Limit> = serde_json::from_str(r#"["3/2",null]"#).unwrap();
        assert_eq!(back, v);
    }
}
