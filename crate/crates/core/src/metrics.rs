//! Evaluation metrics over cumulative utilities.
//!
//! Ratios stay exact; only the log-sum in Nash welfare and the final
//! [`MetricsRow`] are floating point. Agents whose realized or standalone
//! utility is zero cannot enter a log or a ratio and are dropped with a
//! warning.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::num::Num;

/// Per-agent `U_i / U_i^static` plus its minimum and violation share.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SharingIndex {
    /// `None` for agents with zero standalone utility.
    pub ratios: Vec<Option<Num>>,
    pub min: Option<Num>,
    /// Percentage (0..=100) of retained agents with ratio below one.
    pub pct_violations: Num,
}

pub fn sharing_index(utilities: &[Num], baseline: &[Num]) -> SharingIndex {
    assert_eq!(utilities.len(), baseline.len(), "utility/baseline length mismatch");
    let ratios: Vec<Option<Num>> = utilities
        .iter()
        .zip(baseline)
        .enumerate()
        .map(|(i, (u, s))| {
            if s.is_positive() {
                Some(u / s)
            } else {
                warn!("agent {i}: zero standalone utility, excluded from sharing index");
                None
            }
        })
        .collect();
    let kept: Vec<&Num> = ratios.iter().flatten().collect();
    let min = kept.iter().copied().min().cloned();
    let below = kept.iter().filter(|r| ***r < 1).count();
    let pct_violations = if kept.is_empty() {
        Num::zero()
    } else {
        Num::ratio(100 * below as i64, kept.len() as i64)
    };
    SharingIndex {
        ratios,
        min,
        pct_violations,
    }
}

fn weights(endowments: &[Num]) -> Vec<Num> {
    let total: Num = endowments.iter().sum();
    endowments.iter().map(|e| e / &total).collect()
}

/// `sum_i w_i ln U_i` with `w_i = e_i / E`, skipping agents with `U_i <= 0`.
pub fn nash_welfare(utilities: &[Num], endowments: &[Num]) -> f64 {
    weights(endowments)
        .iter()
        .zip(utilities)
        .enumerate()
        .filter_map(|(i, (w, u))| {
            if u.is_positive() {
                Some(w.to_f64() * u.to_f64().ln())
            } else {
                warn!("agent {i}: nonpositive utility, excluded from Nash welfare");
                None
            }
        })
        .sum()
}

/// `NW(U) / NW(U^static)` over agents positive in both; `None` if the
/// baseline welfare is zero.
pub fn nash_welfare_normalized(utilities: &[Num], baseline: &[Num], endowments: &[Num]) -> Option<f64> {
    let w = weights(endowments);
    let mut nw = 0.0;
    let mut nw_static = 0.0;
    for i in 0..utilities.len() {
        if !utilities[i].is_positive() || !baseline[i].is_positive() {
            warn!("agent {i}: zero utility, excluded from normalized Nash welfare");
            continue;
        }
        let wi = w[i].to_f64();
        nw += wi * utilities[i].to_f64().ln();
        nw_static += wi * baseline[i].to_f64().ln();
    }
    (nw_static != 0.0).then(|| nw / nw_static)
}

fn lower_median(values: &[Num]) -> Option<Num> {
    let mut v = values.to_vec();
    v.sort();
    v.get(v.len().saturating_sub(1) / 2).cloned()
}

fn ratio_to(values: &[Num], denom: Option<Num>) -> Option<Num> {
    let min = values.iter().min()?;
    let denom = denom?;
    denom.is_positive().then(|| min / &denom)
}

fn per_weight(utilities: &[Num], endowments: &[Num]) -> Vec<Num> {
    weights(endowments).iter().zip(utilities).map(|(w, u)| u / w).collect()
}

fn retained_six(utilities: &[Num], baseline: &[Num]) -> Vec<Num> {
    sharing_index(utilities, baseline)
        .ratios
        .into_iter()
        .flatten()
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinMaxRatios {
    pub wmm: Option<Num>,
    pub nmm: Option<Num>,
}

/// `min/max` of `U_i/w_i` and of `SIx_i`.
pub fn min_max_ratios(utilities: &[Num], baseline: &[Num], endowments: &[Num]) -> MinMaxRatios {
    let uw = per_weight(utilities, endowments);
    let six = retained_six(utilities, baseline);
    MinMaxRatios {
        wmm: ratio_to(&uw, uw.iter().max().cloned()),
        nmm: ratio_to(&six, six.iter().max().cloned()),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquityRatios {
    pub weq: Option<Num>,
    pub neq: Option<Num>,
}

/// `min/median` of `U_i/w_i` and of `SIx_i`, using the lower median.
pub fn equity_ratios(utilities: &[Num], baseline: &[Num], endowments: &[Num]) -> EquityRatios {
    let uw = per_weight(utilities, endowments);
    let six = retained_six(utilities, baseline);
    EquityRatios {
        weq: ratio_to(&uw, lower_median(&uw)),
        neq: ratio_to(&six, lower_median(&six)),
    }
}

/// One line of the metrics table. Undefined ratios are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub mechanism: String,
    pub nw: Option<f64>,
    pub min_six: Option<f64>,
    pub pct_si_violations: f64,
    pub wmm: Option<f64>,
    pub nmm: Option<f64>,
    pub weq: Option<f64>,
    pub neq: Option<f64>,
}

impl MetricsRow {
    pub const HEADER: [&'static str; 8] = [
        "mechanism",
        "nw",
        "min_six",
        "pct_si_violations",
        "wmm",
        "nmm",
        "weq",
        "neq",
    ];

    pub fn compute(mechanism: &str, utilities: &[Num], baseline: &[Num], endowments: &[Num]) -> Self {
        let six = sharing_index(utilities, baseline);
        let mm = min_max_ratios(utilities, baseline, endowments);
        let eq = equity_ratios(utilities, baseline, endowments);
        let f = |v: Option<Num>| v.map(|v| v.to_f64());
        MetricsRow {
            mechanism: mechanism.to_string(),
            nw: nash_welfare_normalized(utilities, baseline, endowments),
            min_six: f(six.min),
            pct_si_violations: six.pct_violations.to_f64(),
            wmm: f(mm.wmm),
            nmm: f(mm.nmm),
            weq: f(eq.weq),
            neq: f(eq.neq),
        }
    }

    /// The seven numeric columns in header order.
    pub fn values(&self) -> [Option<f64>; 7] {
        [
            self.nw,
            self.min_six,
            Some(self.pct_si_violations),
            self.wmm,
            self.nmm,
            self.weq,
            self.neq,
        ]
    }
}

/// Mean and population standard deviation of each column across runs.
/// A column is absent when any run leaves it undefined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub mechanism: String,
    pub mean: [Option<f64>; 7],
    pub std: [Option<f64>; 7],
}

impl SummaryRow {
    pub const HEADER: [&'static str; 15] = [
        "mechanism",
        "nw",
        "nw_std",
        "min_six",
        "min_six_std",
        "pct_si_violations",
        "pct_si_violations_std",
        "wmm",
        "wmm_std",
        "nmm",
        "nmm_std",
        "weq",
        "weq_std",
        "neq",
        "neq_std",
    ];

    pub fn aggregate(mechanism: &str, rows: &[MetricsRow]) -> Self {
        let mut mean = [None; 7];
        let mut std = [None; 7];
        for k in 0..7 {
            let col: Option<Vec<f64>> = rows.iter().map(|r| r.values()[k]).collect();
            if let Some(col) = col.filter(|c| !c.is_empty()) {
                let n = col.len() as f64;
                let m = col.iter().sum::<f64>() / n;
                let var = col.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
                mean[k] = Some(m);
                std[k] = Some(var.sqrt());
            }
        }
        SummaryRow {
            mechanism: mechanism.to_string(),
            mean,
            std,
        }
    }
}
