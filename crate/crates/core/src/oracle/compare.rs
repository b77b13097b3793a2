use serde::Serialize;

use super::OracleSeries;
use crate::observables::{ObservableSeries, Pair};

/// Deviation of one analytic series from its oracle counterpart.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Deviation {
    pub observable: String,
    pub max_abs: f64,
    /// Relative deviation over the samples where the oracle value reaches `floor`.
    pub max_rel: f64,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonReport {
    /// Populations below this are excluded from relative deviations.
    pub floor: f64,
    pub deviations: Vec<Deviation>,
}

impl ComparisonReport {
    pub fn get(&self, observable: &str) -> Option<&Deviation> {
        self.deviations.iter().find(|d| d.observable == observable)
    }

    pub fn worst_rel(&self) -> f64 {
        self.deviations.iter().map(|d| d.max_rel).fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

fn deviation(name: String, pairs: impl Iterator<Item = (f64, f64, bool)>, floor: f64) -> Deviation {
    let mut d = Deviation { observable: name, max_abs: 0.0, max_rel: 0.0, samples: 0 };
    for (a, o, usable) in pairs {
        d.max_abs = d.max_abs.max((a - o).abs());
        if usable && o.abs() >= floor {
            d.max_rel = d.max_rel.max(((a - o) / o).abs());
            d.samples += 1;
        }
    }
    d
}

/// Per-observable deviations of `analytic` from `oracle` on a shared grid.
///
/// A coherence sample counts towards the relative deviation only when both
/// populations entering it reach `floor` in the oracle.
pub fn compare(analytic: &ObservableSeries, oracle: &OracleSeries, floor: f64) -> ComparisonReport {
    assert_eq!(analytic.t.len(), oracle.t.len(), "series on different grids");
    let len = oracle.t.len();
    let mut deviations = Vec::new();
    for (k, series) in oracle.cavity_pop.iter().enumerate() {
        deviations.push(deviation(format!("pop_c[{k}]"), series.iter().map(|&o| (analytic.cavity_pop[k], o, true)), floor));
    }
    for (p, series) in oracle.mech_pop.iter().enumerate() {
        deviations.push(deviation(format!("pop_m[{p}]"), analytic.mech_pop[p].iter().zip(series).map(|(&a, &o)| (a, o, true)), floor));
    }
    for (pair, series) in &oracle.g1 {
        let Some(ana) = analytic.g1_series(*pair) else { continue };
        let pops_ok = |i: usize| {
            let (a, b) = match *pair {
                Pair::ModeMode(a, b) => (oracle.cavity_pop[a][i], oracle.cavity_pop[b][i]),
                Pair::ModeRes(a, p) => (oracle.cavity_pop[a][i], oracle.mech_pop[p][i]),
                Pair::ResRes(p, q) => (oracle.mech_pop[p][i], oracle.mech_pop[q][i]),
            };
            a >= floor && b >= floor
        };
        let it = (0..len).filter_map(|i| match (ana[i].value(), series[i].value()) {
            (Some(a), Some(o)) => Some((a, o, pops_ok(i))),
            _ => None,
        });
        deviations.push(deviation(pair.label(), it, floor));
    }
    if oracle.entropy.len() == len {
        deviations.push(deviation("S_N".into(), analytic.entropy.iter().zip(&oracle.entropy).map(|(&a, &o)| (a, o, true)), floor));
    }
    ComparisonReport { floor, deviations }
}
