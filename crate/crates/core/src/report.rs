//! CSV and JSON artifacts. Every CSV starts with a `# format:` line naming
//! its versioned layout; numbers carry 17 significant digits and undefined
//! coherences are written as `undefined`.

use std::fmt::Write;

use crate::linearized::{LinearizedSeries, ScanReport};
use crate::observables::{Coherence, ObservableSeries, Pair};
use crate::oracle::OracleSeries;

pub const OBSERVABLES_FORMAT: &str = "optomech-observables/1";
pub const LINEARIZED_FORMAT: &str = "optomech-linearized/1";
pub const SCAN_FORMAT: &str = "optomech-scan/1";

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn coherence(c: Coherence) -> String {
    match c {
        Coherence::Value(v) => num(v),
        Coherence::Undefined => "undefined".into(),
    }
}

fn header(n: usize, m: usize, pairs: &[Pair], entropy: bool) -> String {
    let mut cols = vec!["t".to_string()];
    cols.extend((0..n).map(|k| format!("pop_c[{k}]")));
    cols.extend((0..m).map(|p| format!("pop_m[{p}]")));
    cols.extend(pairs.iter().map(|p| p.label()));
    if entropy {
        cols.push("S_N".into());
    }
    cols.join(",")
}

/// Shared layout for analytic and oracle series.
fn series_csv(
    t: &[f64],
    cavity: &dyn Fn(usize, usize) -> f64,
    n: usize,
    mech: &[Vec<f64>],
    g1: &[(Pair, Vec<Coherence>)],
    entropy: &[f64],
) -> String {
    let pairs: Vec<Pair> = g1.iter().map(|(p, _)| *p).collect();
    let with_s = entropy.len() == t.len();
    let mut s = format!("# format: {OBSERVABLES_FORMAT}\n{}\n", header(n, mech.len(), &pairs, with_s));
    for (i, &ti) in t.iter().enumerate() {
        let mut row = vec![num(ti)];
        row.extend((0..n).map(|k| num(cavity(k, i))));
        row.extend(mech.iter().map(|m| num(m[i])));
        row.extend(g1.iter().map(|(_, v)| coherence(v[i])));
        if with_s {
            row.push(num(entropy[i]));
        }
        writeln!(s, "{}", row.join(",")).unwrap();
    }
    s
}

/// Columns `t, pop_c[k]…, pop_m[p]…, g1_*…, S_N`.
pub fn observables_csv(series: &ObservableSeries) -> String {
    series_csv(&series.t, &|k, _| series.cavity_pop[k], series.cavity_pop.len(), &series.mech_pop, &series.g1, &series.entropy)
}

/// Oracle series in the layout of [`observables_csv`]; `S_N` only if purity was computed.
pub fn oracle_csv(series: &OracleSeries) -> String {
    series_csv(&series.t, &|k, i| series.cavity_pop[k][i], series.cavity_pop.len(), &series.mech_pop, &series.g1, &series.entropy)
}

/// Columns `t, pop_c[k], fluct_c[k]…, pop_m[p], fluct_m[p]…`.
pub fn linearized_csv(series: &LinearizedSeries) -> String {
    let mut cols = vec!["t".to_string()];
    for k in 0..series.cavity_pop.len() {
        cols.push(format!("pop_c[{k}]"));
        cols.push(format!("fluct_c[{k}]"));
    }
    for p in 0..series.mech_pop.len() {
        cols.push(format!("pop_m[{p}]"));
        cols.push(format!("fluct_m[{p}]"));
    }
    let mut s = format!("# format: {LINEARIZED_FORMAT}\n{}\n", cols.join(","));
    for (i, &t) in series.t.iter().enumerate() {
        let mut row = vec![num(t)];
        for k in 0..series.cavity_pop.len() {
            row.push(num(series.cavity_pop[k][i]));
            row.push(num(series.cavity_fluct[k][i]));
        }
        for p in 0..series.mech_pop.len() {
            row.push(num(series.mech_pop[p][i]));
            row.push(num(series.mech_fluct[p][i]));
        }
        writeln!(s, "{}", row.join(",")).unwrap();
    }
    s
}

/// Columns `omega_d, model, exponent, label`.
pub fn scan_csv(report: &ScanReport) -> String {
    format!("# format: {SCAN_FORMAT}\n{}", report.to_csv())
}

pub fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("artifacts serialise");
    s.push('\n');
    s
}
