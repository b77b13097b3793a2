//! Physical system, couplings, initial state and time grid.
//!
//! Units: ħ = 1. Frequencies and coupling amplitudes are angular (rad/s), so
//! the Hamiltonian is measured in rad/s as well.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced Planck constant in J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant in J/K.
pub const K_B: f64 = 1.380_649e-23;

/// A (possibly time-dependent) real coupling function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CouplingSpec {
    Constant { base: f64 },
    /// `base·(1 + κ·sin(ω_d t))`
    ModulatedSin { base: f64, kappa: f64, omega_d: f64 },
    /// `base·(1 + κ·cos(ω_d t))`
    ModulatedCos { base: f64, kappa: f64, omega_d: f64 },
    /// Piecewise-linear interpolation through `(t, value)` samples.
    Tabulated { samples: Vec<(f64, f64)> },
}

impl Default for CouplingSpec {
    fn default() -> Self {
        CouplingSpec::Constant { base: 0.0 }
    }
}

impl CouplingSpec {
    pub fn constant(base: f64) -> Self {
        CouplingSpec::Constant { base }
    }

    pub fn modulated_sin(base: f64, kappa: f64, omega_d: f64) -> Self {
        CouplingSpec::ModulatedSin { base, kappa, omega_d }
    }

    pub fn modulated_cos(base: f64, kappa: f64, omega_d: f64) -> Self {
        CouplingSpec::ModulatedCos { base, kappa, omega_d }
    }

    pub fn tabulated(samples: Vec<(f64, f64)>) -> Self {
        CouplingSpec::Tabulated { samples }
    }

    /// Evaluate the coupling at time `t`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        match self {
            CouplingSpec::Constant { base } => Ok(*base),
            CouplingSpec::ModulatedSin { base, kappa, omega_d } => {
                Ok(base * (1.0 + kappa * (omega_d * t).sin()))
            }
            CouplingSpec::ModulatedCos { base, kappa, omega_d } => {
                Ok(base * (1.0 + kappa * (omega_d * t).cos()))
            }
            CouplingSpec::Tabulated { samples } => interpolate(samples, t),
        }
    }

    /// True when the coupling vanishes identically.
    pub fn is_zero(&self) -> bool {
        match self {
            CouplingSpec::Constant { base }
            | CouplingSpec::ModulatedSin { base, .. }
            | CouplingSpec::ModulatedCos { base, .. } => *base == 0.0,
            CouplingSpec::Tabulated { samples } => samples.iter().all(|&(_, v)| v == 0.0),
        }
    }

    /// Modulation frequency, if any.
    pub fn drive_frequency(&self) -> Option<f64> {
        match self {
            CouplingSpec::ModulatedSin { omega_d, .. } | CouplingSpec::ModulatedCos { omega_d, .. } => {
                Some(omega_d.abs())
            }
            _ => None,
        }
    }

    /// The same coupling shape with its amplitude multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            CouplingSpec::Constant { base } => CouplingSpec::Constant { base: base * factor },
            CouplingSpec::ModulatedSin { base, kappa, omega_d } => CouplingSpec::ModulatedSin {
                base: base * factor,
                kappa: *kappa,
                omega_d: *omega_d,
            },
            CouplingSpec::ModulatedCos { base, kappa, omega_d } => CouplingSpec::ModulatedCos {
                base: base * factor,
                kappa: *kappa,
                omega_d: *omega_d,
            },
            CouplingSpec::Tabulated { samples } => CouplingSpec::Tabulated {
                samples: samples.iter().map(|&(t, v)| (t, v * factor)).collect(),
            },
        }
    }
}

fn interpolate(samples: &[(f64, f64)], t: f64) -> Result<f64> {
    let (first, last) = match (samples.first(), samples.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::Invalid("tabulated coupling has no samples".into())),
    };
    if !(t >= first.0 && t <= last.0) {
        return Err(Error::OutOfRange { t, start: first.0, end: last.0 });
    }
    // first index with sample time > t
    let hi = samples.partition_point(|&(ts, _)| ts <= t);
    if hi == 0 {
        return Ok(first.1);
    }
    if hi == samples.len() {
        return Ok(last.1);
    }
    let (t0, v0) = samples[hi - 1];
    let (t1, v1) = samples[hi];
    if t == t0 {
        return Ok(v0);
    }
    let w = (t - t0) / (t1 - t0);
    Ok(v0 + w * (v1 - v0))
}

/// Frequencies and couplings of the generalised nonlinear optomechanical
/// Hamiltonian
///
/// ```text
/// H = Σ_n ω_c,n N_n + Σ_p ω_m,p b_p†b_p
///   + Σ_p [λ_p⁺ B_p⁺ + λ_p⁻ B_p⁻] + Σ_{n,p} N_n [g_np⁺ B_p⁺ + g_np⁻ B_p⁻]
/// ```
///
/// with `B⁺ = b† + b` and `B⁻ = i(b† − b)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub omega_c: Vec<f64>,
    pub omega_m: Vec<f64>,
    /// `g_plus[n][p]`
    pub g_plus: Vec<Vec<CouplingSpec>>,
    /// `g_minus[n][p]`
    pub g_minus: Vec<Vec<CouplingSpec>>,
    pub lambda_plus: Vec<CouplingSpec>,
    pub lambda_minus: Vec<CouplingSpec>,
}

impl SystemSpec {
    /// A system with the given frequencies and every coupling switched off.
    pub fn new(omega_c: Vec<f64>, omega_m: Vec<f64>) -> Self {
        let n = omega_c.len();
        let m = omega_m.len();
        SystemSpec {
            omega_c,
            omega_m,
            g_plus: vec![vec![CouplingSpec::default(); m]; n],
            g_minus: vec![vec![CouplingSpec::default(); m]; n],
            lambda_plus: vec![CouplingSpec::default(); m],
            lambda_minus: vec![CouplingSpec::default(); m],
        }
    }

    pub fn n_cavity(&self) -> usize {
        self.omega_c.len()
    }

    pub fn n_mech(&self) -> usize {
        self.omega_m.len()
    }

    pub fn with_g_plus(mut self, n: usize, p: usize, c: CouplingSpec) -> Self {
        self.g_plus[n][p] = c;
        self
    }

    pub fn with_g_minus(mut self, n: usize, p: usize, c: CouplingSpec) -> Self {
        self.g_minus[n][p] = c;
        self
    }

    pub fn with_lambda_plus(mut self, p: usize, c: CouplingSpec) -> Self {
        self.lambda_plus[p] = c;
        self
    }

    pub fn with_lambda_minus(mut self, p: usize, c: CouplingSpec) -> Self {
        self.lambda_minus[p] = c;
        self
    }

    /// Multiply every light–matter coupling `g_np⁽±⁾` by `factor`.
    pub fn scale_optomechanical(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for row in out.g_plus.iter_mut().chain(out.g_minus.iter_mut()) {
            for c in row.iter_mut() {
                *c = c.scaled(factor);
            }
        }
        out
    }

    /// True when no linear `λ` drive is present on any resonator.
    pub fn has_linear_drive(&self) -> bool {
        self.lambda_plus.iter().chain(&self.lambda_minus).any(|c| !c.is_zero())
    }

    fn all_couplings(&self) -> impl Iterator<Item = (String, &CouplingSpec)> {
        let g = self.g_plus.iter().enumerate().flat_map(|(n, row)| {
            row.iter().enumerate().map(move |(p, c)| (format!("g_plus[{n}][{p}]"), c))
        });
        let gm = self.g_minus.iter().enumerate().flat_map(|(n, row)| {
            row.iter().enumerate().map(move |(p, c)| (format!("g_minus[{n}][{p}]"), c))
        });
        let lp = self.lambda_plus.iter().enumerate().map(|(p, c)| (format!("lambda_plus[{p}]"), c));
        let lm = self.lambda_minus.iter().enumerate().map(|(p, c)| (format!("lambda_minus[{p}]"), c));
        g.chain(gm).chain(lp).chain(lm)
    }

    /// Fastest angular frequency entering the F-function integrands.
    pub fn fastest_frequency(&self) -> f64 {
        let wm = self.omega_m.iter().cloned().fold(0.0, f64::max);
        let wd = self
            .all_couplings()
            .filter_map(|(_, c)| c.drive_frequency())
            .fold(0.0, f64::max);
        // products cos(ω_m t)·sin(ω_d t) oscillate at up to ω_m + ω_d
        if wd > 0.0 {
            wm + wd
        } else {
            wm
        }
    }
}

/// Coherent light in a subset of cavity modes, thermal resonators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialState {
    /// Coherent amplitudes `μ_k`; modes absent from the map start in vacuum.
    pub coherent: BTreeMap<usize, Complex64>,
    /// Thermal squeeze parameters `r_p ≥ 0`, one per resonator.
    pub r: Vec<f64>,
}

impl InitialState {
    pub fn new(coherent: impl IntoIterator<Item = (usize, Complex64)>, r: Vec<f64>) -> Self {
        InitialState { coherent: coherent.into_iter().collect(), r }
    }

    /// Single coherent mode `k` with real amplitude `mu`, every resonator at `r`.
    pub fn single_mode(k: usize, mu: Complex64, r: Vec<f64>) -> Self {
        Self::new([(k, mu)], r)
    }

    /// Thermal parameters from a physical temperature:
    /// `tanh r_p = exp[−ħ ω_m,p / (2 k_B T)]`. A temperature of zero gives `r_p = 0`.
    pub fn from_temperature(
        coherent: impl IntoIterator<Item = (usize, Complex64)>,
        omega_m: &[f64],
        temperature: f64,
    ) -> Self {
        let r = omega_m.iter().map(|&w| r_from_temperature(w, temperature)).collect();
        Self::new(coherent, r)
    }

    /// Thermal parameters from initial phonon numbers, `N_i,p = sinh² r_p`.
    pub fn from_phonons(coherent: impl IntoIterator<Item = (usize, Complex64)>, phonons: &[f64]) -> Self {
        let r = phonons.iter().map(|&n| n.max(0.0).sqrt().asinh()).collect();
        Self::new(coherent, r)
    }

    pub fn mu(&self, k: usize) -> Complex64 {
        self.coherent.get(&k).copied().unwrap_or_default()
    }

    pub fn mu_abs2(&self, k: usize) -> f64 {
        self.mu(k).norm_sqr()
    }

    /// Initial phonon number `N_i,p = sinh² r_p`.
    pub fn thermal_phonons(&self, p: usize) -> f64 {
        self.r[p].sinh().powi(2)
    }

    /// `cosh 2r_p = 1 + 2 N_i,p`.
    pub fn cosh_2r(&self, p: usize) -> f64 {
        (2.0 * self.r[p]).cosh()
    }

    /// Modes with a non-zero coherent amplitude.
    pub fn occupied_modes(&self) -> Vec<usize> {
        self.coherent.iter().filter(|(_, m)| m.norm_sqr() > 0.0).map(|(&k, _)| k).collect()
    }
}

/// `r` such that `tanh r = exp[−ħω/(2 k_B T)]`.
pub fn r_from_temperature(omega: f64, temperature: f64) -> f64 {
    if temperature <= 0.0 {
        return 0.0;
    }
    let x = (-HBAR * omega / (2.0 * K_B * temperature)).exp();
    x.atanh()
}

/// Strictly increasing sample times starting at zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t: Vec<f64>,
}

impl TimeGrid {
    /// `samples` equally spaced points on `[0, t_end]`.
    pub fn uniform(t_end: f64, samples: usize) -> Result<Self> {
        if samples < 2 {
            return Err(Error::Invalid("a time grid needs at least 2 points".into()));
        }
        if !(t_end > 0.0) {
            return Err(Error::Invalid(format!("grid end time must be positive, got {t_end}")));
        }
        let h = t_end / (samples - 1) as f64;
        let t = (0..samples).map(|i| if i + 1 == samples { t_end } else { i as f64 * h }).collect();
        Ok(TimeGrid { t })
    }

    /// Arbitrary sample times; must start at 0 and increase strictly.
    pub fn from_times(t: Vec<f64>) -> Result<Self> {
        let grid = TimeGrid { t };
        let problems = grid.problems();
        if let Some(p) = problems.first() {
            return Err(Error::Invalid(p.clone()));
        }
        Ok(grid)
    }

    /// Grid without checks; `validate_spec` reports anything wrong.
    pub fn unchecked(t: Vec<f64>) -> Self {
        TimeGrid { t }
    }

    fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.t.len() < 2 {
            out.push("time grid needs at least 2 points".to_string());
        }
        if let Some(&t0) = self.t.first() {
            if t0 != 0.0 {
                out.push(format!("time grid must start at 0, starts at {t0}"));
            }
        }
        if self.t.windows(2).any(|w| !(w[1] > w[0])) {
            out.push("time grid must be strictly increasing".to_string());
        }
        out
    }

    pub fn times(&self) -> &[f64] {
        &self.t
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn end(&self) -> f64 {
        *self.t.last().unwrap_or(&0.0)
    }

    /// Largest spacing between consecutive samples.
    pub fn max_step(&self) -> f64 {
        self.t.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Equal spacing to within a relative 1e-9.
    pub fn is_uniform(&self) -> bool {
        if self.t.len() < 3 {
            return true;
        }
        let h = (self.end() - self.t[0]) / (self.t.len() - 1) as f64;
        self.t.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h)
    }

    /// Insert `k − 1` equally spaced points inside every interval.
    pub fn refined(&self, k: usize) -> TimeGrid {
        if k <= 1 {
            return self.clone();
        }
        let mut t = Vec::with_capacity((self.t.len() - 1) * k + 1);
        for w in self.t.windows(2) {
            let h = (w[1] - w[0]) / k as f64;
            for j in 0..k {
                t.push(w[0] + j as f64 * h);
            }
        }
        t.push(self.end());
        TimeGrid { t }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

/// Every violated invariant of a scenario. An empty `violations` list means
/// the scenario is runnable; `warnings` never block a run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub warnings: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_runnable(&self) -> bool {
        self.violations.is_empty()
    }

    fn violation(&mut self, field: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation { field: field.into(), message: message.into() });
    }

    fn warning(&mut self, field: impl Into<String>, message: impl Into<String>) {
        self.warnings.push(Violation { field: field.into(), message: message.into() });
    }
}

/// Check shapes, positivity, tabulated monotonicity and coverage.
pub fn validate_spec(spec: &SystemSpec, state: &InitialState, grid: &TimeGrid) -> ValidationReport {
    let mut report = ValidationReport::default();
    let n = spec.n_cavity();
    let m = spec.n_mech();

    for (i, &w) in spec.omega_c.iter().enumerate() {
        if !(w > 0.0) || !w.is_finite() {
            report.violation(format!("omega_c[{i}]"), "frequency must be positive");
        }
    }
    for (i, &w) in spec.omega_m.iter().enumerate() {
        if !(w > 0.0) || !w.is_finite() {
            report.violation(format!("omega_m[{i}]"), "frequency must be positive");
        }
    }
    if m == 0 {
        report.violation("omega_m", "at least one resonator is required");
    }
    for (name, table) in [("g_plus", &spec.g_plus), ("g_minus", &spec.g_minus)] {
        if table.len() != n || table.iter().any(|row| row.len() != m) {
            report.violation(name, format!("shape must be {n} × {m}"));
        }
    }
    for (name, v) in [("lambda_plus", &spec.lambda_plus), ("lambda_minus", &spec.lambda_minus)] {
        if v.len() != m {
            report.violation(name, format!("length must be {m}"));
        }
    }

    for problem in grid.problems() {
        report.violation("grid", problem);
    }
    let (t_lo, t_hi) = (grid.t.first().copied().unwrap_or(0.0), grid.end());

    for (field, c) in spec.all_couplings() {
        match c {
            CouplingSpec::Tabulated { samples } => {
                if samples.is_empty() {
                    report.violation(&field, "tabulated coupling needs samples");
                } else if samples.windows(2).any(|w| !(w[1].0 > w[0].0)) {
                    report.violation(&field, "tabulated sample times must be strictly increasing");
                } else if samples[0].0 > t_lo || samples[samples.len() - 1].0 < t_hi {
                    report.violation(&field, "tabulated samples do not cover the time grid");
                }
                if samples.iter().any(|&(t, v)| !t.is_finite() || !v.is_finite()) {
                    report.violation(&field, "tabulated samples must be finite");
                }
            }
            CouplingSpec::Constant { base }
            | CouplingSpec::ModulatedSin { base, .. }
            | CouplingSpec::ModulatedCos { base, .. } => {
                if !base.is_finite() {
                    report.violation(&field, "amplitude must be finite");
                } else if *base < 0.0 {
                    report.warning(&field, "negative amplitude");
                }
                if let CouplingSpec::ModulatedSin { kappa, omega_d, .. }
                | CouplingSpec::ModulatedCos { kappa, omega_d, .. } = c
                {
                    if !kappa.is_finite() || !omega_d.is_finite() {
                        report.violation(&field, "modulation parameters must be finite");
                    }
                }
            }
        }
    }

    if state.r.len() != m {
        report.violation("r", format!("length must be {m}"));
    }
    for (p, &r) in state.r.iter().enumerate() {
        if !(r >= 0.0) || !r.is_finite() {
            report.violation(format!("r[{p}]"), "thermal parameter must be finite and ≥ 0");
        }
    }
    for (&k, mu) in &state.coherent {
        if k >= n {
            report.violation(format!("coherent[{k}]"), format!("mode index out of range (n_cavity = {n})"));
        }
        if !mu.re.is_finite() || !mu.im.is_finite() {
            report.violation(format!("coherent[{k}]"), "amplitude must be finite");
        }
    }

    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ok_grid() -> TimeGrid {
        TimeGrid::uniform(1.0, 11).unwrap()
    }

    #[test]
    fn well_formed_single_mode_is_runnable() {
        let spec = SystemSpec::new(vec![2.0], vec![1.0]).with_g_plus(0, 0, CouplingSpec::constant(0.1));
        let state = InitialState::single_mode(0, Complex64::new(1.0, 0.0), vec![0.0]);
        let report = validate_spec(&spec, &state, &ok_grid());
        assert!(report.is_runnable(), "{report:?}");
        assert!(report.warnings.is_empty());
    }

    #[test]
    fn zero_mechanical_frequency_is_flagged() {
        let spec = SystemSpec::new(vec![2.0], vec![0.0]);
        let state = InitialState::new([], vec![0.0]);
        let report = validate_spec(&spec, &state, &ok_grid());
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].field, "omega_m[0]");
        assert_eq!(report.violations[0].message, "frequency must be positive");
    }

    #[test]
    fn non_monotone_tabulated_is_flagged() {
        let spec = SystemSpec::new(vec![2.0], vec![1.0])
            .with_g_plus(0, 0, CouplingSpec::tabulated(vec![(0.0, 0.1), (0.7, 0.2), (0.5, 0.3), (1.0, 0.1)]));
        let state = InitialState::new([], vec![0.0]);
        let report = validate_spec(&spec, &state, &ok_grid());
        assert!(!report.is_runnable());
        assert!(report.violations[0].message.contains("strictly increasing"));
    }

    #[test]
    fn negative_amplitude_only_warns() {
        let spec = SystemSpec::new(vec![2.0], vec![1.0]).with_g_plus(0, 0, CouplingSpec::constant(-0.1));
        let state = InitialState::new([], vec![0.0]);
        let report = validate_spec(&spec, &state, &ok_grid());
        assert!(report.is_runnable());
        assert_eq!(report.warnings.len(), 1);
    }

    #[test]
    fn shape_and_index_errors_are_all_reported() {
        let mut spec = SystemSpec::new(vec![2.0, 3.0], vec![1.0]);
        spec.g_minus.pop();
        spec.lambda_plus.push(CouplingSpec::default());
        let state = InitialState::new([(5, Complex64::new(1.0, 0.0))], vec![0.0, 0.0]);
        let bad_grid = TimeGrid::unchecked(vec![0.1, 0.05]);
        let report = validate_spec(&spec, &state, &bad_grid);
        let fields: Vec<_> = report.violations.iter().map(|v| v.field.as_str()).collect();
        for f in ["g_minus", "lambda_plus", "grid", "r", "coherent[5]"] {
            assert!(fields.contains(&f), "missing {f} in {fields:?}");
        }
    }

    #[test]
    fn coupling_examples() {
        assert_eq!(CouplingSpec::constant(0.1).eval(123.4).unwrap(), 0.1);
        assert_eq!(CouplingSpec::modulated_sin(0.1, 0.5, 2.0).eval(0.0).unwrap(), 0.1);
        let c = CouplingSpec::modulated_cos(0.1, 0.5, 2.0).eval(0.0).unwrap();
        assert!((c - 0.15).abs() < 1e-15);
    }

    #[test]
    fn tabulated_interpolates_and_rejects_out_of_range() {
        let c = CouplingSpec::tabulated(vec![(0.0, 1.0), (1.0, 3.0), (3.0, -1.0)]);
        assert_eq!(c.eval(0.5).unwrap(), 2.0);
        assert_eq!(c.eval(2.0).unwrap(), 1.0);
        assert_eq!(c.eval(3.0).unwrap(), -1.0);
        assert!(matches!(c.eval(3.5), Err(Error::OutOfRange { .. })));
        assert!(matches!(c.eval(-0.1), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn temperature_round_trip() {
        let omega = 2.0 * std::f64::consts::PI * 1.0e6;
        let temp = 1.0e-3;
        let r = r_from_temperature(omega, temp);
        let expect = (-HBAR * omega / (2.0 * K_B * temp)).exp();
        assert!((r.tanh() - expect).abs() < 1e-14);
        assert_eq!(r_from_temperature(omega, 0.0), 0.0);
        let st = InitialState::from_phonons([], &[0.34, 60.0]);
        assert!((st.thermal_phonons(0) - 0.34).abs() < 1e-12);
        assert!((st.thermal_phonons(1) - 60.0).abs() < 1e-9);
        assert!((st.cosh_2r(1) - 121.0).abs() < 1e-9);
    }

    #[test]
    fn grid_refinement_keeps_nodes() {
        let g = TimeGrid::from_times(vec![0.0, 1.0, 3.0]).unwrap();
        let r = g.refined(2);
        assert_eq!(r.times(), &[0.0, 0.5, 1.0, 2.0, 3.0]);
        assert!(!g.is_uniform());
        assert!(TimeGrid::uniform(2.0, 5).unwrap().is_uniform());
        assert!(TimeGrid::from_times(vec![0.0]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn modulated_coupling_is_bounded(base in -2.0f64..2.0, kappa in -1.0f64..1.0,
                                             wd in 0.0f64..10.0, t in 0.0f64..100.0) {
                let lo = base.abs() * (1.0 - kappa.abs());
                let hi = base.abs() * (1.0 + kappa.abs());
                for c in [CouplingSpec::modulated_sin(base, kappa, wd), CouplingSpec::modulated_cos(base, kappa, wd)] {
                    let v = c.eval(t).unwrap().abs();
                    prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
                }
            }

            #[test]
            fn tabulated_reproduces_samples(values in proptest::collection::vec(-5.0f64..5.0, 2..20),
                                            steps in proptest::collection::vec(0.01f64..2.0, 20)) {
                let mut t = 0.0;
                let samples: Vec<(f64, f64)> = values.iter().zip(&steps).map(|(&v, &h)| {
                    let s = (t, v);
                    t += h;
                    s
                }).collect();
                let c = CouplingSpec::tabulated(samples.clone());
                for (ts, v) in samples {
                    prop_assert_eq!(c.eval(ts).unwrap(), v);
                }
            }
        }
    }
}
