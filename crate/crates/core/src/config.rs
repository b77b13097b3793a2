//! Scenario files.
//!
//! A scenario is TOML with the sections `[system]`, `[[coupling]]`, `[state]`,
//! `[grid]` and the optional `[oracle]`, `[linearized]`, `[scan]` and
//! `[[sweep]]`. Unknown keys are parse errors. See `examples/scenario.toml`
//! in the CLI crate for a documented instance.
//!
//! Every `[[sweep]]` entry is a named set of overrides on the base scenario;
//! with sweeps present only the sweep points are run.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linearized::{Drive, DriveKind, LinearizedSpec, Regime, Resonance};
use crate::model::{validate_spec, CouplingSpec, InitialState, SystemSpec, TimeGrid, ValidationReport, Violation};
use crate::oracle::{FockSpace, OracleOptions, PropagationOptions, DEFAULT_BUDGET};
use crate::Complex64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: Option<String>,
    pub system: SystemSection,
    #[serde(default)]
    pub coupling: Vec<CouplingEntry>,
    #[serde(default)]
    pub state: StateSection,
    pub grid: GridSection,
    #[serde(default)]
    pub oracle: Option<OracleSection>,
    #[serde(default)]
    pub linearized: Option<LinearizedSection>,
    #[serde(default)]
    pub scan: Option<ScanSection>,
    #[serde(default)]
    pub sweep: Vec<SweepEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub omega_c: Vec<f64>,
    pub omega_m: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingTerm {
    GPlus,
    GMinus,
    LambdaPlus,
    LambdaMinus,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    #[default]
    Constant,
    ModulatedSin,
    ModulatedCos,
    Tabulated,
}

/// One coupling function. `mode` is required for `g_plus`/`g_minus` and
/// forbidden for the linear drives.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingEntry {
    pub term: CouplingTerm,
    #[serde(default)]
    pub mode: Option<usize>,
    pub resonator: usize,
    #[serde(default)]
    pub shape: Shape,
    #[serde(default)]
    pub base: Option<f64>,
    #[serde(default)]
    pub kappa: Option<f64>,
    #[serde(default)]
    pub omega_d: Option<f64>,
    /// `[[t, value], …]` for tabulated couplings.
    #[serde(default)]
    pub samples: Option<Vec<[f64; 2]>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoherentEntry {
    pub mode: usize,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

/// Coherent amplitudes and at most one of `r`, `phonons`, `temperature`
/// (all resonators in their ground state if none is given).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSection {
    #[serde(default)]
    pub coherent: Vec<CoherentEntry>,
    #[serde(default)]
    pub r: Option<Vec<f64>>,
    #[serde(default)]
    pub phonons: Option<Vec<f64>>,
    /// `k_B T / ħ` in the frequency unit of the scenario.
    #[serde(default)]
    pub temperature: Option<f64>,
}

/// Either explicit `times` (starting at 0) or `t_end` with `samples`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default)]
    pub t_end: Option<f64>,
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub times: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    pub cavity_cutoffs: Vec<usize>,
    pub mech_cutoffs: Vec<usize>,
    #[serde(default = "default_budget")]
    pub budget: usize,
    /// Oracle values below this are left out of relative deviations.
    #[serde(default = "default_floor")]
    pub floor: f64,
    #[serde(default = "default_true")]
    pub purity: bool,
    /// Local error tolerance per unit time of the propagator.
    #[serde(default = "default_tol")]
    pub tolerance: f64,
}

fn default_budget() -> usize {
    DEFAULT_BUDGET
}
fn default_floor() -> f64 {
    1e-6
}
fn default_true() -> bool {
    true
}
fn default_tol() -> f64 {
    1e-10
}
fn default_kappa() -> f64 {
    1.0
}
fn default_overflow() -> f64 {
    1e-6
}
fn default_series_samples() -> usize {
    401
}

/// The linearised model. The base couplings are the constant `g_plus`
/// entries of the scenario. Without `omega_d` the drive sits on the
/// sideband named by `regime`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearizedSection {
    pub alpha: Vec<f64>,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default)]
    pub omega_d: Option<f64>,
    #[serde(default = "default_drive")]
    pub drive: DriveKind,
    #[serde(default)]
    pub regime: Option<Regime>,
    #[serde(default)]
    pub mode: usize,
    #[serde(default)]
    pub resonator: usize,
    pub horizon: f64,
    #[serde(default = "default_series_samples")]
    pub samples: usize,
    /// Also propagate in a truncated Fock basis.
    #[serde(default)]
    pub fock: Option<FockSection>,
}

fn default_drive() -> DriveKind {
    DriveKind::Sin
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FockSection {
    pub cavity_cutoffs: Vec<usize>,
    pub mech_cutoffs: Vec<usize>,
    #[serde(default = "default_overflow")]
    pub overflow: f64,
}

/// Drive frequencies to classify; needs `[linearized]` for `α`, `κ` and the drive shape.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub omega_d: Vec<f64>,
    pub horizon: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepEntry {
    pub name: String,
    /// Multiplies every optomechanical coupling `g±`.
    #[serde(default)]
    pub coupling_scale: Option<f64>,
    #[serde(default)]
    pub coherent: Option<Vec<CoherentEntry>>,
    #[serde(default)]
    pub r: Option<Vec<f64>>,
    #[serde(default)]
    pub phonons: Option<Vec<f64>>,
    #[serde(default)]
    pub temperature: Option<f64>,
    #[serde(default)]
    pub t_end: Option<f64>,
    #[serde(default)]
    pub samples: Option<usize>,
}

/// Oracle settings of a resolved point.
#[derive(Clone, Debug)]
pub struct OracleRun {
    pub space: FockSpace,
    pub options: OracleOptions,
    pub floor: f64,
}

#[derive(Clone, Debug)]
pub struct LinearizedRun {
    pub spec: LinearizedSpec,
    /// Fluctuation state: the scenario's resonators, cavity fluctuations in vacuum.
    pub state: InitialState,
    pub resonance: Option<Resonance>,
    pub mode: usize,
    pub resonator: usize,
    pub grid: TimeGrid,
    pub fock: Option<(FockSpace, f64)>,
}

#[derive(Clone, Debug)]
pub struct ScanRun {
    pub omega_d: Vec<f64>,
    pub horizon: f64,
}

/// One runnable point: the base scenario or one sweep entry applied to it.
#[derive(Clone, Debug)]
pub struct ScenarioPoint {
    pub name: String,
    /// Came from a `[[sweep]]` entry rather than the bare base scenario.
    pub is_sweep: bool,
    pub system: SystemSpec,
    pub state: InitialState,
    pub grid: TimeGrid,
    pub oracle: Option<OracleRun>,
    pub linearized: Option<LinearizedRun>,
    pub scan: Option<ScanRun>,
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Scenario> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Scenario> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Resolve into runnable points, refining every grid `refine` times.
    /// Every problem across all points is collected into one report.
    pub fn resolve(&self, refine: usize) -> std::result::Result<Vec<ScenarioPoint>, ValidationReport> {
        let mut report = ValidationReport::default();
        let mut points = Vec::new();
        let base = self.name.clone().unwrap_or_else(|| "base".into());
        let variants: Vec<(String, Option<&SweepEntry>)> = if self.sweep.is_empty() {
            vec![(base, None)]
        } else {
            self.sweep.iter().map(|s| (s.name.clone(), Some(s))).collect()
        };
        let mut seen = BTreeSet::new();
        for (name, sweep) in variants {
            let prefix = if sweep.is_some() { format!("sweep[{name}].") } else { String::new() };
            if !seen.insert(name.clone()) {
                report.violations.push(Violation { field: format!("{prefix}name"), message: "duplicate sweep name".into() });
                continue;
            }
            if name.is_empty() || name.contains(['/', '\\']) || name.starts_with('.') {
                report.violations.push(Violation { field: format!("{prefix}name"), message: "name must be a plain file name".into() });
                continue;
            }
            let mut local = ValidationReport::default();
            let point = self.point(&name, sweep, refine, &mut local);
            for mut v in local.violations {
                v.field = format!("{prefix}{}", v.field);
                report.violations.push(v);
            }
            for mut w in local.warnings {
                w.field = format!("{prefix}{}", w.field);
                report.warnings.push(w);
            }
            if let Some(p) = point {
                points.push(p);
            }
        }
        if report.is_runnable() {
            Ok(points)
        } else {
            Err(report)
        }
    }

    fn point(&self, name: &str, sweep: Option<&SweepEntry>, refine: usize, report: &mut ValidationReport) -> Option<ScenarioPoint> {
        let mut bad = |field: &str, message: String| report.violations.push(Violation { field: field.into(), message });
        let n = self.system.omega_c.len();
        let m = self.system.omega_m.len();
        let mut system = SystemSpec::new(self.system.omega_c.clone(), self.system.omega_m.clone());
        for (i, c) in self.coupling.iter().enumerate() {
            let field = format!("coupling[{i}]");
            let Some(spec) = coupling_spec(c, &field, &mut bad) else { continue };
            if c.resonator >= m {
                bad(&field, format!("resonator {} out of range (n_mech = {m})", c.resonator));
                continue;
            }
            match (c.term, c.mode) {
                (CouplingTerm::GPlus | CouplingTerm::GMinus, None) => bad(&field, "optomechanical couplings need a mode".into()),
                (CouplingTerm::GPlus | CouplingTerm::GMinus, Some(k)) if k >= n => bad(&field, format!("mode {k} out of range (n_cavity = {n})")),
                (CouplingTerm::LambdaPlus | CouplingTerm::LambdaMinus, Some(_)) => bad(&field, "linear drives take no mode".into()),
                (CouplingTerm::GPlus, Some(k)) => system.g_plus[k][c.resonator] = spec,
                (CouplingTerm::GMinus, Some(k)) => system.g_minus[k][c.resonator] = spec,
                (CouplingTerm::LambdaPlus, None) => system.lambda_plus[c.resonator] = spec,
                (CouplingTerm::LambdaMinus, None) => system.lambda_minus[c.resonator] = spec,
            }
        }
        if let Some(scale) = sweep.and_then(|s| s.coupling_scale) {
            system = system.scale_optomechanical(scale);
        }

        let coherent = sweep.and_then(|s| s.coherent.as_ref()).unwrap_or(&self.state.coherent);
        let mut amps = Vec::new();
        let mut modes = BTreeSet::new();
        for c in coherent {
            if !modes.insert(c.mode) {
                bad("state.coherent", format!("mode {} listed twice", c.mode));
            }
            amps.push((c.mode, Complex64::new(c.re, c.im)));
        }
        let thermal = match sweep {
            Some(s) if s.r.is_some() || s.phonons.is_some() || s.temperature.is_some() => (&s.r, &s.phonons, &s.temperature),
            _ => (&self.state.r, &self.state.phonons, &self.state.temperature),
        };
        let state = match thermal {
            (None, None, None) => InitialState::new(amps, vec![0.0; m]),
            (Some(r), None, None) => InitialState::new(amps, r.clone()),
            (None, Some(ph), None) => {
                if ph.iter().any(|&x| !(x >= 0.0)) {
                    bad("state.phonons", "phonon numbers must be ≥ 0".into());
                }
                InitialState::from_phonons(amps, ph)
            }
            (None, None, Some(temp)) => {
                if !(*temp >= 0.0) {
                    bad("state.temperature", "temperature must be ≥ 0".into());
                }
                InitialState::from_temperature(amps, &self.system.omega_m, *temp)
            }
            _ => {
                bad("state", "give at most one of r, phonons, temperature".into());
                InitialState::new(amps, vec![0.0; m])
            }
        };

        let t_end = sweep.and_then(|s| s.t_end).or(self.grid.t_end);
        let samples = sweep.and_then(|s| s.samples).or(self.grid.samples);
        let overridden = sweep.is_some_and(|s| s.t_end.is_some() || s.samples.is_some());
        let grid = match (&self.grid.times, t_end, samples) {
            (Some(t), _, _) if !overridden => TimeGrid::from_times(t.clone()),
            (_, Some(t_end), Some(samples)) => TimeGrid::uniform(t_end, samples),
            _ => Err(Error::Invalid("give either times, or t_end and samples".into())),
        };
        let grid = match grid {
            Ok(g) => g.refined(refine.max(1)),
            Err(e) => {
                bad("grid", e.to_string());
                TimeGrid::unchecked(vec![0.0])
            }
        };

        let spec_report = validate_spec(&system, &state, &grid);
        report.violations.extend(spec_report.violations);
        report.warnings.extend(spec_report.warnings);
        let mut bad = |field: &str, message: String| report.violations.push(Violation { field: field.into(), message });

        let oracle = self.oracle.as_ref().and_then(|o| {
            if o.cavity_cutoffs.len() != n || o.mech_cutoffs.len() != m {
                bad("oracle", format!("need {n} cavity and {m} resonator cutoffs"));
                return None;
            }
            if !(o.floor >= 0.0) || !(o.tolerance > 0.0) {
                bad("oracle", "floor must be ≥ 0 and tolerance > 0".into());
                return None;
            }
            match FockSpace::with_budget(&o.cavity_cutoffs, &o.mech_cutoffs, o.budget) {
                Ok(space) => Some(OracleRun {
                    space,
                    options: OracleOptions {
                        propagation: PropagationOptions { tol_per_time: o.tolerance, ..Default::default() },
                        purity: o.purity,
                    },
                    floor: o.floor,
                }),
                Err(e) => {
                    bad("oracle", e.to_string());
                    None
                }
            }
        });

        let linearized = self.linearized.as_ref().and_then(|l| {
            if l.mode >= n || l.resonator >= m {
                bad("linearized", "mode or resonator out of range".into());
                return None;
            }
            let resonance = l.regime.map(|regime| Resonance { regime, mode: l.mode, resonator: l.resonator });
            let omega_d = match (l.omega_d, resonance) {
                (Some(w), _) => w,
                (None, Some(res)) => res.drive_frequency(&system),
                (None, None) => {
                    bad("linearized", "give omega_d or regime".into());
                    return None;
                }
            };
            let base = unmodulated(&system);
            let spec = match LinearizedSpec::new(base, l.alpha.clone(), Drive { omega_d, kappa: l.kappa, kind: l.drive }) {
                Ok(s) => s,
                Err(e) => {
                    bad("linearized", e.to_string());
                    return None;
                }
            };
            let grid = match TimeGrid::uniform(l.horizon, l.samples) {
                Ok(g) => g,
                Err(e) => {
                    bad("linearized", e.to_string());
                    return None;
                }
            };
            let fock = match &l.fock {
                None => None,
                Some(f) => match FockSpace::new(&f.cavity_cutoffs, &f.mech_cutoffs) {
                    Ok(space) if space.n_cavity() == n && space.n_mech() == m => Some((space, f.overflow)),
                    Ok(_) => {
                        bad("linearized.fock", format!("need {n} cavity and {m} resonator cutoffs"));
                        return None;
                    }
                    Err(e) => {
                        bad("linearized.fock", e.to_string());
                        return None;
                    }
                },
            };
            Some(LinearizedRun { spec, state: InitialState::new([], state.r.clone()), resonance, mode: l.mode, resonator: l.resonator, grid, fock })
        });

        let scan = self.scan.as_ref().and_then(|s| {
            if self.linearized.is_none() {
                bad("scan", "a scan needs the [linearized] section".into());
                return None;
            }
            if s.omega_d.is_empty() || s.omega_d.iter().any(|&w| !(w > 0.0)) || !(s.horizon > 0.0) {
                bad("scan", "drive frequencies and horizon must be positive".into());
                return None;
            }
            if state.occupied_modes().len() != 1 {
                bad("scan", "the full-model scan needs exactly one coherent mode".into());
                return None;
            }
            Some(ScanRun { omega_d: s.omega_d.clone(), horizon: s.horizon })
        });

        report.is_runnable().then(|| ScenarioPoint { name: name.to_string(), is_sweep: sweep.is_some(), system, state, grid, oracle, linearized, scan })
    }
}

/// The base couplings of a scenario stripped of any modulation.
fn unmodulated(system: &SystemSpec) -> SystemSpec {
    let mut s = system.clone();
    for row in s.g_plus.iter_mut() {
        for c in row.iter_mut() {
            if let CouplingSpec::ModulatedSin { base, .. } | CouplingSpec::ModulatedCos { base, .. } = *c {
                *c = CouplingSpec::constant(base);
            }
        }
    }
    s
}

fn coupling_spec(c: &CouplingEntry, field: &str, bad: &mut impl FnMut(&str, String)) -> Option<CouplingSpec> {
    let need = |x: Option<f64>, what: &str, bad: &mut dyn FnMut(&str, String)| {
        if x.is_none() {
            bad(field, format!("{what} is required for this shape"));
        }
        x
    };
    match c.shape {
        Shape::Constant => Some(CouplingSpec::constant(need(c.base, "base", bad)?)),
        Shape::ModulatedSin | Shape::ModulatedCos => {
            let base = need(c.base, "base", bad);
            let kappa = need(c.kappa, "kappa", bad);
            let omega_d = need(c.omega_d, "omega_d", bad);
            let (base, kappa, omega_d) = (base?, kappa?, omega_d?);
            Some(if c.shape == Shape::ModulatedSin {
                CouplingSpec::modulated_sin(base, kappa, omega_d)
            } else {
                CouplingSpec::modulated_cos(base, kappa, omega_d)
            })
        }
        Shape::Tabulated => match &c.samples {
            Some(s) => Some(CouplingSpec::tabulated(s.iter().map(|&[t, v]| (t, v)).collect())),
            None => {
                bad(field, "samples are required for a tabulated coupling".into());
                None
            }
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"
[system]
omega_c = [5.0]
omega_m = [1.0]

[[coupling]]
term = "g_plus"
mode = 0
resonator = 0
base = 0.1

[state]
coherent = [{ mode = 0, re = 1.0 }]
r = [0.2]

[grid]
t_end = 6.0
samples = 61
"#;

    #[test]
    fn basic_scenario_resolves() {
        let s = Scenario::from_toml_str(BASIC).unwrap();
        let pts = s.resolve(1).unwrap();
        assert_eq!(pts.len(), 1);
        let p = &pts[0];
        assert_eq!(p.name, "base");
        assert_eq!(p.system.g_plus[0][0], CouplingSpec::constant(0.1));
        assert_eq!(p.state.mu(0), Complex64::new(1.0, 0.0));
        assert_eq!(p.grid.len(), 61);
        assert!(p.oracle.is_none() && p.linearized.is_none() && p.scan.is_none());
        assert_eq!(s.resolve(2).unwrap()[0].grid.len(), 121);
    }

    #[test]
    fn unknown_fields_are_parse_errors_with_location() {
        let text = BASIC.replace("samples = 61", "samples = 61\nsampels = 3");
        match Scenario::from_toml_str(&text) {
            Err(Error::Parse(msg)) => assert!(msg.contains("sampels") && msg.contains("line"), "{msg}"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(Scenario::from_toml_str("[system\n"), Err(Error::Parse(_))));
    }

    #[test]
    fn semantic_problems_are_collected() {
        let text = BASIC.replace("mode = 0\nresonator = 0", "resonator = 3").replace("r = [0.2]", "r = [-1.0]");
        let s = Scenario::from_toml_str(&text).unwrap();
        let report = s.resolve(1).unwrap_err();
        let fields: Vec<&str> = report.violations.iter().map(|v| v.field.as_str()).collect();
        assert!(fields.contains(&"coupling[0]"), "{fields:?}");
        assert!(fields.contains(&"r[0]"), "{fields:?}");
    }

    #[test]
    fn sweeps_override_the_base() {
        let text = format!(
            "{BASIC}\n[[sweep]]\nname = \"weak\"\ncoupling_scale = 0.5\n\n[[sweep]]\nname = \"hot\"\nphonons = [2.0]\nt_end = 3.0\nsamples = 31\n"
        );
        let pts = Scenario::from_toml_str(&text).unwrap().resolve(1).unwrap();
        assert_eq!(pts.iter().map(|p| p.name.as_str()).collect::<Vec<_>>(), ["weak", "hot"]);
        assert_eq!(pts[0].system.g_plus[0][0], CouplingSpec::constant(0.05));
        assert!((pts[1].state.thermal_phonons(0) - 2.0).abs() < 1e-12);
        assert_eq!(pts[1].grid.len(), 31);
        assert_eq!(pts[0].state.r, vec![0.2]);
    }

    #[test]
    fn linearized_and_scan_sections() {
        let text = format!(
            "{BASIC}\n[linearized]\nalpha = [10.0]\nkappa = 0.5\nregime = \"squeezing\"\nhorizon = 50.0\n\n[scan]\nomega_d = [1.0, 4.0, 6.0]\nhorizon = 200.0\n"
        );
        let pts = Scenario::from_toml_str(&text).unwrap().resolve(1).unwrap();
        let l = pts[0].linearized.as_ref().unwrap();
        assert_eq!(l.spec.drive.omega_d, 6.0);
        assert_eq!(l.spec.base_g(0, 0), 0.1);
        assert_eq!(pts[0].scan.as_ref().unwrap().omega_d.len(), 3);
    }

    #[test]
    fn oracle_budget_is_a_validation_error() {
        let text = format!("{BASIC}\n[oracle]\ncavity_cutoffs = [100]\nmech_cutoffs = [100]\n");
        let report = Scenario::from_toml_str(&text).unwrap().resolve(1).unwrap_err();
        assert_eq!(report.violations[0].field, "oracle");
    }
}
