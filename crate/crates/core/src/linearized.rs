//! Linearised comparison model and the modulated-coupling resonance test.
//!
//! Linearising `a_n → α_n + δa_n` (real `α_n`, cavity fluctuations in vacuum)
//! leaves
//!
//! ```text
//! H_lin = Σ ω_c,n δa_n†δa_n + Σ ω_m,p b_p†b_p + Σ g_np(t) α_n² B_p⁺ + Σ α_n g_np(t) (δa_n + δa_n†) B_p⁺
//! ```
//!
//! With `g(t) = g (1 + κ sin ω_d t)` and `ω_d = ω_c ± ω_m`, the rotating-wave
//! part of the interaction is a two-mode squeezer (`+`) or a beam splitter
//! (`−`) of rate `χ = ½ α κ g`. Starting from vacuum fluctuations and
//! thermal resonators (`N_i = sinh² r`):
//!
//! ```text
//! squeezing:   ⟨δa†δa⟩ = (N_i + 1) sinh² χt     ⟨b†b⟩ = N_i + (N_i + 1) sinh² χt
//! mode mixing: ⟨δa†δa⟩ = N_i sin² χt             ⟨b†b⟩ = N_i cos² χt
//! ```
//!
//! Detuning the drive by `δ` turns `χt` into `νt` with `ν² = χ² − δ²/4`
//! (squeezing) or `Ω² = χ² + δ²/4` (mixing) and scales the transferred
//! population by `χ²/ν²` or `χ²/Ω²`.
//!
//! The full nonlinear model has no such resonance: its resonators are only
//! displaced, by `β(t) = g ∫ (1 + κ sin ω_d t') e^{−iω_m t'} dt'` per photon,
//! which grows secularly only for `ω_d = ω_m`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CouplingSpec, InitialState, SystemSpec, TimeGrid};
use crate::oracle::{b_plus, lower_action, operator, propagate_with, FockSpace, Hamiltonian, Ladder, Mixture, PropagationOptions, Term};

/// Growth exponents above this mark a resonance.
pub const RESONANT_EXPONENT: f64 = 1.5;

/// Relative envelope size below which a series counts as flat.
pub const ENVELOPE_FLOOR: f64 = 1e-12;

/// Scans shorter than this many drive periods carry a warning.
pub const MIN_SCAN_PERIODS: f64 = 10.0;

/// Integration steps per period of the fastest frequency in the moment oracle.
pub const MOMENT_STEPS_PER_PERIOD: f64 = 200.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriveKind {
    Sin,
    Cos,
}

/// Coupling modulation `1 + κ sin ω_d t` or `1 + κ cos ω_d t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Drive {
    pub omega_d: f64,
    pub kappa: f64,
    pub kind: DriveKind,
}

impl Drive {
    pub fn sin(omega_d: f64, kappa: f64) -> Self {
        Drive { omega_d, kappa, kind: DriveKind::Sin }
    }

    pub fn cos(omega_d: f64, kappa: f64) -> Self {
        Drive { omega_d, kappa, kind: DriveKind::Cos }
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega_d
    }

    pub fn coupling(&self, base: f64) -> CouplingSpec {
        match self.kind {
            DriveKind::Sin => CouplingSpec::modulated_sin(base, self.kappa, self.omega_d),
            DriveKind::Cos => CouplingSpec::modulated_cos(base, self.kappa, self.omega_d),
        }
    }

    pub fn with_frequency(self, omega_d: f64) -> Self {
        Drive { omega_d, ..self }
    }
}

/// Linearised system: frequencies and base couplings from a [`SystemSpec`]
/// whose `g⁺` are constants, classical cavity amplitudes, and the drive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearizedSpec {
    pub system: SystemSpec,
    pub alpha: Vec<f64>,
    pub drive: Drive,
}

impl LinearizedSpec {
    pub fn new(system: SystemSpec, alpha: Vec<f64>, drive: Drive) -> Result<Self> {
        if alpha.len() != system.n_cavity() {
            return Err(Error::Invalid(format!("{} classical amplitudes for {} cavity modes", alpha.len(), system.n_cavity())));
        }
        if alpha.iter().any(|a| !a.is_finite()) {
            return Err(Error::Invalid("classical amplitudes must be finite".into()));
        }
        if !(drive.omega_d > 0.0 && drive.omega_d.is_finite() && drive.kappa.is_finite()) {
            return Err(Error::Invalid("drive frequency must be positive and κ finite".into()));
        }
        for row in &system.g_plus {
            if row.iter().any(|c| !matches!(c, CouplingSpec::Constant { .. })) {
                return Err(Error::Invalid("linearised model takes constant base couplings g⁺; the drive supplies the modulation".into()));
            }
        }
        let only_g_plus = system.g_minus.iter().flatten().chain(&system.lambda_plus).chain(&system.lambda_minus).all(CouplingSpec::is_zero);
        if !only_g_plus {
            return Err(Error::Invalid("linearised model supports the radiation-pressure coupling g⁺ only".into()));
        }
        Ok(LinearizedSpec { system, alpha, drive })
    }

    pub fn base_g(&self, n: usize, p: usize) -> f64 {
        match self.system.g_plus[n][p] {
            CouplingSpec::Constant { base } => base,
            _ => unreachable!("checked on construction"),
        }
    }

    /// `χ = ½ α_k κ g_kp`
    pub fn rate(&self, k: usize, p: usize) -> f64 {
        0.5 * self.alpha[k] * self.drive.kappa * self.base_g(k, p)
    }

    /// The full nonlinear system with the modulated couplings.
    pub fn modulated_system(&self) -> SystemSpec {
        let mut s = self.system.clone();
        for n in 0..s.n_cavity() {
            for p in 0..s.n_mech() {
                s.g_plus[n][p] = self.drive.coupling(self.base_g(n, p));
            }
        }
        s
    }

    pub fn with_frequency(&self, omega_d: f64) -> Self {
        LinearizedSpec { drive: self.drive.with_frequency(omega_d), ..self.clone() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `ω_d = ω_c + ω_m`
    Squeezing,
    /// `ω_d = ω_c − ω_m`
    ModeMixing,
}

/// The resonant pair `(k̃, p̃)` and which sideband is driven.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resonance {
    pub regime: Regime,
    pub mode: usize,
    pub resonator: usize,
}

impl Resonance {
    pub fn drive_frequency(&self, system: &SystemSpec) -> f64 {
        let (c, m) = (system.omega_c[self.mode], system.omega_m[self.resonator]);
        match self.regime {
            Regime::Squeezing => c + m,
            Regime::ModeMixing => c - m,
        }
    }
}

fn check_linearizable(spec: &LinearizedSpec, state: &InitialState, k: usize, p: usize) -> Result<()> {
    if k >= spec.system.n_cavity() || p >= spec.system.n_mech() || state.r.len() != spec.system.n_mech() {
        return Err(Error::Invalid("mode, resonator or thermal parameters out of range".into()));
    }
    if !state.occupied_modes().is_empty() {
        return Err(Error::Contract("the linearised model starts with every cavity fluctuation in vacuum (μ = 0)".into()));
    }
    Ok(())
}

/// `(χ²/ν²) sinh² νt` with `ν² = χ² − δ²/4`, continued to `sin²` past the edge.
fn squeeze_transfer(chi: f64, delta: f64, t: f64) -> f64 {
    let nu2 = chi * chi - 0.25 * delta * delta;
    if nu2.abs() < 1e-300 {
        return (chi * t).powi(2);
    }
    let s = if nu2 > 0.0 { (nu2.sqrt() * t).sinh() } else { ((-nu2).sqrt() * t).sin() };
    chi * chi / nu2 * s * s
}

/// `(χ²/Ω²) sin² Ωt` with `Ω² = χ² + δ²/4`.
fn mixing_transfer(chi: f64, delta: f64, t: f64) -> f64 {
    let om2 = chi * chi + 0.25 * delta * delta;
    if om2 == 0.0 {
        return 0.0;
    }
    chi * chi / om2 * (om2.sqrt() * t).sin().powi(2)
}

/// `(⟨a_k†a_k⟩, ⟨b_p†b_p⟩)` on exact resonance in the rotating-wave approximation.
pub fn linearized_resonant_populations(spec: &LinearizedSpec, res: Resonance, state: &InitialState, t: f64) -> Result<(f64, f64)> {
    let (k, p) = (res.mode, res.resonator);
    check_linearizable(spec, state, k, p)?;
    let (chi, ni, a2) = (spec.rate(k, p), state.thermal_phonons(p), spec.alpha[k].powi(2));
    Ok(match res.regime {
        Regime::Squeezing => {
            let s = (chi * t).sinh().powi(2);
            (a2 + (ni + 1.0) * s, ni + (ni + 1.0) * s)
        }
        Regime::ModeMixing => {
            let s = (chi * t).sin().powi(2);
            (a2 + ni * s, ni * (1.0 - s))
        }
    })
}

/// Rotating-wave populations for the pair `(k, p)` at the spec's drive
/// frequency, keeping both sidebands with their detunings.
pub fn linearized_rwa_populations(spec: &LinearizedSpec, state: &InitialState, k: usize, p: usize, t: f64) -> Result<(f64, f64)> {
    check_linearizable(spec, state, k, p)?;
    let (chi, ni, a2) = (spec.rate(k, p), state.thermal_phonons(p), spec.alpha[k].powi(2));
    let (wc, wm, wd) = (spec.system.omega_c[k], spec.system.omega_m[p], spec.drive.omega_d);
    let sq = squeeze_transfer(chi, wd - (wc + wm), t);
    let mx = mixing_transfer(chi, wd - (wc - wm), t);
    Ok((a2 + (ni + 1.0) * sq + ni * mx, ni + (ni + 1.0) * sq - ni * mx))
}

/// `∫₀ᵗ e^{iνt'} dt'`
fn phase_integral(nu: f64, t: f64) -> Complex64 {
    let x = nu * t;
    if x.abs() < 1e-4 {
        let i = Complex64::new(0.0, 1.0);
        return t * (1.0 + i * x / 2.0 - x * x / 6.0 - i * x * x * x / 24.0);
    }
    (Complex64::from_polar(1.0, x) - 1.0) / Complex64::new(0.0, nu)
}

/// `β(t)` of a constant or modulated coupling in closed form.
fn modulated_displacement(c: &CouplingSpec, omega: f64, t: f64) -> Result<Complex64> {
    let e = |nu: f64| phase_integral(nu, t);
    Ok(match *c {
        CouplingSpec::Constant { base } => base * e(-omega),
        CouplingSpec::ModulatedSin { base, kappa, omega_d } => {
            base * (e(-omega) + kappa / Complex64::new(0.0, 2.0) * (e(omega_d - omega) - e(-omega_d - omega)))
        }
        CouplingSpec::ModulatedCos { base, kappa, omega_d } => base * (e(-omega) + 0.5 * kappa * (e(omega_d - omega) + e(-omega_d - omega))),
        CouplingSpec::Tabulated { .. } => return Err(Error::Contract("closed-form populations need an analytic modulation".into())),
    })
}

/// Full-model populations `(⟨a†a⟩ per mode, ⟨b†b⟩ per resonator)` for one
/// coherent mode: `⟨b_p†b_p⟩ = N_i,p + |β_p(t)|² (|μ|² + |μ|⁴)`.
pub fn full_model_modulated_populations(spec: &SystemSpec, state: &InitialState, t: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let occ = state.occupied_modes();
    if occ.len() != 1 {
        return Err(Error::Contract(format!("needs exactly one coherent mode, found {}", occ.len())));
    }
    if spec.g_minus.iter().flatten().chain(&spec.lambda_plus).chain(&spec.lambda_minus).any(|c| !c.is_zero()) {
        return Err(Error::Contract("closed-form populations assume g⁻ = λ = 0".into()));
    }
    let k = occ[0];
    let x = state.mu_abs2(k);
    let cavity = (0..spec.n_cavity()).map(|n| state.mu_abs2(n)).collect();
    let mech = (0..spec.n_mech())
        .map(|p| Ok(state.thermal_phonons(p) + modulated_displacement(&spec.g_plus[k][p], spec.omega_m[p], t)?.norm_sqr() * (x + x * x)))
        .collect::<Result<Vec<f64>>>()?;
    Ok((cavity, mech))
}

/// Power-law growth of a population series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GrowthFit {
    /// Log-log slope of the envelope over the last three quarters of the horizon.
    pub exponent: f64,
    /// Least-squares `c` in `pop − pop(0) ≈ c t²` over the same window.
    pub quadratic_prefactor: f64,
    pub resonant: bool,
}

/// Fit the envelope `max_{s ≤ t} |pop(s) − pop(0)|` as `∝ t^e` over
/// `t ∈ [t_end/4, t_end]`. Empty or flat envelopes give `e = 0`; envelopes
/// that overflow give `e = ∞`. Changes below [`ENVELOPE_FLOOR`] relative to the
/// initial value count as rounding noise.
pub fn growth_fit(t: &[f64], pop: &[f64]) -> GrowthFit {
    let (Some(&t_end), Some(&p0)) = (t.last(), pop.first()) else {
        return GrowthFit { exponent: 0.0, quadratic_prefactor: 0.0, resonant: false };
    };
    let mut env = 0.0f64;
    let (mut sx, mut sy, mut sxx, mut sxy, mut cnt) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let (mut num, mut den) = (0.0, 0.0);
    let mut overflow = false;
    let floor = ENVELOPE_FLOOR * p0.abs().max(1.0);
    for (&ti, &pi) in t.iter().zip(pop) {
        env = env.max((pi - p0).abs());
        if !env.is_finite() || !pi.is_finite() {
            overflow = true;
            break;
        }
        if ti >= 0.25 * t_end && ti > 0.0 {
            num += (pi - p0) * ti * ti;
            den += ti.powi(4);
            if env > floor {
                let (x, y) = (ti.ln(), env.ln());
                sx += x;
                sy += y;
                sxx += x * x;
                sxy += x * y;
                cnt += 1.0;
            }
        }
    }
    let exponent = if overflow {
        f64::INFINITY
    } else if cnt < 2.0 {
        0.0
    } else {
        let var = sxx - sx * sx / cnt;
        if var <= 0.0 {
            0.0
        } else {
            (sxy - sx * sy / cnt) / var
        }
    };
    GrowthFit {
        exponent,
        quadratic_prefactor: if den > 0.0 { num / den } else { 0.0 },
        resonant: exponent > RESONANT_EXPONENT,
    }
}

/// Times `j T_d`, `j = 0 … ⌊horizon / T_d⌋`: sampling at whole drive periods
/// removes the oscillation at the drive frequency from the envelope, which
/// suits prefactor fits at a known resonance. Other oscillations can alias
/// into slow drifts, so classification uses [`scan_times`].
pub fn stroboscopic_times(omega_d: f64, horizon: f64) -> Vec<f64> {
    let period = 2.0 * PI / omega_d;
    let n = (horizon / period + 1e-9).floor() as usize;
    (0..=n).map(|j| j as f64 * period).collect()
}

/// Samples per period of the fastest frequency when classifying growth.
pub const SCAN_SAMPLES_PER_PERIOD: f64 = 16.0;

/// Uniform times up to `horizon` resolving the fastest frequency `omega_max`.
pub fn scan_times(omega_max: f64, horizon: f64) -> Vec<f64> {
    let n = (horizon * omega_max / (2.0 * PI) * SCAN_SAMPLES_PER_PERIOD).ceil().max(1.0) as usize;
    (0..=n).map(|j| horizon * j as f64 / n as f64).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Full,
    Linearized,
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::Full => "full",
            Model::Linearized => "linearized",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanRow {
    pub omega_d: f64,
    pub model: Model,
    pub exponent: f64,
    pub resonant: bool,
}

impl ScanRow {
    pub fn label(&self) -> &'static str {
        if self.resonant {
            "resonant"
        } else {
            "bounded"
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanReport {
    pub rows: Vec<ScanRow>,
    pub warnings: Vec<String>,
}

impl ScanReport {
    pub fn get(&self, omega_d: f64, model: Model) -> Option<&ScanRow> {
        self.rows.iter().find(|r| r.model == model && (r.omega_d - omega_d).abs() <= 1e-12 * omega_d.abs().max(1.0))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("omega_d,model,exponent,label\n");
        for r in &self.rows {
            s.push_str(&format!("{:.16e},{},{:.16e},{}\n", r.omega_d, r.model.name(), r.exponent, r.label()));
        }
        s
    }
}

/// Growth classification of the resonator `p` at every drive frequency, for
/// the full model (coherent `full_state`) and for the rotating-wave
/// linearised model (`α` from `spec`, fluctuations in vacuum).
pub fn resonance_scan(
    spec: &LinearizedSpec,
    full_state: &InitialState,
    mode: usize,
    resonator: usize,
    omega_d_list: &[f64],
    horizon: f64,
) -> Result<ScanReport> {
    let lin_state = InitialState::new([], full_state.r.clone());
    let rows: Vec<Result<[ScanRow; 2]>> = omega_d_list
        .par_iter()
        .map(|&wd| {
            let s = spec.with_frequency(wd);
            let fastest = wd.max(s.system.omega_c[mode] + s.system.omega_m[resonator]);
            let times = scan_times(fastest, horizon);
            let full_sys = s.modulated_system();
            let full: Vec<f64> = times
                .iter()
                .map(|&t| Ok(full_model_modulated_populations(&full_sys, full_state, t)?.1[resonator]))
                .collect::<Result<_>>()?;
            let lin: Vec<f64> = times
                .iter()
                .map(|&t| Ok(linearized_rwa_populations(&s, &lin_state, mode, resonator, t)?.1))
                .collect::<Result<_>>()?;
            let (f, l) = (growth_fit(&times, &full), growth_fit(&times, &lin));
            Ok([
                ScanRow { omega_d: wd, model: Model::Full, exponent: f.exponent, resonant: f.resonant },
                ScanRow { omega_d: wd, model: Model::Linearized, exponent: l.exponent, resonant: l.resonant },
            ])
        })
        .collect();
    let mut out = ScanReport { rows: Vec::new(), warnings: Vec::new() };
    for (r, &wd) in rows.into_iter().zip(omega_d_list) {
        out.rows.extend(r?);
        let periods = horizon * wd / (2.0 * PI);
        if periods < MIN_SCAN_PERIODS {
            out.warnings.push(format!("ω_d = {wd}: horizon covers only {periods:.1} drive periods"));
        }
    }
    Ok(out)
}

/// Linearised-model populations from direct propagation, no rotating-wave step.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LinearizedSeries {
    pub t: Vec<f64>,
    /// `⟨a_n†a_n⟩ = ⟨(α_n + δa_n)†(α_n + δa_n)⟩`
    pub cavity_pop: Vec<Vec<f64>>,
    /// `⟨δa_n†δa_n⟩ − |⟨δa_n⟩|²`
    pub cavity_fluct: Vec<Vec<f64>>,
    pub mech_pop: Vec<Vec<f64>>,
    /// `⟨b_p†b_p⟩ − |⟨b_p⟩|²`
    pub mech_fluct: Vec<Vec<f64>>,
}

fn quadrature_system(spec: &LinearizedSpec, t: f64) -> Result<(DMatrix<f64>, Vec<f64>)> {
    // x = (q_0, p_0, …, q_{N−1}, p_{N−1}, Q_0, P_0, …) with q = (a + a†)/√2
    let (n, m) = (spec.system.n_cavity(), spec.system.n_mech());
    let d = 2 * (n + m);
    let mut k = DMatrix::zeros(d, d);
    let mut lin = vec![0.0; d];
    for (j, &w) in spec.system.omega_c.iter().chain(&spec.system.omega_m).enumerate() {
        k[(2 * j, 2 * j)] = w;
        k[(2 * j + 1, 2 * j + 1)] = w;
    }
    for a in 0..n {
        for p in 0..m {
            let g = spec.drive.coupling(spec.base_g(a, p)).eval(t)?;
            let (qa, qb) = (2 * a, 2 * (n + p));
            // α g (δa + δa†)(b + b†) = 2 α g q Q
            k[(qa, qb)] += 2.0 * spec.alpha[a] * g;
            k[(qb, qa)] += 2.0 * spec.alpha[a] * g;
            // g α² (b + b†) = √2 g α² Q
            lin[qb] += std::f64::consts::SQRT_2 * g * spec.alpha[a].powi(2);
        }
    }
    // ẋ = Ω(Kx + d) with Ω = ⊕ [[0, 1], [−1, 0]]
    let mut a = DMatrix::zeros(d, d);
    let mut f = vec![0.0; d];
    for j in 0..d / 2 {
        for c in 0..d {
            a[(2 * j, c)] = k[(2 * j + 1, c)];
            a[(2 * j + 1, c)] = -k[(2 * j, c)];
        }
        f[2 * j] = lin[2 * j + 1];
        f[2 * j + 1] = -lin[2 * j];
    }
    Ok((a, f))
}

/// Propagate the first and second moments of the linearised Hamiltonian.
///
/// The model is quadratic, so a Gaussian state stays Gaussian and its
/// mean and covariance obey closed linear equations,
/// `ṁ = A m + f` and `σ̇ = A σ + σ Aᵀ`; nothing is truncated. Fixed-step RK4
/// at [`MOMENT_STEPS_PER_PERIOD`] steps per period of the fastest frequency.
pub fn linearized_oracle_populations(spec: &LinearizedSpec, state: &InitialState, grid: &TimeGrid) -> Result<LinearizedSeries> {
    let (n, m) = (spec.system.n_cavity(), spec.system.n_mech());
    if state.r.len() != m {
        return Err(Error::Invalid("one thermal parameter per resonator required".into()));
    }
    if !state.occupied_modes().is_empty() {
        return Err(Error::Contract("the linearised model starts with every cavity fluctuation in vacuum (μ = 0)".into()));
    }
    let d = 2 * (n + m);
    let mut sigma = DMatrix::<f64>::zeros(d, d);
    for j in 0..n {
        sigma[(2 * j, 2 * j)] = 0.5;
        sigma[(2 * j + 1, 2 * j + 1)] = 0.5;
    }
    for p in 0..m {
        let v = state.thermal_phonons(p) + 0.5;
        sigma[(2 * (n + p), 2 * (n + p))] = v;
        sigma[(2 * (n + p) + 1, 2 * (n + p) + 1)] = v;
    }
    let mean = nalgebra::DVector::<f64>::zeros(d);
    let fastest = spec.system.omega_c.iter().chain(&spec.system.omega_m).fold(spec.drive.omega_d, |a, &b| a.max(b));
    let fastest = fastest + spec.system.omega_m.iter().fold(0.0f64, |a, &b| a.max(b));
    let max_h = 2.0 * PI / fastest / MOMENT_STEPS_PER_PERIOD;

    type State = (DMatrix<f64>, nalgebra::DVector<f64>);
    let rhs = |t: f64, s: &State| -> Result<State> {
        let (a, f) = quadrature_system(spec, t)?;
        let ds = &a * &s.0 + &s.0 * a.transpose();
        let dm = &a * &s.1 + nalgebra::DVector::from_vec(f);
        Ok((ds, dm))
    };
    let mut out = LinearizedSeries {
        t: grid.times().to_vec(),
        cavity_pop: vec![Vec::with_capacity(grid.len()); n],
        cavity_fluct: vec![Vec::with_capacity(grid.len()); n],
        mech_pop: vec![Vec::with_capacity(grid.len()); m],
        mech_fluct: vec![Vec::with_capacity(grid.len()); m],
    };
    let record = |out: &mut LinearizedSeries, s: &State| {
        for j in 0..n + m {
            let fl = 0.5 * (s.0[(2 * j, 2 * j)] + s.0[(2 * j + 1, 2 * j + 1)] - 1.0);
            let mean_amp = Complex64::new(s.1[2 * j], s.1[2 * j + 1]) / std::f64::consts::SQRT_2;
            if j < n {
                out.cavity_fluct[j].push(fl);
                out.cavity_pop[j].push((spec.alpha[j] + mean_amp).norm_sqr() + fl);
            } else {
                out.mech_fluct[j - n].push(fl);
                out.mech_pop[j - n].push(mean_amp.norm_sqr() + fl);
            }
        }
    };
    let mut s: State = (sigma, mean);
    let mut t = grid.times().first().copied().unwrap_or(0.0);
    record(&mut out, &s);
    for &tb in &grid.times()[1..] {
        let steps = ((tb - t) / max_h).ceil().max(1.0) as usize;
        let h = (tb - t) / steps as f64;
        for _ in 0..steps {
            let k1 = rhs(t, &s)?;
            let y2 = (&s.0 + &k1.0 * (0.5 * h), &s.1 + &k1.1 * (0.5 * h));
            let k2 = rhs(t + 0.5 * h, &y2)?;
            let y3 = (&s.0 + &k2.0 * (0.5 * h), &s.1 + &k2.1 * (0.5 * h));
            let k3 = rhs(t + 0.5 * h, &y3)?;
            let y4 = (&s.0 + &k3.0 * h, &s.1 + &k3.1 * h);
            let k4 = rhs(t + h, &y4)?;
            s.0 += (k1.0 + k2.0 * 2.0 + k3.0 * 2.0 + k4.0) * (h / 6.0);
            s.1 += (k1.1 + k2.1 * 2.0 + k3.1 * 2.0 + k4.1) * (h / 6.0);
            t += h;
        }
        t = tb;
        record(&mut out, &s);
    }
    Ok(out)
}

/// The linearised Hamiltonian propagated in a truncated Fock basis.
/// Aborts with [`Error::TruncationOverflow`] once a top level holds more
/// than `overflow` population, which squeezing reaches quickly.
pub fn linearized_fock_populations(
    spec: &LinearizedSpec,
    state: &InitialState,
    space: &FockSpace,
    grid: &TimeGrid,
    overflow: f64,
) -> Result<LinearizedSeries> {
    let (n, m) = (spec.system.n_cavity(), spec.system.n_mech());
    if space.n_cavity() != n || space.n_mech() != m {
        return Err(Error::Invalid("Fock space does not match the system".into()));
    }
    if !state.occupied_modes().is_empty() {
        return Err(Error::Contract("the linearised model starts with every cavity fluctuation in vacuum (μ = 0)".into()));
    }
    let one = Complex64::new(1.0, 0.0);
    let mut terms = Vec::new();
    for a in 0..n {
        let ka = space.cavity_slot(a);
        for p in 0..m {
            let s = space.mech_slot(p);
            let coupling = spec.drive.coupling(spec.base_g(a, p));
            let quad = operator(
                space,
                &[
                    (one, &[Ladder::Raise(ka), Ladder::Raise(s)]),
                    (one, &[Ladder::Raise(ka), Ladder::Lower(s)]),
                    (one, &[Ladder::Lower(ka), Ladder::Raise(s)]),
                    (one, &[Ladder::Lower(ka), Ladder::Lower(s)]),
                ],
            );
            terms.push(Term { coupling: coupling.clone(), scale: spec.alpha[a], op: quad });
            terms.push(Term { coupling, scale: spec.alpha[a].powi(2), op: b_plus(space, s) });
        }
    }
    let ham = Hamiltonian { static_part: Hamiltonian::free(space, &spec.system.omega_c, &spec.system.omega_m), terms };
    let mixture = Mixture::from_initial(space, state)?;
    let opts = PropagationOptions { overflow: Some(overflow), ..Default::default() };
    let runs: Vec<Result<Vec<Vec<Complex64>>>> =
        mixture.components.par_iter().map(|(_, psi)| propagate_with(&ham, space, &psi.amplitudes, grid.times(), opts)).collect();
    let slots = n + m;
    // per time: (⟨d_j†d_j⟩, ⟨d_j⟩) for every slot
    let mut pops = vec![vec![0.0; slots]; grid.len()];
    let mut means = vec![vec![Complex64::new(0.0, 0.0); slots]; grid.len()];
    for ((w, _), run) in mixture.components.iter().zip(runs) {
        for (i, psi) in run?.iter().enumerate() {
            for j in 0..slots {
                let low = lower_action(space, j, psi);
                pops[i][j] += w * low.iter().map(|x| x.norm_sqr()).sum::<f64>();
                means[i][j] += w * psi.iter().zip(&low).map(|(x, y)| x.conj() * y).sum::<Complex64>();
            }
        }
    }
    let col = |j: usize, f: &dyn Fn(f64, Complex64) -> f64| (0..grid.len()).map(|i| f(pops[i][j], means[i][j])).collect::<Vec<f64>>();
    Ok(LinearizedSeries {
        t: grid.times().to_vec(),
        cavity_pop: (0..n).map(|a| col(a, &|p, mu| p + 2.0 * spec.alpha[a] * mu.re + spec.alpha[a].powi(2))).collect(),
        cavity_fluct: (0..n).map(|a| col(a, &|p, mu| p - mu.norm_sqr())).collect(),
        mech_pop: (0..m).map(|q| col(n + q, &|p, _| p)).collect(),
        mech_fluct: (0..m).map(|q| col(n + q, &|p, mu| p - mu.norm_sqr())).collect(),
    })
}

/// Largest deviation of the propagated fluctuation populations from the
/// resonant rotating-wave forms, normalised by the peak of each predicted series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RwaCheck {
    pub drive_periods: f64,
    pub cavity_deviation: f64,
    pub mech_deviation: f64,
}

impl RwaCheck {
    pub fn worst(&self) -> f64 {
        self.cavity_deviation.max(self.mech_deviation)
    }
}

/// Compare [`linearized_resonant_populations`] with [`linearized_oracle_populations`]
/// on `samples` points up to `horizon`, at the resonance's drive frequency.
pub fn rwa_check(spec: &LinearizedSpec, res: Resonance, state: &InitialState, horizon: f64, samples: usize) -> Result<RwaCheck> {
    let s = spec.with_frequency(res.drive_frequency(&spec.system));
    let grid = TimeGrid::uniform(horizon, samples)?;
    let oracle = linearized_oracle_populations(&s, state, &grid)?;
    let a2 = s.alpha[res.mode].powi(2);
    let (mut pc, mut pm, mut dc, mut dm) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for (i, &t) in grid.times().iter().enumerate() {
        let (c, mech) = linearized_resonant_populations(&s, res, state, t)?;
        let c = c - a2;
        pc = pc.max(c.abs());
        pm = pm.max(mech.abs());
        dc = dc.max((c - oracle.cavity_fluct[res.mode][i]).abs());
        dm = dm.max((mech - oracle.mech_fluct[res.resonator][i]).abs());
    }
    Ok(RwaCheck {
        drive_periods: horizon / s.drive.period(),
        cavity_deviation: if pc > 0.0 { dc / pc } else { dc },
        mech_deviation: if pm > 0.0 { dm / pm } else { dm },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ffunc::compute_f_set;
    use crate::observables::mech_population;

    fn lin(alpha: f64, g: f64, kappa: f64) -> LinearizedSpec {
        let sys = SystemSpec::new(vec![5.0], vec![1.0]).with_g_plus(0, 0, CouplingSpec::constant(g));
        LinearizedSpec::new(sys, vec![alpha], Drive::sin(6.0, kappa)).unwrap()
    }

    const SQ: Resonance = Resonance { regime: Regime::Squeezing, mode: 0, resonator: 0 };
    const MX: Resonance = Resonance { regime: Regime::ModeMixing, mode: 0, resonator: 0 };

    #[test]
    fn populations_start_from_the_initial_state() {
        let s = lin(10.0, 0.002, 0.5);
        let st = InitialState::from_phonons([], &[0.7]);
        for res in [SQ, MX] {
            let (c, m) = linearized_resonant_populations(&s, res, &st, 0.0).unwrap();
            assert!((c - 100.0).abs() < 1e-12 && (m - 0.7).abs() < 1e-12);
        }
        let vac = InitialState::new([], vec![0.0]);
        for t in [0.0, 10.0, 300.0] {
            assert_eq!(linearized_resonant_populations(&s, MX, &vac, t).unwrap().1, 0.0);
        }
    }

    #[test]
    fn squeezing_small_time_series() {
        let s = lin(10.0, 0.002, 0.5);
        let st = InitialState::from_phonons([], &[0.4]);
        let chi = s.rate(0, 0);
        let t = 0.05 / chi;
        let (_, m) = linearized_resonant_populations(&s, SQ, &st, t).unwrap();
        let series = 1.4 * (chi * t).powi(2);
        assert!(((m - 0.4) - series).abs() < 0.01 * series);
    }

    #[test]
    fn coherent_cavity_is_rejected() {
        let s = lin(10.0, 0.002, 0.5);
        let st = InitialState::single_mode(0, Complex64::new(1.0, 0.0), vec![0.0]);
        assert!(matches!(linearized_resonant_populations(&s, SQ, &st, 1.0), Err(Error::Contract(_))));
    }

    #[test]
    fn detuned_forms_reduce_to_resonant_ones() {
        let base = lin(10.0, 0.002, 0.5);
        let st = InitialState::from_phonons([], &[0.9]);
        for res in [SQ, MX] {
            let s = base.with_frequency(res.drive_frequency(&base.system));
            for t in [0.0, 50.0, 400.0] {
                let (a, b) = linearized_resonant_populations(&s, res, &st, t).unwrap();
                let (c, d) = linearized_rwa_populations(&s, &st, 0, 0, t).unwrap();
                // the far sideband adds a transfer of order (χ/2ω_m)²
                assert!((a - c).abs() < 1e-4 * (1.0 + a) && (b - d).abs() < 1e-4 * (1.0 + b), "{res:?} t={t}");
            }
        }
    }

    #[test]
    fn closed_form_full_model_matches_quadrature() {
        for drive in [Drive::sin(1.0, 0.4), Drive::cos(2.3, 0.7), Drive::sin(5.0, 1.0)] {
            let sys = SystemSpec::new(vec![5.0], vec![1.0]).with_g_plus(0, 0, drive.coupling(0.1));
            let st = InitialState::single_mode(0, Complex64::new(1.3, 0.0), vec![0.2]);
            let grid = TimeGrid::uniform(30.0, 12001).unwrap();
            let f = compute_f_set(&sys, &grid).unwrap();
            for i in (0..grid.len()).step_by(1000) {
                let (c, mpop) = full_model_modulated_populations(&sys, &st, grid.times()[i]).unwrap();
                assert_eq!(c[0], st.mu_abs2(0));
                let q = mech_population(&st, &f, 0, i);
                assert!((mpop[0] - q).abs() < 1e-8, "{drive:?} t={}: {} vs {q}", grid.times()[i], mpop[0]);
            }
        }
    }

    #[test]
    fn unmodulated_population_returns_after_a_period() {
        let sys = SystemSpec::new(vec![5.0], vec![1.0]).with_g_plus(0, 0, Drive::sin(3.0, 0.0).coupling(0.1));
        let st = InitialState::single_mode(0, Complex64::new(1.0, 0.0), vec![0.3]);
        let (_, m) = full_model_modulated_populations(&sys, &st, 2.0 * PI).unwrap();
        assert!((m[0] - st.thermal_phonons(0)).abs() < 1e-14);
    }

    #[test]
    fn growth_fit_recovers_power_laws() {
        let t: Vec<f64> = (0..=200).map(|j| j as f64).collect();
        for e in [1.0, 2.0, 3.0] {
            let p: Vec<f64> = t.iter().map(|x| 0.3 + 0.01 * x.powf(e)).collect();
            let f = growth_fit(&t, &p);
            assert!((f.exponent - e).abs() < 1e-10);
            assert_eq!(f.resonant, e > 1.5);
        }
        let flat = vec![1.0; t.len()];
        assert_eq!(growth_fit(&t, &flat).exponent, 0.0);
        let wobble: Vec<f64> = t.iter().map(|x| (0.7 * x).sin()).collect();
        assert!(growth_fit(&t, &wobble).exponent.abs() < 0.05);
    }

    #[test]
    fn resonant_full_model_grows_quadratically() {
        let g = 0.05;
        let sys = SystemSpec::new(vec![5.0], vec![1.0]).with_g_plus(0, 0, Drive::sin(1.0, 0.8).coupling(g));
        let mu = 1.2f64;
        let st = InitialState::single_mode(0, Complex64::new(mu, 0.0), vec![0.0]);
        let times = stroboscopic_times(1.0, 200.0);
        let pops: Vec<f64> = times.iter().map(|&t| full_model_modulated_populations(&sys, &st, t).unwrap().1[0]).collect();
        let f = growth_fit(&times, &pops);
        assert!((f.exponent - 2.0).abs() < 0.05);
        let expect = 0.25 * g * g * 0.64 * (mu.powi(2) + mu.powi(4));
        assert!((f.quadratic_prefactor - expect).abs() < 0.05 * expect);
    }

    #[test]
    fn scan_separates_the_models() {
        let s = lin(10.0, 0.002, 0.5);
        let st = InitialState::single_mode(0, Complex64::new(1.0, 0.0), vec![0.0]);
        let r = resonance_scan(&s, &st, 0, 0, &[1.0, 4.0, 6.0], 200.0).unwrap();
        assert!(r.get(1.0, Model::Full).unwrap().resonant);
        assert!(!r.get(4.0, Model::Full).unwrap().resonant);
        assert!(!r.get(6.0, Model::Full).unwrap().resonant);
        assert!(!r.get(1.0, Model::Linearized).unwrap().resonant, "{}", r.to_csv());
        assert!(r.get(6.0, Model::Linearized).unwrap().resonant);
        assert!(r.warnings.is_empty());
        assert!(r.to_csv().starts_with("omega_d,model,exponent,label\n"));
        let short = resonance_scan(&s, &st, 0, 0, &[1.0], 20.0).unwrap();
        assert_eq!(short.warnings.len(), 1);
    }

    #[test]
    fn moment_oracle_without_modulation_keeps_fluctuations() {
        // κ = 0 and tiny α g: nothing is transferred
        let s = lin(1.0, 1e-7, 0.0);
        let st = InitialState::from_phonons([], &[0.5]);
        let grid = TimeGrid::uniform(20.0, 21).unwrap();
        let o = linearized_oracle_populations(&s, &st, &grid).unwrap();
        for i in 0..grid.len() {
            assert!(o.cavity_fluct[0][i].abs() < 1e-6);
            assert!((o.mech_fluct[0][i] - 0.5).abs() < 1e-6);
        }
    }

    #[test]
    fn moment_oracle_matches_fock_propagation() {
        let s = lin(2.0, 0.02, 0.5).with_frequency(6.0);
        let st = InitialState::new([], vec![0.0]);
        let grid = TimeGrid::uniform(15.0, 16).unwrap();
        let a = linearized_oracle_populations(&s, &st, &grid).unwrap();
        let space = FockSpace::new(&[10], &[10]).unwrap();
        let b = linearized_fock_populations(&s, &st, &space, &grid, 1e-6).unwrap();
        for i in 0..grid.len() {
            assert!((a.cavity_fluct[0][i] - b.cavity_fluct[0][i]).abs() < 1e-6);
            assert!((a.mech_fluct[0][i] - b.mech_fluct[0][i]).abs() < 1e-6);
            assert!((a.mech_pop[0][i] - b.mech_pop[0][i]).abs() < 1e-6);
            assert!((a.cavity_pop[0][i] - b.cavity_pop[0][i]).abs() < 1e-6);
        }
    }

    #[test]
    fn fock_squeezing_overflows() {
        let s = lin(10.0, 0.02, 1.0).with_frequency(6.0);
        let st = InitialState::new([], vec![0.0]);
        let grid = TimeGrid::uniform(60.0, 31).unwrap();
        let space = FockSpace::new(&[6], &[6]).unwrap();
        let r = linearized_fock_populations(&s, &st, &space, &grid, 1e-6);
        assert!(matches!(r, Err(Error::TruncationOverflow { .. })), "{r:?}");
    }

    #[test]
    fn rotating_wave_forms_track_propagation() {
        let s = lin(10.0, 0.002, 0.5);
        let st = InitialState::from_phonons([], &[1.0]);
        let horizon = 100.0 * 2.0 * PI;
        for res in [SQ, MX] {
            let c = rwa_check(&s, res, &st, horizon, 401).unwrap();
            assert!(c.worst() < 0.05, "{res:?}: {c:?}");
        }
    }

    #[test]
    fn invariants_of_the_resonant_forms() {
        let s = lin(10.0, 0.002, 0.5);
        let st = InitialState::from_phonons([], &[0.8]);
        let (c0, m0) = linearized_resonant_populations(&s, SQ, &st, 0.0).unwrap();
        let (d0, n0) = linearized_resonant_populations(&s, MX, &st, 0.0).unwrap();
        for t in [1.0, 77.0, 500.0] {
            let (c, m) = linearized_resonant_populations(&s, SQ, &st, t).unwrap();
            assert!(((c - m) - (c0 - m0)).abs() < 1e-9 * c.abs().max(1.0));
            let (d, n) = linearized_resonant_populations(&s, MX, &st, t).unwrap();
            assert!(((d + n) - (d0 + n0)).abs() < 1e-12);
        }
    }
}
