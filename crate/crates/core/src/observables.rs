//! Populations and first-order coherence for a coherent ⊗ thermal initial state.
//!
//! With `β_p(N) = β_p + Σ_k β_kp N_k` (see [`crate::ffunc`]) and thermal
//! resonators of occupation `N_i,p = sinh² r_p`:
//!
//! ```text
//! ⟨b_p†b_p⟩    = N_i,p + ⟨|β_p(N)|²⟩
//! |⟨a_k†a_k'⟩| = |μ_k μ_k'| Π_p e^{−½ cosh 2r_p |β_k'p − β_kp|²} · exp(−2 Σ_l |μ_l|² sin²(½(ψ_kl − ψ_k'l)))
//! |⟨a_k†b_p'⟩| = |μ_k| Π_p e^{−½ cosh 2r_p |β_kp|²} · exp(−2 Σ_l |μ_l|² sin²(½ψ_kl))
//!                · |β_p' − N_i,p' β_kp' + Σ_n β_np' |μ_n|² e^{iψ_kn}|
//! |⟨b_p†b_p'⟩| = |⟨β_p(N)* β_p'(N)⟩|,  p ≠ p'
//! ```
//!
//! where photon-number moments are Poissonian,
//! `⟨N_k N_l⟩ = |μ_k|²|μ_l|² + δ_kl |μ_k|²`, and `ψ` is [`FSet::psi`].

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::entropy::{linear_entropy, Truncation};
use crate::error::{Error, Result};
use crate::ffunc::{compute_f_set, FSet};
use crate::model::{InitialState, SystemSpec, TimeGrid};
use crate::quadrature::{cumulative, Rule};

/// Which pair of modes a coherence refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Pair {
    /// Cavity modes `(k, k')`.
    ModeMode(usize, usize),
    /// Cavity mode `k`, resonator `p'`.
    ModeRes(usize, usize),
    /// Resonators `(p, p')`.
    ResRes(usize, usize),
}

impl Pair {
    /// Column label: `g1_cc[k][k']`, `g1_cm[k][p]` or `g1_mm[p][p']`.
    pub fn label(&self) -> String {
        match *self {
            Pair::ModeMode(a, b) => format!("g1_cc[{a}][{b}]"),
            Pair::ModeRes(a, b) => format!("g1_cm[{a}][{b}]"),
            Pair::ResRes(a, b) => format!("g1_mm[{a}][{b}]"),
        }
    }
}

/// A coherence value, or the tagged 0/0 case where one of the two
/// populations vanishes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Coherence {
    Value(f64),
    Undefined,
}

impl Coherence {
    pub fn value(self) -> Option<f64> {
        match self {
            Coherence::Value(v) => Some(v),
            Coherence::Undefined => None,
        }
    }

    pub fn is_defined(self) -> bool {
        matches!(self, Coherence::Value(_))
    }
}

impl Serialize for Coherence {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Coherence::Value(v) => s.serialize_f64(*v),
            Coherence::Undefined => s.serialize_str("undefined"),
        }
    }
}

/// Population products below this are treated as zero.
const ZERO_POPULATION: f64 = 1e-300;

pub(crate) fn ratio(num: f64, pop_a: f64, pop_b: f64) -> Coherence {
    let den = pop_a * pop_b;
    if !(den > ZERO_POPULATION) {
        Coherence::Undefined
    } else {
        Coherence::Value(num / den.sqrt())
    }
}

fn second_moment(state: &InitialState, k: usize, l: usize) -> f64 {
    let (xk, xl) = (state.mu_abs2(k), state.mu_abs2(l));
    xk * xl + if k == l { xk } else { 0.0 }
}

/// `⟨a_k†a_k⟩ = |μ_k|²`, conserved by the dynamics.
pub fn cavity_population(state: &InitialState, k: usize) -> f64 {
    state.mu_abs2(k)
}

/// `⟨b_p†b_p⟩` at grid index `i`.
pub fn mech_population(state: &InitialState, fset: &FSet, p: usize, i: usize) -> f64 {
    let n = fset.n_cavity();
    let bl = fset.beta_lambda(p, i);
    let mut pop = state.thermal_phonons(p) + bl.norm_sqr();
    for k in 0..n {
        let xk = state.mu_abs2(k);
        if xk == 0.0 {
            continue;
        }
        let bk = fset.beta_k(k, p, i);
        pop += 2.0 * (bl.conj() * bk).re * xk;
        for l in 0..n {
            let nkl = second_moment(state, k, l);
            if nkl != 0.0 {
                pop += (bk.conj() * fset.beta_k(l, p, i)).re * nkl;
            }
        }
    }
    pop
}

/// `Π_p ⟨D(γ_p)⟩_thermal = exp(−½ Σ_p cosh 2r_p |γ_p|²)`
fn thermal_factor(state: &InitialState, fset: &FSet, shift: impl Fn(usize) -> Complex64) -> f64 {
    let s: f64 = (0..fset.n_mech()).map(|p| 0.5 * state.cosh_2r(p) * shift(p).norm_sqr()).sum();
    (-s).exp()
}

/// `|⟨μ| exp(i Σ_l θ_l N_l) |μ⟩| = exp(−2 Σ_l |μ_l|² sin²(θ_l/2))`
fn dephasing(state: &InitialState, fset: &FSet, angle: impl Fn(usize) -> f64) -> f64 {
    let s: f64 = (0..fset.n_cavity())
        .map(|l| {
            let x = state.mu_abs2(l);
            if x == 0.0 {
                0.0
            } else {
                2.0 * x * (0.5 * angle(l)).sin().powi(2)
            }
        })
        .sum();
    (-s).exp()
}

/// `|⟨a_k†a_k'⟩|`
pub fn mode_mode_correlator(state: &InitialState, fset: &FSet, k: usize, kp: usize, i: usize) -> f64 {
    let amp = state.mu(k).norm() * state.mu(kp).norm();
    if amp == 0.0 {
        return 0.0;
    }
    amp * thermal_factor(state, fset, |p| fset.beta_k(kp, p, i) - fset.beta_k(k, p, i))
        * dephasing(state, fset, |l| fset.psi(k, l, i) - fset.psi(kp, l, i))
}

/// `|⟨a_k†b_p'⟩|`
pub fn mode_res_correlator(state: &InitialState, fset: &FSet, k: usize, pp: usize, i: usize) -> f64 {
    let mu = state.mu(k).norm();
    if mu == 0.0 {
        return 0.0;
    }
    let mut inner = fset.beta_lambda(pp, i) - fset.beta_k(k, pp, i) * state.thermal_phonons(pp);
    for nn in 0..fset.n_cavity() {
        let x = state.mu_abs2(nn);
        if x != 0.0 {
            inner += fset.beta_k(nn, pp, i) * Complex64::from_polar(x, fset.psi(k, nn, i));
        }
    }
    mu * thermal_factor(state, fset, |p| fset.beta_k(k, p, i))
        * dephasing(state, fset, |l| fset.psi(k, l, i))
        * inner.norm()
}

/// `|⟨b_p†b_p'⟩|`; the population itself when `p = p'`.
pub fn res_res_correlator(state: &InitialState, fset: &FSet, p: usize, pp: usize, i: usize) -> f64 {
    if p == pp {
        return mech_population(state, fset, p, i);
    }
    let n = fset.n_cavity();
    let (la, lb) = (fset.beta_lambda(p, i), fset.beta_lambda(pp, i));
    let mut s = la.conj() * lb;
    for k in 0..n {
        let xk = state.mu_abs2(k);
        if xk == 0.0 {
            continue;
        }
        let (ak, bk) = (fset.beta_k(k, p, i), fset.beta_k(k, pp, i));
        s += (la.conj() * bk + ak.conj() * lb) * xk;
        for l in 0..n {
            let nkl = second_moment(state, k, l);
            if nkl != 0.0 {
                s += ak.conj() * fset.beta_k(l, pp, i) * nkl;
            }
        }
    }
    s.norm()
}

/// First-order coherence `|⟨d_a†d_b⟩| / sqrt(⟨d_a†d_a⟩⟨d_b†d_b⟩)`.
pub fn g1(state: &InitialState, fset: &FSet, pair: Pair, i: usize) -> Coherence {
    match pair {
        Pair::ModeMode(k, kp) => ratio(
            mode_mode_correlator(state, fset, k, kp, i),
            cavity_population(state, k),
            cavity_population(state, kp),
        ),
        Pair::ModeRes(k, p) => ratio(
            mode_res_correlator(state, fset, k, p, i),
            cavity_population(state, k),
            mech_population(state, fset, p, i),
        ),
        Pair::ResRes(p, pp) => ratio(
            res_res_correlator(state, fset, p, pp, i),
            mech_population(state, fset, p, i),
            mech_population(state, fset, pp, i),
        ),
    }
}

fn single_coherent_mode(state: &InitialState, fset: &FSet, i: usize) -> Result<usize> {
    let occupied = state.occupied_modes();
    if occupied.len() != 1 {
        return Err(Error::Contract(format!(
            "single-mode formulas need exactly one coherent mode, found {}",
            occupied.len()
        )));
    }
    if (0..fset.n_mech()).any(|p| fset.beta_lambda(p, i) != Complex64::new(0.0, 0.0)) {
        return Err(Error::Contract("single-mode formulas assume no linear resonator drive".into()));
    }
    Ok(occupied[0])
}

/// Compact single-mode forms of the mode–resonator and resonator–resonator
/// coherence. Requires exactly one coherent mode and no linear drive.
pub fn g1_single_mode(state: &InitialState, fset: &FSet, pair: Pair, i: usize) -> Result<Coherence> {
    let kt = single_coherent_mode(state, fset, i)?;
    let x = state.mu_abs2(kt);
    let poisson2 = x + x * x;
    let pop = |p: usize| state.thermal_phonons(p) + fset.beta_k(kt, p, i).norm_sqr() * poisson2;
    match pair {
        Pair::ModeRes(k, pp) => {
            if k != kt {
                return Err(Error::Contract(format!("mode {k} is not the coherent mode {kt}")));
            }
            let phi = fset.phi(kt, i);
            let f = fset.beta_k(kt, pp, i).norm();
            let ni = state.thermal_phonons(pp);
            let den = ni + f * f * poisson2;
            if !(den * x > ZERO_POPULATION) {
                return Ok(Coherence::Undefined);
            }
            let bracket = (Complex64::new(ni, 0.0) - Complex64::from_polar(x, 2.0 * phi)).norm();
            let damp: f64 = (0..fset.n_mech())
                .map(|p| 0.5 * state.cosh_2r(p) * fset.beta_k(kt, p, i).norm_sqr())
                .sum();
            Ok(Coherence::Value(f * bracket / den.sqrt() * (-2.0 * x * phi.sin().powi(2) - damp).exp()))
        }
        Pair::ResRes(p, pp) => {
            if p == pp {
                return Ok(ratio(pop(p), pop(p), pop(p)));
            }
            let num = fset.beta_k(kt, p, i).norm() * fset.beta_k(kt, pp, i).norm() * poisson2;
            Ok(ratio(num, pop(p), pop(pp)))
        }
        Pair::ModeMode(..) => Err(Error::Contract("mode–mode coherence needs two coherent modes".into())),
    }
}

/// Model whose weak-coupling expansion [`weak_coupling_g1`] evaluates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeakCouplingModel {
    Full,
    Linearized,
}

fn fine_grid(spec: &SystemSpec, t: f64, extra_freq: f64) -> Result<TimeGrid> {
    let w = spec.fastest_frequency().max(extra_freq).max(1e-12);
    let per_period = 400.0;
    let samples = ((t * w / (2.0 * PI) * per_period).ceil() as usize).clamp(2001, 2_000_001);
    // odd sample count keeps the final node on a Simpson panel boundary
    TimeGrid::uniform(t, samples | 1)
}

/// Leading term of `g1` for couplings `g = ε g̃`, where `spec` holds `g̃`.
///
/// Full model: `g1_kp' ≈ ε |N_i,p' β̃_kp' − Σ_n |μ_n|² β̃_np'| / √N_i,p'`,
/// `g1_kk' ≈ 1`, `g1_pp' ≈ 0`. Linearised model:
/// `g1_kp' ≈ ε √N_i,p' |∫ g̃_kp' e^{−i(ω_c,k + ω_m,p')t'} dt'|`.
pub fn weak_coupling_g1(
    state: &InitialState,
    spec: &SystemSpec,
    pair: Pair,
    t: f64,
    epsilon: f64,
    model: WeakCouplingModel,
) -> Result<f64> {
    match pair {
        Pair::ModeMode(..) => return Ok(1.0),
        Pair::ResRes(..) => return Ok(0.0),
        Pair::ModeRes(..) => {}
    }
    let Pair::ModeRes(k, pp) = pair else { unreachable!() };
    if spec.has_linear_drive() {
        return Err(Error::Contract("weak-coupling expansion assumes no linear resonator drive".into()));
    }
    let ni = state.thermal_phonons(pp);
    match model {
        WeakCouplingModel::Full => {
            if !(ni > 0.0) {
                return Err(Error::Contract("first-order mode–resonator coherence needs N_i > 0".into()));
            }
            let grid = fine_grid(spec, t, 0.0)?;
            let fset = compute_f_set(spec, &grid)?;
            let last = grid.len() - 1;
            let mut v = fset.beta_k(k, pp, last) * ni;
            for n in 0..spec.n_cavity() {
                v -= fset.beta_k(n, pp, last) * state.mu_abs2(n);
            }
            Ok(epsilon * v.norm() / ni.sqrt())
        }
        WeakCouplingModel::Linearized => {
            let w = spec.omega_c[k] + spec.omega_m[pp];
            let grid = fine_grid(spec, t, w)?;
            let times = grid.times();
            let g: Vec<f64> = times.iter().map(|&x| spec.g_plus[k][pp].eval(x)).collect::<Result<_>>()?;
            let re: Vec<f64> = times.iter().zip(&g).map(|(&x, gv)| gv * (w * x).cos()).collect();
            let im: Vec<f64> = times.iter().zip(&g).map(|(&x, gv)| -gv * (w * x).sin()).collect();
            let rule = Rule::for_grid(&grid);
            let (a, b) = (*cumulative(times, &re, rule).last().unwrap(), *cumulative(times, &im, rule).last().unwrap());
            Ok(epsilon * ni.sqrt() * a.hypot(b))
        }
    }
}

/// Time series of every observable on the grid of an [`FSet`].
#[derive(Clone, Debug, Serialize)]
pub struct ObservableSeries {
    pub t: Vec<f64>,
    /// `cavity_pop[k]`, constant in time.
    pub cavity_pop: Vec<f64>,
    /// `mech_pop[p][i]`
    pub mech_pop: Vec<Vec<f64>>,
    /// Coherence of every distinct pair, in [`ObservableSeries::pairs`] order.
    pub g1: Vec<(Pair, Vec<Coherence>)>,
    /// Linear entropy of the reduced resonator state.
    pub entropy: Vec<f64>,
}

impl ObservableSeries {
    /// All distinct pairs: mode–mode `k < k'`, every mode–resonator, resonator–resonator `p < p'`.
    pub fn pairs(n_cavity: usize, n_mech: usize) -> Vec<Pair> {
        let mut out = Vec::new();
        for a in 0..n_cavity {
            for b in a + 1..n_cavity {
                out.push(Pair::ModeMode(a, b));
            }
        }
        for a in 0..n_cavity {
            for p in 0..n_mech {
                out.push(Pair::ModeRes(a, p));
            }
        }
        for p in 0..n_mech {
            for q in p + 1..n_mech {
                out.push(Pair::ResRes(p, q));
            }
        }
        out
    }

    pub fn compute(state: &InitialState, fset: &FSet) -> ObservableSeries {
        let (n, m) = (fset.n_cavity(), fset.n_mech());
        let pairs = Self::pairs(n, m);
        let rows: Vec<(Vec<f64>, Vec<Coherence>, f64)> = (0..fset.len())
            .into_par_iter()
            .map(|i| {
                let pops = (0..m).map(|p| mech_population(state, fset, p, i)).collect();
                let g = pairs.iter().map(|&pr| g1(state, fset, pr, i)).collect();
                let s = linear_entropy(state, fset, i, Truncation::Auto);
                (pops, g, s)
            })
            .collect();
        let mech_pop = (0..m).map(|p| rows.iter().map(|r| r.0[p]).collect()).collect();
        let g1 = pairs
            .iter()
            .enumerate()
            .map(|(j, &pr)| (pr, rows.iter().map(|r| r.1[j]).collect()))
            .collect();
        ObservableSeries {
            t: fset.t.clone(),
            cavity_pop: (0..n).map(|k| cavity_population(state, k)).collect(),
            mech_pop,
            g1,
            entropy: rows.iter().map(|r| r.2).collect(),
        }
    }

    pub fn g1_series(&self, pair: Pair) -> Option<&[Coherence]> {
        self.g1.iter().find(|(p, _)| *p == pair).map(|(_, v)| v.as_slice())
    }
}
