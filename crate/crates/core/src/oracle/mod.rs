//! Brute-force verification in a truncated Fock basis.
//!
//! The Hamiltonian is assembled as sparse matrices on a finite
//! occupation-number basis and the Schrödinger equation is integrated
//! directly, with no use of the decoupled form. Constant couplings take a
//! Taylor-series exponential action between grid points; time-dependent
//! couplings take RK4 with step-doubling error control.
//!
//! Thermal resonators enter as a Fock mixture (see [`Mixture`]): each
//! component is a pure product state and is propagated on its own, so the
//! dimension stays that of the bare system. Components run in parallel and
//! are summed in a fixed order, which keeps results bit-reproducible.
//! Every operator is applied in sparse form.

mod compare;
mod hamiltonian;
mod measure;
mod propagate;
mod space;
mod sparse;
mod state;

use rayon::prelude::*;
use serde::Serialize;

pub use compare::{compare, ComparisonReport, Deviation};
pub use hamiltonian::{build_hamiltonian, Hamiltonian, Term};
pub use measure::{lower_action, reduced_density_matrix, Moments};
pub use propagate::{propagate, propagate_with, truncation_mass, Method, PropagationOptions};
pub use space::{FockSpace, DEFAULT_BUDGET};
pub use sparse::{b_minus, b_plus, lower, number, operator, CsrMatrix, Ladder};
pub use state::{coherent_amplitudes, coherent_tail, FockState, Mixture, THERMAL_DROP_LIMIT, THERMAL_TAIL};

use crate::error::Result;
use crate::model::{InitialState, SystemSpec, TimeGrid};
use crate::observables::{ratio, Coherence, ObservableSeries, Pair};

#[derive(Clone, Copy, Debug)]
pub struct OracleOptions {
    pub propagation: PropagationOptions,
    /// Build the reduced resonator state and report its purity.
    pub purity: bool,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions { propagation: PropagationOptions::default(), purity: true }
    }
}

/// Oracle observables on a time grid, laid out like [`ObservableSeries`].
#[derive(Clone, Debug, Serialize)]
pub struct OracleSeries {
    pub t: Vec<f64>,
    /// `cavity_pop[k][i]`
    pub cavity_pop: Vec<Vec<f64>>,
    /// `mech_pop[p][i]`
    pub mech_pop: Vec<Vec<f64>>,
    pub g1: Vec<(Pair, Vec<Coherence>)>,
    /// `Tr ρ_m²`, empty unless purity was requested.
    pub purity: Vec<f64>,
    /// `1 − Tr ρ_m²`, empty unless purity was requested.
    pub entropy: Vec<f64>,
    /// `⟨H⟩` for time-independent Hamiltonians, otherwise empty.
    pub energy: Vec<f64>,
    /// Largest `|‖ψ‖² − 1|` over all components and times.
    pub norm_drift: f64,
    /// Largest (bound on the) mixture population in a top Fock level over the grid.
    pub truncation_mass: f64,
    /// Thermal weight not represented by the mixture.
    pub dropped_weight: f64,
}

impl OracleSeries {
    pub fn g1_series(&self, pair: Pair) -> Option<&[Coherence]> {
        self.g1.iter().find(|(p, _)| *p == pair).map(|(_, v)| v.as_slice())
    }
}

/// Propagate `state` under `spec` on `space` and measure every observable.
pub fn run_oracle(spec: &SystemSpec, state: &InitialState, space: &FockSpace, grid: &TimeGrid, opts: OracleOptions) -> Result<OracleSeries> {
    let ham = Hamiltonian::build(spec, space)?;
    let mixture = Mixture::from_initial(space, state)?;
    let pairs = ObservableSeries::pairs(space.n_cavity(), space.n_mech());
    let times = grid.times();
    let h_static = ham.is_time_independent().then(|| ham.at(times.first().copied().unwrap_or(0.0))).transpose()?;

    let run = |psi: &FockState| -> Result<(Vec<Moments>, Vec<f64>)> {
        let states = propagate_with(&ham, space, &psi.amplitudes, times, opts.propagation)?;
        let energy = h_static
            .as_ref()
            .map(|h| {
                states
                    .iter()
                    .map(|s| s.iter().zip(h.mul_vec(s)).map(|(a, b)| (a.conj() * b).re).sum::<f64>())
                    .collect()
            })
            .unwrap_or_default();
        Ok((states.iter().map(|s| Moments::of_state(space, s, &pairs, opts.purity)).collect(), energy))
    };

    let mut total: Option<Vec<Moments>> = None;
    let mut energy = Vec::new();
    let mut norm_drift: f64 = 0.0;
    // a chunk per round bounds the memory held by unsummed components
    let chunk = rayon::current_num_threads().max(1);
    for group in mixture.components.chunks(chunk) {
        let results: Vec<Result<(Vec<Moments>, Vec<f64>)>> = group.par_iter().map(|(_, psi)| run(psi)).collect();
        for ((w, _), res) in group.iter().zip(results) {
            let (moments, e) = res?;
            norm_drift = moments.iter().map(|m| (m.norm_sqr - 1.0).abs()).fold(norm_drift, f64::max);
            let acc = total.get_or_insert_with(|| moments.iter().map(Moments::zeroed).collect());
            acc.iter_mut().zip(&moments).for_each(|(a, m)| a.add_weighted(*w, m));
            if energy.is_empty() {
                energy = vec![0.0; e.len()];
            }
            energy.iter_mut().zip(&e).for_each(|(a, b)| *a += w * b);
        }
    }
    let total = total.unwrap_or_default();

    let (n, m) = (space.n_cavity(), space.n_mech());
    let cavity_pop: Vec<Vec<f64>> = (0..n).map(|k| total.iter().map(|x| x.cavity_pop[k]).collect()).collect();
    let mech_pop: Vec<Vec<f64>> = (0..m).map(|p| total.iter().map(|x| x.mech_pop[p]).collect()).collect();
    let g1 = pairs
        .iter()
        .enumerate()
        .map(|(j, &pair)| {
            let series = total
                .iter()
                .map(|x| {
                    let (a, b) = match pair {
                        Pair::ModeMode(a, b) => (x.cavity_pop[a], x.cavity_pop[b]),
                        Pair::ModeRes(a, p) => (x.cavity_pop[a], x.mech_pop[p]),
                        Pair::ResRes(p, q) => (x.mech_pop[p], x.mech_pop[q]),
                    };
                    ratio(x.correlators[j].norm(), a, b)
                })
                .collect();
            (pair, series)
        })
        .collect();
    let purity: Vec<f64> = total.iter().filter_map(Moments::purity).collect();
    Ok(OracleSeries {
        t: times.to_vec(),
        cavity_pop,
        mech_pop,
        g1,
        entropy: purity.iter().map(|p| 1.0 - p).collect(),
        purity,
        energy,
        norm_drift,
        truncation_mass: total.iter().map(|x| x.top_mass).fold(0.0, f64::max),
        dropped_weight: mixture.dropped_weight,
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use num_complex::Complex64;

    use super::*;
    use crate::ffunc::compute_f_set;
    use crate::model::CouplingSpec as C;

    fn one_mode(g: f64) -> (SystemSpec, InitialState) {
        (
            SystemSpec::new(vec![1.7], vec![1.0]).with_g_plus(0, 0, C::constant(g)),
            InitialState::single_mode(0, Complex64::new(1.0, 0.0), vec![0.0]),
        )
    }

    #[test]
    fn mech_population_at_half_period() {
        let (spec, st) = one_mode(0.1);
        let space = FockSpace::new(&[12], &[10]).unwrap();
        let grid = TimeGrid::from_times(vec![0.0, PI]).unwrap();
        let o = run_oracle(&spec, &st, &space, &grid, OracleOptions::default()).unwrap();
        assert!((o.mech_pop[0][1] - 0.08).abs() < 1e-4, "{}", o.mech_pop[0][1]);
        assert!(o.norm_drift < 1e-10);
    }

    #[test]
    fn uncoupled_populations_stay_constant() {
        let spec = SystemSpec::new(vec![1.7], vec![1.0, 0.6]);
        let st = InitialState::single_mode(0, Complex64::new(0.7, 0.2), vec![0.3, 0.1]);
        let space = FockSpace::new(&[10], &[12, 8]).unwrap();
        let grid = TimeGrid::uniform(5.0, 6).unwrap();
        let o = run_oracle(&spec, &st, &space, &grid, OracleOptions::default()).unwrap();
        for i in 0..grid.len() {
            assert!((o.cavity_pop[0][i] - st.mu_abs2(0)).abs() < 1e-8);
            assert!((o.mech_pop[0][i] - st.thermal_phonons(0)).abs() < 1e-10);
            assert!((o.mech_pop[1][i] - st.thermal_phonons(1)).abs() < 1e-10);
            let expect = 1.0 / (0.6f64.cosh() * 0.2f64.cosh());
            assert!((o.purity[i] - expect).abs() < 1e-10, "{} vs {expect}", o.purity[i]);
        }
    }

    #[test]
    fn energy_and_photon_number_are_conserved() {
        let spec = SystemSpec::new(vec![1.5], vec![1.0])
            .with_g_plus(0, 0, C::constant(0.15))
            .with_g_minus(0, 0, C::constant(-0.05))
            .with_lambda_plus(0, C::constant(0.04));
        let st = InitialState::single_mode(0, Complex64::new(0.9, 0.0), vec![0.2]);
        let space = FockSpace::new(&[12], &[12]).unwrap();
        let grid = TimeGrid::uniform(4.0 * PI, 9).unwrap();
        let o = run_oracle(&spec, &st, &space, &grid, OracleOptions::default()).unwrap();
        let e0 = o.energy[0];
        for i in 0..grid.len() {
            assert!(((o.energy[i] - e0) / e0).abs() < 1e-8);
            assert!((o.cavity_pop[0][i] - o.cavity_pop[0][0]).abs() < 1e-8);
        }
    }

    #[test]
    fn raising_cutoffs_changes_little() {
        let (spec, st) = one_mode(0.2);
        // away from full periods, where the resonator returns to vacuum and g1 is 0/0
        let grid = TimeGrid::from_times(vec![0.0, 0.7, 2.1, 4.0, 9.5, 12.0]).unwrap();
        // n photons displace the resonator by n|β|, so the phonon cutoff needs headroom
        let space = FockSpace::new(&[12], &[24]).unwrap();
        let a = run_oracle(&spec, &st, &space, &grid, OracleOptions::default()).unwrap();
        let b = run_oracle(&spec, &st, &space.widened(2).unwrap(), &grid, OracleOptions::default()).unwrap();
        for i in 1..grid.len() {
            assert!((a.mech_pop[0][i] - b.mech_pop[0][i]).abs() < 1e-6);
            assert!((a.entropy[i] - b.entropy[i]).abs() < 1e-6);
            let (x, y) = (a.g1[0].1[i].value().unwrap_or(0.0), b.g1[0].1[i].value().unwrap_or(0.0));
            assert!((x - y).abs() < 1e-6);
        }
    }

    #[test]
    fn kerr_phase_sign_is_fixed_by_mode_mode_coherence() {
        // two coherent modes with g⁻ and a linear drive exercise every term of ψ_kl
        let spec = SystemSpec::new(vec![1.5, 2.1], vec![1.0])
            .with_g_plus(0, 0, C::constant(0.2))
            .with_g_minus(0, 0, C::constant(0.1))
            .with_g_plus(1, 0, C::constant(-0.15))
            .with_g_minus(1, 0, C::constant(0.08))
            .with_lambda_minus(0, C::constant(0.05));
        let st = InitialState::new([(0, Complex64::new(0.8, 0.0)), (1, Complex64::new(0.0, 0.6))], vec![0.0]);
        let space = FockSpace::new(&[8, 7], &[20]).unwrap();
        let grid = TimeGrid::uniform(3.0, 301).unwrap();
        let o = run_oracle(&spec, &st, &space, &grid, OracleOptions { purity: false, ..Default::default() }).unwrap();
        let f = compute_f_set(&spec, &grid).unwrap();
        let a = ObservableSeries::compute(&st, &f);
        for pair in ObservableSeries::pairs(2, 1) {
            let (x, y) = (a.g1_series(pair).unwrap(), o.g1_series(pair).unwrap());
            for i in (0..grid.len()).step_by(30).skip(1) {
                let (x, y) = (x[i].value().unwrap(), y[i].value().unwrap());
                assert!(((x - y) / y).abs() < 1e-4, "{pair:?} t={} {x} vs {y}", grid.times()[i]);
            }
        }
        // the product term with the opposite sign visibly fails
        let single = InitialState::single_mode(0, Complex64::new(1.0, 0.0), vec![0.0]);
        let spec1 = SystemSpec::new(vec![1.5], vec![1.0])
            .with_g_plus(0, 0, C::constant(0.2))
            .with_g_minus(0, 0, C::constant(0.1));
        let space1 = FockSpace::new(&[12], &[26]).unwrap();
        let o1 = run_oracle(&spec1, &single, &space1, &grid, OracleOptions { purity: false, ..Default::default() }).unwrap();
        let f1 = compute_f_set(&spec1, &grid).unwrap();
        let i = grid.len() - 1;
        let mode_res = |phi: f64| {
            let b = f1.beta_k(0, 0, i);
            (-0.5 * b.norm_sqr()).exp() * (-2.0 * (0.5 * 2.0 * phi).sin().powi(2)).exp() * b.norm()
        };
        let truth = o1.g1_series(Pair::ModeRes(0, 0)).unwrap()[i].value().unwrap() * o1.mech_pop[0][i].sqrt();
        assert!((mode_res(f1.phi(0, i)) - truth).abs() < 1e-6);
        assert!((mode_res(f1.phi_alternative_sign(0, i)) - truth).abs() > 1e-3);
    }
}
