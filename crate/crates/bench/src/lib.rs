//! Shared fixtures for the criterion benchmarks.

use optomech::{Complex64, CouplingSpec, InitialState, SystemSpec, TimeGrid};

/// Two cavity modes, two resonators, a mix of constant and modulated couplings.
pub fn two_by_two() -> (SystemSpec, InitialState) {
    let spec = SystemSpec::new(vec![3.0, 4.0], vec![1.0, 1.6])
        .with_g_plus(0, 0, CouplingSpec::constant(0.1))
        .with_g_plus(0, 1, CouplingSpec::modulated_sin(0.05, 0.5, 1.6))
        .with_g_plus(1, 0, CouplingSpec::constant(0.07))
        .with_g_minus(1, 1, CouplingSpec::constant(0.03));
    let state = InitialState::new([(0, Complex64::new(1.0, 0.0)), (1, Complex64::new(0.6, 0.2))], vec![0.3, 0.1]);
    (spec, state)
}

/// `periods` mechanical periods at `per_period` samples each.
pub fn grid(periods: f64, per_period: usize) -> TimeGrid {
    let end = periods * 2.0 * std::f64::consts::PI;
    TimeGrid::uniform(end, (periods * per_period as f64) as usize + 1).expect("valid grid")
}
