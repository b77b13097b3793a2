//! Exact time evolution of multimode, multiresonator optomechanical systems.
//!
//! The Hamiltonian
//!
//! ```text
//! H = Σ_n ω_c,n N_n + Σ_p ω_m,p b_p†b_p
//!   + Σ_p [λ_p⁺(t) B_p⁺ + λ_p⁻(t) B_p⁻] + Σ_{n,p} N_n [g_np⁺(t) B_p⁺ + g_np⁻(t) B_p⁻]
//! ```
//!
//! conserves every photon number `N_n`, so its time-ordered exponential
//! factorises into a product of exponentials of fixed operators whose
//! coefficients are nested time integrals of the couplings (the
//! [`FSet`]). Observables of a coherent ⊗ thermal initial state follow in
//! closed form from those integrals.
//!
//! The crate is organised as
//!
//! * [`model`]: system, couplings, initial state, time grid, validation;
//! * [`ffunc`]: F-functions by cumulative quadrature, plus constant-coupling closed forms;
//! * [`observables`]: populations and first-order coherence;
//! * [`entropy`]: reduced resonator state and its linear entropy;
//! * [`special`]: Bessel, Laguerre and the displacement-operator identities;
//! * [`linearized`]: linearised (RWA) comparison model and modulated-drive resonance;
//! * [`oracle`]: brute-force truncated-Fock propagation used to verify everything above;
//! * [`config`] and [`report`]: scenario files and CSV/JSON output used by the CLI.

// `!(x > 0.0)` style checks are deliberate: they reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod entropy;
pub mod error;
pub mod ffunc;
pub mod linearized;
pub mod model;
pub mod observables;
pub mod oracle;
pub mod quadrature;
pub mod report;
pub mod special;

pub use num_complex::Complex64;

pub use entropy::{linear_entropy, linear_entropy_direct, linear_entropy_single_mode, reduced_state, ReducedStateEnsemble};
pub use error::{Error, Result};
pub use ffunc::{compute_f_set, f_closed_form_constant, FSet, FSnapshot};
pub use model::{validate_spec, CouplingSpec, InitialState, SystemSpec, TimeGrid, ValidationReport};
pub use observables::{Coherence, ObservableSeries, Pair};
pub use config::{Scenario, ScenarioPoint};
pub use linearized::{
    full_model_modulated_populations, growth_fit, linearized_oracle_populations, linearized_resonant_populations, resonance_scan, Drive,
    DriveKind, GrowthFit, LinearizedSeries, LinearizedSpec, Regime, Resonance, ScanReport,
};
pub use oracle::{compare, run_oracle, ComparisonReport, FockSpace, OracleOptions, OracleSeries};
pub use special::{identity_suite, IdentityReport};
