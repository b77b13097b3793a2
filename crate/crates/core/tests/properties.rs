use std::f64::consts::PI;

use optomech::entropy::{initial_entropy, linear_entropy_direct, Truncation};
use optomech::linearized::{linearized_resonant_populations, Resonance};
use optomech::observables::{g1, g1_single_mode, mech_population};
use optomech::special::bessel_i;
use optomech::*;
use proptest::prelude::*;

fn grid(t_end: f64) -> TimeGrid {
    TimeGrid::uniform(t_end, 401).unwrap()
}

fn two_by_two(g: [f64; 4], gm: f64, lam: f64) -> SystemSpec {
    SystemSpec::new(vec![2.0, 3.1], vec![1.0, 1.6])
        .with_g_plus(0, 0, CouplingSpec::constant(g[0]))
        .with_g_plus(0, 1, CouplingSpec::constant(g[1]))
        .with_g_plus(1, 0, CouplingSpec::modulated_sin(g[2], 0.4, 1.3))
        .with_g_plus(1, 1, CouplingSpec::constant(g[3]))
        .with_g_minus(0, 1, CouplingSpec::constant(gm))
        .with_lambda_plus(1, CouplingSpec::constant(lam))
}

fn coupling() -> impl Strategy<Value = f64> {
    -0.3..0.3f64
}

fn amplitude() -> impl Strategy<Value = Complex64> {
    (0.0..1.5f64, 0.0..2.0 * PI).prop_map(|(r, th)| Complex64::from_polar(r, th))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn modulated_coupling_stays_in_band(base in 0.0..2.0f64, kappa in -1.0..1.0f64, w in 0.1..5.0f64, t in 0.0..50.0f64) {
        for c in [CouplingSpec::modulated_sin(base, kappa, w), CouplingSpec::modulated_cos(base, kappa, w)] {
            let v = c.eval(t).unwrap();
            prop_assert!(v >= base * (1.0 - kappa.abs()) - 1e-15 && v <= base * (1.0 + kappa.abs()) + 1e-15);
        }
    }

    #[test]
    fn tabulated_coupling_hits_its_samples(v in prop::collection::vec(-1.0..1.0f64, 2..8)) {
        let samples: Vec<(f64, f64)> = v.iter().enumerate().map(|(i, &x)| (0.5 * i as f64, x)).collect();
        let c = CouplingSpec::tabulated(samples.clone());
        for (t, x) in samples {
            prop_assert_eq!(c.eval(t).unwrap(), x);
        }
    }

    #[test]
    fn radiation_pressure_displacement_modulus(g in coupling(), w in 0.3..3.0f64) {
        let spec = SystemSpec::new(vec![2.0], vec![w]).with_g_plus(0, 0, CouplingSpec::constant(g));
        let gr = TimeGrid::uniform(4.0 * PI / w, 1601).unwrap();
        let f = compute_f_set(&spec, &gr).unwrap();
        for (i, &t) in gr.times().iter().enumerate() {
            let exact = 2.0 * g * g / (w * w) * (1.0 - (w * t).cos());
            prop_assert!((f.beta_k(0, 0, i).norm_sqr() - exact).abs() < 1e-9);
        }
    }

    #[test]
    fn displacement_differences_are_antisymmetric(g in prop::array::uniform4(coupling()), n in prop::array::uniform2(0usize..4), m in prop::array::uniform2(0usize..4)) {
        let f = compute_f_set(&two_by_two(g, 0.1, 0.05), &grid(5.0)).unwrap();
        for p in 0..2 {
            for i in [0, 200, 400] {
                prop_assert!((f.delta(p, &n, &m, i) + f.delta(p, &m, &n, i)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn analytic_observables_are_physical(g in prop::array::uniform4(coupling()), mu in prop::array::uniform2(amplitude()), r in prop::array::uniform2(0.0..0.8f64)) {
        let st = InitialState::new([(0, mu[0]), (1, mu[1])], r.to_vec());
        let f = compute_f_set(&two_by_two(g, 0.1, 0.05), &grid(5.0)).unwrap();
        let obs = ObservableSeries::compute(&st, &f);
        prop_assert_eq!(obs.cavity_pop.clone(), vec![mu[0].norm_sqr(), mu[1].norm_sqr()]);
        for (_, series) in &obs.g1 {
            for c in series.iter().filter_map(|c| c.value()) {
                prop_assert!((0.0..=1.0 + 1e-10).contains(&c), "g1 = {}", c);
            }
        }
        let s_in = initial_entropy(&st);
        for i in 0..f.len() {
            prop_assert!(obs.entropy[i] >= s_in - 1e-12 && obs.entropy[i] <= 1.0);
            for p in 0..2 {
                prop_assert!(obs.mech_pop[p][i] >= st.thermal_phonons(p) - 1e-12);
            }
        }
    }

    #[test]
    fn split_and_direct_entropy_agree(g in prop::array::uniform4(coupling()), mu in prop::array::uniform2(amplitude()), r in prop::array::uniform2(0.0..0.8f64)) {
        let st = InitialState::new([(0, mu[0]), (1, mu[1])], r.to_vec());
        let f = compute_f_set(&two_by_two(g, 0.0, 0.0), &grid(5.0)).unwrap();
        for i in [0, 133, 400] {
            let t = Truncation::Total(30);
            prop_assert!((linear_entropy(&st, &f, i, t) - linear_entropy_direct(&st, &f, i, t)).abs() < 1e-12);
        }
    }

    #[test]
    fn entropy_depends_on_amplitude_moduli_only(g in prop::array::uniform4(coupling()), mu in prop::array::uniform2(amplitude()), th in prop::array::uniform2(0.0..2.0 * PI)) {
        let rot = [mu[0] * Complex64::from_polar(1.0, th[0]), mu[1] * Complex64::from_polar(1.0, th[1])];
        let a = InitialState::new([(0, mu[0]), (1, mu[1])], vec![0.3, 0.1]);
        let b = InitialState::new([(0, rot[0]), (1, rot[1])], vec![0.3, 0.1]);
        let f = compute_f_set(&two_by_two(g, 0.1, 0.05), &grid(5.0)).unwrap();
        for i in [100, 400] {
            prop_assert!((linear_entropy(&a, &f, i, Truncation::Auto) - linear_entropy(&b, &f, i, Truncation::Auto)).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_drive_alone_adds_no_mixedness(lp in coupling(), lm in coupling(), mu in amplitude(), r in 0.0..1.0f64) {
        let spec = SystemSpec::new(vec![2.0], vec![1.0])
            .with_lambda_plus(0, CouplingSpec::constant(lp))
            .with_lambda_minus(0, CouplingSpec::constant(lm));
        let st = InitialState::single_mode(0, mu, vec![r]);
        let f = compute_f_set(&spec, &grid(7.0)).unwrap();
        for i in [0, 200, 400] {
            prop_assert!((linear_entropy(&st, &f, i, Truncation::Auto) - initial_entropy(&st)).abs() < 1e-15);
        }
    }

    #[test]
    fn single_mode_coherence_matches_general(g in coupling(), gm in coupling(), g2 in coupling(), mu in amplitude(), r in prop::array::uniform2(0.0..0.8f64)) {
        let spec = SystemSpec::new(vec![2.0], vec![1.0, 1.4])
            .with_g_plus(0, 0, CouplingSpec::constant(g))
            .with_g_minus(0, 0, CouplingSpec::constant(gm))
            .with_g_plus(0, 1, CouplingSpec::constant(g2));
        let st = InitialState::single_mode(0, mu, r.to_vec());
        let f = compute_f_set(&spec, &grid(5.0)).unwrap();
        for i in [50, 250, 400] {
            for pair in ObservableSeries::pairs(1, 2) {
                match (g1(&st, &f, pair, i).value(), g1_single_mode(&st, &f, pair, i).unwrap().value()) {
                    (Some(a), Some(b)) => prop_assert!((a - b).abs() < 1e-12, "{:?}: {} vs {}", pair, a, b),
                    (None, None) => {}
                    other => prop_assert!(false, "{:?}: {:?}", pair, other),
                }
            }
            prop_assert!(mech_population(&st, &f, 0, i).is_finite());
        }
    }

    #[test]
    fn bessel_i_grows_with_argument(n in 0u32..12, z in 0.01..20.0f64, dz in 0.001..1.0f64) {
        prop_assert!(bessel_i(n, z + dz) > bessel_i(n, z));
    }

    #[test]
    fn sideband_populations_keep_their_invariants(alpha in 1.0..20.0f64, g in 1e-4..1e-2f64, kappa in 0.1..1.0f64, n_i in 0.0..3.0f64, t in 0.0..500.0f64) {
        let sys = SystemSpec::new(vec![5.0], vec![1.0]).with_g_plus(0, 0, CouplingSpec::constant(g));
        let lin = LinearizedSpec::new(sys, vec![alpha], Drive::sin(6.0, kappa)).unwrap();
        let st = InitialState::from_phonons([], &[n_i]);
        let sq = Resonance { regime: Regime::Squeezing, mode: 0, resonator: 0 };
        let mx = Resonance { regime: Regime::ModeMixing, mode: 0, resonator: 0 };
        let a2 = alpha * alpha;
        let (c, m) = linearized_resonant_populations(&lin, sq, &st, t).unwrap();
        prop_assert!(((c - a2) - m + st.thermal_phonons(0)).abs() < 1e-9 * m.max(1.0));
        let (c, m) = linearized_resonant_populations(&lin, mx, &st, t).unwrap();
        prop_assert!(((c - a2) + m - st.thermal_phonons(0)).abs() < 1e-12 * (1.0 + n_i));
    }

    #[test]
    fn modulated_full_model_keeps_photon_numbers(wd in 0.5..8.0f64, kappa in 0.0..1.0f64, mu in amplitude(), t in 0.0..100.0f64) {
        let spec = SystemSpec::new(vec![5.0], vec![1.0]).with_g_plus(0, 0, Drive::cos(wd, kappa).coupling(0.05));
        let st = InitialState::single_mode(0, mu, vec![0.2]);
        prop_assume!(mu.norm_sqr() > 0.0);
        let (c, m) = full_model_modulated_populations(&spec, &st, t).unwrap();
        prop_assert_eq!(c[0], mu.norm_sqr());
        prop_assert!(m[0] >= st.thermal_phonons(0));
    }
}

#[test]
fn refinement_convergence_orders() {
    let spec = SystemSpec::new(vec![2.0], vec![1.0])
        .with_g_plus(0, 0, CouplingSpec::constant(0.2))
        .with_lambda_minus(0, CouplingSpec::constant(0.1));
    let err = |n: usize| {
        let gr = TimeGrid::uniform(2.0 * PI, n).unwrap();
        let exact = optomech::ffunc::closed_form_set(&spec, &gr).unwrap();
        compute_f_set(&spec, &gr).unwrap().max_abs_deviation(&exact)
    };
    let ratio = err(101) / err(201);
    assert!((11.0..24.0).contains(&ratio), "Simpson halving ratio {ratio}");
}
