//! Reduced resonator state and its linear entropy.
//!
//! Tracing out the cavity leaves a Poisson mixture of displaced thermal
//! states, one per photon-number tuple `n`:
//! `ρ_m(t) = Σ_n p_n D(γ_n) ρ_th D(γ_n)†` with
//! `γ_{n,p} = −i e^{−iω_p t} (β_p + Σ_k n_k β_kp)`. The pairwise overlaps
//! `Tr[ρ_n ρ_m] = Π_p exp(−|Δ_p|²/cosh 2r_p)/cosh 2r_p` give the purity.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ffunc::FSet;
use crate::model::InitialState;
use crate::special::{bessel_i_scaled, poisson_cutoff, CompensatedSum};

/// Tail mass of the photon-number distribution left out by automatic truncation.
pub const AUTO_TAIL: f64 = 1e-15;
/// Truncated mass above which [`reduced_state`] attaches a warning.
pub const WARN_TAIL: f64 = 1e-6;

/// How far to sum over photon-number tuples.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Truncation {
    /// Smallest total photon number whose Poisson tail is below [`AUTO_TAIL`].
    Auto,
    /// Include every tuple with `Σ_k n_k ≤` this value.
    Total(usize),
}

impl Truncation {
    fn resolve(self, mean: f64) -> usize {
        match self {
            Truncation::Auto => poisson_cutoff(mean, AUTO_TAIL),
            Truncation::Total(n) => n,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReducedTerm {
    /// Photon numbers of the coherent modes, in `modes` order.
    pub occupation: Vec<usize>,
    pub weight: f64,
    /// Displacement `γ_p` applied to each resonator's thermal state.
    pub displacement: Vec<Complex64>,
}

/// Mixture representation of the reduced resonator state.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedStateEnsemble {
    /// Cavity modes with non-zero coherent amplitude.
    pub modes: Vec<usize>,
    pub terms: Vec<ReducedTerm>,
    /// Maximum total photon number included.
    pub truncation: usize,
    /// `1 − Σ weights`, evaluated as the Poisson tail.
    pub truncated_mass: f64,
    pub warning: Option<String>,
}

/// Every tuple over `len` modes with entries summing to at most `total`,
/// in lexicographic order.
fn tuples(len: usize, total: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, left: usize, remaining: usize, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(prefix.clone());
            return;
        }
        for k in 0..=remaining {
            prefix.push(k);
            rec(prefix, left - 1, remaining - k, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(len), len, total, &mut out);
    out
}

/// `P(Poisson(mean) > n)` summed directly from the tail terms.
fn poisson_tail(mean: f64, n: usize) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    let mut log_p = -mean + (n + 1) as f64 * mean.ln() - crate::special::ln_factorial(n + 1);
    let mut s = CompensatedSum::new();
    let mut k = n + 1;
    loop {
        let p = log_p.exp();
        s.add(p);
        if (k as f64) > mean && p < 1e-30 * s.value().max(1e-300) || k > n + 100_000 {
            break;
        }
        k += 1;
        log_p += mean.ln() - (k as f64).ln();
    }
    s.value()
}

/// The reduced resonator state at grid index `i`.
pub fn reduced_state(state: &InitialState, fset: &FSet, i: usize, truncation: Truncation) -> ReducedStateEnsemble {
    let modes: Vec<usize> = state.occupied_modes().into_iter().filter(|&k| k < fset.n_cavity()).collect();
    let mean: f64 = modes.iter().map(|&k| state.mu_abs2(k)).sum();
    let n_max = truncation.resolve(mean);
    let m = fset.n_mech();
    let rot: Vec<Complex64> = (0..m).map(|p| Complex64::from_polar(1.0, -fset.f_m(p, i))).collect();

    let terms = tuples(modes.len(), n_max)
        .into_iter()
        .map(|occ| {
            let log_w: f64 = modes
                .iter()
                .zip(&occ)
                .map(|(&k, &nk)| {
                    let x = state.mu_abs2(k);
                    -x + nk as f64 * x.ln() - crate::special::ln_factorial(nk)
                })
                .sum();
            let displacement = (0..m)
                .map(|p| {
                    let mut b = fset.beta_lambda(p, i);
                    for (&k, &nk) in modes.iter().zip(&occ) {
                        b += fset.beta_k(k, p, i) * nk as f64;
                    }
                    -Complex64::i() * rot[p] * b
                })
                .collect();
            ReducedTerm { occupation: occ, weight: log_w.exp(), displacement }
        })
        .collect();

    let truncated_mass = poisson_tail(mean, n_max);
    let warning = (truncated_mass > WARN_TAIL).then(|| {
        format!(
            "truncation at {n_max} photons leaves mass {truncated_mass:.3e}; use at least {}",
            poisson_cutoff(mean, 1e-12)
        )
    });
    ReducedStateEnsemble { modes, terms, truncation: n_max, truncated_mass, warning }
}

/// `Π_p cosh 2r_p` in log form, `Σ_p ln(1 + 2 sinh² r_p)`.
fn log_cosh_product(state: &InitialState, m: usize) -> f64 {
    (0..m).map(|p| (2.0 * state.r[p].sinh().powi(2)).ln_1p()).sum()
}

/// Initial mixedness `1 − Π_p 1/cosh 2r_p`.
pub fn initial_entropy(state: &InitialState) -> f64 {
    -(-log_cosh_product(state, state.r.len())).exp_m1()
}

/// Pairwise sum `Σ_{n,m} p_n p_m K(Σ_p |Δ_p|²/cosh 2r_p)` with the symmetric
/// half doubled; fixed summation order keeps the result bit-stable.
fn pair_sum(ens: &ReducedStateEnsemble, state: &InitialState, m: usize, kernel: impl Fn(f64) -> f64) -> f64 {
    let inv_c: Vec<f64> = (0..m).map(|p| 1.0 / state.cosh_2r(p)).collect();
    let mut s = CompensatedSum::new();
    for (a, ta) in ens.terms.iter().enumerate() {
        s.add(ta.weight * ta.weight * kernel(0.0));
        for tb in &ens.terms[a + 1..] {
            let x: f64 = (0..m).map(|p| (ta.displacement[p] - tb.displacement[p]).norm_sqr() * inv_c[p]).sum();
            s.add(2.0 * ta.weight * tb.weight * kernel(x));
        }
    }
    s.value()
}

/// Linear entropy `1 − Tr ρ_m²` as the initial mixedness plus the
/// non-negative contribution of the nonlinearity:
/// `S = S_in + Σ_{n,m} p_n p_m (1 − Π_p e^{−|Δ_p|²/cosh 2r_p}) / Π_p cosh 2r_p`.
pub fn linear_entropy(state: &InitialState, fset: &FSet, i: usize, truncation: Truncation) -> f64 {
    let m = fset.n_mech();
    let ens = reduced_state(state, fset, i, truncation);
    let extra = pair_sum(&ens, state, m, |x| -(-x).exp_m1());
    initial_entropy(state) + extra * (-log_cosh_product(state, m)).exp()
}

/// Linear entropy from the direct double sum
/// `S = 1 − Σ_{n,m} p_n p_m Π_p e^{−|Δ_p|²/cosh 2r_p}/cosh 2r_p`.
pub fn linear_entropy_direct(state: &InitialState, fset: &FSet, i: usize, truncation: Truncation) -> f64 {
    let m = fset.n_mech();
    let ens = reduced_state(state, fset, i, truncation);
    1.0 - pair_sum(&ens, state, m, |x| (-x).exp()) * (-log_cosh_product(state, m)).exp()
}

/// Terms of Bessel series are dropped once past `2|μ|²` and below this.
const BESSEL_TAIL: f64 = 1e-18;

/// `2 Σ_{d≥1} e^{−2x} I_d(2x) (1 − e^{−α d²})`
fn bessel_series(alpha: f64, mu_abs2: f64, m_max: Option<usize>) -> f64 {
    let z = 2.0 * mu_abs2;
    let mut s = CompensatedSum::new();
    let mut d = 1usize;
    loop {
        if let Some(cap) = m_max {
            if d > cap {
                break;
            }
        }
        let b = bessel_i_scaled(d as u32, z);
        s.add(2.0 * b * -(-alpha * (d * d) as f64).exp_m1());
        if m_max.is_none() && (d as f64) > z && b < BESSEL_TAIL {
            break;
        }
        d += 1;
    }
    s.value()
}

/// Single coherent mode: `S = S_in + 2 Σ_m e^{−2|μ|²} I_m(2|μ|²)(1 − e^{−α m²}) / Π_p cosh 2r_p`
/// with `α = Σ_p |F_p|²/(1 + 2N_i,p)`. `m_max = None` sums until the Bessel
/// terms are negligible.
pub fn linear_entropy_single_mode(state: &InitialState, fset: &FSet, i: usize, m_max: Option<usize>) -> Result<f64> {
    let occupied: Vec<usize> = state.occupied_modes();
    if occupied.len() != 1 {
        return Err(Error::Contract(format!(
            "single-mode entropy needs exactly one coherent mode, found {}",
            occupied.len()
        )));
    }
    let k = occupied[0];
    let m = fset.n_mech();
    let alpha: f64 = (0..m).map(|p| fset.beta_k(k, p, i).norm_sqr() / state.cosh_2r(p)).sum();
    let series = bessel_series(alpha, state.mu_abs2(k), m_max);
    Ok(initial_entropy(state) + series * (-log_cosh_product(state, m)).exp())
}

/// `Λ_α = e^{−2x} Σ_{n,m} xⁿ⁺ᵐ/(n! m!) e^{−α(n−m)²}` through its Bessel
/// series `1 − 2 e^{−2x} Σ_{d≥1} I_d(2x)(1 − e^{−α d²})`, `x = |μ|²`.
pub fn lambda_alpha(alpha: f64, mu_abs2: f64, m_max: Option<usize>) -> f64 {
    1.0 - bessel_series(alpha, mu_abs2, m_max)
}

/// The defining double sum of [`lambda_alpha`], truncated at `n, m ≤ n_max`.
pub fn lambda_alpha_direct(alpha: f64, mu_abs2: f64, n_max: usize) -> f64 {
    let x = mu_abs2;
    let p: Vec<f64> = (0..=n_max)
        .map(|n| {
            if x == 0.0 {
                if n == 0 { 1.0 } else { 0.0 }
            } else {
                (-x + n as f64 * x.ln() - crate::special::ln_factorial(n)).exp()
            }
        })
        .collect();
    let mut s = CompensatedSum::new();
    for (n, pn) in p.iter().enumerate() {
        for (mm, pm) in p.iter().enumerate() {
            let d = n as f64 - mm as f64;
            s.add(pn * pm * (-alpha * d * d).exp());
        }
    }
    s.value()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ffunc::compute_f_set;
    use crate::model::{CouplingSpec as C, SystemSpec, TimeGrid};

    fn setup(g: f64, mu: Complex64, r: Vec<f64>, omega_m: Vec<f64>) -> (FSet, InitialState) {
        let mut spec = SystemSpec::new(vec![2.0], omega_m.clone());
        for p in 0..omega_m.len() {
            spec = spec.with_g_plus(0, p, C::constant(g * (1.0 + 0.3 * p as f64)));
        }
        let f = compute_f_set(&spec, &TimeGrid::uniform(4.0, 801).unwrap()).unwrap();
        (f, InitialState::single_mode(0, mu, r))
    }

    #[test]
    fn vacuum_ensemble_has_one_term() {
        let spec = SystemSpec::new(vec![2.0], vec![1.0])
            .with_g_plus(0, 0, C::constant(0.2))
            .with_lambda_plus(0, C::constant(0.1));
        let f = compute_f_set(&spec, &TimeGrid::uniform(2.0, 201).unwrap()).unwrap();
        let st = InitialState::new([], vec![0.0]);
        let ens = reduced_state(&st, &f, 150, Truncation::Auto);
        assert_eq!(ens.terms.len(), 1);
        assert_eq!(ens.terms[0].weight, 1.0);
        assert_eq!(ens.truncated_mass, 0.0);
        let expect = -Complex64::i() * Complex64::from_polar(1.0, -f.f_m(0, 150)) * f.beta_lambda(0, 150);
        assert!((ens.terms[0].displacement[0] - expect).norm() < 1e-15);
    }

    #[test]
    fn no_coupling_no_displacement() {
        let (f, st) = setup(0.0, Complex64::new(1.0, 0.0), vec![0.3], vec![1.0]);
        let ens = reduced_state(&st, &f, 400, Truncation::Total(10));
        assert!(ens.terms.iter().all(|t| t.displacement[0] == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn truncated_mass_examples() {
        let (f, st) = setup(0.1, Complex64::new(1.0, 0.0), vec![0.0], vec![1.0]);
        let ens = reduced_state(&st, &f, 100, Truncation::Total(20));
        assert!(ens.truncated_mass < 1e-18);
        assert!(ens.warning.is_none());
        let weights: f64 = ens.terms.iter().map(|t| t.weight).sum();
        assert!(weights <= 1.0 + 1e-15);
        let short = reduced_state(&st, &f, 100, Truncation::Total(3));
        assert!(short.warning.as_deref().unwrap().contains("use at least"));
    }

    #[test]
    fn zero_coupling_gives_initial_mixedness() {
        let (f, st) = setup(0.0, Complex64::new(1.3, 0.2), vec![0.3, 0.7], vec![1.0, 1.5]);
        let s_in = 1.0 - 1.0 / ((0.6f64).cosh() * (1.4f64).cosh());
        for i in [0, 100, 800] {
            assert!((linear_entropy(&st, &f, i, Truncation::Auto) - s_in).abs() < 1e-12);
            assert!((linear_entropy_direct(&st, &f, i, Truncation::Auto) - s_in).abs() < 1e-12);
            assert!((linear_entropy_single_mode(&st, &f, i, None).unwrap() - s_in).abs() < 1e-12);
        }
        let pure = InitialState::new([], vec![0.0, 0.0]);
        assert_eq!(linear_entropy(&pure, &f, 300, Truncation::Auto), 0.0);
    }

    #[test]
    fn lambda_alpha_examples() {
        assert_eq!(lambda_alpha(0.0, 1.3, None), 1.0);
        assert_eq!(lambda_alpha(0.4, 0.0, None), 1.0);
        let d = lambda_alpha_direct(0.1, 1.0, 40);
        assert!((lambda_alpha(0.1, 1.0, None) - d).abs() < 1e-10);
    }

    #[test]
    fn bessel_form_through_lambda() {
        // μ=1, r=0, |F|² = 0.04: S = 1 − Λ_α with α = 0.04
        let x = 1.0;
        let s = 1.0 - lambda_alpha(0.04, x, None);
        assert!((s - (1.0 - lambda_alpha_direct(0.04, x, 60))).abs() < 1e-12);
    }

    #[test]
    fn multimode_tuples() {
        let t = tuples(2, 2);
        assert_eq!(t, vec![vec![0, 0], vec![0, 1], vec![0, 2], vec![1, 0], vec![1, 1], vec![2, 0]]);
        assert_eq!(tuples(0, 5), vec![Vec::<usize>::new()]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn entropy_forms_agree(g in 0.0f64..0.4, mu in 0.0f64..1.8, r0 in 0.0f64..0.8, r1 in 0.0f64..0.8,
                                  th in 0.0f64..6.3, i in 0usize..801) {
                let (f, st) = setup(g, Complex64::from_polar(mu, th), vec![r0, r1], vec![1.0, 1.7]);
                let split = linear_entropy(&st, &f, i, Truncation::Auto);
                let direct = linear_entropy_direct(&st, &f, i, Truncation::Auto);
                let bessel = linear_entropy_single_mode(&st, &f, i, None).unwrap();
                prop_assert!((split - direct).abs() < 1e-12);
                prop_assert!((split - bessel).abs() < 1e-8);
                prop_assert!(split >= initial_entropy(&st) - 1e-12);
                prop_assert!(split <= 1.0);
            }

            #[test]
            fn entropy_ignores_global_phase(g in 0.0f64..0.4, mu in 0.0f64..1.5, th in 0.0f64..6.3, i in 0usize..801) {
                let (f, a) = setup(g, Complex64::new(mu, 0.0), vec![0.2], vec![1.0]);
                let b = InitialState::single_mode(0, Complex64::from_polar(mu, th), vec![0.2]);
                let sa = linear_entropy(&a, &f, i, Truncation::Auto);
                let sb = linear_entropy(&b, &f, i, Truncation::Auto);
                prop_assert!((sa - sb).abs() < 1e-14);
            }

            #[test]
            fn lambda_series_matches_double_sum(alpha in 0.0f64..2.0, mu in 0.0f64..2.0) {
                let x = mu * mu;
                let bessel = lambda_alpha(alpha, x, None);
                let direct = lambda_alpha_direct(alpha, x, poisson_cutoff(x, 1e-18) + 5);
                prop_assert!((bessel - direct).abs() < 1e-10);
            }
        }
    }
}
