use num_complex::Complex64;

use super::space::FockSpace;
use crate::error::{Error, Result};
use crate::model::InitialState;
use crate::special::{ln_factorial, thermal_weights};

/// Thermal weights below this tail are dropped from the Fock mixture.
pub const THERMAL_TAIL: f64 = 1e-13;

/// Largest thermal weight a cutoff may discard before the mixture is refused.
pub const THERMAL_DROP_LIMIT: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct FockState {
    pub amplitudes: Vec<Complex64>,
}

impl FockState {
    pub fn basis(space: &FockSpace, occ: &[usize]) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); space.dim()];
        amplitudes[space.index(occ)] = Complex64::new(1.0, 0.0);
        FockState { amplitudes }
    }

    /// Tensor product of one amplitude vector per slot (length cutoff + 1).
    pub fn product(space: &FockSpace, factors: &[Vec<Complex64>]) -> Result<Self> {
        if factors.len() != space.n_modes() || factors.iter().zip(space.cutoffs()).any(|(f, &c)| f.len() != c + 1) {
            return Err(Error::Invalid("product state factors do not match the Fock space".into()));
        }
        let amplitudes = (0..space.dim())
            .map(|i| (0..space.n_modes()).map(|s| factors[s][space.level(i, s)]).product())
            .collect();
        Ok(FockState { amplitudes })
    }

    /// Coherent cavity modes `mus` with every resonator in its ground state.
    pub fn coherent_vacuum(space: &FockSpace, mus: &[Complex64]) -> Result<Self> {
        let mut factors: Vec<Vec<Complex64>> = mus.iter().zip(space.cutoffs()).map(|(&mu, &c)| coherent_amplitudes(mu, c)).collect();
        for p in 0..space.n_mech() {
            factors.push(fock_amplitudes(0, space.cutoffs()[space.mech_slot(p)]));
        }
        Self::product(space, &factors)
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Coherent amplitudes `e^{−|μ|²/2} μⁿ/√n!` up to `cutoff`, renormalised.
pub fn coherent_amplitudes(mu: Complex64, cutoff: usize) -> Vec<Complex64> {
    let mut v: Vec<Complex64> = (0..=cutoff)
        .map(|n| {
            if mu.norm_sqr() == 0.0 {
                return Complex64::new(if n == 0 { 1.0 } else { 0.0 }, 0.0);
            }
            let ln = -0.5 * mu.norm_sqr() + n as f64 * mu.norm().ln() - 0.5 * ln_factorial(n);
            Complex64::from_polar(ln.exp(), n as f64 * mu.arg())
        })
        .collect();
    let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    v
}

/// Probability outside a truncated coherent state.
pub fn coherent_tail(mu_abs2: f64, cutoff: usize) -> f64 {
    if mu_abs2 == 0.0 {
        return 0.0;
    }
    let head: f64 = (0..=cutoff).map(|n| (-mu_abs2 + n as f64 * mu_abs2.ln() - ln_factorial(n)).exp()).sum();
    (1.0 - head).max(0.0)
}

fn fock_amplitudes(n: usize, cutoff: usize) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); cutoff + 1];
    v[n] = Complex64::new(1.0, 0.0);
    v
}

/// Initial density matrix as a weighted mixture of pure product states.
///
/// Thermal resonators are diagonal in the Fock basis, so
/// `ρ = Σ_j w_j |μ⟩⟨μ| ⊗ |j⟩⟨j|` with `w_j = Π_p tanh^{2j_p} r_p / cosh² r_p`.
/// Components are ordered lexicographically in `j`; the weights are
/// renormalised after components lighter than [`THERMAL_TAIL`] are dropped.
#[derive(Clone, Debug)]
pub struct Mixture {
    pub components: Vec<(f64, FockState)>,
    pub dropped_weight: f64,
}

impl Mixture {
    pub fn from_initial(space: &FockSpace, state: &InitialState) -> Result<Self> {
        let (n, m) = (space.n_cavity(), space.n_mech());
        if state.r.len() != m || state.coherent.keys().any(|&k| k >= n) {
            return Err(Error::Invalid("initial state does not match the Fock space".into()));
        }
        let cavity: Vec<Vec<Complex64>> = (0..n).map(|k| coherent_amplitudes(state.mu(k), space.cutoffs()[k])).collect();
        let mut weights: Vec<Vec<f64>> = Vec::with_capacity(m);
        for (p, &r) in state.r.iter().enumerate() {
            let cut = space.cutoffs()[space.mech_slot(p)];
            let mut w = thermal_weights(r, THERMAL_TAIL);
            w.truncate(cut + 1);
            // geometric tail beyond the kept levels
            let dropped = r.tanh().powi(2 * w.len() as i32);
            if dropped > THERMAL_DROP_LIMIT {
                return Err(Error::Invalid(format!(
                    "resonator {p}: cutoff {cut} discards thermal weight {dropped:e}"
                )));
            }
            weights.push(w);
        }
        let mut components = Vec::new();
        let mut occ = vec![0usize; m];
        loop {
            let w: f64 = occ.iter().enumerate().map(|(p, &j)| weights[p][j]).product();
            if w >= THERMAL_TAIL {
                let mut factors = cavity.clone();
                factors.extend(occ.iter().enumerate().map(|(p, &j)| fock_amplitudes(j, space.cutoffs()[space.mech_slot(p)])));
                components.push((w, FockState::product(space, &factors)?));
            }
            // odometer over the thermal levels, last resonator fastest
            let mut p = m;
            loop {
                if p == 0 {
                    let total: f64 = components.iter().map(|c| c.0).sum();
                    components.iter_mut().for_each(|c| c.0 /= total);
                    return Ok(Mixture { components, dropped_weight: 1.0 - total });
                }
                p -= 1;
                occ[p] += 1;
                if occ[p] < weights[p].len() {
                    break;
                }
                occ[p] = 0;
            }
        }
    }
}
