use num_complex::Complex64;

use super::space::FockSpace;
use crate::observables::Pair;

/// `b ψ` for the lowering operator on one slot, by index arithmetic.
pub fn lower_action(space: &FockSpace, slot: usize, psi: &[Complex64]) -> Vec<Complex64> {
    let stride = space.stride(slot);
    let mut out = vec![Complex64::new(0.0, 0.0); psi.len()];
    for (i, v) in psi.iter().enumerate() {
        let n = space.level(i, slot);
        if n > 0 {
            out[i - stride] = v * (n as f64).sqrt();
        }
    }
    out
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Expectation values of one (pure or already mixed) state at one time.
#[derive(Clone, Debug, PartialEq)]
pub struct Moments {
    pub cavity_pop: Vec<f64>,
    pub mech_pop: Vec<f64>,
    /// `⟨d_a† d_b⟩` for each pair, in the order the pairs were requested.
    pub correlators: Vec<Complex64>,
    /// Reduced resonator density matrix, row-major, when requested.
    pub rho_m: Option<Vec<Complex64>>,
    pub norm_sqr: f64,
    /// Largest population in the top level of any slot.
    pub top_mass: f64,
}

impl Moments {
    pub fn of_state(space: &FockSpace, psi: &[Complex64], pairs: &[Pair], reduced: bool) -> Self {
        let cav: Vec<Vec<Complex64>> = (0..space.n_cavity()).map(|k| lower_action(space, space.cavity_slot(k), psi)).collect();
        let mech: Vec<Vec<Complex64>> = (0..space.n_mech()).map(|p| lower_action(space, space.mech_slot(p), psi)).collect();
        let pop = |v: &Vec<Complex64>| v.iter().map(|x| x.norm_sqr()).sum::<f64>();
        let correlators = pairs
            .iter()
            .map(|pair| match *pair {
                Pair::ModeMode(a, b) => inner(&cav[a], &cav[b]),
                Pair::ModeRes(a, p) => inner(&cav[a], &mech[p]),
                Pair::ResRes(p, q) => inner(&mech[p], &mech[q]),
            })
            .collect();
        let top_mass = (0..space.n_modes())
            .map(|slot| {
                let top = space.cutoffs()[slot];
                psi.iter().enumerate().filter(|(i, _)| space.level(*i, slot) == top).map(|(_, v)| v.norm_sqr()).sum::<f64>()
            })
            .fold(0.0, f64::max);
        Moments {
            cavity_pop: cav.iter().map(pop).collect(),
            mech_pop: mech.iter().map(pop).collect(),
            correlators,
            rho_m: reduced.then(|| reduced_density_matrix(space, psi)),
            norm_sqr: psi.iter().map(|x| x.norm_sqr()).sum(),
            top_mass,
        }
    }

    /// `self += w · other`. The summed top-level mass bounds the mixture's
    /// population in the top level of its fullest slot.
    pub fn add_weighted(&mut self, w: f64, other: &Moments) {
        let add = |a: &mut Vec<f64>, b: &Vec<f64>| a.iter_mut().zip(b).for_each(|(x, y)| *x += w * y);
        add(&mut self.cavity_pop, &other.cavity_pop);
        add(&mut self.mech_pop, &other.mech_pop);
        self.correlators.iter_mut().zip(&other.correlators).for_each(|(x, y)| *x += w * y);
        if let (Some(a), Some(b)) = (self.rho_m.as_mut(), other.rho_m.as_ref()) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += w * y);
        }
        self.norm_sqr += w * other.norm_sqr;
        self.top_mass += w * other.top_mass;
    }

    pub fn zeroed(&self) -> Self {
        Moments {
            cavity_pop: vec![0.0; self.cavity_pop.len()],
            mech_pop: vec![0.0; self.mech_pop.len()],
            correlators: vec![Complex64::new(0.0, 0.0); self.correlators.len()],
            rho_m: self.rho_m.as_ref().map(|r| vec![Complex64::new(0.0, 0.0); r.len()]),
            norm_sqr: 0.0,
            top_mass: 0.0,
        }
    }

    /// `Tr ρ_m²`, when the reduced matrix was requested.
    pub fn purity(&self) -> Option<f64> {
        self.rho_m.as_ref().map(|r| r.iter().map(|x| x.norm_sqr()).sum())
    }
}

/// `ρ_m = Tr_c |ψ⟩⟨ψ|`: with the cavity index most significant the state is
/// a stack of resonator blocks, and `ρ_m[r][r'] = Σ_c ψ_{c,r} ψ*_{c,r'}`.
pub fn reduced_density_matrix(space: &FockSpace, psi: &[Complex64]) -> Vec<Complex64> {
    let d = space.mech_dim();
    let mut rho = vec![Complex64::new(0.0, 0.0); d * d];
    for block in psi.chunks_exact(d) {
        for (r, x) in block.iter().enumerate() {
            if x.norm_sqr() == 0.0 {
                continue;
            }
            let row = &mut rho[r * d..(r + 1) * d];
            for (o, y) in row.iter_mut().zip(block) {
                *o += x * y.conj();
            }
        }
    }
    rho
}
