use num_complex::Complex64;

use super::space::FockSpace;
use super::sparse::{b_minus, b_plus, number, operator, CsrMatrix, Ladder};
use crate::error::{Error, Result};
use crate::model::{CouplingSpec, SystemSpec};

/// One time-dependent term `scale · c(t) · op`.
#[derive(Clone, Debug)]
pub struct Term {
    pub coupling: CouplingSpec,
    pub scale: f64,
    pub op: CsrMatrix,
}

/// `H(t) = H_static + Σ_j scale_j c_j(t) K_j` with Hermitian `K_j`.
#[derive(Clone, Debug)]
pub struct Hamiltonian {
    pub static_part: CsrMatrix,
    pub terms: Vec<Term>,
}

impl Hamiltonian {
    /// Free part `Σ ω_c,k N_k + Σ ω_m,p b_p†b_p` on the given space.
    pub fn free(space: &FockSpace, omega_c: &[f64], omega_m: &[f64]) -> CsrMatrix {
        let parts: Vec<(Complex64, CsrMatrix)> = omega_c
            .iter()
            .enumerate()
            .map(|(k, &w)| (Complex64::new(w, 0.0), number(space, space.cavity_slot(k))))
            .chain(omega_m.iter().enumerate().map(|(p, &w)| (Complex64::new(w, 0.0), number(space, space.mech_slot(p)))))
            .collect();
        CsrMatrix::linear_combination(space.dim(), parts.iter().map(|(s, m)| (*s, m)))
    }

    /// The full nonlinear Hamiltonian of `spec` on `space`. Zero couplings
    /// are skipped.
    pub fn build(spec: &SystemSpec, space: &FockSpace) -> Result<Self> {
        if space.n_cavity() != spec.n_cavity() || space.n_mech() != spec.n_mech() {
            return Err(Error::Invalid(format!(
                "Fock space has {} cavity modes and {} resonators, system has {} and {}",
                space.n_cavity(),
                space.n_mech(),
                spec.n_cavity(),
                spec.n_mech()
            )));
        }
        let mut terms = Vec::new();
        let mut push = |c: &CouplingSpec, op: &dyn Fn() -> CsrMatrix| {
            if !c.is_zero() {
                terms.push(Term { coupling: c.clone(), scale: 1.0, op: op() });
            }
        };
        for p in 0..spec.n_mech() {
            let s = space.mech_slot(p);
            push(&spec.lambda_plus[p], &|| b_plus(space, s));
            push(&spec.lambda_minus[p], &|| b_minus(space, s));
        }
        let one = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        for n in 0..spec.n_cavity() {
            let k = space.cavity_slot(n);
            for p in 0..spec.n_mech() {
                let s = space.mech_slot(p);
                push(&spec.g_plus[n][p], &|| {
                    operator(space, &[(one, &[Ladder::Number(k), Ladder::Raise(s)]), (one, &[Ladder::Number(k), Ladder::Lower(s)])])
                });
                push(&spec.g_minus[n][p], &|| {
                    operator(space, &[(i, &[Ladder::Number(k), Ladder::Raise(s)]), (-i, &[Ladder::Number(k), Ladder::Lower(s)])])
                });
            }
        }
        Ok(Hamiltonian { static_part: Self::free(space, &spec.omega_c, &spec.omega_m), terms })
    }

    pub fn dim(&self) -> usize {
        self.static_part.n
    }

    pub fn is_time_independent(&self) -> bool {
        self.terms.iter().all(|t| matches!(t.coupling, CouplingSpec::Constant { .. }))
    }

    pub fn coefficients(&self, t: f64) -> Result<Vec<f64>> {
        self.terms.iter().map(|term| Ok(term.scale * term.coupling.eval(t)?)).collect()
    }

    /// `out = H(t) x` for precomputed coefficients.
    pub fn apply(&self, coeffs: &[f64], x: &[Complex64], out: &mut [Complex64]) {
        out.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0));
        self.static_part.mul_add(Complex64::new(1.0, 0.0), x, out);
        for (term, &c) in self.terms.iter().zip(coeffs) {
            if c != 0.0 {
                term.op.mul_add(Complex64::new(c, 0.0), x, out);
            }
        }
    }

    /// Assembled matrix at time `t`.
    pub fn at(&self, t: f64) -> Result<CsrMatrix> {
        let coeffs = self.coefficients(t)?;
        let one = Complex64::new(1.0, 0.0);
        Ok(CsrMatrix::linear_combination(
            self.dim(),
            std::iter::once((one, &self.static_part)).chain(self.terms.iter().zip(&coeffs).map(|(term, &c)| (Complex64::new(c, 0.0), &term.op))),
        ))
    }

    /// Upper bound of `‖H(t)‖_∞` from the triangle inequality.
    pub fn norm_bound(&self, coeffs: &[f64]) -> f64 {
        self.static_part.norm_inf() + self.terms.iter().zip(coeffs).map(|(term, c)| c.abs() * term.op.norm_inf()).sum::<f64>()
    }
}

/// Assembled Hamiltonian matrix of `spec` on `space` at time `t`.
pub fn build_hamiltonian(spec: &SystemSpec, space: &FockSpace, t: f64) -> Result<CsrMatrix> {
    Hamiltonian::build(spec, space)?.at(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CouplingSpec as C;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn uncoupled_hamiltonian_is_diagonal_energy() {
        let spec = SystemSpec::new(vec![1.5], vec![1.0, 0.7]);
        let space = FockSpace::new(&[2], &[2, 3]).unwrap();
        let h = build_hamiltonian(&spec, &space, 0.0).unwrap();
        for (i, j, v) in h.triplets() {
            assert_eq!(i, j);
            let o = space.occupation(i);
            assert!((v.re - (1.5 * o[0] as f64 + o[1] as f64 + 0.7 * o[2] as f64)).abs() < 1e-15);
        }
    }

    #[test]
    fn hand_assembled_two_by_two() {
        // basis |n, m⟩ in order |00⟩, |01⟩, |10⟩, |11⟩
        let (wc, wm, g, gm, lp) = (2.0, 1.0, 0.3, 0.2, 0.1);
        let spec = SystemSpec::new(vec![wc], vec![wm])
            .with_g_plus(0, 0, C::constant(g))
            .with_g_minus(0, 0, C::constant(gm))
            .with_lambda_plus(0, C::constant(lp));
        let space = FockSpace::new(&[1], &[1]).unwrap();
        let h = build_hamiltonian(&spec, &space, 0.0).unwrap().to_dense();
        let i = Complex64::new(0.0, 1.0);
        let expect = nalgebra::DMatrix::from_row_slice(
            4,
            4,
            &[
                c(0.0), c(lp), c(0.0), c(0.0),
                c(lp), c(wm), c(0.0), c(0.0),
                c(0.0), c(0.0), c(wc), c(g + lp) - i * gm,
                c(0.0), c(0.0), c(g + lp) + i * gm, c(wc + wm),
            ],
        );
        assert!((h.clone() - expect).norm() < 1e-15, "{h}");
        // the g-coupling entry ⟨1,1|H|1,0⟩ without drive
        let bare = SystemSpec::new(vec![wc], vec![wm]).with_g_plus(0, 0, C::constant(g));
        let hb = build_hamiltonian(&bare, &space, 0.0).unwrap().to_dense();
        assert_eq!(hb[(space.index(&[1, 1]), space.index(&[1, 0]))], c(g));
    }

    #[test]
    fn modulated_hamiltonian_is_hermitian() {
        let spec = SystemSpec::new(vec![1.5, 2.5], vec![1.0, 0.8])
            .with_g_plus(0, 0, C::modulated_sin(0.1, 0.5, 1.3))
            .with_g_minus(1, 1, C::modulated_cos(0.07, 0.2, 0.4))
            .with_g_plus(1, 0, C::constant(-0.05))
            .with_lambda_minus(1, C::modulated_sin(0.02, 1.0, 2.0));
        let space = FockSpace::new(&[3, 2], &[4, 3]).unwrap();
        let h = build_hamiltonian(&spec, &space, 0.37).unwrap();
        assert!(h.hermiticity_deviation() < 1e-14 * h.norm_inf());
    }

    #[test]
    fn apply_matches_assembled_matrix() {
        let spec = SystemSpec::new(vec![1.5], vec![1.0]).with_g_plus(0, 0, C::modulated_sin(0.1, 0.5, 1.3));
        let space = FockSpace::new(&[3], &[4]).unwrap();
        let ham = Hamiltonian::build(&spec, &space).unwrap();
        assert!(!ham.is_time_independent());
        let x: Vec<Complex64> = (0..space.dim()).map(|k| Complex64::new((k as f64).sin(), 0.3)).collect();
        let mut y = vec![c(0.0); space.dim()];
        ham.apply(&ham.coefficients(0.9).unwrap(), &x, &mut y);
        let z = ham.at(0.9).unwrap().mul_vec(&x);
        assert!(y.iter().zip(&z).all(|(a, b)| (a - b).norm() < 1e-14));
    }

    #[test]
    fn mode_count_mismatch_is_rejected() {
        let spec = SystemSpec::new(vec![1.0, 2.0], vec![1.0]);
        let space = FockSpace::new(&[3], &[3]).unwrap();
        assert!(matches!(Hamiltonian::build(&spec, &space), Err(Error::Invalid(_))));
    }
}
