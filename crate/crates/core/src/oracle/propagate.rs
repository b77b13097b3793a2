use num_complex::Complex64;

use super::hamiltonian::Hamiltonian;
use super::space::FockSpace;
use super::state::FockState;
use crate::error::{Error, Result};
use crate::model::{SystemSpec, TimeGrid};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Exponential for time-independent Hamiltonians, stepping otherwise.
    Auto,
    /// Taylor-series action of `exp(−iHh)`; time-independent only.
    Exponential,
    /// RK4 with step-doubling error control.
    Stepping,
}

#[derive(Clone, Copy, Debug)]
pub struct PropagationOptions {
    pub method: Method,
    /// Accepted local error per unit time of the step-doubling estimate.
    pub tol_per_time: f64,
    /// Relative step below which stepping gives up.
    pub min_step: f64,
    /// Abort once any top Fock level holds more than this population.
    pub overflow: Option<f64>,
}

impl Default for PropagationOptions {
    fn default() -> Self {
        PropagationOptions { method: Method::Auto, tol_per_time: 1e-10, min_step: 1e-12, overflow: None }
    }
}

type Vector = Vec<Complex64>;

fn axpy(y: &mut [Complex64], a: Complex64, x: &[Complex64]) {
    y.iter_mut().zip(x).for_each(|(y, x)| *y += a * x);
}

fn dist(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

/// `exp(−i H h) x` for fixed coefficients, in substeps with `h_s ‖H‖ ≤ 1`.
fn expm_action(ham: &Hamiltonian, coeffs: &[f64], x: &[Complex64], h: f64) -> Vector {
    let norm = ham.norm_bound(coeffs);
    let nsub = (h.abs() * norm).ceil().max(1.0) as usize;
    let hs = h / nsub as f64;
    let mut y = x.to_vec();
    let mut term = vec![Complex64::new(0.0, 0.0); x.len()];
    let mut next = term.clone();
    for _ in 0..nsub {
        term.copy_from_slice(&y);
        let mut sum = y.clone();
        for k in 1..80 {
            ham.apply(coeffs, &term, &mut next);
            let s = Complex64::new(0.0, -hs / k as f64);
            let mut tn = 0.0;
            for (t, n) in term.iter_mut().zip(&next) {
                *t = s * n;
                tn += t.norm_sqr();
            }
            axpy(&mut sum, Complex64::new(1.0, 0.0), &term);
            if tn.sqrt() <= 1e-17 * (1.0 + sum.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()) {
                break;
            }
        }
        y = sum;
    }
    y
}

fn rk4(ham: &Hamiltonian, y: &[Complex64], t: f64, h: f64, work: &mut [Vector; 3]) -> Result<Vector> {
    let mi = Complex64::new(0.0, -1.0);
    let c0 = ham.coefficients(t)?;
    let cm = ham.coefficients(t + 0.5 * h)?;
    let c1 = ham.coefficients(t + h)?;
    let [k, tmp, acc] = work;
    // k1
    ham.apply(&c0, y, k);
    acc.copy_from_slice(y);
    axpy(acc, mi * (h / 6.0), k);
    // k2
    tmp.copy_from_slice(y);
    axpy(tmp, mi * (0.5 * h), k);
    ham.apply(&cm, tmp, k);
    axpy(acc, mi * (h / 3.0), k);
    // k3
    tmp.copy_from_slice(y);
    axpy(tmp, mi * (0.5 * h), k);
    ham.apply(&cm, tmp, k);
    axpy(acc, mi * (h / 3.0), k);
    // k4
    tmp.copy_from_slice(y);
    axpy(tmp, mi * h, k);
    ham.apply(&c1, tmp, k);
    axpy(acc, mi * (h / 6.0), k);
    Ok(acc.clone())
}

fn top_level_mass(space: &FockSpace, psi: &[Complex64]) -> Option<(usize, f64)> {
    (0..space.n_modes())
        .map(|slot| {
            let top = space.cutoffs()[slot];
            let m: f64 = psi.iter().enumerate().filter(|(i, _)| space.level(*i, slot) == top).map(|(_, v)| v.norm_sqr()).sum();
            (slot, m)
        })
        .max_by(|a, b| a.1.total_cmp(&b.1))
}

/// Largest population held in the top level of any mode.
pub fn truncation_mass(space: &FockSpace, psi: &[Complex64]) -> f64 {
    top_level_mass(space, psi).map_or(0.0, |(_, m)| m)
}

/// States at every time of `times`, starting from `psi0` at `times[0]`.
pub fn propagate_with(
    ham: &Hamiltonian,
    space: &FockSpace,
    psi0: &[Complex64],
    times: &[f64],
    opts: PropagationOptions,
) -> Result<Vec<Vector>> {
    let method = match opts.method {
        Method::Auto if ham.is_time_independent() => Method::Exponential,
        Method::Auto => Method::Stepping,
        Method::Exponential if !ham.is_time_independent() => {
            return Err(Error::Contract("single-exponential propagation needs a time-independent Hamiltonian".into()))
        }
        m => m,
    };
    let check = |psi: &[Complex64], t: f64| -> Result<()> {
        if let (Some(limit), Some((slot, mass))) = (opts.overflow, top_level_mass(space, psi)) {
            if mass > limit {
                return Err(Error::TruncationOverflow { mode: slot, t, mass });
            }
        }
        Ok(())
    };
    let mut out = Vec::with_capacity(times.len());
    let Some(&t0) = times.first() else { return Ok(out) };
    let mut y = psi0.to_vec();
    check(&y, t0)?;
    out.push(y.clone());
    let coeffs0 = ham.coefficients(t0)?;
    let mut h = 0.05 / ham.norm_bound(&coeffs0).max(1e-300);
    let mut work = [vec![Complex64::new(0.0, 0.0); y.len()], vec![Complex64::new(0.0, 0.0); y.len()], vec![Complex64::new(0.0, 0.0); y.len()]];
    let mut t = t0;
    for &tb in &times[1..] {
        match method {
            Method::Exponential => y = expm_action(ham, &coeffs0, &y, tb - t),
            _ => {
                while t < tb {
                    let step = h.min(tb - t);
                    let full = rk4(ham, &y, t, step, &mut work)?;
                    let half = rk4(ham, &y, t, 0.5 * step, &mut work)?;
                    let two = rk4(ham, &half, t + 0.5 * step, 0.5 * step, &mut work)?;
                    let err = dist(&full, &two) / 15.0;
                    let allowed = opts.tol_per_time * step;
                    if err <= allowed {
                        // Richardson: the combination is fifth order
                        y = two.iter().zip(&full).map(|(a, b)| a + (a - b) / 15.0).collect();
                        t = if tb - t <= step { tb } else { t + step };
                    }
                    let factor = if err == 0.0 { 2.0 } else { (0.9 * (allowed / err).powf(0.2)).clamp(0.2, 2.0) };
                    if err > allowed || step == h {
                        h = step * factor;
                    }
                    if h < opts.min_step * (1.0 + t.abs()) {
                        return Err(Error::StepUnderflow { t, step: h });
                    }
                }
            }
        }
        t = tb;
        check(&y, tb)?;
        out.push(y.clone());
    }
    Ok(out)
}

/// States of `spec` on `space` at every grid time, with default options.
pub fn propagate(spec: &SystemSpec, space: &FockSpace, psi0: &FockState, grid: &TimeGrid) -> Result<Vec<FockState>> {
    let ham = Hamiltonian::build(spec, space)?;
    Ok(propagate_with(&ham, space, &psi0.amplitudes, grid.times(), PropagationOptions::default())?
        .into_iter()
        .map(|amplitudes| FockState { amplitudes })
        .collect())
}
