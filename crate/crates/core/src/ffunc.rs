//! F-functions of the decoupled evolution operator.
//!
//! Per resonator `p` (frequency ω) with
//!
//! ```text
//! u_n = g_np⁺ cos ωt − g_np⁻ sin ωt        v_n = −(g_np⁺ sin ωt + g_np⁻ cos ωt)
//! u_λ = λ_p⁺ cos ωt − λ_p⁻ sin ωt          v_λ = −(λ_p⁺ sin ωt + λ_p⁻ cos ωt)
//! ```
//!
//! the functions are `F_m = ωt`, `F_n^{(±)} = ∫ u_n, ∫ v_n`, `F_± = ∫ u_λ, ∫ v_λ`,
//! `F_nm = 4 ∫ v_m F_n⁺` and `F̃_c,n = 2 ∫ v_λ F_n⁺ + 2 ∫ v_n F_+`.
//!
//! The complex amplitude by which photons in mode `n` displace resonator `p`
//! is `β_np = ∫ (g⁺ + i g⁻) e^{iωt} = F_n⁺ − i F_n⁻`; the linear drive gives
//! `β_p = F_+ − i F_−`. In the Heisenberg picture
//! `b_p(t) = e^{−iωt} (b_p − i β_p − i Σ_n β_np N_n)`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::Result;
use crate::model::{CouplingSpec, SystemSpec, TimeGrid};
use crate::quadrature::{cumulative, Rule};

/// Minimum number of samples per period of the fastest integrand component.
pub const MIN_SAMPLES_PER_PERIOD: f64 = 20.0;

/// All F-functions sampled on a time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct FSet {
    pub t: Vec<f64>,
    pub omega_m: Vec<f64>,
    /// `fk_plus[n][p][i]` = F_n^{(p,+)}(t_i)
    pub fk_plus: Vec<Vec<Vec<f64>>>,
    /// `fk_minus[n][p][i]` = F_n^{(p,−)}(t_i)
    pub fk_minus: Vec<Vec<Vec<f64>>>,
    /// `f_plus[p][i]` = F_+^{(p)}(t_i)
    pub f_plus: Vec<Vec<f64>>,
    /// `f_minus[p][i]` = F_−^{(p)}(t_i)
    pub f_minus: Vec<Vec<f64>>,
    /// `fnm[n][m][p][i]` = F_nm^{(p)}(t_i)
    pub fnm: Vec<Vec<Vec<Vec<f64>>>>,
    /// `fc[n][p][i]` = F̃_c,n^{(p)}(t_i)
    pub fc: Vec<Vec<Vec<f64>>>,
    pub rule: Rule,
    pub warnings: Vec<String>,
}

impl FSet {
    pub fn n_cavity(&self) -> usize {
        self.fk_plus.len()
    }

    pub fn n_mech(&self) -> usize {
        self.omega_m.len()
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn f_m(&self, p: usize, i: usize) -> f64 {
        self.omega_m[p] * self.t[i]
    }

    /// `F⁽ᵖ⁾ = F_− + i F_+`
    pub fn f_res(&self, p: usize, i: usize) -> Complex64 {
        Complex64::new(self.f_minus[p][i], self.f_plus[p][i])
    }

    /// `F_k⁽ᵖ⁾ = F_k⁺ + i F_k⁻`
    pub fn f_k(&self, k: usize, p: usize, i: usize) -> Complex64 {
        Complex64::new(self.fk_plus[k][p][i], self.fk_minus[k][p][i])
    }

    /// Displacement amplitude `β_kp = F_k⁺ − i F_k⁻` per photon in mode `k`.
    pub fn beta_k(&self, k: usize, p: usize, i: usize) -> Complex64 {
        self.f_k(k, p, i).conj()
    }

    /// Displacement amplitude `β_p = F_+ − i F_−` of the linear drive.
    pub fn beta_lambda(&self, p: usize, i: usize) -> Complex64 {
        Complex64::new(self.f_plus[p][i], -self.f_minus[p][i])
    }

    /// `½ (F_nm + F_mn)`
    pub fn fnm_sym(&self, n: usize, m: usize, p: usize, i: usize) -> f64 {
        0.5 * (self.fnm[n][m][p][i] + self.fnm[m][n][p][i])
    }

    /// `Δ⁽ᵖ⁾_{n,m} = Σ_k (n_k − m_k) F_k⁽ᵖ⁾`
    pub fn delta(&self, p: usize, n_occ: &[usize], m_occ: &[usize], i: usize) -> Complex64 {
        n_occ
            .iter()
            .zip(m_occ)
            .enumerate()
            .map(|(k, (&a, &b))| self.f_k(k, p, i) * (a as f64 - b as f64))
            .sum()
    }

    /// Kerr-type phase matrix `ψ_kl = Σ_p (½(F_kl + F_lk) − 2 F_k⁺ F_l⁻)`.
    ///
    /// In the Heisenberg picture `a_k(t)` carries `exp(−i Σ_l ψ_kl N_l)` on
    /// top of its free rotation and displacement factors.
    pub fn psi(&self, k: usize, l: usize, i: usize) -> f64 {
        (0..self.n_mech())
            .map(|p| self.fnm_sym(k, l, p, i) - 2.0 * self.fk_plus[k][p][i] * self.fk_minus[l][p][i])
            .sum()
    }

    /// Self-interaction angle `φ_k = ½ ψ_kk`.
    pub fn phi(&self, k: usize, i: usize) -> f64 {
        0.5 * self.psi(k, k, i)
    }

    /// `½ Σ_p (F_kk + 2 F_k⁺ F_k⁻)`, the angle with the opposite sign on the
    /// product term. Kept only to demonstrate, against the oracle, that it
    /// does not describe the dynamics.
    pub fn phi_alternative_sign(&self, k: usize, i: usize) -> f64 {
        0.5 * (0..self.n_mech())
            .map(|p| self.fnm[k][k][p][i] + 2.0 * self.fk_plus[k][p][i] * self.fk_minus[k][p][i])
            .sum::<f64>()
    }

    /// Largest absolute difference between two sets on the same grid.
    pub fn max_abs_deviation(&self, other: &FSet) -> f64 {
        fn flat<'a>(s: &'a FSet) -> Box<dyn Iterator<Item = &'a f64> + 'a> {
            Box::new(
                s.fk_plus
                    .iter()
                    .chain(&s.fk_minus)
                    .chain(&s.fc)
                    .flatten()
                    .flatten()
                    .chain(s.f_plus.iter().chain(&s.f_minus).flatten())
                    .chain(s.fnm.iter().flatten().flatten().flatten()),
            )
        }
        flat(self).zip(flat(other)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// Values at the grid indices `idx`, e.g. to undo a grid refinement.
    pub fn subsample(&self, idx: &[usize]) -> FSet {
        let pick = |v: &Vec<f64>| idx.iter().map(|&i| v[i]).collect::<Vec<f64>>();
        FSet {
            t: pick(&self.t),
            omega_m: self.omega_m.clone(),
            fk_plus: self.fk_plus.iter().map(|r| r.iter().map(pick).collect()).collect(),
            fk_minus: self.fk_minus.iter().map(|r| r.iter().map(pick).collect()).collect(),
            f_plus: self.f_plus.iter().map(pick).collect(),
            f_minus: self.f_minus.iter().map(pick).collect(),
            fnm: self
                .fnm
                .iter()
                .map(|a| a.iter().map(|b| b.iter().map(pick).collect()).collect())
                .collect(),
            fc: self.fc.iter().map(|r| r.iter().map(pick).collect()).collect(),
            rule: self.rule,
            warnings: self.warnings.clone(),
        }
    }

    /// CSV with one row per time and one column per function.
    pub fn to_csv(&self) -> String {
        let (n, m) = (self.n_cavity(), self.n_mech());
        let mut head = vec!["t".to_string()];
        for p in 0..m {
            head.push(format!("F_m[{p}]"));
        }
        for a in 0..n {
            for p in 0..m {
                head.push(format!("Fc[{a}][{p}]"));
            }
        }
        for a in 0..n {
            for b in 0..n {
                for p in 0..m {
                    head.push(format!("Fnm[{a}][{b}][{p}]"));
                }
            }
        }
        for p in 0..m {
            head.push(format!("Fp[{p}]"));
        }
        for p in 0..m {
            head.push(format!("Fm_[{p}]"));
        }
        for a in 0..n {
            for p in 0..m {
                head.push(format!("Fk_plus[{a}][{p}]"));
            }
        }
        for a in 0..n {
            for p in 0..m {
                head.push(format!("Fk_minus[{a}][{p}]"));
            }
        }
        let mut out = String::new();
        out.push_str(&head.join(","));
        out.push('\n');
        for i in 0..self.len() {
            let mut row = vec![self.t[i]];
            row.extend((0..m).map(|p| self.f_m(p, i)));
            row.extend((0..n).flat_map(|a| (0..m).map(move |p| (a, p))).map(|(a, p)| self.fc[a][p][i]));
            for a in 0..n {
                for b in 0..n {
                    row.extend((0..m).map(|p| self.fnm[a][b][p][i]));
                }
            }
            row.extend((0..m).map(|p| self.f_plus[p][i]));
            row.extend((0..m).map(|p| self.f_minus[p][i]));
            row.extend((0..n).flat_map(|a| (0..m).map(move |p| (a, p))).map(|(a, p)| self.fk_plus[a][p][i]));
            row.extend((0..n).flat_map(|a| (0..m).map(move |p| (a, p))).map(|(a, p)| self.fk_minus[a][p][i]));
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }
}

fn sample(c: &CouplingSpec, t: &[f64]) -> Result<Vec<f64>> {
    t.iter().map(|&x| c.eval(x)).collect()
}

fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

/// Grid-resolution warning, if the grid is coarser than
/// [`MIN_SAMPLES_PER_PERIOD`] samples per fastest period.
pub fn resolution_warning(spec: &SystemSpec, grid: &TimeGrid) -> Option<String> {
    let w = spec.fastest_frequency();
    if w <= 0.0 || grid.len() < 2 {
        return None;
    }
    let period = 2.0 * PI / w;
    let h = grid.max_step();
    let per_period = period / h;
    if per_period < MIN_SAMPLES_PER_PERIOD {
        Some(format!(
            "grid step {h:.3e} gives {per_period:.1} samples per fastest period {period:.3e}; \
             recommended step <= {:.3e}",
            period / MIN_SAMPLES_PER_PERIOD
        ))
    } else {
        None
    }
}

/// Evaluate every F-function on `grid` by cumulative quadrature.
pub fn compute_f_set(spec: &SystemSpec, grid: &TimeGrid) -> Result<FSet> {
    let t = grid.times();
    let rule = Rule::for_grid(grid);
    let (n, m) = (spec.n_cavity(), spec.n_mech());
    let cum = |f: &[f64]| cumulative(t, f, rule);

    let mut fk_plus = vec![vec![Vec::new(); m]; n];
    let mut fk_minus = vec![vec![Vec::new(); m]; n];
    let mut f_plus = vec![Vec::new(); m];
    let mut f_minus = vec![Vec::new(); m];
    let mut fnm = vec![vec![vec![Vec::new(); m]; n]; n];
    let mut fc = vec![vec![Vec::new(); m]; n];

    for p in 0..m {
        let w = spec.omega_m[p];
        let cs: Vec<f64> = t.iter().map(|&x| (w * x).cos()).collect();
        let sn: Vec<f64> = t.iter().map(|&x| (w * x).sin()).collect();
        let quad = |plus: &[f64], minus: &[f64]| -> (Vec<f64>, Vec<f64>) {
            let u = (0..t.len()).map(|i| plus[i] * cs[i] - minus[i] * sn[i]).collect();
            let v = (0..t.len()).map(|i| -(plus[i] * sn[i] + minus[i] * cs[i])).collect();
            (u, v)
        };

        let (u_l, v_l) = quad(&sample(&spec.lambda_plus[p], t)?, &sample(&spec.lambda_minus[p], t)?);
        f_plus[p] = cum(&u_l);
        f_minus[p] = cum(&v_l);

        let mut v_modes = Vec::with_capacity(n);
        for k in 0..n {
            let (u, v) = quad(&sample(&spec.g_plus[k][p], t)?, &sample(&spec.g_minus[k][p], t)?);
            fk_plus[k][p] = cum(&u);
            fk_minus[k][p] = cum(&v);
            v_modes.push(v);
        }
        for k in 0..n {
            for l in 0..n {
                fnm[k][l][p] = cum(&mul(&v_modes[l], &fk_plus[k][p])).into_iter().map(|x| 4.0 * x).collect();
            }
            let a = cum(&mul(&v_l, &fk_plus[k][p]));
            let b = cum(&mul(&v_modes[k], &f_plus[p]));
            fc[k][p] = a.iter().zip(&b).map(|(x, y)| 2.0 * (x + y)).collect();
        }
    }

    Ok(FSet {
        t: t.to_vec(),
        omega_m: spec.omega_m.clone(),
        fk_plus,
        fk_minus,
        f_plus,
        f_minus,
        fnm,
        fc,
        rule,
        warnings: resolution_warning(spec, grid).into_iter().collect(),
    })
}

/// Compute on a grid with `k − 1` extra points per interval and return the
/// values at the original nodes.
pub fn compute_f_set_refined(spec: &SystemSpec, grid: &TimeGrid, k: usize) -> Result<FSet> {
    if k <= 1 {
        return compute_f_set(spec, grid);
    }
    let fine = grid.refined(k);
    let mut set = compute_f_set(spec, &fine)?;
    // warnings refer to the grid the caller passed
    set.warnings = resolution_warning(spec, &fine).into_iter().collect();
    let idx: Vec<usize> = (0..grid.len()).map(|i| i * k).collect();
    Ok(set.subsample(&idx))
}

/// `∫₀ᵗ (c cos ωt' + s sin ωt') dt'`
pub fn linear_closed_form(c: f64, s: f64, omega: f64, t: f64) -> f64 {
    let x = omega * t;
    (c * x.sin() + s * (1.0 - x.cos())) / omega
}

/// `∫₀ᵗ dt' (c₂ cos ωt' + s₂ sin ωt') ∫₀^{t'} dt'' (c₁ cos ωt'' + s₁ sin ωt'')`
pub fn bilinear_closed_form(c1: f64, s1: f64, c2: f64, s2: f64, omega: f64, t: f64) -> f64 {
    let w = omega;
    let x = w * t;
    let (sn, cs) = x.sin_cos();
    let s2x = (2.0 * x).sin();
    let int_cos_sin = sn * sn / (2.0 * w);
    let int_cos = sn / w;
    let int_cos2 = t / 2.0 + s2x / (4.0 * w);
    let int_sin2 = t / 2.0 - s2x / (4.0 * w);
    let int_sin = (1.0 - cs) / w;
    (c2 * c1 * int_cos_sin + c2 * s1 * (int_cos - int_cos2) + s2 * c1 * int_sin2 + s2 * s1 * (int_sin - int_cos_sin)) / w
}

/// Exact F-functions of one mode and one resonator with constant couplings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FSnapshot {
    pub f_m: f64,
    pub fk_plus: f64,
    pub fk_minus: f64,
    pub f_plus: f64,
    pub f_minus: f64,
    /// `F_nn`
    pub fnn: f64,
    /// `F̃_c`
    pub fc: f64,
}

/// Closed-form antiderivatives for time-constant couplings.
pub fn f_closed_form_constant(g_plus: f64, g_minus: f64, lam_plus: f64, lam_minus: f64, omega_m: f64, t: f64) -> FSnapshot {
    let w = omega_m;
    // (cos, sin) coefficients of u and v
    let u_g = (g_plus, -g_minus);
    let v_g = (-g_minus, -g_plus);
    let u_l = (lam_plus, -lam_minus);
    let v_l = (-lam_minus, -lam_plus);
    FSnapshot {
        f_m: w * t,
        fk_plus: linear_closed_form(u_g.0, u_g.1, w, t),
        fk_minus: linear_closed_form(v_g.0, v_g.1, w, t),
        f_plus: linear_closed_form(u_l.0, u_l.1, w, t),
        f_minus: linear_closed_form(v_l.0, v_l.1, w, t),
        fnn: 4.0 * bilinear_closed_form(u_g.0, u_g.1, v_g.0, v_g.1, w, t),
        fc: 2.0 * bilinear_closed_form(u_g.0, u_g.1, v_l.0, v_l.1, w, t)
            + 2.0 * bilinear_closed_form(u_l.0, u_l.1, v_g.0, v_g.1, w, t),
    }
}

/// The full [`FSet`] in closed form, for systems whose couplings are all
/// [`CouplingSpec::Constant`]. Returns `None` otherwise.
pub fn closed_form_set(spec: &SystemSpec, grid: &TimeGrid) -> Option<FSet> {
    let constant = |c: &CouplingSpec| match c {
        CouplingSpec::Constant { base } => Some(*base),
        _ => None,
    };
    let (n, m) = (spec.n_cavity(), spec.n_mech());
    let t = grid.times();
    let mut fk_plus = vec![vec![Vec::new(); m]; n];
    let mut fk_minus = vec![vec![Vec::new(); m]; n];
    let mut f_plus = vec![Vec::new(); m];
    let mut f_minus = vec![Vec::new(); m];
    let mut fnm = vec![vec![vec![Vec::new(); m]; n]; n];
    let mut fc = vec![vec![Vec::new(); m]; n];
    for p in 0..m {
        let w = spec.omega_m[p];
        let (lp, lm) = (constant(&spec.lambda_plus[p])?, constant(&spec.lambda_minus[p])?);
        let u_l = (lp, -lm);
        let v_l = (-lm, -lp);
        let mut u = Vec::new();
        let mut v = Vec::new();
        for k in 0..n {
            let (gp, gm) = (constant(&spec.g_plus[k][p])?, constant(&spec.g_minus[k][p])?);
            u.push((gp, -gm));
            v.push((-gm, -gp));
        }
        let lin = |c: (f64, f64)| t.iter().map(|&x| linear_closed_form(c.0, c.1, w, x)).collect::<Vec<_>>();
        let bil = |inner: (f64, f64), outer: (f64, f64), scale: f64| {
            t.iter().map(|&x| scale * bilinear_closed_form(inner.0, inner.1, outer.0, outer.1, w, x)).collect::<Vec<_>>()
        };
        f_plus[p] = lin(u_l);
        f_minus[p] = lin(v_l);
        for k in 0..n {
            fk_plus[k][p] = lin(u[k]);
            fk_minus[k][p] = lin(v[k]);
            for l in 0..n {
                fnm[k][l][p] = bil(u[k], v[l], 4.0);
            }
            let a = bil(u[k], v_l, 2.0);
            let b = bil(u_l, v[k], 2.0);
            fc[k][p] = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        }
    }
    Some(FSet {
        t: t.to_vec(),
        omega_m: spec.omega_m.clone(),
        fk_plus,
        fk_minus,
        f_plus,
        f_minus,
        fnm,
        fc,
        rule: Rule::Simpson,
        warnings: Vec::new(),
    })
}
