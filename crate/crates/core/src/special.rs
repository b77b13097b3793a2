//! Modified Bessel functions, generalised Laguerre polynomials, the
//! polynomial case of ₁F₁, and the displacement-operator identities used by
//! the entropy formulas.

use num_complex::Complex64;
use serde::Serialize;

/// Stopping rule for power series.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesAccuracy {
    /// Stop once terms past the peak fall below this fraction of the partial sum.
    pub rel_tol: f64,
    pub max_terms: usize,
}

impl Default for SeriesAccuracy {
    fn default() -> Self {
        SeriesAccuracy { rel_tol: 1e-18, max_terms: 1_000_000 }
    }
}

/// Neumaier compensated summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum of complex terms, one accumulator per component.
#[derive(Clone, Copy, Debug, Default)]
pub struct ComplexSum {
    re: CompensatedSum,
    im: CompensatedSum,
}

impl ComplexSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

/// `ln n!`
pub fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Exponentially scaled modified Bessel function `e^{−z} I_n(z)` for `z ≥ 0`.
///
/// The power series is summed in log space so that neither the prefactor
/// nor the individual terms overflow; the result is finite for every `z`.
pub fn bessel_i_scaled(n: u32, z: f64) -> f64 {
    bessel_i_scaled_with(n, z, SeriesAccuracy::default())
}

pub fn bessel_i_scaled_with(n: u32, z: f64, acc: SeriesAccuracy) -> f64 {
    if z.is_nan() || z < 0.0 {
        return f64::NAN;
    }
    if z == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let n_f = n as f64;
    let half_log = (0.5 * z).ln();
    let mut log_term = n_f * half_log - ln_factorial(n as usize) - z;
    let mut sum = CompensatedSum::new();
    for k in 0..acc.max_terms {
        let term = log_term.exp();
        sum.add(term);
        let kf = k as f64;
        let ratio_log = 2.0 * half_log - (kf + 1.0).ln() - (n_f + kf + 1.0).ln();
        // past the peak the terms decrease geometrically
        if ratio_log < 0.0 && term <= acc.rel_tol * sum.value() {
            break;
        }
        log_term += ratio_log;
    }
    sum.value()
}

/// Modified Bessel function of the first kind `I_n(z)`, `z ≥ 0`.
/// Overflows to infinity for very large `z`; use [`bessel_i_scaled`] there.
pub fn bessel_i(n: u32, z: f64) -> f64 {
    bessel_i_scaled(n, z) * z.exp()
}

/// Generalised Laguerre polynomial `L_n^{(q)}(z)` by the three-term recurrence
/// `(k+1) L_{k+1} = (2k + 1 + q − z) L_k − (k + q) L_{k−1}`.
pub fn laguerre(n: usize, q: usize, z: f64) -> f64 {
    let q = q as f64;
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + q - z;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + q - z) * cur - (kf + q) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// `₁F₁(−n; b; z)` for integer `b ≥ 1`, through
/// `₁F₁(−n; q+1; z) = n! q! / (n+q)! · L_n^{(q)}(z)`.
pub fn hyp1f1_neg_int(n: usize, b: usize, z: f64) -> f64 {
    assert!(b >= 1, "second parameter must be a positive integer");
    let q = b - 1;
    // n! q! / (n+q)! = 1 / C(n+q, n)
    let mut inv_binom = 1.0;
    for j in 1..=n {
        inv_binom *= j as f64 / (q + j) as f64;
    }
    inv_binom * laguerre(n, q, z)
}

/// Fock matrix element `⟨m| D(α) |n⟩` of the displacement operator
/// `D(α) = exp(α b† − α* b)`.
pub fn displacement_element(m: usize, n: usize, alpha: Complex64) -> Complex64 {
    let x = alpha.norm_sqr();
    let gauss = (-0.5 * x).exp();
    if m >= n {
        let d = m - n;
        let pref = (0.5 * (ln_factorial(n) - ln_factorial(m))).exp();
        alpha.powu(d as u32) * (pref * gauss * laguerre(n, d, x))
    } else {
        let d = n - m;
        let pref = (0.5 * (ln_factorial(m) - ln_factorial(n))).exp();
        (-alpha.conj()).powu(d as u32) * (pref * gauss * laguerre(m, d, x))
    }
}

/// Thermal occupation weights `tanh^{2l} r / cosh² r`, truncated once the
/// remaining tail falls below `tail_tol`.
pub fn thermal_weights(r: f64, tail_tol: f64) -> Vec<f64> {
    let t2 = r.tanh().powi(2);
    let c2 = r.cosh().powi(2);
    let mut w = vec![1.0 / c2];
    // tail after index l is t2^{l+1}
    let mut tail = t2;
    while tail > tail_tol && w.len() < 10_000 {
        let last = *w.last().unwrap();
        w.push(last * t2);
        tail *= t2;
    }
    w
}

/// `I_α = ⟨μ| e^{−iα a†a} |μ⟩` by truncated Fock sum.
pub fn i_alpha_series(angle: f64, mu_abs2: f64) -> Complex64 {
    let mut sum = ComplexSum::new();
    let mut log_p = -mu_abs2;
    let n_max = poisson_cutoff(mu_abs2, 1e-20);
    for n in 0..=n_max {
        if n > 0 {
            log_p += mu_abs2.ln() - (n as f64).ln();
        }
        sum.add(Complex64::from_polar(log_p.exp(), -angle * n as f64));
    }
    sum.value()
}

pub fn i_alpha_closed(angle: f64, mu_abs2: f64) -> Complex64 {
    (-(1.0 - Complex64::from_polar(1.0, -angle)) * mu_abs2).exp()
}

/// `J_α = Σ_l w_l ⟨l| D(α) |l⟩` over thermal weights.
pub fn j_alpha_series(alpha: Complex64, r: f64) -> Complex64 {
    let mut sum = ComplexSum::new();
    for (l, w) in thermal_weights(r, 1e-20).into_iter().enumerate() {
        sum.add(displacement_element(l, l, alpha) * w);
    }
    sum.value()
}

pub fn j_alpha_closed(alpha: Complex64, r: f64) -> Complex64 {
    Complex64::new((-0.5 * (2.0 * r).cosh() * alpha.norm_sqr()).exp(), 0.0)
}

/// `J̃_α = Σ_l w_l ⟨l| D(α) a |l⟩`.
pub fn j_tilde_alpha_series(alpha: Complex64, r: f64) -> Complex64 {
    let mut sum = ComplexSum::new();
    for (l, w) in thermal_weights(r, 1e-20).into_iter().enumerate().skip(1) {
        sum.add(displacement_element(l, l - 1, alpha) * ((l as f64).sqrt() * w));
    }
    sum.value()
}

pub fn j_tilde_alpha_closed(alpha: Complex64, r: f64) -> Complex64 {
    alpha * (r.sinh().powi(2) * (-0.5 * (2.0 * r).cosh() * alpha.norm_sqr()).exp())
}

/// `L̃_α = Σ_{l,l'} w_l w_l' |⟨l| D(α) |l'⟩|²`, the overlap `Tr[ρ D ρ D†]`
/// of a thermal state with its displaced copy.
pub fn l_tilde_alpha_series(alpha: Complex64, r: f64) -> f64 {
    let w = thermal_weights(r, 1e-20);
    let mut sum = CompensatedSum::new();
    for (l, wl) in w.iter().enumerate() {
        for (lp, wlp) in w.iter().enumerate() {
            sum.add(wl * wlp * displacement_element(l, lp, alpha).norm_sqr());
        }
    }
    sum.value()
}

pub fn l_tilde_alpha_closed(alpha: Complex64, r: f64) -> f64 {
    let c = (2.0 * r).cosh();
    (-alpha.norm_sqr() / c).exp() / c
}

/// Smallest `n` with Poisson(`mean`) tail mass beyond `n` below `tail_tol`.
pub fn poisson_cutoff(mean: f64, tail_tol: f64) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    // p tracks P(n); the tail Σ_{k>n} P(k) is bounded by the geometric series
    // P(n+1) / (1 − mean/(n+2)) once n + 2 > mean
    let mut log_p = -mean;
    let mut n = 0usize;
    loop {
        let nf = n as f64;
        let log_next = log_p + mean.ln() - (nf + 1.0).ln();
        if nf + 2.0 > 2.0 * mean {
            let bound = log_next.exp() / (1.0 - mean / (nf + 2.0));
            if bound < tail_tol {
                return n;
            }
        }
        log_p = log_next;
        n += 1;
    }
}

/// One row of the identity report.
#[derive(Clone, Debug, Serialize)]
pub struct IdentityCheck {
    pub identity: &'static str,
    pub parameters: String,
    pub series: Complex64,
    pub closed_form: Complex64,
    pub deviation: f64,
}

/// Outcome of [`identity_suite`].
#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport {
    pub checks: Vec<IdentityCheck>,
    /// Largest deviation per identity, in the order I_α, I_α⁽¹⁾, J_α, J̃_α, L̃_α.
    pub max_deviation: Vec<(&'static str, f64)>,
}

impl IdentityReport {
    pub fn worst(&self) -> f64 {
        self.max_deviation.iter().map(|&(_, d)| d).fold(0.0, f64::max)
    }
}

/// Displacement amplitudes probed by the suite.
pub const IDENTITY_ALPHAS: [Complex64; 5] = [
    Complex64::new(0.0, 0.0),
    Complex64::new(0.3, 0.0),
    Complex64::new(0.5, 0.2),
    Complex64::new(1.0, 0.0),
    Complex64::new(0.0, 1.5),
];
/// Thermal parameters probed by the suite.
pub const IDENTITY_R: [f64; 3] = [0.0, 0.3, 0.7];
/// Coherent amplitudes `|μ|` probed by the suite.
pub const IDENTITY_MU: [f64; 4] = [0.0, 0.5, 1.0, 1.7];
/// Rotation angles for `I_α`, whose argument is a real phase.
pub const IDENTITY_ANGLES: [f64; 5] = [0.0, 0.3, 0.7, 1.0, 1.5];
/// Finite-difference step for the derivative identity.
pub const DERIVATIVE_STEP: f64 = 1e-6;

/// Evaluate every displacement-operator identity on the documented grid,
/// comparing truncated Fock sums with the closed forms.
pub fn identity_suite() -> IdentityReport {
    let mut checks = Vec::new();
    let push = |checks: &mut Vec<IdentityCheck>, identity, parameters: String, series: Complex64, closed: Complex64| {
        checks.push(IdentityCheck { identity, parameters, series, closed_form: closed, deviation: (series - closed).norm() });
    };

    for &angle in &IDENTITY_ANGLES {
        for &mu in &IDENTITY_MU {
            let x = mu * mu;
            let params = format!("angle={angle}, |mu|={mu}");
            push(&mut checks, "I_alpha", params.clone(), i_alpha_series(angle, x), i_alpha_closed(angle, x));
            // I⁽¹⁾ = i dI/dα by central difference of the series, against |μ|² e^{−iα} I_α
            let h = DERIVATIVE_STEP;
            let deriv = (i_alpha_series(angle + h, x) - i_alpha_series(angle - h, x)) / (2.0 * h);
            let lhs = Complex64::i() * deriv;
            let rhs = Complex64::from_polar(x, -angle) * i_alpha_closed(angle, x);
            push(&mut checks, "I_alpha_derivative", params, lhs, rhs);
        }
    }
    for &alpha in &IDENTITY_ALPHAS {
        for &r in &IDENTITY_R {
            let params = format!("alpha={alpha}, r={r}");
            push(&mut checks, "J_alpha", params.clone(), j_alpha_series(alpha, r), j_alpha_closed(alpha, r));
            push(&mut checks, "J_tilde_alpha", params.clone(), j_tilde_alpha_series(alpha, r), j_tilde_alpha_closed(alpha, r));
            push(
                &mut checks,
                "L_tilde_alpha",
                params,
                Complex64::new(l_tilde_alpha_series(alpha, r), 0.0),
                Complex64::new(l_tilde_alpha_closed(alpha, r), 0.0),
            );
        }
    }

    let names = ["I_alpha", "I_alpha_derivative", "J_alpha", "J_tilde_alpha", "L_tilde_alpha"];
    let max_deviation = names
        .iter()
        .map(|&name| {
            let worst = checks.iter().filter(|c| c.identity == name).map(|c| c.deviation).fold(0.0, f64::max);
            (name, worst)
        })
        .collect();
    IdentityReport { checks, max_deviation }
}
