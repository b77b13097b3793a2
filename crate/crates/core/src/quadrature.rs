//! Cumulative quadrature on sampled integrands.
//!
//! Uniform grids use composite Simpson, fourth order: even nodes take the
//! Simpson sum directly, odd nodes add the cubic-exact single-interval rule
//! `h/24 (9 f₀ + 19 f₁ − 5 f₂ + f₃)` to the preceding even node (mirrored at
//! the right end; three-node grids use `h/12 (5 f₀ + 8 f₁ − f₂)`). Non-uniform grids
//! fall back to the composite trapezoid rule, second order.

use crate::model::TimeGrid;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rule {
    Simpson,
    Trapezoid,
}

impl Rule {
    /// Simpson on uniform grids with at least three points, trapezoid otherwise.
    pub fn for_grid(grid: &TimeGrid) -> Rule {
        if grid.len() >= 3 && grid.is_uniform() {
            Rule::Simpson
        } else {
            Rule::Trapezoid
        }
    }

    pub fn order(self) -> u32 {
        match self {
            Rule::Simpson => 4,
            Rule::Trapezoid => 2,
        }
    }
}

/// `∫_{t₀}^{tᵢ} f` at every node.
pub fn cumulative(t: &[f64], f: &[f64], rule: Rule) -> Vec<f64> {
    assert_eq!(t.len(), f.len(), "sample count mismatch");
    match rule {
        Rule::Simpson => cumulative_simpson(t, f),
        Rule::Trapezoid => cumulative_trapezoid(t, f),
    }
}

fn cumulative_trapezoid(t: &[f64], f: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(t.len());
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..t.len() {
        acc += 0.5 * (t[i] - t[i - 1]) * (f[i] + f[i - 1]);
        out.push(acc);
    }
    out
}

/// `∫ f` over `[t_i, t_{i+1}]` from the nodes to the right.
fn first_interval(f: &[f64], i: usize, h: f64) -> f64 {
    if i + 3 < f.len() {
        h / 24.0 * (9.0 * f[i] + 19.0 * f[i + 1] - 5.0 * f[i + 2] + f[i + 3])
    } else if i >= 1 {
        // last panel: centre the four points on the interval instead
        h / 24.0 * (-f[i - 1] + 13.0 * f[i] + 13.0 * f[i + 1] - f[i + 2])
    } else {
        h / 12.0 * (5.0 * f[i] + 8.0 * f[i + 1] - f[i + 2])
    }
}

fn cumulative_simpson(t: &[f64], f: &[f64]) -> Vec<f64> {
    let n = t.len();
    if n < 3 {
        return cumulative_trapezoid(t, f);
    }
    let h = (t[n - 1] - t[0]) / (n - 1) as f64;
    let mut out = vec![0.0; n];
    let mut even = 0.0;
    let mut i = 0;
    while i + 1 < n {
        if i + 2 < n {
            // odd node from the left end of the panel, then close the panel
            out[i + 1] = even + first_interval(f, i, h);
            even += h / 3.0 * (f[i] + 4.0 * f[i + 1] + f[i + 2]);
            out[i + 2] = even;
            i += 2;
        } else {
            // trailing single interval, looking back
            out[i + 1] = even
                + if i >= 2 {
                    h / 24.0 * (f[i - 2] - 5.0 * f[i - 1] + 19.0 * f[i] + 9.0 * f[i + 1])
                } else {
                    h / 12.0 * (-f[i - 1] + 8.0 * f[i] + 5.0 * f[i + 1])
                };
            i += 1;
        }
    }
    out
}
