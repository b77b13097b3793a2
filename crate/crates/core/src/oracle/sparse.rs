use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::space::FockSpace;

/// Compressed-sparse-row complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    pub n: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<Complex64>,
}

impl CsrMatrix {
    /// Duplicate entries are summed; rows come out column-sorted.
    pub fn from_triplets(n: usize, triplets: impl IntoIterator<Item = (usize, usize, Complex64)>) -> Self {
        let mut rows: Vec<BTreeMap<usize, Complex64>> = vec![BTreeMap::new(); n];
        for (i, j, v) in triplets {
            *rows[i].entry(j).or_default() += v;
        }
        let mut m = CsrMatrix { n, indptr: vec![0], indices: Vec::new(), values: Vec::new() };
        for row in rows {
            for (j, v) in row {
                if v != Complex64::new(0.0, 0.0) {
                    m.indices.push(j);
                    m.values.push(v);
                }
            }
            m.indptr.push(m.indices.len());
        }
        m
    }

    pub fn zeros(n: usize) -> Self {
        CsrMatrix { n, indptr: vec![0; n + 1], indices: Vec::new(), values: Vec::new() }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.n).flat_map(move |i| (self.indptr[i]..self.indptr[i + 1]).map(move |q| (i, self.indices[q], self.values[q])))
    }

    /// `out += s · A x`
    pub fn mul_add(&self, s: Complex64, x: &[Complex64], out: &mut [Complex64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for q in self.indptr[i]..self.indptr[i + 1] {
                acc += self.values[q] * x[self.indices[q]];
            }
            *o += s * acc;
        }
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.n];
        self.mul_add(Complex64::new(1.0, 0.0), x, &mut out);
        out
    }

    /// `Σ_j s_j A_j`
    pub fn linear_combination<'a>(n: usize, parts: impl IntoIterator<Item = (Complex64, &'a CsrMatrix)>) -> Self {
        Self::from_triplets(n, parts.into_iter().flat_map(|(s, m)| m.triplets().map(move |(i, j, v)| (i, j, s * v))))
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(self.n, self.triplets().map(|(i, j, v)| (j, i, v.conj())))
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| self.values[self.indptr[i]..self.indptr[i + 1]].iter().map(|v| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `max |A − A†|`
    pub fn hermiticity_deviation(&self) -> f64 {
        let diff = Self::linear_combination(self.n, [(Complex64::new(1.0, 0.0), self), (Complex64::new(-1.0, 0.0), &self.adjoint())]);
        diff.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut d = DMatrix::zeros(self.n, self.n);
        for (i, j, v) in self.triplets() {
            d[(i, j)] += v;
        }
        d
    }
}

/// A single creation, annihilation or number operator on one slot of a [`FockSpace`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ladder {
    Raise(usize),
    Lower(usize),
    Number(usize),
}

/// Matrix of `Σ_j c_j Π_k L_jk` where each product is applied right to left.
/// Transitions leaving the truncated space are dropped.
pub fn operator(space: &FockSpace, terms: &[(Complex64, &[Ladder])]) -> CsrMatrix {
    let mut trip = Vec::new();
    for col in 0..space.dim() {
        let occ0 = space.occupation(col);
        'term: for (c, word) in terms {
            let mut occ = occ0.clone();
            let mut amp = *c;
            for l in word.iter().rev() {
                match *l {
                    Ladder::Raise(s) => {
                        if occ[s] == space.cutoffs()[s] {
                            continue 'term;
                        }
                        occ[s] += 1;
                        amp *= (occ[s] as f64).sqrt();
                    }
                    Ladder::Lower(s) => {
                        if occ[s] == 0 {
                            continue 'term;
                        }
                        amp *= (occ[s] as f64).sqrt();
                        occ[s] -= 1;
                    }
                    Ladder::Number(s) => amp *= occ[s] as f64,
                }
            }
            trip.push((space.index(&occ), col, amp));
        }
    }
    CsrMatrix::from_triplets(space.dim(), trip)
}

/// `B⁺ = b† + b` on slot `s`.
pub fn b_plus(space: &FockSpace, s: usize) -> CsrMatrix {
    let one = Complex64::new(1.0, 0.0);
    operator(space, &[(one, &[Ladder::Raise(s)]), (one, &[Ladder::Lower(s)])])
}

/// `B⁻ = i (b† − b)` on slot `s`.
pub fn b_minus(space: &FockSpace, s: usize) -> CsrMatrix {
    let i = Complex64::new(0.0, 1.0);
    operator(space, &[(i, &[Ladder::Raise(s)]), (-i, &[Ladder::Lower(s)])])
}

/// Lowering operator on slot `s`.
pub fn lower(space: &FockSpace, s: usize) -> CsrMatrix {
    operator(space, &[(Complex64::new(1.0, 0.0), &[Ladder::Lower(s)])])
}

/// Number operator on slot `s`.
pub fn number(space: &FockSpace, s: usize) -> CsrMatrix {
    operator(space, &[(Complex64::new(1.0, 0.0), &[Ladder::Number(s)])])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn triplets_are_merged_and_sorted() {
        let m = CsrMatrix::from_triplets(2, [(0, 1, c(1.0)), (0, 0, c(2.0)), (0, 1, c(3.0)), (1, 0, c(1.0)), (1, 0, c(-1.0))]);
        assert_eq!(m.indptr, vec![0, 2, 2]);
        assert_eq!(m.indices, vec![0, 1]);
        assert_eq!(m.values, vec![c(2.0), c(4.0)]);
    }

    #[test]
    fn ladder_algebra_below_the_cutoff() {
        let s = FockSpace::new(&[5], &[]).unwrap();
        let a = lower(&s, 0).to_dense();
        let n = number(&s, 0).to_dense();
        let ad = a.adjoint();
        assert!((&ad * &a - &n).norm() < 1e-14);
        // [a, a†] = 1 except on the top level
        let comm = &a * &ad - &ad * &a;
        for k in 0..5 {
            assert!((comm[(k, k)] - c(1.0)).norm() < 1e-14);
        }
        assert!((comm[(5, 5)] - c(-5.0)).norm() < 1e-14);
    }

    #[test]
    fn quadratures_are_hermitian() {
        let s = FockSpace::new(&[2], &[4, 3]).unwrap();
        for slot in 0..3 {
            assert!(b_plus(&s, slot).hermiticity_deviation() < 1e-15);
            assert!(b_minus(&s, slot).hermiticity_deviation() < 1e-15);
        }
        let bm = b_minus(&s, 1).to_dense();
        let b = lower(&s, 1).to_dense();
        let expect = (b.adjoint() - &b) * Complex64::new(0.0, 1.0);
        assert!((bm - expect).norm() < 1e-14);
    }

    #[test]
    fn mul_add_matches_dense() {
        let s = FockSpace::new(&[3], &[3]).unwrap();
        let one = c(1.0);
        let m = operator(&s, &[(one, &[Ladder::Number(0), Ladder::Raise(1)]), (c(0.5), &[Ladder::Lower(0)])]);
        let x: Vec<Complex64> = (0..s.dim()).map(|k| Complex64::new(k as f64, 1.0 - k as f64 / 7.0)).collect();
        let y = m.mul_vec(&x);
        let yd = m.to_dense() * nalgebra::DVector::from_vec(x);
        for (a, b) in y.iter().zip(yd.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
