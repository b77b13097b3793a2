use crate::error::{Error, Result};

/// Default limit on the Hilbert-space dimension.
pub const DEFAULT_BUDGET: usize = 4096;

/// Truncated Fock basis over the cavity modes followed by the resonators.
///
/// Basis states are ordered row-major over the occupation tuple
/// `(n_0, …, n_{N−1}, m_0, …, m_{M−1})`: the last resonator varies fastest.
/// Hence every state vector splits into contiguous blocks of length
/// [`FockSpace::mech_dim`], one per cavity configuration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FockSpace {
    cutoffs: Vec<usize>,
    strides: Vec<usize>,
    n_cavity: usize,
    dim: usize,
}

impl FockSpace {
    pub fn new(cavity: &[usize], mech: &[usize]) -> Result<Self> {
        Self::with_budget(cavity, mech, DEFAULT_BUDGET)
    }

    pub fn with_budget(cavity: &[usize], mech: &[usize], budget: usize) -> Result<Self> {
        let cutoffs: Vec<usize> = cavity.iter().chain(mech).copied().collect();
        let dim = cutoffs
            .iter()
            .try_fold(1usize, |acc, &c| acc.checked_mul(c + 1))
            .unwrap_or(usize::MAX);
        if dim > budget {
            return Err(Error::DimensionBudget { dim, budget });
        }
        let mut strides = vec![1; cutoffs.len()];
        for j in (0..cutoffs.len().saturating_sub(1)).rev() {
            strides[j] = strides[j + 1] * (cutoffs[j + 1] + 1);
        }
        Ok(FockSpace { cutoffs, strides, n_cavity: cavity.len(), dim })
    }

    /// Same cutoff on every cavity mode and on every resonator.
    pub fn uniform(n_cavity: usize, cavity_cutoff: usize, n_mech: usize, mech_cutoff: usize) -> Result<Self> {
        Self::new(&vec![cavity_cutoff; n_cavity], &vec![mech_cutoff; n_mech])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_cavity(&self) -> usize {
        self.n_cavity
    }

    pub fn n_mech(&self) -> usize {
        self.cutoffs.len() - self.n_cavity
    }

    pub fn n_modes(&self) -> usize {
        self.cutoffs.len()
    }

    pub fn cutoffs(&self) -> &[usize] {
        &self.cutoffs
    }

    /// Position of cavity mode `k` in the occupation tuple.
    pub fn cavity_slot(&self, k: usize) -> usize {
        k
    }

    /// Position of resonator `p` in the occupation tuple.
    pub fn mech_slot(&self, p: usize) -> usize {
        self.n_cavity + p
    }

    pub fn stride(&self, slot: usize) -> usize {
        self.strides[slot]
    }

    /// Dimension of the resonator factor.
    pub fn mech_dim(&self) -> usize {
        self.cutoffs[self.n_cavity..].iter().map(|c| c + 1).product()
    }

    pub fn index(&self, occ: &[usize]) -> usize {
        debug_assert_eq!(occ.len(), self.cutoffs.len());
        occ.iter().zip(&self.strides).map(|(n, s)| n * s).sum()
    }

    pub fn occupation(&self, mut idx: usize) -> Vec<usize> {
        let mut occ = vec![0; self.cutoffs.len()];
        for (j, s) in self.strides.iter().enumerate() {
            occ[j] = idx / s;
            idx %= s;
        }
        occ
    }

    /// Occupation of a single slot without decoding the whole tuple.
    pub fn level(&self, idx: usize, slot: usize) -> usize {
        (idx / self.strides[slot]) % (self.cutoffs[slot] + 1)
    }

    /// Cutoffs widened by `extra` on every mode, e.g. for truncation checks.
    pub fn widened(&self, extra: usize) -> Result<Self> {
        let c: Vec<usize> = self.cutoffs.iter().map(|c| c + extra).collect();
        let (cav, mech) = c.split_at(self.n_cavity);
        Self::with_budget(cav, mech, usize::MAX)
    }
}
