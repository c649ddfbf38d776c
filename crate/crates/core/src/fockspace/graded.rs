use super::DensityMatrix;
use crate::{CMatrix, Error, Result, C64};

/// Two-mode basis `{|n₁, n₂⟩ : n₁ + n₂ ≤ N}`, ordered by total photon number
/// `s` and then by `n₁`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GradedBasis {
    cutoff: usize,
}

impl GradedBasis {
    pub fn new(cutoff: usize) -> Self {
        Self { cutoff }
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        (self.cutoff + 1) * (self.cutoff + 2) / 2
    }

    pub fn sector_start(s: usize) -> usize {
        s * (s + 1) / 2
    }

    pub fn index(&self, n1: usize, n2: usize) -> Option<usize> {
        let s = n1 + n2;
        (s <= self.cutoff).then(|| Self::sector_start(s) + n1)
    }

    /// `(n₁, n₂)` of every basis vector, in basis order.
    pub fn labels(&self) -> Vec<(usize, usize)> {
        (0..=self.cutoff).flat_map(|s| (0..=s).map(move |n1| (n1, s - n1))).collect()
    }
}

/// Which tensor factor a partial trace removes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    First,
    Second,
}

/// A two-mode operator stored densely over the graded basis.
#[derive(Debug, Clone, PartialEq)]
pub struct GradedTwoModeState {
    basis: GradedBasis,
    matrix: CMatrix,
}

impl GradedTwoModeState {
    pub fn from_matrix(basis: GradedBasis, matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != basis.dim() || matrix.ncols() != basis.dim() {
            return Err(Error::DimensionMismatch(format!(
                "graded matrix must be {0}x{0}, got {1}x{2}",
                basis.dim(),
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { basis, matrix })
    }

    pub fn basis(&self) -> GradedBasis {
        self.basis
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn matrix_mut(&mut self) -> &mut CMatrix {
        &mut self.matrix
    }

    /// `ρ ⊗ σ` restricted to total photon number `≤ N`.
    pub fn tensor(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<Self> {
        Self::tensor_operators(rho.matrix(), sigma.matrix())
    }

    /// `A ⊗ B` for arbitrary square operators of equal size.
    pub fn tensor_operators(a: &CMatrix, b: &CMatrix) -> Result<Self> {
        if a.nrows() != b.nrows() || !a.is_square() || !b.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "tensor factors {}x{} and {}x{}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols()
            )));
        }
        let basis = GradedBasis::new(a.nrows() - 1);
        let labels = basis.labels();
        let d = labels.len();
        let matrix = CMatrix::from_fn(d, d, |i, j| {
            let (n1, n2) = labels[i];
            let (m1, m2) = labels[j];
            a[(n1, m1)] * b[(n2, m2)]
        });
        Ok(Self { basis, matrix })
    }

    /// Partial trace removing `which`, as a single-mode operator.
    pub fn partial_trace_operator(&self, which: Subsystem) -> CMatrix {
        let n = self.basis.cutoff;
        let mut out = CMatrix::zeros(n + 1, n + 1);
        for p in 0..=n {
            for q in 0..=n {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..=(n - p.max(q)) {
                    let (i, j) = match which {
                        Subsystem::Second => (self.basis.index(p, k), self.basis.index(q, k)),
                        Subsystem::First => (self.basis.index(k, p), self.basis.index(k, q)),
                    };
                    acc += self.matrix[(i.expect("in range"), j.expect("in range"))];
                }
                out[(p, q)] = acc;
            }
        }
        out
    }

    pub fn partial_trace(&self, which: Subsystem) -> DensityMatrix {
        DensityMatrix::from_hermitian(self.partial_trace_operator(which))
    }

    pub fn trace(&self) -> C64 {
        self.matrix.diagonal().iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::{make_state, StateFamily};
    use crate::linalg::max_abs;

    #[test]
    fn basis_ordering() {
        let b = GradedBasis::new(2);
        assert_eq!(b.dim(), 6);
        assert_eq!(b.labels(), vec![(0, 0), (0, 1), (1, 0), (0, 2), (1, 1), (2, 0)]);
        assert_eq!(b.index(1, 1), Some(4));
        assert_eq!(b.index(2, 1), None);
    }

    #[test]
    fn partial_traces_recover_factors() {
        let rho = make_state(&StateFamily::RandomFullSupport { seed: 1 }, 20).unwrap();
        let sigma = make_state(&StateFamily::RandomFullSupport { seed: 2 }, 20).unwrap();
        let t = GradedTwoModeState::tensor(&rho, &sigma).unwrap();
        // Both factors decay like thermal(0.5), so dropping n₁ + n₂ > 20
        // loses only a negligible corner of the product.
        let r = t.partial_trace(Subsystem::Second);
        let s = t.partial_trace(Subsystem::First);
        assert!(max_abs(&(r.matrix() - rho.matrix())) < 1e-9);
        assert!(max_abs(&(s.matrix() - sigma.matrix())) < 1e-9);
        assert!((t.trace().re - 1.0).abs() < 1e-9);
    }

    #[test]
    fn thermal_times_vacuum_sits_at_n2_zero() {
        let th = make_state(&StateFamily::Thermal { nbar: 1.0 }, 40).unwrap();
        let v = make_state(&StateFamily::Vacuum, 40).unwrap();
        let t = GradedTwoModeState::tensor(&th, &v).unwrap();
        let b = t.basis();
        for (i, (n1, n2)) in b.labels().into_iter().enumerate() {
            let d = t.matrix()[(i, i)].re;
            if n2 == 0 {
                assert!((d - 0.5f64.powi(n1 as i32 + 1)).abs() < 1e-16);
            } else {
                assert_eq!(d, 0.0);
            }
        }
    }

    #[test]
    fn mismatched_cutoffs_rejected() {
        let a = make_state(&StateFamily::Vacuum, 3).unwrap();
        let b = make_state(&StateFamily::Vacuum, 4).unwrap();
        assert!(matches!(GradedTwoModeState::tensor(&a, &b), Err(Error::DimensionMismatch(_))));
    }
}
