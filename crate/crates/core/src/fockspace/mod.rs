//! Truncated Fock-space linear algebra.
//!
//! A single mode keeps photon numbers `0..=N` (`dim = N + 1`). Operators are
//! dense `CMatrix` values; the ladder operators are the exact truncations of
//! their infinite-dimensional counterparts.

mod graded;
mod spectral;
mod states;

pub use graded::{GradedBasis, GradedTwoModeState, Subsystem};
pub use spectral::{matrix_log_on_support, reconstruction_error, spectral, LogOnSupport, SpectralDecomposition};
pub use states::{ginibre_state, make_state, make_state_with_tail_bound, MixturePart, StateFamily, TAIL_BOUND};

use crate::linalg::{hermitize, max_abs, trace};
use crate::{CMatrix, Error, Result, C64};

/// Eigenvalue floor used for logarithms and support decisions.
pub const EIGEN_FLOOR: f64 = 1e-13;

/// Tolerance on negative eigenvalues accepted by [`DensityMatrix::new`].
pub const PSD_TOLERANCE: f64 = 1e-10;

/// A single-mode density matrix in the truncated number basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
    mode_count: usize,
    trace_deficit: f64,
}

impl DensityMatrix {
    /// Validate and wrap a matrix. The input is symmetrized first; it must be
    /// PSD up to [`PSD_TOLERANCE`] and have trace at most `1 + 1e-10`.
    /// Missing trace is recorded as `trace_deficit`, not renormalized away.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "density matrix must be square and nonempty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let scale = 1.0 + max_abs(&matrix);
        let defect = crate::linalg::hermiticity_defect(&matrix);
        if defect > 1e-8 * scale {
            return Err(Error::InvalidState(format!("not Hermitian (defect {defect:.3e})")));
        }
        let matrix = hermitize(&matrix);
        let tr = trace(&matrix).re;
        if tr > 1.0 + 1e-10 {
            return Err(Error::InvalidState(format!("trace {tr} exceeds 1")));
        }
        let min = matrix.symmetric_eigenvalues().min();
        if min < -PSD_TOLERANCE {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(Self::from_hermitian(matrix))
    }

    /// Wrap a matrix that is known to be a (sub-normalized) state, skipping
    /// the eigenvalue check. The matrix is still symmetrized.
    pub(crate) fn from_hermitian(matrix: CMatrix) -> Self {
        let matrix = hermitize(&matrix);
        let tr = trace(&matrix).re;
        Self { matrix, mode_count: 1, trace_deficit: (1.0 - tr).max(0.0) }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Largest photon number kept.
    pub fn cutoff(&self) -> usize {
        self.dim() - 1
    }

    pub fn mode_count(&self) -> usize {
        self.mode_count
    }

    /// Probability mass lost to truncation, `max(0, 1 − tr ρ)`.
    pub fn trace_deficit(&self) -> f64 {
        self.trace_deficit
    }

    pub fn trace(&self) -> f64 {
        trace(&self.matrix).re
    }

    pub fn spectral(&self) -> Result<SpectralDecomposition> {
        spectral(&self.matrix)
    }

    /// Photon-number distribution (the diagonal).
    pub fn populations(&self) -> Vec<f64> {
        self.matrix.diagonal().iter().map(|x| x.re).collect()
    }

    /// Total weight on rows and columns with photon number `≥ from`.
    pub fn weight_above(&self, from: usize) -> f64 {
        let d = self.dim();
        let mut w: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                if i >= from || j >= from {
                    w = w.max(self.matrix[(i, j)].norm());
                }
            }
        }
        w
    }

    /// `D_z ρ D_z†`.
    pub fn displaced(&self, z: C64) -> Self {
        let d = displacement_matrix(z, self.dim());
        Self::from_hermitian(&d * &self.matrix * d.adjoint())
    }

    /// Same state at a different cutoff: padded with zeros or truncated.
    pub fn with_cutoff(&self, cutoff: usize) -> Self {
        Self::from_hermitian(crate::linalg::embed(&self.matrix, cutoff + 1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    Annihilation,
    Creation,
    Displacement,
    Generic,
}

/// A single-mode operator with a tag describing how it was built.
#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    kind: OperatorKind,
    matrix: CMatrix,
}

impl FockOperator {
    pub fn generic(matrix: CMatrix) -> Self {
        Self { kind: OperatorKind::Generic, matrix }
    }

    /// `a` with `a[n−1, n] = √n`.
    pub fn annihilation(cutoff: usize) -> Self {
        Self { kind: OperatorKind::Annihilation, matrix: annihilation(cutoff) }
    }

    pub fn creation(cutoff: usize) -> Self {
        Self { kind: OperatorKind::Creation, matrix: annihilation(cutoff).adjoint() }
    }

    /// Truncation of `exp(z a† − z̄ a)`. Entries are exact matrix elements of
    /// the untruncated operator, so every `⟨m|D_z|n⟩` with `m, n ≤ N` is
    /// correct to rounding; only unitarity is lost near the edge.
    pub fn displacement(z: C64, cutoff: usize) -> Self {
        if z.norm_sqr() > cutoff as f64 / 4.0 {
            log::warn!("displacement |z|^2 = {:.3} is large for cutoff {cutoff}", z.norm_sqr());
        }
        Self { kind: OperatorKind::Displacement, matrix: displacement_matrix(z, cutoff + 1) }
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `‖U†U − I‖_F` on the block of photon numbers `< block`.
    pub fn unitarity_defect(&self, block: usize) -> f64 {
        let b = block.min(self.dim());
        let u = &self.matrix;
        let g = u.adjoint() * u;
        let mut s = 0.0;
        for i in 0..b {
            for j in 0..b {
                let e = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
                s += (g[(i, j)] - e).norm_sqr();
            }
        }
        s.sqrt()
    }
}

pub fn annihilation(cutoff: usize) -> CMatrix {
    let d = cutoff + 1;
    let mut a = CMatrix::zeros(d, d);
    for n in 1..d {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    a
}

pub fn creation(cutoff: usize) -> CMatrix {
    annihilation(cutoff).adjoint()
}

pub fn number(cutoff: usize) -> CMatrix {
    CMatrix::from_fn(cutoff + 1, cutoff + 1, |i, j| {
        if i == j {
            C64::new(i as f64, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Matrix elements `⟨m|D_z|n⟩` for `m, n < dim`.
///
/// From `a D_z = D_z (a + z)`:
/// `√m ⟨m|D|n⟩ = √n ⟨m−1|D|n−1⟩ + z ⟨m−1|D|n⟩`.
/// The lower triangle is filled row by row; the entry `⟨m−1|D_z|m⟩` needed
/// for the diagonal is `conj⟨m|D_{−z}|m−1⟩`, so both triangles of `D_z` and
/// `D_{−z}` are carried together.
pub fn displacement_matrix(z: C64, dim: usize) -> CMatrix {
    let mut p = CMatrix::zeros(dim, dim);
    let mut q = CMatrix::zeros(dim, dim);
    let d0 = C64::new((-0.5 * z.norm_sqr()).exp(), 0.0);
    p[(0, 0)] = d0;
    q[(0, 0)] = d0;
    let sq: Vec<f64> = (0..dim).map(|k| (k as f64).sqrt()).collect();
    for m in 1..dim {
        for n in 0..m {
            let mut vp = z * p[(m - 1, n)];
            let mut vq = -z * q[(m - 1, n)];
            if n > 0 {
                vp += p[(m - 1, n - 1)] * sq[n];
                vq += q[(m - 1, n - 1)] * sq[n];
            }
            p[(m, n)] = vp / sq[m];
            q[(m, n)] = vq / sq[m];
        }
        let up_p = q[(m, m - 1)].conj();
        let up_q = p[(m, m - 1)].conj();
        let dp = z * up_p + p[(m - 1, m - 1)] * sq[m];
        let dq = -z * up_q + q[(m - 1, m - 1)] * sq[m];
        p[(m, m)] = dp / sq[m];
        q[(m, m)] = dq / sq[m];
    }
    for m in 1..dim {
        for n in 0..m {
            p[(n, m)] = q[(m, n)].conj();
        }
    }
    p
}

/// `exp(z a† − z̄ a)` of the truncated generator, computed on a space padded
/// by `pad` extra levels and cut back. Used as an independent cross-check of
/// [`displacement_matrix`].
pub fn displacement_expm(z: C64, cutoff: usize, pad: usize) -> CMatrix {
    let a = annihilation(cutoff + pad);
    let g = creation(cutoff + pad) * z - a * z.conj();
    crate::linalg::truncate(&g.exp(), cutoff + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{commutator, frobenius};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn zero_displacement_is_identity() {
        let d = FockOperator::displacement(c(0.0, 0.0), 10);
        assert!(frobenius(&(d.matrix() - CMatrix::identity(11, 11))) < 1e-15);
    }

    #[test]
    fn displacement_matches_padded_exponential() {
        for &z in &[c(0.3, -0.2), c(1.1, 0.7), c(-2.0, 0.5)] {
            let rec = displacement_matrix(z, 31);
            let ex = displacement_expm(z, 30, 60);
            let err = crate::linalg::max_abs(&(rec - ex));
            assert!(err < 1e-12, "z={z} err={err}");
        }
    }

    #[test]
    fn displacement_on_vacuum_gives_coherent_amplitudes() {
        let z = c(0.8, -0.4);
        let d = displacement_matrix(z, 30);
        let mut amp = (-0.5 * z.norm_sqr()).exp();
        let mut zn = c(1.0, 0.0);
        for n in 0..30 {
            if n > 0 {
                amp /= (n as f64).sqrt();
                zn *= z;
            }
            assert!((d[(n, 0)] - zn * amp).norm() < 1e-14);
        }
    }

    #[test]
    fn displacement_shifts_annihilation() {
        let n = 40;
        let z = c(0.7, 0.3);
        let d = displacement_matrix(z, n + 1);
        let a = annihilation(n);
        let lhs = d.adjoint() * &a * &d;
        let rhs = &a + CMatrix::identity(n + 1, n + 1) * z;
        for i in 0..=(n - 20) {
            for j in 0..=(n - 20) {
                assert!((lhs[(i, j)] - rhs[(i, j)]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn displacement_product_rule_on_low_block() {
        let n = 40;
        let (z, w) = (c(0.4, 0.1), c(-0.2, 0.5));
        let dz = displacement_matrix(z, n + 1);
        let dw = displacement_matrix(w, n + 1);
        let dzw = displacement_matrix(z + w, n + 1);
        let phase = ((z * w.conj() - z.conj() * w) * 0.5).exp();
        let lhs = &dz * &dw;
        for i in 0..15 {
            for j in 0..15 {
                assert!((lhs[(i, j)] - dzw[(i, j)] * phase).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn displacement_unitarity_defect_is_small_on_low_block() {
        let d = FockOperator::displacement(c(1.0, 1.0), 40);
        assert!(d.unitarity_defect(10) < 1e-10);
        assert_eq!(d.kind(), OperatorKind::Displacement);
    }

    #[test]
    fn canonical_commutator_below_edge() {
        let n = 12;
        let a = annihilation(n);
        let comm = commutator(&a, &creation(n));
        for i in 0..n {
            for j in 0..n {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((comm[(i, j)] - c(e, 0.0)).norm() < 1e-13);
            }
        }
        assert!((comm[(n, n)] - c(-(n as f64), 0.0)).norm() < 1e-12);
    }

    #[test]
    fn density_matrix_validation() {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 0)] = c(0.5, 0.0);
        m[(1, 1)] = c(0.5, 0.0);
        let rho = DensityMatrix::new(m.clone()).unwrap();
        assert_eq!(rho.cutoff(), 1);
        assert_eq!(rho.trace_deficit(), 0.0);
        m[(1, 1)] = c(-0.1, 0.0);
        assert!(matches!(DensityMatrix::new(m.clone()), Err(Error::InvalidState(_))));
        m[(1, 1)] = c(0.7, 0.0);
        assert!(matches!(DensityMatrix::new(m), Err(Error::InvalidState(_))));
    }
}
