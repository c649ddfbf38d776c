use nalgebra::{DVector, SymmetricEigen};

use super::{DensityMatrix, EIGEN_FLOOR};
use crate::linalg::{frobenius, hermitize};
use crate::{CMatrix, Error, Result};

/// Eigen-decomposition of a Hermitian matrix with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: DVector<f64>,
    /// Columns are the eigenvectors, in the order of `eigenvalues`.
    pub eigenvectors: CMatrix,
    /// `eigenvalues[i] > floor`.
    pub support_mask: Vec<bool>,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `U f(Λ) U†`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        self.apply_where(f, |_| true)
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.apply(|x| x)
    }

    /// `U† A U`.
    pub fn to_eigenbasis(&self, a: &CMatrix) -> CMatrix {
        self.eigenvectors.adjoint() * a * &self.eigenvectors
    }

    /// `U A U†`.
    pub fn from_eigenbasis(&self, a: &CMatrix) -> CMatrix {
        &self.eigenvectors * a * self.eigenvectors.adjoint()
    }

    pub fn support_projector(&self) -> CMatrix {
        self.apply_on_support(|_| 1.0)
    }

    /// `Σ_{λ > floor} f(λ) |u⟩⟨u|`.
    pub fn apply_on_support(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        self.apply_where(f, |j| self.support_mask[j])
    }

    fn apply_where(&self, f: impl Fn(f64) -> f64, keep: impl Fn(usize) -> bool) -> CMatrix {
        let mut scaled = self.eigenvectors.clone();
        for j in 0..self.dim() {
            let fj = if keep(j) { f(self.eigenvalues[j]) } else { 0.0 };
            scaled.column_mut(j).scale_mut(fj);
        }
        hermitize(&(scaled * self.eigenvectors.adjoint()))
    }
}

/// Hermitian eigen-decomposition, eigenvalues sorted ascending.
pub fn spectral(a: &CMatrix) -> Result<SpectralDecomposition> {
    spectral_with_floor(a, EIGEN_FLOOR)
}

pub(crate) fn spectral_with_floor(a: &CMatrix, floor: f64) -> Result<SpectralDecomposition> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!("{}x{} is not square", a.nrows(), a.ncols())));
    }
    let h = hermitize(a);
    let eig = SymmetricEigen::try_new(h, f64::EPSILON, 0).ok_or(Error::ConvergenceFailure)?;
    let d = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let eigenvalues = DVector::from_iterator(d, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut eigenvectors = CMatrix::zeros(d, d);
    for (k, &i) in order.iter().enumerate() {
        eigenvectors.set_column(k, &eig.eigenvectors.column(i));
    }
    let support_mask = eigenvalues.iter().map(|&x| x > floor).collect();
    Ok(SpectralDecomposition { eigenvalues, eigenvectors, support_mask })
}

/// `log ρ` restricted to the eigenvectors with eigenvalue above the floor.
#[derive(Debug, Clone)]
pub struct LogOnSupport {
    pub log: CMatrix,
    pub support_projector: CMatrix,
    pub rank: usize,
    /// Some eigenvalue is at or below the floor.
    pub support_deficient: bool,
}

pub fn matrix_log_on_support(rho: &DensityMatrix, floor: f64) -> Result<LogOnSupport> {
    let sp = spectral_with_floor(rho.matrix(), floor)?;
    let rank = sp.support_mask.iter().filter(|&&b| b).count();
    if rank == 0 {
        return Err(Error::ZeroState);
    }
    let log = sp.apply_on_support(f64::ln);
    let support_projector = sp.support_projector();
    Ok(LogOnSupport { log, support_projector, rank, support_deficient: rank < sp.dim() })
}

/// Relative reconstruction error `‖UΛU† − A‖_F / ‖A‖_F`.
pub fn reconstruction_error(a: &CMatrix, sp: &SpectralDecomposition) -> f64 {
    let n = frobenius(a);
    let e = frobenius(&(sp.reconstruct() - a));
    if n == 0.0 {
        e
    } else {
        e / n
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C64;
    use rand::{Rng, SeedableRng};

    #[test]
    fn diagonal_input_sorted() {
        let a = CMatrix::from_diagonal(&DVector::from_vec(vec![C64::new(0.7, 0.0), C64::new(0.3, 0.0)]));
        let sp = spectral(&a).unwrap();
        assert!((sp.eigenvalues[0] - 0.3).abs() < 1e-15);
        assert!((sp.eigenvalues[1] - 0.7).abs() < 1e-15);
        assert!((sp.eigenvectors[(1, 0)].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn random_hermitian_reconstructs() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let g = CMatrix::from_fn(9, 9, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let h = hermitize(&g);
        let sp = spectral(&h).unwrap();
        assert!(reconstruction_error(&h, &sp) < 1e-12);
        let u = &sp.eigenvectors;
        assert!(frobenius(&(u.adjoint() * u - CMatrix::identity(9, 9))) < 1e-12);
        assert!(sp.eigenvalues.as_slice().windows(2).all(|w| w[0] <= w[1]));
    }
}
