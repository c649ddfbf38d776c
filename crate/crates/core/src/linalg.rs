//! Small dense helpers shared by every module.

use nalgebra::DMatrix;

use crate::{CMatrix, C64};

pub fn dagger(a: &CMatrix) -> CMatrix {
    a.adjoint()
}

/// `(A + A†)/2`.
pub fn hermitize(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()).scale(0.5)
}

pub fn trace(a: &CMatrix) -> C64 {
    a.diagonal().iter().sum()
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn frobenius(a: &CMatrix) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// Largest entrywise deviation from Hermiticity.
pub fn hermiticity_defect(a: &CMatrix) -> f64 {
    max_abs(&(a - a.adjoint()))
}

/// Schatten-1 norm. Hermitian inputs go through the eigenvalues, everything
/// else through the singular values.
pub fn trace_norm(a: &CMatrix) -> f64 {
    if hermiticity_defect(a) <= 1e-14 * (1.0 + max_abs(a)) {
        let h = hermitize(a);
        h.symmetric_eigenvalues().iter().map(|x| x.abs()).sum()
    } else {
        a.clone().singular_values().iter().sum()
    }
}

/// `½‖A − B‖₁`.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    0.5 * trace_norm(&(a - b))
}

/// Kronecker product with `a` on the first (slow) index.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn to_complex(a: &DMatrix<f64>) -> CMatrix {
    a.map(|x| C64::new(x, 0.0))
}

/// Embed `a` into the top-left corner of a `dim × dim` zero matrix.
pub fn embed(a: &CMatrix, dim: usize) -> CMatrix {
    let mut out = CMatrix::zeros(dim, dim);
    let r = a.nrows().min(dim);
    let c = a.ncols().min(dim);
    out.view_mut((0, 0), (r, c)).copy_from(&a.view((0, 0), (r, c)));
    out
}

/// Top-left `dim × dim` block.
pub fn truncate(a: &CMatrix, dim: usize) -> CMatrix {
    a.view((0, 0), (dim, dim)).into_owned()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_norm_of_hermitian_and_general() {
        let h = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            C64::new(0.5, 0.0),
            C64::new(-0.25, 0.0),
        ]));
        assert!((trace_norm(&h) - 0.75).abs() < 1e-15);
        let mut n = CMatrix::zeros(2, 2);
        n[(0, 1)] = C64::new(2.0, 0.0);
        assert!((trace_norm(&n) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn kron_places_first_factor_on_slow_index() {
        let mut a = CMatrix::zeros(2, 2);
        a[(0, 1)] = C64::new(1.0, 0.0);
        let b = identity(3);
        let k = kron(&a, &b);
        assert_eq!(k[(0, 3)], C64::new(1.0, 0.0));
        assert_eq!(k[(2, 5)], C64::new(1.0, 0.0));
        assert_eq!(k[(3, 0)], C64::new(0.0, 0.0));
    }
}
