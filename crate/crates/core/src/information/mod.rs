//! Entropy, the heat semigroup, and Fisher-type quantities.

mod fisher;

pub use fisher::{
    fisher, inner_product, linear_inner, pi_superop, score, FisherValue, InnerProductSpec, MatrixFunction,
    ScoreOperator, LEAK_BOUND,
};
pub(crate) use fisher::linear_inner_matrix;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::classical::ClassicalRV;
use crate::convolution::qcconv;
use crate::fockspace::{DensityMatrix, SpectralDecomposition, EIGEN_FLOOR};
use crate::quadrature::QuadratureConfig;
use crate::{CMatrix, Error, Result, C64};

/// Largest cutoff accepted by the superoperator exponential.
pub const MAX_EXPM_CUTOFF: usize = 40;

/// `S(ρ) = −Σ λ ln λ` over eigenvalues above the floor, in nats.
pub fn entropy(rho: &DensityMatrix) -> Result<f64> {
    Ok(entropy_of_spectrum(&rho.spectral()?))
}

pub fn entropy_of_spectrum(sp: &SpectralDecomposition) -> f64 {
    let s: f64 = sp.eigenvalues.iter().filter(|&&x| x > EIGEN_FLOOR).map(|&x| -x * x.ln()).sum();
    s.max(0.0)
}

/// `L(ρ) = [a†, [a, ρ]]`, entrywise:
/// `L_{mn} = (m+n+1)ρ_{mn} − √(mn) ρ_{m−1,n−1} − √((m+1)(n+1)) ρ_{m+1,n+1}`.
///
/// The result is only meaningful when `ρ` has no weight on the top two
/// photon numbers; otherwise `SupportTooHigh`.
pub fn lindbladian(rho: &DensityMatrix) -> Result<CMatrix> {
    let n = rho.cutoff();
    let weight = rho.weight_above(n.saturating_sub(1));
    if weight > 1e-10 {
        return Err(Error::SupportTooHigh { weight });
    }
    Ok(lindbladian_operator(rho.matrix()))
}

/// The entrywise formula applied to any square matrix, no support check.
pub fn lindbladian_operator(r: &CMatrix) -> CMatrix {
    let d = r.nrows();
    CMatrix::from_fn(d, d, |m, n| {
        let mut v = r[(m, n)] * (m + n + 1) as f64;
        if m > 0 && n > 0 {
            v -= r[(m - 1, n - 1)] * ((m * n) as f64).sqrt();
        }
        if m + 1 < d && n + 1 < d {
            v -= r[(m + 1, n + 1)] * (((m + 1) * (n + 1)) as f64).sqrt();
        }
        v
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeatMethod {
    /// `e^{−tL}` through the exact block structure of `L`.
    SuperoperatorExpm,
    /// `ρ ⋆_t Z` with `Z` the `h = 1` Gaussian, by Gauss–Hermite quadrature.
    GaussHermite,
}

/// `Φ_t(ρ) = e^{−tL}(ρ)`.
pub fn heat_semigroup(rho: &DensityMatrix, t: f64, method: HeatMethod, cfg: &QuadratureConfig) -> Result<DensityMatrix> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("t = {t} must be finite and ≥ 0")));
    }
    if t == 0.0 {
        return Ok(rho.clone());
    }
    match method {
        HeatMethod::SuperoperatorExpm => {
            if rho.cutoff() > MAX_EXPM_CUTOFF {
                return Err(Error::ExpmDimensionLimit { cutoff: rho.cutoff(), max: MAX_EXPM_CUTOFF });
            }
            Ok(DensityMatrix::from_hermitian(heat_expm_operator(rho.matrix(), t)))
        }
        HeatMethod::GaussHermite => qcconv(rho, &ClassicalRV::standard_gaussian(), t, cfg),
    }
}

/// `e^{−tL}` applied to a matrix.
///
/// `L` maps the `k`-th diagonal `{ρ_{m,m+k}}` to itself through the real
/// symmetric tridiagonal matrix with diagonal `2m+k+1` and off-diagonal
/// `−√((m+1)(m+k+1))`. Each diagonal is exponentiated on a padded range of
/// `m` (so the flow of weight towards higher photon numbers is not
/// reflected at the cutoff) and read back on the original range.
pub fn heat_expm_operator(r: &CMatrix, t: f64) -> CMatrix {
    heat_expm_padded(r, t, r.nrows())
}

/// As [`heat_expm_operator`], but returns the evolved matrix on `out_dim`
/// levels (`out_dim ≥ r.nrows()`), keeping weight that flows above the
/// input cutoff.
pub fn heat_expm_padded(r: &CMatrix, t: f64, out_dim: usize) -> CMatrix {
    let d = r.nrows();
    let out_dim = out_dim.max(d);
    let padded = out_dim + (out_dim - 1).max(20);
    let mut out = CMatrix::zeros(out_dim, out_dim);
    for k in 0..out_dim {
        let len = padded - k;
        let mut tri = DMatrix::<f64>::zeros(len, len);
        for m in 0..len {
            tri[(m, m)] = (2 * m + k + 1) as f64;
            if m + 1 < len {
                let off = -(((m + 1) * (m + k + 1)) as f64).sqrt();
                tri[(m, m + 1)] = off;
                tri[(m + 1, m)] = off;
            }
        }
        let eig = SymmetricEigen::new(tri);
        let v = &eig.eigenvectors;
        let decay = eig.eigenvalues.map(|l| (-t * l).exp());
        let keep = out_dim - k;
        // Inputs exist for m < d − k only.
        let inputs = d.saturating_sub(k);
        if inputs == 0 {
            continue;
        }
        let prop = v.rows(0, keep) * DMatrix::from_diagonal(&decay) * v.rows(0, inputs).transpose();
        for upper in [true, false] {
            if !upper && k == 0 {
                continue;
            }
            for m in 0..keep {
                let mut acc = C64::new(0.0, 0.0);
                for q in 0..inputs {
                    let x = if upper { r[(q, q + k)] } else { r[(q + k, q)] };
                    acc += x * prop[(m, q)];
                }
                if upper {
                    out[(m, m + k)] = acc;
                } else {
                    out[(m + k, m)] = acc;
                }
            }
        }
    }
    out
}

/// Result of a de Bruijn identity check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeBruijnCheck {
    /// Richardson-extrapolated `d/dt S(Φ_t ρ)` at `t = 0`.
    pub derivative: f64,
    pub fisher: f64,
    /// `|derivative − fisher| / fisher`.
    pub relative_residual: f64,
}

/// Extra photon levels carried by the heat flow inside [`debruijn_check`].
const DEBRUIJN_PAD: usize = 20;

/// Compare the one-sided entropy derivative along the heat flow with the
/// KMB Fisher information.
///
/// With `D(h) = (S(Φ_h ρ) − S(ρ))/h`, the derivative at `t = 0` is the
/// Richardson extrapolation `(8D(h/4) − 6D(h/2) + D(h))/3`, which cancels the
/// `h` and `h²` terms. The flow runs on a space padded by a few levels so
/// that weight moving above the cutoff still counts.
pub fn debruijn_check(rho: &DensityMatrix, step: f64) -> Result<DeBruijnCheck> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidParameter(format!("step {step} must be positive")));
    }
    let info = fisher(rho, &InnerProductSpec::Kmb)?;
    if info.divergent {
        return Err(Error::SupportDeficient { leak: info.leakage });
    }
    let out_dim = rho.dim() + DEBRUIJN_PAD;
    let s0 = entropy(rho)?;
    let quotient = |h: f64| -> Result<f64> {
        let evolved = DensityMatrix::from_hermitian(heat_expm_padded(rho.matrix(), h, out_dim));
        Ok((entropy(&evolved)? - s0) / h)
    };
    let (d1, d2, d4) = (quotient(step)?, quotient(step / 2.0)?, quotient(step / 4.0)?);
    let derivative = (8.0 * d4 - 6.0 * d2 + d1) / 3.0;
    let relative_residual = (derivative - info.value).abs() / info.value.abs().max(f64::MIN_POSITIVE);
    Ok(DeBruijnCheck { derivative, fisher: info.value, relative_residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::{make_state, StateFamily};
    use crate::linalg::{max_abs, trace, trace_distance};

    fn thermal(nbar: f64, n: usize) -> DensityMatrix {
        make_state(&StateFamily::Thermal { nbar }, n).unwrap()
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy(&make_state(&StateFamily::Vacuum, 10).unwrap()).unwrap(), 0.0);
        let s = entropy(&thermal(1.0, 60)).unwrap();
        assert!((s - 2.0 * 2f64.ln()).abs() < 1e-8);
        let mut m = CMatrix::zeros(3, 3);
        m[(0, 0)] = C64::new(0.7, 0.0);
        m[(1, 1)] = C64::new(0.3, 0.0);
        let h = -(0.3f64 * 0.3f64.ln() + 0.7 * 0.7f64.ln());
        assert!((entropy(&DensityMatrix::new(m).unwrap()).unwrap() - h).abs() < 1e-15);
    }

    #[test]
    fn lindbladian_of_vacuum() {
        let v = make_state(&StateFamily::Vacuum, 4).unwrap();
        let l = lindbladian(&v).unwrap();
        // [a†,[a,|0⟩⟨0|]] built from explicit products.
        let a = crate::fockspace::annihilation(4);
        let p = v.matrix();
        let inner = &a * p - p * &a;
        let want = a.adjoint() * &inner - &inner * a.adjoint();
        assert!(max_abs(&(&l - &want)) < 1e-15);
        assert_eq!(l[(0, 0)], C64::new(1.0, 0.0));
        assert_eq!(l[(1, 1)], C64::new(-1.0, 0.0));
        assert!(trace(&l).norm() < 1e-15);
    }

    #[test]
    fn lindbladian_rejects_edge_support() {
        for n in [4, 5] {
            let f = make_state(&StateFamily::Fock { n }, 5).unwrap();
            assert!(matches!(lindbladian(&f), Err(Error::SupportTooHigh { .. })));
        }
        let f = make_state(&StateFamily::Fock { n: 3 }, 5).unwrap();
        let l = lindbladian(&f).unwrap();
        assert_eq!(l[(4, 4)], C64::new(-4.0, 0.0));
        assert_eq!(l[(3, 3)], C64::new(7.0, 0.0));
        assert_eq!(l[(2, 2)], C64::new(-3.0, 0.0));
    }

    #[test]
    fn heat_flow_of_vacuum_and_thermal() {
        let cfg = QuadratureConfig::default();
        let v = make_state(&StateFamily::Vacuum, 40).unwrap();
        let out = heat_semigroup(&v, 0.3, HeatMethod::SuperoperatorExpm, &cfg).unwrap();
        assert!(trace_distance(out.matrix(), thermal(0.3, 40).matrix()) < 1e-12);
        let th = thermal(0.5, 40);
        let out = heat_semigroup(&th, 0.2, HeatMethod::SuperoperatorExpm, &cfg).unwrap();
        assert!(trace_distance(out.matrix(), thermal(0.7, 40).matrix()) < 1e-9);
        assert_eq!(heat_semigroup(&th, 0.0, HeatMethod::GaussHermite, &cfg).unwrap(), th);
    }

    #[test]
    fn expm_dimension_limit() {
        let v = make_state(&StateFamily::Vacuum, 41).unwrap();
        let r = heat_semigroup(&v, 0.1, HeatMethod::SuperoperatorExpm, &QuadratureConfig::default());
        assert!(matches!(r, Err(Error::ExpmDimensionLimit { .. })));
    }
}
