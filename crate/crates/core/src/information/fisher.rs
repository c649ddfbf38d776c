use std::fmt;

use serde::{Deserialize, Serialize};

use crate::fockspace::{annihilation, matrix_log_on_support, DensityMatrix, SpectralDecomposition, EIGEN_FLOOR};
use crate::linalg::commutator;
use crate::{CMatrix, Error, Result, C64};

/// Off-support weight above which a Fisher information is reported as
/// divergent.
pub const LEAK_BOUND: f64 = 1e-9;

/// Relative size below which an entry of `A` on a singular pair of
/// eigenvalues is treated as zero by `pi_superop`.
const SINGULAR_ENTRY_TOLERANCE: f64 = 1e-9;

/// Inner product used for scores and Fisher information.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InnerProductSpec {
    /// Kubo–Mori–Bogoliubov.
    Kmb,
    /// `ψ_{1,t}(x,y) = (x + t y)/(1+t)` or `ψ_{2,t}(x,y) = (t x + y)/(1+t)`.
    Linear { k: u8, t: f64 },
}

impl InnerProductSpec {
    pub fn linear(k: u8, t: f64) -> Result<Self> {
        let s = InnerProductSpec::Linear { k, t };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            InnerProductSpec::Kmb => Ok(()),
            InnerProductSpec::Linear { k, t } => {
                if !(k == 1 || k == 2) {
                    return Err(Error::InvalidParameter(format!("linear inner product index k = {k} not in {{1, 2}}")));
                }
                if !(0.0..=1.0).contains(&t) {
                    return Err(Error::InvalidParameter(format!("linear inner product t = {t} outside [0, 1]")));
                }
                Ok(())
            }
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, InnerProductSpec::Linear { .. })
    }

    pub fn psi(&self) -> MatrixFunction {
        match *self {
            InnerProductSpec::Kmb => MatrixFunction::PsiKmb,
            InnerProductSpec::Linear { k, t } => MatrixFunction::Psi { k, t },
        }
    }

    pub fn phi(&self) -> MatrixFunction {
        match *self {
            InnerProductSpec::Kmb => MatrixFunction::PhiKmb,
            InnerProductSpec::Linear { k, t } => MatrixFunction::Phi { k, t },
        }
    }
}

impl fmt::Display for InnerProductSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InnerProductSpec::Kmb => write!(f, "kmb"),
            InnerProductSpec::Linear { k, t } => write!(f, "linear(k={k},t={t})"),
        }
    }
}

/// Two-variable functions `f(x, y)` defining `π_ρ^f`; `x` multiplies from
/// the left and `y` from the right.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MatrixFunction {
    /// Logarithmic mean `(x − y)/(ln x − ln y)`.
    PsiKmb,
    PhiKmb,
    Psi { k: u8, t: f64 },
    Phi { k: u8, t: f64 },
}

fn log_mean(x: f64, y: f64) -> f64 {
    if x <= 0.0 || y <= 0.0 {
        return 0.0;
    }
    if x == y {
        return x;
    }
    let r = (y - x) / x;
    if r.abs() < 1e-4 {
        // ln(1+r) = r − r²/2 + r³/3 − …, so (x−y)/ln(x/y) = x(1 + r/2 − r²/12 + r³/24).
        x * (1.0 + r / 2.0 - r * r / 12.0 + r * r * r / 24.0)
    } else {
        (x - y) / (x.ln() - y.ln())
    }
}

fn linear_mean(k: u8, t: f64, x: f64, y: f64) -> f64 {
    if k == 1 {
        (x + t * y) / (1.0 + t)
    } else {
        (t * x + y) / (1.0 + t)
    }
}

impl MatrixFunction {
    /// The mean `ψ` underlying this function.
    fn mean(&self, x: f64, y: f64) -> f64 {
        match *self {
            MatrixFunction::PsiKmb | MatrixFunction::PhiKmb => log_mean(x, y),
            MatrixFunction::Psi { k, t } | MatrixFunction::Phi { k, t } => linear_mean(k, t, x, y),
        }
    }

    fn is_reciprocal(&self) -> bool {
        matches!(self, MatrixFunction::PhiKmb | MatrixFunction::Phi { .. })
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let m = self.mean(x, y);
        if self.is_reciprocal() {
            1.0 / m
        } else {
            m
        }
    }
}

/// Eigenvalues clamped: anything at or below the floor counts as zero.
fn clamped(sp: &SpectralDecomposition) -> Vec<f64> {
    sp.eigenvalues.iter().map(|&x| if x > EIGEN_FLOOR { x } else { 0.0 }).collect()
}

/// `π_ρ^f(A)`: in the eigenbasis of `ρ`, `(π A)_{ij} = f(λ_i, λ_j) A_{ij}`.
///
/// For the reciprocal functions, pairs where the mean vanishes (an
/// eigenvalue below the floor) are singular. Entries of `A` there must be
/// negligible and are dropped; otherwise `SupportDeficient`.
pub fn pi_superop(sp: &SpectralDecomposition, f: MatrixFunction, a: &CMatrix) -> Result<CMatrix> {
    let lam = clamped(sp);
    let mut ap = sp.to_eigenbasis(a);
    let scale = ap.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let d = lam.len();
    for i in 0..d {
        for j in 0..d {
            let mean = f.mean(lam[i], lam[j]);
            if f.is_reciprocal() && mean <= 0.0 {
                let leak = ap[(i, j)].norm();
                if leak > SINGULAR_ENTRY_TOLERANCE * scale {
                    return Err(Error::SupportDeficient { leak });
                }
                ap[(i, j)] = C64::new(0.0, 0.0);
            } else {
                ap[(i, j)] *= if f.is_reciprocal() { 1.0 / mean } else { mean };
            }
        }
    }
    Ok(sp.from_eigenbasis(&ap))
}

/// `⟨A, B⟩_{ρ,spec} = tr(π_ρ^ψ(A)† B)`, evaluated in the eigenbasis.
pub fn inner_product(sp: &SpectralDecomposition, spec: &InnerProductSpec, a: &CMatrix, b: &CMatrix) -> C64 {
    let lam = clamped(sp);
    let ap = sp.to_eigenbasis(a);
    let bp = sp.to_eigenbasis(b);
    let psi = spec.psi();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..lam.len() {
        for j in 0..lam.len() {
            acc += ap[(i, j)].conj() * bp[(i, j)] * psi.eval(lam[i], lam[j]);
        }
    }
    acc
}

/// The linear inner products written with traces in the number basis:
/// `k = 1`: `(tr(A†ρB) + t tr(ρA†B))/(1+t)`, `k = 2`: the weights swapped.
pub fn linear_inner(rho: &DensityMatrix, spec: &InnerProductSpec, a: &CMatrix, b: &CMatrix) -> Result<C64> {
    let InnerProductSpec::Linear { k, t } = *spec else {
        return Err(Error::InvalidParameter("linear_inner needs a linear inner product".into()));
    };
    spec.validate()?;
    Ok(linear_inner_matrix(rho.matrix(), k, t, a, b))
}

/// Same as [`linear_inner`] for a state given as a bare matrix (for example a
/// product state on several registers). `spec` must be linear.
pub(crate) fn linear_inner_matrix(r: &CMatrix, k: u8, t: f64, a: &CMatrix, b: &CMatrix) -> C64 {
    let ad = a.adjoint();
    let left = (&ad * r * b).trace();
    let right = (r * &ad * b).trace();
    if k == 1 {
        (left + right * t) / (1.0 + t)
    } else {
        (left * t + right) / (1.0 + t)
    }
}

/// Score operator of one mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreOperator {
    pub mode: usize,
    pub spec: InnerProductSpec,
    pub matrix: CMatrix,
}

/// `S_ρ = π_ρ^φ([a, ρ])`. For KMB this equals `[a, log ρ]` on the support.
pub fn score(rho: &DensityMatrix, spec: &InnerProductSpec) -> Result<ScoreOperator> {
    spec.validate()?;
    let sp = rho.spectral()?;
    score_with_spectrum(rho, &sp, spec)
}

pub(crate) fn score_with_spectrum(
    rho: &DensityMatrix,
    sp: &SpectralDecomposition,
    spec: &InnerProductSpec,
) -> Result<ScoreOperator> {
    let a = annihilation(rho.cutoff());
    let c = commutator(&a, rho.matrix());
    let matrix = pi_superop(sp, spec.phi(), &c)?;
    Ok(ScoreOperator { mode: 0, spec: *spec, matrix })
}

/// A Fisher information with its diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FisherValue {
    pub spec: InnerProductSpec,
    /// `‖S‖²_{ρ,spec}` from the eigenbasis double sum; `+∞` when divergent.
    pub value: f64,
    /// Independent evaluation: `tr([a,ρ]†[a, log ρ])` in the number basis
    /// for KMB, `⟨S, S⟩` through the trace formula for linear specs.
    pub direct: f64,
    /// `Σ |a_ij|² max(λ_i, λ_j)` over singular eigenvalue pairs.
    pub leakage: f64,
    pub divergent: bool,
    /// Some eigenvalue of `ρ` is at or below the floor.
    pub support_deficient: bool,
}

impl FisherValue {
    /// `|value − direct| / |value|`.
    pub fn two_path_residual(&self) -> f64 {
        (self.value - self.direct).abs() / self.value.abs().max(f64::MIN_POSITIVE)
    }
}

pub fn fisher(rho: &DensityMatrix, spec: &InnerProductSpec) -> Result<FisherValue> {
    spec.validate()?;
    let sp = rho.spectral()?;
    let lam = clamped(&sp);
    let a = annihilation(rho.cutoff());
    let ap = sp.to_eigenbasis(&a);
    let phi = spec.phi();
    let d = lam.len();
    let mut value = 0.0;
    let mut leakage = 0.0;
    for i in 0..d {
        for j in 0..d {
            let w = ap[(i, j)].norm_sqr();
            if w == 0.0 {
                continue;
            }
            let mean = phi.mean(lam[i], lam[j]);
            if mean <= 0.0 || lam[i] == 0.0 || lam[j] == 0.0 {
                leakage += w * lam[i].max(lam[j]);
                if mean <= 0.0 {
                    continue;
                }
            }
            let diff = lam[j] - lam[i];
            value += w * diff * diff / mean;
        }
    }
    let support_deficient = lam.contains(&0.0);
    let divergent = leakage > LEAK_BOUND;
    let direct = match spec {
        InnerProductSpec::Kmb => {
            let log = matrix_log_on_support(rho, EIGEN_FLOOR)?;
            let c = commutator(&a, rho.matrix());
            let x = commutator(&a, &log.log);
            (c.adjoint() * x).trace().re
        }
        InnerProductSpec::Linear { .. } => {
            if divergent {
                f64::INFINITY
            } else {
                let s = score_with_spectrum(rho, &sp, spec)?;
                linear_inner(rho, spec, &s.matrix, &s.matrix)?.re
            }
        }
    };
    Ok(FisherValue {
        spec: *spec,
        value: if divergent { f64::INFINITY } else { value },
        direct,
        leakage,
        divergent,
        support_deficient,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::{make_state, StateFamily};
    use crate::linalg::max_abs;

    fn thermal(nbar: f64, n: usize) -> DensityMatrix {
        make_state(&StateFamily::Thermal { nbar }, n).unwrap()
    }

    #[test]
    fn thermal_kmb_fisher() {
        for (nbar, want) in [(1.0, 2f64.ln()), (2.0, 1.5f64.ln())] {
            let f = fisher(&thermal(nbar, 60), &InnerProductSpec::Kmb).unwrap();
            assert!(!f.divergent);
            assert!((f.value - want).abs() < 1e-9, "{} vs {want}", f.value);
            assert!(f.two_path_residual() < 1e-8);
        }
    }

    #[test]
    fn thermal_kmb_score_is_scaled_annihilation() {
        let rho = thermal(1.0, 60);
        let s = score(&rho, &InnerProductSpec::Kmb).unwrap();
        let beta = 2f64.ln();
        let a = annihilation(60);
        for i in 0..30 {
            for j in 0..30 {
                assert!((s.matrix[(i, j)] + a[(i, j)] * beta).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn pure_state_fisher_diverges() {
        let f = fisher(&make_state(&StateFamily::Fock { n: 1 }, 8).unwrap(), &InnerProductSpec::Kmb).unwrap();
        assert!(f.divergent);
        assert!(f.support_deficient);
        assert!(f.value.is_infinite());
        let s = score(&make_state(&StateFamily::Fock { n: 1 }, 8).unwrap(), &InnerProductSpec::Kmb);
        assert!(matches!(s, Err(Error::SupportDeficient { .. })));
    }

    #[test]
    fn psi_phi_compose_to_identity() {
        let rho = make_state(&StateFamily::RandomFullSupport { seed: 9 }, 20).unwrap();
        let sp = rho.spectral().unwrap();
        let a = annihilation(20);
        let c = commutator(&a, rho.matrix());
        let s = pi_superop(&sp, MatrixFunction::PhiKmb, &c).unwrap();
        let back = pi_superop(&sp, MatrixFunction::PsiKmb, &s).unwrap();
        assert!(max_abs(&(back - &c)) < 1e-12);
    }

    #[test]
    fn psi_one_zero_is_left_multiplication() {
        let rho = make_state(&StateFamily::RandomFullSupport { seed: 2 }, 20).unwrap();
        let sp = rho.spectral().unwrap();
        let a = annihilation(20);
        let out = pi_superop(&sp, MatrixFunction::Psi { k: 1, t: 0.0 }, &a).unwrap();
        assert!(max_abs(&(out - rho.matrix() * &a)) < 1e-13);
    }

    #[test]
    fn phi_kmb_on_flat_spectrum() {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 0)] = C64::new(0.5, 0.0);
        m[(1, 1)] = C64::new(0.5, 0.0);
        let sp = DensityMatrix::new(m).unwrap().spectral().unwrap();
        let ones = CMatrix::from_element(2, 2, C64::new(1.0, 0.0));
        let out = pi_superop(&sp, MatrixFunction::PhiKmb, &ones).unwrap();
        assert!(max_abs(&(out - ones * C64::new(2.0, 0.0))) < 1e-12);
    }

    #[test]
    fn linear_inner_matches_eigenbasis_form() {
        let rho = make_state(&StateFamily::RandomFullSupport { seed: 5 }, 20).unwrap();
        let sp = rho.spectral().unwrap();
        let a = annihilation(20);
        let b = a.adjoint() * &a + &a;
        for (k, t) in [(1, 0.0), (1, 0.4), (2, 0.7), (2, 1.0)] {
            let spec = InnerProductSpec::linear(k, t).unwrap();
            let x = linear_inner(&rho, &spec, &a, &b).unwrap();
            let y = inner_product(&sp, &spec, &a, &b);
            assert!((x - y).norm() < 1e-10);
        }
        let one = CMatrix::identity(21, 21);
        let spec = InnerProductSpec::linear(1, 0.0).unwrap();
        assert!((linear_inner(&rho, &spec, &one, &one).unwrap() - C64::new(rho.trace(), 0.0)).norm() < 1e-14);
        assert!(InnerProductSpec::linear(3, 0.5).is_err());
        assert!(InnerProductSpec::linear(1, 1.5).is_err());
    }

    #[test]
    fn linear_score_solves_defining_equation() {
        let rho = thermal(1.0, 40);
        let spec = InnerProductSpec::linear(1, 0.0).unwrap();
        let s = score(&rho, &spec).unwrap();
        let a = annihilation(40);
        let c = commutator(&a, rho.matrix());
        let lhs = rho.matrix() * &s.matrix;
        assert!(max_abs(&(lhs - c)) < 1e-9);
        let f = fisher(&rho, &spec).unwrap();
        assert!(f.two_path_residual() < 1e-8);
    }
}
