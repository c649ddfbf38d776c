//! Quantum, quantum-classical and symmetric convolutions.
//!
//! The beam splitter `U_η = exp(θ(a₁†a₂ − a₂†a₁))`, `cos θ = √η`, conserves
//! total photon number, so it is applied sector by sector on the graded
//! two-mode basis and is exactly unitary there. It maps
//! `U a₁ U† = √η a₁ − √(1−η) a₂`, which gives
//! `χ_{ρ ⊞_η σ}(z) = χ_ρ(√η z) χ_σ(√(1−η) z)`.

mod charfn;

pub use charfn::{char_function, char_value, fock_char, standard_grid, thermal_char, CharGrid};

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::classical::{cconv, ClassicalRV};
use crate::fockspace::{displacement_matrix, DensityMatrix, GradedBasis, GradedTwoModeState, Subsystem};
use crate::linalg::{to_complex, trace_distance};
use crate::quadrature::{complex_gaussian_nodes, QuadratureConfig};
use crate::{CMatrix, Error, Result, C64};

/// Displacement terms summed per parallel task in `qcconv`.
const QC_CHUNK: usize = 16;

/// Parameters of the three convolutions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvolutionParams {
    eta: f64,
    t: f64,
    lambda: f64,
}

impl ConvolutionParams {
    pub fn new(eta: f64, t: f64, lambda: f64) -> Result<Self> {
        check_unit("eta", eta)?;
        check_unit("lambda", lambda)?;
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::InvalidParameter(format!("t = {t} must be finite and ≥ 0")));
        }
        Ok(Self { eta, t, lambda })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

fn check_unit(name: &str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} = {x} outside [0, 1]")))
    }
}

/// Beam splitter as one real orthogonal block per total photon number.
#[derive(Debug, Clone)]
pub struct GradedUnitary {
    cutoff: usize,
    blocks: Vec<DMatrix<f64>>,
}

impl GradedUnitary {
    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Block acting on sector `s`, basis `|k, s−k⟩` for `k = 0..=s`.
    pub fn block(&self, s: usize) -> &DMatrix<f64> {
        &self.blocks[s]
    }

    /// Largest `‖U_s U_sᵀ − I‖_max` over the sectors.
    pub fn unitarity_defect(&self) -> f64 {
        self.blocks.iter().map(orthogonality_defect).fold(0.0, f64::max)
    }

    /// The full matrix over the graded basis.
    pub fn dense(&self) -> CMatrix {
        let basis = GradedBasis::new(self.cutoff);
        let mut u = CMatrix::zeros(basis.dim(), basis.dim());
        for (s, b) in self.blocks.iter().enumerate() {
            let o = GradedBasis::sector_start(s);
            u.view_mut((o, o), (s + 1, s + 1)).copy_from(&to_complex(b));
        }
        u
    }

    /// `U X U†`.
    pub fn conjugate(&self, x: &GradedTwoModeState) -> GradedTwoModeState {
        let mut out = x.clone();
        let blocks: Vec<CMatrix> = self.blocks.iter().map(to_complex).collect();
        for s in 0..=self.cutoff {
            for sp in 0..=self.cutoff {
                let (o, op) = (GradedBasis::sector_start(s), GradedBasis::sector_start(sp));
                let blk = x.matrix().view((o, op), (s + 1, sp + 1));
                let y = &blocks[s] * blk * blocks[sp].transpose();
                out.matrix_mut().view_mut((o, op), (s + 1, sp + 1)).copy_from(&y);
            }
        }
        out
    }
}

fn orthogonality_defect(b: &DMatrix<f64>) -> f64 {
    let n = b.nrows();
    (b * b.transpose() - DMatrix::<f64>::identity(n, n)).amax()
}

/// Real antisymmetric generator of sector `s` with angle `θ`.
fn sector_generator(s: usize, theta: f64) -> DMatrix<f64> {
    let mut g = DMatrix::<f64>::zeros(s + 1, s + 1);
    for k in 0..s {
        let v = theta * (((k + 1) * (s - k)) as f64).sqrt();
        g[(k + 1, k)] = v;
        g[(k, k + 1)] = -v;
    }
    g
}

/// Orthogonal `exp(G)` for antisymmetric `G`. The Padé exponential is used
/// when it stays orthogonal to 1e-12; otherwise the result comes from the
/// Hermitian eigen-decomposition of `iG`.
fn antisymmetric_exp(g: &DMatrix<f64>) -> DMatrix<f64> {
    let e = g.clone().exp();
    if orthogonality_defect(&e) <= 1e-12 {
        return e;
    }
    let h = to_complex(g) * C64::new(0.0, 1.0);
    let eig = h.symmetric_eigen();
    let n = g.nrows();
    let mut v = eig.eigenvectors.clone();
    for j in 0..n {
        let phase = C64::new(0.0, -eig.eigenvalues[j]).exp();
        let col = v.column(j) * phase;
        v.set_column(j, &col);
    }
    let u = v * eig.eigenvectors.adjoint();
    u.map(|x| x.re)
}

pub fn beam_splitter_unitary(eta: f64, cutoff: usize) -> Result<GradedUnitary> {
    check_unit("eta", eta)?;
    let theta = eta.sqrt().clamp(0.0, 1.0).acos();
    let blocks = (0..=cutoff).map(|s| antisymmetric_exp(&sector_generator(s, theta))).collect();
    Ok(GradedUnitary { cutoff, blocks })
}

/// `tr₂(U_η (A ⊗ B) U_η†)` for arbitrary operators of equal size.
///
/// The product is never stored: each sector pair `(s, s')` is rotated and
/// immediately folded into the partial trace.
pub fn qconv_operator(a: &CMatrix, b: &CMatrix, eta: f64) -> Result<CMatrix> {
    if a.nrows() != b.nrows() || !a.is_square() || !b.is_square() {
        return Err(Error::DimensionMismatch(format!("convolution of {}x{} and {}x{}", a.nrows(), a.ncols(), b.nrows(), b.ncols())));
    }
    check_unit("eta", eta)?;
    let n = a.nrows() - 1;
    let u = beam_splitter_unitary(eta, n)?;
    let blocks: Vec<CMatrix> = u.blocks.iter().map(to_complex).collect();
    let partials: Vec<CMatrix> = (0..=n)
        .into_par_iter()
        .map(|s| {
            let mut out = CMatrix::zeros(n + 1, n + 1);
            for sp in 0..=n {
                // (A ⊗ B) restricted to sectors s × s'.
                let x = CMatrix::from_fn(s + 1, sp + 1, |k, kp| a[(k, kp)] * b[(s - k, sp - kp)]);
                let y = &blocks[s] * x * blocks[sp].transpose();
                // Keep entries with equal second-mode photon number.
                for k in 0..=s {
                    let n2 = s - k;
                    if n2 > sp {
                        continue;
                    }
                    let kp = sp - n2;
                    out[(k, kp)] += y[(k, kp)];
                }
            }
            out
        })
        .collect();
    let mut out = CMatrix::zeros(n + 1, n + 1);
    for p in partials {
        out += p;
    }
    Ok(out)
}

/// `ρ ⊞_η σ`.
pub fn qconv(rho: &DensityMatrix, sigma: &DensityMatrix, eta: f64) -> Result<DensityMatrix> {
    Ok(DensityMatrix::from_hermitian(qconv_operator(rho.matrix(), sigma.matrix(), eta)?))
}

/// Same as [`qconv`] but through the explicit graded state, tensor product
/// and partial trace. Slower; kept as an independent path for tests.
pub fn qconv_graded(rho: &DensityMatrix, sigma: &DensityMatrix, eta: f64) -> Result<DensityMatrix> {
    let x = GradedTwoModeState::tensor(rho, sigma)?;
    let u = beam_splitter_unitary(eta, rho.cutoff())?;
    Ok(u.conjugate(&x).partial_trace(Subsystem::Second))
}

/// `ρ^{⊞v}`, folded left to right with `η = 1 − 1/k` at step `k`.
pub fn symmetric_qconv(states: &[DensityMatrix]) -> Result<DensityMatrix> {
    let (first, rest) = states.split_first().ok_or(Error::EmptySubset)?;
    let mut acc = first.clone();
    for (i, s) in rest.iter().enumerate() {
        let k = (i + 2) as f64;
        acc = qconv(&acc, s, 1.0 - 1.0 / k)?;
    }
    Ok(acc)
}

/// Weighted displacements `(y, w)` with `A ⋆_t X ≈ Σ w D_y A D_y†`, plus a
/// final displacement applied to the whole sum.
///
/// Finite laws are exact. For a Gaussian with scale `h`, the integrand
/// `D_{√tξ} A D_{√tξ}†` is `e^{−t|ξ|²}` times a polynomial in `ξ` when `A`
/// has bounded photon support, so the envelope is folded into the weight:
/// `E_ξ[F(ξ)] = (1+ht)⁻¹ E_q[e^{t|ξ|²} F(ξ)]` where `q` is the centered
/// Gaussian with density `∝ e^{−(1/h + t)|ξ|²}`, and `q` is discretized by
/// tensor Gauss–Hermite. The mean is handled by one exact displacement.
fn displacement_nodes(x: &ClassicalRV, t: f64, cfg: &QuadratureConfig) -> Result<(Vec<(C64, f64)>, C64)> {
    let st = t.sqrt();
    match x {
        ClassicalRV::Gaussian { mean, h } if *h == 0.0 => Ok((vec![(C64::new(0.0, 0.0), 1.0)], mean * st)),
        ClassicalRV::Gaussian { mean, h } => {
            let requested = cfg.gh_nodes * cfg.gh_nodes;
            if requested > cfg.max_terms {
                return Err(Error::QuadratureBudgetExceeded { requested, budget: cfg.max_terms });
            }
            let c = 1.0 / h + t;
            // q has per-coordinate variance 1/(2c), i.e. scale h_q = 1/c.
            let nodes = complex_gaussian_nodes(C64::new(0.0, 0.0), 1.0 / c, cfg.gh_nodes)?;
            let norm = 1.0 / (1.0 + h * t);
            let nodes = nodes.into_iter().map(|(xi, w)| (xi * st, w * (t * xi.norm_sqr()).exp() * norm)).collect();
            Ok((nodes, mean * st))
        }
        ClassicalRV::Finite { points, probs } => {
            if points.len() > cfg.max_terms {
                return Err(Error::QuadratureBudgetExceeded { requested: points.len(), budget: cfg.max_terms });
            }
            let nodes = points.iter().zip(probs).filter(|(_, p)| **p > 0.0).map(|(x, p)| (x * st, *p)).collect();
            Ok((nodes, C64::new(0.0, 0.0)))
        }
    }
}

/// `A ⋆_t X = E[D_{√t x} A D_{√t x}†]` for any operator `A`.
pub fn qcconv_operator(a: &CMatrix, x: &ClassicalRV, t: f64, cfg: &QuadratureConfig) -> Result<CMatrix> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("t = {t} must be finite and ≥ 0")));
    }
    if t == 0.0 {
        return Ok(a.clone());
    }
    let (nodes, shift) = displacement_nodes(x, t, cfg)?;
    let dim = a.nrows();
    let partials: Vec<CMatrix> = nodes
        .par_chunks(QC_CHUNK)
        .map(|chunk| {
            let mut acc = CMatrix::zeros(dim, dim);
            for (y, w) in chunk {
                let d = displacement_matrix(*y, dim);
                acc += (&d * a * d.adjoint()) * C64::new(*w, 0.0);
            }
            acc
        })
        .collect();
    let mut out = CMatrix::zeros(dim, dim);
    for p in partials {
        out += p;
    }
    if shift != C64::new(0.0, 0.0) {
        let d = displacement_matrix(shift, dim);
        out = &d * out * d.adjoint();
    }
    Ok(out)
}

/// Largest deviation of `χ_{A ⋆_t X}(z)` from `χ_A(z) χ_X(√t z)` on the
/// standard grid: the combined quadrature and truncation error of an
/// evaluated quantum-classical convolution.
pub fn qcconv_char_residual(a: &CMatrix, x: &ClassicalRV, t: f64, out: &CMatrix) -> f64 {
    let st = t.sqrt();
    standard_grid()
        .into_iter()
        .map(|z| (char_value(out, z) - char_value(a, z) * x.char(z * st)).norm())
        .fold(0.0, f64::max)
}

/// `ρ ⋆_t X`.
pub fn qcconv(rho: &DensityMatrix, x: &ClassicalRV, t: f64, cfg: &QuadratureConfig) -> Result<DensityMatrix> {
    Ok(DensityMatrix::from_hermitian(qcconv_operator(rho.matrix(), x, t, cfg)?))
}

/// Trace distance between `(ρ ⋆_{t₁} X) ⊞_η (σ ⋆_{t₂} Y)` and
/// `(ρ ⊞_η σ) ⋆_s (X ⊞_λ Y)` with `s = t₁η + t₂(1−η)`, `λ = t₁η/s`.
/// When `s = 0` both sides reduce to `ρ ⊞_η σ` and the left side is
/// compared with it directly.
#[allow(clippy::too_many_arguments)]
pub fn mixed_conv_identity_check(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    x: &ClassicalRV,
    y: &ClassicalRV,
    eta: f64,
    t1: f64,
    t2: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let lhs = qconv(&qcconv(rho, x, t1, cfg)?, &qcconv(sigma, y, t2, cfg)?, eta)?;
    let s = t1 * eta + t2 * (1.0 - eta);
    let rhs = if s == 0.0 {
        qconv(rho, sigma, eta)?
    } else {
        let lambda = (t1 * eta / s).clamp(0.0, 1.0);
        qcconv(&qconv(rho, sigma, eta)?, &cconv(x, y, lambda)?, s, cfg)?
    };
    Ok(trace_distance(lhs.matrix(), rhs.matrix()))
}
