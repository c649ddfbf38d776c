//! Symmetric lifting of single-mode operators to `n` quantum registers and
//! numerical checks of the identities built on it.
//!
//! Register operators are dense matrices on the Kronecker product of `n`
//! truncated modes (each `0..=N`), register 1 most significant, so the
//! index of `|n1, n2⟩` is `n1·(N+1) + n2`.
//!
//! The lift of `T` onto `v ⊆ [n]` is
//! `(1/π) ∫ χ_T(z) W_v(−z) d²z` where `W_v(z)` applies `D_{z/√|v|}` to every
//! register of `v`. It is evaluated with a tensor Gauss–Legendre rule on
//! `[−R, R]²`, `R` being the smallest radius past which `|χ_T|` stays below
//! [`DECAY_THRESHOLD`].

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::convolution::{char_value, qconv_operator, symmetric_qconv};
use crate::fockspace::{annihilation, displacement_matrix, DensityMatrix};
use crate::information::{inner_product, linear_inner_matrix, pi_superop, score, InnerProductSpec};
use crate::linalg::{commutator, identity, kron, max_abs};
use crate::quadrature::{gauss_legendre, QuadratureConfig};
use crate::subset::Subset;
use crate::{CMatrix, Error, Result, C64};

/// `|χ_T|` below this counts as decayed when choosing the radius.
pub const DECAY_THRESHOLD: f64 = 1e-12;

/// `|χ_T|` above this at the largest admissible radius is `SlowDecay`.
pub const SLOW_DECAY_LIMIT: f64 = 1e-6;

const RING_PHASES: usize = 24;
const RADIUS_STEP: f64 = 0.5;

/// A lifted operator with the data of its quadrature.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedOperator {
    pub registers: usize,
    pub subset: Subset,
    pub cutoff: usize,
    pub matrix: CMatrix,
    pub radius: f64,
    pub nodes_per_axis: usize,
    /// Largest entry error of the single-mode inversion formula on the same
    /// rule, or the boundary value of `|χ_T|` if that is larger.
    pub quadrature_error: f64,
}

/// `Π_{ℓ∈w} exp(u x̄_ℓ − ū x_ℓ)` with `u = z/√|w|`: the classical-register
/// weight of the lifting integrand. Empty `w` gives 1.
pub fn classical_weight(z: C64, xs: &[C64], w: Subset) -> C64 {
    if w.is_empty() {
        return C64::new(1.0, 0.0);
    }
    let u = z / (w.len() as f64).sqrt();
    w.iter().map(|l| (u * xs[l - 1].conj() - u.conj() * xs[l - 1]).exp()).product()
}

/// Smallest radius (on a grid of step 0.5) beyond which the sampled
/// `|χ_T|` stays below [`DECAY_THRESHOLD`], and the value there.
pub fn decay_radius(t: &CMatrix, max_radius: f64) -> Result<(f64, f64)> {
    let steps = (max_radius / RADIUS_STEP).floor() as usize;
    if steps == 0 {
        return Err(Error::InvalidParameter(format!("lifting radius {max_radius} too small")));
    }
    let ring = |r: f64| {
        (0..RING_PHASES)
            .map(|k| char_value(t, C64::from_polar(r, 2.0 * PI * k as f64 / RING_PHASES as f64)).norm())
            .fold(0.0, f64::max)
    };
    let values: Vec<f64> = (1..=steps).map(|i| ring(i as f64 * RADIUS_STEP)).collect();
    let last = values[steps - 1];
    if last > SLOW_DECAY_LIMIT {
        return Err(Error::SlowDecay { radius: steps as f64 * RADIUS_STEP, value: last });
    }
    let mut i = steps;
    while i > 1 && values[i - 2] < DECAY_THRESHOLD {
        i -= 1;
    }
    Ok((i as f64 * RADIUS_STEP, values[i - 1]))
}

/// Zero every row and column above `max_photon`.
pub fn low_support(t: &CMatrix, max_photon: usize) -> CMatrix {
    CMatrix::from_fn(t.nrows(), t.ncols(), |i, j| if i <= max_photon && j <= max_photon { t[(i, j)] } else { C64::new(0.0, 0.0) })
}

fn kron_all(factors: &[CMatrix]) -> CMatrix {
    let mut acc = factors[0].clone();
    for f in &factors[1..] {
        acc = kron(&acc, f);
    }
    acc
}

/// Tensor Gauss–Legendre evaluation of the single-mode inversion integral
/// and of the lift.
fn lift_sum(t: &CMatrix, registers: usize, v: Subset, radius: f64, nodes: usize) -> Result<(CMatrix, CMatrix)> {
    let dim = t.nrows();
    let rule = gauss_legendre(nodes)?;
    let x: Vec<f64> = rule.nodes.iter().map(|g| g * radius).collect();
    let w: Vec<f64> = rule.weights.iter().map(|g| g * radius).collect();
    let scale = 1.0 / (v.len() as f64).sqrt();

    // Per row of nodes: (single-mode inversion sum, lifted sum when |v| > 1).
    let rows: Vec<(CMatrix, Option<CMatrix>)> = (0..nodes)
        .into_par_iter()
        .map(|i| {
            let mut inv = CMatrix::zeros(dim, dim);
            let mut multi = (v.len() > 1).then(|| CMatrix::zeros(dim.pow(registers as u32), dim.pow(registers as u32)));
            for j in 0..nodes {
                let z = C64::new(x[i], x[j]);
                let c = char_value(t, z) * (w[i] * w[j] / PI);
                inv += displacement_matrix(-z, dim) * c;
                if let Some(m) = multi.as_mut() {
                    let d = displacement_matrix(-z * scale, dim);
                    let factors: Vec<CMatrix> =
                        (1..=registers).map(|k| if v.contains(k) { d.clone() } else { identity(dim) }).collect();
                    *m += kron_all(&factors) * c;
                }
            }
            (inv, multi)
        })
        .collect();

    let mut inv = CMatrix::zeros(dim, dim);
    let mut multi: Option<CMatrix> = None;
    for (a, b) in rows {
        inv += a;
        if let Some(b) = b {
            match multi.as_mut() {
                Some(m) => *m += b,
                None => multi = Some(b),
            }
        }
    }
    let matrix = match multi {
        Some(m) => m,
        None => {
            let factors: Vec<CMatrix> =
                (1..=registers).map(|k| if v.contains(k) { inv.clone() } else { identity(dim) }).collect();
            kron_all(&factors)
        }
    };
    Ok((inv, matrix))
}

/// Lift `t` onto the registers `v` of an `registers`-fold product.
///
/// Entries on the Kronecker block are exact up to quadrature for any `t` on
/// the single-mode block whose characteristic function has decayed within
/// `cfg.lift_max_radius`; nothing is gained by cutting `t` down first.
pub fn lift(t: &CMatrix, registers: usize, v: Subset, cfg: &QuadratureConfig) -> Result<LiftedOperator> {
    if !t.is_square() || t.nrows() < 2 {
        return Err(Error::DimensionMismatch(format!("cannot lift a {}x{} matrix", t.nrows(), t.ncols())));
    }
    if registers == 0 || v.is_empty() {
        return Err(Error::EmptySubset);
    }
    if v.max_index() > registers {
        return Err(Error::InvalidParameter(format!("subset {v} is not inside [{registers}]")));
    }
    let nodes = cfg.lift_nodes;
    if nodes * nodes > cfg.max_terms {
        return Err(Error::QuadratureBudgetExceeded { requested: nodes * nodes, budget: cfg.max_terms });
    }
    let (radius, boundary) = decay_radius(t, cfg.lift_max_radius)?;

    let dim = t.nrows();
    let (inv, matrix) = lift_sum(t, registers, v, radius, nodes)?;
    let mut quadrature_error = max_abs(&(&inv - t)).max(boundary);
    if v.len() > 1 {
        // The inversion residual does not see the scaled displacements.
        // The gap to a rule with 10% fewer nodes bounds the coarser rule's
        // error, so this overestimates.
        let coarse = nodes - nodes / 10;
        let (_, rough) = lift_sum(t, registers, v, radius, coarse)?;
        quadrature_error = quadrature_error.max(max_abs(&(rough - &matrix)));
    }
    Ok(LiftedOperator { registers, subset: v, cutoff: dim - 1, matrix, radius, nodes_per_axis: nodes, quadrature_error })
}

/// Two sides of a lifted-inner-product identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityCheck {
    pub lhs: C64,
    pub rhs: C64,
    /// `|lhs − rhs| / max(|lhs|, |rhs|)`.
    pub residual: f64,
    pub quadrature_error: f64,
}

impl IdentityCheck {
    fn new(lhs: C64, rhs: C64, quadrature_error: f64) -> Self {
        let scale = lhs.norm().max(rhs.norm()).max(f64::MIN_POSITIVE);
        Self { lhs, rhs, residual: (lhs - rhs).norm() / scale, quadrature_error }
    }
}

fn linear_parts(spec: &InnerProductSpec) -> Result<(u8, f64)> {
    spec.validate()?;
    match *spec {
        InnerProductSpec::Linear { k, t } => Ok((k, t)),
        InnerProductSpec::Kmb => Err(Error::InvalidParameter("lifting identities need a linear inner product".into())),
    }
}

fn two_registers(rho1: &DensityMatrix, rho2: &DensityMatrix, v: Subset) -> Result<()> {
    if rho1.dim() != rho2.dim() {
        return Err(Error::DimensionMismatch(format!("registers of dimension {} and {}", rho1.dim(), rho2.dim())));
    }
    if v.is_empty() {
        return Err(Error::EmptySubset);
    }
    if !v.is_subset_of(Subset::full(2)) {
        return Err(Error::InvalidParameter(format!("subset {v} is not inside [2]")));
    }
    Ok(())
}

/// `ρ^{⊞v}` for `v ⊆ [2]`.
fn conv_of(v: Subset, states: &[&DensityMatrix]) -> Result<DensityMatrix> {
    let parts: Vec<DensityMatrix> = v.iter().map(|k| states[k - 1].clone()).collect();
    symmetric_qconv(&parts)
}

/// `⟨T̃_v, R̃_{[2]}⟩_{ρ₁⊗ρ₂}` against
/// `tr((π^ψ_{ρ^{⊞v}}(T)† ⊞_{|v|/2} ρ^{⊞v^c}) R)`, the right side computed
/// with single-mode operations only.
pub fn prop1_check(
    t: &CMatrix,
    r: &CMatrix,
    rho1: &DensityMatrix,
    rho2: &DensityMatrix,
    v: Subset,
    spec: &InnerProductSpec,
    cfg: &QuadratureConfig,
) -> Result<IdentityCheck> {
    let (k, tt) = linear_parts(spec)?;
    two_registers(rho1, rho2, v)?;
    let lt = lift(t, 2, v, cfg)?;
    let lr = lift(r, 2, Subset::full(2), cfg)?;
    let product = kron(rho1.matrix(), rho2.matrix());
    let lhs = linear_inner_matrix(&product, k, tt, &lt.matrix, &lr.matrix);

    let states = [rho1, rho2];
    let rv = conv_of(v, &states)?;
    let x = pi_superop(&rv.spectral()?, spec.psi(), t)?.adjoint();
    let vc = v.complement(2);
    let y = if vc.is_empty() {
        x
    } else {
        qconv_operator(&x, conv_of(vc, &states)?.matrix(), v.len() as f64 / 2.0)?
    };
    let rhs = (y * r).trace();
    Ok(IdentityCheck::new(lhs, rhs, lt.quadrature_error.max(lr.quadrature_error)))
}

/// `⟨S̃_{ρ^{⊞v}}, R̃_{[2]}⟩_{ρ₁⊗ρ₂}` against `√(|v|/2) ⟨S_{ρ^{⊞[2]}}, R⟩`.
pub fn lemma2_check(
    rho1: &DensityMatrix,
    rho2: &DensityMatrix,
    r: &CMatrix,
    v: Subset,
    spec: &InnerProductSpec,
    cfg: &QuadratureConfig,
) -> Result<IdentityCheck> {
    let (k, tt) = linear_parts(spec)?;
    two_registers(rho1, rho2, v)?;
    let states = [rho1, rho2];
    let rv = conv_of(v, &states)?;
    let s = score(&rv, spec)?.matrix;
    let ls = lift(&s, 2, v, cfg)?;
    let lr = lift(r, 2, Subset::full(2), cfg)?;
    let product = kron(rho1.matrix(), rho2.matrix());
    let lhs = linear_inner_matrix(&product, k, tt, &ls.matrix, &lr.matrix);

    let full = conv_of(Subset::full(2), &states)?;
    let s_full = score(&full, spec)?.matrix;
    let rhs = inner_product(&full.spectral()?, spec, &s_full, r) * (v.len() as f64 / 2.0).sqrt();
    Ok(IdentityCheck::new(lhs, rhs, ls.quadrature_error.max(lr.quadrature_error)))
}

/// `[a, ρ]` in the number basis, truncated to photon numbers `≤ N/2`: a
/// convenient low-support test operator.
pub fn low_commutator(rho: &DensityMatrix) -> CMatrix {
    let a = annihilation(rho.cutoff());
    low_support(&commutator(&a, rho.matrix()), rho.cutoff() / 2)
}

/// Test operators `(T, R)` for the two-register identities: `T` is the low
/// commutator of `ρ₂` plus the low part of `ρ₁`, `R` the low part of `a`.
pub fn probe_operators(rho1: &DensityMatrix, rho2: &DensityMatrix) -> (CMatrix, CMatrix) {
    let half = rho1.cutoff() / 2;
    let t = low_commutator(rho2) + low_support(rho1.matrix(), half);
    (t, low_support(&annihilation(rho1.cutoff()), half))
}

fn register_dims(states: &[DensityMatrix]) -> Result<(usize, usize)> {
    let first = states.first().ok_or(Error::EmptySubset)?;
    let d = first.dim();
    if states.iter().any(|s| s.dim() != d) {
        return Err(Error::DimensionMismatch("registers must share one cutoff".into()));
    }
    Ok((states.len(), d))
}

/// `𝓔_k A = tr_k(ρ_k A) ⊗ I_k` on the product of `states.len()` registers
/// (`k` is 1-based). `ρ_k` is divided by its trace so that truncation
/// deficits do not spoil idempotence.
pub fn conditional_expectation(a: &CMatrix, states: &[DensityMatrix], k: usize) -> Result<CMatrix> {
    let (n, d) = register_dims(states)?;
    if !(1..=n).contains(&k) {
        return Err(Error::InvalidParameter(format!("register {k} outside [{n}]")));
    }
    let total = d.pow(n as u32);
    if a.nrows() != total || a.ncols() != total {
        return Err(Error::DimensionMismatch(format!("operator is {}x{}, registers need {total}", a.nrows(), a.ncols())));
    }
    let rho = states[k - 1].matrix() / C64::new(states[k - 1].trace(), 0.0);
    // Stride of register k in the flattened index.
    let stride = d.pow((n - k) as u32);
    let digit = |i: usize| (i / stride) % d;
    let mut out = CMatrix::zeros(total, total);
    for i in 0..total {
        let base_i = i - digit(i) * stride;
        for j in 0..total {
            if digit(i) != digit(j) {
                continue;
            }
            let base_j = j - digit(j) * stride;
            let mut acc = C64::new(0.0, 0.0);
            for p in 0..d {
                for q in 0..d {
                    acc += rho[(q, p)] * a[(base_i + p * stride, base_j + q * stride)];
                }
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

/// `P_v = Π_{k∉v} 𝓔_k Π_{k∈v} (𝓘 − 𝓔_k)` for product base states.
#[derive(Debug, Clone)]
pub struct SubsetProjector<'a> {
    pub subset: Subset,
    pub states: &'a [DensityMatrix],
}

impl SubsetProjector<'_> {
    pub fn apply(&self, a: &CMatrix) -> Result<CMatrix> {
        let mut out = a.clone();
        for k in 1..=self.states.len() {
            let e = conditional_expectation(&out, self.states, k)?;
            out = if self.subset.contains(k) { out - e } else { e };
        }
        Ok(out)
    }
}

/// Worst residuals of the orthogonal decomposition over the test operators.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ProjectorReport {
    /// `max |Σ_v P_v A − A| / max |A|`.
    pub identity: f64,
    /// `max |P_v P_{v'} A| / max |A|` over `v ≠ v'`.
    pub orthogonality: f64,
    /// `max |P_v P_v A − P_v A| / max |A|`.
    pub idempotence: f64,
    /// `|⟨P_v A, B⟩ − ⟨A, P_v B⟩| / (‖A‖ ‖B‖)`.
    pub self_adjointness: f64,
    /// `|‖A‖² − Σ_v ‖P_v A‖²| / ‖A‖²`.
    pub pythagoras: f64,
}

impl ProjectorReport {
    pub fn worst(&self) -> f64 {
        [self.identity, self.orthogonality, self.idempotence, self.self_adjointness, self.pythagoras]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

pub fn projector_decomposition_check(
    states: &[DensityMatrix],
    tests: &[CMatrix],
    spec: &InnerProductSpec,
) -> Result<ProjectorReport> {
    let (k, t) = linear_parts(spec)?;
    let (n, _) = register_dims(states)?;
    let product = kron_all(&states.iter().map(|s| s.matrix() / C64::new(s.trace(), 0.0)).collect::<Vec<_>>());
    let inner = |a: &CMatrix, b: &CMatrix| linear_inner_matrix(&product, k, t, a, b);
    let subsets: Vec<Subset> = (0..1u32 << n).map(Subset::from_bits).collect();
    let mut rep = ProjectorReport::default();
    for (idx, a) in tests.iter().enumerate() {
        let scale = max_abs(a).max(f64::MIN_POSITIVE);
        let parts: Vec<CMatrix> = subsets
            .iter()
            .map(|&v| SubsetProjector { subset: v, states }.apply(a))
            .collect::<Result<_>>()?;
        let sum = parts.iter().fold(CMatrix::zeros(a.nrows(), a.ncols()), |acc, p| acc + p);
        rep.identity = rep.identity.max(max_abs(&(sum - a)) / scale);

        let norm2 = inner(a, a).re;
        let pieces: f64 = parts.iter().map(|p| inner(p, p).re).sum();
        rep.pythagoras = rep.pythagoras.max((norm2 - pieces).abs() / norm2.max(f64::MIN_POSITIVE));

        let b = &tests[(idx + 1) % tests.len()];
        let nb = inner(b, b).re.sqrt();
        for (i, &v) in subsets.iter().enumerate() {
            let pv = SubsetProjector { subset: v, states };
            for (j, p) in parts.iter().enumerate() {
                let q = pv.apply(p)?;
                if i == j {
                    rep.idempotence = rep.idempotence.max(max_abs(&(q - &parts[i])) / scale);
                } else {
                    rep.orthogonality = rep.orthogonality.max(max_abs(&q) / scale);
                }
            }
            let lhs = inner(&parts[i], b);
            let rhs = inner(a, &pv.apply(b)?);
            let denom = (norm2.sqrt() * nb).max(f64::MIN_POSITIVE);
            rep.self_adjointness = rep.self_adjointness.max((lhs - rhs).norm() / denom);
        }
    }
    Ok(rep)
}
