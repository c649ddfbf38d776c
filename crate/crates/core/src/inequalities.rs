//! Margin-reporting checks for the entropy power and Fisher–Stam type
//! inequalities.
//!
//! Every check returns an [`InequalityMargin`] with `margin = lhs − rhs`
//! oriented so that a nonnegative margin means the inequality holds. For the
//! Fisher inequalities the weighted sum is therefore the `lhs` and the Fisher
//! information of the full convolution the `rhs`.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::classical::symmetric_cconv;
use crate::convolution::{qcconv, qcconv_char_residual, qconv, symmetric_qconv};
use crate::information::{entropy, fisher, InnerProductSpec};
use crate::quadrature::QuadratureConfig;
use crate::subset::MAX_REGISTERS;
use crate::{ClassicalRV, DensityMatrix, Error, Result, Subset};

pub const DEFAULT_ENTROPY_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_FISHER_TOLERANCE: f64 = 1e-5;

const WEIGHT_TOLERANCE: f64 = 1e-12;

/// Largest auxiliary register count tried by [`auxiliary_gaussians`].
pub const MAX_AUXILIARY: usize = 24;
const AUXILIARY_TRIALS: usize = 200;
const AUXILIARY_RESIDUAL: f64 = 1e-10;
/// Smallest accepted `h_ℓ` (the mean is 1); anything below is numerically zero.
const AUXILIARY_FLOOR: f64 = 1e-8;

/// Numerical health of the states entering a margin.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    /// Largest `1 − tr ρ` over every state used.
    pub trace_deficit: f64,
    /// Largest characteristic-function residual of a quantum-classical
    /// convolution used; zero when none was needed.
    pub quadrature_error: f64,
}

impl Diagnostics {
    fn absorb(&mut self, other: Diagnostics) {
        self.trace_deficit = self.trace_deficit.max(other.trace_deficit);
        self.quadrature_error = self.quadrature_error.max(other.quadrature_error);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityMargin {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub diagnostics: Diagnostics,
}

impl InequalityMargin {
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64, diagnostics: Diagnostics) -> Self {
        let margin = lhs - rhs;
        Self { name: name.into(), lhs, rhs, margin, tolerance, pass: margin >= -tolerance, diagnostics }
    }
}

/// Pairs `(v, w)` with `v ⊆ [n]` nonempty, `w ⊆ [n′]` and `|w|·n = |v|·n′`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetCollection {
    n: usize,
    n_prime: usize,
    elements: Vec<(Subset, Subset)>,
    r: usize,
}

impl SubsetCollection {
    pub fn new(n: usize, n_prime: usize, elements: Vec<(Subset, Subset)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("collection needs n ≥ 1".into()));
        }
        if elements.is_empty() {
            return Err(Error::InvalidParameter("empty collection".into()));
        }
        let mut seen = BTreeSet::new();
        for &(v, w) in &elements {
            if v.is_empty() {
                return Err(Error::EmptySubset);
            }
            if !v.is_subset_of(Subset::full(n)) || !w.is_subset_of(Subset::full(n_prime)) {
                return Err(Error::InvalidParameter(format!("element ({v}, {w}) outside [{n}] x [{n_prime}]")));
            }
            if w.len() * n != v.len() * n_prime {
                return Err(Error::InvalidParameter(format!(
                    "element ({v}, {w}) violates |w|/|v| = {n_prime}/{n}"
                )));
            }
            if !seen.insert((v.bits(), w.bits())) {
                return Err(Error::InvalidParameter(format!("duplicate element ({v}, {w})")));
            }
        }
        let count = |pick: fn(&(Subset, Subset)) -> Subset, i: usize| {
            elements.iter().filter(|e| pick(e).contains(i)).count()
        };
        let r = (1..=n)
            .map(|i| count(|e| e.0, i))
            .chain((1..=n_prime).map(|l| count(|e| e.1, l)))
            .max()
            .unwrap_or(0)
            .max(1);
        Ok(Self { n, n_prime, elements, r })
    }

    /// Quantum-only collection (`n′ = 0`).
    pub fn quantum(n: usize, subsets: Vec<Subset>) -> Result<Self> {
        Self::new(n, 0, subsets.into_iter().map(|v| (v, Subset::EMPTY)).collect())
    }

    pub fn singletons(n: usize) -> Result<Self> {
        Self::quantum(n, (1..=n).map(Subset::singleton).collect::<Result<_>>()?)
    }

    /// All subsets of `[n]` of size `k`.
    pub fn all_of_size(n: usize, k: usize) -> Result<Self> {
        Self::quantum(n, Subset::all_of_size(n, k))
    }

    /// `{[n]}`.
    pub fn full(n: usize) -> Result<Self> {
        Self::quantum(n, vec![Subset::full(n)])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_prime(&self) -> usize {
        self.n_prime
    }

    pub fn elements(&self) -> &[(Subset, Subset)] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Largest number of elements any index of `[n]` or `[n′]` belongs to.
    pub fn r(&self) -> usize {
        self.r
    }
}

/// Probabilities over the elements of a collection.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightDistribution(Vec<f64>);

impl WeightDistribution {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidParameter("empty weight distribution".into()));
        }
        if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::InvalidParameter("weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(Error::InvalidParameter(format!("weights sum to {total}")));
        }
        Ok(Self(weights))
    }

    pub fn uniform(k: usize) -> Result<Self> {
        Self::new(vec![1.0 / k as f64; k])
    }

    /// Normalizes nonnegative scores; the sum must be positive.
    fn proportional(scores: Vec<f64>) -> Result<Self> {
        let total: f64 = scores.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::InvalidParameter(format!("cannot normalize weights with total {total}")));
        }
        Self::new(scores.into_iter().map(|s| s / total).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// How the weights of a Fisher–Stam check are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightChoice {
    Given(WeightDistribution),
    /// `μ_v ∝ |v| / I(v)`, the minimizer of `Σ μ_v² I(v)/|v|` on the simplex.
    Optimal,
}

/// A convolved state together with its diagnostics.
#[derive(Debug, Clone)]
pub struct Convolved {
    pub state: DensityMatrix,
    pub diagnostics: Diagnostics,
}

/// Quantum registers `ρ_1..ρ_n`, classical registers `X_1..X_{n′}`, and the
/// quadrature used for `ρ^{⊞v} ⋆ X^{⊞w}` (always at `t = 1`).
#[derive(Debug, Clone)]
pub struct Ensemble {
    states: Vec<DensityMatrix>,
    classical: Vec<ClassicalRV>,
    quadrature: QuadratureConfig,
}

impl Ensemble {
    pub fn new(states: Vec<DensityMatrix>, classical: Vec<ClassicalRV>, quadrature: QuadratureConfig) -> Result<Self> {
        let first = states.first().ok_or(Error::EmptySubset)?;
        if states.iter().any(|s| s.dim() != first.dim()) {
            return Err(Error::DimensionMismatch("ensemble states must share a cutoff".into()));
        }
        if states.len() > MAX_REGISTERS || classical.len() > MAX_REGISTERS {
            return Err(Error::InvalidParameter(format!("at most {} registers", MAX_REGISTERS)));
        }
        Ok(Self { states, classical, quadrature })
    }

    pub fn quantum(states: Vec<DensityMatrix>) -> Result<Self> {
        Self::new(states, Vec::new(), QuadratureConfig::default())
    }

    pub fn n(&self) -> usize {
        self.states.len()
    }

    pub fn n_prime(&self) -> usize {
        self.classical.len()
    }

    pub fn modes(&self) -> f64 {
        self.states[0].mode_count() as f64
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    /// `ρ^{⊞v} ⋆ X^{⊞w}` at `t = 1`, or `ρ^{⊞v}` when `w` is empty.
    pub fn convolved(&self, v: Subset, w: Subset) -> Result<Convolved> {
        let pick = |s: Subset, n: usize| -> Result<()> {
            if s.is_subset_of(Subset::full(n)) {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("subset {s} outside [{n}]")))
            }
        };
        pick(v, self.n())?;
        pick(w, self.n_prime())?;
        let qs: Vec<DensityMatrix> = v.iter().map(|i| self.states[i - 1].clone()).collect();
        let rho = symmetric_qconv(&qs)?;
        let mut diagnostics = Diagnostics { trace_deficit: rho.trace_deficit(), quadrature_error: 0.0 };
        if w.is_empty() {
            return Ok(Convolved { state: rho, diagnostics });
        }
        let xs: Vec<ClassicalRV> = w.iter().map(|l| self.classical[l - 1].clone()).collect();
        let x = symmetric_cconv(&xs)?;
        let state = qcconv(&rho, &x, 1.0, &self.quadrature)?;
        diagnostics.trace_deficit = diagnostics.trace_deficit.max(state.trace_deficit());
        diagnostics.quadrature_error = qcconv_char_residual(rho.matrix(), &x, 1.0, state.matrix());
        Ok(Convolved { state, diagnostics })
    }

    fn full(&self) -> Result<Convolved> {
        self.convolved(Subset::full(self.n()), Subset::full(self.n_prime()))
    }

    fn check_collection(&self, c: &SubsetCollection) -> Result<()> {
        if c.n() != self.n() || c.n_prime() != self.n_prime() {
            return Err(Error::DimensionMismatch(format!(
                "collection over [{}] x [{}], ensemble has {} quantum and {} classical registers",
                c.n(),
                c.n_prime(),
                self.n(),
                self.n_prime()
            )));
        }
        Ok(())
    }

    /// `S(ρ^{⊞v} ⋆ X^{⊞w})` for every element, with merged diagnostics.
    fn entropies(&self, c: &SubsetCollection) -> Result<(Vec<f64>, Diagnostics)> {
        self.check_collection(c)?;
        let mut diag = Diagnostics::default();
        let mut out = Vec::with_capacity(c.len());
        for &(v, w) in c.elements() {
            let s = self.convolved(v, w)?;
            diag.absorb(s.diagnostics);
            out.push(entropy(&s.state)?);
        }
        Ok((out, diag))
    }

    /// `I_KMB(ρ^{⊞v} ⋆ X^{⊞w})` for every element.
    fn fishers(&self, c: &SubsetCollection) -> Result<(Vec<f64>, Diagnostics)> {
        self.check_collection(c)?;
        let mut diag = Diagnostics::default();
        let mut out = Vec::with_capacity(c.len());
        for &(v, w) in c.elements() {
            let s = self.convolved(v, w)?;
            diag.absorb(s.diagnostics);
            out.push(kmb(&s.state)?);
        }
        Ok((out, diag))
    }
}

fn kmb(rho: &DensityMatrix) -> Result<f64> {
    let f = fisher(rho, &InnerProductSpec::Kmb)?;
    if f.divergent {
        return Err(Error::SupportDeficient { leak: f.leakage });
    }
    Ok(f.value)
}

/// `S(ρ ⊞_η σ) ≥ ηS(ρ) + (1−η)S(σ)` and the exponential form
/// `e^{S(ρ⊞_η σ)/m} ≥ η e^{S(ρ)/m} + (1−η) e^{S(σ)/m}`.
pub fn epi_basic(rho: &DensityMatrix, sigma: &DensityMatrix, eta: f64, tolerance: f64) -> Result<[InequalityMargin; 2]> {
    let out = qconv(rho, sigma, eta)?;
    let m = rho.mode_count() as f64;
    let (s, s1, s2) = (entropy(&out)?, entropy(rho)?, entropy(sigma)?);
    let diag = Diagnostics {
        trace_deficit: out.trace_deficit().max(rho.trace_deficit()).max(sigma.trace_deficit()),
        quadrature_error: 0.0,
    };
    Ok([
        InequalityMargin::new("epi_entropy", s, eta * s1 + (1.0 - eta) * s2, tolerance, diag),
        InequalityMargin::new(
            "epi_exp",
            (s / m).exp(),
            eta * (s1 / m).exp() + (1.0 - eta) * (s2 / m).exp(),
            tolerance,
            diag,
        ),
    ])
}

/// `S(ρ^{⊞(k+1)}) − S(ρ^{⊞k})` for `k = 1..n_max−1`, as margins with
/// `lhs = S(ρ^{⊞(k+1)})` and `rhs = S(ρ^{⊞k})`.
///
/// Fails with `CutoffTooSmall` once a convolution has lost more than
/// `deficit_bound` of its trace to the cutoff.
pub fn guha_monotonicity(rho: &DensityMatrix, n_max: usize, tolerance: f64, deficit_bound: f64) -> Result<Vec<InequalityMargin>> {
    if n_max < 2 {
        return Err(Error::InvalidParameter(format!("n_max = {n_max} must be at least 2")));
    }
    let mut acc = rho.clone();
    let mut prev = entropy(&acc)?;
    let mut out = Vec::with_capacity(n_max - 1);
    for k in 1..n_max {
        acc = qconv(&acc, rho, 1.0 - 1.0 / (k + 1) as f64)?;
        let deficit = acc.trace_deficit();
        if deficit > deficit_bound {
            return Err(Error::CutoffTooSmall { cutoff: rho.cutoff(), tail: deficit, bound: deficit_bound });
        }
        let s = entropy(&acc)?;
        let diag = Diagnostics { trace_deficit: deficit, quadrature_error: 0.0 };
        out.push(InequalityMargin::new(format!("guha_n{}", k + 1), s, prev, tolerance, diag));
        prev = s;
    }
    Ok(out)
}

/// Entropy power form shared by the quantum and quantum-classical versions:
/// `e^{S(full)/m} ≥ (1/(rn)) Σ_v |v| e^{S(v)/m}`.
fn entropy_power_check(name: &str, e: &Ensemble, c: &SubsetCollection, tolerance: f64) -> Result<InequalityMargin> {
    let (s, mut diag) = e.entropies(c)?;
    let full = e.full()?;
    diag.absorb(full.diagnostics);
    let m = e.modes();
    let lhs = (entropy(&full.state)? / m).exp();
    let scale = 1.0 / (c.r() * c.n()) as f64;
    let rhs = scale * c.elements().iter().zip(&s).map(|((v, _), s)| v.len() as f64 * (s / m).exp()).sum::<f64>();
    Ok(InequalityMargin::new(name, lhs, rhs, tolerance, diag))
}

/// Fisher–Stam form: `rn Σ_v μ_v² I(v)/|v| ≥ I(full)`.
fn fisher_stam_check(
    name: &str,
    e: &Ensemble,
    c: &SubsetCollection,
    mu: &WeightChoice,
    tolerance: f64,
) -> Result<InequalityMargin> {
    let (info, mut diag) = e.fishers(c)?;
    let mu = match mu {
        WeightChoice::Given(mu) => {
            if mu.len() != c.len() {
                return Err(Error::DimensionMismatch(format!("{} weights for {} elements", mu.len(), c.len())));
            }
            mu.clone()
        }
        WeightChoice::Optimal => optimal_from(c, &info)?,
    };
    let full = e.full()?;
    diag.absorb(full.diagnostics);
    let rhs = kmb(&full.state)?;
    let rn = (c.r() * c.n()) as f64;
    let lhs = rn
        * c.elements()
            .iter()
            .zip(&info)
            .zip(mu.as_slice())
            .map(|(((v, _), i), m)| m * m * i / v.len() as f64)
            .sum::<f64>();
    Ok(InequalityMargin::new(name, lhs, rhs, tolerance, diag))
}

fn optimal_from(c: &SubsetCollection, info: &[f64]) -> Result<WeightDistribution> {
    // A vanishing Fisher information makes its element free: put all weight
    // on such elements (uniformly), which zeroes the quadratic form.
    if info.iter().any(|i| *i <= 0.0) {
        return WeightDistribution::proportional(info.iter().map(|i| if *i <= 0.0 { 1.0 } else { 0.0 }).collect());
    }
    WeightDistribution::proportional(c.elements().iter().zip(info).map(|((v, _), i)| v.len() as f64 / i).collect())
}

/// Quantum entropy power inequality over a collection with `n′ = 0`.
pub fn theorem1_check(e: &Ensemble, c: &SubsetCollection, tolerance: f64) -> Result<InequalityMargin> {
    if c.n_prime() != 0 {
        return Err(Error::InvalidParameter("quantum entropy power check needs n′ = 0".into()));
    }
    entropy_power_check("theorem1", e, c, tolerance)
}

/// Quantum Fisher–Stam inequality over a collection with `n′ = 0`.
pub fn theorem2_check(e: &Ensemble, c: &SubsetCollection, mu: &WeightChoice, tolerance: f64) -> Result<InequalityMargin> {
    if c.n_prime() != 0 {
        return Err(Error::InvalidParameter("quantum Fisher–Stam check needs n′ = 0".into()));
    }
    fisher_stam_check("theorem2", e, c, mu, tolerance)
}

/// Quantum-classical entropy power inequality.
pub fn theorem3_check(e: &Ensemble, c: &SubsetCollection, tolerance: f64) -> Result<InequalityMargin> {
    entropy_power_check("theorem3", e, c, tolerance)
}

/// Quantum-classical Fisher–Stam inequality.
pub fn theorem4_check(e: &Ensemble, c: &SubsetCollection, mu: &WeightChoice, tolerance: f64) -> Result<InequalityMargin> {
    fisher_stam_check("theorem4", e, c, mu, tolerance)
}

/// The minimizing weights used by `WeightChoice::Optimal`.
pub fn optimal_weights(e: &Ensemble, c: &SubsetCollection) -> Result<WeightDistribution> {
    let (info, _) = e.fishers(c)?;
    optimal_from(c, &info)
}

/// `S(full) ≥ Σ μ_v S(v) + m Σ μ_v ln(|v|/(r μ_v n))`, for weights with
/// `r μ_v ≤ 1`. Terms with `μ_v = 0` contribute nothing.
pub fn entropy_sum_form_check(
    e: &Ensemble,
    c: &SubsetCollection,
    mu: &WeightDistribution,
    tolerance: f64,
) -> Result<InequalityMargin> {
    if mu.len() != c.len() {
        return Err(Error::DimensionMismatch(format!("{} weights for {} elements", mu.len(), c.len())));
    }
    let r = c.r() as f64;
    if let Some(w) = mu.as_slice().iter().find(|w| r * **w > 1.0 + WEIGHT_TOLERANCE) {
        return Err(Error::InvalidParameter(format!("weight {w} exceeds 1/r = {}", 1.0 / r)));
    }
    let (s, mut diag) = e.entropies(c)?;
    let full = e.full()?;
    diag.absorb(full.diagnostics);
    let m = e.modes();
    let n = c.n() as f64;
    let rhs: f64 = c
        .elements()
        .iter()
        .zip(&s)
        .zip(mu.as_slice())
        .filter(|(_, w)| **w > 0.0)
        .map(|(((v, _), s), w)| w * s + m * w * (v.len() as f64 / (r * w * n)).ln())
        .sum();
    Ok(InequalityMargin::new("entropy_sum_form", entropy(&full.state)?, rhs, tolerance, diag))
}

/// `γ_v ∝ |v| e^{S(v)/m}`.
pub fn gamma_distribution(e: &Ensemble, c: &SubsetCollection) -> Result<WeightDistribution> {
    let (s, _) = e.entropies(c)?;
    let m = e.modes();
    WeightDistribution::proportional(c.elements().iter().zip(&s).map(|((v, _), s)| v.len() as f64 * (s / m).exp()).collect())
}

/// Auxiliary Gaussian registers `Z_1..Z_{n″}` with scales `h_ℓ`, and subsets
/// `w_v ⊆ [n″]` with `|w_v|/n″ = |v|/n`, no index in more than `r` of them,
/// and `Σ_{ℓ∈w_v} h_ℓ / Σ_ℓ h_ℓ = r μ_v`. Normalized so `Σ h_ℓ = n″`.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxiliaryGaussians {
    pub n_aux: usize,
    pub subsets: Vec<Subset>,
    pub h: Vec<f64>,
}

/// Search for auxiliary Gaussians for a quantum collection and weights with
/// `r μ_v ≤ 1`.
///
/// For each admissible `n″ ≤ 24` the subsets are first taken as unions of
/// equal blocks (block `i` standing for quantum index `i`), then drawn at
/// random under the multiplicity cap; `h` is the minimum-norm solution of
/// the linear constraints and is accepted when it solves them and is
/// strictly positive. Weights on the boundary `r μ_v = 1` generally admit no
/// positive solution.
pub fn auxiliary_gaussians(c: &SubsetCollection, mu: &WeightDistribution, seed: u64) -> Result<AuxiliaryGaussians> {
    if c.n_prime() != 0 {
        return Err(Error::InvalidParameter("auxiliary construction needs a quantum collection".into()));
    }
    if mu.len() != c.len() {
        return Err(Error::DimensionMismatch(format!("{} weights for {} elements", mu.len(), c.len())));
    }
    let r = c.r();
    if mu.as_slice().iter().any(|w| r as f64 * w > 1.0 + WEIGHT_TOLERANCE) {
        return Err(Error::InvalidParameter(format!("some weight exceeds 1/r = {}", 1.0 / r as f64)));
    }
    let n = c.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for n_aux in (n..=MAX_AUXILIARY).filter(|k| k % n == 0) {
        let block = n_aux / n;
        let blocks: Vec<Subset> = c
            .elements()
            .iter()
            .map(|(v, _)| {
                let idx: Vec<usize> = v.iter().flat_map(|i| (i - 1) * block + 1..=i * block).collect::<Vec<_>>();
                Subset::of(&idx)
            })
            .collect::<Result<_>>()?;
        if let Some(h) = solve_scales(&blocks, mu, r, n_aux) {
            return Ok(AuxiliaryGaussians { n_aux, subsets: blocks, h });
        }
        for _ in 0..AUXILIARY_TRIALS {
            let Some(subsets) = random_assignment(c, n_aux, r, &mut rng) else { continue };
            if let Some(h) = solve_scales(&subsets, mu, r, n_aux) {
                return Ok(AuxiliaryGaussians { n_aux, subsets, h });
            }
        }
    }
    Err(Error::BudgetExceeded(format!("no positive auxiliary scales with n″ ≤ {MAX_AUXILIARY}")))
}

fn random_assignment(c: &SubsetCollection, n_aux: usize, r: usize, rng: &mut ChaCha8Rng) -> Option<Vec<Subset>> {
    let mut used = vec![0usize; n_aux];
    let mut out = Vec::with_capacity(c.len());
    for (v, _) in c.elements() {
        let size = v.len() * n_aux / c.n();
        let mut free: Vec<usize> = (0..n_aux).filter(|&l| used[l] < r).collect();
        if free.len() < size {
            return None;
        }
        free.shuffle(rng);
        let pick = &free[..size];
        for &l in pick {
            used[l] += 1;
        }
        let idx: Vec<usize> = pick.iter().map(|l| l + 1).collect();
        out.push(Subset::of(&idx).ok()?);
    }
    Some(out)
}

fn solve_scales(subsets: &[Subset], mu: &WeightDistribution, r: usize, n_aux: usize) -> Option<Vec<f64>> {
    let rows = subsets.len() + 1;
    let a = DMatrix::from_fn(rows, n_aux, |i, l| {
        if i == subsets.len() || subsets[i].contains(l + 1) {
            1.0
        } else {
            0.0
        }
    });
    let total = n_aux as f64;
    let b = DVector::from_fn(rows, |i, _| if i == subsets.len() { total } else { r as f64 * mu.as_slice()[i] * total });
    let h = a.clone().svd(true, true).solve(&b, 1e-12).ok()?;
    let residual = (&a * &h - &b).amax();
    (residual < AUXILIARY_RESIDUAL * total && h.iter().all(|x| *x > AUXILIARY_FLOOR)).then(|| h.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::{make_state, StateFamily};
    use crate::C64;

    fn g(nbar: f64) -> f64 {
        (nbar + 1.0) * (nbar + 1.0).ln() - nbar * nbar.ln()
    }

    fn thermal(nbar: f64, cutoff: usize) -> DensityMatrix {
        make_state(&StateFamily::Thermal { nbar }, cutoff).unwrap()
    }

    fn fock1(cutoff: usize) -> DensityMatrix {
        make_state(&StateFamily::Fock { n: 1 }, cutoff).unwrap()
    }

    #[test]
    fn collection_validation() {
        let c = SubsetCollection::all_of_size(3, 2).unwrap();
        assert_eq!((c.len(), c.r()), (3, 2));
        assert_eq!(SubsetCollection::singletons(4).unwrap().r(), 1);
        let s = |x: &[usize]| Subset::of(x).unwrap();
        assert!(SubsetCollection::new(2, 2, vec![(s(&[1]), s(&[1])), (s(&[2]), s(&[2]))]).is_ok());
        // Ratio |w|/|v| must be n′/n.
        assert!(SubsetCollection::new(2, 2, vec![(s(&[1]), Subset::EMPTY)]).is_err());
        assert!(SubsetCollection::new(2, 0, vec![(Subset::EMPTY, Subset::EMPTY)]).is_err());
        assert!(SubsetCollection::quantum(2, vec![s(&[3])]).is_err());
        assert!(SubsetCollection::quantum(2, vec![s(&[1]), s(&[1])]).is_err());
        assert!(WeightDistribution::new(vec![0.5, 0.6]).is_err());
    }

    #[test]
    fn epi_basic_examples() {
        let t = thermal(1.0, 40);
        for m in epi_basic(&t, &t, 0.5, 1e-8).unwrap() {
            assert!(m.margin.abs() < 1e-8, "{m:?}");
        }
        let f = fock1(20);
        let [lin, exp] = epi_basic(&f, &f, 0.5, 1e-8).unwrap();
        assert!(lin.margin > 0.0);
        assert!((exp.margin - (lin.lhs.exp() - 1.0)).abs() < 1e-12);
        for m in epi_basic(&fock1(40), &t, 1.0, 1e-8).unwrap() {
            assert!(m.margin.abs() < 1e-10, "{m:?}");
        }
    }

    #[test]
    fn guha_on_thermal_and_fock() {
        for m in guha_monotonicity(&thermal(1.0, 40), 4, 1e-6, 1e-8).unwrap() {
            assert!(m.margin.abs() < 1e-8, "{m:?}");
        }
        let f = guha_monotonicity(&fock1(20), 2, 1e-6, 1e-8).unwrap();
        assert_eq!(f[0].rhs, 0.0);
        assert!(f[0].margin > 0.1);
    }

    #[test]
    fn theorem1_equality_cases() {
        let e = Ensemble::quantum(vec![thermal(1.0, 40); 2]).unwrap();
        let m = theorem1_check(&e, &SubsetCollection::singletons(2).unwrap(), 1e-6).unwrap();
        assert!(m.margin.abs() < 1e-8 && m.pass);
        assert!((m.lhs - g(1.0).exp()).abs() < 1e-7);
        let e = Ensemble::quantum(vec![fock1(20), thermal(0.5, 20), fock1(20)]).unwrap();
        let m = theorem1_check(&e, &SubsetCollection::full(3).unwrap(), 1e-6).unwrap();
        assert_eq!(m.margin, 0.0);
        let m = theorem1_check(&e, &SubsetCollection::all_of_size(3, 2).unwrap(), 1e-6).unwrap();
        assert!(m.margin >= 0.0);
    }

    #[test]
    fn theorem2_examples() {
        let e = Ensemble::quantum(vec![thermal(1.0, 40); 2]).unwrap();
        let c = SubsetCollection::singletons(2).unwrap();
        let ln2 = 2f64.ln();
        let m = theorem2_check(&e, &c, &WeightChoice::Given(WeightDistribution::uniform(2).unwrap()), 1e-5).unwrap();
        assert!((m.rhs - ln2).abs() < 1e-8 && (m.lhs - ln2).abs() < 1e-8, "{m:?}");
        let point = WeightDistribution::new(vec![1.0, 0.0]).unwrap();
        let m = theorem2_check(&e, &c, &WeightChoice::Given(point), 1e-5).unwrap();
        assert!((m.lhs - 2.0 * ln2).abs() < 1e-8);
        let e = Ensemble::quantum(vec![thermal(1.0, 40), thermal(2.0, 60).with_cutoff(40)]).unwrap();
        let opt = theorem2_check(&e, &c, &WeightChoice::Optimal, 1e-5).unwrap();
        assert!(opt.pass);
        let uni = theorem2_check(&e, &c, &WeightChoice::Given(WeightDistribution::uniform(2).unwrap()), 1e-5).unwrap();
        assert!(opt.margin <= uni.margin);
    }

    #[test]
    fn pure_states_are_support_deficient() {
        let e = Ensemble::quantum(vec![fock1(10); 2]).unwrap();
        let r = theorem2_check(&e, &SubsetCollection::singletons(2).unwrap(), &WeightChoice::Optimal, 1e-5);
        assert!(matches!(r, Err(Error::SupportDeficient { .. })));
    }

    #[test]
    fn gamma_examples() {
        let e = Ensemble::quantum(vec![thermal(1.0, 60), thermal(2.0, 60)]).unwrap();
        let gm = gamma_distribution(&e, &SubsetCollection::singletons(2).unwrap()).unwrap();
        let (a, b) = (g(1.0).exp(), g(2.0).exp());
        assert!((a - 4.0).abs() < 1e-12 && (b - 6.75).abs() < 1e-12);
        assert!((gm.as_slice()[0] - a / (a + b)).abs() < 1e-8);
        assert!((gm.as_slice()[0] - 0.372).abs() < 1e-3);
    }

    #[test]
    fn entropy_sum_form_examples() {
        let c = SubsetCollection::singletons(2).unwrap();
        let u = WeightDistribution::uniform(2).unwrap();
        let e = Ensemble::quantum(vec![thermal(1.0, 40); 2]).unwrap();
        assert!(entropy_sum_form_check(&e, &c, &u, 1e-6).unwrap().margin.abs() < 1e-8);
        let e = Ensemble::quantum(vec![fock1(20); 2]).unwrap();
        let m = entropy_sum_form_check(&e, &c, &u, 1e-6).unwrap();
        assert!((m.margin - m.lhs).abs() < 1e-12 && m.margin > 0.0);
        let pair = SubsetCollection::all_of_size(3, 2).unwrap();
        let e3 = Ensemble::quantum(vec![fock1(20); 3]).unwrap();
        let bad = WeightDistribution::new(vec![0.8, 0.1, 0.1]).unwrap();
        assert!(matches!(entropy_sum_form_check(&e3, &pair, &bad, 1e-6), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn thermal_plus_gaussian_is_tight() {
        let s = |x: &[usize]| Subset::of(x).unwrap();
        let c = SubsetCollection::new(2, 2, vec![(s(&[1]), s(&[1])), (s(&[2]), s(&[2]))]).unwrap();
        assert_eq!(c.r(), 1);
        let x = ClassicalRV::standard_gaussian();
        let e = Ensemble::new(vec![thermal(1.0, 60); 2], vec![x.clone(), x], QuadratureConfig::default()).unwrap();
        let m = theorem3_check(&e, &c, 1e-6).unwrap();
        assert!(m.margin.abs() < 1e-6, "{m:?}");
        assert!((m.lhs - g(2.0).exp()).abs() < 1e-5);
        let m = theorem4_check(&e, &c, &WeightChoice::Optimal, 1e-5).unwrap();
        assert!(m.margin.abs() < 1e-5 && (m.rhs - 1.5f64.ln()).abs() < 1e-5, "{m:?}");
        let two = ClassicalRV::uniform(vec![C64::new(0.5, 0.0), C64::new(-0.5, 0.0)]).unwrap();
        let e = Ensemble::new(vec![thermal(1.0, 40); 2], vec![two.clone(), two], QuadratureConfig::default()).unwrap();
        assert!(theorem3_check(&e, &c, 1e-5).unwrap().pass);
    }

    #[test]
    fn auxiliary_scales_solve_constraints() {
        let c = SubsetCollection::all_of_size(3, 2).unwrap();
        let mu = WeightDistribution::new(vec![0.4, 0.35, 0.25]).unwrap();
        let aux = auxiliary_gaussians(&c, &mu, 7).unwrap();
        let total: f64 = aux.h.iter().sum();
        for ((w, m), (v, _)) in aux.subsets.iter().zip(mu.as_slice()).zip(c.elements()) {
            assert_eq!(w.len() * 3, v.len() * aux.n_aux);
            let part: f64 = w.iter().map(|l| aux.h[l - 1]).sum();
            assert!((part / total - 2.0 * m).abs() < 1e-9);
        }
        for l in 1..=aux.n_aux {
            assert!(aux.subsets.iter().filter(|w| w.contains(l)).count() <= 2);
        }
        let boundary = WeightDistribution::new(vec![0.5, 0.3, 0.2]).unwrap();
        assert!(auxiliary_gaussians(&c, &boundary, 7).is_err());
    }
}
