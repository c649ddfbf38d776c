//! Complex-valued classical random variables (one mode).
//!
//! The characteristic function is `χ_X(z) = E exp(z x̄ − z̄ x)`, with no
//! convolution parameter inside: a quantum-classical convolution with
//! parameter `t` evaluates `χ_X(√t z)` at the call site.
//!
//! `gaussian(mean, h)` has independent real and imaginary parts of variance
//! `h/2`, so `χ(z) = e^{z μ̄ − z̄ μ} e^{−h|z|²}`. With `h = 1` this is the
//! variable whose convolution generates the heat semigroup.

use crate::{Error, Result, C64};

const PROB_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum ClassicalRV {
    Gaussian { mean: C64, h: f64 },
    Finite { points: Vec<C64>, probs: Vec<f64> },
}

impl ClassicalRV {
    pub fn gaussian(mean: C64, h: f64) -> Result<Self> {
        if !(h >= 0.0 && h.is_finite()) || !mean.re.is_finite() || !mean.im.is_finite() {
            return Err(Error::InvalidParameter(format!("gaussian scale h = {h} must be finite and ≥ 0")));
        }
        Ok(ClassicalRV::Gaussian { mean, h })
    }

    /// Centered Gaussian with `h = 1`.
    pub fn standard_gaussian() -> Self {
        ClassicalRV::Gaussian { mean: C64::new(0.0, 0.0), h: 1.0 }
    }

    pub fn finite(points: Vec<C64>, probs: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != probs.len() {
            return Err(Error::InvalidParameter("finite variable needs one probability per point".into()));
        }
        if probs.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::InvalidParameter("probabilities must be nonnegative".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_TOLERANCE {
            return Err(Error::InvalidParameter(format!("probabilities sum to {total}")));
        }
        Ok(ClassicalRV::Finite { points, probs })
    }

    pub fn point_mass(x: C64) -> Self {
        ClassicalRV::Finite { points: vec![x], probs: vec![1.0] }
    }

    /// Uniform distribution on the given points.
    pub fn uniform(points: Vec<C64>) -> Result<Self> {
        let p = 1.0 / points.len().max(1) as f64;
        let probs = vec![p; points.len()];
        Self::finite(points, probs)
    }

    pub fn mode_count(&self) -> usize {
        1
    }

    /// The single support point, if the variable is deterministic.
    pub fn as_point_mass(&self) -> Option<C64> {
        match self {
            ClassicalRV::Gaussian { mean, h } if *h == 0.0 => Some(*mean),
            ClassicalRV::Finite { points, .. } if points.len() == 1 => Some(points[0]),
            _ => None,
        }
    }

    /// `χ_X(z) = E exp(z x̄ − z̄ x)`.
    pub fn char(&self, z: C64) -> C64 {
        match self {
            ClassicalRV::Gaussian { mean, h } => (z * mean.conj() - z.conj() * mean - h * z.norm_sqr()).exp(),
            ClassicalRV::Finite { points, probs } => points
                .iter()
                .zip(probs)
                .map(|(x, p)| (z * x.conj() - z.conj() * x).exp() * p)
                .sum(),
        }
    }

    /// Distribution of `c·X`.
    pub fn scaled(&self, c: f64) -> Self {
        match self {
            ClassicalRV::Gaussian { mean, h } => ClassicalRV::Gaussian { mean: mean * c, h: h * c * c },
            ClassicalRV::Finite { points, probs } => {
                ClassicalRV::Finite { points: points.iter().map(|x| x * c).collect(), probs: probs.clone() }
            }
        }
    }

    /// Mean `E x`.
    pub fn mean(&self) -> C64 {
        match self {
            ClassicalRV::Gaussian { mean, .. } => *mean,
            ClassicalRV::Finite { points, probs } => points.iter().zip(probs).map(|(x, p)| x * p).sum(),
        }
    }
}

/// `X ⊞_λ Y`: the law of `√λ X + √(1−λ) Y` for independent `X`, `Y`.
///
/// Gaussians close under the operation, finite laws produce the product
/// support, and a Gaussian may absorb a point mass. A Gaussian combined with
/// any other finite law is not representable and yields `UnsupportedMix`.
pub fn cconv(x: &ClassicalRV, y: &ClassicalRV, lambda: f64) -> Result<ClassicalRV> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidParameter(format!("lambda = {lambda} outside [0, 1]")));
    }
    let (a, b) = (lambda.sqrt(), (1.0 - lambda).sqrt());
    if lambda == 1.0 {
        return Ok(x.clone());
    }
    if lambda == 0.0 {
        return Ok(y.clone());
    }
    use ClassicalRV::*;
    match (x, y) {
        (Gaussian { mean: mx, h: hx }, Gaussian { mean: my, h: hy }) => {
            Ok(Gaussian { mean: mx * a + my * b, h: lambda * hx + (1.0 - lambda) * hy })
        }
        (Finite { points: px, probs: qx }, Finite { points: py, probs: qy }) => {
            let mut points = Vec::with_capacity(px.len() * py.len());
            let mut probs = Vec::with_capacity(px.len() * py.len());
            for (xi, pi) in px.iter().zip(qx) {
                for (yj, pj) in py.iter().zip(qy) {
                    points.push(xi * a + yj * b);
                    probs.push(pi * pj);
                }
            }
            Ok(Finite { points, probs })
        }
        (Gaussian { mean, h }, f @ Finite { .. }) => match f.as_point_mass() {
            Some(p) => Ok(Gaussian { mean: mean * a + p * b, h: lambda * h }),
            None => Err(Error::UnsupportedMix("gaussian with multi-point finite law".into())),
        },
        (f @ Finite { .. }, Gaussian { mean, h }) => match f.as_point_mass() {
            Some(p) => Ok(Gaussian { mean: p * a + mean * b, h: (1.0 - lambda) * h }),
            None => Err(Error::UnsupportedMix("multi-point finite law with gaussian".into())),
        },
    }
}

/// `X^{⊞w}`, folded left to right with `λ = 1 − 1/k` at step `k`.
pub fn symmetric_cconv(vars: &[ClassicalRV]) -> Result<ClassicalRV> {
    let (first, rest) = vars.split_first().ok_or(Error::EmptySubset)?;
    let mut acc = first.clone();
    for (i, v) in rest.iter().enumerate() {
        let k = (i + 2) as f64;
        acc = cconv(&acc, v, 1.0 - 1.0 / k)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn char_at_zero_and_point_mass() {
        let x = ClassicalRV::point_mass(c(0.3, -0.7));
        assert_eq!(x.char(c(0.0, 0.0)), c(1.0, 0.0));
        let z = c(0.4, 0.9);
        assert!((x.char(z).norm() - 1.0).abs() < 1e-15);
        assert!((ClassicalRV::standard_gaussian().char(z) - (-z.norm_sqr()).exp()).norm() < 1e-15);
    }

    #[test]
    fn gaussian_char_matches_quadrature() {
        let g = ClassicalRV::gaussian(c(0.2, 0.1), 0.7).unwrap();
        let nodes = crate::quadrature::complex_gaussian_nodes(c(0.2, 0.1), 0.7, 30).unwrap();
        let z = c(0.5, -0.3);
        let q: C64 = nodes.iter().map(|(x, w)| (z * x.conj() - z.conj() * x).exp() * w).sum();
        assert!((q - g.char(z)).norm() < 1e-13);
    }

    #[test]
    fn two_point_symmetric_sum() {
        let x = ClassicalRV::uniform(vec![c(1.0, 0.0), c(-1.0, 0.0)]).unwrap();
        let s = cconv(&x, &x, 0.5).unwrap();
        let ClassicalRV::Finite { points, probs } = s else { panic!() };
        let mut re: Vec<f64> = points.iter().map(|p| p.re).collect();
        re.sort_by(f64::total_cmp);
        let r2 = 2f64.sqrt();
        for (got, want) in re.iter().zip([-r2, 0.0, 0.0, r2]) {
            assert!((got - want).abs() < 1e-15);
        }
        assert!(probs.iter().all(|p| *p == 0.25));
    }

    #[test]
    fn gaussian_folds_average_scales() {
        let g = |h| ClassicalRV::gaussian(c(0.0, 0.0), h).unwrap();
        let s = symmetric_cconv(&[g(1.0), g(3.0)]).unwrap();
        assert_eq!(s, g(2.0));
        let s3 = symmetric_cconv(&[g(1.0), g(1.0), g(1.0)]).unwrap();
        let ClassicalRV::Gaussian { h, .. } = s3 else { panic!() };
        assert!((h - 1.0).abs() < 1e-15);
        assert!(matches!(symmetric_cconv(&[]), Err(Error::EmptySubset)));
    }

    #[test]
    fn unsupported_mix_and_point_mass_absorption() {
        let g = ClassicalRV::standard_gaussian();
        let two = ClassicalRV::uniform(vec![c(0.5, 0.0), c(-0.5, 0.0)]).unwrap();
        assert!(matches!(cconv(&g, &two, 0.5), Err(Error::UnsupportedMix(_))));
        let shifted = cconv(&g, &ClassicalRV::point_mass(c(2.0, 0.0)), 0.5).unwrap();
        let z = c(0.3, 0.2);
        let want = g.char(z * 0.5f64.sqrt()) * ClassicalRV::point_mass(c(2.0, 0.0)).char(z * 0.5f64.sqrt());
        assert!((shifted.char(z) - want).norm() < 1e-15);
    }

    #[test]
    fn scaling_multiplies_h() {
        let g = ClassicalRV::gaussian(c(0.0, 0.0), 1.5).unwrap();
        let ratio: f64 = 3.0 / 2.0;
        let ClassicalRV::Gaussian { h, .. } = g.scaled(ratio.sqrt()) else { panic!() };
        assert!((h - 1.5 * ratio).abs() < 1e-15);
    }
}
