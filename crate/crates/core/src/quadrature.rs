//! Quadrature rules and the budgets that bound their cost.

use std::num::NonZeroUsize;

use gauss_quad::{GaussHermite, GaussLegendre};
use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

/// Knobs for every quadrature in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    /// Gauss–Hermite nodes per real dimension for Gaussian displacements.
    pub gh_nodes: usize,
    /// Largest number of displacement terms a single quantum-classical
    /// convolution may use.
    pub max_terms: usize,
    /// Gauss–Legendre nodes per real dimension for the lifting integral.
    pub lift_nodes: usize,
    /// Radius at which the lifting integral gives up if `|χ|` has not decayed.
    pub lift_max_radius: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { gh_nodes: 20, max_terms: 10_000, lift_nodes: 80, lift_max_radius: 16.0 }
    }
}

/// Nodes and weights of a one-dimensional rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

fn nonzero(n: usize) -> Result<NonZeroUsize> {
    NonZeroUsize::new(n).ok_or_else(|| Error::InvalidParameter("quadrature needs at least one node".into()))
}

/// Rule for `∫ e^{−x²} f(x) dx` over the real line.
pub fn gauss_hermite(n: usize) -> Result<Rule> {
    let rule = GaussHermite::new(nonzero(n)?);
    let (nodes, weights) = rule.as_node_weight_pairs().iter().copied().unzip();
    Ok(Rule { nodes, weights })
}

/// Rule for `∫_{−1}^{1} f(x) dx`.
pub fn gauss_legendre(n: usize) -> Result<Rule> {
    let rule = GaussLegendre::new(nonzero(n)?);
    let (nodes, weights) = rule.as_node_weight_pairs().iter().copied().unzip();
    Ok(Rule { nodes, weights })
}

/// Discretization of a complex Gaussian with the given mean whose real and
/// imaginary parts are independent with variance `h/2`: a tensor
/// Gauss–Hermite grid of `n × n` points with probability weights.
pub fn complex_gaussian_nodes(mean: C64, h: f64, n: usize) -> Result<Vec<(C64, f64)>> {
    let rule = gauss_hermite(n)?;
    let s = h.sqrt();
    let norm = std::f64::consts::PI;
    let mut out = Vec::with_capacity(n * n);
    for (xr, wr) in rule.nodes.iter().zip(&rule.weights) {
        for (xi, wi) in rule.nodes.iter().zip(&rule.weights) {
            out.push((mean + C64::new(s * xr, s * xi), wr * wi / norm));
        }
    }
    Ok(out)
}
