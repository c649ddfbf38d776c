use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{displacement_matrix, DensityMatrix};
use crate::linalg::{embed, trace};
use crate::{CMatrix, Error, Result, C64};

/// Largest diagonal mass a family may lose to truncation.
pub const TAIL_BOUND: f64 = 1e-10;

/// Dimension of the photon block carrying the Ginibre part of
/// `RandomFullSupport`.
const GINIBRE_BLOCK: usize = 6;
const GINIBRE_ADMIXTURE: f64 = 0.1;
const GINIBRE_THERMAL_NBAR: f64 = 0.5;

/// Named test-state generators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateFamily {
    Vacuum,
    Fock { n: usize },
    Thermal { nbar: f64 },
    Coherent { re: f64, #[serde(default)] im: f64 },
    /// Even cat state `∝ |α⟩ + |−α⟩` with real `α`.
    Cat { alpha: f64 },
    /// Coherent state averaged over its phase: Poisson photon statistics.
    PhaseAveragedCoherent { alpha: f64 },
    DisplacedThermal { nbar: f64, re: f64, #[serde(default)] im: f64 },
    /// Diagonal state with the given (normalized) photon-number weights.
    FockMixture { weights: Vec<f64> },
    /// Convex combination of other families; weights are normalized.
    Mixture { parts: Vec<MixturePart> },
    /// Seeded Ginibre matrix on the 6-level photon block, damped entrywise
    /// like thermal(0.5) populations and mixed with thermal(0.5) at weight
    /// 0.1, so every level carries weight and neighbouring levels never
    /// differ by more than a bounded factor.
    RandomFullSupport { seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixturePart {
    pub weight: f64,
    pub state: StateFamily,
}

impl fmt::Display for StateFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateFamily::Vacuum => write!(f, "vacuum"),
            StateFamily::Fock { n } => write!(f, "fock({n})"),
            StateFamily::Thermal { nbar } => write!(f, "thermal({nbar})"),
            StateFamily::Coherent { re, im } => write!(f, "coherent({re}{im:+}i)"),
            StateFamily::Cat { alpha } => write!(f, "cat({alpha})"),
            StateFamily::PhaseAveragedCoherent { alpha } => write!(f, "phase_averaged_coherent({alpha})"),
            StateFamily::DisplacedThermal { nbar, re, im } => {
                write!(f, "displaced_thermal({nbar};{re}{im:+}i)")
            }
            StateFamily::FockMixture { weights } => {
                let w: Vec<String> = weights.iter().map(|w| w.to_string()).collect();
                write!(f, "fock_mixture({})", w.join(";"))
            }
            StateFamily::Mixture { parts } => {
                let w: Vec<String> = parts.iter().map(|p| format!("{}*{}", p.weight, p.state)).collect();
                write!(f, "mixture({})", w.join("+"))
            }
            StateFamily::RandomFullSupport { seed } => write!(f, "random_full_support({seed})"),
        }
    }
}

pub fn make_state(family: &StateFamily, cutoff: usize) -> Result<DensityMatrix> {
    make_state_with_tail_bound(family, cutoff, TAIL_BOUND)
}

/// Build `family` at `cutoff`, failing with `CutoffTooSmall` if more than
/// `bound` of its photon-number distribution lies above the cutoff. The
/// truncated state is not renormalized.
pub fn make_state_with_tail_bound(family: &StateFamily, cutoff: usize, bound: f64) -> Result<DensityMatrix> {
    let (matrix, tail) = build(family, cutoff)?;
    if tail > bound {
        return Err(Error::CutoffTooSmall { cutoff, tail, bound });
    }
    Ok(DensityMatrix::from_hermitian(matrix))
}

/// Seeded `G G† / tr(G G†)` with complex standard-normal `G`.
pub fn ginibre_state(dim: usize, seed: u64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = CMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        C64::new(re, im)
    });
    let w = &g * g.adjoint();
    let tr = trace(&w).re;
    w.unscale(tr)
}

fn diagonal(p: &[f64]) -> CMatrix {
    let d = p.len();
    CMatrix::from_fn(d, d, |i, j| if i == j { C64::new(p[i], 0.0) } else { C64::new(0.0, 0.0) })
}

fn thermal_populations(nbar: f64, dim: usize) -> (Vec<f64>, f64) {
    if nbar == 0.0 {
        let mut p = vec![0.0; dim];
        p[0] = 1.0;
        return (p, 0.0);
    }
    let q = nbar / (nbar + 1.0);
    let p: Vec<f64> = (0..dim).map(|n| q.powi(n as i32) / (nbar + 1.0)).collect();
    (p, q.powi(dim as i32))
}

/// `ln(x^n / n!)` for `n = 0..len`.
fn log_poisson_terms(x: f64, len: usize) -> Vec<f64> {
    let lx = x.ln();
    let mut out = Vec::with_capacity(len);
    let mut acc = 0.0;
    for n in 0..len {
        if n > 0 {
            acc += lx - (n as f64).ln();
        }
        out.push(acc);
    }
    out
}

/// Poisson weights `e^{−x} x^n/n!` for `n < dim` and the mass above.
fn poisson(x: f64, dim: usize) -> (Vec<f64>, f64) {
    if x == 0.0 {
        let mut p = vec![0.0; dim];
        p[0] = 1.0;
        return (p, 0.0);
    }
    let extra = dim + 200 + (4.0 * x) as usize;
    let logs = log_poisson_terms(x, extra);
    let w: Vec<f64> = logs.iter().map(|l| (l - x).exp()).collect();
    let tail = w[dim..].iter().sum();
    (w[..dim].to_vec(), tail)
}

fn pure(amps: &[C64]) -> CMatrix {
    let d = amps.len();
    CMatrix::from_fn(d, d, |i, j| amps[i] * amps[j].conj())
}

fn check_finite(x: f64, what: &str) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{what} must be finite")))
    }
}

fn build(family: &StateFamily, cutoff: usize) -> Result<(CMatrix, f64)> {
    let dim = cutoff + 1;
    match family {
        StateFamily::Vacuum => Ok((diagonal(&thermal_populations(0.0, dim).0), 0.0)),
        StateFamily::Fock { n } => {
            if *n > cutoff {
                return Ok((CMatrix::zeros(dim, dim), 1.0));
            }
            let mut p = vec![0.0; dim];
            p[*n] = 1.0;
            Ok((diagonal(&p), 0.0))
        }
        StateFamily::Thermal { nbar } => {
            check_finite(*nbar, "nbar")?;
            if *nbar < 0.0 {
                return Err(Error::InvalidParameter(format!("thermal occupation {nbar} < 0")));
            }
            let (p, tail) = thermal_populations(*nbar, dim);
            Ok((diagonal(&p), tail))
        }
        StateFamily::Coherent { re, im } => {
            check_finite(*re, "re")?;
            check_finite(*im, "im")?;
            let alpha = C64::new(*re, *im);
            let (w, tail) = poisson(alpha.norm_sqr(), dim);
            let phase = if alpha.norm() > 0.0 { alpha / alpha.norm() } else { C64::new(1.0, 0.0) };
            let amps: Vec<C64> = w.iter().enumerate().map(|(n, p)| phase.powi(n as i32) * p.sqrt()).collect();
            Ok((pure(&amps), tail))
        }
        StateFamily::Cat { alpha } => {
            check_finite(*alpha, "alpha")?;
            if *alpha == 0.0 {
                return build(&StateFamily::Vacuum, cutoff);
            }
            let x = alpha * alpha;
            // |α⟩ + |−α⟩ keeps even photon numbers with doubled amplitude;
            // its squared norm is 2(1 + e^{−2|α|²}).
            let norm = 2.0 * (1.0 + (-2.0 * x).exp());
            let (w, _) = poisson(x, dim);
            let sign = alpha.signum();
            let amps: Vec<C64> = w
                .iter()
                .enumerate()
                .map(|(n, p)| {
                    if n % 2 == 0 {
                        C64::new(2.0 * sign.powi(n as i32) * (p / norm).sqrt(), 0.0)
                    } else {
                        C64::new(0.0, 0.0)
                    }
                })
                .collect();
            let kept: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
            Ok((pure(&amps), (1.0 - kept).max(0.0)))
        }
        StateFamily::PhaseAveragedCoherent { alpha } => {
            check_finite(*alpha, "alpha")?;
            let (w, tail) = poisson(alpha * alpha, dim);
            Ok((diagonal(&w), tail))
        }
        StateFamily::DisplacedThermal { nbar, re, im } => {
            let padded = cutoff + 80 + (4.0 * (re * re + im * im)) as usize;
            let (base, base_tail) = build(&StateFamily::Thermal { nbar: *nbar }, padded)?;
            let d = displacement_matrix(C64::new(*re, *im), padded + 1);
            let full = &d * base * d.adjoint();
            let kept: f64 = (0..dim).map(|n| full[(n, n)].re).sum();
            let tail = (1.0 - kept).max(0.0) + base_tail;
            Ok((crate::linalg::truncate(&full, dim), tail))
        }
        StateFamily::FockMixture { weights } => {
            if weights.is_empty() || weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
                return Err(Error::InvalidParameter("fock mixture weights must be nonnegative".into()));
            }
            let total: f64 = weights.iter().sum();
            if total <= 0.0 {
                return Err(Error::InvalidParameter("fock mixture weights sum to zero".into()));
            }
            let mut p = vec![0.0; dim];
            let mut tail = 0.0;
            for (n, w) in weights.iter().enumerate() {
                if n < dim {
                    p[n] = w / total;
                } else {
                    tail += w / total;
                }
            }
            Ok((diagonal(&p), tail))
        }
        StateFamily::Mixture { parts } => {
            if parts.is_empty() || parts.iter().any(|p| !p.weight.is_finite() || p.weight < 0.0) {
                return Err(Error::InvalidParameter("mixture weights must be nonnegative".into()));
            }
            let total: f64 = parts.iter().map(|p| p.weight).sum();
            if total <= 0.0 {
                return Err(Error::InvalidParameter("mixture weights sum to zero".into()));
            }
            let mut m = CMatrix::zeros(dim, dim);
            let mut tail = 0.0;
            for part in parts {
                let (pm, pt) = build(&part.state, cutoff)?;
                m += pm * C64::new(part.weight / total, 0.0);
                tail += pt * part.weight / total;
            }
            Ok((m, tail))
        }
        StateFamily::RandomFullSupport { seed } => {
            if dim < GINIBRE_BLOCK {
                return Ok((CMatrix::zeros(dim, dim), 1.0));
            }
            let q = GINIBRE_THERMAL_NBAR / (GINIBRE_THERMAL_NBAR + 1.0);
            let mut g = ginibre_state(GINIBRE_BLOCK, *seed);
            for i in 0..GINIBRE_BLOCK {
                for j in 0..GINIBRE_BLOCK {
                    g[(i, j)] *= q.powf((i + j) as f64 / 2.0);
                }
            }
            let tr = trace(&g).re;
            let g = embed(&g.unscale(tr), dim);
            let (p, tail) = thermal_populations(GINIBRE_THERMAL_NBAR, dim);
            let m = g * C64::new(1.0 - GINIBRE_ADMIXTURE, 0.0) + diagonal(&p) * C64::new(GINIBRE_ADMIXTURE, 0.0);
            Ok((m, tail * GINIBRE_ADMIXTURE))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thermal_populations_are_geometric() {
        let rho = make_state(&StateFamily::Thermal { nbar: 1.0 }, 60).unwrap();
        let p = rho.populations();
        assert!((p[0] - 0.5).abs() < 1e-15);
        let mut direct = 0.5;
        for pn in p.iter() {
            assert!((pn - direct).abs() < 1e-16);
            direct *= 0.5;
        }
        assert!(rho.trace_deficit() < 1e-17);
    }

    #[test]
    fn fock_and_vacuum() {
        let v = make_state(&StateFamily::Vacuum, 10).unwrap();
        assert_eq!(v.populations()[0], 1.0);
        let f = make_state(&StateFamily::Fock { n: 1 }, 5).unwrap();
        assert_eq!(f.populations(), vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(matches!(make_state(&StateFamily::Fock { n: 6 }, 5), Err(Error::CutoffTooSmall { .. })));
    }

    #[test]
    fn cutoff_checks() {
        assert!(matches!(make_state(&StateFamily::Cat { alpha: 2.0 }, 4), Err(Error::CutoffTooSmall { .. })));
        assert!(matches!(make_state(&StateFamily::Thermal { nbar: -1.0 }, 4), Err(Error::InvalidParameter(_))));
        assert!(make_state(&StateFamily::Thermal { nbar: 1.0 }, 20).is_err());
    }

    #[test]
    fn coherent_matches_displaced_vacuum() {
        let c = make_state(&StateFamily::Coherent { re: 0.6, im: -0.8 }, 40).unwrap();
        let v = make_state(&StateFamily::Vacuum, 40).unwrap().displaced(C64::new(0.6, -0.8));
        assert!(crate::linalg::max_abs(&(c.matrix() - v.matrix())) < 1e-14);
    }

    #[test]
    fn cat_is_normalized_even_state() {
        let c = make_state(&StateFamily::Cat { alpha: 1.5 }, 30).unwrap();
        let p = c.populations();
        assert!((c.trace() - 1.0).abs() < 1e-10);
        assert!(p.iter().skip(1).step_by(2).all(|x| *x == 0.0));
    }

    #[test]
    fn random_states_are_seeded_and_full_rank() {
        let f = StateFamily::RandomFullSupport { seed: 7 };
        let a = make_state(&f, 20).unwrap();
        let b = make_state(&f, 20).unwrap();
        assert!(make_state(&f, 12).is_err());
        assert_eq!(a, b);
        let sp = a.spectral().unwrap();
        assert!(sp.eigenvalues[0] > 1e-13);
        assert!((a.trace() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn serde_roundtrip_and_unknown_fields() {
        let f: StateFamily = serde_json::from_str(r#"{"family":"thermal","nbar":1.0}"#).unwrap();
        assert_eq!(f, StateFamily::Thermal { nbar: 1.0 });
        assert!(serde_json::from_str::<StateFamily>(r#"{"family":"thermal","nbar":1.0,"x":2}"#).is_err());
        let m: StateFamily = serde_json::from_str(
            r#"{"family":"mixture","parts":[{"weight":0.9,"state":{"family":"fock","n":1}},{"weight":0.1,"state":{"family":"thermal","nbar":0.5}}]}"#,
        )
        .unwrap();
        assert!(make_state(&m, 40).is_ok());
        assert_eq!(f.to_string(), "thermal(1)");
    }
}
