use std::f64::consts::PI;

use crate::fockspace::displacement_matrix;
use crate::{CMatrix, C64};

/// Samples of a characteristic function.
#[derive(Debug, Clone, PartialEq)]
pub struct CharGrid {
    pub label: String,
    pub points: Vec<C64>,
    pub values: Vec<C64>,
}

impl CharGrid {
    /// Largest absolute difference against another sampling or a closed form.
    pub fn max_deviation(&self, other: impl Fn(C64) -> C64) -> f64 {
        self.points.iter().zip(&self.values).map(|(z, v)| (v - other(*z)).norm()).fold(0.0, f64::max)
    }
}

/// Radii `{0.25, 0.5, 1, 1.5, 2}` times five phases `2πk/5`.
pub fn standard_grid() -> Vec<C64> {
    let radii = [0.25, 0.5, 1.0, 1.5, 2.0];
    radii
        .iter()
        .flat_map(|&r| (0..5).map(move |k| C64::from_polar(r, 2.0 * PI * k as f64 / 5.0)))
        .collect()
}

/// `χ_T(z) = tr(T D_z)`.
pub fn char_value(t: &CMatrix, z: C64) -> C64 {
    let d = displacement_matrix(z, t.nrows());
    let mut acc = C64::new(0.0, 0.0);
    for k in 0..t.nrows() {
        for l in 0..t.ncols() {
            acc += t[(k, l)] * d[(l, k)];
        }
    }
    acc
}

pub fn char_function(t: &CMatrix, grid: &[C64], label: impl Into<String>) -> CharGrid {
    CharGrid { label: label.into(), points: grid.to_vec(), values: grid.iter().map(|z| char_value(t, *z)).collect() }
}

/// `e^{−|z|²/2} L_n(|z|²)`, the characteristic function of `|n⟩⟨n|`.
pub fn fock_char(n: usize, z: C64) -> C64 {
    let x = z.norm_sqr();
    let (mut l0, mut l1) = (1.0, 1.0 - x);
    if n == 0 {
        return C64::new((-x / 2.0).exp(), 0.0);
    }
    for k in 1..n {
        let k = k as f64;
        let l2 = ((2.0 * k + 1.0 - x) * l1 - k * l0) / (k + 1.0);
        l0 = l1;
        l1 = l2;
    }
    C64::new((-x / 2.0).exp() * l1, 0.0)
}

/// `e^{−(N̄+1/2)|z|²}`.
pub fn thermal_char(nbar: f64, z: C64) -> C64 {
    C64::new((-(nbar + 0.5) * z.norm_sqr()).exp(), 0.0)
}
