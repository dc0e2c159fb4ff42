//! Product integration of the half-order Riemann–Liouville operator
//! `J f(s) = ∫_0^s f(u) / sqrt(2π(s-u)) du` on a uniform grid.
//!
//! On each cell `[s_j, s_{j+1}]` the density is replaced by its linear
//! interpolant and integrated against the kernel exactly. With `v = s_i - u`
//! and lag `k = i - j`, the cell contributes
//!
//! ```text
//! c sqrt(Δ) [ far_k f_j + near_k f_{j+1} ],   c = 1/sqrt(2π)
//! far_k  = (2/3) d (1 + sqrt(k-1) d)
//! near_k = (2/3) d (1 + sqrt(k)   d),         d = sqrt(k) - sqrt(k-1)
//! ```
//!
//! which are the moments `∫ (v-a) v^{-1/2}` and `∫ (b-v) v^{-1/2}` over
//! `[a, b] = [k-1, k]`, rewritten without cancellation.

use std::f64::consts::PI;

use super::SolverGrid;
use crate::error::Result;
use crate::Error;

/// Precomputed product-integration weights for one grid.
#[derive(Debug, Clone)]
pub struct AbelWeights {
    steps: usize,
    /// `far[k]`, weight of the node at lag `k` as the far end of its cell.
    far: Vec<f64>,
    /// Combined interior weight at lag `k`, stored reversed so the history
    /// sum is a forward dot product: `interior_rev[steps - 1 - k]`.
    interior_rev: Vec<f64>,
    diagonal: f64,
}

impl AbelWeights {
    pub fn new(grid: &SolverGrid) -> Self {
        let m = grid.steps();
        let scale = (grid.step() / (2.0 * PI)).sqrt();
        let mut far = vec![0.0; m + 1];
        let mut near = vec![0.0; m + 2];
        for k in 1..=m + 1 {
            let (sa, sb) = (((k - 1) as f64).sqrt(), (k as f64).sqrt());
            let d = 1.0 / (sa + sb);
            if k <= m {
                far[k] = scale * (2.0 / 3.0) * d * (1.0 + sa * d);
            }
            near[k] = scale * (2.0 / 3.0) * d * (1.0 + sb * d);
        }
        let interior_rev = (1..m).rev().map(|k| far[k] + near[k + 1]).collect();
        Self {
            steps: m,
            far,
            interior_rev,
            diagonal: near[1],
        }
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Weight of `f_i` in `J f(s_i)`: `(2/3) sqrt(2Δ/π)`.
    pub fn diagonal(&self) -> f64 {
        self.diagonal
    }

    /// `J f(s_i)` without the diagonal term, using `f[0..i]`.
    pub fn history(&self, f: &[f64], i: usize) -> f64 {
        if i == 0 {
            return 0.0;
        }
        let head = self.far[i] * f[0];
        let weights = &self.interior_rev[self.steps - i..self.steps - 1];
        head + dot(weights, &f[1..i])
    }

    /// `J f(s_i)`, using `f[0..=i]`.
    pub fn apply_at(&self, f: &[f64], i: usize) -> f64 {
        if i == 0 {
            return 0.0;
        }
        self.history(f, i) + self.diagonal * f[i]
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0; 4];
    let chunks_a = a.chunks_exact(4);
    let chunks_b = b.chunks_exact(4);
    let (rest_a, rest_b) = (chunks_a.remainder(), chunks_b.remainder());
    for (x, y) in chunks_a.zip(chunks_b) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in rest_a.iter().zip(rest_b) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Product-integration approximation of `J f` at every grid point.
/// `J f(0) = 0` exactly; constants are integrated exactly.
pub fn half_fractional_integral(f: &[f64], grid: &SolverGrid) -> Result<Vec<f64>> {
    if f.len() != grid.steps() + 1 {
        return Err(Error::Config(format!(
            "grid function has {} values, expected m + 1 = {}",
            f.len(),
            grid.steps() + 1
        )));
    }
    let weights = AbelWeights::new(grid);
    Ok(apply_all(&weights, f))
}

pub(super) fn apply_all(weights: &AbelWeights, f: &[f64]) -> Vec<f64> {
    (0..f.len()).map(|i| weights.apply_at(f, i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::integrate_singular;

    fn grid(end: f64, m: usize) -> SolverGrid {
        SolverGrid::new(end, m).unwrap()
    }

    #[test]
    fn constants_are_exact() {
        let g = grid(3.0, 300);
        let out = half_fractional_integral(&vec![1.0; 301], &g).unwrap();
        assert_eq!(out[0], 0.0);
        for (i, s) in g.points().enumerate() {
            let want = (2.0 * s / PI).sqrt();
            assert!((out[i] - want).abs() < 1e-13, "s = {s}");
        }
    }

    #[test]
    fn zero_in_zero_out() {
        let g = grid(1.0, 50);
        assert!(half_fractional_integral(&[0.0; 51], &g).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_functions_are_exact() {
        // J u (s) = ∫_0^s u / sqrt(2π(s-u)) du = (4/3) s^{3/2} / sqrt(2π)
        let g = grid(2.0, 64);
        let f: Vec<f64> = g.points().collect();
        let out = half_fractional_integral(&f, &g).unwrap();
        for (i, s) in g.points().enumerate() {
            let want = 4.0 / 3.0 * s.powf(1.5) / (2.0 * PI).sqrt();
            assert!((out[i] - want).abs() < 1e-13);
        }
    }

    #[test]
    fn square_root_density_against_beta_identity() {
        // ∫_0^s u^{1/2} (s-u)^{-1/2} du = (π/2) s, so J sqrt(u) = s sqrt(π/8)
        let oracle = integrate_singular(|v| (1.0 - v).sqrt() / (2.0 * PI * v).sqrt(), 0.0, 1.0, 1e-12);
        assert!((oracle - (PI / 8.0).sqrt()).abs() < 1e-9);

        let g = grid(1.0, 1000);
        let f: Vec<f64> = g.points().map(f64::sqrt).collect();
        let out = half_fractional_integral(&f, &g).unwrap();
        let dx = g.step();
        for (i, s) in g.points().enumerate() {
            assert!((out[i] - s * (PI / 8.0).sqrt()).abs() <= dx);
        }
    }

    #[test]
    fn matches_quadrature_for_smooth_density() {
        let g = grid(1.5, 600);
        let f: Vec<f64> = g.points().map(|u| (3.0 * u).sin() + u * u).collect();
        let out = half_fractional_integral(&f, &g).unwrap();
        for i in [1usize, 7, 150, 433, 600] {
            let s = g.point(i);
            let want = integrate_singular(
                |v| ((3.0 * (s - v)).sin() + (s - v).powi(2)) / (2.0 * PI * v).sqrt(),
                0.0,
                s,
                1e-13,
            );
            assert!((out[i] - want).abs() < 2e-5, "s = {s}: {} vs {want}", out[i]);
        }
    }

    #[test]
    fn diagonal_weight() {
        let g = grid(1.0, 1000);
        let w = AbelWeights::new(&g);
        let want = 2.0 / 3.0 * (2.0 * g.step() / PI).sqrt();
        assert!((w.diagonal() - want).abs() < 1e-16);
    }

    #[test]
    fn length_mismatch_is_rejected() {
        assert!(half_fractional_integral(&[1.0; 3], &grid(1.0, 4)).is_err());
    }
}
