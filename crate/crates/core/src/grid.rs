//! Logarithmic radial grids and quadrature for radial functions in R^N.
//!
//! Weights carry the radial measure r^{N-1} dr; integrals over R^N of radial
//! densities are the weighted sums times `sphere_area()`. Two independent
//! quadrature routes are provided: node-sampled trapezoid in log space (the
//! grid weights) and panel-clipped Gauss-Legendre for arbitrary callables on
//! sub-ranges. The constructor cross-checks the two routes and refuses grids
//! on which they disagree.

use std::sync::Arc;

use crate::error::CoreError;
use crate::gauss;

/// Default grid used by all acceptance runs at N = 7.
pub const DEFAULT_R_MIN: f64 = 1e-4;
pub const DEFAULT_R_MAX: f64 = 1e3;
pub const DEFAULT_POINTS: usize = 2048;

const SELF_CHECK_TOL: f64 = 1e-10;

/// Shared handle to an immutable grid.
pub type GridRef = Arc<RadialGrid>;

/// Strictly increasing radial nodes with quadrature weights for r^{N-1} dr.
#[derive(Debug, Clone)]
pub struct RadialGrid {
    dim: usize,
    r: Vec<f64>,
    s: Vec<f64>,
    h: f64,
    w: Vec<f64>,
    sphere: f64,
}

/// Gamma function at integer or half-integer arguments (exact recursion).
fn gamma_half(two_x: usize) -> f64 {
    assert!(two_x >= 1);
    // two_x = 2x; walk up from Gamma(1/2) or Gamma(1).
    let (mut acc, mut two_k) = if two_x % 2 == 1 {
        (std::f64::consts::PI.sqrt(), 1usize)
    } else {
        (1.0, 2usize)
    };
    while two_k < two_x {
        acc *= two_k as f64 / 2.0;
        two_k += 2;
    }
    acc
}

/// Area of the unit sphere S^{N-1} in R^N.
pub fn sphere_area(dim: usize) -> f64 {
    2.0 * std::f64::consts::PI.powf(dim as f64 / 2.0) / gamma_half(dim)
}

impl RadialGrid {
    /// Logarithmically spaced grid with composite quadrature weights.
    pub fn make_log_grid(
        dim: usize,
        r_min: f64,
        r_max: f64,
        points: usize,
    ) -> Result<GridRef, CoreError> {
        if dim < 7 {
            return Err(CoreError::DimensionTooLow(dim));
        }
        if dim > 10 {
            return Err(CoreError::DimensionTooHigh(dim));
        }
        if !(r_min > 0.0 && r_min < r_max && r_max.is_finite()) {
            return Err(CoreError::InvalidBounds { r_min, r_max });
        }
        if points < 64 {
            return Err(CoreError::TooFewPoints(points));
        }
        let s_min = r_min.ln();
        let s_max = r_max.ln();
        let h = (s_max - s_min) / (points - 1) as f64;
        let mut s = Vec::with_capacity(points);
        let mut r = Vec::with_capacity(points);
        for i in 0..points {
            let si = if i == points - 1 { s_max } else { s_min + i as f64 * h };
            s.push(si);
            r.push(si.exp());
        }
        r[0] = r_min;
        r[points - 1] = r_max;
        // Trapezoid in s for the density f(r) r^{N-1}: ds-measure weight h r^N.
        let mut w: Vec<f64> = r.iter().map(|&ri| h * ri.powi(dim as i32)).collect();
        w[0] *= 0.5;
        w[points - 1] *= 0.5;
        let grid = RadialGrid {
            dim,
            r,
            s,
            h,
            w,
            sphere: sphere_area(dim),
        };
        grid.self_check()?;
        Ok(Arc::new(grid))
    }

    /// Cross-check the node quadrature against the independent panel route on
    /// a W-shaped reference density.
    fn self_check(&self) -> Result<(), CoreError> {
        let p = -((self.dim - 2) as f64);
        let density = |r: f64| (1.0 + r * r).powf(p);
        let sampled: Vec<f64> = self.r.iter().map(|&ri| density(ri)).collect();
        let a = self.integrate_sampled(&sampled);
        let b = self.integrate_range_fn(density, self.r_min(), self.r_max());
        let defect = ((a - b) / b).abs();
        if !(defect <= SELF_CHECK_TOL) {
            return Err(CoreError::QuadratureDefect {
                defect,
                tol: SELF_CHECK_TOL,
            });
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    /// Uniform spacing of ln r.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn r_min(&self) -> f64 {
        self.r[0]
    }

    pub fn r_max(&self) -> f64 {
        *self.r.last().unwrap()
    }

    /// |S^{N-1}|.
    pub fn sphere_area(&self) -> f64 {
        self.sphere
    }

    /// ∫ f(r) r^{N-1} dr over the grid support, f given by node samples.
    pub fn integrate_sampled(&self, vals: &[f64]) -> f64 {
        assert_eq!(vals.len(), self.len(), "sample count must match node count");
        self.w.iter().zip(vals).map(|(wi, vi)| wi * vi).sum()
    }

    /// ∫_a^b f(r) r^{N-1} dr by panel-clipped Gauss-Legendre (independent of
    /// the node weights; `f` is evaluated inside panels).
    pub fn integrate_range_fn(&self, f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        assert!(a < b, "integration range must be increasing");
        let sa = a.max(self.r_min()).ln();
        let sb = b.min(self.r_max()).ln();
        if sa >= sb {
            return 0.0;
        }
        let n = self.dim as f64;
        let g = |s: f64| {
            let r = s.exp();
            f(r) * (n * s).exp()
        };
        let mut acc = 0.0;
        for i in 0..self.len() - 1 {
            let lo = self.s[i].max(sa);
            let hi = self.s[i + 1].min(sb);
            if lo < hi {
                acc += gauss::gl8(lo, hi, g);
            }
        }
        acc
    }

    /// ∫ f(r) r^{N-1} dr over the whole grid support via the panel route.
    pub fn integrate_fn(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.integrate_range_fn(f, self.r_min(), self.r_max())
    }

    /// Tail-mass estimate beyond r_max for a density |f| ~ C r^{-decay_exp},
    /// given the boundary density value. Used for reported error bars only.
    pub fn tail_estimate(&self, boundary_density: f64, decay_exp: f64) -> f64 {
        let n = self.dim as f64;
        if decay_exp <= n {
            return f64::INFINITY;
        }
        boundary_density.abs() * self.r_max().powf(n) / (decay_exp - n)
    }

    /// True when both grids are the same object or geometrically identical.
    pub fn same_geometry(&self, other: &RadialGrid) -> bool {
        self.dim == other.dim
            && self.len() == other.len()
            && self.r_min() == other.r_min()
            && self.r_max() == other.r_max()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use statrs::function::beta::{beta, beta_reg};

    fn grid7() -> GridRef {
        RadialGrid::make_log_grid(7, DEFAULT_R_MIN, DEFAULT_R_MAX, DEFAULT_POINTS).unwrap()
    }

    #[test]
    fn constructor_echo() {
        let g = grid7();
        assert_eq!(g.len(), 2048);
        assert_eq!(g.r()[0], 1e-4);
        assert_eq!(g.r_max(), 1e3);
        assert!(g.r().windows(2).all(|p| p[1] > p[0]));
        assert!(g.weights().iter().all(|&w| w > 0.0));
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(matches!(
            RadialGrid::make_log_grid(6, 1e-4, 1e3, 2048),
            Err(CoreError::DimensionTooLow(6))
        ));
        assert!(matches!(
            RadialGrid::make_log_grid(7, 1e3, 1e-4, 2048),
            Err(CoreError::InvalidBounds { .. })
        ));
        assert!(matches!(
            RadialGrid::make_log_grid(7, 1e-4, 1e3, 32),
            Err(CoreError::TooFewPoints(32))
        ));
    }

    #[test]
    fn sphere_areas_match_closed_forms() {
        // |S^6| = 16 pi^3 / 15, |S^7| = pi^4 / 3.
        let pi = std::f64::consts::PI;
        assert_relative_eq!(sphere_area(7), 16.0 * pi.powi(3) / 15.0, max_relative = 1e-14);
        assert_relative_eq!(sphere_area(8), pi.powi(4) / 3.0, max_relative = 1e-14);
    }

    #[test]
    fn indicator_integral_matches_power_rule() {
        let g = grid7();
        let val = g.integrate_range_fn(|_| 1.0, 1.0, 2.0);
        let exact = (2f64.powi(7) - 1.0) / 7.0;
        assert_relative_eq!(val, exact, max_relative = 1e-8);
    }

    #[test]
    fn beta_density_matches_untruncated_oracle() {
        // ∫_0^∞ r^6 (1+r^2)^{-5} dr = B(7/2, 3/2)/2; truncation tail ~ 5e-9 rel.
        let g = grid7();
        let vals: Vec<f64> = g.r().iter().map(|&r| (1.0 + r * r).powi(-5)).collect();
        let got = g.integrate_sampled(&vals);
        let oracle = 0.5 * beta(3.5, 1.5);
        assert_relative_eq!(got, oracle, max_relative = 1e-8);
    }

    #[test]
    fn beta_density_matches_truncated_oracle_tightly() {
        // Same density against the incomplete-Beta value on [0, r_max]:
        // with u = r^2/(1+r^2), ∫_0^R = (B(7/2,3/2)/2)·I_u(R)(7/2,3/2).
        let g = grid7();
        let vals: Vec<f64> = g.r().iter().map(|&r| (1.0 + r * r).powi(-5)).collect();
        let got = g.integrate_sampled(&vals);
        let u = g.r_max().powi(2) / (1.0 + g.r_max().powi(2));
        let oracle = 0.5 * beta(3.5, 1.5) * beta_reg(3.5, 1.5, u);
        assert_relative_eq!(got, oracle, max_relative = 1e-10);
    }

    #[test]
    fn higher_dimensions_self_check() {
        for dim in 8..=10 {
            let g = RadialGrid::make_log_grid(dim, 1e-4, 1e3, 1024).unwrap();
            assert_eq!(g.dim(), dim);
        }
    }

    #[test]
    fn tail_estimate_matches_power_law() {
        let g = grid7();
        // density r^{-10}: tail beyond R is R^{-3}/3 = R^7 * R^{-10} / (10 - 7).
        let est = g.tail_estimate(1e3f64.powi(-10), 10.0);
        assert_relative_eq!(est, 1e-9 / 3.0, max_relative = 1e-12);
    }

    proptest! {
        #[test]
        fn range_integral_is_additive(split in 0.01f64..100.0) {
            let g = grid7();
            let f = |r: f64| (1.0 + r * r).powi(-5);
            let whole = g.integrate_range_fn(f, 1e-3, 500.0);
            let s = split.clamp(1.5e-3, 499.0);
            let parts = g.integrate_range_fn(f, 1e-3, s) + g.integrate_range_fn(f, s, 500.0);
            prop_assert!((whole - parts).abs() <= 1e-12 * whole.abs().max(1.0));
        }

        #[test]
        fn sampled_quadrature_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let g = grid7();
            let f: Vec<f64> = g.r().iter().map(|&r| (1.0 + r * r).powi(-5)).collect();
            let p: Vec<f64> = g.r().iter().map(|&r| (1.0 + r * r).powi(-6) * r).collect();
            let combo: Vec<f64> = f.iter().zip(&p).map(|(x, y)| a * x + b * y).collect();
            let lhs = g.integrate_sampled(&combo);
            let rhs = a * g.integrate_sampled(&f) + b * g.integrate_sampled(&p);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (lhs.abs() + rhs.abs()).max(1e-300));
        }
    }
}
