//! Riesz-potential convolution |x|^{-4} * f for radial functions in R^N.
//!
//! For radial f the convolution reduces to a one-dimensional integral
//!     (|x|^{-4} * f)(r) = ∫_0^∞ K(r, s) f(s) s^{N-1} ds,
//!     K(r, s) = |S^{N-2}| ∫_0^π (r² + s² - 2 r s cos ϑ)^{-2} sin^{N-2}ϑ dϑ.
//!
//! The angular factor is integrated by Gauss-Legendre panels refined
//! geometrically toward ϑ = 0, where the integrand peaks with width of order
//! |r-s|/(r+s). The radial quadrature is the grid trapezoid away from the
//! diagonal; K(r, ·) has a |r-s|^{N-6} derivative kink at s = r that plain
//! node sampling would feel, so a block of ±BAND nodes around the diagonal is
//! handled by product integration (panel-exact kernel integration against a
//! quintic interpolant of f in ln s), and the trapezoid gets Euler-Maclaurin
//! first-derivative corrections at the block edges. All coefficients fold
//! into one cached matrix, so applying the convolution is a matrix-vector
//! product.

use rayon::prelude::*;

use crate::error::CoreError;
use crate::gauss;
use crate::grid::{sphere_area, GridRef, RadialGrid};
use crate::stencil::fd_weights;

/// Half-width (in nodes) of the product-integrated diagonal block.
const BAND: usize = 30;
/// Angular subdivision engages below this relative separation.
const SUBDIVIDE_BELOW: f64 = 0.5;
/// Smallest resolved angular feature width.
const FEATURE_FLOOR: f64 = 1e-9;

/// Angular kernel K(r, s). Symmetry in (r, s) is exact in floating point:
/// the evaluation depends on the pair only through (r-s)², r·s and r+s.
pub fn kernel_eval(dim: usize, r: f64, s: f64) -> f64 {
    let delta2 = (r - s) * (r - s);
    let rs2 = 2.0 * r * s;
    let p = dim as i32 - 2;
    let f = |t: f64| {
        let c = t.cos();
        let sin2 = (1.0 - c * c).max(0.0);
        let d2 = delta2 + rs2 * (1.0 - c);
        let sin_pow = if p % 2 == 0 {
            sin2.powi(p / 2)
        } else {
            sin2.powi((p - 1) / 2) * sin2.sqrt()
        };
        sin_pow / (d2 * d2)
    };
    let dhat = ((r - s) / (r + s)).abs();
    let mut acc = 0.0;
    if dhat >= SUBDIVIDE_BELOW {
        let panels = 4;
        let step = std::f64::consts::PI / panels as f64;
        for i in 0..panels {
            acc += gauss::gl16(i as f64 * step, (i + 1) as f64 * step, f);
        }
    } else {
        let feature = dhat.max(FEATURE_FLOOR);
        let mut hi = std::f64::consts::PI;
        while hi > feature {
            acc += gauss::gl16(0.5 * hi, hi, f);
            hi *= 0.5;
        }
        acc += gauss::gl16(0.0, hi, f);
    }
    sphere_area(dim - 1) * acc
}

/// Cached radial convolution operator for one grid.
#[derive(Debug, Clone)]
pub struct RieszKernel {
    grid: GridRef,
    /// Row-major coefficients: conv_i = Σ_j k[i·n + j] f_j.
    k: Vec<f64>,
}

impl RieszKernel {
    /// Assemble the quadrature matrix. This is the expensive step; the
    /// operator is immutable afterwards and safe to share.
    pub fn build(grid: GridRef) -> Self {
        let n = grid.len();
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| build_row(&grid, i))
            .collect();
        let mut k = Vec::with_capacity(n * n);
        for row in rows {
            k.extend(row);
        }
        RieszKernel { grid, k }
    }

    pub fn grid(&self) -> &GridRef {
        &self.grid
    }

    /// Quadrature coefficients of row `i`: conv_i = Σ_j row(i)_j · f_j.
    /// Exposed so dense operators can absorb the convolution directly.
    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.grid.len();
        &self.k[i * n..(i + 1) * n]
    }

    /// g(r) = (|x|^{-4} * f)(r) for real node samples of f. Warns on inputs
    /// that do not decay at the outer boundary, where truncation bites.
    pub fn convolve(&self, f: &[f64]) -> Result<Vec<f64>, CoreError> {
        let n = self.grid.len();
        if f.len() != n {
            return Err(CoreError::DimensionMismatch {
                left: "kernel grid",
                right: "input samples",
            });
        }
        if f.iter().any(|x| !x.is_finite()) {
            return Err(CoreError::NonFinite("riesz_convolve input"));
        }
        let fmax = f.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
        if fmax > 0.0 && f[n - 1].abs() > 1e-8 * fmax {
            eprintln!(
                "warning: riesz_convolve input is not small at r_max \
                 (|f(r_max)| = {:.3e}, max|f| = {:.3e}); truncation error may dominate",
                f[n - 1].abs(),
                fmax
            );
        }
        Ok((0..n)
            .map(|i| {
                let row = &self.k[i * n..(i + 1) * n];
                row.iter().zip(f).map(|(a, b)| a * b).sum()
            })
            .collect())
    }
}

fn build_row(grid: &RadialGrid, i: usize) -> Vec<f64> {
    let n = grid.len();
    let dim = grid.dim();
    let h = grid.h();
    let r = grid.r();
    let s = grid.s();
    let ri = r[i];
    let rn = |j: usize| r[j].powi(dim as i32);

    let mut row = vec![0.0; n];
    let lo = i.saturating_sub(BAND);
    let hi = (i + BAND).min(n - 1);

    // Trapezoid over the smooth segments [0, lo] and [hi, n-1]; segment
    // endpoints carry half weight. A segment of zero length contributes
    // nothing.
    if lo > 0 {
        for j in 0..=lo {
            let mut w = h * rn(j);
            if j == 0 || j == lo {
                w *= 0.5;
            }
            row[j] += w * kernel_eval(dim, ri, r[j]);
        }
    }
    if hi < n - 1 {
        for j in hi..n {
            let mut w = h * rn(j);
            if j == hi || j == n - 1 {
                w *= 0.5;
            }
            row[j] += w * kernel_eval(dim, ri, r[j]);
        }
    }

    // Euler-Maclaurin h²/12 derivative corrections at the interior segment
    // edges. The far endpoints carry decayed integrands and are skipped, as
    // are rows whose segments are too short for the one-sided stencils.
    if lo >= 4 {
        let back = fd_weights(0.0, &[0.0, -1.0, -2.0, -3.0, -4.0], 1);
        for (k, &c) in back.iter().enumerate() {
            let j = lo - k;
            row[j] -= h / 12.0 * c * rn(j) * kernel_eval(dim, ri, r[j]);
        }
    }
    if hi + 4 < n {
        let fwd = fd_weights(0.0, &[0.0, 1.0, 2.0, 3.0, 4.0], 1);
        for (k, &c) in fwd.iter().enumerate() {
            let j = hi + k;
            row[j] += h / 12.0 * c * rn(j) * kernel_eval(dim, ri, r[j]);
        }
    }

    // Product integration over the diagonal block: on each panel
    // [s_j, s_{j+1}] integrate K(r_i, e^σ) e^{Nσ} against the quintic
    // Lagrange interpolant of f through the six nearest nodes.
    for j in lo..hi {
        let w = j.saturating_sub(2).min(n - 6);
        let mut nodes = [0.0; 6];
        for (k, nk) in nodes.iter_mut().enumerate() {
            *nk = (w + k) as f64 - j as f64;
        }
        for (x, gw) in gauss::gl16_points(0.0, 1.0) {
            let sg = s[j] + x * h;
            let kv = kernel_eval(dim, ri, sg.exp()) * (dim as f64 * sg).exp();
            for (k, &nk) in nodes.iter().enumerate() {
                let mut basis = 1.0;
                for (m, &nm) in nodes.iter().enumerate() {
                    if m != k {
                        basis *= (x - nm) / (nk - nm);
                    }
                }
                row[w + k] += h * gw * kv * basis;
            }
        }
    }
    row
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::random_bump;
    use crate::grid::RadialGrid;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use once_cell::sync::Lazy;
    use proptest::prelude::*;
    use rand::SeedableRng;

    static GRID: Lazy<GridRef> =
        Lazy::new(|| RadialGrid::make_log_grid(7, 1e-4, 1e3, 2048).expect("grid"));
    static KERNEL: Lazy<RieszKernel> = Lazy::new(|| RieszKernel::build(GRID.clone()));

    /// Closed-form value of |x|^{-4} * (1+|x|²)^{-(N-2)} in dimension N:
    /// the profile is C_N (1+r²)^{-2} with C_N = π^{N/2} Γ((N-4)/2) / Γ(N-2).
    fn c_dim(dim: usize) -> f64 {
        let nf = dim as f64;
        let pi = std::f64::consts::PI;
        // Γ((N-4)/2) and Γ(N-2) via the statrs gamma function.
        let g1 = statrs::function::gamma::gamma((nf - 4.0) / 2.0);
        let g2 = statrs::function::gamma::gamma(nf - 2.0);
        pi.powf(nf / 2.0) * g1 / g2
    }

    #[test]
    fn kernel_is_symmetric_in_its_arguments() {
        let pairs = [
            (0.3, 7.1),
            (1.0, 1.0078),
            (2.5e-3, 1.9e2),
            (40.0, 41.0),
            (1e-4, 1e3),
        ];
        for &(a, b) in &pairs {
            let kab = kernel_eval(7, a, b);
            let kba = kernel_eval(7, b, a);
            assert!(
                ((kab - kba) / kab).abs() <= 1e-12,
                "asymmetry at ({a}, {b}): {kab} vs {kba}"
            );
        }
    }

    #[test]
    fn kernel_homogeneity_degree_minus_four() {
        for &(r, s) in &[(0.7, 2.2), (3.0, 3.05), (0.02, 15.0)] {
            let base = kernel_eval(7, r, s);
            for &a in &[2.0f64, 10.0] {
                let scaled = kernel_eval(7, a * r, a * s);
                assert_relative_eq!(scaled, base / a.powi(4), max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn kernel_point_source_limit() {
        // K(r, s) → |S^{N-1}| r^{-4} as s → 0.
        for &r in &[0.5, 1.0, 20.0] {
            let k = kernel_eval(7, r, 1e-8 * r);
            assert_relative_eq!(k, sphere_area(7) / r.powi(4), max_relative = 1e-6);
        }
    }

    #[test]
    fn convolving_zero_gives_zero() {
        let g = KERNEL.convolve(&vec![0.0; GRID.len()]).unwrap();
        assert!(g.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn bubble_profile_convolution_matches_closed_form() {
        // f = (1+r²)^{-(N-2)} has conv f = C_N (1+r²)^{-2} exactly.
        let f: Vec<f64> = GRID.r().iter().map(|&r| (1.0 + r * r).powi(-5)).collect();
        let g = KERNEL.convolve(&f).unwrap();
        let c = c_dim(7);
        let mut worst = 0.0f64;
        for (j, &r) in GRID.r().iter().enumerate() {
            let exact = c / ((1.0 + r * r) * (1.0 + r * r));
            let rel = ((g[j] - exact) / exact).abs();
            worst = worst.max(rel);
        }
        assert!(worst <= 1e-7, "worst relative error {worst:.3e}");
    }

    #[test]
    fn bubble_profile_convolution_matches_closed_form_dim_nine() {
        let grid = RadialGrid::make_log_grid(9, 1e-4, 1e3, 1024).expect("grid");
        let kernel = RieszKernel::build(grid.clone());
        let f: Vec<f64> = grid.r().iter().map(|&r| (1.0 + r * r).powi(-7)).collect();
        let g = kernel.convolve(&f).unwrap();
        let c = c_dim(9);
        for (j, &r) in grid.r().iter().enumerate() {
            let exact = c / ((1.0 + r * r) * (1.0 + r * r));
            assert_relative_eq!(g[j], exact, max_relative = 1e-6);
        }
    }

    fn fitted_slope(r: &[f64], g: &[f64], r_lo: f64, r_hi: f64) -> f64 {
        // least-squares slope of ln g against ln r on [r_lo, r_hi]
        let pts: Vec<(f64, f64)> = r
            .iter()
            .zip(g)
            .filter(|(&ri, &gi)| ri >= r_lo && ri <= r_hi && gi > 0.0)
            .map(|(&ri, &gi)| (ri.ln(), gi.ln()))
            .collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        sxy / sxx
    }

    #[test]
    fn far_field_slope_for_rapidly_decaying_source() {
        // f ~ r^{-10} decays faster than r^{-N}: conv inherits the r^{-4}
        // point-source far field.
        let f: Vec<f64> = GRID.r().iter().map(|&r| (1.0 + r * r).powi(-5)).collect();
        let g = KERNEL.convolve(&f).unwrap();
        let slope = fitted_slope(GRID.r(), &g, 30.0, 300.0);
        assert_abs_diff_eq!(slope, -4.0, epsilon = 0.05);
    }

    #[test]
    fn far_field_slope_for_slowly_decaying_source() {
        // f ~ r^{-6} decays slower than r^{-N}: conv ~ r^{N-4-6} = r^{-3}.
        let f: Vec<f64> = GRID
            .r()
            .iter()
            .map(|&r| (1.0 + r * r).powf(-3.0))
            .collect();
        let g = KERNEL.convolve(&f).unwrap();
        let slope = fitted_slope(GRID.r(), &g, 50.0, 400.0);
        assert_abs_diff_eq!(slope, -3.0, epsilon = 0.05);
    }

    #[test]
    fn rescaled_input_matches_rescaled_output_on_aligned_nodes() {
        // For the dilation-normalized square λ^{-(N-2)} f(·/λ) the degree -4
        // kernel gives conv at r equal to λ^{-2} (conv f)(r/λ). With
        // λ = e^{m h} the nodes r_j/λ are again grid nodes, so the identity
        // can be checked without interpolation.
        let h = GRID.h();
        let m = (3.0 / h).round() as usize;
        let lam = (m as f64 * h).exp();
        let amp = lam.powi(-5);
        let f: Vec<f64> = GRID.r().iter().map(|&r| (1.0 + r * r).powi(-5)).collect();
        let f_scaled: Vec<f64> = GRID
            .r()
            .iter()
            .map(|&r| {
                let x = r / lam;
                amp * (1.0 + x * x).powi(-5)
            })
            .collect();
        let g = KERNEL.convolve(&f).unwrap();
        let g_scaled = KERNEL.convolve(&f_scaled).unwrap();
        let n = GRID.len();
        for j in m..n {
            // r_j / λ = r_{j-m}; both sides must see a converged integral, so
            // stop where the scaled side starts missing tail mass beyond
            // r_max/λ (its far field is r^{-4}, the omitted tail ~ r_ref^{-7}).
            if GRID.r()[j - m] > 15.0 {
                break;
            }
            assert_relative_eq!(
                g_scaled[j],
                g[j - m] / (lam * lam),
                max_relative = 1e-6
            );
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn convolution_is_linear(seed in 0u64..1000, a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let u = random_bump(&GRID, &mut rng);
            let v = random_bump(&GRID, &mut rng);
            let fu: Vec<f64> = u.re_samples();
            let fv: Vec<f64> = v.re_samples();
            let combo: Vec<f64> = fu.iter().zip(&fv).map(|(x, y)| a * x + b * y).collect();
            let gu = KERNEL.convolve(&fu).unwrap();
            let gv = KERNEL.convolve(&fv).unwrap();
            let gc = KERNEL.convolve(&combo).unwrap();
            let scale = gu.iter().chain(&gv).fold(0.0f64, |m, &x| m.max(x.abs())).max(1e-300);
            for j in 0..GRID.len() {
                let lin = a * gu[j] + b * gv[j];
                prop_assert!((gc[j] - lin).abs() <= 1e-10 * scale * (1.0 + a.abs() + b.abs()));
            }
        }

        #[test]
        fn convolution_preserves_positivity(seed in 0u64..1000) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let u = random_bump(&GRID, &mut rng);
            // |u|² is nonnegative and resolved by construction
            let f: Vec<f64> = u.values().iter().map(|z| z.norm_sqr()).collect();
            let g = KERNEL.convolve(&f).unwrap();
            for (j, &gj) in g.iter().enumerate() {
                prop_assert!(gj >= 0.0, "negative convolution {gj:.3e} at node {j}");
            }
        }
    }
}
