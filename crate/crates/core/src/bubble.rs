//! The stationary bubble profile, its scaling family, and the handful of
//! integrals of it that the reduced dynamics depends on.
//!
//! The profile is W(r) = c₀ (1+r²)^{-(N-2)/2}. The amplitude c₀ is never
//! hard-coded: it is fitted by requiring the stationarity ratio
//! ρ(r) = (-ΔW̃) / ((|x|^{-4}*W̃²) W̃) of the unit-amplitude profile W̃ to be
//! constant, which the cubic nonlinearity turns into c₀² = ρ. All generator
//! fields (ΛW for the gradient-norm scaling, Λ₀W for the mass scaling) use
//! analytic derivatives of the closed form, not finite differences.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::CoreError;
use crate::field::RadialField;
use crate::grid::GridRef;
use crate::kernel::RieszKernel;

/// Radial window on which the stationarity ratio must be flat.
pub const RATIO_WINDOW: (f64, f64) = (1e-2, 1e2);
/// Maximum tolerated relative spread of the stationarity ratio.
pub const RATIO_SPREAD_TOL: f64 = 1e-5;

/// Result of the amplitude fit: the amplitude and the achieved flatness of
/// the stationarity ratio, kept for reporting.
#[derive(Debug, Clone, Copy)]
pub struct AmplitudeFit {
    pub c0: f64,
    pub spread: f64,
}

/// Fit the amplitude of the stationary profile on the kernel's grid.
///
/// Computes ρ(r) = (-ΔW̃) / ((|x|^{-4}*W̃²) W̃) with the discrete Laplacian
/// and the cached convolution, so a passing fit exercises the whole radial
/// pipeline. Aborts if ρ is not constant on [1e-2, 1e2].
pub fn fit_amplitude(kernel: &RieszKernel) -> Result<AmplitudeFit, CoreError> {
    let grid = kernel.grid();
    let a = (grid.dim() as f64 - 2.0) / 2.0;
    let w_tilde = RadialField::from_re_fn(grid.clone(), |r| (1.0 + r * r).powf(-a));
    let lap = w_tilde.laplacian();
    let conv = kernel.convolve(
        &w_tilde
            .values()
            .iter()
            .map(|z| z.re * z.re)
            .collect::<Vec<_>>(),
    )?;

    let mut sum = 0.0;
    let mut count = 0usize;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for (j, &r) in grid.r().iter().enumerate() {
        if r < RATIO_WINDOW.0 || r > RATIO_WINDOW.1 {
            continue;
        }
        let rho = -lap.values()[j].re / (conv[j] * w_tilde.values()[j].re);
        sum += rho;
        count += 1;
        min = min.min(rho);
        max = max.max(rho);
    }
    let mean = sum / count as f64;
    let spread = (max - min) / mean;
    if !(spread.abs() <= RATIO_SPREAD_TOL) {
        return Err(CoreError::AmplitudeNotConstant {
            min,
            max,
            spread,
        });
    }
    Ok(AmplitudeFit {
        c0: mean.sqrt(),
        spread,
    })
}

/// The stationary bubble: dimension and fitted amplitude. Profile values and
/// scaling-generator profiles come from closed forms.
#[derive(Debug, Clone, Copy)]
pub struct Bubble {
    dim: usize,
    c0: f64,
}

impl Bubble {
    pub fn fit(kernel: &RieszKernel) -> Result<Self, CoreError> {
        let fit = fit_amplitude(kernel)?;
        Ok(Bubble {
            dim: kernel.grid().dim(),
            c0: fit.c0,
        })
    }

    pub fn from_amplitude(dim: usize, c0: f64) -> Self {
        Bubble { dim, c0 }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    fn a(&self) -> f64 {
        (self.dim as f64 - 2.0) / 2.0
    }

    /// W(r) = c₀ (1+r²)^{-(N-2)/2}.
    pub fn w(&self, r: f64) -> f64 {
        self.c0 * (1.0 + r * r).powf(-self.a())
    }

    /// W_λ(r) = λ^{-(N-2)/2} W(r/λ), the gradient-norm preserving rescaling.
    pub fn w_lambda(&self, r: f64, lam: f64) -> f64 {
        lam.powf(-self.a()) * self.w(r / lam)
    }

    /// ΛW = ((N-2)/2 + r∂_r) W = c₀ a (1-r²)(1+r²)^{-a-1}, a=(N-2)/2.
    pub fn lambda_w_profile(&self, r: f64) -> f64 {
        let a = self.a();
        self.c0 * a * (1.0 - r * r) * (1.0 + r * r).powf(-a - 1.0)
    }

    /// Λ₀W = (N/2 + r∂_r) W = ΛW + W.
    pub fn lambda0_w_profile(&self, r: f64) -> f64 {
        self.lambda_w_profile(r) + self.w(r)
    }

    /// Analytic ΔW = 2 a c₀ (2(a+1)r² - N(1+r²)) (1+r²)^{-a-2}.
    pub fn delta_w_profile(&self, r: f64) -> f64 {
        let a = self.a();
        let t = 1.0 + r * r;
        2.0 * a * self.c0 * (2.0 * (a + 1.0) * r * r - self.dim as f64 * t) * t.powf(-a - 2.0)
    }

    /// Analytic Δ(ΛW) = -4 c₀ a(a+1)(a+2) (1-r²)(1+r²)^{-a-3}.
    pub fn delta_lambda_w_profile(&self, r: f64) -> f64 {
        let a = self.a();
        -4.0 * self.c0 * a * (a + 1.0) * (a + 2.0) * (1.0 - r * r)
            * (1.0 + r * r).powf(-a - 3.0)
    }

    pub fn field(&self, grid: &GridRef) -> RadialField {
        RadialField::from_re_fn(grid.clone(), |r| self.w(r))
    }

    /// e^{iθ} W_λ sampled on the grid.
    pub fn rescaled(&self, grid: &GridRef, theta: f64, lam: f64) -> RadialField {
        let phase = Complex64::from_polar(1.0, theta);
        RadialField::from_fn(grid.clone(), |r| phase * self.w_lambda(r, lam))
    }

    pub fn lambda_w(&self, grid: &GridRef) -> RadialField {
        RadialField::from_re_fn(grid.clone(), |r| self.lambda_w_profile(r))
    }

    pub fn lambda0_w(&self, grid: &GridRef) -> RadialField {
        RadialField::from_re_fn(grid.clone(), |r| self.lambda0_w_profile(r))
    }

    /// e^{iθ} (ΛW)_λ sampled on the grid.
    pub fn lambda_w_rescaled(&self, grid: &GridRef, theta: f64, lam: f64) -> RadialField {
        let phase = Complex64::from_polar(1.0, theta);
        let a = self.a();
        RadialField::from_fn(grid.clone(), |r| {
            phase * lam.powf(-a) * self.lambda_w_profile(r / lam)
        })
    }
}

/// The explicit integrals of the bubble that drive the reduced dynamics,
/// plus the spectral pair (ν, M) once the eigensystem has been solved.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Constants {
    pub dim: usize,
    pub c0: f64,
    /// ∫ W² dx.
    pub c1: f64,
    /// ∫ (|x|^{-4}*W²) W dx.
    pub c2: f64,
    /// -∫ [(|x|^{-4}*W²) ΛW + 2(|x|^{-4}*(W ΛW)) W] dx.
    pub c3: f64,
    /// Alias of c1 (the squared mass of the bubble).
    pub norm_w2: f64,
    /// (2 c1 / (3 (N-6) c2))^{2/(N-6)}.
    pub kappa: f64,
    pub nu: Option<f64>,
    pub m: Option<f64>,
}

impl Constants {
    pub fn with_spectrum(mut self, nu: f64, m: f64) -> Self {
        self.nu = Some(nu);
        self.m = Some(m);
        self
    }
}

/// Compute the explicit constants with dual-route cross-checks.
///
/// c2 is the direct convolution integral, cross-checked against the same
/// integral rewritten through -ΔW (evaluated from the analytic Laplacian of
/// the profile). c3 is the direct two-convolution integral, cross-checked
/// against the quadrature of the analytic Δ(ΛW). Disagreement beyond 1e-5
/// relative aborts: it means the discretization cannot be trusted.
pub fn constants(kernel: &RieszKernel) -> Result<Constants, CoreError> {
    let grid = kernel.grid();
    let dim = grid.dim();
    let nf = dim as f64;
    let bubble = Bubble::fit(kernel)?;

    let w = bubble.field(grid);
    let lw = bubble.lambda_w(grid);
    let w_re = w.re_samples();
    let lw_re = lw.re_samples();

    let w2: Vec<f64> = w_re.iter().map(|x| x * x).collect();
    let wlw: Vec<f64> = w_re.iter().zip(&lw_re).map(|(x, y)| x * y).collect();
    let conv_w2 = kernel.convolve(&w2)?;
    let conv_wlw = kernel.convolve(&wlw)?;

    let sphere = grid.sphere_area();
    let c1 = sphere * grid.integrate_sampled(&w2);
    let c2_direct = sphere
        * grid.integrate_sampled(
            &conv_w2
                .iter()
                .zip(&w_re)
                .map(|(a, b)| a * b)
                .collect::<Vec<_>>(),
        );
    let c2_parts = sphere
        * grid.integrate_fn(|r| -bubble.delta_w_profile(r));
    let gap2 = ((c2_direct - c2_parts) / c2_direct).abs();
    if gap2 > 1e-5 {
        return Err(CoreError::CrossCheckFailed {
            name: "c2 routes",
            a: c2_direct,
            b: c2_parts,
            gap: gap2,
            tol: 1e-5,
        });
    }

    let c3_density: Vec<f64> = conv_w2
        .iter()
        .zip(&lw_re)
        .zip(conv_wlw.iter().zip(&w_re))
        .map(|((cw2, lwj), (cwlw, wj))| -(cw2 * lwj + 2.0 * cwlw * wj))
        .collect();
    let c3_direct = sphere * grid.integrate_sampled(&c3_density);
    let c3_parts = sphere * grid.integrate_fn(|r| bubble.delta_lambda_w_profile(r));
    let gap3 = ((c3_direct - c3_parts) / c3_direct).abs();
    if gap3 > 1e-5 {
        return Err(CoreError::CrossCheckFailed {
            name: "c3 routes",
            a: c3_direct,
            b: c3_parts,
            gap: gap3,
            tol: 1e-5,
        });
    }

    let kappa = (2.0 * c1 / (3.0 * (nf - 6.0) * c2_direct)).powf(2.0 / (nf - 6.0));

    Ok(Constants {
        dim,
        c0: bubble.c0(),
        c1,
        c2: c2_direct,
        c3: c3_direct,
        norm_w2: c1,
        kappa,
        nu: None,
        m: None,
    })
}
