//! Complex radial fields: samples of radially symmetric functions with
//! differentiation, norms, pairings, and CSV serialization.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::CoreError;
use crate::grid::GridRef;
use crate::stencil;

/// Real pairing and norm conventions: all integrals run over R^N, i.e. they
/// include the angular factor |S^{N-1}|.
#[derive(Debug, Clone)]
pub struct RadialField {
    grid: GridRef,
    v: Vec<Complex64>,
}

impl RadialField {
    pub fn zeros(grid: GridRef) -> Self {
        let n = grid.len();
        RadialField {
            grid,
            v: vec![Complex64::ZERO; n],
        }
    }

    pub fn from_values(grid: GridRef, v: Vec<Complex64>) -> Self {
        assert_eq!(grid.len(), v.len(), "value count must equal node count");
        RadialField { grid, v }
    }

    pub fn from_fn(grid: GridRef, f: impl Fn(f64) -> Complex64) -> Self {
        let v = grid.r().iter().map(|&r| f(r)).collect();
        RadialField { grid, v }
    }

    pub fn from_re_fn(grid: GridRef, f: impl Fn(f64) -> f64) -> Self {
        Self::from_fn(grid, |r| Complex64::new(f(r), 0.0))
    }

    pub fn from_re_samples(grid: GridRef, re: &[f64]) -> Self {
        assert_eq!(grid.len(), re.len());
        let v = re.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        RadialField { grid, v }
    }

    pub fn grid(&self) -> &GridRef {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.v
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.v
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.v
    }

    pub fn re_samples(&self) -> Vec<f64> {
        self.v.iter().map(|z| z.re).collect()
    }

    pub fn im_samples(&self) -> Vec<f64> {
        self.v.iter().map(|z| z.im).collect()
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        RadialField {
            grid: self.grid.clone(),
            v: self.v.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn zip(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        assert!(self.grid.same_geometry(&other.grid), "grid mismatch");
        RadialField {
            grid: self.grid.clone(),
            v: self
                .v
                .iter()
                .zip(&other.v)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a - b)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map(|z| c * z)
    }

    pub fn scale_re(&self, c: f64) -> Self {
        self.map(|z| c * z)
    }

    /// self + c * other.
    pub fn axpy(&self, c: Complex64, other: &Self) -> Self {
        self.zip(other, |a, b| a + c * b)
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn is_finite(&self) -> bool {
        self.v.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// d/ds with s = ln r (sixth-order stencils).
    fn deriv_s(&self) -> Vec<Complex64> {
        stencil::apply(&self.v, self.grid.h(), 1)
    }

    /// Radial derivative du/dr.
    pub fn deriv_r(&self) -> Self {
        let ds = self.deriv_s();
        let v = ds
            .into_iter()
            .zip(self.grid.r())
            .map(|(d, &r)| d / r)
            .collect();
        RadialField {
            grid: self.grid.clone(),
            v,
        }
    }

    /// Radial Laplacian Δu = u_rr + (N-1)/r u_r, via log-space stencils
    /// Δu = e^{-2s}(u_ss + (N-2) u_s). Exact on constants by construction;
    /// accuracy is claimed on interior nodes only (the three one-sided rows at
    /// each edge carry larger truncation error).
    pub fn laplacian(&self) -> Self {
        let h = self.grid.h();
        let d1 = stencil::apply(&self.v, h, 1);
        let d2 = stencil::apply(&self.v, h, 2);
        let nm2 = (self.grid.dim() - 2) as f64;
        let v = d1
            .into_iter()
            .zip(d2)
            .zip(self.grid.r())
            .map(|((a, b), &r)| (b + a * nm2) / (r * r))
            .collect();
        RadialField {
            grid: self.grid.clone(),
            v,
        }
    }

    /// Value at an arbitrary radius by quintic Lagrange interpolation in
    /// ln r. Below the first node the first-node value is returned (sampled
    /// fields of interest are flat there); at or beyond the last node the
    /// field is treated as zero (they are decayed there).
    pub fn interp_at(&self, r: f64) -> Complex64 {
        let n = self.grid.len();
        let rr = self.grid.r();
        if r <= rr[0] {
            return self.v[0];
        }
        if r >= rr[n - 1] {
            return Complex64::new(0.0, 0.0);
        }
        let t = (r.ln() - self.grid.s()[0]) / self.grid.h();
        let w = (t.floor() as usize).saturating_sub(2).min(n - 6);
        let x = t - w as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, vk) in self.v[w..w + 6].iter().enumerate() {
            let mut basis = 1.0;
            for m in 0..6 {
                if m != k {
                    basis *= (x - m as f64) / (k as f64 - m as f64);
                }
            }
            acc += vk * basis;
        }
        acc
    }

    /// e^{iθ} λ^{-(N-2)/2} u(·/λ) sampled on the same grid: the dilation that
    /// preserves the homogeneous H¹ norm, with a global phase. Off-node
    /// values come from `interp_at`.
    pub fn dilate(&self, theta: f64, lam: f64) -> Self {
        assert!(lam > 0.0, "scale must be positive");
        let amp = lam.powf(-0.5 * (self.grid.dim() as f64 - 2.0));
        let phase = Complex64::from_polar(amp, theta);
        let v = self
            .grid
            .r()
            .iter()
            .map(|&r| self.interp_at(r / lam) * phase)
            .collect();
        RadialField {
            grid: self.grid.clone(),
            v,
        }
    }

    /// Re ∫ conj(self) · other dx over R^N.
    pub fn pairing_re(&self, other: &Self) -> f64 {
        assert!(self.grid.same_geometry(&other.grid), "grid mismatch");
        let dens: Vec<f64> = self
            .v
            .iter()
            .zip(&other.v)
            .map(|(a, b)| (a.conj() * b).re)
            .collect();
        self.grid.sphere_area() * self.grid.integrate_sampled(&dens)
    }

    /// ∫ conj(self) · other dx over R^N (complex value).
    pub fn pairing(&self, other: &Self) -> Complex64 {
        assert!(self.grid.same_geometry(&other.grid), "grid mismatch");
        let re: Vec<f64> = self
            .v
            .iter()
            .zip(&other.v)
            .map(|(a, b)| (a.conj() * b).re)
            .collect();
        let im: Vec<f64> = self
            .v
            .iter()
            .zip(&other.v)
            .map(|(a, b)| (a.conj() * b).im)
            .collect();
        self.grid.sphere_area()
            * Complex64::new(
                self.grid.integrate_sampled(&re),
                self.grid.integrate_sampled(&im),
            )
    }

    pub fn l2_sq(&self) -> f64 {
        let dens: Vec<f64> = self.v.iter().map(|z| z.norm_sqr()).collect();
        self.grid.sphere_area() * self.grid.integrate_sampled(&dens)
    }

    pub fn l2(&self) -> f64 {
        self.l2_sq().sqrt()
    }

    /// ∫ |du/dr|^2 dx (radial fields carry no angular gradient).
    pub fn h1dot_sq(&self) -> f64 {
        let du = self.deriv_r();
        du.l2_sq()
    }

    pub fn h1dot(&self) -> f64 {
        self.h1dot_sq().sqrt()
    }

    pub fn lp(&self, p: f64) -> Result<f64, CoreError> {
        if !(1.0..f64::INFINITY).contains(&p) {
            return Err(CoreError::Config(format!(
                "L^p norm requires p in [1, inf), got {p}"
            )));
        }
        let dens: Vec<f64> = self.v.iter().map(|z| z.norm().powf(p)).collect();
        Ok((self.grid.sphere_area() * self.grid.integrate_sampled(&dens)).powf(1.0 / p))
    }

    pub fn linf(&self) -> f64 {
        self.v.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Serialize as CSV: `# N=<int> r_max=<float>` comment, `r,Re(u),Im(u)`
    /// header, then one `%.17g`-equivalent row per node.
    pub fn write_csv(&self, path: &Path) -> Result<(), CoreError> {
        let mut out = String::new();
        out.push_str(&format!(
            "# N={} r_max={}\n",
            self.grid.dim(),
            self.grid.r_max()
        ));
        out.push_str("r,Re(u),Im(u)\n");
        for (&r, z) in self.grid.r().iter().zip(&self.v) {
            out.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", r, z.re, z.im));
        }
        let mut file = fs::File::create(path)?;
        file.write_all(out.as_bytes())?;
        Ok(())
    }

    /// Read a field previously written by `write_csv` onto `grid`, verifying
    /// that the nodes match.
    pub fn read_csv(grid: GridRef, path: &Path) -> Result<Self, CoreError> {
        let file = fs::File::open(path)?;
        let mut v = Vec::with_capacity(grid.len());
        let mut idx = 0usize;
        for line in BufReader::new(file).lines() {
            let line = line?;
            if line.starts_with('#') || line.starts_with('r') || line.trim().is_empty() {
                continue;
            }
            let mut cols = line.split(',');
            let parse = |s: Option<&str>| -> Result<f64, CoreError> {
                s.ok_or_else(|| CoreError::Config("short CSV row".into()))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| CoreError::Config(format!("bad CSV number: {e}")))
            };
            let r = parse(cols.next())?;
            let re = parse(cols.next())?;
            let im = parse(cols.next())?;
            if idx >= grid.len() {
                return Err(CoreError::Config("CSV has more rows than grid nodes".into()));
            }
            let rg = grid.r()[idx];
            if ((r - rg) / rg).abs() > 1e-12 {
                return Err(CoreError::Config(format!(
                    "CSV node {idx} = {r} does not match grid node {rg}"
                )));
            }
            v.push(Complex64::new(re, im));
            idx += 1;
        }
        if idx != grid.len() {
            return Err(CoreError::Config(format!(
                "CSV has {idx} rows, grid has {} nodes",
                grid.len()
            )));
        }
        Ok(RadialField { grid, v })
    }
}

/// Seeded Gaussian-bump test field: e^{-(r-r0)^2/sigma^2} (cos phi + i sin phi)
/// with r0 log-uniform inside the grid and sigma proportional to r0.
pub fn random_bump(grid: &GridRef, rng: &mut impl rand::Rng) -> RadialField {
    let lo = (grid.r_min() * 10.0).ln();
    let hi = (grid.r_max() / 30.0).ln();
    let r0 = (lo + (hi - lo) * rng.gen::<f64>()).exp();
    let sigma = r0 * (0.1 + 0.4 * rng.gen::<f64>());
    let phi = 2.0 * std::f64::consts::PI * rng.gen::<f64>();
    let phase = Complex64::new(phi.cos(), phi.sin());
    RadialField::from_fn(grid.clone(), |r| {
        let t = (r - r0) / sigma;
        phase * (-t * t).exp()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{RadialGrid, DEFAULT_POINTS, DEFAULT_R_MAX, DEFAULT_R_MIN};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid7() -> GridRef {
        RadialGrid::make_log_grid(7, DEFAULT_R_MIN, DEFAULT_R_MAX, DEFAULT_POINTS).unwrap()
    }

    /// Nodes where stencil accuracy is claimed: one decade inside each end.
    fn interior(grid: &GridRef) -> Vec<usize> {
        grid.r()
            .iter()
            .enumerate()
            .filter(|(_, &r)| r >= grid.r_min() * 10.0 && r <= grid.r_max() / 10.0)
            .map(|(i, _)| i)
            .collect()
    }

    #[test]
    fn zero_field_norms() {
        let u = RadialField::zeros(grid7());
        assert_eq!(u.l2(), 0.0);
        assert_eq!(u.h1dot(), 0.0);
        assert_eq!(u.lp(2.0).unwrap(), 0.0);
    }

    #[test]
    fn lp_rejects_bad_exponent() {
        let u = RadialField::zeros(grid7());
        assert!(u.lp(0.5).is_err());
        assert!(u.lp(f64::INFINITY).is_err());
    }

    #[test]
    fn laplacian_of_quadratic_is_2n() {
        let g = grid7();
        let u = RadialField::from_re_fn(g.clone(), |r| r * r);
        let lap = u.laplacian();
        for i in interior(&g) {
            assert_relative_eq!(lap.values()[i].re, 14.0, max_relative = 1e-6);
        }
    }

    #[test]
    fn laplacian_of_constant_vanishes_everywhere() {
        let g = grid7();
        let u = RadialField::from_re_fn(g.clone(), |_| 3.25);
        let lap = u.laplacian();
        for &z in lap.values() {
            assert!(z.norm() <= 1e-10);
        }
    }

    #[test]
    fn laplacian_matches_bubble_profile_oracle() {
        // u = (1+r^2)^{-(N-2)/2}  =>  Δu = -N(N-2)(1+r^2)^{-(N+2)/2}.
        let g = grid7();
        let u = RadialField::from_re_fn(g.clone(), |r| (1.0 + r * r).powf(-2.5));
        let lap = u.laplacian();
        for i in interior(&g) {
            let r = g.r()[i];
            let exact = -35.0 * (1.0 + r * r).powf(-4.5);
            assert_relative_eq!(lap.values()[i].re, exact, max_relative = 1e-5);
        }
    }

    #[test]
    fn radial_derivative_matches_analytic() {
        let g = grid7();
        let u = RadialField::from_re_fn(g.clone(), |r| (1.0 + r * r).powf(-2.5));
        let du = u.deriv_r();
        for i in interior(&g) {
            let r = g.r()[i];
            let exact = -5.0 * r * (1.0 + r * r).powf(-3.5);
            assert_relative_eq!(du.values()[i].re, exact, max_relative = 1e-6, epsilon = 1e-14);
        }
    }

    #[test]
    fn h1dot_two_routes_agree() {
        // ∫|∇u|² computed from du/dr versus the integration-by-parts route
        // -<u, Δu> on a smooth decaying field.
        let g = grid7();
        let u = RadialField::from_fn(g.clone(), |r| {
            let bump = (-(r - 1.0) * (r - 1.0) / 0.16).exp();
            Complex64::new(bump, 0.3 * bump)
        });
        let a = u.h1dot_sq();
        let b = -u.pairing_re(&u.laplacian());
        assert_relative_eq!(a, b, max_relative = 1e-6);
    }

    #[test]
    fn laplacian_duality_on_compact_fields() {
        let g = grid7();
        let u = RadialField::from_re_fn(g.clone(), |r| (-(r - 0.5) * (r - 0.5) / 0.04).exp());
        let v = RadialField::from_re_fn(g.clone(), |r| (-(r - 2.0) * (r - 2.0) / 0.25).exp());
        let lhs = u.laplacian().pairing_re(&v);
        let rhs = u.pairing_re(&v.laplacian());
        let scale = u.h1dot() * v.h1dot();
        assert!((lhs - rhs).abs() <= 1e-6 * scale, "defect {}", (lhs - rhs).abs() / scale);
    }

    #[test]
    fn pairing_is_conjugate_symmetric_and_sesquilinear() {
        let g = grid7();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let u = random_bump(&g, &mut rng);
        let v = random_bump(&g, &mut rng);
        assert_relative_eq!(u.pairing_re(&v), v.pairing_re(&u), max_relative = 1e-12);
        let c = Complex64::new(0.3, -1.2);
        let lhs = u.pairing(&v.scale(c));
        let rhs = c * u.pairing(&v);
        assert_relative_eq!(lhs.re, rhs.re, max_relative = 1e-12, epsilon = 1e-300);
        assert_relative_eq!(lhs.im, rhs.im, max_relative = 1e-12, epsilon = 1e-300);
    }

    #[test]
    fn csv_round_trip_is_lossless() {
        let g = grid7();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u = random_bump(&g, &mut rng);
        let dir = std::env::temp_dir().join("hartree_lab_field_csv_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("u.csv");
        u.write_csv(&path).unwrap();
        let v = RadialField::read_csv(g, &path).unwrap();
        for (a, b) in u.values().iter().zip(v.values()) {
            assert_eq!(a, b);
        }
        let first = std::fs::read(&path).unwrap();
        u.write_csv(&path).unwrap();
        assert_eq!(first, std::fs::read(&path).unwrap());
    }
}
