//! Wigner functions on rectangular phase-space grids.
//!
//! Normalization is ∫∫W dx dp = 1 (vacuum peak 1/π). The closed forms for the
//! odd cat and the photon-subtracted squeezed vacuum carry that 1/π explicitly;
//! the unit tests pin it down through W(0,0) = −1/π for odd states and through
//! agreement with the Fock-basis kernel.

use crate::error::{invalid, Error, Result};
use crate::fock::DensityMatrix;
use crate::special::{laguerre_all, ln_factorials};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};
use std::path::Path;

/// Allowed |∫∫W − 1| for a state evaluated on a grid.
pub const GRID_NORM_TOL: f64 = 1e-4;
/// Allowed fraction of ∫∫|W| pushed off the grid by a convolution.
pub const CONVOLUTION_LOSS_TOL: f64 = 1e-4;
/// Gaussian kernels are cut at this many standard deviations.
const KERNEL_SIGMAS: f64 = 8.0;

/// Uniform rectangular grid; nodes include both bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpaceGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub nx: usize,
    pub np: usize,
}

impl Default for PhaseSpaceGrid {
    fn default() -> Self {
        Self::symmetric(5.0, 201).expect("default grid is valid")
    }
}

impl PhaseSpaceGrid {
    pub fn new(x_min: f64, x_max: f64, p_min: f64, p_max: f64, nx: usize, np: usize) -> Result<Self> {
        let g = Self { x_min, x_max, p_min, p_max, nx, np };
        g.validate()?;
        Ok(g)
    }

    /// Square grid [−h, h]² with `n` points per axis.
    pub fn symmetric(half_width: f64, n: usize) -> Result<Self> {
        Self::new(-half_width, half_width, -half_width, half_width, n, n)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.x_min, self.x_max, self.p_min, self.p_max].iter().all(|v| v.is_finite());
        if !finite || self.x_min >= self.x_max || self.p_min >= self.p_max {
            return Err(invalid(format!("bad grid bounds {self:?}")));
        }
        if self.nx < 3 || self.np < 3 {
            return Err(invalid("grid needs at least 3 points per axis"));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    pub fn dp(&self) -> f64 {
        (self.p_max - self.p_min) / (self.np - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    pub fn p(&self, j: usize) -> f64 {
        self.p_min + j as f64 * self.dp()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.x(i)).collect()
    }

    pub fn ps(&self) -> Vec<f64> {
        (0..self.np).map(|j| self.p(j)).collect()
    }

    pub fn len(&self) -> usize {
        self.nx * self.np
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Same spacing, extended by `cells` nodes on every side.
    pub fn padded(&self, cells: usize) -> Self {
        let (dx, dp) = (self.dx(), self.dp());
        let c = cells as f64;
        Self {
            x_min: self.x_min - c * dx,
            x_max: self.x_max + c * dx,
            p_min: self.p_min - c * dp,
            p_max: self.p_max + c * dp,
            nx: self.nx + 2 * cells,
            np: self.np + 2 * cells,
        }
    }

    /// Index offsets placing `inner` on this grid's nodes, if its nodes coincide with ours.
    fn offsets_of(&self, inner: &PhaseSpaceGrid) -> Option<(usize, usize)> {
        let tol = 1e-9;
        if (self.dx() - inner.dx()).abs() > tol * self.dx() || (self.dp() - inner.dp()).abs() > tol * self.dp() {
            return None;
        }
        let ox = (inner.x_min - self.x_min) / self.dx();
        let op = (inner.p_min - self.p_min) / self.dp();
        if ox < -tol || op < -tol || (ox - ox.round()).abs() > 1e-6 || (op - op.round()).abs() > 1e-6 {
            return None;
        }
        let (ox, op) = (ox.round() as usize, op.round() as usize);
        (ox + inner.nx <= self.nx && op + inner.np <= self.np).then_some((ox, op))
    }

    fn evaluate(&self, f: impl Fn(f64, f64) -> f64 + Sync) -> WignerGrid {
        let np = self.np;
        let values = (0..self.len())
            .into_par_iter()
            .map(|k| f(self.x(k / np), self.p(k % np)))
            .collect();
        WignerGrid { grid: *self, values }
    }
}

/// W(x, p) sampled on a grid, stored x-major (`values[i * np + j]`).
#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    grid: PhaseSpaceGrid,
    values: Vec<f64>,
}

impl WignerGrid {
    pub fn from_values(grid: PhaseSpaceGrid, values: Vec<f64>) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.len() {
            return Err(invalid(format!("expected {} values, got {}", grid.len(), values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("Wigner values"));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &PhaseSpaceGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.np + j]
    }

    /// ∫∫W dx dp.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.dx() * self.grid.dp()
    }

    /// Bilinear interpolation; zero outside the grid.
    pub fn interpolate(&self, x: f64, p: f64) -> f64 {
        let g = &self.grid;
        let u = (x - g.x_min) / g.dx();
        let v = (p - g.p_min) / g.dp();
        let max_u = (g.nx - 1) as f64;
        let max_v = (g.np - 1) as f64;
        if !(0.0..=max_u).contains(&u) || !(0.0..=max_v).contains(&v) {
            return 0.0;
        }
        let i = (u.floor() as usize).min(g.nx - 2);
        let j = (v.floor() as usize).min(g.np - 2);
        let (fu, fv) = (u - i as f64, v - j as f64);
        (1.0 - fu) * (1.0 - fv) * self.value(i, j)
            + fu * (1.0 - fv) * self.value(i + 1, j)
            + (1.0 - fu) * fv * self.value(i, j + 1)
            + fu * fv * self.value(i + 1, j + 1)
    }

    /// Separable six-point Lagrange interpolation (local error O(h⁶)); zero outside the grid.
    pub fn interpolate_smooth(&self, x: f64, p: f64) -> f64 {
        let g = &self.grid;
        let u = (x - g.x_min) / g.dx();
        let v = (p - g.p_min) / g.dp();
        if !(0.0..=(g.nx - 1) as f64).contains(&u) || !(0.0..=(g.np - 1) as f64).contains(&v) {
            return 0.0;
        }
        let (i0, wu) = lagrange6(u, g.nx);
        let (j0, wv) = lagrange6(v, g.np);
        let mut acc = 0.0;
        for (a, wa) in wu.iter().enumerate() {
            let row = &self.values[(i0 + a) * g.np + j0..(i0 + a) * g.np + j0 + 6];
            acc += wa * row.iter().zip(&wv).map(|(w, b)| w * b).sum::<f64>();
        }
        acc
    }

    /// W(0, 0), exact when the origin is a grid node.
    pub fn origin_value(&self) -> f64 {
        self.interpolate(0.0, 0.0)
    }

    /// Restricts to a sub-grid whose nodes coincide with this grid's nodes.
    pub fn crop(&self, target: &PhaseSpaceGrid) -> Result<WignerGrid> {
        let (ox, op) = self.grid.offsets_of(target).ok_or(Error::GridMismatch)?;
        let mut values = Vec::with_capacity(target.len());
        for i in 0..target.nx {
            for j in 0..target.np {
                values.push(self.value(i + ox, j + op));
            }
        }
        Ok(WignerGrid { grid: *target, values })
    }

    /// Writes `x,p,w` CSV rows plus a JSON sidecar (same stem, `.json`) with the grid.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["x", "p", "w"])?;
        for i in 0..self.grid.nx {
            for j in 0..self.grid.np {
                w.write_record(&[self.grid.x(i).to_string(), self.grid.p(j).to_string(), self.value(i, j).to_string()])?;
            }
        }
        w.flush()?;
        std::fs::write(path.with_extension("json"), serde_json::to_string_pretty(&self.grid)?)?;
        Ok(())
    }

    /// Reads a grid written by [`WignerGrid::write_csv`].
    pub fn read_csv(path: &Path) -> Result<WignerGrid> {
        let grid: PhaseSpaceGrid = serde_json::from_str(&std::fs::read_to_string(path.with_extension("json"))?)?;
        grid.validate()?;
        let mut r = csv::Reader::from_path(path)?;
        let mut values = Vec::with_capacity(grid.len());
        for rec in r.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line());
            let w = rec
                .get(2)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::Parse { line, msg: "expected x,p,w".into() })?;
            values.push(w);
        }
        WignerGrid::from_values(grid, values)
    }
}

/// First stencil index and weights of a 6-node Lagrange interpolant at fractional index `u`.
fn lagrange6(u: f64, n: usize) -> (usize, [f64; 6]) {
    let start = (u.floor() as isize - 2).clamp(0, n as isize - 6) as usize;
    let mut w = [1.0; 6];
    for (j, wj) in w.iter_mut().enumerate() {
        for k in 0..6 {
            if k != j {
                *wj *= (u - (start + k) as f64) / (j as f64 - k as f64);
            }
        }
    }
    (start, w)
}

fn check_normalization(w: &WignerGrid, what: &str) -> Result<()> {
    let total = w.integral();
    if (total - 1.0).abs() > GRID_NORM_TOL {
        return Err(Error::GridTooSmall(format!("{what}: grid captures ∫∫W = {total:.6}")));
    }
    Ok(())
}

/// W(x, p) = Σ ρ_mn W_{|m⟩⟨n|}(x, p) with the Laguerre kernel
/// W_{|m⟩⟨n|} = ((−1)ⁿ/π) √(n!/m!) [√2(x − ip)]^{m−n} L_n^{(m−n)}(2(x²+p²)) e^{−(x²+p²)}, m ≥ n.
pub fn wigner_from_rho(rho: &DensityMatrix, grid: &PhaseSpaceGrid) -> Result<WignerGrid> {
    grid.validate()?;
    let n_max = rho.n_max();
    let lnf = ln_factorials(n_max);
    let m = rho.matrix();
    // coef[d][n] multiplies z^d L_n^{(d)}(t) for the pair (m, n) = (n + d, n).
    let coef: Vec<Vec<Complex64>> = (0..=n_max)
        .map(|d| {
            (0..=n_max - d)
                .map(|n| {
                    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                    let root = (0.5 * (lnf[n] - lnf[n + d])).exp();
                    let mult = if d == 0 { 1.0 } else { 2.0 };
                    m[(n + d, n)] * (mult * sign * root / PI)
                })
                .collect()
        })
        .collect();
    let w = grid.evaluate(|x, p| {
        let r2 = x * x + p * p;
        let t = 2.0 * r2;
        let z = Complex64::new(SQRT_2 * x, -SQRT_2 * p);
        let mut zd = Complex64::new(1.0, 0.0);
        let mut acc = 0.0;
        for (d, row) in coef.iter().enumerate() {
            let lag = laguerre_all(n_max - d, d as f64, t);
            let s: Complex64 = row.iter().zip(&lag).map(|(c, l)| c * l).sum();
            acc += (s * zd).re;
            zd *= z;
        }
        acc * (-r2).exp()
    });
    check_normalization(&w, "wigner_from_rho")?;
    Ok(w)
}

/// W(0,0) = (1/π) Σ (−1)ⁿ ρ_nn, grid-free.
pub fn wigner_origin_parity(rho: &DensityMatrix) -> f64 {
    rho.populations()
        .iter()
        .enumerate()
        .map(|(n, p)| if n % 2 == 0 { *p } else { -*p })
        .sum::<f64>()
        / PI
}

/// Odd-cat Wigner function (2/(Nπ)) e^{−x²−p²}(e^{−2α²}cosh(2√2αx) − cos(2√2αp)), N = 2(1−e^{−2α²}).
pub fn cat_wigner_analytic(alpha: f64, grid: &PhaseSpaceGrid) -> Result<WignerGrid> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(invalid(format!("cat amplitude must be > 0, got {alpha}")));
    }
    grid.validate()?;
    let e = (-2.0 * alpha * alpha).exp();
    let norm = 2.0 * (1.0 - e);
    let k = 2.0 * SQRT_2 * alpha;
    Ok(grid.evaluate(|x, p| {
        // e^{-2α²} cosh(kx) written to avoid overflow at large |x|.
        let ch = 0.5 * ((k * x - 2.0 * alpha * alpha).exp() + (-k * x - 2.0 * alpha * alpha).exp());
        2.0 / (norm * PI) * (-x * x - p * p).exp() * (ch - (k * p).cos())
    }))
}

fn model2_value(es: f64, x: f64, p: f64) -> f64 {
    let q = es * x * x + p * p / es;
    2.0 / PI * (q - 0.5) * (-q).exp()
}

/// Wigner function of â Ŝ(s)|0⟩: (2/π)(e^{2s}x² + e^{−2s}p² − 1/2) exp[−e^{2s}x² − e^{−2s}p²].
pub fn model2_wigner(s: f64, grid: &PhaseSpaceGrid) -> Result<WignerGrid> {
    if !(s >= 0.0) || !s.is_finite() {
        return Err(invalid(format!("squeezing must be finite and >= 0, got {s}")));
    }
    grid.validate()?;
    let es = (2.0 * s).exp();
    Ok(grid.evaluate(|x, p| model2_value(es, x, p)))
}

/// Normalized sampled Gaussian kernel of standard deviation `sigma` on spacing `h`.
fn gaussian_kernel(sigma: f64, h: f64) -> Vec<f64> {
    let radius = (KERNEL_SIGMAS * sigma / h).ceil() as usize;
    let mut k: Vec<f64> = (0..=2 * radius)
        .map(|i| {
            let u = (i as f64 - radius as f64) * h / sigma;
            (-0.5 * u * u).exp()
        })
        .collect();
    let total: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= total);
    k
}

/// Separable zero-padded convolution of an `nx × np` array (x-major).
fn convolve_separable(values: &[f64], nx: usize, np: usize, kx: &[f64], kp: &[f64]) -> Vec<f64> {
    let rx = (kx.len() / 2) as isize;
    let rp = (kp.len() / 2) as isize;
    // Along p within each x row.
    let tmp: Vec<f64> = (0..nx * np)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / np, (idx % np) as isize);
            let row = &values[i * np..(i + 1) * np];
            let lo = (j - rp).max(0);
            let hi = (j + rp).min(np as isize - 1);
            (lo..=hi).map(|jj| row[jj as usize] * kp[(jj - j + rp) as usize]).sum()
        })
        .collect();
    (0..nx * np)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = ((idx / np) as isize, idx % np);
            let lo = (i - rx).max(0);
            let hi = (i + rx).min(nx as isize - 1);
            (lo..=hi).map(|ii| tmp[ii as usize * np + j] * kx[(ii - i + rx) as usize]).sum()
        })
        .collect()
}

/// Fraction of ∫∫|W| that a separable kernel moves off the grid (per-axis bound).
fn off_grid_fraction(values: &[f64], nx: usize, np: usize, kx: &[f64], kp: &[f64]) -> f64 {
    let mut mx = vec![0.0; nx];
    let mut mp = vec![0.0; np];
    for i in 0..nx {
        for j in 0..np {
            let a = values[i * np + j].abs();
            mx[i] += a;
            mp[j] += a;
        }
    }
    let total: f64 = mx.iter().sum();
    if total == 0.0 {
        return 0.0;
    }
    let escaped = |marg: &[f64], k: &[f64]| -> f64 {
        let r = (k.len() / 2) as isize;
        let n = marg.len() as isize;
        marg.iter()
            .enumerate()
            .map(|(i, m)| {
                let out: f64 = k
                    .iter()
                    .enumerate()
                    .filter(|(o, _)| {
                        let t = i as isize + *o as isize - r;
                        t < 0 || t >= n
                    })
                    .map(|(_, w)| w)
                    .sum();
                m * out
            })
            .sum()
    };
    (escaped(&mx, kx) + escaped(&mp, kp)) / total
}

/// Isotropic 2-D Gaussian convolution W ∘ G_σ on the same grid.
///
/// Values beyond the grid are taken as zero; the call fails when more than
/// 1e-4 of ∫∫|W| would be pushed past the grid edge, i.e. when the grid margin
/// around the state is too thin for this σ.
pub fn gauss_convolve(w: &WignerGrid, sigma: f64) -> Result<WignerGrid> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(invalid(format!("sigma must be finite and >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(w.clone());
    }
    let g = &w.grid;
    let kx = gaussian_kernel(sigma, g.dx());
    let kp = gaussian_kernel(sigma, g.dp());
    let lost = off_grid_fraction(&w.values, g.nx, g.np, &kx, &kp);
    if lost > CONVOLUTION_LOSS_TOL {
        return Err(Error::GridTooSmall(format!(
            "convolution with sigma = {sigma} pushes {lost:.2e} of the state off the grid; widen it"
        )));
    }
    let values = convolve_separable(&w.values, g.nx, g.np, &kx, &kp);
    Ok(WignerGrid { grid: *g, values })
}

/// Loss model W₃(x,p) = (1/η)(W₂ ∗ G_λ)(x/√η, p/√η), λ = √((1−η)/(2η)).
///
/// The convolution runs on an internal grid scaled by 1/√η, so every output
/// node maps exactly onto an internal node and no interpolation is needed.
pub fn model3_wigner(s: f64, eta: f64, grid: &PhaseSpaceGrid) -> Result<WignerGrid> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(invalid(format!("eta must lie in (0, 1], got {eta}")));
    }
    if eta == 1.0 {
        return model2_wigner(s, grid);
    }
    if !(s >= 0.0) || !s.is_finite() {
        return Err(invalid(format!("squeezing must be finite and >= 0, got {s}")));
    }
    grid.validate()?;
    let scale = 1.0 / eta.sqrt();
    let lambda = ((1.0 - eta) / (2.0 * eta)).sqrt();
    let inner = PhaseSpaceGrid {
        x_min: grid.x_min * scale,
        x_max: grid.x_max * scale,
        p_min: grid.p_min * scale,
        p_max: grid.p_max * scale,
        nx: grid.nx,
        np: grid.np,
    };
    let kx = gaussian_kernel(lambda, inner.dx());
    let kp = gaussian_kernel(lambda, inner.dp());
    let pad = kx.len().max(kp.len()) / 2;
    let ext = inner.padded(pad);
    let w2 = model2_wigner(s, &ext)?;
    let conv = convolve_separable(&w2.values, ext.nx, ext.np, &kx, &kp);
    let mut values = Vec::with_capacity(grid.len());
    for i in 0..grid.nx {
        for j in 0..grid.np {
            values.push(conv[(i + pad) * ext.np + j + pad] / eta);
        }
    }
    Ok(WignerGrid { grid: *grid, values })
}

/// F = 2π ∫∫ W₁ W₂ dx dp, clamped to [0, 1 + 1e-3].
pub fn overlap_fidelity(w1: &WignerGrid, w2: &WignerGrid) -> Result<f64> {
    if w1.grid != w2.grid {
        return Err(Error::GridMismatch);
    }
    let s: f64 = w1.values.iter().zip(&w2.values).map(|(a, b)| a * b).sum();
    Ok((2.0 * PI * s * w1.grid.dx() * w1.grid.dp()).clamp(0.0, 1.0 + 1e-3))
}

/// Quadrature distribution sampled on the grid's x nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginal {
    pub xs: Vec<f64>,
    pub pdf: Vec<f64>,
}

impl Marginal {
    pub fn step(&self) -> f64 {
        self.xs[1] - self.xs[0]
    }

    pub fn total(&self) -> f64 {
        self.pdf.iter().sum::<f64>() * self.step()
    }

    pub fn moments(&self) -> (f64, f64) {
        let h = self.step();
        let total = self.total();
        let mean = self.xs.iter().zip(&self.pdf).map(|(x, p)| x * p).sum::<f64>() * h / total;
        let var = self.xs.iter().zip(&self.pdf).map(|(x, p)| (x - mean).powi(2) * p).sum::<f64>() * h / total;
        (mean, var)
    }
}

/// Distribution of x_θ = x cos θ + p sin θ: W integrated along the orthogonal direction.
///
/// The rotated samples use six-point Lagrange interpolation, which keeps the
/// result rotation-covariant to ~1e-7 on the default grid (bilinear resampling
/// only reaches ~1e-4).
pub fn marginal(w: &WignerGrid, theta: f64) -> Marginal {
    let g = &w.grid;
    let (c, s) = (theta.cos(), theta.sin());
    let ts = g.ps();
    let dt = g.dp();
    let xs = g.xs();
    let pdf = xs
        .par_iter()
        .map(|&q| ts.iter().map(|&t| w.interpolate_smooth(q * c - t * s, q * s + t * c)).sum::<f64>() * dt)
        .collect();
    Marginal { xs, pdf }
}
