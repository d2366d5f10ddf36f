//! Unity-gain CV teleportation as an additive Gaussian noise channel.
//!
//! In phase space the output Wigner function is W_in ∘ G_σ with σ = e^{−r} per
//! quadrature; in the Fock basis the same channel is the displacement average
//! ∫ d²β P(β) D̂(β) ρ D̂†(β).

use crate::error::{invalid, Error, Result};
use crate::fock::{displacement, DensityMatrix};
use crate::special::gaussian_quadrature;
use crate::states::check_eta;
use crate::wigner::{gauss_convolve, WignerGrid};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{LN_10, PI, SQRT_2};

pub const DEFAULT_N_QUAD: usize = 21;
const MIN_N_QUAD: usize = 15;
const TRACE_CHECK: f64 = 1e-3;

/// EPR correlation parameter of the shared resource.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TeleporterParams {
    r: f64,
}

impl TeleporterParams {
    pub fn new(r: f64) -> Result<Self> {
        if !(r >= 0.0) || !r.is_finite() {
            return Err(invalid(format!("r must be finite and >= 0, got {r}")));
        }
        Ok(Self { r })
    }

    pub fn from_squeezing_db(db: f64) -> Result<Self> {
        Self::new(squeezing_db_to_r(db)?)
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// e^{−2r}: added noise variance per quadrature.
    pub fn noise_var(&self) -> f64 {
        (-2.0 * self.r).exp()
    }

    /// g_r = 1 + 2e^{−2r}.
    pub fn g_r(&self) -> f64 {
        1.0 + 2.0 * self.noise_var()
    }

    /// Standard deviation e^{−r} of the teleportation kernel.
    pub fn sigma(&self) -> f64 {
        (-self.r).exp()
    }
}

/// r such that e^{−2r} = 10^{−dB/10}.
pub fn squeezing_db_to_r(db: f64) -> Result<f64> {
    if !(db >= 0.0) || !db.is_finite() {
        return Err(invalid(format!("squeezing must be a finite, non-negative dB figure, got {db}")));
    }
    Ok(db * LN_10 / 20.0)
}

/// Teleportation fidelity for Gaussian inputs, 1/(1 + e^{−2r}).
pub fn gaussian_fidelity(r: f64) -> f64 {
    1.0 / (1.0 + (-2.0 * r).exp())
}

/// Added noise of the teleported vacuum over shot noise, 10 log₁₀(1 + 2e^{−2r}) dB.
pub fn added_noise_db(r: f64) -> f64 {
    10.0 * (1.0 + 2.0 * (-2.0 * r).exp()).log10()
}

/// W_out = W_in ∘ G_{e^{−r}}.
pub fn teleport_wigner(w: &WignerGrid, params: &TeleporterParams) -> Result<WignerGrid> {
    gauss_convolve(w, params.sigma())
}

/// Fock-basis teleportation: Gauss–Hermite average of D̂(β)ρD̂†(β), β = (x₀ + i p₀)/√2
/// with x₀, p₀ ~ N(0, e^{−2r}).
///
/// Fails if the trace kept below the cutoff deviates from one by more than 1e-3.
pub fn teleport_fock(rho: &DensityMatrix, params: &TeleporterParams, n_quad: usize) -> Result<DensityMatrix> {
    if n_quad < MIN_N_QUAD {
        return Err(invalid(format!("n_quad must be >= {MIN_N_QUAD}, got {n_quad}")));
    }
    let dim = rho.dim();
    let n = dim.size();
    let (nodes, weights) = gaussian_quadrature(n_quad, params.sigma());
    let input = rho.matrix();
    // One partial sum per x node, added in index order so the result is reproducible.
    let partials: Vec<DMatrix<Complex64>> = (0..n_quad)
        .into_par_iter()
        .map(|i| {
            let mut acc = DMatrix::<Complex64>::zeros(n, n);
            for j in 0..n_quad {
                let beta = Complex64::new(nodes[i], nodes[j]) / SQRT_2;
                let d = displacement(beta, dim);
                let w = weights[i] * weights[j];
                acc += (d.matrix() * input * d.matrix().adjoint()) * Complex64::new(w, 0.0);
            }
            acc
        })
        .collect();
    let mut out = DMatrix::<Complex64>::zeros(n, n);
    for p in &partials {
        out += p;
    }
    let kept = out.trace().re;
    if (kept - 1.0).abs() > TRACE_CHECK {
        return Err(Error::Discretization(format!(
            "teleported trace {kept:.6} below n_max = {}; raise n_max or n_quad",
            dim.n_max()
        )));
    }
    DensityMatrix::from_channel_output(out, rho.leakage() + (1.0 - kept).max(0.0), "teleport_fock")
}

/// Output origin value for the input η|1⟩⟨1| + (1−η)|0⟩⟨0|:
/// (1 − 2η + 2e^{−2r}) / (π (1 + 2e^{−2r})²).
pub fn output_negativity_model1(eta: f64, r: f64) -> Result<f64> {
    check_eta(eta)?;
    check_r(r)?;
    let e = (-2.0 * r).exp();
    let g = 1.0 + 2.0 * e;
    Ok((1.0 - 2.0 * eta + 2.0 * e) / (PI * g * g))
}

/// Output origin value for the lossy photon-subtracted squeezed vacuum:
/// g(g − 2η) / (π (g² + 4η(g − η) sinh²s)^{3/2}), g = 1 + 2e^{−2r}.
pub fn output_negativity_model3(eta: f64, s: f64, r: f64) -> Result<f64> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(invalid(format!("eta must lie in (0, 1], got {eta}")));
    }
    if !(s >= 0.0) || !s.is_finite() {
        return Err(invalid(format!("s must be finite and >= 0, got {s}")));
    }
    check_r(r)?;
    let g = 1.0 + 2.0 * (-2.0 * r).exp();
    let sh2 = s.sinh().powi(2);
    Ok(g * (g - 2.0 * eta) / (PI * (g * g + 4.0 * eta * (g - eta) * sh2).powf(1.5)))
}

fn check_r(r: f64) -> Result<()> {
    // r = +∞ is allowed: it is the ideal-teleporter limit.
    if !(r >= 0.0) {
        return Err(invalid(format!("r must be >= 0, got {r}")));
    }
    Ok(())
}
