//! State factories in the Fock basis, plus the loss and dark-count channels.
//!
//! Squeezing convention: Ŝ(s) = exp[(s/2)(â² − â†²)] squeezes x̂ (variance e^{-2s}/2)
//! and anti-squeezes p̂. The opposite sign is equally common elsewhere.

use crate::error::{invalid, Result};
use crate::fock::{apply_kraus_channel, warn_leakage, DensityMatrix, FockDim, FockOperator, PureState};
use crate::special::ln_factorials;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Bandwidth γ (rad/s) of the reference OPO: half-width in angular frequency of a
/// 12.3 MHz FWHM Lorentzian.
pub const OPO1_GAMMA: f64 = PI * 12.3e6;

/// Parameters of the cat-like input models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CatModelParams {
    /// Cat amplitude α (quadrature units).
    pub alpha: f64,
    /// Squeezing parameter s.
    pub s: f64,
    /// Transmittance / mixture weight η.
    pub eta: f64,
    /// Wave-packet bandwidth γ in rad/s.
    pub gamma: f64,
}

impl Default for CatModelParams {
    fn default() -> Self {
        Self { alpha: 0.98f64.sqrt(), s: 0.28, eta: 0.79, gamma: OPO1_GAMMA }
    }
}

impl CatModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0) {
            return Err(invalid(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        if !(self.s >= 0.0) {
            return Err(invalid(format!("s must be >= 0, got {}", self.s)));
        }
        check_eta(self.eta)?;
        if !(self.gamma > 0.0) {
            return Err(invalid(format!("gamma must be > 0, got {}", self.gamma)));
        }
        Ok(())
    }
}

pub(crate) fn check_eta(eta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(invalid(format!("eta must lie in [0, 1], got {eta}")));
    }
    Ok(())
}

fn check_amplitude(alpha2: f64, dim: FockDim) -> Result<()> {
    let limit = dim.n_max() as f64 / 3.0;
    if alpha2 > limit {
        return Err(invalid(format!(
            "|alpha|^2 = {alpha2} too large for n_max = {} (limit {limit:.3})",
            dim.n_max()
        )));
    }
    Ok(())
}

/// Poisson-weighted amplitudes e^{-|α|²/2} αⁿ/√n! for n ≤ n_max and the tail probability.
fn coherent_amplitudes(alpha: Complex64, dim: FockDim) -> (DVector<Complex64>, f64) {
    let lnf = ln_factorials(dim.n_max());
    let a2 = alpha.norm_sqr();
    let mut amps = DVector::zeros(dim.size());
    let mut power = Complex64::new(1.0, 0.0);
    for n in 0..dim.size() {
        amps[n] = power * (-0.5 * a2 - 0.5 * lnf[n]).exp();
        power *= alpha;
    }
    let kept: f64 = amps.iter().map(|c| c.norm_sqr()).sum();
    (amps, (1.0 - kept).max(0.0))
}

/// Coherent state |α⟩.
pub fn coherent(alpha: Complex64, dim: FockDim) -> Result<PureState> {
    if !alpha.re.is_finite() || !alpha.im.is_finite() {
        return Err(invalid("alpha must be finite"));
    }
    check_amplitude(alpha.norm_sqr(), dim)?;
    let (amps, lost) = coherent_amplitudes(alpha, dim);
    warn_leakage("coherent", lost);
    PureState::from_amplitudes(amps, lost)
}

/// Squeezed-vacuum amplitudes on levels 0..=n_top, unnormalized by truncation.
fn squeezed_amplitudes(s: f64, n_top: usize) -> Vec<f64> {
    let lnf = ln_factorials(n_top);
    let t = s.tanh();
    let pre = 1.0 / s.cosh().sqrt();
    let mut amps = vec![0.0; n_top + 1];
    for n in (0..=n_top).step_by(2) {
        let k = n / 2;
        // (−tanh s)^k √((2k)!)/(2^k k!)
        let mag = (0.5 * lnf[n] - k as f64 * 2f64.ln() - lnf[k]).exp();
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        amps[n] = pre * sign * t.powi(k as i32) * mag;
    }
    amps
}

/// Squeezed vacuum Ŝ(s)|0⟩.
pub fn squeezed_vacuum(s: f64, dim: FockDim) -> Result<PureState> {
    if !(s >= 0.0) || !s.is_finite() {
        return Err(invalid(format!("squeezing s must be finite and >= 0, got {s}")));
    }
    let amps = squeezed_amplitudes(s, dim.n_max());
    let kept: f64 = amps.iter().map(|a| a * a).sum();
    let lost = (1.0 - kept).max(0.0);
    warn_leakage("squeezed vacuum", lost);
    PureState::from_amplitudes(DVector::from_iterator(dim.size(), amps.into_iter().map(|a| Complex64::new(a, 0.0))), lost)
}

/// Photon-subtracted squeezed vacuum â Ŝ(s)|0⟩, normalized.
pub fn photon_subtracted_sv(s: f64, dim: FockDim) -> Result<PureState> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(invalid(format!("photon subtraction needs s > 0, got {s}")));
    }
    // â maps level n+1 onto n, so build the squeezed vacuum one level higher.
    let sv = squeezed_amplitudes(s, dim.n_max() + 1);
    let amps: Vec<f64> = (0..dim.size()).map(|n| ((n + 1) as f64).sqrt() * sv[n + 1]).collect();
    // ⟨â†â⟩ = sinh² s is the exact norm² of â Ŝ(s)|0⟩.
    let kept: f64 = amps.iter().map(|a| a * a).sum::<f64>() / s.sinh().powi(2);
    let lost = (1.0 - kept).max(0.0);
    warn_leakage("photon-subtracted squeezed vacuum", lost);
    PureState::from_amplitudes(DVector::from_iterator(dim.size(), amps.into_iter().map(|a| Complex64::new(a, 0.0))), lost)
}

/// Odd cat state (|α⟩ − |−α⟩)/√N for real α > 0.
pub fn odd_cat(alpha: f64, dim: FockDim) -> Result<PureState> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(invalid(format!("odd cat needs alpha > 0, got {alpha}")));
    }
    check_amplitude(alpha * alpha, dim)?;
    let lnf = ln_factorials(dim.n_max());
    let ln_a = alpha.ln();
    let mut amps = DVector::zeros(dim.size());
    for n in (1..dim.size()).step_by(2) {
        // Relative weights only; the common factor cancels on normalization.
        amps[n] = Complex64::new((n as f64 * ln_a - 0.5 * lnf[n]).exp(), 0.0);
    }
    // Exact norm² of the odd part: sinh(α²).
    let kept_rel: f64 = amps.iter().map(|c| c.norm_sqr()).sum();
    let lost = (1.0 - kept_rel / (alpha * alpha).sinh()).max(0.0);
    warn_leakage("odd cat", lost);
    PureState::from_amplitudes(amps, lost)
}

/// ρ₁ = η|1⟩⟨1| + (1−η)|0⟩⟨0|.
pub fn mixture_model1(eta: f64, dim: FockDim) -> Result<DensityMatrix> {
    check_eta(eta)?;
    DensityMatrix::diagonal(&[(0, 1.0 - eta), (1, eta)], dim)
}

/// Kraus operators of a beam splitter with transmittance η (vacuum in the other port).
pub fn loss_kraus(eta: f64, dim: FockDim) -> Result<Vec<FockOperator>> {
    check_eta(eta)?;
    let size = dim.size();
    let lnf = ln_factorials(dim.n_max());
    (0..size)
        .map(|k| {
            let mut m = DMatrix::zeros(size, size);
            for n in k..size {
                let ln_binom = lnf[n] - lnf[k] - lnf[n - k];
                let amp = (0.5 * ln_binom).exp() * eta.powf((n - k) as f64 / 2.0) * (1.0 - eta).powf(k as f64 / 2.0);
                m[(n - k, n)] = Complex64::new(amp, 0.0);
            }
            FockOperator::new(m)
        })
        .collect()
}

/// Linear beam-splitter loss with transmittance η.
pub fn loss_channel(rho: &DensityMatrix, eta: f64) -> Result<DensityMatrix> {
    let kraus = loss_kraus(eta, rho.dim())?;
    apply_kraus_channel(rho, &kraus)
}

/// Convex mix w·signal + (1−w)·background with w = ratio/(1+ratio).
///
/// `f64::INFINITY` returns the signal unchanged.
pub fn dark_count_mix(signal: &DensityMatrix, background: &DensityMatrix, event_to_dark_ratio: f64) -> Result<DensityMatrix> {
    if !(event_to_dark_ratio >= 0.0) {
        return Err(invalid(format!("event-to-dark ratio must be >= 0, got {event_to_dark_ratio}")));
    }
    if signal.n_max() != background.n_max() {
        return Err(crate::Error::DimensionMismatch { expected: signal.n_max(), found: background.n_max() });
    }
    let w = if event_to_dark_ratio.is_infinite() { 1.0 } else { event_to_dark_ratio / (1.0 + event_to_dark_ratio) };
    let m = signal.matrix() * Complex64::new(w, 0.0) + background.matrix() * Complex64::new(1.0 - w, 0.0);
    DensityMatrix::from_channel_output(m, w * signal.leakage() + (1.0 - w) * background.leakage(), "dark-count mix")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::fidelity_pure;

    fn dim() -> FockDim {
        FockDim::default()
    }

    #[test]
    fn coherent_examples() {
        let vac = coherent(Complex64::new(0.0, 0.0), dim()).unwrap();
        assert!((vac.populations()[0] - 1.0).abs() < 1e-15);
        let one = coherent(Complex64::new(1.0, 0.0), dim()).unwrap();
        assert!((one.mean_photon() - 1.0).abs() < 1e-6);
        let near = coherent(Complex64::new(0.98f64.sqrt(), 0.0), dim()).unwrap();
        assert!((near.populations()[0] - (-0.98f64).exp()).abs() < 1e-9);
        assert!(coherent(Complex64::new(3.0, 0.0), dim()).is_err());
    }

    #[test]
    fn squeezed_vacuum_examples() {
        let vac = squeezed_vacuum(0.0, dim()).unwrap();
        assert_eq!(vac.populations()[0], 1.0);
        let sv = squeezed_vacuum(0.28, dim()).unwrap();
        assert!((sv.mean_photon() - 0.28f64.sinh().powi(2)).abs() < 1e-6);
        assert!((sv.mean_photon() - 0.0805).abs() < 1e-4);
        assert!(sv.populations().iter().skip(1).step_by(2).all(|&p| p == 0.0));
        assert!(squeezed_vacuum(-0.1, dim()).is_err());
    }

    #[test]
    fn squeezed_vacuum_matches_exponentiated_generator() {
        use crate::fock::{operator_exponential, squeeze_generator};
        let big = FockDim::new(31).unwrap();
        for s in [0.1, 0.28, 0.6] {
            let op = operator_exponential(&squeeze_generator(s, big)).unwrap();
            let numeric = op.apply(&PureState::vacuum(big)).unwrap();
            let exact = squeezed_vacuum(s, big).unwrap();
            for n in 0..16 {
                let d = (numeric[n] - exact.amplitudes()[n]).norm();
                assert!(d < 1e-8, "s = {s}, n = {n}: {d:e}");
            }
        }
    }

    #[test]
    fn photon_subtracted_examples() {
        let s = 0.28f64;
        let psv = photon_subtracted_sv(s, dim()).unwrap();
        // Truncation at n_max = 15 costs ~5e-8; a larger cutoff converges to the closed form.
        assert!((psv.mean_photon() - (1.0 + 3.0 * s.sinh().powi(2))).abs() < 1e-6);
        let wide = photon_subtracted_sv(s, FockDim::new(40).unwrap()).unwrap();
        assert!((wide.mean_photon() - (1.0 + 3.0 * s.sinh().powi(2))).abs() < 1e-12);
        assert!((psv.mean_photon() - 1.2414).abs() < 1e-4);
        assert!(psv.populations().iter().step_by(2).all(|&p| p == 0.0));
        let tiny = photon_subtracted_sv(1e-6, dim()).unwrap();
        assert!((tiny.populations()[1] - 1.0).abs() < 1e-10);
        assert!(photon_subtracted_sv(0.0, dim()).is_err());
    }

    #[test]
    fn odd_cat_examples() {
        let cat = odd_cat(1.0, dim()).unwrap();
        let odd: f64 = cat.populations().iter().skip(1).step_by(2).sum();
        assert!((odd - 1.0).abs() < 1e-12);
        let small = odd_cat(0.01, dim()).unwrap();
        let one = PureState::fock(1, dim()).unwrap();
        assert!(fidelity_pure(&small, &one.to_density()).unwrap() > 0.9999);
        let a2 = 0.98f64;
        let want = a2 * (1.0 + (-2.0 * a2).exp()) / (1.0 - (-2.0 * a2).exp());
        let cat = odd_cat(a2.sqrt(), dim()).unwrap();
        assert!((cat.mean_photon() - want).abs() < 1e-8);
        assert!((want - 1.3013).abs() < 1e-4);
        assert!(odd_cat(0.0, dim()).is_err());
    }

    #[test]
    fn odd_cat_equals_coherent_difference() {
        let alpha = 0.9;
        let plus = coherent(Complex64::new(alpha, 0.0), dim()).unwrap();
        let minus = coherent(Complex64::new(-alpha, 0.0), dim()).unwrap();
        let diff = plus.amplitudes() - minus.amplitudes();
        let diff = PureState::from_amplitudes(diff, 0.0).unwrap();
        let cat = odd_cat(alpha, dim()).unwrap();
        assert!((diff.amplitudes() - cat.amplitudes()).norm() < 1e-12);
    }

    #[test]
    fn mixture_model1_examples() {
        let one = mixture_model1(1.0, dim()).unwrap();
        assert_eq!(one.populations()[1], 1.0);
        assert!((mixture_model1(0.77, dim()).unwrap().mean_photon() - 0.77).abs() < 1e-15);
        assert!(mixture_model1(1.2, dim()).is_err());
    }

    #[test]
    fn loss_on_single_photon_is_model1() {
        let one = PureState::fock(1, dim()).unwrap().to_density();
        for eta in [0.0, 0.3, 0.77, 1.0] {
            let out = loss_channel(&one, eta).unwrap();
            let want = mixture_model1(eta, dim()).unwrap();
            assert!((out.matrix() - want.matrix()).norm() < 1e-14, "eta = {eta}");
        }
    }

    #[test]
    fn loss_with_unit_transmittance_is_identity() {
        let rho = photon_subtracted_sv(0.28, dim()).unwrap().to_density();
        let out = loss_channel(&rho, 1.0).unwrap();
        assert!((out.matrix() - rho.matrix()).norm() < 1e-14);
    }

    #[test]
    fn dark_count_examples() {
        let one = PureState::fock(1, dim()).unwrap().to_density();
        let vac = PureState::vacuum(dim()).to_density();
        let mixed = dark_count_mix(&one, &vac, 66.0).unwrap();
        assert!((mixed.mean_photon() - 66.0 / 67.0).abs() < 1e-12);
        assert_eq!(dark_count_mix(&one, &vac, f64::INFINITY).unwrap().matrix(), one.matrix());
        assert_eq!(dark_count_mix(&one, &vac, 0.0).unwrap().matrix(), vac.matrix());
        assert!(dark_count_mix(&one, &vac, -1.0).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(CatModelParams::default().validate().is_ok());
        assert!(CatModelParams { eta: 1.5, ..Default::default() }.validate().is_err());
        assert!(CatModelParams { alpha: -1.0, ..Default::default() }.validate().is_err());
    }
}
