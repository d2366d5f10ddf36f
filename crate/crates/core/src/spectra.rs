//! Frequency-domain noise model of a broadband teleporter.
//!
//! The EPR source is a below-threshold OPO with a Lorentzian squeezing
//! spectrum; the classical channel is a gain with ripple and a residual delay
//! relative to the EPR path.

use crate::error::{invalid, Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SqueezerSpec {
    pub low_freq_squeezing_db: f64,
    pub cavity_fwhm_hz: f64,
    pub detection_efficiency: f64,
}

impl Default for SqueezerSpec {
    fn default() -> Self {
        Self { low_freq_squeezing_db: 6.9, cavity_fwhm_hz: 24e6, detection_efficiency: 1.0 }
    }
}

impl SqueezerSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.low_freq_squeezing_db >= 0.0) || !self.low_freq_squeezing_db.is_finite() {
            return Err(invalid(format!("squeezing must be >= 0 dB, got {}", self.low_freq_squeezing_db)));
        }
        if !(self.cavity_fwhm_hz > 0.0) || !self.cavity_fwhm_hz.is_finite() {
            return Err(invalid(format!("cavity FWHM must be > 0, got {}", self.cavity_fwhm_hz)));
        }
        let eta = self.detection_efficiency;
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(invalid(format!("detection efficiency must lie in (0, 1], got {eta}")));
        }
        Ok(())
    }

    /// Normalized pump amplitude x ∈ [0, 1) reproducing the low-frequency squeezing.
    pub fn pump_ratio(&self) -> Result<f64> {
        self.validate()?;
        let c = (1.0 - 10f64.powf(-self.low_freq_squeezing_db / 10.0)) / self.detection_efficiency;
        if c >= 1.0 {
            return Err(Error::Unattainable(format!(
                "{} dB of squeezing needs detection efficiency above {}",
                self.low_freq_squeezing_db, self.detection_efficiency
            )));
        }
        if c == 0.0 {
            return Ok(0.0);
        }
        Ok(((2.0 - c) - 2.0 * (1.0 - c).sqrt()) / c)
    }
}

/// (V_sq, V_anti) at frequency f: ½[1 ∓ η·4x/((1 ± x)² + (2f/FWHM)²)].
pub fn squeezed_variance_spectrum(spec: &SqueezerSpec, f_hz: f64) -> Result<(f64, f64)> {
    let x = spec.pump_ratio()?;
    let eta = spec.detection_efficiency;
    let w = 2.0 * f_hz / spec.cavity_fwhm_hz;
    let v_sq = 0.5 * (1.0 - eta * 4.0 * x / ((1.0 + x).powi(2) + w * w));
    let v_anti = 0.5 * (1.0 + eta * 4.0 * x / ((1.0 - x).powi(2) + w * w));
    Ok((v_sq, v_anti))
}

/// Classical feed-forward relative to the EPR path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelResponse {
    pub gain: f64,
    pub delay_s: f64,
    /// (f_hz, dB) pairs, linearly interpolated and held constant outside.
    pub ripple_db: Vec<(f64, f64)>,
}

impl Default for ChannelResponse {
    fn default() -> Self {
        Self { gain: 1.0, delay_s: 0.0, ripple_db: Vec::new() }
    }
}

impl ChannelResponse {
    pub fn validate(&self) -> Result<()> {
        if !(self.gain > 0.0) || !self.gain.is_finite() {
            return Err(invalid(format!("channel gain must be > 0, got {}", self.gain)));
        }
        if !self.delay_s.is_finite() {
            return Err(invalid("channel delay must be finite"));
        }
        if self.ripple_db.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(invalid("ripple table frequencies must be strictly increasing"));
        }
        Ok(())
    }

    fn ripple_at(&self, f: f64) -> f64 {
        let t = &self.ripple_db;
        match t.len() {
            0 => 0.0,
            _ if f <= t[0].0 => t[0].1,
            _ if f >= t[t.len() - 1].0 => t[t.len() - 1].1,
            _ => {
                let i = t.partition_point(|p| p.0 <= f);
                let ((f0, d0), (f1, d1)) = (t[i - 1], t[i]);
                d0 + (d1 - d0) * (f - f0) / (f1 - f0)
            }
        }
    }

    /// H(f) = gain · 10^{ripple/20} · e^{−i2πf·delay}.
    pub fn transfer(&self, f: f64) -> Complex64 {
        let mag = self.gain * 10f64.powf(self.ripple_at(f) / 20.0);
        Complex64::from_polar(mag, -2.0 * PI * f * self.delay_s)
    }
}

/// Added quadrature noise at f in vacuum units, 2v_sq|1+H|²/4 + 2v_anti|1−H|²/4.
pub fn added_noise(spec: &SqueezerSpec, chan: &ChannelResponse, f_hz: f64) -> Result<f64> {
    chan.validate()?;
    let (v_sq, v_anti) = squeezed_variance_spectrum(spec, f_hz)?;
    let h = chan.transfer(f_hz);
    Ok(2.0 * v_sq * (1.0 + h).norm_sqr() / 4.0 + 2.0 * v_anti * (1.0 - h).norm_sqr() / 4.0)
}

/// Teleported-vacuum noise above shot noise in dB, 10 log₁₀((½ + added)/½).
pub fn teleporter_noise_spectrum(spec: &SqueezerSpec, chan: &ChannelResponse, f_hz: f64) -> Result<f64> {
    Ok(10.0 * (1.0 + 2.0 * added_noise(spec, chan, f_hz)?).log10())
}

/// Coherent-state fidelity implied by the added noise at f, 1/(1 + added).
pub fn effective_fidelity(spec: &SqueezerSpec, chan: &ChannelResponse, f_hz: f64) -> Result<f64> {
    Ok(1.0 / (1.0 + added_noise(spec, chan, f_hz)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "hz")]
pub enum Bandwidth {
    Unbounded,
    Finite(f64),
}

/// Scan horizon for the bandwidth search, in cavity linewidths.
const SCAN_LINEWIDTHS: f64 = 100.0;
const SCAN_POINTS: usize = 20_000;

/// Largest f with effective fidelity ≥ floor on all of [0, f].
///
/// Scans up to 100 linewidths for the first failure and bisects the crossing
/// to 1 Hz; reports `Unbounded` if nothing fails within the scan.
pub fn usable_bandwidth(spec: &SqueezerSpec, chan: &ChannelResponse, fidelity_floor: f64) -> Result<Bandwidth> {
    if !(0.5..1.0).contains(&fidelity_floor) {
        return Err(invalid(format!("fidelity floor must lie in [0.5, 1), got {fidelity_floor}")));
    }
    let ok = |f: f64| -> Result<bool> { Ok(effective_fidelity(spec, chan, f)? >= fidelity_floor) };
    if !ok(0.0)? {
        return Err(Error::Unattainable(format!(
            "fidelity {:.4} at f = 0 is below the floor {fidelity_floor}",
            effective_fidelity(spec, chan, 0.0)?
        )));
    }
    let f_max = SCAN_LINEWIDTHS * spec.cavity_fwhm_hz;
    let step = f_max / SCAN_POINTS as f64;
    let mut last_ok = 0.0;
    for i in 1..=SCAN_POINTS {
        let f = i as f64 * step;
        if !ok(f)? {
            let (mut lo, mut hi) = (last_ok, f);
            while hi - lo > 1.0 {
                let mid = 0.5 * (lo + hi);
                if ok(mid)? {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Ok(Bandwidth::Finite(lo));
        }
        last_ok = f;
    }
    Ok(Bandwidth::Unbounded)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumRow {
    pub f_hz: f64,
    pub quantum_db: f64,
    pub classical_db: f64,
    pub shot_db: f64,
}

/// Quantum (given squeezing), classical (no entanglement) and shot-noise curves on a linear grid.
pub fn spectrum_table(spec: &SqueezerSpec, chan: &ChannelResponse, f_min: f64, f_max: f64, points: usize) -> Result<Vec<SpectrumRow>> {
    if points < 2 || !(f_max > f_min) || !(f_min >= 0.0) || !f_max.is_finite() {
        return Err(invalid(format!("bad frequency grid [{f_min}, {f_max}] x {points}")));
    }
    let classical = SqueezerSpec { low_freq_squeezing_db: 0.0, ..*spec };
    (0..points)
        .map(|i| {
            let f = f_min + (f_max - f_min) * i as f64 / (points - 1) as f64;
            Ok(SpectrumRow {
                f_hz: f,
                quantum_db: teleporter_noise_spectrum(spec, chan, f)?,
                classical_db: teleporter_noise_spectrum(&classical, chan, f)?,
                shot_db: 0.0,
            })
        })
        .collect()
}

/// Writes `f_hz,quantum_db,classical_db,shot_db`.
pub fn write_spectrum_csv(rows: &[SpectrumRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::teleport::added_noise_db;
    use proptest::prelude::*;

    fn perfect() -> ChannelResponse {
        ChannelResponse::default()
    }

    #[test]
    fn no_squeezing_is_vacuum() {
        let spec = SqueezerSpec { low_freq_squeezing_db: 0.0, ..Default::default() };
        for f in [0.0, 1e6, 1e8] {
            assert_eq!(squeezed_variance_spectrum(&spec, f).unwrap(), (0.5, 0.5));
            assert!((teleporter_noise_spectrum(&spec, &perfect(), f).unwrap() - 4.771).abs() < 1e-3);
        }
    }

    #[test]
    fn low_frequency_squeezing_matches_spec() {
        let (v, _) = squeezed_variance_spectrum(&SqueezerSpec::default(), 0.0).unwrap();
        assert!((v - 0.5 * 10f64.powf(-0.69)).abs() < 1e-12);
        assert!((v - 0.1021).abs() < 1e-4);
        let lossy = SqueezerSpec { low_freq_squeezing_db: 3.0, detection_efficiency: 0.8, ..Default::default() };
        let (v, a) = squeezed_variance_spectrum(&lossy, 0.0).unwrap();
        assert!((v - 0.5 * 10f64.powf(-0.3)).abs() < 1e-6);
        assert!(v * a >= 0.25);
    }

    #[test]
    fn unattainable_squeezing() {
        let spec = SqueezerSpec { low_freq_squeezing_db: 6.9, detection_efficiency: 0.7, ..Default::default() };
        assert!(matches!(squeezed_variance_spectrum(&spec, 0.0), Err(Error::Unattainable(_))));
        let bad = SqueezerSpec { cavity_fwhm_hz: 0.0, ..Default::default() };
        assert!(squeezed_variance_spectrum(&bad, 0.0).is_err());
    }

    #[test]
    fn noise_endpoints() {
        let spec = SqueezerSpec::default();
        let at0 = teleporter_noise_spectrum(&spec, &perfect(), 0.0).unwrap();
        assert!((at0 - 1.49).abs() < 0.005, "{at0}");
        let at1 = teleporter_noise_spectrum(&spec, &perfect(), 1e6).unwrap();
        assert!((1.3..=1.6).contains(&at1), "{at1}");
        let far = teleporter_noise_spectrum(&spec, &perfect(), 1e12).unwrap();
        assert!((far - 10.0 * 3f64.log10()).abs() < 1e-6);
    }

    #[test]
    fn channel_mismatch_adds_noise() {
        let spec = SqueezerSpec::default();
        let delayed = ChannelResponse { delay_s: 5e-9, ..Default::default() };
        let f = 5e6;
        assert!(teleporter_noise_spectrum(&spec, &delayed, f).unwrap() > teleporter_noise_spectrum(&spec, &perfect(), f).unwrap());
        let rippled = ChannelResponse { ripple_db: vec![(0.0, 0.0), (1e7, 0.5)], ..Default::default() };
        assert!((rippled.transfer(5e6).norm() - 10f64.powf(0.25 / 20.0)).abs() < 1e-12);
        assert!((rippled.transfer(2e7).norm() - 10f64.powf(0.5 / 20.0)).abs() < 1e-12);
        let unsorted = ChannelResponse { ripple_db: vec![(1.0, 0.0), (0.0, 0.0)], ..Default::default() };
        assert!(added_noise(&spec, &unsorted, 0.0).is_err());
    }

    #[test]
    fn bandwidth() {
        let spec = SqueezerSpec::default();
        assert_eq!(usable_bandwidth(&spec, &perfect(), 0.5).unwrap(), Bandwidth::Unbounded);
        match usable_bandwidth(&spec, &perfect(), 2.0 / 3.0).unwrap() {
            Bandwidth::Finite(f) => {
                assert!(f >= 10e6, "{f}");
                let (v, _) = squeezed_variance_spectrum(&spec, f).unwrap();
                assert!((v - 0.25).abs() < 1e-6);
            }
            other => panic!("{other:?}"),
        }
        let none = SqueezerSpec { low_freq_squeezing_db: 0.0, ..Default::default() };
        assert!(matches!(usable_bandwidth(&none, &perfect(), 0.6), Err(Error::Unattainable(_))));
        assert!(usable_bandwidth(&spec, &perfect(), 1.0).is_err());
    }

    #[test]
    fn spectrum_csv() {
        let rows = spectrum_table(&SqueezerSpec::default(), &perfect(), 0.0, 20e6, 401).unwrap();
        assert_eq!(rows.len(), 401);
        assert!(rows.iter().all(|r| (r.classical_db - 4.771).abs() < 1e-3 && r.shot_db == 0.0));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("spectrum.csv");
        write_spectrum_csv(&rows, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next().unwrap(), "f_hz,quantum_db,classical_db,shot_db");
        assert_eq!(text.lines().count(), 402);
        assert!(spectrum_table(&SqueezerSpec::default(), &perfect(), 1.0, 0.0, 10).is_err());
    }

    fn spec_strategy() -> impl Strategy<Value = SqueezerSpec> {
        (0.0..12.0f64, 1e6..1e8f64, 0.95..=1.0f64).prop_map(|(db, fwhm, eta)| SqueezerSpec {
            low_freq_squeezing_db: db,
            cavity_fwhm_hz: fwhm,
            detection_efficiency: eta,
        })
    }

    proptest! {
        #[test]
        fn uncertainty_bound(spec in spec_strategy(), f in 0.0..1e9f64) {
            prop_assume!(spec.pump_ratio().is_ok());
            let (v, a) = squeezed_variance_spectrum(&spec, f).unwrap();
            prop_assert!(v <= 0.5 + 1e-15 && a >= 0.5 - 1e-15);
            prop_assert!(v * a >= 0.25 - 1e-12);
        }

        #[test]
        fn perfect_channel_monotone(spec in spec_strategy(), f in 0.0..1e9f64, df in 0.0..1e8f64) {
            prop_assume!(spec.pump_ratio().is_ok());
            let a = teleporter_noise_spectrum(&spec, &perfect(), f).unwrap();
            let b = teleporter_noise_spectrum(&spec, &perfect(), f + df).unwrap();
            prop_assert!(b >= a - 1e-12);
        }

        #[test]
        fn perfect_channel_is_single_r(spec in spec_strategy(), f in 0.0..1e9f64) {
            prop_assume!(spec.pump_ratio().is_ok());
            let (v, _) = squeezed_variance_spectrum(&spec, f).unwrap();
            let r = -0.5 * (2.0 * v).ln();
            let db = teleporter_noise_spectrum(&spec, &perfect(), f).unwrap();
            prop_assert!((db - added_noise_db(r)).abs() < 1e-10);
        }
    }
}
