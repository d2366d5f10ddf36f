//! Simulated balanced homodyne detection.

use crate::error::{invalid, Error, Result};
use crate::fock::DensityMatrix;
use crate::special::hermite_functions;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::path::Path;

/// Quadrature range and resolution of the inverse-CDF table.
pub const TABLE_RANGE: (f64, f64) = (-6.0, 6.0);
pub const TABLE_POINTS: usize = 4001;

/// One homodyne outcome x at local-oscillator phase θ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRecord {
    pub theta: f64,
    pub x: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub source: String,
    pub seed: Option<u64>,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureDataset {
    records: Vec<QuadratureRecord>,
    meta: DatasetMeta,
}

impl QuadratureDataset {
    pub fn new(records: Vec<QuadratureRecord>, source: impl Into<String>, seed: Option<u64>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::NoRecords);
        }
        if let Some((i, r)) = records
            .iter()
            .enumerate()
            .find(|(_, r)| !(0.0..TAU).contains(&r.theta) || !r.x.is_finite())
        {
            return Err(invalid(format!("record {i} out of range: {r:?}")));
        }
        let n = records.len();
        Ok(Self { records, meta: DatasetMeta { source: source.into(), seed, n } })
    }

    pub fn records(&self) -> &[QuadratureRecord] {
        &self.records
    }

    pub fn meta(&self) -> &DatasetMeta {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Shifts every phase by δ (mod 2π).
    pub fn rotated(&self, delta: f64) -> Self {
        let records = self
            .records
            .iter()
            .map(|r| QuadratureRecord { theta: (r.theta + delta).rem_euclid(TAU) % TAU, x: r.x })
            .collect();
        Self { records, meta: DatasetMeta { source: format!("{} (rotated {delta})", self.meta.source), ..self.meta.clone() } }
    }

    /// Writes `theta,x` CSV plus a JSON sidecar (`.json`) holding the metadata.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["theta", "x"])?;
        for r in &self.records {
            w.write_record(&[format!("{:.16e}", r.theta), format!("{:.16e}", r.x)])?;
        }
        w.flush()?;
        std::fs::write(path.with_extension("json"), serde_json::to_string_pretty(&self.meta)?)?;
        Ok(())
    }

    /// Reads a `theta,x` CSV; the sidecar is used when present.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
        let header = rdr.headers()?.clone();
        if header.is_empty() || (header.len() == 1 && header[0].trim().is_empty()) {
            return Err(Error::Parse { line: 1, msg: "empty file".into() });
        }
        if header.len() != 2 || header[0].trim() != "theta" || header[1].trim() != "x" {
            return Err(Error::Parse { line: 1, msg: format!("expected header \"theta,x\", got {header:?}") });
        }
        let mut records = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                Error::Parse { line, msg: e.to_string() }
            })?;
            let line = rec.position().map_or(0, |p| p.line());
            let field = |i: usize| -> Result<f64> {
                rec.get(i)
                    .and_then(|s| s.trim().parse::<f64>().ok())
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Parse { line, msg: format!("bad number in {rec:?}") })
            };
            let (theta, x) = (field(0)?, field(1)?);
            if !(0.0..TAU).contains(&theta) {
                return Err(Error::Parse { line, msg: format!("theta {theta} outside [0, 2π)") });
            }
            records.push(QuadratureRecord { theta, x });
        }
        if records.is_empty() {
            return Err(Error::NoRecords);
        }
        let sidecar = path.with_extension("json");
        let (source, seed) = match std::fs::read_to_string(&sidecar) {
            Ok(text) => {
                let meta: DatasetMeta = serde_json::from_str(&text)?;
                (meta.source, meta.seed)
            }
            Err(_) => (path.display().to_string(), None),
        };
        Self::new(records, source, seed)
    }
}

/// Exact pr(x|θ) = Σ ρ_mn e^{i(n−m)θ} ψ_m(x) ψ_n(x).
pub fn quadrature_pdf(rho: &DensityMatrix, theta: f64, xs: &[f64]) -> Vec<f64> {
    let n_max = rho.n_max();
    let m = rho.matrix();
    let phases: Vec<Complex64> = (0..=n_max).map(|k| Complex64::from_polar(1.0, k as f64 * theta)).collect();
    xs.iter()
        .map(|&x| {
            let psi = hermite_functions(x, n_max);
            let mut acc = 0.0;
            for a in 0..=n_max {
                acc += m[(a, a)].re * psi[a] * psi[a];
                for b in a + 1..=n_max {
                    acc += 2.0 * (m[(a, b)] * phases[b - a]).re * psi[a] * psi[b];
                }
            }
            acc
        })
        .collect()
}

/// Inverse-CDF sampler for pr(x|θ) at arbitrary θ.
///
/// The CDF table at θ is Σ_k Re[e^{ikθ} C_k(x)] with harmonic cumulants C_k
/// precomputed once, so each draw costs a binary search over the table without
/// materializing it.
#[derive(Debug, Clone)]
pub struct QuadratureSampler {
    xs: Vec<f64>,
    /// cumulants[k][i]: trapezoid integral of the k-th harmonic up to xs[i]; k ≥ 1 carry the factor 2.
    cumulants: Vec<Vec<Complex64>>,
}

impl QuadratureSampler {
    pub fn new(rho: &DensityMatrix) -> Self {
        let n_max = rho.n_max();
        let m = rho.matrix();
        let (lo, hi) = TABLE_RANGE;
        let h = (hi - lo) / (TABLE_POINTS - 1) as f64;
        let xs: Vec<f64> = (0..TABLE_POINTS).map(|i| lo + i as f64 * h).collect();
        let psi: Vec<Vec<f64>> = xs.iter().map(|&x| hermite_functions(x, n_max)).collect();
        let cumulants = (0..=n_max)
            .map(|k| {
                let factor = if k == 0 { 1.0 } else { 2.0 };
                let density: Vec<Complex64> = psi
                    .iter()
                    .map(|p| (0..=n_max - k).map(|a| m[(a, a + k)] * (p[a] * p[a + k])).sum::<Complex64>() * factor)
                    .collect();
                let mut cum = Vec::with_capacity(TABLE_POINTS);
                cum.push(Complex64::new(0.0, 0.0));
                for i in 1..TABLE_POINTS {
                    let prev = cum[i - 1];
                    cum.push(prev + (density[i - 1] + density[i]) * (0.5 * h));
                }
                cum
            })
            .collect();
        Self { xs, cumulants }
    }

    fn cdf(&self, phases: &[Complex64], i: usize) -> f64 {
        self.cumulants.iter().zip(phases).map(|(c, ph)| (c[i] * ph).re).sum()
    }

    /// Maps a uniform variate `u ∈ [0, 1)` to a quadrature value at phase θ.
    pub fn quantile(&self, theta: f64, u: f64) -> f64 {
        let phases: Vec<Complex64> =
            (0..self.cumulants.len()).map(|k| Complex64::from_polar(1.0, k as f64 * theta)).collect();
        let last = TABLE_POINTS - 1;
        let target = u * self.cdf(&phases, last);
        let (mut lo, mut hi) = (0usize, last);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.cdf(&phases, mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (c_lo, c_hi) = (self.cdf(&phases, lo), self.cdf(&phases, hi));
        let frac = if c_hi > c_lo { ((target - c_lo) / (c_hi - c_lo)).clamp(0.0, 1.0) } else { 0.5 };
        self.xs[lo] + frac * (self.xs[hi] - self.xs[lo])
    }
}

/// Draws `n` records with θ ~ U[0, 2π) and x ~ pr(x|θ); deterministic in `seed`.
pub fn sample_quadratures(rho: &DensityMatrix, n: usize, seed: u64) -> Result<QuadratureDataset> {
    if n == 0 {
        return Err(invalid("sample count must be >= 1"));
    }
    let sampler = QuadratureSampler::new(rho);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let records = (0..n)
        .map(|_| {
            let theta = rng.random::<f64>() * TAU;
            let u = rng.random::<f64>();
            QuadratureRecord { theta: if theta >= TAU { 0.0 } else { theta }, x: sampler.quantile(theta, u) }
        })
        .collect();
    QuadratureDataset::new(records, "simulated", Some(seed))
}

/// Detector record around one trigger.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeTrace {
    pub samples: Vec<f64>,
    pub sample_rate: f64,
    pub center_index: usize,
}

impl TimeTrace {
    pub fn new(samples: Vec<f64>, sample_rate: f64, center_index: usize) -> Result<Self> {
        if !(sample_rate > 0.0) || !sample_rate.is_finite() {
            return Err(invalid(format!("sample rate must be > 0, got {sample_rate}")));
        }
        if center_index >= samples.len() {
            return Err(invalid(format!("center index {center_index} outside trace of {}", samples.len())));
        }
        Ok(Self { samples, sample_rate, center_index })
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.sample_rate
    }

    /// Symmetric span around the trigger, 2 · min(distance to either end) · Δt.
    pub fn symmetric_window(&self) -> f64 {
        let right = self.samples.len() - 1 - self.center_index;
        2.0 * self.center_index.min(right) as f64 * self.dt()
    }
}

/// γ = π · FWHM: half-width in angular frequency of a Lorentzian with the given FWHM (Hz).
pub fn gamma_from_fwhm(fwhm_hz: f64) -> f64 {
    std::f64::consts::PI * fwhm_hz
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeQuadrature {
    pub value: f64,
    /// Fraction of the (infinite, sampled) mode energy Σf² inside the record.
    pub captured_energy: f64,
    /// False when γ · window < 2, i.e. the mode is not contained in the record.
    pub contained: bool,
}

/// f(t_i) = e^{−γ|t_i − t_c|} on the trace's sample times.
pub fn mode_function(trace: &TimeTrace, gamma: f64) -> Vec<f64> {
    let dt = trace.dt();
    (0..trace.samples.len())
        .map(|i| (-gamma * (i as f64 - trace.center_index as f64).abs() * dt).exp())
        .collect()
}

/// x = Σ f(t_i) v_i Δt / √(Σ f² Δt).
///
/// White noise with unit variance density (Var v_i = 1/Δt) maps to unit variance.
pub fn mode_function_quadrature(trace: &TimeTrace, gamma: f64) -> Result<ModeQuadrature> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(invalid(format!("gamma must be > 0, got {gamma}")));
    }
    let dt = trace.dt();
    let f = mode_function(trace, gamma);
    let energy: f64 = f.iter().map(|v| v * v).sum();
    let norm = (energy * dt).sqrt();
    let value = f.iter().zip(&trace.samples).map(|(f, v)| f * v).sum::<f64>() * dt / norm;
    // Σ_{k∈ℤ} e^{−2γΔt|k|} = (1 + q)/(1 − q), q = e^{−2γΔt}.
    let q = (-2.0 * gamma * dt).exp();
    let total = (1.0 + q) / (1.0 - q);
    let window = trace.symmetric_window();
    let contained = gamma * window >= 2.0;
    if !contained {
        log::warn!("mode function not contained: gamma * window = {:.3}", gamma * window);
    }
    Ok(ModeQuadrature { value, captured_energy: energy / total, contained })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{FockDim, PureState};
    use crate::states::{photon_subtracted_sv, squeezed_vacuum};
    use std::f64::consts::PI;

    fn dim() -> FockDim {
        FockDim::default()
    }

    fn grid_xs(n: usize) -> Vec<f64> {
        (0..n).map(|i| -6.0 + 12.0 * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn pdf_of_vacuum_and_one_photon() {
        let xs = grid_xs(241);
        let vac = quadrature_pdf(&PureState::vacuum(dim()).to_density(), 0.7, &xs);
        let one = quadrature_pdf(&PureState::fock(1, dim()).unwrap().to_density(), 2.1, &xs);
        for (i, &x) in xs.iter().enumerate() {
            assert!((vac[i] - (-x * x).exp() / PI.sqrt()).abs() < 1e-14);
            assert!((one[i] - 2.0 * x * x * (-x * x).exp() / PI.sqrt()).abs() < 1e-14);
        }
        assert_eq!(one[120], 0.0);
    }

    #[test]
    fn pdf_normalized_nonnegative_and_periodic() {
        let rho = crate::states::loss_channel(&photon_subtracted_sv(0.28, dim()).unwrap().to_density(), 0.79).unwrap();
        let xs = grid_xs(2401);
        let h = xs[1] - xs[0];
        for theta in [0.0, 0.9, 2.5, 4.4] {
            let p = quadrature_pdf(&rho, theta, &xs);
            assert!(p.iter().all(|&v| v > -1e-10));
            assert!((p.iter().sum::<f64>() * h - 1.0).abs() < 1e-4);
            let q = quadrature_pdf(&rho, theta + TAU, &xs);
            assert!(p.iter().zip(&q).all(|(a, b)| (a - b).abs() < 1e-12));
        }
    }

    #[test]
    fn coherent_mean_follows_phase() {
        let rho = crate::states::coherent(Complex64::new(1.0, 0.0), dim()).unwrap().to_density();
        let xs = grid_xs(2401);
        let h = xs[1] - xs[0];
        for theta in [0.0, PI / 2.0, PI] {
            let p = quadrature_pdf(&rho, theta, &xs);
            let mean: f64 = xs.iter().zip(&p).map(|(x, p)| x * p).sum::<f64>() * h;
            assert!((mean - 2f64.sqrt() * theta.cos()).abs() < 1e-9, "theta {theta}");
        }
    }

    #[test]
    fn squeezed_vacuum_x_variance() {
        let rho = squeezed_vacuum(0.28, dim()).unwrap().to_density();
        let xs = grid_xs(2401);
        let h = xs[1] - xs[0];
        let p = quadrature_pdf(&rho, 0.0, &xs);
        let var: f64 = xs.iter().zip(&p).map(|(x, p)| x * x * p).sum::<f64>() * h;
        assert!((var - (-0.56f64).exp() / 2.0).abs() < 1e-8);
        assert!((var - 0.2856).abs() < 1e-4);
    }

    #[test]
    fn pdf_matches_wigner_marginal() {
        use crate::wigner::{marginal, wigner_from_rho, PhaseSpaceGrid};
        let rho = crate::states::loss_channel(&photon_subtracted_sv(0.28, dim()).unwrap().to_density(), 0.79).unwrap();
        let g = PhaseSpaceGrid::default();
        let w = wigner_from_rho(&rho, &g).unwrap();
        for theta in [0.0, 0.6, 1.9] {
            let m = marginal(&w, theta);
            let p = quadrature_pdf(&rho, theta, &m.xs);
            let d = m.pdf.iter().zip(&p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(d < 2e-3, "theta {theta}: {d:e}");
        }
    }

    #[test]
    fn vacuum_sample_variance() {
        let ds = sample_quadratures(&PureState::vacuum(dim()).to_density(), 100_000, 7).unwrap();
        let n = ds.len() as f64;
        let mean = ds.records().iter().map(|r| r.x).sum::<f64>() / n;
        let var = ds.records().iter().map(|r| (r.x - mean).powi(2)).sum::<f64>() / n;
        assert!((var - 0.5).abs() < 0.01);
        assert!(ds.records().iter().all(|r| (0.0..TAU).contains(&r.theta)));
    }

    #[test]
    fn one_photon_node_is_empty() {
        let ds = sample_quadratures(&PureState::fock(1, dim()).unwrap().to_density(), 100_000, 11).unwrap();
        let frac = ds.records().iter().filter(|r| r.x.abs() < 0.1).count() as f64 / ds.len() as f64;
        // ∫_{-0.1}^{0.1} (2/√π) x² e^{−x²} dx ≈ 7.5e-4
        assert!(frac < 0.002, "{frac}");
    }

    #[test]
    fn sampling_is_deterministic() {
        let rho = photon_subtracted_sv(0.28, dim()).unwrap().to_density();
        let a = sample_quadratures(&rho, 500, 42).unwrap();
        let b = sample_quadratures(&rho, 500, 42).unwrap();
        let c = sample_quadratures(&rho, 500, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.records(), c.records());
        assert!(sample_quadratures(&rho, 0, 1).is_err());
    }

    #[test]
    fn seed_to_dataset_mapping_is_stable() {
        // Golden values: changing the RNG, table or sampler breaks this on purpose.
        let ds = sample_quadratures(&PureState::vacuum(dim()).to_density(), 3, 2024).unwrap();
        let got: Vec<(f64, f64)> = ds.records().iter().map(|r| (r.theta, r.x)).collect();
        for (g, w) in got.iter().zip(GOLDEN.iter()) {
            assert!((g.0 - w.0).abs() < 1e-12 && (g.1 - w.1).abs() < 1e-12, "{got:?}");
        }
    }

    const GOLDEN: [(f64, f64); 3] = [
        (1.0494122995743025, 1.4904149740567967),
        (4.308484650842413, 0.9388290466002923),
        (4.345547849563681, -0.005484488959729599),
    ];

    #[test]
    fn dataset_csv_round_trip() {
        let rho = photon_subtracted_sv(0.28, dim()).unwrap().to_density();
        let ds = sample_quadratures(&rho, 1000, 5).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        ds.write_csv(&path).unwrap();
        let back = QuadratureDataset::read_csv(&path).unwrap();
        assert_eq!(back.meta(), ds.meta());
        for (a, b) in back.records().iter().zip(ds.records()) {
            assert!((a.theta - b.theta).abs() < 1e-12 && (a.x - b.x).abs() < 1e-12);
        }
    }

    #[test]
    fn dataset_read_errors() {
        let dir = tempfile::tempdir().unwrap();
        let empty = dir.path().join("empty.csv");
        std::fs::write(&empty, "").unwrap();
        assert!(QuadratureDataset::read_csv(&empty).is_err());
        let header = dir.path().join("header.csv");
        std::fs::write(&header, "theta,x\n").unwrap();
        assert!(matches!(QuadratureDataset::read_csv(&header), Err(Error::NoRecords)));
        let bad = dir.path().join("bad.csv");
        std::fs::write(&bad, "theta,x\n0.1,0.2\n0.3,abc\n").unwrap();
        match QuadratureDataset::read_csv(&bad) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
        let range = dir.path().join("range.csv");
        std::fs::write(&range, "theta,x\n7.0,0.2\n").unwrap();
        assert!(matches!(QuadratureDataset::read_csv(&range), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn mode_function_of_constant_trace() {
        let trace = TimeTrace::new(vec![2.0; 500], 1e9, 250).unwrap();
        let gamma = gamma_from_fwhm(12.3e6);
        let out = mode_function_quadrature(&trace, gamma).unwrap();
        let f = mode_function(&trace, gamma);
        let dt = 1e-9;
        let norm = (f.iter().map(|v| v * v).sum::<f64>() * dt).sqrt();
        assert!((out.value - 2.0 * f.iter().sum::<f64>() * dt / norm).abs() < 1e-15);
        assert!(out.contained);
    }

    #[test]
    fn mode_function_flags_short_window() {
        let trace = TimeTrace::new(vec![0.0; 20], 1e9, 10).unwrap();
        let out = mode_function_quadrature(&trace, 1e7).unwrap();
        assert!(!out.contained);
        assert!(mode_function_quadrature(&trace, 0.0).is_err());
        assert!(TimeTrace::new(vec![0.0; 5], 1e9, 5).is_err());
        assert!(TimeTrace::new(vec![0.0; 5], 0.0, 2).is_err());
    }
}
