//! Maximum-likelihood state reconstruction from homodyne data.

use crate::error::{invalid, Error, Result};
use crate::fock::{DensityMatrix, FockDim, FockOperator};
use crate::homodyne::{QuadratureDataset, QuadratureRecord};
use crate::special::hermite_functions;
use crate::states::odd_cat;
use crate::wigner::wigner_origin_parity;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Probabilities below this are floored before taking logs or dividing.
pub const PROB_FLOOR: f64 = 1e-300;
/// Bins per parallel work unit; fixed so the reduction order never depends on the thread count.
const CHUNK: usize = 64;
/// Eigenvalues in [−EIG_CLAMP, 0) are set to zero on output.
const EIG_CLAMP: f64 = 1e-10;
const MONOTONE_SLACK: f64 = 1e-12;

/// |θ,x⟩⟨θ,x| with ⟨n|θ,x⟩ = e^{inθ} ψ_n(x), so that Tr(Πρ) = pr(x|θ).
pub fn projector(theta: f64, x: f64, dim: FockDim) -> FockOperator {
    let n = dim.size();
    let psi = hermite_functions(x, dim.n_max());
    let ket: Vec<Complex64> = (0..n).map(|k| Complex64::from_polar(psi[k], k as f64 * theta)).collect();
    let m = DMatrix::from_fn(n, n, |a, b| ket[a] * ket[b].conj());
    FockOperator::new(m).expect("square by construction")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum Binning {
    /// Counts on a θ × x histogram; each bin uses its exactly integrated POVM element.
    Histogram { n_theta: usize, n_x: usize, x_range: (f64, f64) },
    /// One rank-1 projector per record. Only sensible for small datasets.
    PerSample,
}

impl Default for Binning {
    fn default() -> Self {
        Binning::Histogram { n_theta: 36, n_x: 161, x_range: (-6.0, 6.0) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MleOptions {
    pub n_max: FockDim,
    pub max_iters: usize,
    pub loglik_tol: f64,
    pub binning: Binning,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self { n_max: FockDim::default(), max_iters: 500, loglik_tol: 1e-9, binning: Binning::default() }
    }
}

impl MleOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.loglik_tol > 0.0) || !self.loglik_tol.is_finite() {
            return Err(invalid(format!("loglik_tol must be > 0, got {}", self.loglik_tol)));
        }
        if let Binning::Histogram { n_theta, n_x, x_range: (lo, hi) } = self.binning {
            if n_theta == 0 || n_x == 0 || !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(invalid(format!("bad histogram binning {:?}", self.binning)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ReconstructionReport {
    pub rho: DensityMatrix,
    pub iterations: usize,
    pub loglik: f64,
    pub converged: bool,
    pub loglik_history: Vec<f64>,
}

/// Weighted POVM elements for the likelihood.
struct Povm {
    elements: Vec<DMatrix<Complex64>>,
    counts: Vec<f64>,
}

fn per_sample_povm(records: &[QuadratureRecord], dim: FockDim) -> Povm {
    let elements = records.par_iter().map(|r| projector(r.theta, r.x, dim).matrix().clone()).collect();
    Povm { elements, counts: vec![1.0; records.len()] }
}

fn histogram_povm(records: &[QuadratureRecord], dim: FockDim, n_theta: usize, n_x: usize, range: (f64, f64)) -> Povm {
    let (lo, hi) = range;
    let dx = (hi - lo) / n_x as f64;
    let dtheta = TAU / n_theta as f64;
    let mut counts = vec![0.0; n_theta * n_x];
    let mut clipped = 0usize;
    for r in records {
        let ti = ((r.theta / dtheta) as usize).min(n_theta - 1);
        let xf = (r.x - lo) / dx;
        if xf < 0.0 || xf >= n_x as f64 {
            clipped += 1;
        }
        let xi = (xf.max(0.0) as usize).min(n_x - 1);
        counts[ti * n_x + xi] += 1.0;
    }
    if clipped > 0 {
        log::warn!("{clipped} records outside x range [{lo}, {hi}] assigned to edge bins");
    }

    let n = dim.size();
    // (1/Δx)∫ψ_aψ_b dx per x-bin, 4-point Gauss–Legendre (exact enough for Δx ≲ 0.1).
    let gl = [
        (-0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
        (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
        (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
        (0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
    ];
    let x_kernels: Vec<DMatrix<f64>> = (0..n_x)
        .into_par_iter()
        .map(|xi| {
            let mid = lo + (xi as f64 + 0.5) * dx;
            let mut k = DMatrix::zeros(n, n);
            for &(node, w) in &gl {
                let psi = hermite_functions(mid + 0.5 * dx * node, dim.n_max());
                for a in 0..n {
                    for b in 0..n {
                        k[(a, b)] += 0.5 * w * psi[a] * psi[b];
                    }
                }
            }
            k
        })
        .collect();
    // (1/Δθ)∫e^{i(a−b)θ}dθ = e^{i(a−b)θ_c} sinc((a−b)Δθ/2)
    let theta_kernel = |ti: usize| {
        let center = (ti as f64 + 0.5) * dtheta;
        DMatrix::from_fn(n, n, |a, b| {
            let k = a as f64 - b as f64;
            let arg = 0.5 * k * dtheta;
            let sinc = if k == 0.0 { 1.0 } else { arg.sin() / arg };
            Complex64::from_polar(sinc, k * center)
        })
    };
    let occupied: Vec<usize> = (0..counts.len()).filter(|&j| counts[j] > 0.0).collect();
    let elements = occupied
        .par_iter()
        .map(|&j| {
            let (ti, xi) = (j / n_x, j % n_x);
            let th = theta_kernel(ti);
            DMatrix::from_fn(n, n, |a, b| th[(a, b)] * x_kernels[xi][(a, b)])
        })
        .collect();
    Povm { elements, counts: occupied.iter().map(|&j| counts[j]).collect() }
}

/// Tr(Πρ) for Hermitian ρ, Π.
fn expectation(pi: &DMatrix<Complex64>, rho: &DMatrix<Complex64>) -> f64 {
    pi.iter().zip(rho.transpose().iter()).map(|(a, b)| (a * b).re).sum()
}

impl Povm {
    /// Returns (log-likelihood, R = Σ f_j Π_j / p_j).
    fn evaluate(&self, rho: &DMatrix<Complex64>) -> (f64, DMatrix<Complex64>) {
        let n = rho.nrows();
        let partials: Vec<(f64, DMatrix<Complex64>)> = self
            .elements
            .par_chunks(CHUNK)
            .zip(self.counts.par_chunks(CHUNK))
            .map(|(els, cnts)| {
                let mut ll = 0.0;
                let mut r = DMatrix::zeros(n, n);
                for (pi, &f) in els.iter().zip(cnts) {
                    let p = expectation(pi, rho).max(PROB_FLOOR);
                    ll += f * p.ln();
                    r += pi * Complex64::new(f / p, 0.0);
                }
                (ll, r)
            })
            .collect();
        let mut ll = 0.0;
        let mut r = DMatrix::zeros(n, n);
        for (l, m) in partials {
            ll += l;
            r += m;
        }
        (ll, r)
    }

    fn loglik(&self, rho: &DMatrix<Complex64>) -> f64 {
        let partials: Vec<f64> = self
            .elements
            .par_chunks(CHUNK)
            .zip(self.counts.par_chunks(CHUNK))
            .map(|(els, cnts)| els.iter().zip(cnts).map(|(pi, &f)| f * expectation(pi, rho).max(PROB_FLOOR).ln()).sum())
            .collect();
        partials.into_iter().sum()
    }
}

fn normalized_sandwich(op: &DMatrix<Complex64>, rho: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let out = op * rho * op.adjoint();
    let out = (&out + out.adjoint()) * Complex64::new(0.5, 0.0);
    let tr = out.trace().re;
    out / Complex64::new(tr, 0.0)
}

fn clean_up(rho: &DMatrix<Complex64>) -> Result<DensityMatrix> {
    let herm = (rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = herm.clone().symmetric_eigen();
    if eig.eigenvalues.iter().all(|&v| v >= 0.0) {
        let tr = herm.trace().re;
        return DensityMatrix::new(herm / Complex64::new(tr, 0.0));
    }
    let vals: Vec<f64> = eig.eigenvalues.iter().map(|&v| if (-EIG_CLAMP..0.0).contains(&v) { 0.0 } else { v }).collect();
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(vals.len(), vals.iter().map(|&v| Complex64::new(v, 0.0))));
    let m = &eig.eigenvectors * d * eig.eigenvectors.adjoint();
    let tr = m.trace().re;
    DensityMatrix::new(m / Complex64::new(tr, 0.0))
}

/// Iterates ρ ← N[RρR] from I/(n_max+1).
///
/// A step that would lower the likelihood is retried with the diluted
/// operator I + εR for shrinking ε; if no ε helps, the iteration stops.
pub fn mle_reconstruct(data: &QuadratureDataset, opts: &MleOptions) -> Result<ReconstructionReport> {
    opts.validate()?;
    if data.is_empty() {
        return Err(Error::NoRecords);
    }
    let dim = opts.n_max;
    let povm = match opts.binning {
        Binning::PerSample => per_sample_povm(data.records(), dim),
        Binning::Histogram { n_theta, n_x, x_range } => histogram_povm(data.records(), dim, n_theta, n_x, x_range),
    };
    if povm.elements.is_empty() {
        return Err(Error::Likelihood("all bins are empty".into()));
    }
    let total: f64 = povm.counts.iter().sum();
    let mut rho = DensityMatrix::maximally_mixed(dim).matrix().clone();
    let (mut ll, mut r) = povm.evaluate(&rho);
    let mut history = vec![ll];
    let mut converged = false;
    let mut iterations = 0;
    let identity = DMatrix::<Complex64>::identity(dim.size(), dim.size());

    while iterations < opts.max_iters {
        if !ll.is_finite() {
            return Err(Error::Likelihood(format!("non-finite log-likelihood at iteration {iterations}")));
        }
        let mut candidate = normalized_sandwich(&r, &rho);
        let mut next = povm.evaluate(&candidate);
        if next.0 < ll - MONOTONE_SLACK {
            let mut eps = 1.0;
            let r_scaled = &r / Complex64::new(total, 0.0);
            loop {
                candidate = normalized_sandwich(&(&identity + &r_scaled * Complex64::new(eps, 0.0)), &rho);
                let l = povm.loglik(&candidate);
                if l >= ll - MONOTONE_SLACK {
                    next = povm.evaluate(&candidate);
                    break;
                }
                eps *= 0.5;
                if eps < 1e-8 {
                    log::debug!("no likelihood-increasing step at iteration {iterations}");
                    converged = true;
                    break;
                }
            }
            if converged {
                break;
            }
        }
        iterations += 1;
        let improvement = (next.0 - ll) / ll.abs().max(f64::MIN_POSITIVE);
        rho = candidate;
        ll = next.0;
        r = next.1;
        history.push(ll);
        if improvement < opts.loglik_tol {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("MLE stopped at max_iters = {} without meeting loglik_tol", opts.max_iters);
    }
    Ok(ReconstructionReport { rho: clean_up(&rho)?, iterations, loglik: ll, converged, loglik_history: history })
}

pub fn mean_photon(rho: &DensityMatrix) -> f64 {
    rho.mean_photon()
}

pub fn photon_distribution(rho: &DensityMatrix) -> Vec<f64> {
    rho.populations()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CatFit {
    /// |α| of the best odd cat.
    pub alpha_star: f64,
    /// Orientation arg α ∈ [0, π); odd cats at φ and φ + π coincide up to sign.
    pub phase: f64,
    pub f_cat: f64,
    /// The maximum sits on an edge of the scanned |α| range.
    pub at_boundary: bool,
}

const PHASE_SCAN: usize = 90;

fn golden_max(f: impl Fn(f64) -> Result<f64>, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)> {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d)?;
        }
    }
    let mid = 0.5 * (a + b);
    Ok((mid, f(mid)?))
}

/// Best fidelity over the cat orientation at fixed |α|; returns (phase, fidelity).
fn best_over_phase(rho: &DMatrix<Complex64>, amps: &[f64]) -> (f64, f64) {
    let n = amps.len();
    let f = |phi: f64| -> f64 {
        let ket: Vec<Complex64> = (0..n).map(|k| Complex64::from_polar(amps[k], k as f64 * phi)).collect();
        let mut acc = Complex64::new(0.0, 0.0);
        for a in 0..n {
            for b in 0..n {
                acc += ket[a].conj() * rho[(a, b)] * ket[b];
            }
        }
        acc.re
    };
    let h = std::f64::consts::PI / PHASE_SCAN as f64;
    let (best, fbest) = (0..PHASE_SCAN).map(|i| (i, f(i as f64 * h))).fold((0, f64::NEG_INFINITY), |acc, p| if p.1 > acc.1 { p } else { acc });
    let (phase, val) = golden_max(|x| Ok(f(x)), (best as f64 - 1.0) * h, (best as f64 + 1.0) * h, 1e-9).expect("infallible");
    if val >= fbest {
        (phase.rem_euclid(std::f64::consts::PI), val.clamp(0.0, 1.0))
    } else {
        (best as f64 * h, fbest.clamp(0.0, 1.0))
    }
}

/// Maximizes ⟨cat_α|ρ|cat_α⟩ over |α| ∈ [lo, hi] and the orientation of α.
///
/// Dense |α| scan (step ≤ 0.005), then golden-section refinement around the best point.
pub fn nearest_cat_fidelity(rho: &DensityMatrix, alpha_range: (f64, f64)) -> Result<CatFit> {
    let (lo, hi) = alpha_range;
    if !(lo > 0.0) || !(hi > lo) || !hi.is_finite() {
        return Err(invalid(format!("alpha range must satisfy 0 < lo < hi, got {alpha_range:?}")));
    }
    let dim = rho.dim();
    let m = rho.matrix();
    let eval = |a: f64| -> Result<(f64, f64)> {
        let cat = odd_cat(a, dim)?;
        let amps: Vec<f64> = cat.amplitudes().iter().map(|z| z.re).collect();
        Ok(best_over_phase(m, &amps))
    };
    let steps = ((hi - lo) / 0.005).ceil().max(1.0) as usize;
    let h = (hi - lo) / steps as f64;
    let scan: Vec<(f64, f64)> = (0..=steps).into_par_iter().map(|i| eval(lo + i as f64 * h)).collect::<Result<_>>()?;
    let best = scan.iter().enumerate().fold(0, |b, (i, v)| if v.1 > scan[b].1 { i } else { b });
    let at_boundary = best == 0 || best == steps;
    if at_boundary {
        log::warn!("cat fidelity maximum at range boundary |alpha| = {}", lo + best as f64 * h);
    }
    let a = (lo + best.saturating_sub(1) as f64 * h).max(lo);
    let b = (lo + (best + 1) as f64 * h).min(hi);
    let (mid, _) = golden_max(|x| Ok(eval(x)?.1), a, b, 1e-7)?;
    let refined = eval(mid)?;
    let grid_best = (lo + best as f64 * h, scan[best]);
    let (alpha_star, (phase, f_cat)) = if refined.1 >= grid_best.1.1 { (mid, refined) } else { grid_best };
    Ok(CatFit { alpha_star, phase, f_cat, at_boundary })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportMetrics {
    pub mean_photon: f64,
    pub w00: f64,
    pub f_cat: f64,
    pub alpha_star: f64,
    pub iterations: usize,
    pub loglik: f64,
}

impl ReconstructionReport {
    pub fn metrics(&self, alpha_range: (f64, f64)) -> Result<ReportMetrics> {
        let cat = nearest_cat_fidelity(&self.rho, alpha_range)?;
        Ok(ReportMetrics {
            mean_photon: mean_photon(&self.rho),
            w00: wigner_origin_parity(&self.rho),
            f_cat: cat.f_cat,
            alpha_star: cat.alpha_star,
            iterations: self.iterations,
            loglik: self.loglik,
        })
    }

    /// Density-matrix JSON with an added `metrics` object.
    pub fn to_json(&self, alpha_range: (f64, f64)) -> Result<String> {
        let mut value = serde_json::to_value(&self.rho)?;
        value["metrics"] = serde_json::to_value(self.metrics(alpha_range)?)?;
        Ok(serde_json::to_string_pretty(&value)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{fidelity_pure, PureState};
    use crate::homodyne::{quadrature_pdf, sample_quadratures};
    use crate::states::{coherent, loss_channel, photon_subtracted_sv};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn dim() -> FockDim {
        FockDim::default()
    }

    fn random_state(seed: u64, dim: FockDim) -> DensityMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = dim.size();
        let a = DMatrix::from_fn(n, n, |i, j| {
            let damp = (-(0.3 * (i + j) as f64)).exp();
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) * damp
        });
        let m = &a * a.adjoint();
        let tr = m.trace().re;
        DensityMatrix::new(m / Complex64::new(tr, 0.0)).unwrap()
    }

    #[test]
    fn projector_vacuum_element() {
        let p = projector(0.4, 0.0, dim());
        assert!((p.matrix()[(0, 0)].re - 1.0 / PI.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn projector_matches_pdf() {
        for seed in 0..5 {
            let rho = random_state(seed, dim());
            for (theta, x) in [(0.0, 0.3), (1.1, -0.8), (2.9, 1.7), (5.5, 0.0)] {
                let direct = expectation(projector(theta, x, dim()).matrix(), rho.matrix());
                let pdf = quadrature_pdf(&rho, theta, &[x])[0];
                assert!((direct - pdf).abs() < 1e-10, "seed {seed}: {direct} vs {pdf}");
            }
        }
    }

    #[test]
    fn projector_completeness() {
        let integrate = |half: f64| {
            let n = 3601;
            let h = 2.0 * half / (n - 1) as f64;
            let mut sum = DMatrix::<Complex64>::zeros(16, 16);
            for i in 0..n {
                let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
                sum += projector(0.8, -half + i as f64 * h, dim()).matrix() * Complex64::new(w * h, 0.0);
            }
            sum - DMatrix::<Complex64>::identity(16, 16)
        };
        assert!(integrate(9.0).iter().all(|z| z.norm() < 1e-4));
        // On [−6, 6] the top levels leak (ψ₁₅ keeps ~6e-3 outside); low levels are complete.
        let d = integrate(6.0);
        assert!(d.view((0, 0), (11, 11)).iter().all(|z| z.norm() < 1e-4));
        assert!(d[(15, 15)].re.abs() < 1e-2);
    }

    #[test]
    fn binned_povm_sums_to_identity() {
        let records: Vec<QuadratureRecord> = (0..36)
            .flat_map(|t| (0..161).map(move |x| QuadratureRecord { theta: (t as f64 + 0.5) * TAU / 36.0, x: -6.0 + (x as f64 + 0.5) * 12.0 / 161.0 }))
            .collect();
        let povm = histogram_povm(&records, dim(), 36, 161, (-6.0, 6.0));
        assert_eq!(povm.elements.len(), 36 * 161);
        let mut sum = DMatrix::<Complex64>::zeros(16, 16);
        for el in &povm.elements {
            sum += el * Complex64::new(12.0 / 161.0 / 36.0, 0.0);
        }
        let d = sum - DMatrix::<Complex64>::identity(16, 16);
        assert!(d.view((0, 0), (11, 11)).iter().all(|z| z.norm() < 1e-4));
    }

    #[test]
    fn zero_iterations_returns_initial_state() {
        let data = sample_quadratures(&PureState::vacuum(dim()).to_density(), 1000, 3).unwrap();
        let opts = MleOptions { max_iters: 0, ..Default::default() };
        let rep = mle_reconstruct(&data, &opts).unwrap();
        assert_eq!(rep.iterations, 0);
        let mm = DensityMatrix::maximally_mixed(dim());
        assert!((rep.rho.matrix() - mm.matrix()).iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn vacuum_round_trip() {
        let data = sample_quadratures(&PureState::vacuum(dim()).to_density(), 20_000, 9).unwrap();
        let rep = mle_reconstruct(&data, &MleOptions::default()).unwrap();
        let f = fidelity_pure(&PureState::vacuum(dim()), &rep.rho).unwrap();
        assert!(f > 0.995, "{f}");
        for w in rep.loglik_history.windows(2) {
            assert!(w[1] >= w[0] - 1e-12);
        }
    }

    #[test]
    fn per_sample_mode_agrees_with_histogram() {
        let rho = coherent(Complex64::new(0.8, 0.3), dim()).unwrap().to_density();
        let data = sample_quadratures(&rho, 3000, 21).unwrap();
        let opts = MleOptions { max_iters: 200, ..Default::default() };
        let a = mle_reconstruct(&data, &opts).unwrap();
        let b = mle_reconstruct(&data, &MleOptions { binning: Binning::PerSample, ..opts }).unwrap();
        assert!((a.rho.mean_photon() - b.rho.mean_photon()).abs() < 0.02);
        for w in b.loglik_history.windows(2) {
            assert!(w[1] >= w[0] - 1e-12);
        }
    }

    #[test]
    fn reconstruction_is_deterministic() {
        let rho = photon_subtracted_sv(0.28, dim()).unwrap().to_density();
        let data = sample_quadratures(&rho, 5000, 4).unwrap();
        let opts = MleOptions { max_iters: 50, ..Default::default() };
        let a = mle_reconstruct(&data, &opts).unwrap();
        let b = mle_reconstruct(&data, &opts).unwrap();
        assert_eq!(a.rho.matrix(), b.rho.matrix());
        assert_eq!(a.loglik, b.loglik);
    }

    #[test]
    fn bad_options_rejected() {
        let data = sample_quadratures(&PureState::vacuum(dim()).to_density(), 10, 3).unwrap();
        let opts = MleOptions { loglik_tol: 0.0, ..Default::default() };
        assert!(mle_reconstruct(&data, &opts).is_err());
        let opts = MleOptions { binning: Binning::Histogram { n_theta: 0, n_x: 10, x_range: (-6.0, 6.0) }, ..Default::default() };
        assert!(mle_reconstruct(&data, &opts).is_err());
    }

    #[test]
    fn mean_photon_and_distribution() {
        let rho1 = crate::states::mixture_model1(0.77, dim()).unwrap();
        assert!((mean_photon(&rho1) - 0.77).abs() < 1e-14);
        let ps = photon_subtracted_sv(0.28, FockDim::new(40).unwrap()).unwrap().to_density();
        assert!((mean_photon(&ps) - (1.0 + 3.0 * 0.28f64.sinh().powi(2))).abs() < 1e-10);
        assert!((mean_photon(&ps) - 1.2414).abs() < 1e-4);
        assert_eq!(mean_photon(&PureState::vacuum(dim()).to_density()), 0.0);

        let cat = photon_distribution(&odd_cat(1.0, dim()).unwrap().to_density());
        assert!(cat.iter().step_by(2).all(|&p| p.abs() < 1e-15));
        let coh = photon_distribution(&coherent(Complex64::new(1.0, 0.0), dim()).unwrap().to_density());
        let mut fact = 1.0;
        for (n, p) in coh.iter().enumerate() {
            if n > 0 {
                fact *= n as f64;
            }
            assert!((p - (-1.0f64).exp() / fact).abs() < 1e-6);
        }
        let lossy = photon_distribution(&loss_channel(&PureState::fock(1, dim()).unwrap().to_density(), 0.77).unwrap());
        assert!((lossy[0] - 0.23).abs() < 1e-12 && (lossy[1] - 0.77).abs() < 1e-12);
        assert!((lossy.iter().sum::<f64>() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn cat_self_fidelity() {
        let fit = nearest_cat_fidelity(&odd_cat(1.0, dim()).unwrap().to_density(), (0.5, 2.0)).unwrap();
        assert!((fit.alpha_star - 1.0).abs() < 5e-3, "{fit:?}");
        assert!((fit.f_cat - 1.0).abs() < 1e-6);
        assert!(!fit.at_boundary);
    }

    #[test]
    fn cat_fidelity_of_model_states() {
        let ps = photon_subtracted_sv(0.28, dim()).unwrap().to_density();
        let lossless = nearest_cat_fidelity(&ps, (0.3, 2.0)).unwrap();
        assert!(lossless.f_cat >= 0.99, "{lossless:?}");
        let lossy = nearest_cat_fidelity(&loss_channel(&ps, 0.79).unwrap(), (0.3, 2.0)).unwrap();
        assert!(lossy.f_cat < lossless.f_cat);
        let edge = nearest_cat_fidelity(&ps, (0.2, 0.5)).unwrap();
        assert!(edge.at_boundary);
        assert!(nearest_cat_fidelity(&ps, (0.0, 1.0)).is_err());
        assert!(nearest_cat_fidelity(&ps, (1.0, 1.0)).is_err());
    }

    #[test]
    fn report_json_has_metrics() {
        let data = sample_quadratures(&PureState::vacuum(dim()).to_density(), 2000, 1).unwrap();
        let rep = mle_reconstruct(&data, &MleOptions { max_iters: 20, ..Default::default() }).unwrap();
        let text = rep.to_json((0.3, 2.0)).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        for key in ["mean_photon", "w00", "f_cat", "alpha_star", "iterations", "loglik"] {
            assert!(v["metrics"].get(key).is_some(), "{key}");
        }
        let back = DensityMatrix::from_json(&text).unwrap();
        assert!((back.matrix() - rep.rho.matrix()).iter().all(|z| z.norm() < 1e-12));
    }
}
