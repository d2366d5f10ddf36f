//! Truncated Fock-space linear algebra.
//!
//! Conventions: ħ = 1, `[x̂, p̂] = i`, x̂ = (â + â†)/√2, vacuum quadrature variance 1/2.
//! States live in span{|0⟩, …, |n_max⟩}.

use crate::error::{invalid, Error, Result};
use crate::special::{laguerre, ln_factorials};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub const DEFAULT_N_MAX: usize = 15;

const HERMITIAN_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-8;
const PSD_TOL: f64 = -1e-8;
/// Lost trace above this is reported through `log::warn!`.
pub const LEAKAGE_WARN: f64 = 1e-4;
const KRAUS_TOL: f64 = 1e-3;

/// Photon-number cutoff; the Hilbert-space dimension is `n_max + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct FockDim(usize);

impl FockDim {
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max < 1 {
            return Err(invalid("n_max must be at least 1"));
        }
        Ok(Self(n_max))
    }

    pub fn n_max(self) -> usize {
        self.0
    }

    /// Hilbert-space dimension.
    pub fn size(self) -> usize {
        self.0 + 1
    }
}

impl Default for FockDim {
    fn default() -> Self {
        Self(DEFAULT_N_MAX)
    }
}

impl TryFrom<usize> for FockDim {
    type Error = Error;
    fn try_from(n: usize) -> Result<Self> {
        Self::new(n)
    }
}

impl From<FockDim> for usize {
    fn from(d: FockDim) -> usize {
        d.0
    }
}

pub(crate) fn warn_leakage(what: &str, leakage: f64) {
    if leakage > LEAKAGE_WARN {
        log::warn!("{what}: truncation leakage {leakage:.3e} exceeds {LEAKAGE_WARN:e}");
    }
}

/// Normalized state vector in the truncated Fock basis.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amps: DVector<Complex64>,
    leakage: f64,
}

impl PureState {
    /// Normalizes `amps`. `leakage` is the probability known to be lost beyond the cutoff.
    pub fn from_amplitudes(amps: DVector<Complex64>, leakage: f64) -> Result<Self> {
        if amps.len() < 2 {
            return Err(invalid("state needs at least two Fock levels"));
        }
        if amps.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite("state amplitudes"));
        }
        let norm = amps.norm();
        if norm < 1e-150 {
            return Err(invalid("state vector has zero norm"));
        }
        Ok(Self { amps: amps / Complex64::new(norm, 0.0), leakage })
    }

    /// Fock state |n⟩.
    pub fn fock(n: usize, dim: FockDim) -> Result<Self> {
        if n > dim.n_max() {
            return Err(invalid(format!("|{n}> exceeds n_max = {}", dim.n_max())));
        }
        let mut amps = DVector::zeros(dim.size());
        amps[n] = Complex64::new(1.0, 0.0);
        Ok(Self { amps, leakage: 0.0 })
    }

    pub fn vacuum(dim: FockDim) -> Self {
        Self::fock(0, dim).expect("vacuum always fits")
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amps
    }

    pub fn dim(&self) -> FockDim {
        FockDim(self.amps.len() - 1)
    }

    pub fn leakage(&self) -> f64 {
        self.leakage
    }

    /// Probability of each Fock level.
    pub fn populations(&self) -> Vec<f64> {
        self.amps.iter().map(|c| c.norm_sqr()).collect()
    }

    pub fn mean_photon(&self) -> f64 {
        self.populations().iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }

    pub fn to_density(&self) -> DensityMatrix {
        let rho = &self.amps * self.amps.adjoint();
        DensityMatrix { rho, leakage: self.leakage }
    }
}

/// Density operator in the truncated Fock basis.
///
/// Hermitian, unit trace and positive semidefinite; every constructor enforces this.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    rho: DMatrix<Complex64>,
    leakage: f64,
}

impl DensityMatrix {
    /// Validates `rho` as-is (no renormalization).
    pub fn new(rho: DMatrix<Complex64>) -> Result<Self> {
        let out = Self { rho, leakage: 0.0 };
        out.validate()?;
        Ok(out)
    }

    /// Hermitizes and renormalizes a matrix produced by a channel, then validates it.
    /// `leakage` is the trace lost to truncation before renormalization.
    pub(crate) fn from_channel_output(mut rho: DMatrix<Complex64>, leakage: f64, what: &str) -> Result<Self> {
        if rho.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite("density matrix"));
        }
        rho = (&rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
        let tr = rho.trace().re;
        if tr <= 0.0 {
            return Err(Error::InvalidState(format!("{what}: non-positive trace {tr:e}")));
        }
        rho /= Complex64::new(tr, 0.0);
        warn_leakage(what, leakage);
        let out = Self { rho, leakage };
        out.validate()?;
        Ok(out)
    }

    pub fn maximally_mixed(dim: FockDim) -> Self {
        let n = dim.size();
        let rho = DMatrix::from_diagonal_element(n, n, Complex64::new(1.0 / n as f64, 0.0));
        Self { rho, leakage: 0.0 }
    }

    /// Diagonal state Σ w_k |n_k⟩⟨n_k|; weights must be nonnegative and sum to one.
    pub fn diagonal(weights: &[(usize, f64)], dim: FockDim) -> Result<Self> {
        let mut rho = DMatrix::zeros(dim.size(), dim.size());
        for &(n, w) in weights {
            if n > dim.n_max() {
                return Err(invalid(format!("|{n}> exceeds n_max = {}", dim.n_max())));
            }
            rho[(n, n)] += Complex64::new(w, 0.0);
        }
        Self::new(rho)
    }

    /// Checks the three density-matrix invariants.
    pub fn validate(&self) -> Result<()> {
        let n = self.rho.nrows();
        if n != self.rho.ncols() || n < 2 {
            return Err(Error::InvalidState(format!("bad shape {}x{}", n, self.rho.ncols())));
        }
        if self.rho.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite("density matrix"));
        }
        let herm = (&self.rho - self.rho.adjoint()).iter().map(|c| c.norm()).fold(0.0, f64::max);
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {herm:.3e})")));
        }
        let tr = self.rho.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} != 1")));
        }
        let min_eig = self.min_eigenvalue();
        if min_eig < PSD_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min_eig:.3e}")));
        }
        Ok(())
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let herm = (&self.rho + self.rho.adjoint()) * Complex64::new(0.5, 0.0);
        SymmetricEigen::new(herm).eigenvalues.iter().copied().collect()
    }

    fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.rho
    }

    pub fn dim(&self) -> FockDim {
        FockDim(self.rho.nrows() - 1)
    }

    pub fn n_max(&self) -> usize {
        self.rho.nrows() - 1
    }

    /// Accumulated probability lost to Fock truncation.
    pub fn leakage(&self) -> f64 {
        self.leakage
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.rho.nrows()).map(|n| self.rho[(n, n)].re).collect()
    }

    pub fn mean_photon(&self) -> f64 {
        self.populations().iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }

    /// Embeds into a larger cutoff or truncates to a smaller one (renormalizing).
    pub fn resized(&self, dim: FockDim) -> Result<Self> {
        let n = dim.size().min(self.rho.nrows());
        let mut rho = DMatrix::zeros(dim.size(), dim.size());
        rho.view_mut((0, 0), (n, n)).copy_from(&self.rho.view((0, 0), (n, n)));
        let lost = 1.0 - rho.trace().re;
        DensityMatrix::from_channel_output(rho, self.leakage + lost.max(0.0), "resize")
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Serialize, Deserialize)]
struct DensityMatrixJson {
    n_max: usize,
    rho: Vec<Vec<[f64; 2]>>,
}

impl Serialize for DensityMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let n = self.rho.nrows();
        let rho = (0..n)
            .map(|i| (0..n).map(|j| [self.rho[(i, j)].re, self.rho[(i, j)].im]).collect())
            .collect();
        DensityMatrixJson { n_max: n - 1, rho }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = DensityMatrixJson::deserialize(d)?;
        let n = raw.n_max + 1;
        if raw.rho.len() != n || raw.rho.iter().any(|row| row.len() != n) {
            return Err(D::Error::custom(format!("rho must be {n}x{n} for n_max = {}", raw.n_max)));
        }
        let rho = DMatrix::from_fn(n, n, |i, j| Complex64::new(raw.rho[i][j][0], raw.rho[i][j][1]));
        DensityMatrix::new(rho).map_err(D::Error::custom)
    }
}

/// Square operator on the truncated Fock space.
#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator(DMatrix<Complex64>);

impl FockOperator {
    pub fn new(m: DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() < 2 {
            return Err(invalid(format!("operator must be square, got {}x{}", m.nrows(), m.ncols())));
        }
        Ok(Self(m))
    }

    pub fn identity(dim: FockDim) -> Self {
        Self(DMatrix::identity(dim.size(), dim.size()))
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn dim(&self) -> FockDim {
        FockDim(self.0.nrows() - 1)
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self(&self.0 * c)
    }

    /// Applies the operator to a state vector; the result is not normalized.
    pub fn apply(&self, psi: &PureState) -> Result<DVector<Complex64>> {
        check_dim(self.0.nrows(), psi.amps.len())?;
        Ok(&self.0 * &psi.amps)
    }
}

impl std::ops::Mul for &FockOperator {
    type Output = FockOperator;
    fn mul(self, rhs: &FockOperator) -> FockOperator {
        FockOperator(&self.0 * &rhs.0)
    }
}

impl std::ops::Add for &FockOperator {
    type Output = FockOperator;
    fn add(self, rhs: &FockOperator) -> FockOperator {
        FockOperator(&self.0 + &rhs.0)
    }
}

impl std::ops::Sub for &FockOperator {
    type Output = FockOperator;
    fn sub(self, rhs: &FockOperator) -> FockOperator {
        FockOperator(&self.0 - &rhs.0)
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected: expected - 1, found: found - 1 });
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct LadderOperators {
    pub annihilation: FockOperator,
    pub creation: FockOperator,
    pub number: FockOperator,
}

/// â, â† and n̂ = â†â in the truncated basis.
pub fn ladder_operators(dim: FockDim) -> LadderOperators {
    let n = dim.size();
    let a = DMatrix::from_fn(n, n, |m, k| {
        if k >= 1 && m == k - 1 {
            Complex64::new((k as f64).sqrt(), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let ad = a.adjoint();
    // Equal to â†â; built directly so the diagonal is exact.
    let num = DMatrix::from_fn(n, n, |m, k| if m == k { Complex64::new(m as f64, 0.0) } else { Complex64::new(0.0, 0.0) });
    LadderOperators { annihilation: FockOperator(a), creation: FockOperator(ad), number: FockOperator(num) }
}

/// Matrix exponential e^A (scaling and squaring with a Padé approximant).
pub fn operator_exponential(a: &FockOperator) -> Result<FockOperator> {
    if a.0.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::NonFinite("operator"));
    }
    Ok(FockOperator(a.0.clone().exp()))
}

/// Generator (s/2)(â² − â†²) of the squeezing operator Ŝ(s).
pub fn squeeze_generator(s: f64, dim: FockDim) -> FockOperator {
    let l = ladder_operators(dim);
    let a2 = &l.annihilation * &l.annihilation;
    let ad2 = &l.creation * &l.creation;
    (&a2 - &ad2).scale(Complex64::new(s / 2.0, 0.0))
}

/// Generator β↠− β* â of the displacement operator D̂(β).
pub fn displacement_generator(beta: Complex64, dim: FockDim) -> FockOperator {
    let l = ladder_operators(dim);
    &l.creation.scale(beta) - &l.annihilation.scale(beta.conj())
}

/// Displacement operator D̂(β) from its closed-form matrix elements.
///
/// Unlike exponentiating the truncated generator, every element ⟨m|D̂|n⟩ with
/// m, n ≤ n_max is exact, so D̂ρD̂† is exact for states supported below the cutoff.
pub fn displacement(beta: Complex64, dim: FockDim) -> FockOperator {
    let n = dim.size();
    let lnf = ln_factorials(dim.n_max());
    let b2 = beta.norm_sqr();
    let env = (-0.5 * b2).exp();
    let mut d = DMatrix::zeros(n, n);
    for m in 0..n {
        for k in 0..n {
            let (hi, lo) = if m >= k { (m, k) } else { (k, m) };
            let diff = hi - lo;
            let root = (0.5 * (lnf[lo] - lnf[hi])).exp();
            let lag = laguerre(lo, diff as f64, b2);
            let phase = if m >= k { beta.powu(diff as u32) } else { (-beta.conj()).powu(diff as u32) };
            d[(m, k)] = phase * (root * env * lag);
        }
    }
    FockOperator(d)
}

/// ⟨ψ|ρ|ψ⟩, clamped to [0, 1].
pub fn fidelity_pure(target: &PureState, rho: &DensityMatrix) -> Result<f64> {
    check_dim(rho.rho.nrows(), target.amps.len())?;
    let v = (target.amps.adjoint() * &rho.rho * &target.amps)[(0, 0)].re;
    Ok(v.clamp(0.0, 1.0))
}

/// Uhlmann fidelity (Tr√(√ρ σ √ρ))² between two mixed states.
pub fn fidelity_mixed(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_dim(rho.rho.nrows(), sigma.rho.nrows())?;
    let sqrt_rho = psd_sqrt(&rho.rho);
    let inner = &sqrt_rho * &sigma.rho * &sqrt_rho;
    let inner = (&inner + inner.adjoint()) * Complex64::new(0.5, 0.0);
    let tr: f64 = SymmetricEigen::new(inner).eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).sum();
    Ok((tr * tr).clamp(0.0, 1.0))
}

fn psd_sqrt(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let herm = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    let roots = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| Complex64::new(l.max(0.0).sqrt(), 0.0)),
    );
    let v = &eig.eigenvectors;
    v * DMatrix::from_diagonal(&roots) * v.adjoint()
}

/// ρ' = Σ K ρ K†, renormalized.
///
/// The Kraus set is checked for Σ K†K = I on the whole truncated space; operators
/// that move population upward are inherently lossy at the cutoff, so only gross
/// violations (> 1e-3) are rejected and the lost trace is recorded as leakage.
pub fn apply_kraus_channel(rho: &DensityMatrix, kraus: &[FockOperator]) -> Result<DensityMatrix> {
    let n = rho.rho.nrows();
    if kraus.is_empty() {
        return Err(invalid("empty Kraus set"));
    }
    let mut completeness = DMatrix::<Complex64>::zeros(n, n);
    for k in kraus {
        check_dim(n, k.0.nrows())?;
        completeness += k.0.adjoint() * &k.0;
    }
    let deviation = (completeness - DMatrix::identity(n, n)).iter().map(|c| c.norm()).fold(0.0, f64::max);
    if deviation > KRAUS_TOL {
        return Err(Error::NotTracePreserving(deviation));
    }
    let mut out = DMatrix::<Complex64>::zeros(n, n);
    for k in kraus {
        out += &k.0 * &rho.rho * k.0.adjoint();
    }
    let lost = (1.0 - out.trace().re).max(0.0);
    DensityMatrix::from_channel_output(out, rho.leakage + lost, "Kraus channel")
}

/// Tr(ρ²).
pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.rho.iter().map(|c| c.norm_sqr()).sum()
}
