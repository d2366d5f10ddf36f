//! TOML experiment configuration.

use anyhow::{bail, ensure, Context, Result};
use cvtele::fock::{DensityMatrix, FockDim};
use cvtele::spectra::{ChannelResponse, SqueezerSpec};
use cvtele::states::{dark_count_mix, loss_channel, mixture_model1, odd_cat, photon_subtracted_sv, squeezed_vacuum};
use cvtele::teleport::{TeleporterParams, DEFAULT_N_QUAD};
use cvtele::tomography::MleOptions;
use cvtele::wigner::PhaseSpaceGrid;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Smallest dataset accepted when a reconstruction is requested.
pub const MIN_RECONSTRUCTION_SAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InputModel {
    /// η|1⟩⟨1| + (1−η)|0⟩⟨0|
    Model1 { eta: f64 },
    /// Photon-subtracted squeezed vacuum after loss η.
    Model3 { s: f64, eta: f64 },
    PureCat { alpha: f64 },
    PhotonSubtracted { s: f64 },
}

impl Default for InputModel {
    fn default() -> Self {
        InputModel::Model3 { s: 0.28, eta: 0.79 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "RawInput", into = "RawInput")]
pub struct InputConfig {
    pub model: InputModel,
    /// Extra beam-splitter transmittance applied after the model.
    pub loss: Option<f64>,
    /// Ratio of true trigger events to dark counts; dark counts herald the
    /// unsubtracted squeezed vacuum (plain vacuum for models without squeezing).
    pub dark_count_ratio: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum ModelKind {
    Model1,
    Model3,
    PureCat,
    PhotonSubtracted,
}

/// On-disk shape of `[input]`: a model tag plus whichever parameters it takes.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInput {
    model: ModelKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    loss: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dark_count_ratio: Option<f64>,
}

impl TryFrom<RawInput> for InputConfig {
    type Error = String;

    fn try_from(raw: RawInput) -> std::result::Result<Self, String> {
        let need = |v: Option<f64>, name: &str| v.ok_or_else(|| format!("input model {:?} needs `{name}`", raw.model));
        let unused = |v: Option<f64>, name: &str| match v {
            Some(_) => Err(format!("input model {:?} takes no `{name}`", raw.model)),
            None => Ok(()),
        };
        let model = match raw.model {
            ModelKind::Model1 => {
                unused(raw.s, "s")?;
                unused(raw.alpha, "alpha")?;
                InputModel::Model1 { eta: need(raw.eta, "eta")? }
            }
            ModelKind::Model3 => {
                unused(raw.alpha, "alpha")?;
                InputModel::Model3 { s: need(raw.s, "s")?, eta: need(raw.eta, "eta")? }
            }
            ModelKind::PureCat => {
                unused(raw.s, "s")?;
                unused(raw.eta, "eta")?;
                InputModel::PureCat { alpha: need(raw.alpha, "alpha")? }
            }
            ModelKind::PhotonSubtracted => {
                unused(raw.alpha, "alpha")?;
                unused(raw.eta, "eta")?;
                InputModel::PhotonSubtracted { s: need(raw.s, "s")? }
            }
        };
        Ok(Self { model, loss: raw.loss, dark_count_ratio: raw.dark_count_ratio })
    }
}

impl From<InputConfig> for RawInput {
    fn from(c: InputConfig) -> Self {
        let mut raw = RawInput { model: ModelKind::Model1, eta: None, s: None, alpha: None, loss: c.loss, dark_count_ratio: c.dark_count_ratio };
        match c.model {
            InputModel::Model1 { eta } => raw.eta = Some(eta),
            InputModel::Model3 { s, eta } => (raw.model, raw.s, raw.eta) = (ModelKind::Model3, Some(s), Some(eta)),
            InputModel::PureCat { alpha } => (raw.model, raw.alpha) = (ModelKind::PureCat, Some(alpha)),
            InputModel::PhotonSubtracted { s } => (raw.model, raw.s) = (ModelKind::PhotonSubtracted, Some(s)),
        }
        raw
    }
}

impl InputConfig {
    pub fn build(&self, dim: FockDim) -> Result<DensityMatrix> {
        // (lossless state, squeezing of its dark-count background, built-in transmittance)
        let (pure, s, model_eta) = match self.model {
            InputModel::Model1 { eta } => (mixture_model1(eta, dim)?, 0.0, 1.0),
            InputModel::Model3 { s, eta } => (photon_subtracted_sv(s, dim)?.to_density(), s, eta),
            InputModel::PureCat { alpha } => (odd_cat(alpha, dim)?.to_density(), 0.0, 1.0),
            InputModel::PhotonSubtracted { s } => (photon_subtracted_sv(s, dim)?.to_density(), s, 1.0),
        };
        let eta = model_eta * self.loss.unwrap_or(1.0);
        let signal = loss_channel(&pure, eta)?;
        match self.dark_count_ratio {
            Some(ratio) => {
                let background = loss_channel(&squeezed_vacuum(s, dim)?.to_density(), eta)?;
                Ok(dark_count_mix(&signal, &background, ratio)?)
            }
            None => Ok(signal),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TeleporterConfig {
    pub enabled: bool,
    /// EPR correlation parameter; give either this or `squeezing_db`.
    pub r: Option<f64>,
    pub squeezing_db: Option<f64>,
    /// Gauss–Hermite nodes per quadrature for the Fock-space channel.
    pub n_quad: usize,
}

impl Default for TeleporterConfig {
    fn default() -> Self {
        Self { enabled: true, r: None, squeezing_db: None, n_quad: DEFAULT_N_QUAD }
    }
}

/// Squeezing used when neither `r` nor `squeezing_db` is given.
pub const DEFAULT_SQUEEZING_DB: f64 = 6.9;

impl TeleporterConfig {
    pub fn params(&self) -> Result<TeleporterParams> {
        Ok(match (self.r, self.squeezing_db) {
            (Some(_), Some(_)) => bail!("teleporter: give either r or squeezing_db, not both"),
            (Some(r), None) => TeleporterParams::new(r)?,
            (None, Some(db)) => TeleporterParams::from_squeezing_db(db)?,
            (None, None) => TeleporterParams::from_squeezing_db(DEFAULT_SQUEEZING_DB)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    pub n: usize,
    pub seed: u64,
    /// Run maximum-likelihood reconstruction on the sampled data.
    pub reconstruct: bool,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self { n: 200_000, seed: 1, reconstruct: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub half_width: f64,
    pub points: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { half_width: 5.0, points: 201 }
    }
}

impl GridConfig {
    pub fn grid(&self) -> Result<PhaseSpaceGrid> {
        ensure!(self.points % 2 == 1, "grid.points must be odd so the origin is a node, got {}", self.points);
        Ok(PhaseSpaceGrid::symmetric(self.half_width, self.points)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// |α| range scanned for the nearest odd cat.
    pub cat_alpha_range: (f64, f64),
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self { cat_alpha_range: (0.3, 2.0) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectraConfig {
    pub squeezer: SqueezerSpec,
    pub channel: ChannelResponse,
    pub f_min_hz: f64,
    pub f_max_hz: f64,
    pub points: usize,
}

impl Default for SpectraConfig {
    fn default() -> Self {
        Self {
            squeezer: SqueezerSpec::default(),
            channel: ChannelResponse::default(),
            f_min_hz: 0.0,
            f_max_hz: 20e6,
            points: 401,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub out: PathBuf,
    pub input: InputConfig,
    pub teleporter: TeleporterConfig,
    pub sampling: SamplingConfig,
    pub mle: MleOptions,
    pub grid: GridConfig,
    pub analysis: AnalysisConfig,
    pub spectra: SpectraConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            out: PathBuf::from("results"),
            input: InputConfig::default(),
            teleporter: TeleporterConfig::default(),
            sampling: SamplingConfig::default(),
            mle: MleOptions::default(),
            grid: GridConfig::default(),
            analysis: AnalysisConfig::default(),
            spectra: SpectraConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).context("parsing configuration")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.sampling.n >= 1, "sampling.n must be >= 1");
        if self.sampling.reconstruct {
            ensure!(
                self.sampling.n >= MIN_RECONSTRUCTION_SAMPLES,
                "sampling.n = {} is below {MIN_RECONSTRUCTION_SAMPLES}, the minimum for reconstruction",
                self.sampling.n
            );
        }
        self.mle.validate()?;
        self.grid.grid()?;
        if self.teleporter.enabled {
            self.teleporter.params()?;
        }
        let (lo, hi) = self.analysis.cat_alpha_range;
        ensure!(lo > 0.0 && hi > lo, "analysis.cat_alpha_range must satisfy 0 < lo < hi");
        self.spectra.squeezer.validate()?;
        self.spectra.channel.validate()?;
        Ok(())
    }
}
