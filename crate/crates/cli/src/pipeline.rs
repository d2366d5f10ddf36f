//! End-to-end run: state → teleport → sample → reconstruct → metrics.

use crate::config::ExperimentConfig;
use anyhow::{Context, Result};
use cvtele::fock::DensityMatrix;
use cvtele::homodyne::sample_quadratures;
use cvtele::teleport::{gaussian_fidelity, teleport_fock, teleport_wigner, TeleporterParams};
use cvtele::tomography::{mle_reconstruct, nearest_cat_fidelity};
use cvtele::wigner::{wigner_from_rho, wigner_origin_parity, PhaseSpaceGrid, WignerGrid};
use serde::Serialize;
use std::path::{Path, PathBuf};

pub const BUNDLE: [&str; 7] =
    ["metrics.json", "wigner_in.csv", "wigner_out.csv", "dataset_in.csv", "dataset_out.csv", "rho_in.json", "rho_out.json"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StateMetrics {
    pub w00: f64,
    pub f_cat: f64,
    pub alpha_star: f64,
    pub mean_photon: f64,
}

impl StateMetrics {
    pub fn of(rho: &DensityMatrix, alpha_range: (f64, f64)) -> Result<Self> {
        let cat = nearest_cat_fidelity(rho, alpha_range)?;
        Ok(Self { w00: wigner_origin_parity(rho), f_cat: cat.f_cat, alpha_star: cat.alpha_star, mean_photon: rho.mean_photon() })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelMetrics {
    pub input: StateMetrics,
    pub output: StateMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub w00_in: f64,
    pub w00_out: f64,
    pub f_cat_in: f64,
    pub f_cat_out: f64,
    pub alpha_star_in: f64,
    pub alpha_star_out: f64,
    pub mean_photon_in: f64,
    pub mean_photon_out: f64,
    pub f_tele: Option<f64>,
    pub r: Option<f64>,
    /// "reconstructed" or "model": where the top-level state figures come from.
    pub source: &'static str,
    pub seed: u64,
    pub n: usize,
    pub model: ModelMetrics,
}

/// Wigner function of the teleported state on `grid`.
///
/// Evaluated on a grid widened by six kernel widths and cropped back, so the
/// convolution never loses weight over the edges of the requested window.
pub fn teleported_wigner(rho: &DensityMatrix, params: &TeleporterParams, grid: &PhaseSpaceGrid) -> Result<WignerGrid> {
    let pad = (6.0 * params.sigma() / grid.dx().min(grid.dp())).ceil() as usize;
    let wide = grid.padded(pad);
    let w = wigner_from_rho(rho, &wide)?;
    Ok(teleport_wigner(&w, params)?.crop(grid)?)
}

/// Files written so far, removed again if the run fails.
struct Outputs {
    dir: PathBuf,
    written: Vec<PathBuf>,
    created_dir: bool,
}

impl Outputs {
    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.written.push(p.clone());
        if name.ends_with(".csv") {
            self.written.push(p.with_extension("json"));
        }
        p
    }

    fn discard(self) {
        for p in &self.written {
            let _ = std::fs::remove_file(p);
        }
        if self.created_dir {
            let _ = std::fs::remove_dir(&self.dir);
        }
    }
}

pub fn run_pipeline(cfg: &ExperimentConfig) -> Result<Metrics> {
    cfg.validate()?;
    let created_dir = !cfg.out.exists();
    std::fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    let mut outputs = Outputs { dir: cfg.out.clone(), written: Vec::new(), created_dir };
    match run_inner(cfg, &mut outputs) {
        Ok(m) => Ok(m),
        Err(e) => {
            outputs.discard();
            Err(e)
        }
    }
}

fn run_inner(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Metrics> {
    let dim = cfg.mle.n_max;
    let grid = cfg.grid.grid()?;
    let range = cfg.analysis.cat_alpha_range;

    let rho_in = cfg.input.build(dim).context("building input state")?;
    let w_in = wigner_from_rho(&rho_in, &grid).context("input Wigner function")?;
    let (rho_out, w_out, params) = if cfg.teleporter.enabled {
        let params = cfg.teleporter.params()?;
        log::info!("teleporting with r = {:.4}", params.r());
        let rho_out = teleport_fock(&rho_in, &params, cfg.teleporter.n_quad).context("Fock-space teleportation")?;
        let w_out = teleported_wigner(&rho_in, &params, &grid).context("phase-space teleportation")?;
        (rho_out, w_out, Some(params))
    } else {
        (rho_in.clone(), w_in.clone(), None)
    };
    w_in.write_csv(&out.path("wigner_in.csv"))?;
    w_out.write_csv(&out.path("wigner_out.csv"))?;

    let seed = cfg.sampling.seed;
    let n = cfg.sampling.n;
    log::info!("sampling {n} quadratures per state");
    let data_in = sample_quadratures(&rho_in, n, seed)?;
    let data_out = sample_quadratures(&rho_out, n, seed.wrapping_add(1))?;
    data_in.write_csv(&out.path("dataset_in.csv"))?;
    data_out.write_csv(&out.path("dataset_out.csv"))?;

    let model = ModelMetrics { input: StateMetrics::of(&rho_in, range)?, output: StateMetrics::of(&rho_out, range)? };
    let (measured_in, measured_out, source) = if cfg.sampling.reconstruct {
        let mut measured = Vec::with_capacity(2);
        for (data, name) in [(&data_in, "rho_in.json"), (&data_out, "rho_out.json")] {
            log::info!("reconstructing {name}");
            let report = mle_reconstruct(data, &cfg.mle).with_context(|| format!("reconstruction for {name}"))?;
            std::fs::write(out.path(name), report.to_json(range)?)?;
            measured.push(StateMetrics::of(&report.rho, range)?);
        }
        (measured[0], measured[1], "reconstructed")
    } else {
        std::fs::write(out.path("rho_in.json"), rho_in.to_json()?)?;
        std::fs::write(out.path("rho_out.json"), rho_out.to_json()?)?;
        (model.input, model.output, "model")
    };

    let metrics = Metrics {
        w00_in: measured_in.w00,
        w00_out: measured_out.w00,
        f_cat_in: measured_in.f_cat,
        f_cat_out: measured_out.f_cat,
        alpha_star_in: measured_in.alpha_star,
        alpha_star_out: measured_out.alpha_star,
        mean_photon_in: measured_in.mean_photon,
        mean_photon_out: measured_out.mean_photon,
        f_tele: params.map(|p| gaussian_fidelity(p.r())),
        r: params.map(|p| p.r()),
        source,
        seed,
        n,
        model,
    };
    std::fs::write(out.path("metrics.json"), serde_json::to_string_pretty(&metrics)? + "\n")?;
    Ok(metrics)
}

/// Reconstructs a state from a `theta,x` dataset and writes `rho.json` (with metrics) into `out`.
pub fn run_tomography(cfg: &ExperimentConfig, data_path: &Path, out: &Path) -> Result<cvtele::tomography::ReportMetrics> {
    let data = cvtele::homodyne::QuadratureDataset::read_csv(data_path).with_context(|| format!("reading {}", data_path.display()))?;
    let report = mle_reconstruct(&data, &cfg.mle)?;
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("rho.json"), report.to_json(cfg.analysis.cat_alpha_range)?)?;
    Ok(report.metrics(cfg.analysis.cat_alpha_range)?)
}
