//! Closed-form regression table against the published figures.

use anyhow::Result;
use cvtele::fock::{FockDim, PureState};
use cvtele::homodyne::{gamma_from_fwhm, mode_function_quadrature, TimeTrace};
use cvtele::spectra::{teleporter_noise_spectrum, usable_bandwidth, Bandwidth, ChannelResponse, SqueezerSpec};
use cvtele::states::{loss_channel, mixture_model1, photon_subtracted_sv};
use cvtele::teleport::{
    added_noise_db, gaussian_fidelity, output_negativity_model1, output_negativity_model3, squeezing_db_to_r, teleport_fock,
    teleport_wigner, TeleporterParams, DEFAULT_N_QUAD,
};
use cvtele::tomography::nearest_cat_fidelity;
use cvtele::wigner::{model3_wigner, wigner_from_rho, wigner_origin_parity, PhaseSpaceGrid};
use std::f64::consts::PI;

const R: f64 = 0.7944;
const S: f64 = 0.28;
const ETA: f64 = 0.79;

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub id: &'static str,
    pub quantity: &'static str,
    pub computed: String,
    pub published: &'static str,
    pub criterion: String,
    pub pass: bool,
}

type RowFn = fn() -> Result<(String, String, bool)>;

fn within(value: f64, target: f64, tol: f64) -> (String, String, bool) {
    (format!("{value:.6}"), format!("{target} ± {tol}"), (value - target).abs() <= tol)
}

fn wide() -> PhaseSpaceGrid {
    PhaseSpaceGrid::symmetric(9.0, 361).expect("valid grid")
}

fn model3_rho() -> Result<cvtele::fock::DensityMatrix> {
    Ok(loss_channel(&photon_subtracted_sv(S, FockDim::default())?.to_density(), ETA)?)
}

const ROWS: [(&str, &str, &str, RowFn); 14] = [
    ("f_classical", "Gaussian fidelity without entanglement", "classical limit 1/2", || {
        let f = gaussian_fidelity(0.0);
        Ok((format!("{f}"), "= 0.5".into(), f == 0.5))
    }),
    ("f_tele", "Gaussian fidelity at 6.9 dB", "0.83", || Ok(within(gaussian_fidelity(squeezing_db_to_r(6.9)?), 0.830, 0.001))),
    ("noise_classical", "added noise at r = 0 (dB)", "4.8", || Ok(within(added_noise_db(0.0), 4.77, 0.01))),
    ("noise_quantum", "added noise at r = 0.7944 (dB)", "1.4 (around 1 MHz)", || Ok(within(added_noise_db(R), 1.49, 0.01))),
    ("noise_1mhz", "spectrum model at 1 MHz (dB)", "1.4", || {
        let v = teleporter_noise_spectrum(&SqueezerSpec::default(), &ChannelResponse::default(), 1e6)?;
        Ok((format!("{v:.4}"), "in [1.3, 1.6]".into(), (1.3..=1.6).contains(&v)))
    }),
    ("w_in_model3", "model-3 origin value, ideal teleporter", "-0.171 ± 0.003", || {
        Ok(within(output_negativity_model3(ETA, S, f64::INFINITY)?, -0.171, 0.001))
    }),
    ("w_out_model3", "model-3 teleported origin value", "-0.0247", || Ok(within(output_negativity_model3(ETA, S, R)?, -0.0247, 0.0002))),
    ("w_out_model1", "model-1 teleported origin value (grid convolution)", "-0.0207", || {
        let eta = (1.0 + 0.171 * PI) / 2.0;
        let w = wigner_from_rho(&mixture_model1(eta, FockDim::default())?, &wide())?;
        let numeric = teleport_wigner(&w, &TeleporterParams::new(R)?)?.origin_value();
        let closed = output_negativity_model1(eta, R)?;
        let (c, t, ok) = within(numeric, -0.0208, 0.0005);
        Ok((c, t + " and = closed form", ok && (numeric - closed).abs() <= 1e-9))
    }),
    ("model3_reduces", "model-3 form at s = 0 vs model-1 form", "consistent", || {
        let eta = (1.0 + 0.171 * PI) / 2.0;
        let d = (output_negativity_model3(eta, 0.0, R)? - output_negativity_model1(eta, R)?).abs();
        Ok((format!("{d:.1e}"), "≤ 1e-12".into(), d <= 1e-12))
    }),
    ("representations", "closed form / grid / Fock agreement after teleportation", "-", || {
        let params = TeleporterParams::new(R)?;
        let rho = model3_rho()?;
        let closed = output_negativity_model3(ETA, S, R)?;
        let grid = teleport_wigner(&model3_wigner(S, ETA, &wide())?, &params)?.origin_value();
        let fock = wigner_origin_parity(&teleport_fock(&rho, &params, DEFAULT_N_QUAD)?);
        let d = (closed - grid).abs().max((closed - fock).abs()).max((grid - fock).abs());
        Ok((format!("{d:.1e}"), "spread ≤ 1e-3".into(), d <= 1e-3))
    }),
    ("no_cloning", "one-photon negativity survives iff F > 2/3", "no-cloning limit 2/3", || {
        let w_in = wigner_from_rho(&PureState::fock(1, FockDim::default())?.to_density(), &wide())?;
        let mut ok = true;
        for r in [0.2, 0.3466, 0.5] {
            let w = teleport_wigner(&w_in, &TeleporterParams::new(r)?)?.origin_value();
            ok &= (w < 0.0) == (gaussian_fidelity(r) > 2.0 / 3.0);
        }
        Ok(("r ∈ {0.2, 0.3466, 0.5}".into(), "sign flips at F = 2/3".into(), ok))
    }),
    ("cat_ordering", "nearest-cat fidelity: lossless > lossy > teleported", "0.750 → 0.46", || {
        let dim = FockDim::default();
        let ps = photon_subtracted_sv(S, dim)?.to_density();
        let lossy = model3_rho()?;
        let tele = teleport_fock(&lossy, &TeleporterParams::new(R)?, DEFAULT_N_QUAD)?;
        let range = (0.3, 2.0);
        let (a, b, c) = (nearest_cat_fidelity(&ps, range)?, nearest_cat_fidelity(&lossy, range)?, nearest_cat_fidelity(&tele, range)?);
        let ok = a.f_cat >= 0.99 && b.f_cat < a.f_cat && c.f_cat < b.f_cat && c.alpha_star < b.alpha_star;
        Ok((format!("{:.3} → {:.3} → {:.3}", a.f_cat, b.f_cat, c.f_cat), "≥ 0.99, decreasing".into(), ok))
    }),
    ("mode_energy", "mode energy inside 500 ns window at 12.3 MHz FWHM", "-", || {
        let trace = TimeTrace::new(vec![0.0; 500], 1e9, 250)?;
        let q = mode_function_quadrature(&trace, gamma_from_fwhm(12.3e6))?;
        Ok((format!("{:.6}", q.captured_energy), "≥ 0.99".into(), q.captured_energy >= 0.99 && q.contained))
    }),
    ("bandwidth", "usable bandwidth above F = 2/3 (MHz)", "10", || {
        match usable_bandwidth(&SqueezerSpec::default(), &ChannelResponse::default(), 2.0 / 3.0)? {
            Bandwidth::Finite(f) => Ok((format!("{:.3}", f / 1e6), "≥ 10".into(), f >= 10e6)),
            Bandwidth::Unbounded => Ok(("unbounded".into(), "≥ 10, finite".into(), false)),
        }
    }),
];

pub fn row_ids() -> Vec<&'static str> {
    ROWS.iter().map(|r| r.0).collect()
}

/// Evaluates all rows, or only `only` when given. `None` is returned for an unknown id.
pub fn reproduce(only: Option<&str>) -> Option<Vec<Row>> {
    if let Some(id) = only {
        if !ROWS.iter().any(|r| r.0 == id) {
            return None;
        }
    }
    Some(
        ROWS.iter()
            .filter(|r| only.is_none_or(|id| id == r.0))
            .map(|&(id, quantity, published, f)| match f() {
                Ok((computed, criterion, pass)) => Row { id, quantity, computed, published, criterion, pass },
                Err(e) => Row { id, quantity, computed: format!("error: {e}"), published, criterion: "-".into(), pass: false },
            })
            .collect(),
    )
}

pub fn render(rows: &[Row]) -> String {
    let w_id = rows.iter().map(|r| r.id.len()).max().unwrap_or(2).max(2);
    let w_c = rows.iter().map(|r| r.computed.chars().count()).max().unwrap_or(8).max(8);
    let w_t = rows.iter().map(|r| r.criterion.chars().count()).max().unwrap_or(9).max(9);
    let mut s = format!("{:<w_id$}  {:<w_c$}  {:<w_t$}  {:<20}  result  quantity\n", "id", "computed", "criterion", "published");
    for r in rows {
        s += &format!(
            "{:<w_id$}  {:<w_c$}  {:<w_t$}  {:<20}  {:<6}  {}\n",
            r.id,
            r.computed,
            r.criterion,
            r.published,
            if r.pass { "PASS" } else { "FAIL" },
            r.quantity,
        );
    }
    s
}
