//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Three operations are exposed, each on a user-chosen `M × N` grid with
//! Doppler period `nu_p`:
//!
//! * [`rpe_heatmap`]: relative prediction error (dB) of the two-path channel
//!   for every pilot/target placement, row-major `k·N + l`;
//! * [`ambiguity`]: `|A(τ, ν)|²` of a pulsone, TDM or FDM waveform over one
//!   period in each direction;
//! * [`ber`]: uncoded 4-QAM BER and its 95% half-width over a few Veh-A
//!   frames.
//!
//! The `*_impl` functions hold the logic and are plain Rust so they can be
//! tested natively; the exported wrappers only convert errors.

use wasm_bindgen::prelude::*;
use zak_otfs::channel::two_path;
use zak_otfs::dd_core::FrameParams;
use zak_otfs::filters::{FilterKind, SeparableFilter};
use zak_otfs::harness::{frame_rng, simulate_frame, BerCounts, ChannelConfig, CsiMode, LinkKind, ResolvedLink, RngStream};
use zak_otfs::modem::Fidelity;
use zak_otfs::predict::{rpe_heatmap as rpe_map, PilotSpec};
use zak_otfs::radar::{ambiguity_fdm, ambiguity_pulsone, ambiguity_tdm, symmetric_axis, AmbiguitySurface};

/// Largest grid the demo accepts (keeps a browser tab responsive).
pub const MAX_MN: usize = 1024;

fn grid(m: usize, n: usize, nu_p: f64) -> Result<FrameParams, String> {
    if m * n > MAX_MN {
        return Err(format!("grid too large for the demo: M·N = {} > {MAX_MN}", m * n));
    }
    FrameParams::new(m, n, nu_p).map_err(|e| e.to_string())
}

fn filter(name: &str, beta_tau: f64, beta_nu: f64) -> Result<FilterKind, String> {
    match name {
        "sinc" => Ok(FilterKind::Sinc),
        "rrc" => Ok(FilterKind::Rrc { beta_tau, beta_nu }),
        other => Err(format!("unknown filter '{other}'")),
    }
}

/// RPE heatmap in dB of the two-path channel with a centre pilot.
pub fn rpe_heatmap_impl(m: usize, n: usize, nu_p: f64, filter_name: &str, beta_tau: f64, beta_nu: f64) -> Result<Vec<f64>, String> {
    let p = grid(m, n, nu_p)?;
    let f = SeparableFilter::for_frame(filter(filter_name, beta_tau, beta_nu)?, &p).map_err(|e| e.to_string())?;
    let pilot = PilotSpec::center(&p).map_err(|e| e.to_string())?;
    let map = rpe_map(&two_path(), &f, &f, &p, pilot).map_err(|e| e.to_string())?;
    Ok(map.rpe_db)
}

/// `(delay points, Doppler points)` of the [`ambiguity`] surface.
pub fn ambiguity_dims_impl(m: usize, n: usize, oversampling: usize) -> (usize, usize) {
    (2 * m * oversampling + 1, 2 * n * oversampling + 1)
}

/// `|A(τ, ν)|²` over `|τ| ≤ τ_p`, `|ν| ≤ ν_p`, row-major with delay as the
/// slow index.
pub fn ambiguity_impl(waveform: &str, m: usize, n: usize, nu_p: f64, oversampling: usize) -> Result<Vec<f64>, String> {
    let p = grid(m, n, nu_p)?;
    if oversampling == 0 || oversampling > 8 {
        return Err("oversampling must be between 1 and 8".into());
    }
    let ta = symmetric_axis(m * oversampling, 1.0 / (p.b * oversampling as f64));
    let na = symmetric_axis(n * oversampling, 1.0 / (p.t * oversampling as f64));
    let a = match waveform {
        "pulsone" => AmbiguitySurface::from_fn(ta, na, |t, v| ambiguity_pulsone(t, v, &p)),
        "tdm" => AmbiguitySurface::from_fn(ta, na, |t, v| ambiguity_tdm(t, v, p.b)),
        "fdm" => AmbiguitySurface::from_fn(ta, na, |t, v| ambiguity_fdm(t, v, p.t)),
        other => return Err(format!("unknown waveform '{other}'")),
    };
    Ok(a.values.iter().map(|v| v.norm_sqr()).collect())
}

/// `[ber, ci95]` of one link over `frames` Veh-A frames with perfect CSI.
#[allow(clippy::too_many_arguments)]
pub fn ber_impl(
    modulation: &str,
    m: usize,
    n: usize,
    nu_p: f64,
    gamma_db: f64,
    nu_max: f64,
    frames: usize,
    seed: u64,
) -> Result<Vec<f64>, String> {
    let params = grid(m, n, nu_p)?;
    let kind = match modulation {
        "zak-otfs" => LinkKind::ZakOtfs,
        "tdm" => LinkKind::Tdm,
        "fdm" => LinkKind::Fdm,
        "mc-otfs" => LinkKind::McOtfs,
        other => return Err(format!("unknown modulation '{other}'")),
    };
    if frames == 0 || frames > 200 {
        return Err("frames must be between 1 and 200".into());
    }
    let link = ResolvedLink { kind, params, filter: FilterKind::Sinc, label: modulation.into() };
    let channel = ChannelConfig::default();
    let outcomes = (0..frames as u64)
        .map(|f| {
            let ch = channel.draw(nu_max, &params, &mut frame_rng(seed, RngStream::Channel, 0, f))?;
            simulate_frame(&link, CsiMode::Perfect, Fidelity::Matrix, &ch, gamma_db, &mut frame_rng(seed, RngStream::Data, 0, f))
        })
        .collect::<zak_otfs::error::Result<Vec<_>>>()
        .map_err(|e| e.to_string())?;
    let c = BerCounts::from_frames(&outcomes);
    Ok(vec![c.ber(), c.ci95()])
}

/// RPE heatmap (dB), `M·N` values with index `k·N + l`.
#[wasm_bindgen]
pub fn rpe_heatmap(m: usize, n: usize, nu_p: f64, filter: &str, beta_tau: f64, beta_nu: f64) -> Result<Vec<f64>, JsError> {
    rpe_heatmap_impl(m, n, nu_p, filter, beta_tau, beta_nu).map_err(|e| JsError::new(&e))
}

/// Dimensions `[delay points, Doppler points]` of [`ambiguity`].
#[wasm_bindgen]
pub fn ambiguity_dims(m: usize, n: usize, oversampling: usize) -> Vec<usize> {
    let (a, b) = ambiguity_dims_impl(m, n, oversampling);
    vec![a, b]
}

/// Squared-magnitude ambiguity surface of `waveform` (`pulsone`, `tdm`, `fdm`).
#[wasm_bindgen]
pub fn ambiguity(waveform: &str, m: usize, n: usize, nu_p: f64, oversampling: usize) -> Result<Vec<f64>, JsError> {
    ambiguity_impl(waveform, m, n, nu_p, oversampling).map_err(|e| JsError::new(&e))
}

/// `[ber, ci95]` of `modulation` (`zak-otfs`, `tdm`, `fdm`, `mc-otfs`).
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn ber(
    modulation: &str,
    m: usize,
    n: usize,
    nu_p: f64,
    gamma_db: f64,
    nu_max: f64,
    frames: usize,
    seed: u64,
) -> Result<Vec<f64>, JsError> {
    ber_impl(modulation, m, n, nu_p, gamma_db, nu_max, frames, seed).map_err(|e| JsError::new(&e))
}
