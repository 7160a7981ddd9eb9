//! Browser bindings for three interactive views of the default link model:
//! amplifier efficiency curves, the single-span power profile, and the
//! per-channel SNR of a flat launch. Every binding returns JSON.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use uwb_energy::config::RunConfig;
use uwb_energy::gn::NliConfig;
use uwb_energy::spectrum::parse_band_label;
use uwb_energy::sweep::{energy_model, scenario_energy};
use uwb_energy::units::{dbm_to_mw, mw_to_dbm};
use uwb_energy::Result;

/// Span steps used in the browser; the NLI stride must divide it.
const Z_STEPS: usize = 50;

#[derive(Debug, Serialize)]
pub struct PceCurveView {
    pub amplifier: String,
    pub noise_figure_db: f64,
    pub input_dbm: Vec<f64>,
    pub pce: Vec<f64>,
    /// Electrical power for each input at the requested output power.
    pub electrical_w: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct SpanView {
    pub frequency_thz: Vec<f64>,
    pub z_km: Vec<f64>,
    /// `power_dbm[z][channel]`.
    pub power_dbm: Vec<Vec<f64>>,
    pub tilt_db: f64,
}

#[derive(Debug, Serialize)]
pub struct LinkView {
    pub frequency_thz: Vec<f64>,
    pub snr_db: Vec<f64>,
    pub ase_mw: Vec<f64>,
    pub nli_mw: Vec<f64>,
    pub throughput_tbps: f64,
    pub pj_per_bit_amp: f64,
    pub pj_per_bit_total: f64,
}

/// PCE and electrical power of every default amplifier over `[lo, hi]` dBm input.
pub fn pce_curves(lo: f64, hi: f64, points: usize, output_dbm: f64) -> Result<Vec<PceCurveView>> {
    let cfg = RunConfig::paper_defaults();
    let n = points.max(2);
    let inputs: Vec<f64> = (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect();
    cfg.amplifiers
        .iter()
        .map(|amp| {
            let pce = inputs.iter().map(|&p| amp.pce.pce_at(p)).collect::<Result<Vec<_>>>()?;
            // NaN where the input already exceeds the output.
            let electrical_w = inputs
                .iter()
                .map(|&p| {
                    amp.electrical_power(dbm_to_mw(p), dbm_to_mw(output_dbm))
                        .unwrap_or(f64::NAN)
                })
                .collect();
            Ok(PceCurveView {
                amplifier: amp.device_name(),
                noise_figure_db: amp.noise_figure_db,
                input_dbm: inputs.clone(),
                pce,
                electrical_w,
            })
        })
        .collect()
}

/// Power evolution along one span for a flat launch.
pub fn span_view(fibre: &str, bands: &str, launch_dbm: f64) -> Result<SpanView> {
    let cfg = RunConfig::paper_defaults();
    let link = cfg.link(&parse_band_label(bands)?, &cfg.fibre(fibre)?, 1)?;
    let profile = link.propagate(&vec![dbm_to_mw(launch_dbm); link.grid.len()], Z_STEPS)?;
    Ok(SpanView {
        frequency_thz: link.grid.frequencies(),
        tilt_db: profile.end_tilt_db(),
        power_dbm: profile
            .powers
            .iter()
            .map(|row| row.iter().map(|&p| mw_to_dbm(p)).collect())
            .collect(),
        z_km: profile.z_km,
    })
}

/// Per-channel SNR and link energy for a flat launch, with the fast NLI mode.
pub fn link_view(fibre: &str, bands: &str, launch_dbm: f64, spans: usize) -> Result<LinkView> {
    let cfg = RunConfig::paper_defaults();
    let link = cfg.link(&parse_band_label(bands)?, &cfg.fibre(fibre)?, spans.max(1))?;
    let eval = link.evaluate_with_steps(
        &vec![dbm_to_mw(launch_dbm); link.grid.len()],
        &NliConfig::reduced(),
        Z_STEPS,
    )?;
    let energy = scenario_energy(&link, &eval, &energy_model(&cfg))?;
    Ok(LinkView {
        frequency_thz: eval.snrs.iter().map(|s| s.frequency_thz).collect(),
        snr_db: eval.snrs.iter().map(|s| 10.0 * s.snr_total.log10()).collect(),
        ase_mw: eval.snrs.iter().map(|s| s.p_ase).collect(),
        nli_mw: eval.snrs.iter().map(|s| s.p_nli).collect(),
        throughput_tbps: energy.throughput_tbps,
        pj_per_bit_amp: energy.pj_per_bit_amp,
        pj_per_bit_total: energy.pj_per_bit_total,
    })
}

fn to_js<T: Serialize>(r: Result<T>) -> std::result::Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = pceCurves)]
pub fn pce_curves_json(lo: f64, hi: f64, points: usize, output_dbm: f64) -> std::result::Result<String, JsError> {
    to_js(pce_curves(lo, hi, points, output_dbm))
}

#[wasm_bindgen(js_name = spanProfile)]
pub fn span_profile_json(fibre: &str, bands: &str, launch_dbm: f64) -> std::result::Result<String, JsError> {
    to_js(span_view(fibre, bands, launch_dbm))
}

#[wasm_bindgen(js_name = linkSnr)]
pub fn link_snr_json(fibre: &str, bands: &str, launch_dbm: f64, spans: usize) -> std::result::Result<String, JsError> {
    to_js(link_view(fibre, bands, launch_dbm, spans))
}
