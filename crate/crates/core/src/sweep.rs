//! Energy-per-bit accounting, the band-combination sweep and its Pareto
//! fronts.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::amplifier::AmplifierModel;
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::fibre::FibreProfile;
use crate::gn::{LinkEvaluation, LinkModel};
use crate::optimizer::{optimize_launch, LaunchParam, OptimizerReport};
use crate::spectrum::{band_label, BandName};
use crate::units::mw_to_dbm;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// One band amplifier's operating point (per span).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandEnergy {
    pub band: BandName,
    pub channels: usize,
    pub p_out_mw: f64,
    pub p_in_mw: f64,
    pub pce: f64,
    pub p_elec_w: f64,
}

/// Operating point of a band amplifier lifting `p_in_mw` back to `p_out_mw`.
pub fn band_energy(amp: &AmplifierModel, channels: usize, p_in_mw: f64, p_out_mw: f64) -> Result<BandEnergy> {
    if !(p_in_mw < p_out_mw) {
        return Err(Error::domain(format!(
            "band {}: amplifier input {p_in_mw:.4} mW is not below its output {p_out_mw:.4} mW",
            amp.band
        )));
    }
    Ok(BandEnergy {
        band: amp.band,
        channels,
        p_out_mw,
        p_in_mw,
        pce: amp.pce.pce_at(mw_to_dbm(p_in_mw))?,
        p_elec_w: amp.electrical_power(p_in_mw, p_out_mw)?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub label: String,
    pub fibre: String,
    pub n_spans: usize,
    pub channels: usize,
    pub throughput_tbps: f64,
    pub amp_power_w: f64,
    pub trx_power_w: f64,
    pub pj_per_bit_amp: f64,
    pub pj_per_bit_total: f64,
    pub amps_per_band: usize,
    pub bands: Vec<BandEnergy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<OptimizerReport>,
}

/// Transceiver and amplifier-count settings of the energy model.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyModel {
    pub trx_watts_per_channel: f64,
    pub extra_amps_per_band: usize,
}

impl Default for EnergyModel {
    fn default() -> Self {
        EnergyModel {
            trx_watts_per_channel: 24.0,
            extra_amps_per_band: 0,
        }
    }
}

impl ScenarioResult {
    /// Totals from per-band amplifier operating points. Energy per bit is
    /// W/(Tb/s), which is numerically pJ/bit.
    pub fn from_bands(
        fibre: &str,
        n_spans: usize,
        channels: usize,
        throughput_tbps: f64,
        bands: Vec<BandEnergy>,
        energy: &EnergyModel,
    ) -> Self {
        let amps_per_band = n_spans + energy.extra_amps_per_band;
        let amp_power_w = amps_per_band as f64 * bands.iter().map(|b| b.p_elec_w).sum::<f64>();
        let trx_power_w = energy.trx_watts_per_channel * channels as f64;
        let label = band_label(&bands.iter().map(|b| b.band).collect::<Vec<_>>());
        ScenarioResult {
            label,
            fibre: fibre.to_string(),
            n_spans,
            channels,
            throughput_tbps,
            amp_power_w,
            trx_power_w,
            pj_per_bit_amp: amp_power_w / throughput_tbps,
            pj_per_bit_total: (amp_power_w + trx_power_w) / throughput_tbps,
            amps_per_band,
            bands,
            optimizer: None,
        }
    }
}

/// Energy figures of an evaluated link: each band amplifier outputs the sum
/// of its channels' launch powers and receives their span-end powers.
pub fn scenario_energy(link: &LinkModel, eval: &LinkEvaluation, energy: &EnergyModel) -> Result<ScenarioResult> {
    let grid = &link.grid;
    let launch = eval.profile.launch();
    let received = eval.profile.received();
    let mut bands = Vec::new();
    for band in grid.bands() {
        let range = grid.band_range(band);
        let amp = link
            .amps
            .iter()
            .find(|a| a.band == band)
            .ok_or_else(|| Error::config(format!("no amplifier for band {band}")))?;
        let p_out: f64 = launch[range.clone()].iter().sum();
        let p_in: f64 = received[range.clone()].iter().sum();
        bands.push(band_energy(amp, range.len(), p_in, p_out)?);
    }
    Ok(ScenarioResult::from_bands(
        &link.fibre.name,
        link.n_spans,
        grid.len(),
        eval.throughput_tbps(),
        bands,
        energy,
    ))
}

/// Everything produced for one optimised scenario.
#[derive(Clone, Debug)]
pub struct ScenarioOutcome {
    pub result: ScenarioResult,
    pub launch: LaunchParam,
    pub evaluation: LinkEvaluation,
}

/// Optimises launch powers for `bands`, re-evaluates the optimum with the
/// full NLI settings and accounts its energy.
pub fn run_scenario(
    cfg: &RunConfig,
    bands: &[BandName],
    fibre: &FibreProfile,
    n_spans: usize,
) -> Result<ScenarioOutcome> {
    let link = cfg.link(bands, fibre, n_spans)?;
    let (launch, report) = optimize_launch(&link, &cfg.optimizer)?;
    let evaluation = link.evaluate(&launch.channel_mw(&link.grid)?, &cfg.nli)?;
    let mut result = scenario_energy(&link, &evaluation, &energy_model(cfg))?;
    result.optimizer = Some(report);
    Ok(ScenarioOutcome {
        result,
        launch,
        evaluation,
    })
}

pub fn energy_model(cfg: &RunConfig) -> EnergyModel {
    EnergyModel {
        trx_watts_per_channel: cfg.link.trx_watts_per_channel,
        extra_amps_per_band: cfg.link.extra_amps_per_band,
    }
}

/// Non-empty subsets of `bands` as bitmasks over O=1, E=2, S=4, C=8, L=16,
/// ascending.
pub fn band_subsets(bands: &[BandName]) -> Vec<(u32, Vec<BandName>)> {
    let avail: u32 = bands.iter().map(|b| 1u32 << b.index()).sum();
    (1u32..32)
        .filter(|m| m & !avail == 0)
        .map(|m| {
            let set = BandName::ALL
                .iter()
                .copied()
                .filter(|b| m & (1 << b.index()) != 0)
                .collect();
            (m, set)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub mask: u32,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<ScenarioResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub fibre: String,
    pub n_spans: usize,
    pub config_hash: String,
    pub tool_version: String,
    pub entries: Vec<SweepEntry>,
}

impl SweepResult {
    pub fn results(&self) -> Vec<&ScenarioResult> {
        self.entries.iter().filter_map(|e| e.result.as_ref()).collect()
    }

    pub fn get(&self, label: &str) -> Option<&ScenarioResult> {
        self.entries
            .iter()
            .find(|e| e.label == label)
            .and_then(|e| e.result.as_ref())
    }

    pub fn failures(&self) -> usize {
        self.entries.iter().filter(|e| e.result.is_none()).count()
    }
}

fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::config(format!("cannot start {workers} workers: {e}")))
}

/// Runs every band subset listed in `subsets` (all non-empty subsets of the
/// configured bands when `None`) on `workers` threads. Scenario failures are
/// recorded, not propagated; the result is ordered by bitmask.
pub fn run_sweep_subsets(
    cfg: &RunConfig,
    fibre: &FibreProfile,
    n_spans: usize,
    subsets: Option<&[Vec<BandName>]>,
    workers: usize,
) -> Result<SweepResult> {
    let mut jobs = band_subsets(&cfg.band_names());
    if let Some(only) = subsets {
        jobs.retain(|(_, set)| only.iter().any(|o| band_label(o) == band_label(set)));
    }
    let pool = thread_pool(workers)?;
    let entries: Vec<SweepEntry> = pool.install(|| {
        jobs.par_iter()
            .map(|(mask, set)| {
                let label = band_label(set);
                match run_scenario(cfg, set, fibre, n_spans) {
                    Ok(out) => {
                        log::info!(
                            "{} {label} {n_spans} spans: {:.2} Tb/s, {:.3} pJ/bit amp",
                            fibre.name,
                            out.result.throughput_tbps,
                            out.result.pj_per_bit_amp
                        );
                        SweepEntry {
                            mask: *mask,
                            label,
                            result: Some(out.result),
                            error: None,
                        }
                    }
                    Err(e) => {
                        log::warn!("{} {label} {n_spans} spans failed: {e}", fibre.name);
                        SweepEntry {
                            mask: *mask,
                            label,
                            result: None,
                            error: Some(e.to_string()),
                        }
                    }
                }
            })
            .collect()
    });
    let sweep = SweepResult {
        fibre: fibre.name.clone(),
        n_spans,
        config_hash: cfg.hash(),
        tool_version: TOOL_VERSION.to_string(),
        entries,
    };
    if !sweep.entries.is_empty() && sweep.failures() == sweep.entries.len() {
        return Err(Error::config(format!(
            "every scenario failed for fibre {} at {n_spans} spans; first: {}",
            fibre.name,
            sweep.entries[0].error.as_deref().unwrap_or("")
        )));
    }
    Ok(sweep)
}

/// Full sweep over all non-empty band subsets.
pub fn run_sweep(cfg: &RunConfig, fibre: &FibreProfile, n_spans: usize, workers: usize) -> Result<SweepResult> {
    run_sweep_subsets(cfg, fibre, n_spans, None, workers)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnergyMetric {
    AmplifierOnly,
    Total,
}

impl EnergyMetric {
    pub fn of(self, r: &ScenarioResult) -> f64 {
        match self {
            EnergyMetric::AmplifierOnly => r.pj_per_bit_amp,
            EnergyMetric::Total => r.pj_per_bit_total,
        }
    }
}

/// Scenarios not dominated in (throughput up, energy per bit down), by
/// ascending throughput.
pub fn pareto_front<'a>(results: &[&'a ScenarioResult], metric: EnergyMetric) -> Vec<&'a ScenarioResult> {
    let dominated = |r: &ScenarioResult| {
        results.iter().any(|o| {
            let (t, e) = (o.throughput_tbps, metric.of(o));
            let (rt, re) = (r.throughput_tbps, metric.of(r));
            t >= rt && e <= re && (t > rt || e < re)
        })
    };
    let mut front: Vec<&ScenarioResult> = results.iter().copied().filter(|r| !dominated(r)).collect();
    front.sort_by(|a, b| a.throughput_tbps.total_cmp(&b.throughput_tbps));
    front
}

pub const SWEEP_CSV_HEADER: &str =
    "label,channels,throughput_tbps,amp_power_w,trx_power_w,pj_per_bit_amp,pj_per_bit_total";

/// CSV with a `#` provenance line; failed scenarios have empty numeric fields.
pub fn sweep_csv(sweep: &SweepResult) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# uwb-energy {} config {} fibre {} spans {}",
        sweep.tool_version, sweep.config_hash, sweep.fibre, sweep.n_spans
    );
    let _ = writeln!(out, "{SWEEP_CSV_HEADER}");
    for e in &sweep.entries {
        match &e.result {
            Some(r) => {
                let _ = writeln!(
                    out,
                    "{},{},{:.6},{:.6},{:.6},{:.6},{:.6}",
                    r.label,
                    r.channels,
                    r.throughput_tbps,
                    r.amp_power_w,
                    r.trx_power_w,
                    r.pj_per_bit_amp,
                    r.pj_per_bit_total
                );
            }
            None => {
                let _ = writeln!(out, "{},,,,,,", e.label);
            }
        }
    }
    out
}

/// Gnuplot-ready front: throughput, energy per bit, label.
pub fn pareto_dat(sweep: &SweepResult, metric: EnergyMetric) -> String {
    let results = sweep.results();
    let front = pareto_front(&results, metric);
    let what = match metric {
        EnergyMetric::AmplifierOnly => "amplifier-only",
        EnergyMetric::Total => "amplifier+transceiver",
    };
    let mut out = format!(
        "# uwb-energy {} config {} fibre {} spans {} {what} pareto front\n# throughput_tbps pj_per_bit label\n",
        sweep.tool_version, sweep.config_hash, sweep.fibre, sweep.n_spans
    );
    for r in front {
        let _ = writeln!(out, "{:.6} {:.6} {}", r.throughput_tbps, metric.of(r), r.label);
    }
    out
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Writes CSV, JSON and both Pareto files; returns the paths written.
pub fn write_sweep(dir: &Path, sweep: &SweepResult) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let stem = format!("sweep_{}_{}", sweep.fibre, sweep.n_spans);
    let json = serde_json::to_string_pretty(sweep).map_err(|e| Error::Parse(e.to_string()))?;
    let files = [
        (format!("{stem}.csv"), sweep_csv(sweep)),
        (format!("{stem}.json"), json),
        (
            format!("pareto_amp_{}_{}.dat", sweep.fibre, sweep.n_spans),
            pareto_dat(sweep, EnergyMetric::AmplifierOnly),
        ),
        (
            format!("pareto_total_{}_{}.dat", sweep.fibre, sweep.n_spans),
            pareto_dat(sweep, EnergyMetric::Total),
        ),
    ];
    let mut written = Vec::new();
    for (name, text) in files {
        let p = dir.join(name);
        write_file(&p, &text)?;
        written.push(p);
    }
    Ok(written)
}
