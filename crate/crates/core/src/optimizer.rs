//! Segmented launch-power optimisation.
//!
//! Each band carries K launch-power nodes (dBm) spread evenly over its
//! channel span; channel powers are linear interpolation between them. A
//! deterministic coordinate pattern search maximises total throughput.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gn::{LinkModel, NliConfig};
use crate::spectrum::{BandName, ChannelGrid};
use crate::units::dbm_to_mw;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandSegments {
    pub band: BandName,
    /// Node frequencies, ascending.
    pub node_thz: Vec<f64>,
    pub node_dbm: Vec<f64>,
}

/// Launch-power parameterisation of a whole grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaunchParam {
    pub bands: Vec<BandSegments>,
    pub bounds_dbm: (f64, f64),
}

impl LaunchParam {
    /// Flat launch at `dbm` with up to `segments` nodes per band.
    pub fn flat(grid: &ChannelGrid, segments: usize, dbm: f64, bounds_dbm: (f64, f64)) -> Result<Self> {
        if segments == 0 {
            return Err(Error::config("segment count must be >= 1"));
        }
        if !(bounds_dbm.0 < bounds_dbm.1) {
            return Err(Error::config(format!("empty launch bounds {bounds_dbm:?}")));
        }
        let mut bands = Vec::new();
        for band in grid.bands() {
            let range = grid.band_range(band);
            let ch = &grid.channels()[range];
            let k = segments.min(ch.len());
            let (lo, hi) = (ch[0].center_thz, ch[ch.len() - 1].center_thz);
            let node_thz = if k == 1 {
                vec![0.5 * (lo + hi)]
            } else {
                (0..k).map(|m| lo + (hi - lo) * m as f64 / (k - 1) as f64).collect()
            };
            bands.push(BandSegments {
                band,
                node_thz,
                node_dbm: vec![dbm.clamp(bounds_dbm.0, bounds_dbm.1); k],
            });
        }
        Ok(LaunchParam { bands, bounds_dbm })
    }

    pub fn values(&self) -> Vec<f64> {
        self.bands.iter().flat_map(|b| b.node_dbm.iter().copied()).collect()
    }

    pub fn set_values(&mut self, values: &[f64]) {
        let mut it = values.iter();
        for b in &mut self.bands {
            for v in &mut b.node_dbm {
                *v = *it.next().expect("value count matches node count");
            }
        }
    }

    pub fn len(&self) -> usize {
        self.bands.iter().map(|b| b.node_dbm.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Per-channel launch power in dBm, in grid order.
    pub fn channel_dbm(&self, grid: &ChannelGrid) -> Result<Vec<f64>> {
        let mut out = vec![f64::NAN; grid.len()];
        for seg in &self.bands {
            let range = grid.band_range(seg.band);
            if range.is_empty() {
                return Err(Error::domain(format!("band {} not in grid", seg.band)));
            }
            let pts: Vec<(f64, f64)> = seg.node_thz.iter().copied().zip(seg.node_dbm.iter().copied()).collect();
            for c in range {
                let v = crate::fibre::interp_clamped(&pts, grid.channels()[c].center_thz);
                out[c] = v.clamp(self.bounds_dbm.0, self.bounds_dbm.1);
            }
        }
        if out.iter().any(|v| v.is_nan()) {
            return Err(Error::domain("launch parameters do not cover every grid band"));
        }
        Ok(out)
    }

    pub fn channel_mw(&self, grid: &ChannelGrid) -> Result<Vec<f64>> {
        Ok(self.channel_dbm(grid)?.into_iter().map(dbm_to_mw).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub segments: usize,
    pub initial_dbm: f64,
    pub step_init_db: f64,
    pub step_min_db: f64,
    pub max_sweeps: usize,
    pub min_dbm: f64,
    pub max_dbm: f64,
    /// NLI settings for the search objective; the final point is re-evaluated
    /// with the link's full settings by the caller.
    pub inner_nli: NliConfig,
    pub inner_z_steps: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            segments: 4,
            initial_dbm: 0.0,
            step_init_db: 1.0,
            step_min_db: 0.05,
            max_sweeps: 200,
            min_dbm: -10.0,
            max_dbm: 10.0,
            inner_nli: NliConfig::reduced(),
            inner_z_steps: 50,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if self.segments == 0 {
            errs.push("optimizer.segments must be >= 1".to_string());
        }
        if !(self.step_init_db > 0.0) || !(self.step_min_db > 0.0) {
            errs.push("optimizer steps must be positive".to_string());
        }
        if !(self.min_dbm < self.max_dbm) {
            errs.push(format!(
                "optimizer bounds [{}, {}] dBm are empty",
                self.min_dbm, self.max_dbm
            ));
        }
        if self.inner_z_steps < crate::isrs::MIN_Z_STEPS {
            errs.push(format!(
                "optimizer.inner_z_steps must be >= {}",
                crate::isrs::MIN_Z_STEPS
            ));
        }
        if let Err(e) = self.inner_nli.validate() {
            errs.push(e.to_string());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerReport {
    /// Completed sweeps over all nodes.
    pub iterations: usize,
    pub evaluations: usize,
    /// Objective at the start point and after every accepted step.
    pub trace: Vec<f64>,
    pub final_param: Vec<f64>,
    pub converged: bool,
    /// Candidates that had to be clipped to the bounds.
    pub clipped: usize,
    /// Candidates rejected as infeasible by the objective.
    pub infeasible: usize,
}

/// Deterministic coordinate pattern search maximising `objective`.
///
/// `objective` returns `Ok(None)` for an infeasible point, which counts as a
/// rejected candidate; any `Err` aborts the search with the offending
/// parameters attached.
pub fn pattern_search<F>(
    x0: &[f64],
    bounds: (f64, f64),
    cfg: &OptimizerConfig,
    mut objective: F,
) -> Result<(Vec<f64>, OptimizerReport)>
where
    F: FnMut(&[f64]) -> Result<Option<f64>>,
{
    let wrap = |x: &[f64], e: Error| Error::Objective {
        params: x.to_vec(),
        source: Box::new(e),
    };
    let mut x: Vec<f64> = x0.iter().map(|v| v.clamp(bounds.0, bounds.1)).collect();
    let mut best = objective(&x)
        .map_err(|e| wrap(&x, e))?
        .ok_or_else(|| wrap(&x, Error::config("start point is infeasible")))?;
    let mut report = OptimizerReport {
        iterations: 0,
        evaluations: 1,
        trace: vec![best],
        final_param: Vec::new(),
        converged: false,
        clipped: 0,
        infeasible: 0,
    };
    let mut step = cfg.step_init_db;
    while report.iterations < cfg.max_sweeps {
        if step < cfg.step_min_db {
            report.converged = true;
            break;
        }
        let mut accepted = false;
        for k in 0..x.len() {
            for dir in [1.0, -1.0] {
                let raw = x[k] + dir * step;
                let v = raw.clamp(bounds.0, bounds.1);
                if v != raw {
                    report.clipped += 1;
                    log::debug!("node {k} clipped from {raw:.3} to {v:.3} dBm");
                }
                if v == x[k] {
                    continue;
                }
                let mut cand = x.clone();
                cand[k] = v;
                report.evaluations += 1;
                match objective(&cand).map_err(|e| wrap(&cand, e))? {
                    Some(f) if f > best => {
                        x = cand;
                        best = f;
                        report.trace.push(f);
                        accepted = true;
                        break;
                    }
                    Some(_) => {}
                    None => report.infeasible += 1,
                }
            }
        }
        report.iterations += 1;
        if !accepted {
            step *= 0.5;
        }
    }
    if !report.converged && step < cfg.step_min_db {
        report.converged = true;
    }
    report.final_param = x.clone();
    Ok((x, report))
}

/// Optimises per-band segment launch powers of `link` for total throughput.
pub fn optimize_launch(link: &LinkModel, cfg: &OptimizerConfig) -> Result<(LaunchParam, OptimizerReport)> {
    cfg.validate()?;
    let bounds = (cfg.min_dbm, cfg.max_dbm);
    let mut param = LaunchParam::flat(&link.grid, cfg.segments, cfg.initial_dbm, bounds)?;
    let x0 = param.values();
    let mut scratch = param.clone();
    let (x, report) = pattern_search(&x0, bounds, cfg, |v| {
        scratch.set_values(v);
        let launch = scratch.channel_mw(&link.grid)?;
        match link.evaluate_with_steps(&launch, &cfg.inner_nli, cfg.inner_z_steps) {
            Ok(eval) => Ok(Some(eval.throughput_tbps())),
            Err(Error::Config(msg)) => {
                log::debug!("infeasible launch: {msg}");
                Ok(None)
            }
            Err(e) => Err(e),
        }
    })?;
    param.set_values(&x);
    log::info!(
        "{}: {} sweeps, {} evaluations, {:.2} Tb/s (inner)",
        crate::spectrum::band_label(&link.grid.bands()),
        report.iterations,
        report.evaluations,
        report.trace.last().copied().unwrap_or(0.0)
    );
    Ok((param, report))
}
