//! Run configuration: TOML ingestion, validation and the built-in defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::amplifier::AmplifierModel;
use crate::error::{Error, Result};
use crate::fibre::{AttenuationProfile, DispersionModel, FibreProfile, NonlinearCoefficient, RamanGainSpectrum};
use crate::gn::{LinkModel, NliConfig};
use crate::isrs::{DEFAULT_Z_STEPS, MIN_Z_STEPS};
use crate::optimizer::OptimizerConfig;
use crate::spectrum::{build_grid_trimmed, Band, BandName, ChannelGrid};

/// Name accepted in place of a path for the built-in configuration.
pub const PAPER_DEFAULTS: &str = "paper_defaults";

/// Environment variable overriding `run.workers`.
pub const WORKERS_ENV: &str = "UWB_ENERGY_WORKERS";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub slot_ghz: f64,
    pub symbol_rate_gbd: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandConfig {
    pub name: BandName,
    pub lambda_min_nm: f64,
    pub lambda_max_nm: f64,
    /// Channels removed from the packed band, alternating high and low edge.
    #[serde(default)]
    pub trim_channels: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FibreConfig {
    pub name: String,
    pub span_length_km: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attenuation: Option<AttenuationProfile>,
    /// Two-column (nm, dB/km) table, relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attenuation_file: Option<String>,
    #[serde(default)]
    pub dispersion: DispersionModel,
    #[serde(default)]
    pub gamma: NonlinearCoefficient,
    #[serde(default)]
    pub raman: RamanGainSpectrum,
    /// Two-column (shift THz, normalised gain) table replacing `raman.shape`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raman_file: Option<String>,
}

impl FibreConfig {
    pub fn from_profile(p: &FibreProfile) -> Self {
        FibreConfig {
            name: p.name.clone(),
            span_length_km: p.span_length_km,
            attenuation: Some(p.attenuation.clone()),
            attenuation_file: None,
            dispersion: p.dispersion.clone(),
            gamma: p.gamma.clone(),
            raman: p.raman.clone(),
            raman_file: None,
        }
    }

    /// Builds the fibre, reading referenced tables relative to `base_dir`.
    pub fn resolve(&self, base_dir: &Path) -> Result<FibreProfile> {
        let attenuation = match (&self.attenuation, &self.attenuation_file) {
            (Some(a), None) => a.clone(),
            (None, Some(f)) => AttenuationProfile::from_file(&base_dir.join(f))?,
            (Some(_), Some(_)) => {
                return Err(Error::config(format!(
                    "fibre {}: give attenuation or attenuation_file, not both",
                    self.name
                )))
            }
            (None, None) => return Err(Error::config(format!("fibre {}: no attenuation given", self.name))),
        };
        let raman = match &self.raman_file {
            Some(f) => RamanGainSpectrum::from_file(&base_dir.join(f), &self.raman)?,
            None => self.raman.clone(),
        };
        let fibre = FibreProfile {
            name: self.name.clone(),
            attenuation,
            dispersion: self.dispersion.clone(),
            gamma: self.gamma.clone(),
            raman,
            span_length_km: self.span_length_km,
        };
        fibre.validate()?;
        Ok(fibre)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkConfig {
    pub snr_trx_db: f64,
    pub trx_watts_per_channel: f64,
    /// Amplifiers per band on top of one per span.
    #[serde(default)]
    pub extra_amps_per_band: usize,
    /// Span counts to evaluate.
    pub distances: Vec<usize>,
    pub z_steps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub output_dir: String,
    /// 0 uses every available core.
    #[serde(default)]
    pub workers: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub bands: Vec<BandConfig>,
    pub amplifiers: Vec<AmplifierModel>,
    pub fibres: Vec<FibreConfig>,
    pub link: LinkConfig,
    pub nli: NliConfig,
    pub optimizer: OptimizerConfig,
    pub run: RunSection,
    /// Directory that relative table paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn paper_defaults() -> Self {
        RunConfig {
            grid: GridConfig {
                slot_ghz: 150.0,
                symbol_rate_gbd: 140.0,
            },
            bands: Band::defaults()
                .into_iter()
                .map(|b| BandConfig {
                    name: b.name,
                    lambda_min_nm: b.lambda_min_nm,
                    lambda_max_nm: b.lambda_max_nm,
                    trim_channels: 0,
                })
                .collect(),
            amplifiers: AmplifierModel::defaults(),
            fibres: vec![
                FibreConfig::from_profile(&FibreProfile::fibre_a()),
                FibreConfig::from_profile(&FibreProfile::fibre_b()),
            ],
            link: LinkConfig {
                snr_trx_db: 20.0,
                trx_watts_per_channel: 24.0,
                extra_amps_per_band: 0,
                distances: vec![3, 13],
                z_steps: DEFAULT_Z_STEPS,
            },
            nli: NliConfig::default(),
            optimizer: OptimizerConfig::default(),
            run: RunSection {
                output_dir: "results".into(),
                workers: 0,
            },
            base_dir: PathBuf::new(),
        }
    }

    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Hex SHA-256 prefix of the canonical TOML of everything that affects
    /// results (the `run` section is excluded).
    pub fn hash(&self) -> String {
        let mut canon = self.clone();
        canon.run = RunSection {
            output_dir: String::new(),
            workers: 0,
        };
        let text = canon.to_toml().unwrap_or_default();
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Every problem with the configuration, not just the first.
    pub fn validate(&self) -> Result<()> {
        let mut errs: Vec<String> = Vec::new();
        let g = &self.grid;
        if !(g.symbol_rate_gbd > 0.0 && g.slot_ghz >= g.symbol_rate_gbd) {
            errs.push(format!(
                "grid: need 0 < symbol_rate_gbd <= slot_ghz, got {} GBd in {} GHz",
                g.symbol_rate_gbd, g.slot_ghz
            ));
        }
        if self.bands.is_empty() {
            errs.push("no bands configured".into());
        }
        for (i, b) in self.bands.iter().enumerate() {
            if !(b.lambda_min_nm > 0.0 && b.lambda_min_nm < b.lambda_max_nm) {
                errs.push(format!(
                    "band {}: need 0 < lambda_min_nm < lambda_max_nm, got [{}, {}]",
                    b.name, b.lambda_min_nm, b.lambda_max_nm
                ));
            }
            for other in &self.bands[i + 1..] {
                if other.name == b.name {
                    errs.push(format!("band {} listed twice", b.name));
                } else if b.lambda_min_nm < other.lambda_max_nm && other.lambda_min_nm < b.lambda_max_nm {
                    errs.push(format!("bands {} and {} overlap", b.name, other.name));
                }
            }
            let n_amps = self.amplifiers.iter().filter(|a| a.band == b.name).count();
            if n_amps == 0 {
                errs.push(format!("band {}: no amplifier configured", b.name));
            } else if n_amps > 1 {
                errs.push(format!(
                    "band {}: {n_amps} amplifiers configured, need exactly one",
                    b.name
                ));
            }
        }
        for a in &self.amplifiers {
            if !a.noise_figure_db.is_finite() {
                errs.push(format!("amplifier {}: noise figure must be finite", a.device_name()));
            }
            if let Err(e) = a.pce.validate() {
                errs.push(format!("amplifier {}: {}", a.device_name(), strip(&e)));
            }
        }
        if errs.is_empty() {
            if let Err(e) = self.grid() {
                errs.push(strip(&e));
            }
        }
        if self.fibres.is_empty() {
            errs.push("no fibres configured".into());
        }
        for (i, f) in self.fibres.iter().enumerate() {
            if self.fibres[..i].iter().any(|o| o.name == f.name) {
                errs.push(format!("fibre {} listed twice", f.name));
            }
            if !(f.span_length_km > 0.0) {
                errs.push(format!(
                    "fibre {}: span length must be positive, got {}",
                    f.name, f.span_length_km
                ));
                continue;
            }
            if let Err(e) = f.resolve(&self.base_dir) {
                errs.push(strip(&e));
            }
        }
        let l = &self.link;
        if l.distances.is_empty() || l.distances.contains(&0) {
            errs.push("link.distances must be non-empty span counts >= 1".into());
        }
        if !l.snr_trx_db.is_finite() {
            errs.push("link.snr_trx_db must be finite".into());
        }
        if !(l.trx_watts_per_channel >= 0.0) {
            errs.push("link.trx_watts_per_channel must be non-negative".into());
        }
        if l.z_steps < MIN_Z_STEPS {
            errs.push(format!("link.z_steps must be >= {MIN_Z_STEPS}"));
        } else if self.nli.z_stride > 0 && !l.z_steps.is_multiple_of(self.nli.z_stride) {
            errs.push(format!(
                "nli.z_stride {} must divide link.z_steps {}",
                self.nli.z_stride, l.z_steps
            ));
        }
        if let Err(e) = self.nli.validate() {
            errs.push(strip(&e));
        }
        match self.optimizer.validate() {
            Err(Error::Validation(v)) => errs.extend(v),
            Err(e) => errs.push(strip(&e)),
            Ok(()) => {
                let o = &self.optimizer;
                if o.inner_nli.z_stride > 0 && !o.inner_z_steps.is_multiple_of(o.inner_nli.z_stride) {
                    errs.push(format!(
                        "optimizer.inner_nli.z_stride {} must divide optimizer.inner_z_steps {}",
                        o.inner_nli.z_stride, o.inner_z_steps
                    ));
                }
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs))
        }
    }

    pub fn band_names(&self) -> Vec<BandName> {
        let mut names: Vec<BandName> = self.bands.iter().map(|b| b.name).collect();
        names.sort();
        names
    }

    /// The full channel grid over every configured band.
    pub fn grid(&self) -> Result<ChannelGrid> {
        let bands: Vec<Band> = self
            .bands
            .iter()
            .map(|b| Band::new(b.name, b.lambda_min_nm, b.lambda_max_nm))
            .collect::<Result<_>>()?;
        let trims: Vec<(BandName, usize)> = self.bands.iter().map(|b| (b.name, b.trim_channels)).collect();
        build_grid_trimmed(&bands, self.grid.slot_ghz, self.grid.symbol_rate_gbd, &trims)
    }

    /// Grid restricted to `bands`, with channel positions unchanged.
    pub fn grid_for(&self, bands: &[BandName]) -> Result<ChannelGrid> {
        for b in bands {
            if !self.bands.iter().any(|c| c.name == *b) {
                return Err(Error::config(format!("band {b} is not configured")));
            }
        }
        let grid = self.grid()?.subset(bands);
        if grid.is_empty() {
            return Err(Error::config("band subset has no channels"));
        }
        Ok(grid)
    }

    pub fn fibre(&self, name: &str) -> Result<FibreProfile> {
        self.fibres
            .iter()
            .find(|f| f.name.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::config(format!("fibre {name} is not configured")))?
            .resolve(&self.base_dir)
    }

    pub fn link(&self, bands: &[BandName], fibre: &FibreProfile, n_spans: usize) -> Result<LinkModel> {
        LinkModel::new(
            self.grid_for(bands)?,
            fibre.clone(),
            &self.amplifiers,
            n_spans,
            self.link.snr_trx_db,
            self.link.z_steps,
        )
    }

    /// `run.workers`, overridden by the environment; 0 means all cores.
    pub fn workers(&self) -> usize {
        std::env::var(WORKERS_ENV)
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .unwrap_or(self.run.workers)
    }
}

fn strip(e: &Error) -> String {
    match e {
        Error::Config(m) | Error::Domain(m) | Error::Parse(m) => m.clone(),
        other => other.to_string(),
    }
}

/// Loads a config file, or the built-in defaults for [`PAPER_DEFAULTS`].
pub fn parse_config(path: &str) -> Result<RunConfig> {
    if path == PAPER_DEFAULTS {
        let cfg = RunConfig::paper_defaults();
        cfg.validate()?;
        return Ok(cfg);
    }
    let p = Path::new(path);
    let text = std::fs::read_to_string(p).map_err(|source| Error::Io {
        path: path.to_string(),
        source,
    })?;
    let base = p.parent().map(Path::to_path_buf).unwrap_or_default();
    RunConfig::from_toml_str(&text, &base)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_hash_is_stable() {
        let a = parse_config(PAPER_DEFAULTS).unwrap();
        let b = parse_config(PAPER_DEFAULTS).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 16);
        let n = a.grid().unwrap().len();
        assert!((274..=280).contains(&n), "{n}");
    }

    #[test]
    fn toml_round_trip() {
        let cfg = RunConfig::paper_defaults();
        let text = cfg.to_toml().unwrap();
        let back = RunConfig::from_toml_str(&text, Path::new("")).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.to_toml().unwrap(), text);
    }

    #[test]
    fn hash_ignores_run_section_only() {
        let cfg = RunConfig::paper_defaults();
        let mut other = cfg.clone();
        other.run.workers = 7;
        other.run.output_dir = "elsewhere".into();
        assert_eq!(cfg.hash(), other.hash());
        other.link.snr_trx_db = 19.0;
        assert_ne!(cfg.hash(), other.hash());
    }

    #[test]
    fn missing_amplifier_named() {
        let mut cfg = RunConfig::paper_defaults();
        cfg.amplifiers.retain(|a| a.band != BandName::S);
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("band S"), "{err}");
    }

    #[test]
    fn reports_every_error() {
        let mut cfg = RunConfig::paper_defaults();
        cfg.amplifiers[0].pce.points[0].1 = 1.5;
        cfg.fibres[0].span_length_km = -80.0;
        cfg.bands[1].lambda_min_nm = 1300.0;
        match cfg.validate().unwrap_err() {
            Error::Validation(v) => {
                let all = v.join("\n");
                assert!(all.contains("PCE must be in (0,1)"), "{all}");
                assert!(all.contains("span length"), "{all}");
                assert!(all.contains("overlap"), "{all}");
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let mut text = RunConfig::paper_defaults().to_toml().unwrap();
        text = text.replacen("[grid]\n", "[grid]\nbogus = 1\n", 1);
        assert!(matches!(
            RunConfig::from_toml_str(&text, Path::new("")),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn attenuation_file_reference() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("att.txt"), "# nm dB/km\n1200 0.40\n1700 0.25\n").unwrap();
        let mut cfg = RunConfig::paper_defaults();
        cfg.fibres[0].attenuation = None;
        cfg.fibres[0].attenuation_file = Some("att.txt".into());
        let text = cfg.to_toml().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, text).unwrap();
        let parsed = parse_config(path.to_str().unwrap()).unwrap();
        let f = parsed.fibre("A").unwrap();
        assert!((f.attenuation.db_per_km(1450.0).unwrap() - 0.325).abs() < 1e-12);
    }

    #[test]
    fn subset_grid_keeps_positions() {
        let cfg = RunConfig::paper_defaults();
        let full = cfg.grid().unwrap();
        let cl = cfg.grid_for(&[BandName::C, BandName::L]).unwrap();
        // ascending frequency: L comes first
        let l0 = full.band_range(BandName::L).start;
        assert_eq!(cl.channels()[0], full.channels()[l0]);
        assert_eq!(cl.len(), full.count(BandName::C) + full.count(BandName::L));
        assert!(cfg.grid_for(&[]).is_err());
    }
}
