//! Per-band doped-fibre amplifier models: noise figure, wallplug power
//! conversion efficiency and the electrical power drawn for a given optical
//! gain.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::{BandName, Channel};
use crate::units::{db_to_linear, mw_to_dbm};

/// Planck constant in J·s.
pub const PLANCK: f64 = 6.626_070_15e-34;

/// Wallplug PCE versus total input power, linear in dBm and flat outside the
/// measured points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PceCurve {
    /// (total input power dBm, PCE fraction), sorted by input power.
    pub points: Vec<(f64, f64)>,
}

impl PceCurve {
    pub fn new(mut points: Vec<(f64, f64)>) -> Result<Self> {
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        let curve = PceCurve { points };
        curve.validate()?;
        Ok(curve)
    }

    pub fn constant(pce: f64) -> Result<Self> {
        PceCurve::new(vec![(0.0, pce)])
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::config("PCE curve has no points"));
        }
        for &(p, eta) in &self.points {
            if !(eta > 0.0 && eta < 1.0) {
                return Err(Error::config(format!("PCE must be in (0,1), got {eta} at {p} dBm")));
            }
        }
        if self.points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::config("PCE input powers must be strictly increasing"));
        }
        Ok(())
    }

    /// PCE at a total input power in dBm.
    pub fn pce_at(&self, input_dbm: f64) -> Result<f64> {
        if self.points.is_empty() {
            return Err(Error::config("PCE curve has no points"));
        }
        Ok(crate::fibre::interp_clamped(&self.points, input_dbm))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmplifierModel {
    pub band: BandName,
    pub noise_figure_db: f64,
    pub pce: PceCurve,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_output_dbm: Option<f64>,
}

impl AmplifierModel {
    /// Measured amplifier for each band: C/L-EDFA, S-TDFA, E/O-BDFA.
    pub fn default_for(band: BandName) -> AmplifierModel {
        let (nf, pce) = match band {
            BandName::O => (5.0, vec![(0.0, 0.004), (4.0, 0.007)]),
            BandName::E => (6.5, vec![(0.0, 0.012), (4.0, 0.013)]),
            BandName::S => (7.0, vec![(2.0, 0.012)]),
            BandName::C => (5.0, vec![(2.0, 0.05)]),
            BandName::L => (6.0, vec![(2.0, 0.037)]),
        };
        AmplifierModel {
            band,
            noise_figure_db: nf,
            pce: PceCurve { points: pce },
            max_output_dbm: None,
        }
    }

    pub fn defaults() -> Vec<AmplifierModel> {
        BandName::ALL.iter().map(|&b| AmplifierModel::default_for(b)).collect()
    }

    /// Short device name used on the command line ("C-EDFA", "O-BDFA", ...).
    pub fn device_name(&self) -> String {
        let kind = match self.band {
            BandName::C | BandName::L => "EDFA",
            BandName::S => "TDFA",
            BandName::O | BandName::E => "BDFA",
        };
        format!("{}-{kind}", self.band)
    }

    pub fn noise_factor(&self) -> f64 {
        db_to_linear(self.noise_figure_db)
    }

    /// Electrical power in W to lift the total optical power from `p_in_mw`
    /// to `p_out_mw`: (P_out − P_in)/η(P_in).
    pub fn electrical_power(&self, p_in_mw: f64, p_out_mw: f64) -> Result<f64> {
        if !(p_in_mw >= 0.0) || !p_out_mw.is_finite() {
            return Err(Error::domain(format!(
                "{}: input power must be non-negative, got {p_in_mw} mW",
                self.device_name()
            )));
        }
        if p_out_mw < p_in_mw {
            return Err(Error::domain(format!(
                "{}: output {p_out_mw} mW below input {p_in_mw} mW",
                self.device_name()
            )));
        }
        if let Some(cap) = self.max_output_dbm {
            if mw_to_dbm(p_out_mw) > cap + 1e-9 {
                return Err(Error::domain(format!(
                    "{}: output {:.2} dBm exceeds the {cap} dBm limit",
                    self.device_name(),
                    mw_to_dbm(p_out_mw)
                )));
            }
        }
        if p_out_mw == p_in_mw {
            return Ok(0.0);
        }
        let eta = self.pce.pce_at(mw_to_dbm(p_in_mw))?;
        Ok((p_out_mw - p_in_mw) * 1e-3 / eta)
    }

    /// Dual-polarisation ASE power in mW within the channel's symbol-rate
    /// bandwidth: h·f·(F·G − 1)·B.
    pub fn ase_power(&self, channel: &Channel, gain_linear: f64) -> Result<f64> {
        ase_power(
            self.noise_factor(),
            channel.center_thz,
            channel.symbol_rate_gbd,
            gain_linear,
        )
    }
}

/// ASE power in mW for noise factor `noise_factor` (linear), at `f_thz`, in a
/// `bandwidth_gbd` wide channel.
pub fn ase_power(noise_factor: f64, f_thz: f64, bandwidth_gbd: f64, gain_linear: f64) -> Result<f64> {
    if !(gain_linear >= 1.0) {
        return Err(Error::domain(format!("amplifier gain must be >= 1, got {gain_linear}")));
    }
    let watts = PLANCK * f_thz * 1e12 * (noise_factor * gain_linear - 1.0) * bandwidth_gbd * 1e9;
    Ok((watts * 1e3).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn channel(f: f64) -> Channel {
        Channel {
            center_thz: f,
            symbol_rate_gbd: 140.0,
            slot_ghz: 150.0,
            band: BandName::C,
        }
    }

    #[test]
    fn pce_lookup_examples() {
        let o = AmplifierModel::default_for(BandName::O);
        assert_eq!(o.pce.pce_at(0.0).unwrap(), 0.004);
        assert!((o.pce.pce_at(2.0).unwrap() - 0.0055).abs() < 1e-15);
        assert_eq!(o.pce.pce_at(9.0).unwrap(), 0.007);
        let c = AmplifierModel::default_for(BandName::C);
        assert_eq!(c.pce.pce_at(-10.0).unwrap(), 0.05);
        let empty = PceCurve { points: vec![] };
        assert!(empty.pce_at(0.0).is_err());
    }

    #[test]
    fn pce_validation() {
        assert!(PceCurve::new(vec![(0.0, 1.5)]).is_err());
        assert!(PceCurve::new(vec![(0.0, 0.0)]).is_err());
        assert!(PceCurve::new(vec![]).is_err());
        let c = PceCurve::new(vec![(4.0, 0.007), (0.0, 0.004)]).unwrap();
        assert_eq!(c.points[0], (0.0, 0.004));
    }

    #[test]
    fn electrical_power_examples() {
        let c = AmplifierModel {
            pce: PceCurve::constant(0.05).unwrap(),
            ..AmplifierModel::default_for(BandName::C)
        };
        assert!((c.electrical_power(1.0, 100.0).unwrap() - 1.98).abs() < 1e-12);
        assert_eq!(c.electrical_power(50.0, 50.0).unwrap(), 0.0);
        assert!(c.electrical_power(10.0, 5.0).is_err());
        let o = AmplifierModel::default_for(BandName::O);
        assert!((o.electrical_power(1.0, 200.0).unwrap() - 49.75).abs() < 1e-9);
    }

    #[test]
    fn output_cap() {
        let mut c = AmplifierModel::default_for(BandName::C);
        c.max_output_dbm = Some(20.0);
        assert!(c.electrical_power(1.0, 100.0).is_ok());
        assert!(c.electrical_power(1.0, 101.0).is_err());
    }

    #[test]
    fn ase_examples() {
        assert_eq!(ase_power(1.0, 193.5, 140.0, 1.0).unwrap(), 0.0);
        let p = ase_power(db_to_linear(5.0), 193.5, 140.0, db_to_linear(16.0)).unwrap();
        assert!((p - 2.243e-3).abs() < 2e-3 * 2.243e-3, "{p}");
        // n_sp form: P = 2·n_sp·h·f·(G−1)·B with n_sp = (F·G − 1)/(2(G − 1))
        let (f, g) = (db_to_linear(5.0), db_to_linear(16.0));
        let nsp = (f * g - 1.0) / (2.0 * (g - 1.0));
        let oracle = 2.0 * nsp * PLANCK * 193.5e12 * (g - 1.0) * 140e9 * 1e3;
        assert!(((p - oracle) / oracle).abs() < 1e-12);
        let p2 = ase_power(db_to_linear(5.0), 193.5, 280.0, db_to_linear(16.0)).unwrap();
        assert!((p2 / p - 2.0).abs() < 1e-12);
        assert!(ase_power(3.0, 193.5, 140.0, 0.5).is_err());
        let amp = AmplifierModel::default_for(BandName::C);
        assert!((amp.ase_power(&channel(193.5), db_to_linear(16.0)).unwrap() - p).abs() < 1e-18);
    }

    #[test]
    fn bdfa_cheaper_at_higher_input() {
        let o = AmplifierModel::default_for(BandName::O);
        // same 20 dB gain, input stepped across the measured curve
        let mut prev = f64::INFINITY;
        for dbm in [0.0, 1.0, 2.0, 3.0, 4.0] {
            let pin = crate::units::dbm_to_mw(dbm);
            let per_mw_in = o.electrical_power(pin, 100.0 * pin).unwrap() / pin;
            assert!(per_mw_in < prev);
            prev = per_mw_in;
        }
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn electrical_power_monotone_in_output(pin in 0.01f64..10.0, a in 0.0f64..500.0, b in 0.0f64..500.0) {
                let amp = AmplifierModel::default_for(BandName::E);
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                let p_lo = amp.electrical_power(pin, pin + lo).unwrap();
                let p_hi = amp.electrical_power(pin, pin + hi).unwrap();
                prop_assert!(p_hi >= p_lo);
            }

            #[test]
            fn pce_within_curve_range(dbm in -40.0f64..40.0) {
                for amp in AmplifierModel::defaults() {
                    let eta = amp.pce.pce_at(dbm).unwrap();
                    let lo = amp.pce.points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
                    let hi = amp.pce.points.iter().map(|p| p.1).fold(0.0, f64::max);
                    prop_assert!(eta >= lo && eta <= hi);
                }
            }

            #[test]
            fn ase_linear_in_frequency(f in 180.0f64..240.0, k in 1.0f64..3.0) {
                let a = ase_power(3.0, f, 140.0, 50.0).unwrap();
                let b = ase_power(3.0, f * k, 140.0, 50.0).unwrap();
                prop_assert!((b / a - k).abs() < 1e-12);
            }
        }
    }
}
