//! Wavelength-dependent fibre physics: loss, chromatic dispersion, Kerr
//! nonlinearity and the Raman gain spectrum.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::SPEED_OF_LIGHT_NM_THZ;
use crate::units::db_per_km_to_np;

/// Wavelength window in which attenuation may be queried.
pub const ATTENUATION_RANGE_NM: (f64, f64) = (1200.0, 1700.0);

/// Gaussian OH⁻ absorption remnant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaterPeak {
    pub center_nm: f64,
    pub height_db_per_km: f64,
    /// Standard deviation of the gaussian.
    pub width_nm: f64,
}

impl WaterPeak {
    fn at(&self, lambda_nm: f64) -> f64 {
        let u = (lambda_nm - self.center_nm) / self.width_nm;
        self.height_db_per_km * (-0.5 * u * u).exp()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AttenuationProfile {
    /// Measured (wavelength nm, dB/km) samples, linearly interpolated and
    /// clamped to the end points.
    Table { points: Vec<(f64, f64)> },
    /// Rayleigh λ⁻⁴ scattering + flat floor + optional water peak.
    Parametric {
        rayleigh_db_um4_per_km: f64,
        floor_db_per_km: f64,
        water_peak: Option<WaterPeak>,
    },
}

impl AttenuationProfile {
    /// Parametric profile with the floor solved so that the loss at 1550 nm
    /// is exactly `alpha_1550`.
    pub fn calibrated(rayleigh_db_um4_per_km: f64, alpha_1550: f64, water_peak: Option<WaterPeak>) -> Self {
        let rayleigh_1550 = rayleigh_db_um4_per_km / 1.55f64.powi(4);
        let water_1550 = water_peak.as_ref().map(|w| w.at(1550.0)).unwrap_or(0.0);
        AttenuationProfile::Parametric {
            rayleigh_db_um4_per_km,
            floor_db_per_km: alpha_1550 - rayleigh_1550 - water_1550,
            water_peak,
        }
    }

    pub fn table(points: Vec<(f64, f64)>) -> Result<Self> {
        validate_table(&points, "attenuation")?;
        if points.iter().any(|&(_, a)| !(a > 0.0)) {
            return Err(Error::config("attenuation table values must be positive"));
        }
        Ok(AttenuationProfile::Table { points })
    }

    /// Loss in dB/km.
    pub fn db_per_km(&self, lambda_nm: f64) -> Result<f64> {
        let (lo, hi) = ATTENUATION_RANGE_NM;
        if !(lambda_nm >= lo && lambda_nm <= hi) {
            return Err(Error::domain(format!(
                "attenuation queried at {lambda_nm} nm, outside [{lo}, {hi}] nm"
            )));
        }
        Ok(match self {
            AttenuationProfile::Table { points } => interp_clamped(points, lambda_nm),
            AttenuationProfile::Parametric {
                rayleigh_db_um4_per_km,
                floor_db_per_km,
                water_peak,
            } => {
                let um = lambda_nm * 1e-3;
                rayleigh_db_um4_per_km / (um * um * um * um)
                    + floor_db_per_km
                    + water_peak.as_ref().map(|w| w.at(lambda_nm)).unwrap_or(0.0)
            }
        })
    }

    /// Power attenuation coefficient in 1/km.
    pub fn np_per_km(&self, lambda_nm: f64) -> Result<f64> {
        self.db_per_km(lambda_nm).map(db_per_km_to_np)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        AttenuationProfile::table(read_two_column(path)?)
    }
}

/// Chromatic dispersion D(λ), piecewise linear through the anchors with the
/// end segments extrapolated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DispersionModel {
    /// (wavelength nm, D ps/(nm·km)), strictly increasing in wavelength.
    pub anchors: Vec<(f64, f64)>,
}

impl Default for DispersionModel {
    fn default() -> Self {
        DispersionModel {
            anchors: vec![(1260.0, -2.4), (1360.0, 4.5), (1550.0, 16.9)],
        }
    }
}

impl DispersionModel {
    pub fn new(anchors: Vec<(f64, f64)>) -> Result<Self> {
        validate_table(&anchors, "dispersion")?;
        if anchors.len() < 2 {
            return Err(Error::config("dispersion needs at least two anchors"));
        }
        Ok(DispersionModel { anchors })
    }

    fn segment(&self, lambda_nm: f64) -> (f64, f64) {
        let a = &self.anchors;
        let k = a.partition_point(|&(l, _)| l <= lambda_nm).clamp(1, a.len() - 1);
        let ((l0, d0), (l1, d1)) = (a[k - 1], a[k]);
        let slope = (d1 - d0) / (l1 - l0);
        (d0 + slope * (lambda_nm - l0), slope)
    }

    /// D in ps/(nm·km).
    pub fn d_at(&self, lambda_nm: f64) -> f64 {
        self.segment(lambda_nm).0
    }

    /// dD/dλ in ps/(nm²·km).
    pub fn slope_at(&self, lambda_nm: f64) -> f64 {
        self.segment(lambda_nm).1
    }

    /// (β₂ in ps²/km, β₃ in ps³/km) at frequency `f_thz`.
    pub fn beta2_beta3_at(&self, f_thz: f64) -> Result<(f64, f64)> {
        if !(f_thz > 0.0) {
            return Err(Error::domain(format!("frequency must be positive, got {f_thz}")));
        }
        let c = SPEED_OF_LIGHT_NM_THZ; // nm/ps
        let lambda = c / f_thz;
        let (d, s) = self.segment(lambda);
        let k = lambda * lambda / (2.0 * PI * c);
        let beta2 = -d * k;
        let beta3 = k * k * s + lambda.powi(3) / (2.0 * PI * PI * c * c) * d;
        Ok((beta2, beta3))
    }

    pub fn scaled(&self, factor: f64) -> DispersionModel {
        DispersionModel {
            anchors: self.anchors.iter().map(|&(l, d)| (l, d * factor)).collect(),
        }
    }
}

/// Kerr coefficient γ(λ), linear between anchors and clamped outside.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonlinearCoefficient {
    /// (wavelength nm, γ 1/(W·km)).
    pub anchors: Vec<(f64, f64)>,
}

impl Default for NonlinearCoefficient {
    fn default() -> Self {
        NonlinearCoefficient {
            anchors: vec![(1310.0, 1.97), (1550.0, 1.27)],
        }
    }
}

impl NonlinearCoefficient {
    pub fn at(&self, lambda_nm: f64) -> f64 {
        interp_clamped(&self.anchors, lambda_nm)
    }
}

/// Normalised silica Raman gain shape scaled by a peak efficiency C_R.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RamanGainSpectrum {
    /// (frequency shift THz, relative gain), shift strictly increasing from 0.
    pub shape: Vec<(f64, f64)>,
    /// Peak efficiency in 1/(W·km) for a pump at `reference_thz`.
    pub peak_efficiency: f64,
    pub reference_thz: f64,
    /// Scale the gain by f_pump / f_ref.
    pub pump_frequency_scaling: bool,
}

impl Default for RamanGainSpectrum {
    fn default() -> Self {
        RamanGainSpectrum {
            shape: vec![
                (0.0, 0.0),
                (2.0, 0.11),
                (4.0, 0.24),
                (6.0, 0.38),
                (8.0, 0.52),
                (10.0, 0.70),
                (12.0, 0.90),
                (13.2, 1.0),
                (14.7, 0.93),
                (16.5, 0.38),
                (18.0, 0.32),
                (24.0, 0.12),
                (30.0, 0.06),
                (40.0, 0.0),
            ],
            peak_efficiency: 0.39,
            reference_thz: 206.0,
            pump_frequency_scaling: true,
        }
    }
}

impl RamanGainSpectrum {
    /// Same spectrum with Raman transfer switched off.
    pub fn disabled() -> Self {
        RamanGainSpectrum {
            peak_efficiency: 0.0,
            ..RamanGainSpectrum::default()
        }
    }

    /// Relative gain at a (non-negative) shift; zero beyond the table.
    pub fn shape_at(&self, shift_thz: f64) -> f64 {
        let s = &self.shape;
        if shift_thz <= s[0].0 || shift_thz >= s[s.len() - 1].0 {
            return 0.0;
        }
        interp_clamped(s, shift_thz)
    }

    fn gain(&self, f_pump: f64, shift: f64) -> f64 {
        let scale = if self.pump_frequency_scaling {
            f_pump / self.reference_thz
        } else {
            1.0
        };
        self.peak_efficiency * self.shape_at(shift) * scale
    }

    /// Signed coupling of the wave at `f_pump` onto the wave at `f_signal`,
    /// in 1/(W·km): dP_s/dz ∋ coupling · P_s · P_p.
    ///
    /// Positive when the other wave is higher in frequency (gain). When it is
    /// lower, the wave at `f_signal` is the one being depleted, and its loss is
    /// the gain it gives, scaled by the photon-energy ratio, so photon number is
    /// conserved.
    pub fn coupling(&self, f_pump: f64, f_signal: f64) -> f64 {
        let shift = f_pump - f_signal;
        if shift > 0.0 {
            self.gain(f_pump, shift)
        } else if shift < 0.0 {
            -(f_signal / f_pump) * self.gain(f_signal, -shift)
        } else {
            0.0
        }
    }

    pub fn from_file(path: &Path, base: &RamanGainSpectrum) -> Result<Self> {
        let shape = read_two_column(path)?;
        let out = RamanGainSpectrum { shape, ..base.clone() };
        out.validate()?;
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        validate_table(&self.shape, "raman shape")?;
        if self.shape.len() < 2 || self.shape[0].0 != 0.0 || self.shape[0].1 != 0.0 {
            return Err(Error::config("raman shape must start at (0, 0)"));
        }
        if self.shape.iter().any(|&(_, g)| g < 0.0) {
            return Err(Error::config("raman shape must be non-negative"));
        }
        if !(self.peak_efficiency >= 0.0) || !(self.reference_thz > 0.0) {
            return Err(Error::config("raman efficiency must be >= 0 and reference > 0"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FibreProfile {
    pub name: String,
    pub attenuation: AttenuationProfile,
    pub dispersion: DispersionModel,
    pub gamma: NonlinearCoefficient,
    pub raman: RamanGainSpectrum,
    pub span_length_km: f64,
}

impl FibreProfile {
    /// Standard-loss deployed G.652.D stand-in: ~0.34 dB/km at 1310 nm,
    /// 0.20 dB/km at 1550 nm, with a water-peak remnant at 1383 nm.
    pub fn fibre_a() -> Self {
        FibreProfile {
            name: "A".into(),
            attenuation: AttenuationProfile::calibrated(
                0.86,
                0.20,
                Some(WaterPeak {
                    center_nm: 1383.0,
                    height_db_per_km: 0.05,
                    width_nm: 12.0,
                }),
            ),
            dispersion: DispersionModel::default(),
            gamma: NonlinearCoefficient::default(),
            raman: RamanGainSpectrum::default(),
            span_length_km: 80.0,
        }
    }

    /// Low-loss fibre: ~0.27 dB/km at 1310 nm, 0.15 dB/km at 1550 nm, no water peak.
    pub fn fibre_b() -> Self {
        FibreProfile {
            name: "B".into(),
            attenuation: AttenuationProfile::calibrated(0.72, 0.15, None),
            ..FibreProfile::fibre_a()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.span_length_km > 0.0) {
            return Err(Error::config(format!(
                "fibre {}: span length must be positive",
                self.name
            )));
        }
        let mut lambda = 1260.0;
        while lambda <= 1650.0 {
            let a = self.attenuation.db_per_km(lambda)?;
            if !(a > 0.0) {
                return Err(Error::config(format!(
                    "fibre {}: attenuation {a} dB/km at {lambda} nm is not positive",
                    self.name
                )));
            }
            if !(self.gamma.at(lambda) > 0.0) {
                return Err(Error::config(format!(
                    "fibre {}: gamma must be positive at {lambda} nm",
                    self.name
                )));
            }
            lambda += 5.0;
        }
        if self.dispersion.anchors.len() < 2 {
            return Err(Error::config("dispersion needs at least two anchors"));
        }
        self.raman.validate()
    }
}

fn validate_table(points: &[(f64, f64)], what: &str) -> Result<()> {
    if points.is_empty() {
        return Err(Error::config(format!("{what} table is empty")));
    }
    if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::config(format!(
            "{what} table abscissae must be strictly increasing"
        )));
    }
    if points.iter().any(|&(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::config(format!("{what} table has non-finite entries")));
    }
    Ok(())
}

/// Linear interpolation with constant extrapolation.
pub(crate) fn interp_clamped(points: &[(f64, f64)], x: f64) -> f64 {
    let n = points.len();
    if x <= points[0].0 {
        return points[0].1;
    }
    if x >= points[n - 1].0 {
        return points[n - 1].1;
    }
    let k = points.partition_point(|&(px, _)| px <= x);
    let ((x0, y0), (x1, y1)) = (points[k - 1], points[k]);
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// Reads whitespace-separated two-column numeric text; `#` starts a comment.
pub fn read_two_column(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_two_column(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

pub fn parse_two_column(text: &str) -> std::result::Result<Vec<(f64, f64)>, String> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() < 2 {
            return Err(format!("line {}: expected two columns", lineno + 1));
        }
        let x: f64 = cols[0]
            .parse()
            .map_err(|_| format!("line {}: bad number '{}'", lineno + 1, cols[0]))?;
        let y: f64 = cols[1]
            .parse()
            .map_err(|_| format!("line {}: bad number '{}'", lineno + 1, cols[1]))?;
        out.push((x, y));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn calibrated_anchors_at_1550() {
        let a = FibreProfile::fibre_a();
        let b = FibreProfile::fibre_b();
        assert!((a.attenuation.db_per_km(1550.0).unwrap() - 0.20).abs() < 1e-12);
        assert!((b.attenuation.db_per_km(1550.0).unwrap() - 0.15).abs() < 1e-12);
    }

    #[test]
    fn parametric_shape() {
        for f in [FibreProfile::fibre_a(), FibreProfile::fibre_b()] {
            let at = |l| f.attenuation.db_per_km(l).unwrap();
            assert!(at(1310.0) > at(1550.0));
            // convex around the 1550 nm minimum region
            assert!(at(1500.0) + at(1600.0) > 2.0 * at(1550.0));
            f.validate().unwrap();
        }
        let a = FibreProfile::fibre_a();
        let a1310 = a.attenuation.db_per_km(1310.0).unwrap();
        assert!((a1310 - 0.33).abs() < 0.02, "{a1310}");
        let b1310 = FibreProfile::fibre_b().attenuation.db_per_km(1310.0).unwrap();
        assert!((b1310 - 0.27).abs() < 0.02, "{b1310}");
        // water peak remnant only on fibre A
        let bump = a.attenuation.db_per_km(1383.0).unwrap()
            - 0.5 * (a.attenuation.db_per_km(1340.0).unwrap() + a.attenuation.db_per_km(1426.0).unwrap());
        assert!(bump > 0.03);
    }

    #[test]
    fn table_mode_clamps_and_interpolates() {
        let t = AttenuationProfile::table(vec![(1550.0, 0.2)]).unwrap();
        assert_eq!(t.db_per_km(1310.0).unwrap(), 0.2);
        let t = AttenuationProfile::table(vec![(1300.0, 0.3), (1500.0, 0.2)]).unwrap();
        assert!((t.db_per_km(1400.0).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(t.db_per_km(1650.0).unwrap(), 0.2);
        assert!(t.db_per_km(1100.0).is_err());
        assert!(AttenuationProfile::table(vec![(1500.0, 0.2), (1400.0, 0.3)]).is_err());
        assert!(AttenuationProfile::table(vec![(1500.0, -0.2)]).is_err());
    }

    #[test]
    fn beta2_at_1550() {
        let d = DispersionModel::default();
        let (b2, _) = d.beta2_beta3_at(SPEED_OF_LIGHT_NM_THZ / 1550.0).unwrap();
        let expected = -16.9 * 1550.0 * 1550.0 / (2.0 * PI * 299_792.458);
        assert!((b2 - expected).abs() < 1e-12);
        assert!((b2 + 21.55).abs() < 0.01);
    }

    #[test]
    fn beta2_zero_crossing() {
        let d = DispersionModel::default();
        // D is linear between 1260 and 1360 nm: zero at 1260 + 100·2.4/6.9
        let l0 = 1260.0 + 100.0 * 2.4 / 6.9;
        let (b2, _) = d.beta2_beta3_at(SPEED_OF_LIGHT_NM_THZ / l0).unwrap();
        assert!(b2.abs() < 1e-12);
        // exactly one sign change on a fine scan of [1260, 1360]
        let mut changes = 0;
        let mut prev = d.beta2_beta3_at(SPEED_OF_LIGHT_NM_THZ / 1260.0).unwrap().0;
        for i in 1..=1000 {
            let l = 1260.0 + 0.1 * i as f64;
            let b = d.beta2_beta3_at(SPEED_OF_LIGHT_NM_THZ / l).unwrap().0;
            if b.signum() != prev.signum() && b != 0.0 {
                changes += 1;
            }
            prev = b;
        }
        assert_eq!(changes, 1);
    }

    #[test]
    fn beta_linear_in_d_and_sign() {
        let d = DispersionModel::default();
        let d2 = d.scaled(2.0);
        for f in [190.0, 200.0, 215.0, 230.0] {
            let (a2, a3) = d.beta2_beta3_at(f).unwrap();
            let (b2, b3) = d2.beta2_beta3_at(f).unwrap();
            assert!((b2 - 2.0 * a2).abs() < 1e-12 * a2.abs().max(1.0));
            assert!((b3 - 2.0 * a3).abs() < 1e-12 * a3.abs().max(1.0));
            let dval = d.d_at(SPEED_OF_LIGHT_NM_THZ / f);
            assert_eq!(a2.signum(), -dval.signum());
        }
    }

    #[test]
    fn beta3_matches_finite_difference_of_beta2() {
        // β₃ = dβ₂/dω; check with a central difference inside one linear segment
        let d = DispersionModel::default();
        let f = 200.0;
        let df = 1e-3;
        let b2p = d.beta2_beta3_at(f + df).unwrap().0;
        let b2m = d.beta2_beta3_at(f - df).unwrap().0;
        let fd = (b2p - b2m) / (2.0 * PI * 2.0 * df);
        let (_, b3) = d.beta2_beta3_at(f).unwrap();
        assert!((fd - b3).abs() < 1e-6 * b3.abs(), "{fd} vs {b3}");
    }

    #[test]
    fn dispersion_extrapolates_last_segment() {
        let d = DispersionModel::default();
        let slope = (16.9 - 4.5) / 190.0;
        assert!((d.d_at(1600.0) - (16.9 + 50.0 * slope)).abs() < 1e-12);
    }

    #[test]
    fn gamma_interpolation() {
        let g = NonlinearCoefficient::default();
        assert_eq!(g.at(1310.0), 1.97);
        assert_eq!(g.at(1550.0), 1.27);
        assert_eq!(g.at(1265.0), 1.97);
        assert_eq!(g.at(1620.0), 1.27);
        assert!((g.at(1430.0) - 1.62).abs() < 1e-12);
    }

    #[test]
    fn raman_coupling_examples() {
        let r = RamanGainSpectrum::default();
        assert_eq!(r.coupling(200.0, 200.0), 0.0);
        let peak = r.coupling(206.0 + 13.2, 206.0);
        assert!((peak - 0.39 * (219.2 / 206.0)).abs() < 1e-12);
        let (fa, fb) = (215.3, 198.1);
        let ratio = r.coupling(fb, fa) / r.coupling(fa, fb);
        assert!((ratio + fa / fb).abs() < 1e-12);
        assert_eq!(r.shape_at(45.0), 0.0);
        assert_eq!(r.coupling(230.0, 185.0), 0.0);
        assert!(RamanGainSpectrum::disabled().coupling(210.0, 200.0) == 0.0);
    }

    #[test]
    fn two_column_parser() {
        let pts = parse_two_column("# header\n1300 0.33\n\n1550\t0.20  # trailing\n").unwrap();
        assert_eq!(pts, vec![(1300.0, 0.33), (1550.0, 0.20)]);
        assert!(parse_two_column("1300\n").is_err());
        assert!(parse_two_column("1300 abc\n").is_err());
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn raman_photon_antisymmetry(fa in 180.0f64..240.0, fb in 180.0f64..240.0) {
                let r = RamanGainSpectrum::default();
                // photon flux exchanged: c(a→b)/f_b + c(b→a)/f_a = 0
                let s = r.coupling(fa, fb) / fb + r.coupling(fb, fa) / fa;
                prop_assert!(s.abs() < 1e-12);
                if fa > fb { prop_assert!(r.coupling(fa, fb) >= 0.0); }
            }

            #[test]
            fn attenuation_continuous(l in 1260.0f64..1650.0) {
                for f in [FibreProfile::fibre_a(), FibreProfile::fibre_b()] {
                    let a = f.attenuation.db_per_km(l).unwrap();
                    let b = f.attenuation.db_per_km(l + 1e-6).unwrap();
                    prop_assert!(a > 0.0);
                    prop_assert!((a - b).abs() < 1e-6);
                    let d0 = f.dispersion.d_at(l);
                    let d1 = f.dispersion.d_at(l + 1e-6);
                    prop_assert!((d0 - d1).abs() < 1e-6);
                }
            }
        }
    }
}
