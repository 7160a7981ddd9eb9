//! Wavelength/frequency conversion, transmission bands and the WDM channel grid.
//!
//! Wavelengths are in nm and frequencies in THz everywhere. Slot widths and
//! symbol rates are carried in GHz/GBd at the interface, THz inside the maths.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light in nm·THz.
pub const SPEED_OF_LIGHT_NM_THZ: f64 = 299_792.458;

/// Relative slack used when deciding whether a slot fits inside a band.
const FIT_TOLERANCE: f64 = 1e-9;

pub fn wavelength_to_frequency(lambda_nm: f64) -> Result<f64> {
    if !(lambda_nm > 0.0) || !lambda_nm.is_finite() {
        return Err(Error::domain(format!(
            "wavelength must be positive, got {lambda_nm} nm"
        )));
    }
    Ok(SPEED_OF_LIGHT_NM_THZ / lambda_nm)
}

pub fn frequency_to_wavelength(f_thz: f64) -> Result<f64> {
    if !(f_thz > 0.0) || !f_thz.is_finite() {
        return Err(Error::domain(format!("frequency must be positive, got {f_thz} THz")));
    }
    Ok(SPEED_OF_LIGHT_NM_THZ / f_thz)
}

/// One of the five silica transmission windows served by a doped-fibre amplifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BandName {
    O,
    E,
    S,
    C,
    L,
}

impl BandName {
    /// Short-to-long wavelength order, which is also the label order ("OESCL").
    pub const ALL: [BandName; 5] = [BandName::O, BandName::E, BandName::S, BandName::C, BandName::L];

    /// Bit position used for subset masks.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_char(self) -> char {
        match self {
            BandName::O => 'O',
            BandName::E => 'E',
            BandName::S => 'S',
            BandName::C => 'C',
            BandName::L => 'L',
        }
    }
}

impl fmt::Display for BandName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

impl FromStr for BandName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "O" => Ok(BandName::O),
            "E" => Ok(BandName::E),
            "S" => Ok(BandName::S),
            "C" => Ok(BandName::C),
            "L" => Ok(BandName::L),
            other => Err(Error::Parse(format!("unknown band '{other}'"))),
        }
    }
}

/// Parses a band label such as "OESCL" or "cl" into band names, in label order.
pub fn parse_band_label(label: &str) -> Result<Vec<BandName>> {
    let mut out: Vec<BandName> = Vec::new();
    for ch in label.chars().filter(|c| !c.is_whitespace() && *c != ',') {
        let b: BandName = ch.to_string().parse()?;
        if out.contains(&b) {
            return Err(Error::Parse(format!("band {b} repeated in '{label}'")));
        }
        out.push(b);
    }
    if out.is_empty() {
        return Err(Error::Parse("empty band label".into()));
    }
    out.sort();
    Ok(out)
}

pub fn band_label(bands: &[BandName]) -> String {
    let mut sorted = bands.to_vec();
    sorted.sort();
    sorted.iter().map(|b| b.as_char()).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub name: BandName,
    pub lambda_min_nm: f64,
    pub lambda_max_nm: f64,
}

impl Band {
    pub fn new(name: BandName, lambda_min_nm: f64, lambda_max_nm: f64) -> Result<Self> {
        if !(lambda_min_nm > 0.0 && lambda_min_nm < lambda_max_nm) {
            return Err(Error::domain(format!(
                "band {name}: need 0 < lambda_min < lambda_max, got [{lambda_min_nm}, {lambda_max_nm}] nm"
            )));
        }
        Ok(Band {
            name,
            lambda_min_nm,
            lambda_max_nm,
        })
    }

    /// Amplifier-limited default band edges.
    pub fn default_for(name: BandName) -> Band {
        let (lo, hi) = match name {
            BandName::O => (1265.0, 1355.0),
            BandName::E => (1400.0, 1460.0),
            BandName::S => (1470.0, 1520.0),
            BandName::C => (1530.0, 1565.0),
            BandName::L => (1570.0, 1620.0),
        };
        Band {
            name,
            lambda_min_nm: lo,
            lambda_max_nm: hi,
        }
    }

    pub fn defaults() -> Vec<Band> {
        BandName::ALL.iter().map(|&b| Band::default_for(b)).collect()
    }

    pub fn f_min_thz(&self) -> f64 {
        SPEED_OF_LIGHT_NM_THZ / self.lambda_max_nm
    }

    pub fn f_max_thz(&self) -> f64 {
        SPEED_OF_LIGHT_NM_THZ / self.lambda_min_nm
    }

    pub fn overlaps(&self, other: &Band) -> bool {
        self.lambda_min_nm < other.lambda_max_nm && other.lambda_min_nm < self.lambda_max_nm
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub center_thz: f64,
    pub symbol_rate_gbd: f64,
    pub slot_ghz: f64,
    pub band: BandName,
}

impl Channel {
    pub fn wavelength_nm(&self) -> f64 {
        SPEED_OF_LIGHT_NM_THZ / self.center_thz
    }
}

/// Channels in ascending frequency, grouped contiguously by band.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelGrid {
    channels: Vec<Channel>,
    counts: Vec<(BandName, usize)>,
    symbol_rate_gbd: f64,
    slot_ghz: f64,
}

impl ChannelGrid {
    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.channels.iter().map(|c| c.center_thz).collect()
    }

    /// Per-band channel counts in ascending frequency order of the bands.
    pub fn counts(&self) -> &[(BandName, usize)] {
        &self.counts
    }

    pub fn count(&self, band: BandName) -> usize {
        self.counts
            .iter()
            .find(|(b, _)| *b == band)
            .map(|(_, n)| *n)
            .unwrap_or(0)
    }

    /// Bands present with at least one channel.
    pub fn bands(&self) -> Vec<BandName> {
        let mut v: Vec<BandName> = self.counts.iter().filter(|(_, n)| *n > 0).map(|(b, _)| *b).collect();
        v.sort();
        v
    }

    /// Index range of a band's channels.
    pub fn band_range(&self, band: BandName) -> Range<usize> {
        let start = self.channels.iter().position(|c| c.band == band);
        match start {
            Some(s) => s..s + self.count(band),
            None => 0..0,
        }
    }

    pub fn symbol_rate_gbd(&self) -> f64 {
        self.symbol_rate_gbd
    }

    pub fn symbol_rate_thz(&self) -> f64 {
        self.symbol_rate_gbd * 1e-3
    }

    pub fn slot_ghz(&self) -> f64 {
        self.slot_ghz
    }

    /// Index of the channel whose signal bandwidth `[f_c - B/2, f_c + B/2]`
    /// contains `f_thz`, if any.
    pub fn channel_containing(&self, f_thz: f64) -> Option<usize> {
        let half = 0.5 * self.symbol_rate_thz();
        let idx = self.channels.partition_point(|c| c.center_thz < f_thz);
        let mut best = None;
        for cand in [idx.wrapping_sub(1), idx] {
            if let Some(c) = self.channels.get(cand) {
                if (c.center_thz - f_thz).abs() <= half * (1.0 + 1e-12) {
                    best = Some(cand);
                }
            }
        }
        best
    }

    /// Grid restricted to a subset of bands, keeping channel positions.
    pub fn subset(&self, bands: &[BandName]) -> ChannelGrid {
        let channels: Vec<Channel> = self
            .channels
            .iter()
            .filter(|c| bands.contains(&c.band))
            .cloned()
            .collect();
        let counts = self.counts.iter().filter(|(b, _)| bands.contains(b)).cloned().collect();
        ChannelGrid {
            channels,
            counts,
            symbol_rate_gbd: self.symbol_rate_gbd,
            slot_ghz: self.slot_ghz,
        }
    }

    /// Builds a grid from explicit channel frequencies. Used by tests and by
    /// toy systems; frequencies must be strictly increasing.
    pub fn from_frequencies(
        centers_thz: &[f64],
        band: BandName,
        symbol_rate_gbd: f64,
        slot_ghz: f64,
    ) -> Result<ChannelGrid> {
        if centers_thz.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain("channel frequencies must be strictly increasing"));
        }
        if symbol_rate_gbd > slot_ghz {
            return Err(Error::domain(format!(
                "symbol rate {symbol_rate_gbd} GBd exceeds slot {slot_ghz} GHz"
            )));
        }
        let channels: Vec<Channel> = centers_thz
            .iter()
            .map(|&f| Channel {
                center_thz: f,
                symbol_rate_gbd,
                slot_ghz,
                band,
            })
            .collect();
        Ok(ChannelGrid {
            counts: vec![(band, channels.len())],
            channels,
            symbol_rate_gbd,
            slot_ghz,
        })
    }
}

/// Number of whole slots that fit in a band when packing from the low edge
/// with a half-slot guard.
pub fn slots_in_band(band: &Band, slot_ghz: f64) -> usize {
    let slot = slot_ghz * 1e-3;
    let width = band.f_max_thz() - band.f_min_thz();
    let n = ((width - slot) / slot + FIT_TOLERANCE).floor();
    if n < 0.0 {
        0
    } else {
        n as usize + 1
    }
}

/// Packs channels into each band starting at the band's low-frequency edge
/// plus half a slot.
pub fn build_grid(bands: &[Band], slot_ghz: f64, symbol_rate_gbd: f64) -> Result<ChannelGrid> {
    build_grid_trimmed(bands, slot_ghz, symbol_rate_gbd, &[])
}

/// As [`build_grid`], then removes `trim` channels from each listed band,
/// alternating between its high- and low-frequency edges.
pub fn build_grid_trimmed(
    bands: &[Band],
    slot_ghz: f64,
    symbol_rate_gbd: f64,
    trims: &[(BandName, usize)],
) -> Result<ChannelGrid> {
    if bands.is_empty() {
        return Err(Error::domain("no bands given"));
    }
    if !(symbol_rate_gbd > 0.0) || !(slot_ghz >= symbol_rate_gbd) {
        return Err(Error::domain(format!(
            "need 0 < symbol rate <= slot, got {symbol_rate_gbd} GBd in {slot_ghz} GHz"
        )));
    }
    for (i, a) in bands.iter().enumerate() {
        if !(a.lambda_min_nm > 0.0 && a.lambda_min_nm < a.lambda_max_nm) {
            return Err(Error::domain(format!("band {} has inverted limits", a.name)));
        }
        for b in &bands[i + 1..] {
            if a.name == b.name {
                return Err(Error::domain(format!("band {} listed twice", a.name)));
            }
            if a.overlaps(b) {
                return Err(Error::domain(format!("bands {} and {} overlap", a.name, b.name)));
            }
        }
    }

    let mut sorted: Vec<&Band> = bands.iter().collect();
    sorted.sort_by(|a, b| a.f_min_thz().total_cmp(&b.f_min_thz()));

    let slot = slot_ghz * 1e-3;
    let mut channels = Vec::new();
    let mut counts = Vec::new();
    for band in sorted {
        let n = slots_in_band(band, slot_ghz);
        if n == 0 {
            log::warn!(
                "band {} ({:.3} THz wide) is narrower than one {} GHz slot; no channels placed",
                band.name,
                band.f_max_thz() - band.f_min_thz(),
                slot_ghz
            );
        }
        let trim = trims
            .iter()
            .find(|(b, _)| *b == band.name)
            .map(|(_, t)| *t)
            .unwrap_or(0)
            .min(n);
        // alternate high edge, low edge, high edge, ...
        let drop_low = trim / 2;
        let drop_high = trim - drop_low;
        let f0 = band.f_min_thz() + 0.5 * slot;
        let kept = drop_low..n - drop_high;
        for k in kept.clone() {
            channels.push(Channel {
                center_thz: f0 + k as f64 * slot,
                symbol_rate_gbd,
                slot_ghz,
                band: band.name,
            });
        }
        counts.push((band.name, kept.len()));
    }
    Ok(ChannelGrid {
        channels,
        counts,
        symbol_rate_gbd,
        slot_ghz,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force slot packer: walks upward from the low edge one slot at a
    /// time and keeps each slot whose upper edge is still inside the band.
    fn packing_oracle(band: &Band, slot_ghz: f64) -> usize {
        let slot = slot_ghz * 1e-3;
        let (lo, hi) = (band.f_min_thz(), band.f_max_thz());
        let mut n = 0;
        loop {
            let upper = lo + (n + 1) as f64 * slot;
            if upper > hi + 1e-9 * slot {
                return n;
            }
            n += 1;
        }
    }

    #[test]
    fn wavelength_frequency_examples() {
        assert!((wavelength_to_frequency(1550.0).unwrap() - 193.414_489).abs() < 1e-4);
        assert_eq!(wavelength_to_frequency(299_792.458).unwrap(), 1.0);
        assert!((wavelength_to_frequency(1310.0).unwrap() - 228.849_204).abs() < 1e-4);
        assert!(wavelength_to_frequency(0.0).is_err());
        assert!(wavelength_to_frequency(-3.0).is_err());
        assert!(frequency_to_wavelength(0.0).is_err());
    }

    #[test]
    fn c_band_holds_29_channels() {
        let c = Band::default_for(BandName::C);
        assert_eq!(packing_oracle(&c, 150.0), 29);
        let g = build_grid(&[c], 150.0, 140.0).unwrap();
        assert_eq!(g.len(), 29);
    }

    #[test]
    fn exact_single_slot_band() {
        let f0 = 193.0;
        let band = Band::new(
            BandName::C,
            SPEED_OF_LIGHT_NM_THZ / (f0 + 0.150),
            SPEED_OF_LIGHT_NM_THZ / f0,
        )
        .unwrap();
        let g = build_grid(&[band], 150.0, 140.0).unwrap();
        assert_eq!(g.len(), 1);
        assert!((g.channels()[0].center_thz - (f0 + 0.075)).abs() < 1e-9);
    }

    #[test]
    fn narrow_band_contributes_nothing() {
        let band = Band::new(BandName::C, 1550.0, 1550.5).unwrap();
        let g = build_grid(&[band, Band::default_for(BandName::L)], 150.0, 140.0).unwrap();
        assert_eq!(g.count(BandName::C), 0);
        assert_eq!(g.count(BandName::L), 39);
    }

    #[test]
    fn default_bands_near_277() {
        let bands = Band::defaults();
        let g = build_grid(&bands, 150.0, 140.0).unwrap();
        let oracle: usize = bands.iter().map(|b| packing_oracle(b, 150.0)).sum();
        assert_eq!(g.len(), oracle);
        for b in &bands {
            assert_eq!(g.count(b.name), packing_oracle(b, 150.0), "band {}", b.name);
        }
        assert!((274..=280).contains(&g.len()), "got {}", g.len());
    }

    #[test]
    fn trim_removes_edge_channels() {
        let c = Band::default_for(BandName::C);
        let full = build_grid(std::slice::from_ref(&c), 150.0, 140.0).unwrap();
        let t = build_grid_trimmed(&[c], 150.0, 140.0, &[(BandName::C, 3)]).unwrap();
        assert_eq!(t.len(), 26);
        // one dropped at the low edge, two at the high edge
        assert_eq!(t.channels()[0], full.channels()[1]);
        assert_eq!(t.channels()[25], full.channels()[26]);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(build_grid(&[], 150.0, 140.0).is_err());
        let c = Band::default_for(BandName::C);
        assert!(build_grid(std::slice::from_ref(&c), 100.0, 140.0).is_err());
        let overlapping = Band::new(BandName::L, 1560.0, 1600.0).unwrap();
        assert!(build_grid(&[c, overlapping], 150.0, 140.0).is_err());
        assert!(Band::new(BandName::C, 1565.0, 1530.0).is_err());
    }

    #[test]
    fn channel_lookup_respects_gaps() {
        let g = build_grid(&[Band::default_for(BandName::C)], 150.0, 140.0).unwrap();
        let f = g.channels()[3].center_thz;
        assert_eq!(g.channel_containing(f), Some(3));
        assert_eq!(g.channel_containing(f + 0.069), Some(3));
        assert_eq!(g.channel_containing(f + 0.075), None);
        assert_eq!(g.channel_containing(f + 0.081), Some(4));
        assert_eq!(g.channel_containing(100.0), None);
    }

    #[test]
    fn labels() {
        assert_eq!(parse_band_label("lc").unwrap(), vec![BandName::C, BandName::L]);
        assert_eq!(band_label(&[BandName::L, BandName::O, BandName::C]), "OCL");
        assert!(parse_band_label("CC").is_err());
        assert!(parse_band_label("X").is_err());
        let g = build_grid(&Band::defaults(), 150.0, 140.0).unwrap();
        let cl = g.subset(&[BandName::C, BandName::L]);
        assert_eq!(cl.len(), g.count(BandName::C) + g.count(BandName::L));
        assert_eq!(cl.band_range(BandName::C), 39..39 + 29);
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn round_trip(lambda in 800.0f64..2000.0) {
                let back = frequency_to_wavelength(wavelength_to_frequency(lambda).unwrap()).unwrap();
                prop_assert!(((back - lambda) / lambda).abs() < 1e-9);
            }

            #[test]
            fn slots_stay_inside_bands(lo in 1260.0f64..1600.0, width in 0.5f64..80.0, slot in 50.0f64..200.0) {
                let band = Band::new(BandName::C, lo, lo + width).unwrap();
                let g = build_grid(std::slice::from_ref(&band), slot, slot * 0.9).unwrap();
                let s = slot * 1e-3;
                for c in g.channels() {
                    prop_assert!(c.center_thz - s / 2.0 >= band.f_min_thz() - 1e-9);
                    prop_assert!(c.center_thz + s / 2.0 <= band.f_max_thz() + 1e-9);
                }
                for w in g.channels().windows(2) {
                    prop_assert!(w[1].center_thz > w[0].center_thz);
                    prop_assert!((w[1].center_thz - w[0].center_thz - s).abs() < 1e-9);
                }
                let again = build_grid(&[band], slot, slot * 0.9).unwrap();
                prop_assert_eq!(g, again);
            }
        }
    }
}
