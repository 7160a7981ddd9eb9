//! dB helpers. Powers are mW internally; dBm only at the edges.

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

/// dB/km to the power attenuation coefficient in 1/km.
pub fn db_per_km_to_np(db_per_km: f64) -> f64 {
    db_per_km * std::f64::consts::LN_10 / 10.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversions() {
        assert!((dbm_to_mw(0.0) - 1.0).abs() < 1e-15);
        assert!((dbm_to_mw(20.0) - 100.0).abs() < 1e-12);
        assert!((mw_to_dbm(2.0) - 3.010_299_956_639_812).abs() < 1e-12);
        assert!((linear_to_db(db_to_linear(-7.25)) + 7.25).abs() < 1e-12);
        // 16 dB over 80 km
        let a = db_per_km_to_np(0.2);
        assert!(((-a * 80.0).exp() - db_to_linear(-16.0)).abs() < 1e-15);
    }
}
