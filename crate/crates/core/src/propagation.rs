//! Radio propagation: COST-231-HATA path loss, dB/linear conversion and
//! thermal noise per resource unit.

/// Distances below this are clamped to keep the Hata fit in range, meters.
pub const MIN_DISTANCE_M: f64 = 10.0;

/// Carrier frequency range over which COST-231-HATA is defined, MHz.
pub const COST231_FREQ_RANGE_MHZ: (f64, f64) = (1500.0, 2000.0);

/// COST-231-HATA urban path loss in dB, medium-city form (`C_m = 0`).
///
/// `distance` and the heights are in meters, `frequency` in MHz. Distances
/// below [`MIN_DISTANCE_M`] are clamped.
pub fn path_loss_db(distance: f64, frequency: f64, base_height: f64, ue_height: f64) -> f64 {
    let log_f = frequency.log10();
    let log_hb = base_height.log10();
    let mobile_correction = (1.1 * log_f - 0.7) * ue_height - (1.56 * log_f - 0.8);
    let d_km = distance.max(MIN_DISTANCE_M) / 1000.0;

    46.3 + 33.9 * log_f - 13.82 * log_hb - mobile_correction + distance_slope_db(base_height) * d_km.log10()
}

/// Path loss increase per decade of distance, dB.
pub fn distance_slope_db(base_height: f64) -> f64 {
    44.9 - 6.55 * base_height.log10()
}

/// Linear power gain for a total attenuation of `path_loss + shadow` dB.
pub fn linear_gain(path_loss: f64, shadow: f64) -> f64 {
    db_to_linear(-(path_loss + shadow))
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Thermal noise over `bandwidth` Hz for a density of `psd_dbm_per_hz`, mW.
pub fn noise_per_resource_unit(psd_dbm_per_hz: f64, bandwidth: f64) -> f64 {
    db_to_linear(psd_dbm_per_hz + linear_to_db(bandwidth))
}
