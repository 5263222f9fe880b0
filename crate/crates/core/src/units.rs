//! Unit conversions shared by the radio model and energy accounting.

/// Power level treated as "no transmission". It costs exactly zero energy.
pub const OFF_LEVEL_DBM: f64 = -100.0;

/// Energy is tracked in integer micro-(mW·frame) so that partial sums of
/// action costs compare exactly.
pub const ENERGY_SCALE: f64 = 1e6;

pub fn is_off(level_dbm: f64) -> bool {
    level_dbm <= OFF_LEVEL_DBM
}

/// dBm to milliwatts; the off level maps to exactly 0.
pub fn dbm_to_mw(level_dbm: f64) -> f64 {
    if is_off(level_dbm) {
        0.0
    } else {
        10f64.powf(level_dbm / 10.0)
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn energy_units(mw: f64) -> u64 {
    (mw * ENERGY_SCALE).round().max(0.0) as u64
}

pub fn units_to_mw(units: u64) -> f64 {
    units as f64 / ENERGY_SCALE
}

/// Receiver noise floor in dBm for the given bandwidth and noise figure.
pub fn noise_floor_dbm(noise_psd_dbm_hz: f64, bandwidth_hz: f64, noise_figure_db: f64) -> f64 {
    noise_psd_dbm_hz + 10.0 * bandwidth_hz.log10() + noise_figure_db
}
