//! Acoustic AUV–sensor-node link budget.

use super::MissionConfig;

/// Thorp absorption coefficient in dB/km for a carrier in kHz.
pub fn thorp_db_per_km(f_khz: f64) -> f64 {
    let f2 = f_khz * f_khz;
    0.11 * f2 / (1.0 + f2) + 44.0 * f2 / (4100.0 + f2) + 2.75e-4 * f2 + 0.003
}

/// Signal-to-noise ratio in dB at horizontal range `dist`, floored at 1 m.
pub fn snr_db(dist: f64, cfg: &MissionConfig) -> f64 {
    let d = dist.max(1.0);
    cfg.source_level_db - 20.0 * d.log10() - thorp_db_per_km(cfg.link_freq_khz) * d / 1000.0 - cfg.noise_level_db
}

/// Shannon rate in bits/s, zero beyond the service radius.
pub fn link_rate(dist: f64, cfg: &MissionConfig) -> f64 {
    if !(dist <= cfg.comm_range) {
        return 0.0;
    }
    cfg.bandwidth_hz * (1.0 + 10f64.powf(snr_db(dist, cfg) / 10.0)).log2()
}
