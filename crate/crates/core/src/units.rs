//! Unit conventions.
//!
//! All internal math runs on angular frequencies in rad/µs and times in µs.
//! Every external surface (config files, CSV, CLI flags) speaks cyclic
//! frequency in MHz and time in µs; the conversion happens here and only
//! here.

pub use std::f64::consts::TAU;

/// Electron gyromagnetic ratio, 28 MHz/mT expressed per microtesla.
pub const GAMMA_E_MHZ_PER_UT: f64 = 0.028;

/// Cyclic MHz -> angular rad/µs.
#[inline]
pub fn mhz_to_rad_per_us(f_mhz: f64) -> f64 {
    TAU * f_mhz
}

/// Angular rad/µs -> cyclic MHz.
#[inline]
pub fn rad_per_us_to_mhz(omega: f64) -> f64 {
    omega / TAU
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let f = 3.7;
        assert!((rad_per_us_to_mhz(mhz_to_rad_per_us(f)) - f).abs() < 1e-15);
    }

    #[test]
    fn gamma_e_matches_mhz_per_mt() {
        // 28 MHz/mT == 0.028 MHz/µT
        assert_eq!(GAMMA_E_MHZ_PER_UT * 1000.0, 28.0);
    }
}
