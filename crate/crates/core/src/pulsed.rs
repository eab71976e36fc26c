//! π-pulse ODMR: one fixed-duration pulse per drive frequency, ensemble
//! spectra and the maximum spectrum slope.
//!
//! The pulse duration T_p = π/Ω_R is fixed by the intended on-resonance
//! Rabi frequency; members with α_i < 1 see a degraded pulse rather than
//! a retuned one.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{Accumulator, Ensemble, EnsembleMember};
use crate::error::{Error, Result};
use crate::ramsey::SlopeResult;
use crate::spin::{density_propagator, pure_propagator, DephasingForm, DriveSettings};
use crate::units::mhz_to_rad_per_us;

/// π-pulse ODMR drive settings and frequency grid (external units).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulsedOdmrParams {
    /// Intended Rabi frequency Ω_R/2π (MHz), > 0.
    pub omega_r_mhz: f64,
    /// Drive-frequency offsets from f₀ (MHz), strictly increasing.
    pub f_grid_mhz: Vec<f64>,
    /// Pure dephasing rate Γ_pure (1/µs), ≥ 0.
    pub gamma_pure_per_us: f64,
    pub dephasing_form: DephasingForm,
}

impl PulsedOdmrParams {
    fn validate(&self) -> Result<()> {
        if !(self.omega_r_mhz > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "omega_r_mhz must be > 0, got {}",
                self.omega_r_mhz
            )));
        }
        if self.f_grid_mhz.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "f grid must be strictly increasing".into(),
            ));
        }
        if !(self.gamma_pure_per_us >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "gamma_pure_per_us must be >= 0, got {}",
                self.gamma_pure_per_us
            )));
        }
        Ok(())
    }

    /// π-pulse duration T_p = π/Ω_R from the intended Rabi frequency.
    pub fn pulse_duration_us(&self) -> f64 {
        1.0 / (2.0 * self.omega_r_mhz)
    }
}

/// Contrast spectrum over drive-frequency offsets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub f_offset_mhz: Vec<f64>,
    pub contrast: Vec<f64>,
}

impl Spectrum {
    pub fn new(f_offset_mhz: Vec<f64>, contrast: Vec<f64>) -> Result<Self> {
        if f_offset_mhz.len() != contrast.len() {
            return Err(Error::InvalidArgument(format!(
                "spectrum length mismatch: {} frequencies vs {} contrast",
                f_offset_mhz.len(),
                contrast.len()
            )));
        }
        Ok(Spectrum {
            f_offset_mhz,
            contrast,
        })
    }

    pub fn len(&self) -> usize {
        self.f_offset_mhz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f_offset_mhz.is_empty()
    }
}

/// Contrast of one member after the fixed-duration π pulse at drive offset
/// `f_mw_offset_mhz`.
pub fn pi_pulse_member_contrast(
    member: &EnsembleMember,
    params: &PulsedOdmrParams,
    f_mw_offset_mhz: f64,
) -> f64 {
    let delta = mhz_to_rad_per_us(member.delta_mhz - f_mw_offset_mhz);
    let rabi = member.alpha * mhz_to_rad_per_us(params.omega_r_mhz);
    let t_p = params.pulse_duration_us();
    if params.gamma_pure_per_us > 0.0 {
        let drive = DriveSettings {
            delta_total: delta,
            rabi_effective: rabi,
            gamma_pure: params.gamma_pure_per_us,
        };
        let s = density_propagator(&drive, t_p, params.dephasing_form);
        s[(3, 0)].re
    } else {
        pure_propagator(delta, rabi, t_p).u10.norm_sqr()
    }
}

/// Ensemble-averaged π-pulse spectrum over `params.f_grid_mhz`.
pub fn pulsed_spectrum(ensemble: &Ensemble, params: &PulsedOdmrParams) -> Result<Spectrum> {
    params.validate()?;
    if params.f_grid_mhz.is_empty() {
        return Err(Error::InvalidArgument("f grid is empty".into()));
    }
    if ensemble.is_empty() {
        return Err(Error::InvalidArgument("ensemble has no members".into()));
    }
    let mut acc = vec![Accumulator::new(); params.f_grid_mhz.len()];
    for m in ensemble.members() {
        for (a, &f) in acc.iter_mut().zip(&params.f_grid_mhz) {
            a.add(m.weight * pi_pulse_member_contrast(m, params, f));
        }
    }
    Spectrum::new(
        params.f_grid_mhz.clone(),
        acc.iter().map(Accumulator::total).collect(),
    )
}

/// Max |dC/df| of a spectrum by central differences. The result's
/// `chosen_detuning_mhz` is the frequency offset where the slope peaks.
pub fn pulsed_max_slope(spectrum: &Spectrum) -> Result<SlopeResult> {
    spectrum_max_slope(spectrum, BTreeMap::new())
}

pub(crate) fn spectrum_max_slope(
    spectrum: &Spectrum,
    mut auxiliary: BTreeMap<String, f64>,
) -> Result<SlopeResult> {
    if spectrum.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "spectrum needs >= 3 points for central differences, got {}",
            spectrum.len()
        )));
    }
    let f = &spectrum.f_offset_mhz;
    let c = &spectrum.contrast;
    let mut best = (-1.0f64, f[1]);
    for k in 1..f.len() - 1 {
        let d = ((c[k + 1] - c[k - 1]) / (f[k + 1] - f[k - 1])).abs();
        if d > best.0 {
            best = (d, f[k]);
        }
    }
    auxiliary.insert("f_at_max_slope_mhz".into(), best.1);
    Ok(SlopeResult {
        slope_per_mhz: best.0,
        chosen_detuning_mhz: best.1,
        tau_opt_us: 0.0,
        q_max: 0.0,
        auxiliary,
    })
}

/// Exhaustive Ω_R scan for the best π-pulse spectrum slope. Ties break
/// toward the smaller Rabi frequency.
pub fn optimize_pulsed(
    ensemble: &Ensemble,
    omega_r_grid_mhz: &[f64],
    f_grid_mhz: &[f64],
    gamma_pure_per_us: f64,
    dephasing_form: DephasingForm,
) -> Result<SlopeResult> {
    if omega_r_grid_mhz.is_empty() || f_grid_mhz.is_empty() {
        return Err(Error::InvalidArgument(
            "omega_r and f grids must be nonempty".into(),
        ));
    }
    let slopes: Vec<SlopeResult> = omega_r_grid_mhz
        .par_iter()
        .map(|&omega_r| {
            let params = PulsedOdmrParams {
                omega_r_mhz: omega_r,
                f_grid_mhz: f_grid_mhz.to_vec(),
                gamma_pure_per_us,
                dephasing_form,
            };
            let spectrum = pulsed_spectrum(ensemble, &params)?;
            let mut aux = BTreeMap::new();
            aux.insert("omega_r_mhz".into(), omega_r);
            let mut result = spectrum_max_slope(&spectrum, aux)?;
            result.tau_opt_us = params.pulse_duration_us();
            Ok(result)
        })
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (k, s) in slopes.iter().enumerate().skip(1) {
        if s.slope_per_mhz > slopes[best].slope_per_mhz {
            best = k;
        }
    }
    Ok(slopes.into_iter().nth(best).expect("index in range"))
}

/// Evenly spaced symmetric frequency grid over ±f_span with `points`
/// samples.
pub fn f_grid(f_span_mhz: f64, points: usize) -> Result<Vec<f64>> {
    if !(f_span_mhz > 0.0) || points < 3 {
        return Err(Error::InvalidArgument(
            "f grid needs f_span > 0 and >= 3 points".into(),
        ));
    }
    let n = points as f64 - 1.0;
    Ok((0..points)
        .map(|k| {
            if 2 * k == points - 1 {
                0.0
            } else {
                -f_span_mhz + 2.0 * f_span_mhz * (k as f64) / n
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::build_ensemble;
    use approx::assert_abs_diff_eq;

    fn params(omega_r: f64, grid: Vec<f64>) -> PulsedOdmrParams {
        PulsedOdmrParams {
            omega_r_mhz: omega_r,
            f_grid_mhz: grid,
            gamma_pure_per_us: 0.0,
            dephasing_form: DephasingForm::TracePreserving,
        }
    }

    fn member(delta: f64, alpha: f64) -> EnsembleMember {
        EnsembleMember {
            delta_mhz: delta,
            alpha,
            weight: 1.0,
        }
    }

    #[test]
    fn resonant_pi_pulse_reaches_one() {
        let c = pi_pulse_member_contrast(&member(0.0, 1.0), &params(2.0, vec![0.0]), 0.0);
        assert_abs_diff_eq!(c, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn sqrt3_offset_completes_full_rotation() {
        // Ω_gen = 2Ω_R turns the fixed T_p into a 2π rotation
        let omega_r = 2.0;
        let offset = 3.0f64.sqrt() * omega_r;
        let c = pi_pulse_member_contrast(&member(0.0, 1.0), &params(omega_r, vec![0.0]), offset);
        assert_abs_diff_eq!(c, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn matches_rabi_formula() {
        let p = params(2.0, vec![0.0]);
        let m = member(0.2, 0.7);
        let c = pi_pulse_member_contrast(&m, &p, 1.0);
        let delta = mhz_to_rad_per_us(0.2 - 1.0);
        let rabi = 0.7 * mhz_to_rad_per_us(2.0);
        let gen_sq = delta * delta + rabi * rabi;
        let expected =
            (rabi * rabi / gen_sq) * (0.5 * gen_sq.sqrt() * p.pulse_duration_us()).sin().powi(2);
        assert_abs_diff_eq!(c, expected, epsilon = 1e-12);
    }

    #[test]
    fn symmetric_ensemble_gives_mirror_spectrum() {
        let e = build_ensemble(0.4, 0.0, 9, 1).unwrap();
        let grid = f_grid(4.0, 161).unwrap();
        let s = pulsed_spectrum(&e, &params(2.0, grid)).unwrap();
        let n = s.len();
        for k in 0..n {
            assert_abs_diff_eq!(s.contrast[k], s.contrast[n - 1 - k], epsilon = 1e-10);
        }
    }

    #[test]
    fn ensemble_contrast_bounded_by_best_member() {
        let e = build_ensemble(0.4, 0.3, 9, 5).unwrap();
        let grid = f_grid(4.0, 81).unwrap();
        let p = params(2.0, grid.clone());
        let s = pulsed_spectrum(&e, &p).unwrap();
        for (k, &f) in grid.iter().enumerate() {
            let best = e
                .members()
                .iter()
                .map(|m| pi_pulse_member_contrast(m, &p, f))
                .fold(f64::NEG_INFINITY, f64::max);
            assert!(s.contrast[k] <= best + 1e-12);
        }
    }

    #[test]
    fn linear_ramp_slope() {
        let s = Spectrum::new(vec![-1.0, 0.0, 1.0], vec![0.0, 0.25, 0.5]).unwrap();
        let r = pulsed_max_slope(&s).unwrap();
        assert_abs_diff_eq!(r.slope_per_mhz, 0.25, epsilon = 1e-15);
    }

    #[test]
    fn short_spectrum_rejected() {
        let s = Spectrum::new(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        assert!(pulsed_max_slope(&s).is_err());
    }

    #[test]
    fn two_point_omega_scan_picks_precomputed_argmax() {
        let e = build_ensemble(0.2, 0.0, 9, 1).unwrap();
        let grid = f_grid(6.0, 401).unwrap();
        let omegas = [1.0, 3.0];
        let best =
            optimize_pulsed(&e, &omegas, &grid, 0.0, DephasingForm::TracePreserving).unwrap();
        let singles: Vec<f64> = omegas
            .iter()
            .map(|&w| {
                pulsed_max_slope(&pulsed_spectrum(&e, &params(w, grid.clone())).unwrap())
                    .unwrap()
                    .slope_per_mhz
            })
            .collect();
        let expect = if singles[0] >= singles[1] {
            (omegas[0], singles[0])
        } else {
            (omegas[1], singles[1])
        };
        assert_eq!(best.auxiliary["omega_r_mhz"], expect.0);
        assert_abs_diff_eq!(best.slope_per_mhz, expect.1, epsilon = 1e-15);
    }

    #[test]
    fn scale_covariance_of_single_spin() {
        // (Ω_R, Δ) -> (kΩ_R, kΔ) leaves the fixed-area pulse contrast alone
        let m = member(0.0, 1.0);
        for k in [2.0, 5.0] {
            let a = pi_pulse_member_contrast(&m, &params(1.5, vec![0.0]), 0.9);
            let b = pi_pulse_member_contrast(&m, &params(1.5 * k, vec![0.0]), 0.9 * k);
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }
}
