//! Ramsey interferometry: π/2 — free precession — π/2, fringe curves,
//! the fringe figure of merit q, drive-detuning optimization and the
//! B-sweep slope C′ = dC/df_MW.
//!
//! A member's total detuning is Δ_i = 2π·(δ_i − drive_detuning + γ_e·B);
//! the static field shifts the detuning in all three sequence steps. Pulse
//! durations use the intended Ω_R while the evolution itself runs at the
//! member-effective α_i·Ω_R.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{Accumulator, Ensemble, EnsembleMember};
use crate::error::{Error, Result};
use crate::spin::{
    density_propagator, pure_propagator, DephasingForm, DriveSettings,
};
use crate::units::{mhz_to_rad_per_us, GAMMA_E_MHZ_PER_UT};

/// Per-evaluation Ramsey drive settings (external units).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RamseyParams {
    /// Intended Rabi frequency Ω_R/2π (MHz), > 0.
    pub omega_r_mhz: f64,
    /// Drive detuning f_MW − f₀ (MHz).
    pub drive_detuning_mhz: f64,
    /// Pure dephasing rate Γ_pure (1/µs), ≥ 0.
    pub gamma_pure_per_us: f64,
    /// Dissipator convention used when Γ_pure > 0.
    pub dephasing_form: DephasingForm,
    /// Free precession time τ (µs), ≥ 0.
    pub tau_us: f64,
}

impl RamseyParams {
    fn validate(&self) -> Result<()> {
        if !(self.omega_r_mhz > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "omega_r_mhz must be > 0, got {}",
                self.omega_r_mhz
            )));
        }
        if !(self.gamma_pure_per_us >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "gamma_pure_per_us must be >= 0, got {}",
                self.gamma_pure_per_us
            )));
        }
        if !(self.tau_us >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tau_us must be >= 0, got {}",
                self.tau_us
            )));
        }
        Ok(())
    }

    /// π/2-pulse duration T_p = π/(2Ω_R) from the intended Rabi frequency.
    pub fn pulse_duration_us(&self) -> f64 {
        1.0 / (4.0 * self.omega_r_mhz)
    }
}

/// Ensemble contrast sampled over free precession time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FringeCurve {
    pub tau_us: Vec<f64>,
    pub contrast: Vec<f64>,
}

impl FringeCurve {
    pub fn new(tau_us: Vec<f64>, contrast: Vec<f64>) -> Result<Self> {
        if tau_us.len() != contrast.len() {
            return Err(Error::InvalidArgument(format!(
                "fringe curve length mismatch: {} tau vs {} contrast",
                tau_us.len(),
                contrast.len()
            )));
        }
        if tau_us.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "tau grid must be strictly increasing".into(),
            ));
        }
        Ok(FringeCurve { tau_us, contrast })
    }

    pub fn len(&self) -> usize {
        self.tau_us.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau_us.is_empty()
    }
}

/// An optimized scheme slope with the parameters the optimizer settled on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeResult {
    /// Maximum |dC/df_MW| in contrast per MHz (magnitude).
    pub slope_per_mhz: f64,
    /// Drive detuning / frequency offset the slope was found at (MHz).
    pub chosen_detuning_mhz: f64,
    /// Optimal free precession time (µs); pulse duration for ODMR schemes.
    pub tau_opt_us: f64,
    /// Fringe figure of merit at the chosen detuning (0 where inapplicable).
    pub q_max: f64,
    /// Optimizer diagnostics.
    pub auxiliary: BTreeMap<String, f64>,
}

/// Which quantity the drive-detuning scan maximizes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetuningObjective {
    /// Maximize the fringe figure of merit q (keeps at least two genuine
    /// fringes in play).
    #[default]
    QMax,
    /// Maximize the resulting slope C′ directly.
    DirectSlope,
}

/// Full slope-extraction configuration for one Ramsey run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RamseySweep {
    pub omega_r_mhz: f64,
    pub gamma_pure_per_us: f64,
    pub dephasing_form: DephasingForm,
    pub objective: DetuningObjective,
    pub tau_grid_us: Vec<f64>,
    pub b_grid_ut: Vec<f64>,
    pub detuning_grid_mhz: Vec<f64>,
}

/// Precomputed three-step sequence for one member at fixed (detuning, B).
///
/// The two π/2 pulses share one propagator; only the free-precession
/// factors depend on τ, so a whole τ grid costs O(1) per point.
enum SequenceEval {
    Pure {
        /// coefficient of e^{−iΔτ/2} in the final |1⟩ amplitude
        p: Complex64,
        /// coefficient of e^{+iΔτ/2}
        q: Complex64,
        delta: f64,
    },
    Density {
        /// vec(ρ) after the first pulse
        v1: [Complex64; 4],
        /// readout row of the pulse superoperator (row of ρ11)
        row3: [Complex64; 4],
        delta: f64,
        gamma: f64,
        form: DephasingForm,
    },
}

impl SequenceEval {
    fn new(member: &EnsembleMember, params: &RamseyParams, b_ut: f64) -> Self {
        let delta = mhz_to_rad_per_us(
            member.delta_mhz - params.drive_detuning_mhz + GAMMA_E_MHZ_PER_UT * b_ut,
        );
        let rabi = member.alpha * mhz_to_rad_per_us(params.omega_r_mhz);
        let t_p = params.pulse_duration_us();
        if params.gamma_pure_per_us > 0.0 {
            let drive = DriveSettings {
                delta_total: delta,
                rabi_effective: rabi,
                gamma_pure: params.gamma_pure_per_us,
            };
            let s = density_propagator(&drive, t_p, params.dephasing_form);
            SequenceEval::Density {
                v1: [s[(0, 0)], s[(1, 0)], s[(2, 0)], s[(3, 0)]],
                row3: [s[(3, 0)], s[(3, 1)], s[(3, 2)], s[(3, 3)]],
                delta,
                gamma: params.gamma_pure_per_us,
                form: params.dephasing_form,
            }
        } else {
            let u = pure_propagator(delta, rabi, t_p);
            SequenceEval::Pure {
                p: u.u10 * u.u00,
                q: u.u11 * u.u10,
                delta,
            }
        }
    }

    fn contrast_at(&self, tau_us: f64) -> f64 {
        match self {
            SequenceEval::Pure { p, q, delta } => {
                let (sin, cos) = (delta * tau_us).sin_cos();
                let phase = Complex64::new(cos, sin); // e^{+iΔτ}
                p.norm_sqr() + q.norm_sqr() + 2.0 * (p.conj() * q * phase).re
            }
            SequenceEval::Density {
                v1,
                row3,
                delta,
                gamma,
                form,
            } => {
                let (sin, cos) = (delta * tau_us).sin_cos();
                let phase = Complex64::new(cos, -sin); // e^{−iΔτ} on ρ01
                let (g_diag, decay) = match form {
                    DephasingForm::TracePreserving => (1.0, (-gamma * tau_us).exp()),
                    DephasingForm::PaperLiteral => {
                        ((0.75 * gamma * tau_us).exp(), (-1.25 * gamma * tau_us).exp())
                    }
                };
                let g1 = phase * decay;
                (row3[0] * v1[0] * g_diag
                    + row3[1] * v1[1] * g1
                    + row3[2] * v1[2] * g1.conj()
                    + row3[3] * v1[3] * g_diag)
                    .re
            }
        }
    }
}

/// Contrast of one member after the full three-step sequence in a static
/// field `b_ut` (µT). Uses the density path when Γ_pure > 0.
pub fn ramsey_member_contrast(
    member: &EnsembleMember,
    params: &RamseyParams,
    b_ut: f64,
) -> Result<f64> {
    params.validate()?;
    Ok(SequenceEval::new(member, params, b_ut).contrast_at(params.tau_us))
}

fn validate_tau_grid(tau_grid: &[f64]) -> Result<()> {
    if tau_grid.is_empty() {
        return Err(Error::InvalidArgument("tau grid is empty".into()));
    }
    if !(tau_grid[0] >= 0.0) {
        return Err(Error::InvalidArgument(
            "tau grid must be non-negative".into(),
        ));
    }
    if tau_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "tau grid must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Ensemble-averaged contrast over a τ grid at fixed field.
fn ensemble_curve(
    ensemble: &Ensemble,
    params: &RamseyParams,
    b_ut: f64,
    tau_grid: &[f64],
) -> Vec<f64> {
    let mut acc = vec![Accumulator::new(); tau_grid.len()];
    for m in ensemble.members() {
        let eval = SequenceEval::new(m, params, b_ut);
        for (a, &tau) in acc.iter_mut().zip(tau_grid) {
            a.add(m.weight * eval.contrast_at(tau));
        }
    }
    acc.iter().map(Accumulator::total).collect()
}

/// Ensemble fringe curve C(τ) at B = 0. `params.tau_us` is superseded by
/// the grid values.
pub fn fringe_curve(
    ensemble: &Ensemble,
    params: &RamseyParams,
    tau_grid: &[f64],
) -> Result<FringeCurve> {
    params.validate()?;
    validate_tau_grid(tau_grid)?;
    if ensemble.is_empty() {
        return Err(Error::InvalidArgument("ensemble has no members".into()));
    }
    FringeCurve::new(tau_grid.to_vec(), ensemble_curve(ensemble, params, 0.0, tau_grid))
}

/// Interior local maxima and minima with plateaus collapsed to their
/// midpoint sample. Endpoints never count.
fn interior_extrema(c: &[f64]) -> (Vec<usize>, Vec<usize>) {
    let n = c.len();
    let mut maxima = Vec::new();
    let mut minima = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && c[j + 1] == c[i] {
            j += 1;
        }
        if i > 0 && j + 1 < n {
            let v = c[i];
            let mid = (i + j) / 2;
            if c[i - 1] < v && c[j + 1] < v {
                maxima.push(mid);
            } else if c[i - 1] > v && c[j + 1] > v {
                minima.push(mid);
            }
        }
        i = j + 1;
    }
    (maxima, minima)
}

/// Fringe figure of merit: contrast gap between the second-highest
/// interior maximum and the second-lowest interior minimum. Curves with
/// fewer than two of either give q = 0, removing them from contention.
pub fn fringe_quality_q(curve: &FringeCurve) -> Result<f64> {
    if curve.len() < 5 {
        return Err(Error::InvalidArgument(format!(
            "fringe curve needs >= 5 samples for q, got {}",
            curve.len()
        )));
    }
    let (maxima, minima) = interior_extrema(&curve.contrast);
    if maxima.len() < 2 || minima.len() < 2 {
        return Ok(0.0);
    }
    let mut max_vals: Vec<f64> = maxima.iter().map(|&k| curve.contrast[k]).collect();
    let mut min_vals: Vec<f64> = minima.iter().map(|&k| curve.contrast[k]).collect();
    max_vals.sort_by(|a, b| b.total_cmp(a));
    min_vals.sort_by(|a, b| a.total_cmp(b));
    Ok((max_vals[1] - min_vals[1]).max(0.0))
}

/// Exhaustive scan for the drive detuning maximizing q at B = 0.
/// Ties break toward the smaller detuning. Returns (detuning*, q_max).
pub fn optimize_drive_detuning(
    ensemble: &Ensemble,
    omega_r_mhz: f64,
    gamma_pure_per_us: f64,
    dephasing_form: DephasingForm,
    detuning_grid_mhz: &[f64],
    tau_grid_us: &[f64],
) -> Result<(f64, f64)> {
    if detuning_grid_mhz.is_empty() {
        return Err(Error::InvalidArgument("detuning grid is empty".into()));
    }
    validate_tau_grid(tau_grid_us)?;
    let qs: Vec<f64> = detuning_grid_mhz
        .par_iter()
        .map(|&det| {
            let params = RamseyParams {
                omega_r_mhz,
                drive_detuning_mhz: det,
                gamma_pure_per_us,
                dephasing_form,
                tau_us: 0.0,
            };
            fringe_curve(ensemble, &params, tau_grid_us).and_then(|c| fringe_quality_q(&c))
        })
        .collect::<Result<_>>()?;
    let mut best = (detuning_grid_mhz[0], qs[0]);
    for (&det, &q) in detuning_grid_mhz.iter().zip(&qs).skip(1) {
        if q > best.1 {
            best = (det, q);
        }
    }
    Ok(best)
}

fn validate_b_grid(b_grid: &[f64]) -> Result<()> {
    if b_grid.len() < 3 {
        return Err(Error::InvalidArgument(
            "b grid needs >= 3 points for central differences".into(),
        ));
    }
    if b_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "b grid must be strictly increasing".into(),
        ));
    }
    let n = b_grid.len();
    for k in 0..n / 2 {
        if (b_grid[k] + b_grid[n - 1 - k]).abs() > 1e-12 {
            return Err(Error::InvalidArgument(
                "b grid must be symmetric about 0".into(),
            ));
        }
    }
    Ok(())
}

struct BSweepSlope {
    max_dc_db_per_ut: f64,
    tau_opt_us: f64,
    b_at_max_ut: f64,
}

/// Max |dC/dB| over the (τ, B) grid by central differences in B.
fn b_sweep_slope(
    ensemble: &Ensemble,
    params: &RamseyParams,
    tau_grid: &[f64],
    b_grid: &[f64],
) -> BSweepSlope {
    let curves: Vec<Vec<f64>> = b_grid
        .par_iter()
        .map(|&b| ensemble_curve(ensemble, params, b, tau_grid))
        .collect();
    let mut best = BSweepSlope {
        max_dc_db_per_ut: -1.0,
        tau_opt_us: tau_grid[0],
        b_at_max_ut: b_grid[0],
    };
    for (t, &tau) in tau_grid.iter().enumerate() {
        for k in 1..b_grid.len() - 1 {
            let d = ((curves[k + 1][t] - curves[k - 1][t]) / (b_grid[k + 1] - b_grid[k - 1])).abs();
            if d > best.max_dc_db_per_ut {
                best = BSweepSlope {
                    max_dc_db_per_ut: d,
                    tau_opt_us: tau,
                    b_at_max_ut: b_grid[k],
                };
            }
        }
    }
    best
}

/// Full Ramsey slope extraction: optimize the drive detuning at B = 0,
/// sweep the field, convert max |dC/dB| to contrast per MHz via γ_e.
pub fn ramsey_slope(ensemble: &Ensemble, sweep: &RamseySweep) -> Result<SlopeResult> {
    validate_tau_grid(&sweep.tau_grid_us)?;
    validate_b_grid(&sweep.b_grid_ut)?;
    if sweep.detuning_grid_mhz.is_empty() {
        return Err(Error::InvalidArgument("detuning grid is empty".into()));
    }
    if ensemble.is_empty() {
        return Err(Error::InvalidArgument("ensemble has no members".into()));
    }
    let params_at = |det: f64| RamseyParams {
        omega_r_mhz: sweep.omega_r_mhz,
        drive_detuning_mhz: det,
        gamma_pure_per_us: sweep.gamma_pure_per_us,
        dephasing_form: sweep.dephasing_form,
        tau_us: 0.0,
    };

    let (detuning, q_max, slope) = match sweep.objective {
        DetuningObjective::QMax => {
            let (det, q) = optimize_drive_detuning(
                ensemble,
                sweep.omega_r_mhz,
                sweep.gamma_pure_per_us,
                sweep.dephasing_form,
                &sweep.detuning_grid_mhz,
                &sweep.tau_grid_us,
            )?;
            let slope = b_sweep_slope(
                ensemble,
                &params_at(det),
                &sweep.tau_grid_us,
                &sweep.b_grid_ut,
            );
            (det, q, slope)
        }
        DetuningObjective::DirectSlope => {
            let slopes: Vec<BSweepSlope> = sweep
                .detuning_grid_mhz
                .iter()
                .map(|&det| {
                    b_sweep_slope(ensemble, &params_at(det), &sweep.tau_grid_us, &sweep.b_grid_ut)
                })
                .collect();
            let mut best_k = 0;
            for (k, s) in slopes.iter().enumerate().skip(1) {
                if s.max_dc_db_per_ut > slopes[best_k].max_dc_db_per_ut {
                    best_k = k;
                }
            }
            let det = sweep.detuning_grid_mhz[best_k];
            let q = fringe_curve(ensemble, &params_at(det), &sweep.tau_grid_us)
                .and_then(|c| fringe_quality_q(&c))?;
            (det, q, slopes.into_iter().nth(best_k).expect("index in range"))
        }
    };

    let mut auxiliary = BTreeMap::new();
    auxiliary.insert("max_dc_db_per_ut".into(), slope.max_dc_db_per_ut);
    auxiliary.insert("b_at_max_slope_ut".into(), slope.b_at_max_ut);
    auxiliary.insert("n_members".into(), ensemble.len() as f64);
    Ok(SlopeResult {
        slope_per_mhz: slope.max_dc_db_per_ut / GAMMA_E_MHZ_PER_UT,
        chosen_detuning_mhz: detuning,
        tau_opt_us: slope.tau_opt_us,
        q_max,
        auxiliary,
    })
}

/// Evenly spaced τ grid covering [0, tau_max] at the given step.
pub fn tau_grid(tau_max_us: f64, tau_step_us: f64) -> Result<Vec<f64>> {
    if !(tau_max_us > 0.0) || !(tau_step_us > 0.0) {
        return Err(Error::InvalidArgument(
            "tau_max_us and tau_step_us must be > 0".into(),
        ));
    }
    let n = (tau_max_us / tau_step_us).round() as usize;
    Ok((0..=n).map(|k| k as f64 * tau_step_us).collect())
}

/// Symmetric field grid over ±b_max with an odd point count.
pub fn b_grid(b_max_ut: f64, points: usize) -> Result<Vec<f64>> {
    if !(b_max_ut > 0.0) || points < 3 {
        return Err(Error::InvalidArgument(
            "b grid needs b_max > 0 and >= 3 points".into(),
        ));
    }
    let n = points as f64 - 1.0;
    Ok((0..points)
        .map(|k| {
            let x = -b_max_ut + 2.0 * b_max_ut * (k as f64) / n;
            // land exactly on 0 at the midpoint of odd grids
            if (2 * k) == points - 1 { 0.0 } else { x }
        })
        .collect())
}

/// Evenly stepped detuning grid over [min, max].
pub fn detuning_grid(min_mhz: f64, max_mhz: f64, step_mhz: f64) -> Result<Vec<f64>> {
    if !(step_mhz > 0.0) || max_mhz < min_mhz {
        return Err(Error::InvalidArgument(
            "detuning grid needs step > 0 and max >= min".into(),
        ));
    }
    let n = ((max_mhz - min_mhz) / step_mhz).round() as usize;
    Ok((0..=n).map(|k| min_mhz + k as f64 * step_mhz).collect())
}
