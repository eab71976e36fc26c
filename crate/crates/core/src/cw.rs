//! CW ODMR through the closed-form steady state of a five-level NV model.
//!
//! Levels: 1 = ground m_s=0, 2 = ground m_s=±1, 3/4 = the corresponding
//! excited states, 5 = the metastable singlet. Optical pumping drives
//! 1→3 and 2→4 at Γ_p; k_nm are decay rates; the microwave drive couples
//! 1↔2 through the coherence, entering the populations as the saturation
//! term (α_iΩ_R)²γ₂′ / 2(γ₂′² + Δ_i²).
//!
//! Writing Ξ for the steady-state population ratio ρ₂₂/ρ₁₁, the emitted
//! intensity reduces to a Möbius function of that drive term, which is
//! what the hot loops evaluate.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{Accumulator, Ensemble, EnsembleMember};
use crate::error::{Error, Result};
use crate::pulsed::{spectrum_max_slope, Spectrum};
use crate::ramsey::SlopeResult;
use crate::units::{mhz_to_rad_per_us, TAU};

/// Decay rates of the five-level model, all in 1/µs (a cyclic "MHz"
/// equals 1/µs). `k_nm` is the rate from level n to level m.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiveLevelRates {
    pub k31: f64,
    pub k32: f64,
    pub k41: f64,
    pub k42: f64,
    pub k35: f64,
    pub k45: f64,
    pub k51: f64,
    pub k52: f64,
    pub k21: f64,
}

impl FiveLevelRates {
    pub fn k3(&self) -> f64 {
        self.k35 + self.k31 + self.k32
    }

    pub fn k4(&self) -> f64 {
        self.k41 + self.k42 + self.k45
    }

    pub fn k5(&self) -> f64 {
        self.k51 + self.k52
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            ("k31", self.k31),
            ("k32", self.k32),
            ("k41", self.k41),
            ("k42", self.k42),
            ("k35", self.k35),
            ("k45", self.k45),
            ("k51", self.k51),
            ("k52", self.k52),
            ("k21", self.k21),
        ];
        for (name, v) in all {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidRates(format!("{name} must be >= 0, got {v}")));
            }
        }
        if !(self.k3() > 0.0) {
            return Err(Error::InvalidRates("K3 = k35 + k31 + k32 must be > 0".into()));
        }
        if !(self.k4() > 0.0) {
            return Err(Error::InvalidRates("K4 = k41 + k42 + k45 must be > 0".into()));
        }
        if !(self.k5() > 0.0) {
            return Err(Error::InvalidRates("K5 = k51 + k52 must be > 0".into()));
        }
        Ok(())
    }
}

/// On-disk rates file: the nine rates plus a provenance note.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RatesFile {
    provenance: String,
    k31_mhz: f64,
    k32_mhz: f64,
    k41_mhz: f64,
    k42_mhz: f64,
    k35_mhz: f64,
    k45_mhz: f64,
    k51_mhz: f64,
    k52_mhz: f64,
    k21_mhz: f64,
}

/// Load and validate a rates file; returns the rates and provenance text.
pub fn load_rates(path: impl AsRef<Path>) -> Result<(FiveLevelRates, String)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::FileRead {
        path: path.to_path_buf(),
        source,
    })?;
    let file: RatesFile = serde_json::from_str(&text).map_err(|source| Error::RatesParse {
        path: path.to_path_buf(),
        source,
    })?;
    let rates = FiveLevelRates {
        k31: file.k31_mhz,
        k32: file.k32_mhz,
        k41: file.k41_mhz,
        k42: file.k42_mhz,
        k35: file.k35_mhz,
        k45: file.k45_mhz,
        k51: file.k51_mhz,
        k52: file.k52_mhz,
        k21: file.k21_mhz,
    };
    rates.validate()?;
    Ok((rates, file.provenance))
}

/// How a configured Γ_p value in "MHz" maps to the internal rate:
/// `Angular` multiplies by 2π (a quoted 2π·1 MHz pumping rate), `Cyclic`
/// uses it as 1/µs directly.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GammaPUnits {
    #[default]
    Angular,
    Cyclic,
}

impl GammaPUnits {
    pub fn to_rate_per_us(self, gamma_p_mhz: f64) -> f64 {
        match self {
            GammaPUnits::Angular => TAU * gamma_p_mhz,
            GammaPUnits::Cyclic => gamma_p_mhz,
        }
    }
}

/// CW drive and normalization settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CwParams {
    /// Optical pumping rate Γ_p (1/µs), ≥ 0.
    pub gamma_p_per_us: f64,
    /// Intended Rabi frequency Ω_R/2π (MHz), ≥ 0.
    pub omega_r_mhz: f64,
    /// Inhomogeneous dephasing time T₂* (µs); `None` means no pure
    /// dephasing (2π/T₂* = 0).
    pub t2_star_us: Option<f64>,
    pub rates: FiveLevelRates,
    /// Far-off-resonance reference offset (MHz).
    pub off_resonance_offset_mhz: f64,
    /// Proxy for the asymptotic strong-drive limit (MHz).
    pub asymptotic_omega_r_mhz: f64,
}

impl CwParams {
    pub fn validate(&self) -> Result<()> {
        self.rates.validate()?;
        if !(self.gamma_p_per_us >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "gamma_p_per_us must be >= 0, got {}",
                self.gamma_p_per_us
            )));
        }
        if !(self.omega_r_mhz >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "omega_r_mhz must be >= 0, got {}",
                self.omega_r_mhz
            )));
        }
        if let Some(t2) = self.t2_star_us {
            if !(t2 > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "t2_star_us must be > 0, got {t2}"
                )));
            }
        }
        if !(self.asymptotic_omega_r_mhz > 0.0) || !(self.off_resonance_offset_mhz > 0.0) {
            return Err(Error::InvalidArgument(
                "normalization references must be > 0".into(),
            ));
        }
        Ok(())
    }

    /// Spin dephasing rate γ₂ = 2π/T₂* + k₂₁/2.
    pub fn gamma2(&self) -> f64 {
        let dephasing = self.t2_star_us.map_or(0.0, |t2| TAU / t2);
        dephasing + 0.5 * self.rates.k21
    }

    /// Optical dephasing rate γ₂′ = γ₂ + Γ_p/2.
    pub fn gamma2_prime(&self) -> f64 {
        self.gamma2() + 0.5 * self.gamma_p_per_us
    }
}

/// Closed-form machinery for one parameter set: the steady-state intensity
/// as a Möbius function of the drive saturation term.
#[derive(Clone, Copy, Debug)]
pub(crate) struct CwEvaluator {
    gamma2p: f64,
    g2sq: f64,
    /// I = (r0 + r1·d)/(s0 + s1·d) where d = W/(γ₂′² + Δ²), W = (αΩ)²γ₂′/2
    r0: f64,
    r1: f64,
    s0: f64,
    s1: f64,
}

impl CwEvaluator {
    pub(crate) fn new(params: &CwParams) -> Self {
        let r = &params.rates;
        let gp = params.gamma_p_per_us;
        let (k3, k4, k5) = (r.k3(), r.k4(), r.k5());
        // Ξ = (a + d)/(b + d)
        let a = 0.5 * r.k21 + gp * (r.k32 * k5 + r.k52 * r.k35) / (k3 * k5);
        let b = gp + 0.5 * r.k21 - gp * (r.k42 * k5 + r.k52 * r.k45) / (k4 * k5);
        // ρ₁₁ = 1/(p + qΞ), ρ₂₂ = Ξ·ρ₁₁
        let p = 1.0 + gp / k3 + r.k35 * gp / (k3 * k5);
        let q = 1.0 + gp / k4 + r.k45 * gp / (k4 * k5);
        // I = β₃(Γ_p/K₃)ρ₁₁ + β₄(Γ_p/K₄)ρ₂₂
        let beta3 = (r.k31 + r.k32) / k3;
        let beta4 = (r.k41 + r.k42) / k4;
        let e3 = beta3 * gp / k3;
        let e4 = beta4 * gp / k4;
        let gamma2p = params.gamma2_prime();
        CwEvaluator {
            gamma2p,
            g2sq: gamma2p * gamma2p,
            r0: e3 * b + e4 * a,
            r1: e3 + e4,
            s0: p * b + q * a,
            s1: p + q,
        }
    }

    /// Steady-state intensity at detuning Δ (rad/µs) and effective Rabi
    /// frequency αΩ (rad/µs).
    #[inline]
    pub(crate) fn intensity(&self, delta_rad_per_us: f64, rabi_eff_rad_per_us: f64) -> f64 {
        if self.s0 == 0.0 && self.s1 == 0.0 {
            return 0.0;
        }
        let w = 0.5 * rabi_eff_rad_per_us * rabi_eff_rad_per_us * self.gamma2p;
        let d = w / (self.g2sq + delta_rad_per_us * delta_rad_per_us);
        (self.r0 + self.r1 * d) / (self.s0 + self.s1 * d)
    }

    /// Steady-state populations (ρ₁₁, ρ₂₂), used by the bounds checks.
    pub(crate) fn ground_populations(
        &self,
        params: &CwParams,
        delta_rad_per_us: f64,
        rabi_eff_rad_per_us: f64,
    ) -> (f64, f64) {
        let r = &params.rates;
        let gp = params.gamma_p_per_us;
        let (k3, k4, k5) = (r.k3(), r.k4(), r.k5());
        let a = 0.5 * r.k21 + gp * (r.k32 * k5 + r.k52 * r.k35) / (k3 * k5);
        let b = gp + 0.5 * r.k21 - gp * (r.k42 * k5 + r.k52 * r.k45) / (k4 * k5);
        let w = 0.5 * rabi_eff_rad_per_us * rabi_eff_rad_per_us * self.gamma2p;
        let d = w / (self.g2sq + delta_rad_per_us * delta_rad_per_us);
        let xi = (a + d) / (b + d);
        let p = 1.0 + gp / k3 + r.k35 * gp / (k3 * k5);
        let q = 1.0 + gp / k4 + r.k45 * gp / (k4 * k5);
        let rho11 = 1.0 / (p + q * xi);
        (rho11, xi * rho11)
    }
}

/// Steady-state ground populations (ρ₁₁ˢˢ, ρ₂₂ˢˢ) for one member.
pub fn cw_ground_populations(
    member: &EnsembleMember,
    params: &CwParams,
    f_mw_offset_mhz: f64,
) -> (f64, f64) {
    let eval = CwEvaluator::new(params);
    let delta = mhz_to_rad_per_us(member.delta_mhz - f_mw_offset_mhz);
    let rabi = member.alpha * mhz_to_rad_per_us(params.omega_r_mhz);
    eval.ground_populations(params, delta, rabi)
}

/// Steady-state fluorescence intensity I_CW for one member at the given
/// drive offset. Γ_p = 0 yields zero intensity, not an error.
pub fn cw_steady_state_intensity(
    member: &EnsembleMember,
    params: &CwParams,
    f_mw_offset_mhz: f64,
) -> f64 {
    if params.gamma_p_per_us == 0.0 {
        return 0.0;
    }
    let eval = CwEvaluator::new(params);
    let delta = mhz_to_rad_per_us(member.delta_mhz - f_mw_offset_mhz);
    let rabi = member.alpha * mhz_to_rad_per_us(params.omega_r_mhz);
    eval.intensity(delta, rabi)
}

/// Per-member normalization references: the member's own far-off-resonance
/// intensity and its on-resonance intensity in the strong-drive limit.
#[derive(Clone, Copy, Debug)]
struct MemberRefs {
    i_off: f64,
    inv_denom: f64,
}

fn member_refs(eval: &CwEvaluator, params: &CwParams, member: &EnsembleMember) -> Result<MemberRefs> {
    let delta_off = mhz_to_rad_per_us(member.delta_mhz - params.off_resonance_offset_mhz);
    let i_off = eval.intensity(delta_off, member.alpha * mhz_to_rad_per_us(params.omega_r_mhz));
    let i_asym = eval.intensity(
        0.0,
        member.alpha * mhz_to_rad_per_us(params.asymptotic_omega_r_mhz),
    );
    let denom = i_off - i_asym;
    if !(denom.abs() > f64::MIN_POSITIVE) || !denom.is_finite() {
        return Err(Error::DegenerateContrast(format!(
            "off-resonance and asymptotic intensities coincide (denominator {denom}); \
             is gamma_p zero?"
        )));
    }
    Ok(MemberRefs {
        i_off,
        inv_denom: 1.0 / denom,
    })
}

/// Normalized CW contrast C_i ∈ [0, 1] for one member.
pub fn cw_normalized_contrast(
    member: &EnsembleMember,
    params: &CwParams,
    f_mw_offset_mhz: f64,
) -> Result<f64> {
    params.validate()?;
    let eval = CwEvaluator::new(params);
    let refs = member_refs(&eval, params, member)?;
    let delta = mhz_to_rad_per_us(member.delta_mhz - f_mw_offset_mhz);
    let i = eval.intensity(delta, member.alpha * mhz_to_rad_per_us(params.omega_r_mhz));
    Ok(((refs.i_off - i) * refs.inv_denom).clamp(0.0, 1.0))
}

/// Ensemble-averaged CW spectrum over `f_grid_mhz`.
pub fn cw_spectrum(ensemble: &Ensemble, params: &CwParams, f_grid_mhz: &[f64]) -> Result<Spectrum> {
    params.validate()?;
    if f_grid_mhz.is_empty() {
        return Err(Error::InvalidArgument("f grid is empty".into()));
    }
    if f_grid_mhz.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "f grid must be strictly increasing".into(),
        ));
    }
    if ensemble.is_empty() {
        return Err(Error::InvalidArgument("ensemble has no members".into()));
    }
    let eval = CwEvaluator::new(params);
    let omega_r = mhz_to_rad_per_us(params.omega_r_mhz);
    let mut acc = vec![Accumulator::new(); f_grid_mhz.len()];
    for m in ensemble.members() {
        let refs = member_refs(&eval, params, m)?;
        let rabi = m.alpha * omega_r;
        for (a, &f) in acc.iter_mut().zip(f_grid_mhz) {
            let delta = mhz_to_rad_per_us(m.delta_mhz - f);
            let c = ((refs.i_off - eval.intensity(delta, rabi)) * refs.inv_denom).clamp(0.0, 1.0);
            a.add(m.weight * c);
        }
    }
    Spectrum::new(f_grid_mhz.to_vec(), acc.iter().map(Accumulator::total).collect())
}

/// Exhaustive 2-D (Ω_R, Γ_p) scan for the best CW spectrum slope. Ties
/// break toward smaller Ω_R, then smaller Γ_p. Grid values are cyclic MHz;
/// `gamma_p_units` fixes their conversion to pumping rates.
pub fn optimize_cw(
    ensemble: &Ensemble,
    omega_r_grid_mhz: &[f64],
    gamma_p_grid_mhz: &[f64],
    gamma_p_units: GammaPUnits,
    f_grid_mhz: &[f64],
    base: &CwParams,
) -> Result<SlopeResult> {
    if omega_r_grid_mhz.is_empty() || gamma_p_grid_mhz.is_empty() || f_grid_mhz.is_empty() {
        return Err(Error::InvalidArgument(
            "omega_r, gamma_p and f grids must be nonempty".into(),
        ));
    }
    let combos: Vec<(f64, f64)> = omega_r_grid_mhz
        .iter()
        .flat_map(|&w| gamma_p_grid_mhz.iter().map(move |&g| (w, g)))
        .collect();
    let slopes: Vec<SlopeResult> = combos
        .par_iter()
        .map(|&(omega_r, gamma_p_mhz)| {
            let params = CwParams {
                gamma_p_per_us: gamma_p_units.to_rate_per_us(gamma_p_mhz),
                omega_r_mhz: omega_r,
                ..*base
            };
            let spectrum = cw_spectrum(ensemble, &params, f_grid_mhz)?;
            let mut aux = BTreeMap::new();
            aux.insert("omega_r_mhz".into(), omega_r);
            aux.insert("gamma_p_mhz".into(), gamma_p_mhz);
            aux.insert("gamma_p_per_us".into(), params.gamma_p_per_us);
            spectrum_max_slope(&spectrum, aux)
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::build_ensemble;
    use approx::assert_abs_diff_eq;

    pub(crate) fn test_rates() -> FiveLevelRates {
        FiveLevelRates {
            k31: 65.9,
            k32: 0.0,
            k41: 0.0,
            k42: 65.9,
            k35: 7.9,
            k45: 53.3,
            k51: 0.98,
            k52: 0.73,
            k21: 0.000167,
        }
    }

    fn params(gamma_p_mhz_angular: f64, omega_r: f64) -> CwParams {
        CwParams {
            gamma_p_per_us: TAU * gamma_p_mhz_angular,
            omega_r_mhz: omega_r,
            t2_star_us: None,
            rates: test_rates(),
            off_resonance_offset_mhz: 50.0,
            asymptotic_omega_r_mhz: 200.0,
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
    fn no_pump_means_no_fluorescence() {
        let mut p = params(1.0, 2.0);
        p.gamma_p_per_us = 0.0;
        assert_eq!(cw_steady_state_intensity(&member(0.0, 1.0), &p, 0.0), 0.0);
    }

    #[test]
    fn no_drive_matches_far_off_resonance() {
        let p = params(1.0, 2.0);
        let mut p0 = p;
        p0.omega_r_mhz = 0.0;
        let baseline = cw_steady_state_intensity(&member(0.0, 1.0), &p0, 0.0);
        let far = cw_steady_state_intensity(&member(0.0, 1.0), &p, 1e6);
        assert_abs_diff_eq!(far, baseline, epsilon = 1e-9 * baseline.abs());
    }

    #[test]
    fn even_in_detuning() {
        let p = params(1.0, 2.0);
        let m = member(0.0, 1.0);
        for f in [0.3, 1.7, 4.2] {
            let a = cw_steady_state_intensity(&m, &p, f);
            let b = cw_steady_state_intensity(&m, &p, -f);
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn normalization_endpoints() {
        let p = params(1.0, 2.0);
        let m = member(0.0, 1.0);
        // far off-resonance -> 0 (at the reference point itself, exactly)
        let off = cw_normalized_contrast(&m, &p, p.off_resonance_offset_mhz).unwrap();
        assert_abs_diff_eq!(off, 0.0, epsilon = 1e-12);
        // on-resonance at the asymptotic drive -> 1
        let mut strong = p;
        strong.omega_r_mhz = p.asymptotic_omega_r_mhz;
        let on = cw_normalized_contrast(&m, &strong, 0.0).unwrap();
        assert_abs_diff_eq!(on, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_normalization_is_an_error() {
        let mut p = params(1.0, 2.0);
        p.gamma_p_per_us = 0.0;
        assert!(matches!(
            cw_normalized_contrast(&member(0.0, 1.0), &p, 0.0),
            Err(Error::DegenerateContrast(_))
        ));
    }

    #[test]
    fn half_width_point_in_weak_drive_limit() {
        // at Δ = γ₂′ the drive Lorentzian halves; so must the contrast,
        // within a few percent at weak drive
        let p = params(0.2, 0.05);
        let m = member(0.0, 1.0);
        let g2p_mhz = p.gamma2_prime() / TAU;
        let c0 = cw_normalized_contrast(&m, &p, 0.0).unwrap();
        let ch = cw_normalized_contrast(&m, &p, g2p_mhz).unwrap();
        assert!((ch / c0 - 0.5).abs() < 0.05, "ratio {} vs 0.5", ch / c0);
    }

    #[test]
    fn monotone_saturation_on_resonance() {
        let m = member(0.0, 1.0);
        let mut last = 0.0;
        for omega in [0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 50.0] {
            let c = cw_normalized_contrast(&m, &params(1.0, omega), 0.0).unwrap();
            assert!(c >= last - 1e-12, "contrast fell from {last} to {c}");
            last = c;
        }
    }

    #[test]
    fn population_bounds() {
        let p = params(3.0, 4.0);
        let eval = CwEvaluator::new(&p);
        for delta in [0.0, 1.0, 10.0] {
            for rabi in [0.0, 5.0, 60.0] {
                let (r11, r22) = eval.ground_populations(&p, delta, rabi);
                assert!(r11 >= 0.0 && r11 <= 1.0);
                assert!(r22 >= 0.0 && r22 <= 1.0);
                assert!(r11 + r22 <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn two_member_spectrum_shows_two_dips() {
        let f = write_rows();
        let e = crate::ensemble::load_measured_distribution(f.path(), 0.0, 1).unwrap();
        let p = params(0.3, 0.3);
        let grid: Vec<f64> = (0..801).map(|k| -2.0 + k as f64 * 0.005).collect();
        let s = cw_spectrum(&e, &p, &grid).unwrap();
        let (maxima, _) = peaks(&s.contrast);
        // dips of the two shifted members at about ±1 MHz
        assert!(maxima.len() >= 2, "expected two resolvable dips");
        let f_at: Vec<f64> = maxima.iter().map(|&k| grid[k]).collect();
        assert!(f_at.iter().any(|&x| (x + 1.0).abs() < 0.1));
        assert!(f_at.iter().any(|&x| (x - 1.0).abs() < 0.1));
    }

    fn write_rows() -> tempfile::NamedTempFile {
        use std::io::Write;
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(b"-1.0,1\n1.0,1\n").unwrap();
        f
    }

    fn peaks(c: &[f64]) -> (Vec<usize>, Vec<usize>) {
        let mut maxima = Vec::new();
        let mut minima = Vec::new();
        for k in 1..c.len() - 1 {
            if c[k] > c[k - 1] && c[k] > c[k + 1] {
                maxima.push(k);
            }
            if c[k] < c[k - 1] && c[k] < c[k + 1] {
                minima.push(k);
            }
        }
        (maxima, minima)
    }

    #[test]
    fn degenerate_1x1_scan_returns_that_cell() {
        let e = build_ensemble(0.2, 0.0, 5, 1).unwrap();
        let grid: Vec<f64> = (0..401).map(|k| -4.0 + k as f64 * 0.02).collect();
        let base = params(1.0, 2.0);
        let best = optimize_cw(&e, &[2.0], &[1.0], GammaPUnits::Angular, &grid, &base).unwrap();
        let direct =
            spectrum_max_slope(&cw_spectrum(&e, &base, &grid).unwrap(), BTreeMap::new()).unwrap();
        assert_abs_diff_eq!(best.slope_per_mhz, direct.slope_per_mhz, epsilon = 1e-15);
        assert_eq!(best.auxiliary["omega_r_mhz"], 2.0);
        assert_eq!(best.auxiliary["gamma_p_mhz"], 1.0);
    }

    #[test]
    fn power_broadening_turns_over() {
        // past the optimum, more microwave power lowers the slope
        let e = build_ensemble(0.0, 0.0, 1, 1).unwrap();
        let grid: Vec<f64> = (0..1601).map(|k| -8.0 + k as f64 * 0.01).collect();
        let base = params(1.0, 2.0);
        let slope_at = |omega: f64| {
            let p = CwParams {
                omega_r_mhz: omega,
                ..base
            };
            spectrum_max_slope(&cw_spectrum(&e, &p, &grid).unwrap(), BTreeMap::new())
                .unwrap()
                .slope_per_mhz
        };
        let s2 = slope_at(2.0);
        let s20 = slope_at(20.0);
        assert!(
            s20 < s2,
            "slope should fall with power broadening: {s20} !< {s2}"
        );
    }
}
