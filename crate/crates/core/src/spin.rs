//! Exact evolution of a single driven two-level spin.
//!
//! The rotating-frame Hamiltonian is
//! `H = (Δ/2)σ_z + (Ω_eff/2)σ_x` with `Δ` the total detuning and
//! `Ω_eff = α·Ω_R` the member-effective Rabi frequency, both in rad/µs.
//! Pure states evolve under the closed-form 2×2 propagator; density
//! matrices evolve under the exact 4×4 superoperator exponential so that
//! no integrator tolerance enters downstream results.

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Pure two-level state: amplitudes of |0⟩ and |1⟩.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinState {
    pub amp0: Complex64,
    pub amp1: Complex64,
}

impl SpinState {
    /// The m_s = 0 initial state |0⟩ = (1, 0)ᵀ.
    pub fn ground() -> Self {
        SpinState {
            amp0: Complex64::new(1.0, 0.0),
            amp1: Complex64::new(0.0, 0.0),
        }
    }

    /// The target state |1⟩ = (0, 1)ᵀ.
    pub fn excited() -> Self {
        SpinState {
            amp0: Complex64::new(0.0, 0.0),
            amp1: Complex64::new(1.0, 0.0),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amp0.norm_sqr() + self.amp1.norm_sqr()
    }

    /// Normalized contrast C = |⟨1|ψ⟩|².
    pub fn contrast(&self) -> f64 {
        self.amp1.norm_sqr()
    }
}

/// 2×2 density matrix with ρ_10 = conj(ρ_01) enforced on construction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityMatrix2 {
    pub rho00: Complex64,
    pub rho01: Complex64,
    pub rho10: Complex64,
    pub rho11: Complex64,
}

impl DensityMatrix2 {
    /// Hermitian construction from the independent entries.
    pub fn new(rho00: f64, rho01: Complex64, rho11: f64) -> Self {
        DensityMatrix2 {
            rho00: Complex64::new(rho00, 0.0),
            rho01,
            rho10: rho01.conj(),
            rho11: Complex64::new(rho11, 0.0),
        }
    }

    /// ρ = |ψ⟩⟨ψ| for a pure state.
    pub fn from_pure(state: &SpinState) -> Self {
        DensityMatrix2 {
            rho00: state.amp0 * state.amp0.conj(),
            rho01: state.amp0 * state.amp1.conj(),
            rho10: state.amp1 * state.amp0.conj(),
            rho11: state.amp1 * state.amp1.conj(),
        }
    }

    /// ρ_i = |0⟩⟨0|.
    pub fn ground() -> Self {
        DensityMatrix2::new(1.0, Complex64::new(0.0, 0.0), 0.0)
    }

    pub fn trace(&self) -> f64 {
        self.rho00.re + self.rho11.re
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let tr = self.trace();
        let det = self.rho00.re * self.rho11.re - self.rho01.norm_sqr();
        let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
        (0.5 * (tr - disc), 0.5 * (tr + disc))
    }

    /// Normalized contrast C = ρ_11.
    pub fn contrast(&self) -> f64 {
        self.rho11.re
    }

    fn to_vec(self) -> Vector4<Complex64> {
        Vector4::new(self.rho00, self.rho01, self.rho10, self.rho11)
    }

    /// Rebuild from a vectorized (ρ00, ρ01, ρ10, ρ11), re-hermitizing the
    /// round-off asymmetry the superoperator arithmetic leaves behind.
    fn from_vec(v: &Vector4<Complex64>) -> Self {
        let off = 0.5 * (v[1] + v[2].conj());
        DensityMatrix2 {
            rho00: Complex64::new(v[0].re, 0.0),
            rho01: off,
            rho10: off.conj(),
            rho11: Complex64::new(v[3].re, 0.0),
        }
    }
}

/// Drive parameters seen by one ensemble member, in internal units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriveSettings {
    /// Total detuning Δ (rad/µs).
    pub delta_total: f64,
    /// Effective Rabi frequency α·Ω_R (rad/µs), ≥ 0.
    pub rabi_effective: f64,
    /// Pure dephasing rate Γ_pure (1/µs), ≥ 0.
    pub gamma_pure: f64,
}

impl DriveSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.rabi_effective >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "rabi_effective must be >= 0, got {}",
                self.rabi_effective
            )));
        }
        if !(self.gamma_pure >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "gamma_pure must be >= 0, got {}",
                self.gamma_pure
            )));
        }
        Ok(())
    }
}

/// Which dephasing dissipator the master equation uses.
///
/// `TracePreserving` is the standard form (Γ/2)(σ_z ρ σ_z − ρ), normalized
/// so the coherence lifetime equals T₂* = 1/Γ_pure. `PaperLiteral` keeps
/// the 1/8 anticommutator coefficients, which do not preserve the trace;
/// it exists for side-by-side comparison only.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DephasingForm {
    #[default]
    TracePreserving,
    PaperLiteral,
}

/// Closed-form propagator U = exp(−iHt) for one rectangular drive step.
#[derive(Clone, Copy, Debug)]
pub struct Propagator2 {
    pub u00: Complex64,
    pub u01: Complex64,
    pub u10: Complex64,
    pub u11: Complex64,
}

impl Propagator2 {
    pub fn apply(&self, state: &SpinState) -> SpinState {
        SpinState {
            amp0: self.u00 * state.amp0 + self.u01 * state.amp1,
            amp1: self.u10 * state.amp0 + self.u11 * state.amp1,
        }
    }
}

/// U = cos(φ)·1 − i·sin(φ)·(n̂·σ) with φ = Ω_gen·t/2 and
/// Ω_gen = √(Δ² + Ω_eff²); the Ω_gen → 0 limit is the identity.
pub fn pure_propagator(delta_total: f64, rabi_effective: f64, t_us: f64) -> Propagator2 {
    let omega_gen = (delta_total * delta_total + rabi_effective * rabi_effective).sqrt();
    let half = 0.5 * omega_gen * t_us;
    let cos = half.cos();
    // sin(φ)/Ω_gen, guarded through its t/2 limit at the 0/0 point.
    let s = if omega_gen > 0.0 {
        half.sin() / omega_gen
    } else {
        0.5 * t_us
    };
    Propagator2 {
        u00: Complex64::new(cos, -s * delta_total),
        u01: Complex64::new(0.0, -s * rabi_effective),
        u10: Complex64::new(0.0, -s * rabi_effective),
        u11: Complex64::new(cos, s * delta_total),
    }
}

/// Evolve a pure state for `t_us` under the closed-form propagator.
///
/// The pure path ignores `gamma_pure`; callers wanting dephasing use
/// [`evolve_density`].
pub fn evolve_pure(state: &SpinState, drive: &DriveSettings, t_us: f64) -> Result<SpinState> {
    drive.validate()?;
    if !(t_us >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "evolution time must be >= 0, got {t_us}"
        )));
    }
    Ok(pure_propagator(drive.delta_total, drive.rabi_effective, t_us).apply(state))
}

/// Generator of the vectorized master equation, acting on
/// (ρ00, ρ01, ρ10, ρ11).
pub fn liouvillian(drive: &DriveSettings, form: DephasingForm) -> Matrix4<Complex64> {
    let h = [
        [
            Complex64::new(0.5 * drive.delta_total, 0.0),
            Complex64::new(0.5 * drive.rabi_effective, 0.0),
        ],
        [
            Complex64::new(0.5 * drive.rabi_effective, 0.0),
            Complex64::new(-0.5 * drive.delta_total, 0.0),
        ],
    ];
    let mut l = Matrix4::<Complex64>::zeros();
    // −i[H, ρ] with row-major vectorization: vec(Hρ) = (H⊗1)v, vec(ρH) = (1⊗Hᵀ)v.
    for i in 0..2 {
        for j in 0..2 {
            let row = 2 * i + j;
            for k in 0..2 {
                for m in 0..2 {
                    let col = 2 * k + m;
                    let mut v = Complex64::new(0.0, 0.0);
                    if j == m {
                        v += h[i][k];
                    }
                    if i == k {
                        v -= h[m][j];
                    }
                    l[(row, col)] += -I * v;
                }
            }
        }
    }
    let g = drive.gamma_pure;
    match form {
        // (Γ/2)(σ_z ρ σ_z − ρ): diagonal (0, −Γ, −Γ, 0).
        DephasingForm::TracePreserving => {
            l[(1, 1)] += Complex64::new(-g, 0.0);
            l[(2, 2)] += Complex64::new(-g, 0.0);
        }
        // Γ(σ_z ρ σ_z − ρ/4): diagonal (3Γ/4, −5Γ/4, −5Γ/4, 3Γ/4).
        DephasingForm::PaperLiteral => {
            l[(0, 0)] += Complex64::new(0.75 * g, 0.0);
            l[(1, 1)] += Complex64::new(-1.25 * g, 0.0);
            l[(2, 2)] += Complex64::new(-1.25 * g, 0.0);
            l[(3, 3)] += Complex64::new(0.75 * g, 0.0);
        }
    }
    l
}

/// exp(L·t): the exact superoperator propagator for one rectangular step.
pub fn density_propagator(
    drive: &DriveSettings,
    t_us: f64,
    form: DephasingForm,
) -> Matrix4<Complex64> {
    (liouvillian(drive, form) * Complex64::new(t_us, 0.0)).exp()
}

/// Evolve a density matrix for `t_us` under drive and dephasing.
pub fn evolve_density(
    rho: &DensityMatrix2,
    drive: &DriveSettings,
    t_us: f64,
    form: DephasingForm,
) -> Result<DensityMatrix2> {
    drive.validate()?;
    if !(t_us >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "evolution time must be >= 0, got {t_us}"
        )));
    }
    let s = density_propagator(drive, t_us, form);
    Ok(DensityMatrix2::from_vec(&(s * rho.to_vec())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{mhz_to_rad_per_us, TAU};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn drive(delta: f64, rabi: f64, gamma: f64) -> DriveSettings {
        DriveSettings {
            delta_total: delta,
            rabi_effective: rabi,
            gamma_pure: gamma,
        }
    }

    #[test]
    fn on_resonance_pi_pulse_inverts() {
        let omega = mhz_to_rad_per_us(5.0);
        let t = std::f64::consts::PI / omega;
        let out = evolve_pure(&SpinState::ground(), &drive(0.0, omega, 0.0), t).unwrap();
        assert_abs_diff_eq!(out.contrast(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_time_is_identity() {
        let out = evolve_pure(&SpinState::ground(), &drive(3.0, 7.0, 0.0), 0.0).unwrap();
        assert_eq!(out.amp0, Complex64::new(1.0, 0.0));
        assert_eq!(out.amp1, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn degenerate_drive_is_identity() {
        let psi = SpinState {
            amp0: Complex64::new(0.6, 0.0),
            amp1: Complex64::new(0.0, 0.8),
        };
        let out = evolve_pure(&psi, &drive(0.0, 0.0, 0.0), 2.5).unwrap();
        assert_eq!(out, psi);
    }

    #[test]
    fn negative_time_rejected() {
        assert!(evolve_pure(&SpinState::ground(), &drive(0.0, 1.0, 0.0), -1.0).is_err());
        assert!(
            evolve_density(&DensityMatrix2::ground(), &drive(0.0, 1.0, 0.0), -1.0,
                DephasingForm::TracePreserving)
            .is_err()
        );
    }

    #[test]
    fn rabi_formula_single_case() {
        // Δ = 2π·1, Ω = 2π·1, t = 0.25 µs against the analytic transition
        // probability (Ω²/Ω_gen²)·sin²(Ω_gen·t/2).
        let delta = TAU;
        let omega = TAU;
        let t = 0.25;
        let out = evolve_pure(&SpinState::ground(), &drive(delta, omega, 0.0), t).unwrap();
        let gen = (delta * delta + omega * omega).sqrt();
        let expected = (omega * omega / (gen * gen)) * (0.5 * gen * t).sin().powi(2);
        assert_abs_diff_eq!(out.contrast(), expected, epsilon = 1e-12);
    }

    #[test]
    fn dephasing_leaves_populations() {
        let rho = DensityMatrix2::ground();
        let out = evolve_density(&rho, &drive(0.0, 0.0, 1.0), 3.0, DephasingForm::TracePreserving)
            .unwrap();
        assert_abs_diff_eq!(out.rho00.re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out.rho11.re, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn coherence_decays_at_gamma_pure() {
        let rho = DensityMatrix2::new(0.5, Complex64::new(0.5, 0.0), 0.5);
        let out = evolve_density(&rho, &drive(0.0, 0.0, 0.5), 2.0, DephasingForm::TracePreserving)
            .unwrap();
        assert_abs_diff_eq!(out.rho01.re, 0.5 * (-1.0f64).exp(), epsilon = 1e-8);
        assert_abs_diff_eq!(out.rho01.im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn paper_literal_form_grows_trace() {
        let rho = DensityMatrix2::ground();
        let out =
            evolve_density(&rho, &drive(0.0, 0.0, 1.0), 1.0, DephasingForm::PaperLiteral).unwrap();
        // populations pick up e^{(3/4)Γt} under the literal 1/8 coefficients
        assert_abs_diff_eq!(out.trace(), (0.75f64).exp(), epsilon = 1e-9);
    }

    #[test]
    fn zero_gamma_density_matches_pure() {
        let d = drive(mhz_to_rad_per_us(1.3), mhz_to_rad_per_us(4.2), 0.0);
        let t = 0.7;
        let pure = evolve_pure(&SpinState::ground(), &d, t).unwrap();
        let lifted = DensityMatrix2::from_pure(&pure);
        let dens = evolve_density(
            &DensityMatrix2::ground(),
            &d,
            t,
            DephasingForm::TracePreserving,
        )
        .unwrap();
        assert_abs_diff_eq!(dens.rho00.re, lifted.rho00.re, epsilon = 1e-10);
        assert_abs_diff_eq!(dens.rho11.re, lifted.rho11.re, epsilon = 1e-10);
        assert_abs_diff_eq!(dens.rho01.re, lifted.rho01.re, epsilon = 1e-10);
        assert_abs_diff_eq!(dens.rho01.im, lifted.rho01.im, epsilon = 1e-10);
    }

    #[test]
    fn contrast_trivial_values() {
        assert_eq!(SpinState::ground().contrast(), 0.0);
        assert_eq!(SpinState::excited().contrast(), 1.0);
        let half = std::f64::consts::FRAC_1_SQRT_2;
        let sup = SpinState {
            amp0: Complex64::new(half, 0.0),
            amp1: Complex64::new(half, 0.0),
        };
        assert_abs_diff_eq!(sup.contrast(), 0.5, epsilon = 1e-15);
    }

    proptest! {
        #[test]
        fn unitarity(
            delta in -60.0..60.0f64,
            rabi in 0.0..60.0f64,
            t in 0.0..10.0f64,
        ) {
            let out = evolve_pure(&SpinState::ground(), &drive(delta, rabi, 0.0), t).unwrap();
            prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn rabi_formula_equivalence(
            delta in -60.0..60.0f64,
            rabi in 0.0..60.0f64,
            t in 0.0..10.0f64,
        ) {
            let out = evolve_pure(&SpinState::ground(), &drive(delta, rabi, 0.0), t).unwrap();
            let gen_sq = delta * delta + rabi * rabi;
            let expected = if gen_sq > 0.0 {
                (rabi * rabi / gen_sq) * (0.5 * gen_sq.sqrt() * t).sin().powi(2)
            } else {
                0.0
            };
            prop_assert!((out.contrast() - expected).abs() < 1e-10);
        }

        #[test]
        fn density_trace_and_positivity(
            delta in -60.0..60.0f64,
            rabi in 0.0..60.0f64,
            gamma in 0.0..5.0f64,
            t in 0.0..5.0f64,
            p in 0.0..1.0f64,
            coh in 0.0..1.0f64,
            phase in 0.0..TAU,
        ) {
            // random valid state: coherence bounded by √(p(1−p))
            let max_coh = (p * (1.0 - p)).sqrt();
            let rho01 = Complex64::from_polar(coh * max_coh, phase);
            let rho = DensityMatrix2::new(p, rho01, 1.0 - p);
            let out = evolve_density(&rho, &drive(delta, rabi, gamma), t,
                DephasingForm::TracePreserving).unwrap();
            prop_assert!((out.trace() - 1.0).abs() < 1e-10);
            let (lo, hi) = out.eigenvalues();
            prop_assert!(lo > -1e-10 && hi < 1.0 + 1e-10);
        }

        #[test]
        fn composition(
            delta in -30.0..30.0f64,
            rabi in 0.0..30.0f64,
            gamma in 0.0..2.0f64,
            t1 in 0.0..3.0f64,
            t2 in 0.0..3.0f64,
        ) {
            let d = drive(delta, rabi, 0.0);
            let a = evolve_pure(
                &evolve_pure(&SpinState::ground(), &d, t1).unwrap(), &d, t2).unwrap();
            let b = evolve_pure(&SpinState::ground(), &d, t1 + t2).unwrap();
            prop_assert!((a.amp0 - b.amp0).norm() < 1e-10);
            prop_assert!((a.amp1 - b.amp1).norm() < 1e-10);

            let dd = drive(delta, rabi, gamma);
            let form = DephasingForm::TracePreserving;
            let ra = evolve_density(
                &evolve_density(&DensityMatrix2::ground(), &dd, t1, form).unwrap(),
                &dd, t2, form).unwrap();
            let rb = evolve_density(&DensityMatrix2::ground(), &dd, t1 + t2, form).unwrap();
            prop_assert!((ra.rho00 - rb.rho00).norm() < 1e-10);
            prop_assert!((ra.rho01 - rb.rho01).norm() < 1e-10);
            prop_assert!((ra.rho11 - rb.rho11).norm() < 1e-10);
        }
    }
}
