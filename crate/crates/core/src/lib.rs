//! Simulation of NV-center ensemble sensing schemes.
//!
//! Computes the maximum achievable normalized-contrast slope
//! C′ = dC/df_MW for Ramsey interferometry, π-pulse ODMR and CW ODMR over
//! ensembles with configurable inhomogeneous broadening (L_IHB) and
//! microwave drive-amplitude variation (L_DAV), and compares the schemes
//! across those regimes.

pub mod comparison;
pub mod cw;
pub mod ensemble;
pub mod error;
pub mod pulsed;
pub mod ramsey;
pub mod spin;
pub mod units;

pub use comparison::{
    measured_distribution_run, rabi_plateau_scan, run_comparison, ComparisonConfig,
    ComparisonRow, CwOptSettings, MeasuredRunRow, PulsedOptSettings, RabiPlateauRow,
};
pub use cw::{
    cw_ground_populations, cw_normalized_contrast, cw_spectrum, cw_steady_state_intensity,
    load_rates, optimize_cw, CwParams, FiveLevelRates, GammaPUnits,
};
pub use ensemble::{
    build_ensemble, ensemble_contrast, load_measured_distribution, Ensemble, EnsembleMember,
    EnsembleSource,
};
pub use error::{Error, Result};
pub use pulsed::{
    f_grid, optimize_pulsed, pi_pulse_member_contrast, pulsed_max_slope, pulsed_spectrum,
    PulsedOdmrParams, Spectrum,
};
pub use ramsey::{
    b_grid, detuning_grid, fringe_curve, fringe_quality_q, optimize_drive_detuning,
    ramsey_member_contrast, ramsey_slope, tau_grid, DetuningObjective, FringeCurve, RamseyParams,
    RamseySweep, SlopeResult,
};
pub use spin::{
    evolve_density, evolve_pure, DensityMatrix2, DephasingForm, DriveSettings, SpinState,
};
