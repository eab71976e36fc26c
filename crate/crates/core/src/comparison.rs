//! Scheme-comparison experiments: slope surfaces over (L_IHB, L_DAV),
//! Rabi-plateau scans and the measured-distribution run.
//!
//! Each (l_ihb, l_dav) cell builds its ensemble once, runs all three
//! optimized pipelines and emits one row. Cells are independent;
//! grid-mode results are cached per cell under a content hash of the
//! ensemble spec and scheme configuration, so interrupted surfaces resume
//! instead of recomputing.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cw::{optimize_cw, CwParams, FiveLevelRates, GammaPUnits};
use crate::ensemble::{build_ensemble, load_measured_distribution, Ensemble};
use crate::error::{Error, Result};
use crate::pulsed::optimize_pulsed;
use crate::ramsey::{ramsey_slope, RamseySweep, SlopeResult};
use crate::spin::DephasingForm;

/// π-pulse optimizer inputs for the comparison runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulsedOptSettings {
    pub omega_r_grid_mhz: Vec<f64>,
    pub f_grid_mhz: Vec<f64>,
    pub gamma_pure_per_us: f64,
    pub dephasing_form: DephasingForm,
}

/// CW optimizer inputs for the comparison runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CwOptSettings {
    pub omega_r_grid_mhz: Vec<f64>,
    pub gamma_p_grid_mhz: Vec<f64>,
    pub gamma_p_units: GammaPUnits,
    pub f_grid_mhz: Vec<f64>,
    pub rates: FiveLevelRates,
    pub t2_star_us: Option<f64>,
    pub off_resonance_offset_mhz: f64,
    pub asymptotic_omega_r_mhz: f64,
}

impl CwOptSettings {
    fn base_params(&self) -> CwParams {
        CwParams {
            gamma_p_per_us: 0.0, // overwritten per grid point
            omega_r_mhz: 0.0,    // overwritten per grid point
            t2_star_us: self.t2_star_us,
            rates: self.rates,
            off_resonance_offset_mhz: self.off_resonance_offset_mhz,
            asymptotic_omega_r_mhz: self.asymptotic_omega_r_mhz,
        }
    }
}

/// Full configuration of a comparison surface.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonConfig {
    pub l_ihb_grid_mhz: Vec<f64>,
    pub l_dav_grid: Vec<f64>,
    pub n_delta: usize,
    pub n_alpha: usize,
    pub ramsey: RamseySweep,
    pub pulsed: PulsedOptSettings,
    pub cw: CwOptSettings,
    /// Cell-result cache directory; `None` disables caching.
    pub cache_dir: Option<PathBuf>,
}

/// One comparison cell: the three optimized slopes plus their ratios and
/// the optimizers' chosen parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub l_ihb_mhz: f64,
    pub l_dav: f64,
    pub slope_ramsey: f64,
    pub slope_pulsed: f64,
    pub slope_cw: f64,
    pub ratio_pulsed: f64,
    pub ratio_cw: f64,
    pub detuning_mhz: f64,
    pub tau_opt_us: f64,
    pub omega_r_pulsed_mhz: f64,
    pub omega_r_cw_mhz: f64,
    pub gamma_p_cw_mhz: f64,
    pub diagnostics: BTreeMap<String, f64>,
}

fn merge_diagnostics(
    ramsey: &SlopeResult,
    pulsed: &SlopeResult,
    cw: &SlopeResult,
) -> BTreeMap<String, f64> {
    let mut d = BTreeMap::new();
    d.insert("ramsey_q_max".into(), ramsey.q_max);
    for (k, v) in &ramsey.auxiliary {
        d.insert(format!("ramsey_{k}"), *v);
    }
    d.insert("pulsed_f_at_max_slope_mhz".into(), pulsed.chosen_detuning_mhz);
    d.insert("pulsed_t_pi_us".into(), pulsed.tau_opt_us);
    d.insert("cw_f_at_max_slope_mhz".into(), cw.chosen_detuning_mhz);
    for (k, v) in &cw.auxiliary {
        d.insert(format!("cw_{k}"), *v);
    }
    d
}

fn evaluate_cell(config: &ComparisonConfig, l_ihb_mhz: f64, l_dav: f64) -> Result<ComparisonRow> {
    let ensemble = build_ensemble(l_ihb_mhz, l_dav, config.n_delta, config.n_alpha)?;
    let ramsey = ramsey_slope(&ensemble, &config.ramsey)?;
    let pulsed = optimize_pulsed(
        &ensemble,
        &config.pulsed.omega_r_grid_mhz,
        &config.pulsed.f_grid_mhz,
        config.pulsed.gamma_pure_per_us,
        config.pulsed.dephasing_form,
    )?;
    let cw = optimize_cw(
        &ensemble,
        &config.cw.omega_r_grid_mhz,
        &config.cw.gamma_p_grid_mhz,
        config.cw.gamma_p_units,
        &config.cw.f_grid_mhz,
        &config.cw.base_params(),
    )?;
    let diagnostics = merge_diagnostics(&ramsey, &pulsed, &cw);
    Ok(ComparisonRow {
        l_ihb_mhz,
        l_dav,
        slope_ramsey: ramsey.slope_per_mhz,
        slope_pulsed: pulsed.slope_per_mhz,
        slope_cw: cw.slope_per_mhz,
        ratio_pulsed: pulsed.slope_per_mhz / ramsey.slope_per_mhz,
        ratio_cw: cw.slope_per_mhz / ramsey.slope_per_mhz,
        detuning_mhz: ramsey.chosen_detuning_mhz,
        tau_opt_us: ramsey.tau_opt_us,
        omega_r_pulsed_mhz: pulsed.auxiliary["omega_r_mhz"],
        omega_r_cw_mhz: cw.auxiliary["omega_r_mhz"],
        gamma_p_cw_mhz: cw.auxiliary["gamma_p_mhz"],
        diagnostics,
    })
}

#[derive(Serialize)]
struct CellKey<'a> {
    cache_version: u32,
    l_ihb_mhz: f64,
    l_dav: f64,
    n_delta: usize,
    n_alpha: usize,
    ramsey: &'a RamseySweep,
    pulsed: &'a PulsedOptSettings,
    cw: &'a CwOptSettings,
}

fn cell_cache_path(dir: &Path, config: &ComparisonConfig, l_ihb: f64, l_dav: f64) -> PathBuf {
    let key = CellKey {
        cache_version: 1,
        l_ihb_mhz: l_ihb,
        l_dav,
        n_delta: config.n_delta,
        n_alpha: config.n_alpha,
        ramsey: &config.ramsey,
        pulsed: &config.pulsed,
        cw: &config.cw,
    };
    let canonical = serde_json::to_string(&key).expect("cell key serializes");
    let digest = Sha256::digest(canonical.as_bytes());
    dir.join(format!("cell-{:x}.json", digest))
}

fn read_cached_row(path: &Path) -> Option<ComparisonRow> {
    let text = std::fs::read_to_string(path).ok()?;
    serde_json::from_str(&text).ok()
}

fn write_cached_row(path: &Path, row: &ComparisonRow) -> Result<()> {
    let dir = path.parent().expect("cache path has a parent");
    std::fs::create_dir_all(dir).map_err(|source| Error::CacheIo {
        path: dir.to_path_buf(),
        source,
    })?;
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    let body = serde_json::to_string_pretty(row).expect("row serializes");
    std::fs::write(&tmp, body).map_err(|source| Error::CacheIo {
        path: tmp.clone(),
        source,
    })?;
    std::fs::rename(&tmp, path).map_err(|source| Error::CacheIo {
        path: path.to_path_buf(),
        source,
    })
}

/// Run the full (l_dav outer, l_ihb inner) comparison surface.
pub fn run_comparison(config: &ComparisonConfig) -> Result<Vec<ComparisonRow>> {
    if config.l_ihb_grid_mhz.is_empty() || config.l_dav_grid.is_empty() {
        return Err(Error::InvalidArgument(
            "l_ihb and l_dav grids must be nonempty".into(),
        ));
    }
    let mut rows = Vec::with_capacity(config.l_ihb_grid_mhz.len() * config.l_dav_grid.len());
    for &l_dav in &config.l_dav_grid {
        for &l_ihb in &config.l_ihb_grid_mhz {
            let cache_path = config
                .cache_dir
                .as_ref()
                .map(|dir| cell_cache_path(dir, config, l_ihb, l_dav));
            if let Some(row) = cache_path.as_ref().and_then(|p| read_cached_row(p)) {
                rows.push(row);
                continue;
            }
            let row = evaluate_cell(config, l_ihb, l_dav).map_err(|e| e.in_cell(l_ihb, l_dav))?;
            if let Some(p) = &cache_path {
                write_cached_row(p, &row)?;
            }
            rows.push(row);
        }
    }
    Ok(rows)
}

/// One point of the Ramsey slope-vs-Rabi-frequency table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RabiPlateauRow {
    pub l_ihb_mhz: f64,
    pub omega_r_mhz: f64,
    pub slope_ramsey: f64,
    pub detuning_mhz: f64,
    pub tau_opt_us: f64,
    pub q_max: f64,
}

/// Ramsey slope as a function of Ω_R for several broadening levels, with
/// no drive-amplitude variation.
pub fn rabi_plateau_scan(
    l_ihb_values_mhz: &[f64],
    omega_r_grid_mhz: &[f64],
    sweep: &RamseySweep,
    n_delta: usize,
) -> Result<Vec<RabiPlateauRow>> {
    if l_ihb_values_mhz.is_empty() || omega_r_grid_mhz.is_empty() {
        return Err(Error::InvalidArgument(
            "l_ihb and omega_r grids must be nonempty".into(),
        ));
    }
    let mut rows = Vec::with_capacity(l_ihb_values_mhz.len() * omega_r_grid_mhz.len());
    for &l_ihb in l_ihb_values_mhz {
        let ensemble = build_ensemble(l_ihb, 0.0, n_delta, 1)?;
        for &omega_r in omega_r_grid_mhz {
            let cell = RamseySweep {
                omega_r_mhz: omega_r,
                ..sweep.clone()
            };
            let result = ramsey_slope(&ensemble, &cell).map_err(|e| e.in_cell(l_ihb, 0.0))?;
            rows.push(RabiPlateauRow {
                l_ihb_mhz: l_ihb,
                omega_r_mhz: omega_r,
                slope_ramsey: result.slope_per_mhz,
                detuning_mhz: result.chosen_detuning_mhz,
                tau_opt_us: result.tau_opt_us,
                q_max: result.q_max,
            });
        }
    }
    Ok(rows)
}

/// One point of the measured-distribution ratio table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasuredRunRow {
    pub omega_r_ramsey_mhz: f64,
    pub l_dav: f64,
    pub slope_ramsey: f64,
    pub slope_pulsed: f64,
    pub slope_cw: f64,
    pub ratio_pulsed: f64,
    pub ratio_cw: f64,
}

/// Scheme ratios for a measured δ distribution: ODMR slopes are optimized
/// once per L_DAV, the Ramsey slope is computed per (Ω_R, L_DAV).
pub fn measured_distribution_run(
    distribution_path: impl AsRef<Path>,
    l_dav_values: &[f64],
    ramsey_omega_r_grid_mhz: &[f64],
    config: &ComparisonConfig,
) -> Result<Vec<MeasuredRunRow>> {
    if l_dav_values.is_empty() || ramsey_omega_r_grid_mhz.is_empty() {
        return Err(Error::InvalidArgument(
            "l_dav and omega_r grids must be nonempty".into(),
        ));
    }
    let path = distribution_path.as_ref();
    let mut rows = Vec::new();
    for &l_dav in l_dav_values {
        let ensemble = load_measured_distribution(path, l_dav, config.n_alpha)?;
        let pulsed = optimize_pulsed(
            &ensemble,
            &config.pulsed.omega_r_grid_mhz,
            &config.pulsed.f_grid_mhz,
            config.pulsed.gamma_pure_per_us,
            config.pulsed.dephasing_form,
        )
        .map_err(|e| e.in_cell(ensemble.l_ihb_mhz(), l_dav))?;
        let cw = optimize_cw(
            &ensemble,
            &config.cw.omega_r_grid_mhz,
            &config.cw.gamma_p_grid_mhz,
            config.cw.gamma_p_units,
            &config.cw.f_grid_mhz,
            &config.cw.base_params(),
        )
        .map_err(|e| e.in_cell(ensemble.l_ihb_mhz(), l_dav))?;
        for &omega_r in ramsey_omega_r_grid_mhz {
            let sweep = RamseySweep {
                omega_r_mhz: omega_r,
                ..config.ramsey.clone()
            };
            let ramsey = ramsey_slope(&ensemble, &sweep)
                .map_err(|e| e.in_cell(ensemble.l_ihb_mhz(), l_dav))?;
            rows.push(MeasuredRunRow {
                omega_r_ramsey_mhz: omega_r,
                l_dav,
                slope_ramsey: ramsey.slope_per_mhz,
                slope_pulsed: pulsed.slope_per_mhz,
                slope_cw: cw.slope_per_mhz,
                ratio_pulsed: pulsed.slope_per_mhz / ramsey.slope_per_mhz,
                ratio_cw: cw.slope_per_mhz / ramsey.slope_per_mhz,
            });
        }
    }
    Ok(rows)
}

/// Convenience: an `Ensemble` built the same way comparison cells build
/// theirs, for cross-checks against cells.
pub fn cell_ensemble(config: &ComparisonConfig, l_ihb_mhz: f64, l_dav: f64) -> Result<Ensemble> {
    build_ensemble(l_ihb_mhz, l_dav, config.n_delta, config.n_alpha)
}
