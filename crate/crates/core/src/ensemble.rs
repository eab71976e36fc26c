//! Deterministic (δ_i, α_i) ensemble construction and contrast averaging.
//!
//! Transition-frequency offsets δ_i follow a Gaussian of FWHM `l_ihb_mhz`
//! truncated to ±l_ihb_mhz, sampled at the midpoint quantiles
//! (k − 0.5)/n so identical inputs give bit-identical ensembles. Drive
//! ratios α_i are evenly spaced over [1 − l_dav, 1]. Members carry the
//! Cartesian product of the two grids with uniform weights.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// One ensemble member: transition offset, drive ratio, averaging weight.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleMember {
    /// Transition-frequency offset δ_i from the ensemble center (MHz).
    pub delta_mhz: f64,
    /// Drive-amplitude ratio α_i ∈ (0, 1].
    pub alpha: f64,
    /// Averaging weight, ≥ 0; weights sum to 1 over the ensemble.
    pub weight: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnsembleSource {
    Synthetic,
    Measured,
}

/// Immutable member collection plus its distribution metadata.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    members: Vec<EnsembleMember>,
    l_ihb_mhz: f64,
    l_dav: f64,
    source: EnsembleSource,
}

impl Ensemble {
    pub fn members(&self) -> &[EnsembleMember] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Inhomogeneous-broadening level: the half-range of the δ grid (MHz).
    pub fn l_ihb_mhz(&self) -> f64 {
        self.l_ihb_mhz
    }

    /// Drive-amplitude variation level: the α range below 1.
    pub fn l_dav(&self) -> f64 {
        self.l_dav
    }

    pub fn source(&self) -> EnsembleSource {
        self.source
    }
}

/// Neumaier-compensated accumulator so reductions stay permutation-stable.
#[derive(Clone, Copy, Debug, Default)]
pub struct Accumulator {
    sum: f64,
    comp: f64,
}

impl Accumulator {
    pub fn new() -> Self {
        Accumulator::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

fn check_l_dav(l_dav: f64) -> Result<()> {
    if !(0.0..1.0).contains(&l_dav) {
        return Err(Error::InvalidArgument(format!(
            "l_dav must lie in [0, 1), got {l_dav} (alpha = 0 members never precess visibly)"
        )));
    }
    Ok(())
}

/// Midpoint-quantile sample of a Gaussian with FWHM `l_ihb_mhz`, truncated
/// to ±l_ihb_mhz, mirrored so the grid is exactly symmetric about zero.
fn delta_grid(l_ihb_mhz: f64, n_delta: usize) -> Vec<f64> {
    if l_ihb_mhz == 0.0 || n_delta == 1 {
        return vec![0.0];
    }
    let sigma = l_ihb_mhz / (2.0 * (2.0 * (2.0f64).ln()).sqrt());
    let normal = Normal::new(0.0, sigma).expect("sigma > 0");
    let p_hi = normal.cdf(l_ihb_mhz);
    let p_lo = 1.0 - p_hi;
    let n = n_delta;
    let mut grid = vec![0.0; n];
    for k in 0..n / 2 {
        let p = p_lo + (p_hi - p_lo) * ((k as f64 + 0.5) / n as f64);
        let d = normal.inverse_cdf(p).clamp(-l_ihb_mhz, l_ihb_mhz);
        grid[k] = d;
        grid[n - 1 - k] = -d;
    }
    grid
}

/// Evenly spaced α grid over [1 − l_dav, 1]; degenerate grids collapse
/// to the single point α = 1.
fn alpha_grid(l_dav: f64, n_alpha: usize) -> Vec<f64> {
    if l_dav == 0.0 || n_alpha == 1 {
        return vec![1.0];
    }
    let lo = 1.0 - l_dav;
    (0..n_alpha)
        .map(|j| lo + l_dav * (j as f64) / (n_alpha as f64 - 1.0))
        .collect()
}

/// Build the synthetic (δ, α) product ensemble.
pub fn build_ensemble(l_ihb_mhz: f64, l_dav: f64, n_delta: usize, n_alpha: usize) -> Result<Ensemble> {
    if !(l_ihb_mhz >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "l_ihb_mhz must be >= 0, got {l_ihb_mhz}"
        )));
    }
    check_l_dav(l_dav)?;
    if n_delta == 0 || n_alpha == 0 {
        return Err(Error::InvalidArgument(
            "n_delta and n_alpha must be >= 1".into(),
        ));
    }
    let deltas = delta_grid(l_ihb_mhz, n_delta);
    let alphas = alpha_grid(l_dav, n_alpha);
    let w = 1.0 / (deltas.len() * alphas.len()) as f64;
    let mut members = Vec::with_capacity(deltas.len() * alphas.len());
    for &d in &deltas {
        for &a in &alphas {
            members.push(EnsembleMember {
                delta_mhz: d,
                alpha: a,
                weight: w,
            });
        }
    }
    Ok(Ensemble {
        members,
        l_ihb_mhz,
        l_dav,
        source: EnsembleSource::Synthetic,
    })
}

/// Weighted mean of per-member contrast values.
pub fn ensemble_contrast(per_member: &[f64], ensemble: &Ensemble) -> Result<f64> {
    if per_member.len() != ensemble.len() {
        return Err(Error::InvalidArgument(format!(
            "contrast list length {} does not match member count {}",
            per_member.len(),
            ensemble.len()
        )));
    }
    let mut acc = Accumulator::new();
    for (c, m) in per_member.iter().zip(ensemble.members()) {
        acc.add(c * m.weight);
    }
    Ok(acc.total())
}

/// Load a measured δ distribution from CSV (`delta_mhz,weight`), attach an
/// α grid, and normalize weights to sum 1.
///
/// `#`-prefixed lines are comments; a leading non-numeric row is treated
/// as a header.
pub fn load_measured_distribution(
    path: impl AsRef<Path>,
    l_dav: f64,
    n_alpha: usize,
) -> Result<Ensemble> {
    let path = path.as_ref();
    check_l_dav(l_dav)?;
    if n_alpha == 0 {
        return Err(Error::InvalidArgument("n_alpha must be >= 1".into()));
    }
    let mut text = String::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|source| Error::FileRead {
            path: path.to_path_buf(),
            source,
        })?;

    let mut rows: Vec<(f64, f64)> = Vec::new();
    let mut saw_content_line = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 2 {
            return Err(Error::MalformedRow {
                path: path.to_path_buf(),
                line: line_no,
                detail: format!("expected 2 comma-separated fields, got {}", fields.len()),
            });
        }
        let parsed: std::result::Result<(f64, f64), std::num::ParseFloatError> = fields[0]
            .parse::<f64>()
            .and_then(|d| fields[1].parse::<f64>().map(|w| (d, w)));
        match parsed {
            Ok((delta, weight)) => {
                if !delta.is_finite() || !weight.is_finite() {
                    return Err(Error::MalformedRow {
                        path: path.to_path_buf(),
                        line: line_no,
                        detail: "non-finite value".into(),
                    });
                }
                if weight < 0.0 {
                    return Err(Error::NegativeWeight {
                        path: path.to_path_buf(),
                        line: line_no,
                        weight,
                    });
                }
                rows.push((delta, weight));
                saw_content_line = true;
            }
            Err(e) => {
                // a fully non-numeric first content row is an optional header
                if !saw_content_line && fields.iter().all(|f| f.parse::<f64>().is_err()) {
                    saw_content_line = true;
                    continue;
                }
                return Err(Error::MalformedRow {
                    path: path.to_path_buf(),
                    line: line_no,
                    detail: e.to_string(),
                });
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::EmptyDistribution {
            path: path.to_path_buf(),
        });
    }
    let total: f64 = {
        let mut acc = Accumulator::new();
        rows.iter().for_each(|&(_, w)| acc.add(w));
        acc.total()
    };
    if total <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "{}: distribution weights sum to {total}, need > 0",
            path.display()
        )));
    }

    let alphas = alpha_grid(l_dav, n_alpha);
    let alpha_w = 1.0 / alphas.len() as f64;
    let mut members = Vec::with_capacity(rows.len() * alphas.len());
    for &(delta, w) in &rows {
        for &a in &alphas {
            members.push(EnsembleMember {
                delta_mhz: delta,
                alpha: a,
                weight: (w / total) * alpha_w,
            });
        }
    }
    let l_ihb_mhz = rows.iter().fold(0.0f64, |m, &(d, _)| m.max(d.abs()));
    Ok(Ensemble {
        members,
        l_ihb_mhz,
        l_dav,
        source: EnsembleSource::Measured,
    })
}
