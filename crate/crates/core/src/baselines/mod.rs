//! Comparison interpolators.
//!
//! All three work per feature on samples drawn from a window around the
//! gap. Positions are `(lat, lon, time)` in cell/step units; the time axis
//! is stretched by a configurable factor before distances are taken.

mod idw;
mod kriging;
pub mod linalg;
mod mean;
mod variogram;

pub use idw::{idw, idw_gap, IdwConfig};
pub use kriging::{krige, krige_gap, Kriged, KrigingConfig, KrigingSystem};
pub use mean::{mean_baseline, mean_gap};
pub use variogram::{empirical_semivariogram, fit_linear_variogram, LinearVariogram, MAX_LAG_BINS};

use thiserror::Error;

use crate::grid::{SpatioTemporalTensor, StGap};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BaselineError {
    #[error("no non-missing history at (lat {lat}, lon {lon})")]
    NoHistory { lat: usize, lon: usize },
    #[error("no samples")]
    EmptySamples,
    #[error("all sample positions coincide")]
    DegenerateSamples,
    #[error("kriging system is singular")]
    SingularSystem,
    #[error("no context samples around the gap")]
    NoContext,
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// A known value at a grid position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplePoint {
    /// `(lat, lon, time)`.
    pub position: [f64; 3],
    pub value: f64,
}

/// Euclidean distance with the time axis multiplied by `time_scale`.
#[inline]
pub fn distance(a: &[f64; 3], b: &[f64; 3], time_scale: f64) -> f64 {
    let dl = a[0] - b[0];
    let dn = a[1] - b[1];
    let dt = (a[2] - b[2]) * time_scale;
    (dl * dl + dn * dn + dt * dt).sqrt()
}

/// Which cells around a gap feed IDW and kriging.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContextWindow {
    /// Cells added on each side of the gap footprint.
    pub radius: usize,
    /// Time steps taken before `alpha`.
    pub before: usize,
    /// Time steps taken after `beta`.
    pub after: usize,
}

impl ContextWindow {
    /// Observed samples of feature `k` in the window.
    pub fn samples(&self, tensor: &SpatioTemporalTensor, gap: &StGap, k: usize) -> Vec<SamplePoint> {
        let lat0 = gap.lat_start.saturating_sub(self.radius);
        let lat1 = (gap.lat_start + gap.k1 + self.radius).min(tensor.m());
        let lon0 = gap.lon_start.saturating_sub(self.radius);
        let lon1 = (gap.lon_start + gap.k2 + self.radius).min(tensor.n());
        let t0 = gap.alpha.saturating_sub(self.before);
        let t1 = (gap.beta + 1 + self.after).min(tensor.t_len());
        let mut out = Vec::new();
        for lat in lat0..lat1 {
            for lon in lon0..lon1 {
                for t in (t0..gap.alpha).chain(gap.beta + 1..t1) {
                    let v = tensor.get(lat, lon, t, k);
                    if !v.is_nan() {
                        out.push(SamplePoint {
                            position: [lat as f64, lon as f64, t as f64],
                            value: v as f64,
                        });
                    }
                }
            }
        }
        out
    }
}

pub(crate) fn gap_cells(gap: &StGap) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
    (0..gap.k1).flat_map(move |dl| {
        (0..gap.k2).flat_map(move |dn| (0..gap.delta_t()).map(move |dt| (dl, dn, dt)))
    })
}
