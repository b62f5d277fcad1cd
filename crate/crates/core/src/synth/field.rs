use serde::{Deserialize, Serialize};

use super::SynthError;
use crate::grid::SpatioTemporalTensor;
use crate::ndiff::SplitMix64;

/// Target mean per-cell temporal variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Medium,
    High,
}

impl Regime {
    pub fn target_variance(self) -> f64 {
        match self {
            Regime::Medium => 240.0,
            Regime::High => 1900.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FieldSpec {
    pub m: usize,
    pub n: usize,
    pub t: usize,
    pub d: usize,
    pub base: f64,
    pub amplitude: f64,
    /// Seasonal period in time steps.
    pub period: f64,
    /// Box smoothing half-width in cells.
    pub radius: usize,
    pub noise_sd: f64,
    /// AR(1) coefficient of the noise along time, in `[0, 1)`.
    pub temporal_corr: f64,
    pub regime: Regime,
    pub seed: u64,
}

impl Default for FieldSpec {
    fn default() -> Self {
        Self {
            m: 32,
            n: 32,
            t: 120,
            d: 1,
            base: 100.0,
            amplitude: 10.0,
            period: 24.0,
            radius: 2,
            noise_sd: 40.0,
            temporal_corr: 0.8,
            regime: Regime::Medium,
            seed: 0,
        }
    }
}

impl FieldSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |msg: String| Err(SynthError::InvalidSpec(msg));
        if self.m == 0 || self.n == 0 || self.t == 0 || self.d == 0 {
            return bad(format!("dims {}x{}x{}x{} must be positive", self.m, self.n, self.t, self.d));
        }
        if !(self.period >= 2.0 && self.period.is_finite()) {
            return bad(format!("period {} must be >= 2", self.period));
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return bad(format!("noise sd {} must be >= 0", self.noise_sd));
        }
        if !(self.amplitude.is_finite() && self.base.is_finite()) {
            return bad("base and amplitude must be finite".into());
        }
        if !(0.0..1.0).contains(&self.temporal_corr) {
            return bad(format!("temporal correlation {} must be in [0, 1)", self.temporal_corr));
        }
        Ok(())
    }
}

/// Mean of `values` over a `(2r+1)^2` window clipped to the grid. `values`
/// is one `m x n` layer, row-major.
pub fn box_smooth(values: &[f64], m: usize, n: usize, radius: usize) -> Vec<f64> {
    assert_eq!(values.len(), m * n);
    if radius == 0 {
        return values.to_vec();
    }
    // summed-area table with a zero border
    let w = n + 1;
    let mut sat = vec![0.0; (m + 1) * w];
    for i in 0..m {
        let mut row = 0.0;
        for j in 0..n {
            row += values[i * n + j];
            sat[(i + 1) * w + j + 1] = sat[i * w + j + 1] + row;
        }
    }
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        let (i0, i1) = (i.saturating_sub(radius), (i + radius + 1).min(m));
        for j in 0..n {
            let (j0, j1) = (j.saturating_sub(radius), (j + radius + 1).min(n));
            let s = sat[i1 * w + j1] - sat[i0 * w + j1] - sat[i1 * w + j0] + sat[i0 * w + j0];
            out[i * n + j] = s / ((i1 - i0) * (j1 - j0)) as f64;
        }
    }
    out
}

/// Population variance over time per `(lat, lon, k)`, averaged. Missing
/// cells are skipped.
pub fn mean_temporal_variance(tensor: &SpatioTemporalTensor) -> f64 {
    let (m, n, t_len, d) = tensor.dims();
    let mut total = 0.0;
    let mut series = 0usize;
    for lat in 0..m {
        for lon in 0..n {
            for k in 0..d {
                let vals: Vec<f64> = (0..t_len)
                    .map(|t| tensor.get(lat, lon, t, k) as f64)
                    .filter(|v| !v.is_nan())
                    .collect();
                if vals.is_empty() {
                    continue;
                }
                let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                total += vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64;
                series += 1;
            }
        }
    }
    if series == 0 {
        0.0
    } else {
        total / series as f64
    }
}

/// `base + c * (seasonal(t) + smoothed AR(1) noise)` with `c` chosen so the
/// mean per-cell temporal variance equals the regime target. A spec with no
/// seasonal or noise component yields the constant `base`.
pub fn generate(spec: &FieldSpec) -> Result<SpatioTemporalTensor, SynthError> {
    spec.validate()?;
    let (m, n, t_len, d) = (spec.m, spec.n, spec.t, spec.d);
    let layer = m * n;
    let mut rng = SplitMix64::new(spec.seed);
    // deviations in (t, k, lat, lon) order
    let mut dev = vec![0.0f64; t_len * d * layer];
    let innovation = (1.0 - spec.temporal_corr * spec.temporal_corr).sqrt();
    let mut state = vec![0.0f64; d * layer];
    for t in 0..t_len {
        let seasonal = spec.amplitude * (std::f64::consts::TAU * t as f64 / spec.period).sin();
        for k in 0..d {
            let s = &mut state[k * layer..(k + 1) * layer];
            for v in s.iter_mut() {
                let e = spec.noise_sd * rng.normal();
                *v = if t == 0 { e } else { spec.temporal_corr * *v + innovation * e };
            }
            let smooth = box_smooth(s, m, n, spec.radius);
            let out = &mut dev[(t * d + k) * layer..(t * d + k + 1) * layer];
            for (o, z) in out.iter_mut().zip(&smooth) {
                *o = seasonal + z;
            }
        }
    }

    let mut var_sum = 0.0;
    for k in 0..d {
        for c in 0..layer {
            let series = (0..t_len).map(|t| dev[(t * d + k) * layer + c]);
            let mean = series.clone().sum::<f64>() / t_len as f64;
            var_sum += series.map(|v| (v - mean).powi(2)).sum::<f64>() / t_len as f64;
        }
    }
    let var = var_sum / (d * layer) as f64;
    let scale = if var > 0.0 {
        (spec.regime.target_variance() / var).sqrt()
    } else {
        0.0
    };

    Ok(SpatioTemporalTensor::from_fn(m, n, t_len, d, |lat, lon, t, k| {
        (spec.base + scale * dev[(t * d + k) * layer + lat * n + lon]) as f32
    })?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_spec_is_constant() {
        let spec = FieldSpec {
            amplitude: 0.0,
            noise_sd: 0.0,
            m: 4,
            n: 4,
            t: 10,
            ..FieldSpec::default()
        };
        let x = generate(&spec).unwrap();
        assert!(x.values().iter().all(|v| *v == 100.0));
    }

    #[test]
    fn box_smooth_oracle() {
        let v: Vec<f64> = (0..12).map(|i| i as f64).collect();
        let s = box_smooth(&v, 3, 4, 1);
        // corner (0,0): cells (0,0),(0,1),(1,0),(1,1)
        assert_eq!(s[0], (0.0 + 1.0 + 4.0 + 5.0) / 4.0);
        // interior (1,1): rows 0..3, cols 0..3
        assert_eq!(s[5], (0.0 + 1.0 + 2.0 + 4.0 + 5.0 + 6.0 + 8.0 + 9.0 + 10.0) / 9.0);
        assert_eq!(box_smooth(&v, 3, 4, 0), v);
    }

    #[test]
    fn rejects_bad_specs() {
        for spec in [
            FieldSpec { period: 1.0, ..FieldSpec::default() },
            FieldSpec { noise_sd: -1.0, ..FieldSpec::default() },
            FieldSpec { temporal_corr: 1.0, ..FieldSpec::default() },
            FieldSpec { m: 0, ..FieldSpec::default() },
        ] {
            assert!(generate(&spec).is_err());
        }
    }
}
