use super::{distance, BaselineError, SamplePoint};

pub const MAX_LAG_BINS: usize = 12;

/// `gamma(h) = nugget + slope * h` for `h > 0`, zero at `h = 0`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LinearVariogram {
    pub slope: f64,
    pub nugget: f64,
}

impl LinearVariogram {
    pub fn new(slope: f64, nugget: f64) -> Result<Self, BaselineError> {
        if !(slope >= 0.0 && slope.is_finite() && nugget >= 0.0 && nugget.is_finite()) {
            return Err(BaselineError::Config(format!(
                "variogram needs finite slope >= 0 and nugget >= 0, got {slope}, {nugget}"
            )));
        }
        Ok(Self { slope, nugget })
    }

    #[inline]
    pub fn gamma(&self, h: f64) -> f64 {
        if h == 0.0 {
            0.0
        } else {
            self.nugget + self.slope * h
        }
    }
}

/// Binned semivariance: `(bin center, mean half squared difference, pair count)`
/// for each non-empty bin. Bins split `(0, max pair distance]` evenly.
pub fn empirical_semivariogram(
    samples: &[SamplePoint],
    time_scale: f64,
) -> Result<Vec<(f64, f64, usize)>, BaselineError> {
    if samples.len() < 2 {
        return Err(BaselineError::EmptySamples);
    }
    let mut pairs = Vec::with_capacity(samples.len() * (samples.len() - 1) / 2);
    let mut max_h = 0.0f64;
    for (i, a) in samples.iter().enumerate() {
        for b in &samples[i + 1..] {
            let h = distance(&a.position, &b.position, time_scale);
            let dv = a.value - b.value;
            max_h = max_h.max(h);
            pairs.push((h, 0.5 * dv * dv));
        }
    }
    if max_h == 0.0 {
        return Err(BaselineError::DegenerateSamples);
    }
    let bins = MAX_LAG_BINS.min(pairs.len());
    let width = max_h / bins as f64;
    let mut sum = vec![0.0; bins];
    let mut count = vec![0usize; bins];
    for (h, g) in pairs {
        let b = ((h / width) as usize).min(bins - 1);
        sum[b] += g;
        count[b] += 1;
    }
    Ok((0..bins)
        .filter(|&b| count[b] > 0)
        .map(|b| ((b as f64 + 0.5) * width, sum[b] / count[b] as f64, count[b]))
        .collect())
}

/// Unweighted least-squares line through the binned semivariance. A negative
/// slope is clamped to zero (nugget becomes the mean); a negative nugget is
/// clamped to zero and the slope refit through the origin.
pub fn fit_linear_variogram(samples: &[SamplePoint], time_scale: f64) -> Result<LinearVariogram, BaselineError> {
    let bins = empirical_semivariogram(samples, time_scale)?;
    let n = bins.len() as f64;
    let mean_h = bins.iter().map(|b| b.0).sum::<f64>() / n;
    let mean_g = bins.iter().map(|b| b.1).sum::<f64>() / n;
    let sxx: f64 = bins.iter().map(|b| (b.0 - mean_h).powi(2)).sum();
    let sxy: f64 = bins.iter().map(|b| (b.0 - mean_h) * (b.1 - mean_g)).sum();
    let mut slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let mut nugget = mean_g - slope * mean_h;
    if slope < 0.0 {
        slope = 0.0;
        nugget = mean_g;
    }
    if nugget < 0.0 {
        nugget = 0.0;
        let shh: f64 = bins.iter().map(|b| b.0 * b.0).sum();
        let shg: f64 = bins.iter().map(|b| b.0 * b.1).sum();
        slope = (shg / shh).max(0.0);
    }
    LinearVariogram::new(slope, nugget)
}
