use super::linalg::Lu;
use super::{distance, fit_linear_variogram, gap_cells, BaselineError, ContextWindow, LinearVariogram, SamplePoint};
use crate::grid::{GapBlock, SpatioTemporalTensor, StGap};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrigingConfig {
    /// Fitted per gap and feature from the context samples when `None`.
    pub variogram: Option<LinearVariogram>,
    pub time_scale: f64,
    pub window: ContextWindow,
    pub jitter: f64,
}

impl Default for KrigingConfig {
    fn default() -> Self {
        Self {
            variogram: None,
            time_scale: 1.0,
            window: ContextWindow {
                radius: 3,
                before: 2,
                after: 0,
            },
            jitter: 1e-10,
        }
    }
}

impl KrigingConfig {
    /// Context on both sides of the gap, `steps` deep each.
    pub fn full(radius: usize, steps: usize) -> Self {
        Self {
            window: ContextWindow {
                radius,
                before: steps,
                after: steps,
            },
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), BaselineError> {
        if !(self.time_scale > 0.0 && self.time_scale.is_finite()) {
            return Err(BaselineError::Config(format!("time scale must be positive, got {}", self.time_scale)));
        }
        if !(self.jitter >= 0.0 && self.jitter.is_finite()) {
            return Err(BaselineError::Config(format!("jitter must be non-negative, got {}", self.jitter)));
        }
        if let Some(v) = self.variogram {
            LinearVariogram::new(v.slope, v.nugget)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Kriged {
    pub value: f64,
    pub variance: f64,
    pub weights: Vec<f64>,
    pub lagrange: f64,
}

/// Factored ordinary-kriging system for a fixed sample set.
#[derive(Debug, Clone)]
pub struct KrigingSystem {
    samples: Vec<SamplePoint>,
    variogram: LinearVariogram,
    time_scale: f64,
    jitter: f64,
    lu: Lu,
}

impl KrigingSystem {
    pub fn new(
        samples: Vec<SamplePoint>,
        variogram: LinearVariogram,
        time_scale: f64,
        jitter: f64,
    ) -> Result<Self, BaselineError> {
        if samples.is_empty() {
            return Err(BaselineError::EmptySamples);
        }
        let n = samples.len() + 1;
        let mut a = vec![0.0; n * n];
        for (i, si) in samples.iter().enumerate() {
            for (j, sj) in samples.iter().enumerate() {
                let mut g = variogram.gamma(distance(&si.position, &sj.position, time_scale));
                if i == j {
                    g += jitter;
                }
                a[i * n + j] = g;
            }
            a[i * n + n - 1] = 1.0;
            a[(n - 1) * n + i] = 1.0;
        }
        let lu = Lu::factor(n, a).ok_or(BaselineError::SingularSystem)?;
        Ok(Self {
            samples,
            variogram,
            time_scale,
            jitter,
            lu,
        })
    }

    pub fn samples(&self) -> &[SamplePoint] {
        &self.samples
    }

    pub fn variogram(&self) -> LinearVariogram {
        self.variogram
    }

    /// A query on a sample site sees the same jitter as the diagonal, so the
    /// site's own value comes back exactly.
    pub fn predict(&self, query: [f64; 3]) -> Kriged {
        let mut rhs: Vec<f64> = self
            .samples
            .iter()
            .map(|s| match distance(&s.position, &query, self.time_scale) {
                0.0 => self.jitter,
                h => self.variogram.gamma(h),
            })
            .collect();
        rhs.push(1.0);
        let mut x = self.lu.solve(&rhs);
        let lagrange = x.pop().expect("system has a multiplier row");
        let value = x.iter().zip(&self.samples).map(|(w, s)| w * s.value).sum();
        let variance = x.iter().zip(&rhs).map(|(w, g)| w * g).sum::<f64>() + lagrange;
        Kriged {
            value,
            variance,
            weights: x,
            lagrange,
        }
    }
}

/// Ordinary kriging at a single point. Fits the variogram from the samples
/// when the config does not supply one.
pub fn krige(samples: &[SamplePoint], config: &KrigingConfig, query: [f64; 3]) -> Result<Kriged, BaselineError> {
    config.validate()?;
    if samples.is_empty() {
        return Err(BaselineError::EmptySamples);
    }
    let variogram = resolve_variogram(samples, config)?;
    Ok(KrigingSystem::new(samples.to_vec(), variogram, config.time_scale, config.jitter)?.predict(query))
}

fn resolve_variogram(samples: &[SamplePoint], config: &KrigingConfig) -> Result<LinearVariogram, BaselineError> {
    match config.variogram {
        Some(v) => Ok(v),
        // a lone sample or a single location has nothing to fit; any variogram
        // gives the same prediction there
        None if samples.len() < 2 => Ok(LinearVariogram { slope: 1.0, nugget: 0.0 }),
        None => match fit_linear_variogram(samples, config.time_scale) {
            Err(BaselineError::DegenerateSamples) => Ok(LinearVariogram { slope: 1.0, nugget: 0.0 }),
            other => other,
        },
    }
}

/// Kriges every gap cell, one factored system per feature.
pub fn krige_gap(tensor: &SpatioTemporalTensor, gap: &StGap, config: &KrigingConfig) -> Result<GapBlock, BaselineError> {
    config.validate()?;
    let mut block = GapBlock::zeros(*gap, tensor.d());
    for k in 0..tensor.d() {
        let samples = config.window.samples(tensor, gap, k);
        if samples.is_empty() {
            return Err(BaselineError::NoContext);
        }
        let variogram = resolve_variogram(&samples, config)?;
        let system = KrigingSystem::new(samples, variogram, config.time_scale, config.jitter)?;
        for (dl, dn, dt) in gap_cells(gap) {
            let q = [
                (gap.lat_start + dl) as f64,
                (gap.lon_start + dn) as f64,
                (gap.alpha + dt) as f64,
            ];
            let o = block.offset(dl, dn, dt);
            block.values[o + k] = system.predict(q).value;
        }
    }
    Ok(block)
}
