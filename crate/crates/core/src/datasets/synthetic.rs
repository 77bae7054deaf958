use serde::{Deserialize, Serialize};

use super::{Sample, SeriesTable, Target, TimestampFormat};
use crate::error::{AptfError, Result};
use crate::numeric::{Matrix, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Process {
    /// `x_t = coef * x_{t-1} + e_t`, `e_t ~ N(0, noise_std^2)`.
    Ar1 { coef: f64 },
    /// `amplitude * sin(2 pi t / period) + slope * t + e_t`.
    SeasonalTrend {
        period: f64,
        amplitude: f64,
        slope: f64,
    },
}

impl Default for Process {
    fn default() -> Self {
        Process::Ar1 { coef: 0.9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub length: usize,
    pub variables: usize,
    pub process: Process,
    pub noise_std: f64,
    /// Fraction of timesteps that receive heavy additive noise.
    pub corrupt_frac: f64,
    /// Corruption std as a multiple of `noise_std`.
    pub corrupt_scale: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            length: 5000,
            variables: 1,
            process: Process::default(),
            noise_std: 0.1,
            corrupt_frac: 0.2,
            corrupt_scale: 8.0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.length == 0 || self.variables == 0 {
            return Err(AptfError::BadSpec("length and variables must be positive".into()));
        }
        if !(0.0..=0.5).contains(&self.corrupt_frac) {
            return Err(AptfError::BadSpec(format!(
                "corrupt_frac {} outside [0, 0.5]",
                self.corrupt_frac
            )));
        }
        if !(self.corrupt_scale > 1.0) {
            return Err(AptfError::BadSpec(format!(
                "corrupt_scale {} must exceed 1",
                self.corrupt_scale
            )));
        }
        if !(self.noise_std >= 0.0) || !self.noise_std.is_finite() {
            return Err(AptfError::BadSpec(format!("noise_std {}", self.noise_std)));
        }
        match self.process {
            Process::Ar1 { coef } if !(coef.abs() < 1.0) => {
                Err(AptfError::BadSpec(format!("AR(1) coefficient {coef} is not stationary")))
            }
            Process::SeasonalTrend { period, .. } if !(period > 0.0) => {
                Err(AptfError::BadSpec(format!("period {period} must be positive")))
            }
            _ => Ok(()),
        }
    }
}

/// Generates a series with exactly `round(corrupt_frac * length)` corrupted
/// rows. The returned table carries the mask and the uncorrupted values.
pub fn generate_synthetic(rng: &mut Rng, spec: &SyntheticSpec) -> Result<SeriesTable> {
    spec.validate()?;
    let (t_len, v) = (spec.length, spec.variables);
    let mut clean = Matrix::zeros(t_len, v);

    for var in 0..v {
        match spec.process {
            Process::Ar1 { coef } => {
                let stationary_std = spec.noise_std / (1.0 - coef * coef).sqrt();
                let mut x = stationary_std * rng.standard_normal();
                for t in 0..t_len {
                    if t > 0 {
                        x = coef * x + spec.noise_std * rng.standard_normal();
                    }
                    clean.set(t, var, x);
                }
            }
            Process::SeasonalTrend {
                period,
                amplitude,
                slope,
            } => {
                let phase = 2.0 * std::f64::consts::PI * var as f64 / v as f64;
                for t in 0..t_len {
                    let angle = 2.0 * std::f64::consts::PI * t as f64 / period + phase;
                    let x = amplitude * angle.sin()
                        + slope * t as f64
                        + spec.noise_std * rng.standard_normal();
                    clean.set(t, var, x);
                }
            }
        }
    }

    let n_corrupt = (spec.corrupt_frac * t_len as f64).round() as usize;
    let corrupt_rows = rng.sample_indices(t_len, n_corrupt);
    let mut mask = vec![false; t_len];
    let mut values = clean.clone();
    let heavy_std = spec.corrupt_scale * spec.noise_std;
    for &t in &corrupt_rows {
        mask[t] = true;
        for var in 0..v {
            let x = values.get(t, var) + heavy_std * rng.standard_normal();
            values.set(t, var, x);
        }
    }

    let columns = (0..v).map(|i| format!("x{i}")).collect();
    let timestamps = (0..t_len as i64).collect();
    SeriesTable::new(timestamps, TimestampFormat::Integer, columns, values)?
        .with_corruption(mask, clean)
}

/// Toy classification problem: each class is a sinusoid of its own frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassificationSpec {
    pub samples: usize,
    pub classes: usize,
    pub length: usize,
    pub variables: usize,
    pub noise_std: f64,
    /// Fraction of samples that receive heavy input noise.
    pub corrupt_frac: f64,
    pub corrupt_scale: f64,
}

impl Default for ClassificationSpec {
    fn default() -> Self {
        Self {
            samples: 1200,
            classes: 3,
            length: 32,
            variables: 1,
            noise_std: 0.5,
            corrupt_frac: 0.2,
            corrupt_scale: 4.0,
        }
    }
}

pub fn generate_classification(rng: &mut Rng, spec: &ClassificationSpec) -> Result<Vec<Sample>> {
    if spec.classes < 2 || spec.samples == 0 || spec.length == 0 || spec.variables == 0 {
        return Err(AptfError::BadSpec(
            "classification needs >= 2 classes and nonempty samples".into(),
        ));
    }
    if !(0.0..=0.5).contains(&spec.corrupt_frac) || !(spec.corrupt_scale > 1.0) {
        return Err(AptfError::BadSpec("corrupt_frac or corrupt_scale out of range".into()));
    }
    let n_corrupt = (spec.corrupt_frac * spec.samples as f64).round() as usize;
    let corrupted_idx = rng.sample_indices(spec.samples, n_corrupt);
    let mut is_corrupt = vec![false; spec.samples];
    for i in corrupted_idx {
        is_corrupt[i] = true;
    }

    let mut out = Vec::with_capacity(spec.samples);
    for (i, &corrupt) in is_corrupt.iter().enumerate() {
        let class = rng.index(spec.classes);
        let freq = (class + 1) as f64;
        let phase = rng.uniform_range(0.0, 2.0 * std::f64::consts::PI);
        let extra = if corrupt {
            spec.corrupt_scale * spec.noise_std
        } else {
            0.0
        };
        let mut input = Matrix::zeros(spec.length, spec.variables);
        for t in 0..spec.length {
            let angle = 2.0 * std::f64::consts::PI * freq * t as f64 / spec.length as f64 + phase;
            for var in 0..spec.variables {
                let x = angle.sin()
                    + spec.noise_std * rng.standard_normal()
                    + extra * rng.standard_normal();
                input.set(t, var, x);
            }
        }
        out.push(Sample {
            input,
            target: Target::Class(class),
            corrupted: corrupt,
            start: i,
            span: 1,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(frac: f64) -> SyntheticSpec {
        SyntheticSpec {
            length: 1000,
            corrupt_frac: frac,
            ..SyntheticSpec::default()
        }
    }

    #[test]
    fn no_corruption_means_clean_series() {
        let t = generate_synthetic(&mut Rng::new(1), &spec(0.0)).unwrap();
        assert!(t.mask().unwrap().iter().all(|m| !m));
        assert_eq!(t.values(), t.clean_values().unwrap());
    }

    #[test]
    fn corruption_count_is_exact() {
        let t = generate_synthetic(&mut Rng::new(1), &spec(0.2)).unwrap();
        assert_eq!(t.mask().unwrap().iter().filter(|m| **m).count(), 200);
        for (row, &m) in t.mask().unwrap().iter().enumerate() {
            let differs = t.values().get(row, 0) != t.clean_values().unwrap().get(row, 0);
            assert_eq!(differs, m);
        }
    }

    #[test]
    fn ar1_autocorrelation() {
        let s = SyntheticSpec {
            length: 10_000,
            corrupt_frac: 0.0,
            ..SyntheticSpec::default()
        };
        let t = generate_synthetic(&mut Rng::new(9), &s).unwrap();
        let x = t.clean_values().unwrap().as_slice();
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        let var: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
        let cov: f64 = x.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
        let rho = cov / var;
        assert!((0.85..=0.95).contains(&rho), "rho = {rho}");
    }

    #[test]
    fn deterministic_per_seed() {
        let a = generate_synthetic(&mut Rng::new(4), &spec(0.1)).unwrap();
        let b = generate_synthetic(&mut Rng::new(4), &spec(0.1)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_specs() {
        for bad in [
            SyntheticSpec { corrupt_frac: 0.6, ..spec(0.0) },
            SyntheticSpec { corrupt_scale: 1.0, ..spec(0.1) },
            SyntheticSpec { process: Process::Ar1 { coef: 1.0 }, ..spec(0.1) },
        ] {
            assert!(matches!(
                generate_synthetic(&mut Rng::new(0), &bad),
                Err(AptfError::BadSpec(_))
            ));
        }
    }

    #[test]
    fn classification_samples() {
        let spec = ClassificationSpec {
            samples: 100,
            ..ClassificationSpec::default()
        };
        let samples = generate_classification(&mut Rng::new(2), &spec).unwrap();
        assert_eq!(samples.len(), 100);
        assert_eq!(samples.iter().filter(|s| s.corrupted).count(), 20);
        assert!(samples.iter().all(|s| s.class().unwrap() < 3));
    }
}
