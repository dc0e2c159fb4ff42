//! Sample summaries.

use serde::{Deserialize, Serialize};

/// Mean, unbiased variance and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub stderr: f64,
}

impl Summary {
    /// Two-pass summary. With fewer than two samples the variance and
    /// standard error are zero.
    pub fn of(samples: &[f64]) -> Self {
        let n = samples.len();
        if n == 0 {
            return Self { n, mean: f64::NAN, variance: f64::NAN, stderr: f64::NAN };
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let variance = if n < 2 {
            0.0
        } else {
            samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        };
        Self {
            n,
            mean,
            variance,
            stderr: (variance / n as f64).sqrt(),
        }
    }

    /// Standard error of the sample variance, `sqrt((m4 - s⁴ (n-3)/(n-1)) / n)`.
    pub fn variance_stderr(samples: &[f64]) -> f64 {
        let s = Self::of(samples);
        let n = s.n as f64;
        if s.n < 4 {
            return f64::NAN;
        }
        let m4 = samples.iter().map(|x| (x - s.mean).powi(4)).sum::<f64>() / n;
        ((m4 - s.variance * s.variance * (n - 3.0) / (n - 1.0)) / n).max(0.0).sqrt()
    }
}
