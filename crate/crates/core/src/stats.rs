use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean and (n−1)-normalized standard deviation of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesStats {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

pub fn series_stats(samples: &[f64]) -> Result<SeriesStats> {
    if samples.len() < 2 {
        return Err(Error::validation(format!(
            "need at least 2 samples for a sample standard deviation, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::validation("samples must be finite"));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let ss: f64 = samples.iter().map(|x| (x - mean).powi(2)).sum();
    Ok(SeriesStats { mean, std: (ss / (n - 1.0)).sqrt(), n: samples.len() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_series_has_zero_spread() {
        let s = series_stats(&[4.2; 6]).unwrap();
        assert_eq!(s.std, 0.0);
        assert!((s.mean - 4.2).abs() < 1e-15);
    }

    #[test]
    fn two_points() {
        let s = series_stats(&[1.0, 3.0]).unwrap();
        assert_eq!(s.mean, 2.0);
        assert!((s.std - std::f64::consts::SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn single_sample_rejected() {
        assert!(series_stats(&[1.0]).is_err());
    }
}
