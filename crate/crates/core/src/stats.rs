//! Small statistics helpers shared by the sampling and harness code.

use crate::error::{Error, Result};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Standard error of the mean from `n_batches` contiguous batch means.
pub fn batch_mean_stderr(xs: &[f64], n_batches: usize) -> Result<f64> {
    let nb = n_batches.min(xs.len());
    if nb < 2 {
        return Err(Error::Statistics(format!("need at least 2 batches, have {} values", xs.len())));
    }
    let size = xs.len() / nb;
    let means: Vec<f64> = (0..nb).map(|b| mean(&xs[b * size..(b + 1) * size])).collect();
    let m = mean(&means);
    let var = means.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (nb as f64 - 1.0);
    Ok((var / nb as f64).sqrt())
}

/// Mean and batch-means standard error.
pub fn mean_and_stderr(xs: &[f64], n_batches: usize) -> Result<(f64, f64)> {
    Ok((mean(xs), batch_mean_stderr(xs, n_batches)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batch_stderr_of_alternating_batches() {
        let xs: Vec<f64> = (0..100).map(|i| if (i / 10) % 2 == 0 { 1.0 } else { -1.0 }).collect();
        // 10 batch means of +-1: sample variance 10/9, se = sqrt(1/9)
        let se = batch_mean_stderr(&xs, 10).unwrap();
        assert!((se - (1.0f64 / 9.0).sqrt()).abs() < 1e-14);
        assert!(batch_mean_stderr(&[1.0], 10).is_err());
    }
}
