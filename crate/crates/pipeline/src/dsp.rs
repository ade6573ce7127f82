//! Preprocessing filters on amplitude sequences.

use crate::StageError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreprocessingConfig {
    /// Relative amplitude in [0, 1).
    pub silence_threshold: f64,
    pub remove_noise: bool,
    pub remove_silence: bool,
}

impl Default for PreprocessingConfig {
    fn default() -> Self {
        PreprocessingConfig { silence_threshold: 0.01, remove_noise: false, remove_silence: false }
    }
}

/// Scales `data[start..]` so that its largest magnitude becomes 1. Samples
/// before `start` are left as they are.
pub fn normalize(data: &[f64], start: usize) -> Result<Vec<f64>, StageError> {
    if start >= data.len() {
        return Err(StageError::DegenerateSignal);
    }
    let peak = data[start..].iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if peak == 0.0 {
        return Err(StageError::DegenerateSignal);
    }
    let mut out = data.to_vec();
    for x in &mut out[start..] {
        *x /= peak;
    }
    Ok(out)
}

/// Drops every sample strictly quieter than `threshold`. Returns the
/// survivors in order and how many were removed.
pub fn remove_silence(data: &[f64], threshold: f64) -> (Vec<f64>, usize) {
    let kept: Vec<f64> = data.iter().copied().filter(|x| x.abs() >= threshold).collect();
    let removed = data.len() - kept.len();
    (kept, removed)
}

/// Three-point moving average; the two end points average over the two
/// samples they have.
pub fn remove_noise(data: &[f64]) -> Vec<f64> {
    let n = data.len();
    if n < 2 {
        return data.to_vec();
    }
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(1);
            let hi = (i + 1).min(n - 1);
            data[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect()
}

/// Noise filter, then silence removal, then normalization. An empty result
/// is returned as is; the next stage decides what to make of it.
pub fn preprocess(data: &[f64], cfg: &PreprocessingConfig) -> Result<Vec<f64>, StageError> {
    let mut x = data.to_vec();
    if cfg.remove_noise {
        x = remove_noise(&x);
    }
    if cfg.remove_silence {
        x = remove_silence(&x, cfg.silence_threshold).0;
    }
    if x.is_empty() {
        return Ok(x);
    }
    normalize(&x, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize(&[0.0, 0.25, -0.5], 0).unwrap(), [0.0, 0.5, -1.0]);
        assert_eq!(normalize(&[0.0, 0.5, -1.0], 0).unwrap(), [0.0, 0.5, -1.0]);
        assert_eq!(normalize(&[0.0, 0.0], 0), Err(StageError::DegenerateSignal));
        assert_eq!(normalize(&[4.0, 0.25, -0.5], 1).unwrap(), [4.0, 0.5, -1.0]);
    }

    #[test]
    fn silence_examples() {
        assert_eq!(remove_silence(&[0.0, 0.5, 0.01, -0.3], 0.1), (vec![0.5, -0.3], 2));
        assert_eq!(remove_silence(&[0.0, -0.0, 0.2], 0.0), (vec![0.0, -0.0, 0.2], 0));
    }

    #[test]
    fn noise_examples() {
        assert_eq!(remove_noise(&[0.25; 5]), [0.25; 5]);
        let y = remove_noise(&[1.0, -1.0, 1.0, -1.0]);
        let expected = [0.0, 1.0 / 3.0, -1.0 / 3.0, 0.0];
        assert!(y.iter().zip(expected).all(|(a, b)| (a - b).abs() < 1e-15), "{y:?}");
        assert_eq!(remove_noise(&[0.7]), [0.7]);
    }

    #[test]
    fn preprocess_may_empty_the_sample() {
        let cfg = PreprocessingConfig { silence_threshold: 0.9, remove_silence: true, ..Default::default() };
        assert!(preprocess(&[0.5, -0.8, 0.1], &cfg).unwrap().is_empty());
        assert_eq!(preprocess(&[0.5, -0.25], &PreprocessingConfig::default()).unwrap(), [1.0, -0.5]);
    }
}
