//! Feature extraction: LPC, FFT magnitude spectrum, min/max.

use std::fmt;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::StageError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Lpc,
    Fft,
    MinMax,
}

impl Algorithm {
    pub fn code(self) -> u8 {
        match self {
            Algorithm::Lpc => 1,
            Algorithm::Fft => 2,
            Algorithm::MinMax => 3,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        [Algorithm::Lpc, Algorithm::Fft, Algorithm::MinMax].into_iter().find(|a| a.code() == c)
    }
}

/// Algorithm plus the parameters that determine the vector layout. Two
/// vectors are comparable iff their kinds are equal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FeatureKind {
    pub algorithm: Algorithm,
    /// LPC only; 0 otherwise.
    pub poles: u32,
    /// LPC and FFT; 0 for min/max.
    pub window_len: u32,
}

impl FeatureKind {
    pub fn lpc(poles: u32, window_len: u32) -> Self {
        FeatureKind { algorithm: Algorithm::Lpc, poles, window_len }
    }

    pub fn fft(window_len: u32) -> Self {
        FeatureKind { algorithm: Algorithm::Fft, poles: 0, window_len }
    }

    pub fn minmax() -> Self {
        FeatureKind { algorithm: Algorithm::MinMax, poles: 0, window_len: 0 }
    }

    /// Number of features a vector of this kind carries.
    pub fn len(&self) -> usize {
        match self.algorithm {
            Algorithm::Lpc => self.poles as usize,
            Algorithm::Fft => self.window_len as usize / 2,
            Algorithm::MinMax => 2,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.algorithm {
            Algorithm::Lpc => write!(f, "lpc(poles={}, window={})", self.poles, self.window_len),
            Algorithm::Fft => write!(f, "fft(window={})", self.window_len),
            Algorithm::MinMax => f.write_str("minmax"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub kind: FeatureKind,
    pub features: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    Hamming,
    /// No weighting; for tests against closed-form spectra.
    Rectangular,
}

pub fn hamming(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    let d = (n - 1) as f64;
    (0..n).map(|i| 0.54 - 0.46 * (2.0 * std::f64::consts::PI * i as f64 / d).cos()).collect()
}

fn apply(window: Window, frame: &[f64]) -> Vec<f64> {
    match window {
        Window::Rectangular => frame.to_vec(),
        Window::Hamming => frame.iter().zip(hamming(frame.len())).map(|(x, w)| x * w).collect(),
    }
}

/// r[k] = Σ x[n]·x[n+k] for k in 0..=max_lag.
pub fn autocorrelation(x: &[f64], max_lag: usize) -> Vec<f64> {
    (0..=max_lag).map(|k| x.iter().zip(x.iter().skip(k)).map(|(a, b)| a * b).sum()).collect()
}

/// Solves the order-`p` normal equations R·a = r[1..=p] for the predictor
/// x[n] ≈ Σ a[k]·x[n-1-k]. `r` needs at least p+1 lags.
pub fn levinson_durbin(r: &[f64], p: usize) -> Result<Vec<f64>, StageError> {
    assert!(r.len() > p, "need {} lags, have {}", p + 1, r.len());
    if r[0] == 0.0 || !r[0].is_finite() {
        return Err(StageError::DegenerateSignal);
    }
    let mut a = vec![0.0; p];
    let mut prev = vec![0.0; p];
    let mut err = r[0];
    for i in 0..p {
        let acc = r[i + 1] - (0..i).map(|j| a[j] * r[i - j]).sum::<f64>();
        let k = acc / err;
        prev[..i].copy_from_slice(&a[..i]);
        a[i] = k;
        for j in 0..i {
            a[j] = prev[j] - k * prev[i - 1 - j];
        }
        err *= 1.0 - k * k;
        // the frame is predicted exactly; higher orders add nothing
        if err <= 0.0 {
            break;
        }
    }
    Ok(a)
}

/// LPC coefficients of `frame` as given, without windowing.
pub fn lpc_coefficients(frame: &[f64], poles: usize) -> Result<Vec<f64>, StageError> {
    levinson_durbin(&autocorrelation(frame, poles), poles)
}

pub fn lpc_features(data: &[f64], poles: u32, window_len: u32) -> Result<FeatureVector, StageError> {
    if data.is_empty() {
        return Err(StageError::DegenerateSignal);
    }
    let (p, w) = (poles as usize, window_len as usize);
    if p < 1 || p >= w {
        return Err(StageError::InvalidParams(format!("need 1 <= iPoles < iWindowLen, got {p} and {w}")));
    }
    if w > data.len() {
        return Err(StageError::InvalidParams(format!("iWindowLen {w} exceeds sample length {}", data.len())));
    }
    let frame = apply(Window::Hamming, &data[..w]);
    let features = lpc_coefficients(&frame, p)?;
    Ok(FeatureVector { kind: FeatureKind::lpc(poles, window_len), features })
}

/// Complex spectrum of the first `n` samples, weighted by `window`.
pub fn spectrum(data: &[f64], n: usize, window: Window) -> Result<Vec<Complex<f64>>, StageError> {
    if data.is_empty() {
        return Err(StageError::DegenerateSignal);
    }
    if n < 2 || !n.is_power_of_two() || n > data.len() {
        return Err(StageError::InvalidParams(format!(
            "FFT window must be a power of two in 2..={}, got {n}",
            data.len()
        )));
    }
    let mut buf: Vec<Complex<f64>> = apply(window, &data[..n]).into_iter().map(|x| Complex::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    Ok(buf)
}

/// Magnitudes of the first `window_len / 2` bins.
pub fn fft_features(data: &[f64], window_len: u32, window: Window) -> Result<FeatureVector, StageError> {
    let n = window_len as usize;
    let spec = spectrum(data, n, window)?;
    let features = spec[..n / 2].iter().map(|c| c.norm()).collect();
    Ok(FeatureVector { kind: FeatureKind::fft(window_len), features })
}

pub fn minmax_features(data: &[f64]) -> Result<FeatureVector, StageError> {
    if data.is_empty() {
        return Err(StageError::DegenerateSignal);
    }
    let lo = data.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = data.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(FeatureVector { kind: FeatureKind::minmax(), features: vec![lo, hi] })
}

pub fn extract(data: &[f64], kind: FeatureKind) -> Result<FeatureVector, StageError> {
    let fv = match kind.algorithm {
        Algorithm::Lpc => lpc_features(data, kind.poles, kind.window_len)?,
        Algorithm::Fft => fft_features(data, kind.window_len, Window::Hamming)?,
        Algorithm::MinMax => minmax_features(data)?,
    };
    if fv.features.iter().any(|x| !x.is_finite()) {
        return Err(StageError::DegenerateSignal);
    }
    Ok(fv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lpc_parameter_checks() {
        let x: Vec<f64> = (0..64).map(|i| (i as f64 * 0.3).sin()).collect();
        assert!(matches!(lpc_features(&x, 8, 8), Err(StageError::InvalidParams(_))));
        assert!(matches!(lpc_features(&x, 0, 8), Err(StageError::InvalidParams(_))));
        assert!(matches!(lpc_features(&x, 4, 65), Err(StageError::InvalidParams(_))));
        assert_eq!(lpc_features(&[0.0; 64], 4, 32), Err(StageError::DegenerateSignal));
        assert_eq!(lpc_features(&x, 4, 32).unwrap().features.len(), 4);
    }

    #[test]
    fn first_order_predictor_of_a_geometric_sequence() {
        // r = [1, ρ] gives a = [ρ]
        assert_eq!(levinson_durbin(&[1.0, 0.5], 1).unwrap(), [0.5]);
    }

    #[test]
    fn minmax_and_fft_shapes() {
        assert_eq!(minmax_features(&[0.0, 0.5, -1.0]).unwrap().features, [-1.0, 0.5]);
        assert_eq!(minmax_features(&[0.3; 4]).unwrap().features, [0.3, 0.3]);
        assert_eq!(fft_features(&[0.0; 16], 16, Window::Hamming).unwrap().features, [0.0; 8]);
        assert!(matches!(fft_features(&[0.0; 16], 12, Window::Hamming), Err(StageError::InvalidParams(_))));
        assert_eq!(hamming(3), [0.08000000000000002, 1.0, 0.08000000000000002]);
    }
}
