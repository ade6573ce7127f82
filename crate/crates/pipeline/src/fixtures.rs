//! Deterministic synthetic inputs: speaker clips and autoregressive series.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::wav::encode_wav;

pub const FIXTURE_RATE: u32 = 8000;

/// Partial frequencies in Hz of each synthetic speaker.
pub fn speaker_partials(speaker: u32) -> [f64; 2] {
    match speaker {
        1 => [200.0, 900.0],
        2 => [350.0, 1500.0],
        // well clear of the first two, below Nyquist up to speaker 7
        n => [400.0 + 100.0 * n as f64, 2000.0 + 250.0 * n as f64],
    }
}

/// A clip of `speaker`: two partials plus a little seeded noise, peak near
/// 0.8. Different `take`s of one speaker differ in phase and noise.
pub fn speaker_clip(speaker: u32, take: u32, samples: usize) -> Vec<i16> {
    let mut rng = ChaCha8Rng::seed_from_u64(((speaker as u64) << 32) | take as u64);
    let [f1, f2] = speaker_partials(speaker);
    let (p1, p2) = (rng.gen_range(0.0..std::f64::consts::TAU), rng.gen_range(0.0..std::f64::consts::TAU));
    let dt = 1.0 / FIXTURE_RATE as f64;
    (0..samples)
        .map(|n| {
            let t = n as f64 * dt;
            let x = 0.5 * (std::f64::consts::TAU * f1 * t + p1).sin()
                + 0.28 * (std::f64::consts::TAU * f2 * t + p2).sin()
                + rng.gen_range(-0.02..0.02);
            (x * 32767.0).round() as i16
        })
        .collect()
}

pub fn speaker_wav(speaker: u32, take: u32) -> Vec<u8> {
    encode_wav(&speaker_clip(speaker, take, 4000), FIXTURE_RATE)
}

/// A sine of `freq` Hz at amplitude `amp` in (0, 1].
pub fn sine_wav(freq: f64, amp: f64, samples: usize) -> Vec<u8> {
    let pcm: Vec<i16> = (0..samples)
        .map(|n| (amp * 32767.0 * (std::f64::consts::TAU * freq * n as f64 / FIXTURE_RATE as f64).sin()).round() as i16)
        .collect();
    encode_wav(&pcm, FIXTURE_RATE)
}

/// Seed of the AR(2) recovery fixture.
pub const AR_SEED: u64 = 1;

/// x[n] = Σ a[k]·x[n-1-k] + e[n] with e uniform on [-1, 1), after a burn-in
/// that is discarded.
pub fn ar_series(coeffs: &[f64], len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let burn = 512;
    let mut x = vec![0.0; len + burn];
    for n in 0..x.len() {
        let pred: f64 = coeffs.iter().enumerate().filter(|(k, _)| n > *k).map(|(k, a)| a * x[n - 1 - k]).sum();
        x[n] = pred + rng.gen_range(-1.0..1.0);
    }
    x.split_off(burn)
}
