use std::f64::consts::PI;

use crate::angular::ChannelBasis;
use crate::hamiltonian::WavefunctionState;

/// Σ_{m≠0} ‖ψ_m‖²
pub fn m_population(psi: &WavefunctionState, channels: &ChannelBasis) -> f64 {
    channels
        .channels()
        .iter()
        .enumerate()
        .filter(|(_, ch)| ch.m != 0)
        .map(|(c, _)| psi.channel_norm_sq(c))
        .sum()
}

/// Power of a uniformly sampled signal in the angular-frequency band [w_lo, w_hi]:
/// the mean is removed, a Hann window applied, and |DFT|² summed over the bins
/// inside the band.
pub fn band_power(samples: &[f64], dt: f64, w_lo: f64, w_hi: f64) -> f64 {
    let n = samples.len();
    if n < 2 {
        return 0.0;
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let x: Vec<f64> = samples
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let w = 0.5 - 0.5 * (2.0 * PI * k as f64 / (n - 1) as f64).cos();
            w * (v - mean)
        })
        .collect();
    let dw = 2.0 * PI / (n as f64 * dt);
    (0..=n / 2)
        .filter(|&j| (w_lo..=w_hi).contains(&(j as f64 * dw)))
        .map(|j| {
            let (mut re, mut im) = (0.0, 0.0);
            for (k, v) in x.iter().enumerate() {
                let phase = -2.0 * PI * ((j * k) % n) as f64 / n as f64;
                re += v * phase.cos();
                im += v * phase.sin();
            }
            re * re + im * im
        })
        .sum()
}
