//! Independent reference values shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use nondipole_tdse::pulse::Pulse;

/// Σ_f |⟨f|z|1s⟩|² per unit final energy for hydrogen, from the closed-form
/// photoionization cross section σ(ω) = 4π² α ω · D(E).
pub fn hydrogen_dipole_density(e: f64) -> f64 {
    let omega = e + 0.5;
    let k = (2.0 * e).sqrt();
    let x = if k < 1e-8 {
        (-4.0f64).exp()
    } else {
        (-4.0 * k.atan() / k).exp() / (1.0 - (-2.0 * PI / k).exp())
    };
    128.0 / (3.0 * omega) * (0.5 / omega).powi(4) * x
}

/// Oscillator strength 1s → np.
pub fn bound_oscillator_strength(n: u32) -> f64 {
    let n = n as f64;
    // Written with the ratio (n−1)/(n+1) so large n does not overflow.
    256.0 * n.powi(5) / (3.0 * (n * n - 1.0).powi(4)) * ((n - 1.0) / (n + 1.0)).powf(2.0 * n)
}

/// Fourier transform ∫ A(t) e^{iΩt} dt over the pulse window by composite Simpson.
pub fn vector_potential_transform(pulse: &Pulse, big_omega: f64, n: usize) -> (f64, f64) {
    let n = n + n % 2;
    let (a, b) = (pulse.t_start, pulse.t_end);
    let h = (b - a) / n as f64;
    let (mut re, mut im) = (0.0, 0.0);
    for i in 0..=n {
        let t = a + i as f64 * h;
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let v = w * pulse.vector_potential(t);
        re += v * (big_omega * t).cos();
        im += v * (big_omega * t).sin();
    }
    (re * h / 3.0, im * h / 3.0)
}

/// First-order perturbation theory for ionization from 1s by a pulse polarized
/// along z: P = ∫ dE D(E) |F̃(E + ½)|², with F̃(Ω) = iΩ Ã(Ω) because A vanishes
/// at both ends of the window.
pub fn tdpt_ionization(pulse: &Pulse, e_max: f64) -> f64 {
    let samples = ((pulse.t_end - pulse.t_start) / pulse.period() * 80.0).ceil() as usize + 200;
    let n = 4000;
    let h = e_max / n as f64;
    let mut sum = 0.0;
    for i in 0..=n {
        let e = i as f64 * h;
        let big = e + 0.5;
        let (re, im) = vector_potential_transform(pulse, big, samples);
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        sum += w * hydrogen_dipole_density(e) * big * big * (re * re + im * im);
    }
    sum * h / 3.0
}

/// Simpson integral of `f` on [a, b] with `n` (even) intervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Relative difference |a − b| / |b|.
pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}
