use std::f64::consts::PI;

use num_complex::Complex64;

/// Normalized associated Legendre functions N_lm P_l^m(cos θ) including the
/// Condon–Shortley phase, for 0 ≤ m ≤ min(l, m_max), l ≤ l_max, so that
/// Y_lm(θ, φ) = value(l, m) e^{imφ}.
#[derive(Debug, Clone)]
pub struct LegendreTable {
    l_max: usize,
    m_max: usize,
    values: Vec<f64>,
}

impl LegendreTable {
    pub fn new(l_max: usize, m_max: usize, theta: f64) -> Self {
        let m_max = m_max.min(l_max);
        let (s, c) = theta.sin_cos();
        let stride = l_max + 1;
        let mut values = vec![0.0; stride * (m_max + 1)];
        let mut pmm = (1.0 / (4.0 * PI)).sqrt();
        for m in 0..=m_max {
            if m > 0 {
                pmm *= -((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * s;
            }
            let col = &mut values[m * stride..(m + 1) * stride];
            col[m] = pmm;
            if m < l_max {
                col[m + 1] = ((2 * m + 3) as f64).sqrt() * c * pmm;
            }
            for l in m + 2..=l_max {
                let a = |l: usize| (((4 * l * l - 1) as f64) / ((l * l - m * m) as f64)).sqrt();
                col[l] = a(l) * (c * col[l - 1] - col[l - 2] / a(l - 1));
            }
        }
        Self { l_max, m_max, values }
    }

    /// Value for m ≥ 0.
    pub fn get(&self, l: usize, m: usize) -> f64 {
        debug_assert!(m <= l && l <= self.l_max && m <= self.m_max);
        self.values[m * (self.l_max + 1) + l]
    }

    /// Y_lm(θ, φ) for either sign of m.
    pub fn ylm(&self, l: usize, m: i32, phi: f64) -> Complex64 {
        let am = m.unsigned_abs() as usize;
        let v = self.get(l, am) * Complex64::from_polar(1.0, am as f64 * phi);
        if m < 0 {
            // Y_l,−m = (−1)^m Y_lm*
            if am % 2 == 0 { v.conj() } else { -v.conj() }
        } else {
            v
        }
    }
}

/// Y_lm(θ, φ) with the Condon–Shortley phase.
pub fn spherical_harmonic(l: usize, m: i32, theta: f64, phi: f64) -> Complex64 {
    if m.unsigned_abs() as usize > l {
        return Complex64::new(0.0, 0.0);
    }
    LegendreTable::new(l, m.unsigned_abs() as usize, theta).ylm(l, m, phi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_order_closed_forms() {
        let (theta, phi) = (0.83f64, 2.1f64);
        let (s, c) = theta.sin_cos();
        let y = |l, m| spherical_harmonic(l, m, theta, phi);
        assert!((y(0, 0).re - 0.5 / PI.sqrt()).abs() < 1e-15);
        assert!((y(1, 0).re - (3.0 / (4.0 * PI)).sqrt() * c).abs() < 1e-15);
        let y11 = -(3.0 / (8.0 * PI)).sqrt() * s * Complex64::from_polar(1.0, phi);
        assert!((y(1, 1) - y11).norm() < 1e-15);
        assert!((y(1, -1) + y11.conj()).norm() < 1e-15);
        let y20 = (5.0 / (16.0 * PI)).sqrt() * (3.0 * c * c - 1.0);
        assert!((y(2, 0).re - y20).abs() < 1e-15);
        let y22 = 0.25 * (15.0 / (2.0 * PI)).sqrt() * s * s * Complex64::from_polar(1.0, 2.0 * phi);
        assert!((y(2, 2) - y22).norm() < 1e-15);
    }

    #[test]
    fn addition_theorem() {
        // Σ_m |Y_lm|² = (2l+1)/4π at any angle
        for l in [0, 3, 10, 40, 80] {
            for theta in [0.0, 0.4, 1.5, 3.0] {
                let t = LegendreTable::new(l, l, theta);
                let s: f64 = (-(l as i32)..=l as i32).map(|m| t.ylm(l, m, 0.3).norm_sqr()).sum();
                assert!((s / ((2 * l + 1) as f64 / (4.0 * PI)) - 1.0).abs() < 1e-12, "l = {l}");
            }
        }
    }
}
