//! Linearly polarized laser pulse: envelope shapes, the vector potential and the
//! time-dependent scalars that multiply each interaction operator.
//!
//! The field is polarized along z and propagates along x. All spatial dependence
//! of the field has already been expanded to first order around the retarded time,
//! so every quantity here is evaluated at the laboratory time `t`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Envelope family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EnvelopeShape {
    /// sin²(πt/T) on [0, T], zero elsewhere. `T` is the total length.
    SinSquared,
    /// exp[−4 ln2 (t/T)²] centered at t = 0. `T` is the FWHM.
    Gaussian,
    /// Symmetric two-sided Fermi function with steepness `sigma` (1/a.u.), centered at t = 0.
    FermiDirac { sigma: f64 },
}

/// All time-dependent coefficients the interaction Hamiltonians need at one instant.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CouplingScalars {
    /// A(t)
    pub a: f64,
    /// A(t) A'(t)
    pub a_aprime: f64,
    /// f²(t)
    pub f2: f64,
    /// f(t) f'(t)
    pub f_fprime: f64,
    /// f²(t) cos(2ωt + 2φ)
    pub f2_cos2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    pub shape: EnvelopeShape,
    /// Peak electric field, a.u.
    pub e0: f64,
    /// Carrier angular frequency, a.u.
    pub omega: f64,
    /// Carrier-envelope phase, radians.
    pub cep: f64,
    /// Duration parameter T, a.u. (meaning depends on the shape).
    pub duration: f64,
    pub t_start: f64,
    pub t_end: f64,
}

impl Pulse {
    /// Pulse with the default simulation window for its shape and zero CEP.
    pub fn new(shape: EnvelopeShape, e0: f64, omega: f64, duration: f64) -> Result<Self> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::invalid(format!("omega must be > 0, got {omega}")));
        }
        if !(e0 >= 0.0 && e0.is_finite()) {
            return Err(Error::invalid(format!("e0 must be >= 0, got {e0}")));
        }
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(Error::invalid(format!("duration must be > 0, got {duration}")));
        }
        if let EnvelopeShape::FermiDirac { sigma } = shape {
            if !(sigma > 0.0 && sigma.is_finite()) {
                return Err(Error::invalid(format!("sigma must be > 0, got {sigma}")));
            }
        }
        let (t_start, t_end) = default_window(shape, duration);
        Ok(Self {
            shape,
            e0,
            omega,
            cep: 0.0,
            duration,
            t_start,
            t_end,
        })
    }

    /// Duration given as a number of optical cycles of the carrier.
    pub fn with_cycles(shape: EnvelopeShape, e0: f64, omega: f64, n_cycles: f64) -> Result<Self> {
        if !(n_cycles > 0.0) {
            return Err(Error::invalid(format!("n_cycles must be > 0, got {n_cycles}")));
        }
        if !(omega > 0.0) {
            return Err(Error::invalid(format!("omega must be > 0, got {omega}")));
        }
        Self::new(shape, e0, omega, n_cycles * 2.0 * PI / omega)
    }

    pub fn with_cep(mut self, cep: f64) -> Self {
        self.cep = cep;
        self
    }

    pub fn with_window(mut self, t_start: f64, t_end: f64) -> Result<Self> {
        if !(t_start < t_end) || !t_start.is_finite() || !t_end.is_finite() {
            return Err(Error::invalid(format!(
                "time window must satisfy t_start < t_end, got [{t_start}, {t_end}]"
            )));
        }
        self.t_start = t_start;
        self.t_end = t_end;
        Ok(self)
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega
    }

    /// Peak vector potential E₀/ω, which is also the classical quiver velocity.
    pub fn a0(&self) -> f64 {
        self.e0 / self.omega
    }

    /// Classical excursion amplitude E₀/ω².
    pub fn quiver_amplitude(&self) -> f64 {
        self.e0 / (self.omega * self.omega)
    }

    pub fn envelope(&self, t: f64) -> f64 {
        let big_t = self.duration;
        match self.shape {
            EnvelopeShape::SinSquared => {
                if (0.0..=big_t).contains(&t) {
                    let s = (PI * t / big_t).sin();
                    s * s
                } else {
                    0.0
                }
            }
            EnvelopeShape::Gaussian => {
                let x = t / big_t;
                (-4.0 * std::f64::consts::LN_2 * x * x).exp()
            }
            EnvelopeShape::FermiDirac { sigma } => {
                let (la, lb) = fermi_factors(sigma, big_t, t);
                let norm = 1.0 + (-sigma * big_t / 2.0).exp();
                norm * norm * la * lb
            }
        }
    }

    pub fn envelope_deriv(&self, t: f64) -> f64 {
        let big_t = self.duration;
        match self.shape {
            EnvelopeShape::SinSquared => {
                if (0.0..=big_t).contains(&t) {
                    PI / big_t * (2.0 * PI * t / big_t).sin()
                } else {
                    0.0
                }
            }
            EnvelopeShape::Gaussian => {
                -8.0 * std::f64::consts::LN_2 * t / (big_t * big_t) * self.envelope(t)
            }
            EnvelopeShape::FermiDirac { sigma } => {
                let (la, lb) = fermi_factors(sigma, big_t, t);
                self.envelope(t) * sigma * (la - lb)
            }
        }
    }

    pub fn vector_potential(&self, t: f64) -> f64 {
        self.a0() * self.envelope(t) * (self.omega * t + self.cep).sin()
    }

    /// Evaluates the envelope and carrier once and derives every coupling scalar from them.
    pub fn coupling_scalars(&self, t: f64) -> CouplingScalars {
        let f = self.envelope(t);
        let fp = self.envelope_deriv(t);
        let phase = self.omega * t + self.cep;
        let (s, c) = phase.sin_cos();
        let a0 = self.a0();
        let a = a0 * f * s;
        let aprime = a0 * (fp * s + f * self.omega * c);
        CouplingScalars {
            a,
            a_aprime: a * aprime,
            f2: f * f,
            f_fprime: f * fp,
            f2_cos2: f * f * (2.0 * phase).cos(),
        }
    }
}

fn default_window(shape: EnvelopeShape, duration: f64) -> (f64, f64) {
    match shape {
        EnvelopeShape::SinSquared => (0.0, duration),
        EnvelopeShape::Gaussian => (-3.0 * duration, 3.0 * duration),
        EnvelopeShape::FermiDirac { sigma } => {
            let half = duration / 2.0 + 10.0 / sigma;
            (-half, half)
        }
    }
}

/// 1/(e^x + 1) without overflow.
fn fermi(x: f64) -> f64 {
    if x > 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

fn fermi_factors(sigma: f64, big_t: f64, t: f64) -> (f64, f64) {
    (
        fermi(sigma * (t - big_t / 2.0)),
        fermi(sigma * (-t - big_t / 2.0)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sin2(t: f64) -> Pulse {
        Pulse::new(EnvelopeShape::SinSquared, 1.0, 1.0, t).unwrap()
    }

    fn fd_diff(p: &Pulse, t: f64, h: f64) -> f64 {
        (p.envelope(t + h) - p.envelope(t - h)) / (2.0 * h)
    }

    #[test]
    fn envelope_examples() {
        let p = sin2(10.0);
        assert!((p.envelope(5.0) - 1.0).abs() < 1e-15);
        assert_eq!(p.envelope(12.0), 0.0);
        assert_eq!(p.envelope(-0.1), 0.0);

        let g = Pulse::new(EnvelopeShape::Gaussian, 1.0, 1.0, 8.0).unwrap();
        assert!((g.envelope(4.0) - 0.5).abs() < 1e-15);
        assert!((g.envelope(-4.0) - 0.5).abs() < 1e-15);

        for (sigma, big_t) in [(0.4, 13.0), (0.8, 2.0), (1.6, 100.0)] {
            let f = Pulse::new(EnvelopeShape::FermiDirac { sigma }, 1.0, 1.0, big_t).unwrap();
            assert!((f.envelope(0.0) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn envelope_deriv_examples() {
        let p = sin2(10.0);
        assert!(p.envelope_deriv(5.0).abs() < 1e-15);
        assert!((p.envelope_deriv(2.5) - PI / 10.0).abs() < 1e-15);
        assert_eq!(p.envelope(0.0), 0.0);
        assert!(p.envelope(10.0).abs() < 1e-30);
        assert_eq!(p.envelope_deriv(0.0), 0.0);
        assert!(p.envelope_deriv(10.0).abs() < 1e-15);

        let g = Pulse::new(EnvelopeShape::Gaussian, 1.0, 1.0, 8.0).unwrap();
        let fd = fd_diff(&g, 1.0, 1e-5);
        assert!((g.envelope_deriv(1.0) - fd).abs() / fd.abs() < 1e-8);
    }

    #[test]
    fn default_windows() {
        let g = Pulse::new(EnvelopeShape::Gaussian, 1.0, 1.0, 4.0).unwrap();
        assert_eq!((g.t_start, g.t_end), (-12.0, 12.0));
        // f(±3T) = 2^-36
        assert!((g.envelope(g.t_end) - 2f64.powi(-36)).abs() < 1e-24);

        for sigma in [0.4, 0.8, 1.6] {
            let f = Pulse::with_cycles(EnvelopeShape::FermiDirac { sigma }, 1.0, 3.5, 7.5).unwrap();
            assert!((f.t_start + f.t_end).abs() < 1e-12);
            // L(10) times the normalization (1 + e^{−σT/2})²
            let edge = (1.0 + (-sigma * f.duration / 2.0).exp()).powi(2) / (10f64.exp() + 1.0);
            assert!((f.envelope(f.t_end) / edge - 1.0).abs() < 1e-6);
            assert!(f.envelope(f.t_end) < 1e-4);
        }
    }

    #[test]
    fn vector_potential_examples() {
        let p = Pulse::with_cycles(EnvelopeShape::SinSquared, 0.0, 3.5, 15.0).unwrap();
        for i in 0..50 {
            assert_eq!(p.vector_potential(i as f64 * 0.7), 0.0);
        }
        let p = Pulse::new(EnvelopeShape::SinSquared, 2.0, 1.0, 2.0 * PI * 15.0).unwrap();
        let t = p.duration / 2.0;
        assert!((p.vector_potential(t) - 2.0 * t.sin()).abs() < 1e-14);

        let p = Pulse::new(EnvelopeShape::FermiDirac { sigma: 0.8 }, 3.0, 2.0, 9.0)
            .unwrap()
            .with_cep(0.3);
        for i in 0..40 {
            let t = -10.0 + 0.5 * i as f64;
            let composed = 3.0 / 2.0 * p.envelope(t) * (2.0 * t + 0.3).sin();
            assert_eq!(p.vector_potential(t), composed);
        }
    }

    #[test]
    fn coupling_scalar_examples() {
        // Without a field, A and AA' vanish and every envelope term enters with (E₀/ω)² = 0.
        let p = Pulse::with_cycles(EnvelopeShape::SinSquared, 0.0, 3.5, 10.0).unwrap();
        let s = p.coupling_scalars(1.3);
        assert_eq!((s.a, s.a_aprime), (0.0, 0.0));
        let a02 = p.a0().powi(2);
        assert_eq!([a02 * s.f2, a02 * s.f_fprime, a02 * s.f2_cos2], [0.0; 3]);

        let p = Pulse::with_cycles(EnvelopeShape::SinSquared, 5.0, 3.5, 10.0).unwrap();
        assert!(p.coupling_scalars(p.duration / 2.0).f_fprime.abs() < 1e-14);
    }

    #[test]
    fn a_aprime_matches_half_derivative_of_a_squared() {
        let pulses = [
            Pulse::with_cycles(EnvelopeShape::SinSquared, 10.0, 3.5, 5.0).unwrap(),
            Pulse::new(EnvelopeShape::Gaussian, 3.0, 1.2, 6.0).unwrap().with_cep(0.7),
            Pulse::with_cycles(EnvelopeShape::FermiDirac { sigma: 0.8 }, 15.0, 3.5, 7.5).unwrap(),
        ];
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for p in &pulses {
            let mut checked = 0;
            while checked < 200 {
                let t = rng.random_range(p.t_start + 0.01..p.t_end - 0.01);
                let s = p.coupling_scalars(t);
                let h = 1e-5;
                let half_a2 = |t: f64| 0.5 * p.vector_potential(t).powi(2);
                let fd = (half_a2(t + h) - half_a2(t - h)) / (2.0 * h);
                // Skip near-zeros of AA', where a relative comparison is meaningless.
                if s.a_aprime.abs() < 1e-3 * p.a0().powi(2) * p.omega {
                    continue;
                }
                assert!(
                    ((s.a_aprime - fd) / s.a_aprime).abs() < 1e-7,
                    "t = {t}: {} vs {fd}",
                    s.a_aprime
                );
                checked += 1;
            }
        }
    }

    #[test]
    fn diamagnetic_decomposition_identity() {
        let c = crate::units::SPEED_OF_LIGHT;
        let p = Pulse::with_cycles(EnvelopeShape::SinSquared, 30.0, 3.5, 15.0)
            .unwrap()
            .with_cep(0.4);
        for i in 1..500 {
            let t = p.duration * i as f64 / 500.0;
            let s = p.coupling_scalars(t);
            let lhs = s.a * s.a / (2.0 * c);
            let rhs = p.a0().powi(2) / (4.0 * c) * (s.f2 - s.f2_cos2);
            if lhs.abs() > 1e-10 {
                assert!(((lhs - rhs) / lhs).abs() < 1e-12, "t = {t}");
            }
        }
    }

    #[test]
    fn fermi_dirac_extreme_arguments_are_finite() {
        let p = Pulse::new(EnvelopeShape::FermiDirac { sigma: 50.0 }, 1.0, 1.0, 40.0).unwrap();
        for t in [-1e4, -100.0, -20.0, 0.0, 20.0, 100.0, 1e4] {
            assert!(p.envelope(t).is_finite());
            assert!(p.envelope_deriv(t).is_finite());
        }
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(Pulse::new(EnvelopeShape::SinSquared, 1.0, 0.0, 1.0).is_err());
        assert!(Pulse::new(EnvelopeShape::SinSquared, -1.0, 1.0, 1.0).is_err());
        assert!(Pulse::new(EnvelopeShape::SinSquared, 1.0, 1.0, 0.0).is_err());
        assert!(Pulse::new(EnvelopeShape::FermiDirac { sigma: 0.0 }, 1.0, 1.0, 1.0).is_err());
        let p = sin2(1.0);
        assert!(p.with_window(1.0, 1.0).is_err());
    }

    fn any_pulse() -> impl Strategy<Value = Pulse> {
        let shape = prop_oneof![
            Just(EnvelopeShape::SinSquared),
            Just(EnvelopeShape::Gaussian),
            (0.2f64..3.0).prop_map(|sigma| EnvelopeShape::FermiDirac { sigma }),
        ];
        (shape, 0.0f64..50.0, 0.5f64..5.0, 2.0f64..20.0, -PI..PI).prop_map(
            |(shape, e0, omega, cycles, cep)| {
                Pulse::with_cycles(shape, e0, omega, cycles).unwrap().with_cep(cep)
            },
        )
    }

    proptest! {
        #[test]
        fn envelope_is_bounded(p in any_pulse(), u in 0.0f64..1.0) {
            let t = p.t_start - 5.0 + u * (p.t_end - p.t_start + 10.0);
            let f = p.envelope(t);
            prop_assert!(f >= 0.0);
            prop_assert!(f <= 1.0 + 1e-12);
        }

        #[test]
        fn envelope_deriv_matches_finite_difference(p in any_pulse(), u in 0.02f64..0.98) {
            let t = p.t_start + u * (p.t_end - p.t_start);
            let h = 1e-5;
            let fd = fd_diff(&p, t, h);
            let an = p.envelope_deriv(t);
            let scale = an.abs().max(1e-3 / p.duration);
            // the absolute floor covers round-off in the difference quotient
            prop_assert!((an - fd).abs() < 1e-7 * scale + 1e-9, "t={} an={} fd={}", t, an, fd);
        }

        #[test]
        fn fermi_dirac_is_symmetric(sigma in 0.2f64..3.0, big_t in 1.0f64..60.0, t in 0.0f64..80.0) {
            let p = Pulse::new(EnvelopeShape::FermiDirac { sigma }, 1.0, 1.0, big_t).unwrap();
            prop_assert!((p.envelope(t) - p.envelope(-t)).abs() < 1e-14);
        }
    }
}
