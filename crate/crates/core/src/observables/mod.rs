//! Quantities read off a propagated state: bound and continuum populations,
//! photoelectron energy and angular distributions, and time-series diagnostics.

mod angular;
mod energy;
mod signal;

pub use angular::{angular_distribution, coulomb_phase, AngularDistribution, AngularMesh, Hemisphere};
pub use energy::{energy_spectrum, EnergyGrid, EnergySpectrum};
pub use signal::{band_power, m_population};

use num_complex::Complex64;

use crate::angular::{Channel, ChannelBasis};
use crate::error::{Error, Result};
use crate::hamiltonian::{SpectralSpace, WavefunctionState};

/// Amplitudes of a state on the field-free eigenstates of every channel.
#[derive(Debug, Clone)]
pub struct SpectralProjection {
    pub channels: Vec<Channel>,
    /// E_{n,l} of the retained states, per channel.
    pub energies: Vec<Vec<f64>>,
    /// ⟨φ_{n,l,m}|ψ⟩, per channel.
    pub amplitudes: Vec<Vec<Complex64>>,
    /// Norm already removed by an absorber.
    pub absorbed: f64,
    /// Time of the projected state.
    pub t: f64,
    pub z: f64,
}

/// Reads the amplitudes off `psi`, which is already expressed in the eigenbasis.
pub fn project(psi: &WavefunctionState, space: &SpectralSpace, channels: &ChannelBasis) -> Result<SpectralProjection> {
    let n = space.n_retained();
    if psi.n_radial() != n || psi.n_channels() != channels.len() {
        return Err(Error::BasisMismatch(format!(
            "state has {} × {} coefficients, the basis {} × {}",
            psi.n_channels(),
            psi.n_radial(),
            channels.len(),
            n
        )));
    }
    if channels.l_max() > space.l_max() {
        return Err(Error::BasisMismatch(format!(
            "channels reach l = {} but spectra only l = {}",
            channels.l_max(),
            space.l_max()
        )));
    }
    let coeffs = psi.coefficients();
    Ok(SpectralProjection {
        channels: channels.channels().to_vec(),
        energies: channels.channels().iter().map(|ch| space.energies(ch.l).to_vec()).collect(),
        amplitudes: coeffs.chunks_exact(n).map(<[Complex64]>::to_vec).collect(),
        absorbed: 0.0,
        t: psi.t,
        z: space.z,
    })
}

impl SpectralProjection {
    pub fn with_absorbed(mut self, absorbed: f64) -> Self {
        self.absorbed = absorbed;
        self
    }

    fn population(&self, keep: impl Fn(f64) -> bool) -> f64 {
        self.energies
            .iter()
            .zip(&self.amplitudes)
            .flat_map(|(e, a)| e.iter().zip(a))
            .filter(|(e, _)| keep(**e))
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.population(|_| true)
    }

    /// Σ |c|² over states with E < 0.
    pub fn bound_population(&self) -> f64 {
        self.population(|e| e < 0.0)
    }

    pub fn continuum_population(&self) -> f64 {
        self.population(|e| e >= 0.0)
    }

    /// Population of channel `c`.
    pub fn channel_population(&self, c: usize) -> f64 {
        self.amplitudes[c].iter().map(|a| a.norm_sqr()).sum()
    }

    /// |1 − (bound + continuum + absorbed)|
    pub fn bookkeeping_error(&self) -> f64 {
        (1.0 - (self.bound_population() + self.continuum_population() + self.absorbed)).abs()
    }
}

/// 1 − Σ_bound |c|². Absorbed norm is missing from the state and so counts as ionized.
pub fn ionization_probability(proj: &SpectralProjection) -> f64 {
    (1.0 - proj.bound_population()).clamp(0.0, 1.0)
}
