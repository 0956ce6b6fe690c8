use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{EnergyGrid, SpectralProjection};
use crate::angular::{Channel, LegendreTable, Symmetry};
use crate::error::{Error, Result};
use crate::radial::quadrature::gauss_legendre;

/// Coulomb phase σ_l = arg Γ(l + 1 − iZ/k).
pub fn coulomb_phase(l: usize, z: f64, k: f64) -> f64 {
    let eta = z / k;
    let sigma0 = -ln_gamma(Complex64::new(1.0, eta)).im;
    sigma0 - (1..=l).map(|s| (eta / s as f64).atan()).sum::<f64>()
}

/// ln Γ(z) for Re z > 0, continuous in z: upward recurrence to |z| ≥ 11, then Stirling.
fn ln_gamma(z: Complex64) -> Complex64 {
    let shift = 10;
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..shift {
        acc += (z + j as f64).ln();
    }
    let w = z + shift as f64;
    let inv = w.inv();
    let inv2 = inv * inv;
    let series = inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)));
    (w - 0.5) * w.ln() - w + 0.5 * (2.0 * PI).ln() + series - acc
}

/// Gauss–Legendre in cos θ times a uniform, half-offset φ grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngularMesh {
    pub theta: Vec<f64>,
    /// Weights in cos θ; they sum to 2.
    pub theta_weights: Vec<f64>,
    pub phi: Vec<f64>,
}

impl AngularMesh {
    pub fn new(n_theta: usize, n_phi: usize) -> Result<Self> {
        if n_theta == 0 || n_phi == 0 {
            return Err(Error::invalid("angular mesh needs at least one node per axis"));
        }
        let (x, w) = gauss_legendre(n_theta);
        // θ ascending means cos θ descending.
        let theta = x.iter().rev().map(|c| c.acos()).collect();
        let theta_weights = w.into_iter().rev().collect();
        let phi = (0..n_phi).map(|j| 2.0 * PI * (j as f64 + 0.5) / n_phi as f64).collect();
        Ok(Self {
            theta,
            theta_weights,
            phi,
        })
    }

    /// Smallest mesh that integrates products of two partial waves up to `l_max` exactly,
    /// with an extra margin for the hemisphere sums.
    pub fn for_l_max(l_max: usize) -> Self {
        Self::new((2 * l_max + 2).max(48), 96).expect("mesh sizes are positive")
    }

    pub fn phi_weight(&self) -> f64 {
        2.0 * PI / self.phi.len() as f64
    }

    /// Unit vector (x, y, z) of node (i, j).
    pub fn direction(&self, i: usize, j: usize) -> [f64; 3] {
        let (st, ct) = self.theta[i].sin_cos();
        let (sp, cp) = self.phi[j].sin_cos();
        [st * cp, st * sp, ct]
    }
}

/// Half-space along the propagation axis x.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hemisphere {
    /// x > 0
    Forward,
    /// x < 0
    Backward,
}

/// dP/dΩ integrated over photoelectron energy.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularDistribution {
    pub mesh: AngularMesh,
    /// θ-major: values[i · n_phi + j] at (theta[i], phi[j]).
    pub values: Vec<f64>,
}

impl AngularDistribution {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.mesh.phi.len() + j]
    }

    fn weighted_sum(&self, keep: impl Fn([f64; 3]) -> bool) -> f64 {
        let dphi = self.mesh.phi_weight();
        let np = self.mesh.phi.len();
        let mut total = 0.0;
        for (i, wt) in self.mesh.theta_weights.iter().enumerate() {
            for j in 0..np {
                if keep(self.mesh.direction(i, j)) {
                    total += wt * dphi * self.values[i * np + j];
                }
            }
        }
        total
    }

    /// ∫ dP/dΩ dΩ
    pub fn integral(&self) -> f64 {
        self.weighted_sum(|_| true)
    }

    pub fn hemisphere(&self, h: Hemisphere) -> f64 {
        match h {
            Hemisphere::Forward => self.weighted_sum(|d| d[0] > 0.0),
            Hemisphere::Backward => self.weighted_sum(|d| d[0] < 0.0),
        }
    }

    /// Probability inside the cone of half-angle `half_angle` around `axis` (unit vector).
    pub fn cone(&self, axis: [f64; 3], half_angle: f64) -> f64 {
        let c = half_angle.cos();
        self.weighted_sum(|d| d[0] * axis[0] + d[1] * axis[1] + d[2] * axis[2] > c)
    }
}

/// Energy-integrated photoelectron angular distribution.
///
/// Box-state amplitudes are turned into amplitude densities c/√ΔE, referred to
/// time `t_ref` (removing the free phase e^{−iE(t − t_ref)} so that they vary
/// slowly with E), interpolated onto `grid` and rescaled per channel to keep its
/// continuum population. Partial waves are then summed coherently with the
/// incoming-wave factor (−i)^l e^{iσ_l}, and energies incoherently:
///
///   dP/dΩ = Σ_k ΔE_k |Σ_{l,m} (−i)^l e^{iσ_l(E_k)} a_{lm}(E_k) Y_{lm}(Ω)|².
///
/// With these normalizations ∫ dP/dΩ dΩ equals the continuum population.
pub fn angular_distribution(
    proj: &SpectralProjection,
    grid: &EnergyGrid,
    mesh: &AngularMesh,
    t_ref: f64,
) -> Result<AngularDistribution> {
    let nodes = grid.nodes();
    let weights = grid.weights();
    if nodes[0] <= 0.0 {
        return Err(Error::invalid("angular distribution grid must lie above threshold"));
    }
    let dt = proj.t - t_ref;
    // a[c][k], including the partial-wave phase.
    let mut densities: Vec<Vec<Complex64>> = Vec::with_capacity(proj.channels.len());
    for ((ch, energies), amps) in proj.channels.iter().zip(&proj.energies).zip(&proj.amplitudes) {
        let first = energies.partition_point(|&e| e < 0.0);
        let levels = &energies[first..];
        let amps = &amps[first..];
        let mut a = vec![Complex64::new(0.0, 0.0); nodes.len()];
        if levels.len() >= 2 {
            let spacing: Vec<f64> = (0..levels.len())
                .map(|i| {
                    let hi = levels[(i + 1).min(levels.len() - 1)];
                    let lo = levels[i.saturating_sub(1)];
                    (hi - lo) / if i == 0 || i == levels.len() - 1 { 1.0 } else { 2.0 }
                })
                .collect();
            let dens: Vec<Complex64> = levels
                .iter()
                .zip(amps)
                .zip(&spacing)
                .map(|((e, c), w)| c * Complex64::from_polar(1.0, e * dt) / w.sqrt())
                .collect();
            for (k, &e) in nodes.iter().enumerate() {
                if e < levels[0] || e > levels[levels.len() - 1] {
                    continue;
                }
                let i = levels.partition_point(|&x| x <= e).clamp(1, levels.len() - 1);
                let s = (e - levels[i - 1]) / (levels[i] - levels[i - 1]);
                a[k] = dens[i - 1] * (1.0 - s) + dens[i] * s;
            }
            let target: f64 = amps.iter().map(|c| c.norm_sqr()).sum();
            let have: f64 = a.iter().zip(weights).map(|(x, w)| x.norm_sqr() * w).sum();
            if have > 0.0 {
                let scale = (target / have).sqrt();
                for x in &mut a {
                    *x *= scale;
                }
            }
        }
        let il = Complex64::new(0.0, -1.0).powu(ch.l as u32);
        for (x, &e) in a.iter_mut().zip(nodes) {
            *x *= il * Complex64::from_polar(1.0, coulomb_phase(ch.l, proj.z, (2.0 * e).sqrt()));
        }
        densities.push(a);
    }

    let l_max = proj.channels.iter().map(|c| c.l).max().unwrap_or(0);
    let m_max = proj.channels.iter().map(|c| c.m.unsigned_abs() as usize).max().unwrap_or(0);
    let symmetry = if proj.channels.iter().any(|c| c.m < 0) {
        Symmetry::Full
    } else {
        Symmetry::ReflectionEven
    };
    let np = mesh.phi.len();
    let mut values = vec![0.0; mesh.theta.len() * np];
    let mut psi_k = vec![Complex64::new(0.0, 0.0); nodes.len()];
    for (i, &theta) in mesh.theta.iter().enumerate() {
        let table = LegendreTable::new(l_max, m_max, theta);
        for (j, &phi) in mesh.phi.iter().enumerate() {
            psi_k.fill(Complex64::new(0.0, 0.0));
            for (ch, a) in proj.channels.iter().zip(&densities) {
                let y = channel_function(&table, *ch, symmetry, phi);
                for (p, x) in psi_k.iter_mut().zip(a) {
                    *p += x * y;
                }
            }
            values[i * np + j] = psi_k.iter().zip(weights).map(|(p, w)| p.norm_sqr() * w).sum();
        }
    }
    Ok(AngularDistribution {
        mesh: mesh.clone(),
        values,
    })
}

fn channel_function(table: &LegendreTable, ch: Channel, symmetry: Symmetry, phi: f64) -> Complex64 {
    match (symmetry, ch.m) {
        (Symmetry::Full, m) | (Symmetry::ReflectionEven, m @ 0) => table.ylm(ch.l, m, phi),
        (Symmetry::ReflectionEven, m) => {
            let parity = if m % 2 == 0 { 1.0 } else { -1.0 };
            (table.ylm(ch.l, m, phi) + parity * table.ylm(ch.l, -m, phi)) * std::f64::consts::FRAC_1_SQRT_2
        }
    }
}

#[cfg(test)]
pub(super) fn ln_gamma_for_tests(z: Complex64) -> Complex64 {
    ln_gamma(z)
}
