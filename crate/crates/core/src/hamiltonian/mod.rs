//! Interaction Hamiltonians in the field-free spectral basis.
//!
//! All five models share H₀ and the velocity-gauge dipole coupling A(t) p_z. They
//! differ in the first-order correction along the propagation axis x:
//!
//! | model        | correction                                   |
//! |--------------|----------------------------------------------|
//! | `Dipole`     | none                                         |
//! | `FirstOrder` | −(1/c) A A′ x                                |
//! | `EnvelopeVG` | −(1/2c) (E₀/ω)² f f′ x                       |
//! | `PGFull`     | (1/4c) (E₀/ω)² f² [1 − cos(2ωt + 2φ)] p_x    |
//! | `PGEnvelope` | (1/4c) (E₀/ω)² f² p_x                        |
//!
//! The spatially constant A²/2 term only contributes a global phase and is omitted.

mod kernel;
mod space;
mod state;

pub use space::SpectralSpace;
pub use state::WavefunctionState;
pub(crate) use state::{axpy_raw, inner_raw, scale_raw};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::angular::{coupling_tables, ChannelBasis, RadialKind};
use crate::error::{Error, Result};
use crate::pulse::Pulse;
use crate::radial::project_band;
use crate::units::SPEED_OF_LIGHT;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InteractionModel {
    Dipole,
    FirstOrder,
    EnvelopeVg,
    PgFull,
    PgEnvelope,
}

impl InteractionModel {
    pub const ALL: [InteractionModel; 5] = [
        InteractionModel::Dipole,
        InteractionModel::FirstOrder,
        InteractionModel::EnvelopeVg,
        InteractionModel::PgFull,
        InteractionModel::PgEnvelope,
    ];

    pub fn name(self) -> &'static str {
        match self {
            InteractionModel::Dipole => "dipole",
            InteractionModel::FirstOrder => "first_order",
            InteractionModel::EnvelopeVg => "envelope_vg",
            InteractionModel::PgFull => "pg_full",
            InteractionModel::PgEnvelope => "pg_envelope",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == s)
    }

    /// Whether the model has an x-coupling (and therefore needs radial r blocks).
    pub fn uses_position(self) -> bool {
        matches!(self, InteractionModel::FirstOrder | InteractionModel::EnvelopeVg)
    }

    pub fn is_dipole(self) -> bool {
        self == InteractionModel::Dipole
    }

    /// Coefficients of p_z, p_x and x at time t.
    pub fn scalars(self, pulse: &Pulse, t: f64) -> InteractionScalars {
        let s = pulse.coupling_scalars(t);
        let c = SPEED_OF_LIGHT;
        let a02 = pulse.a0().powi(2);
        let (px, x) = match self {
            InteractionModel::Dipole => (0.0, 0.0),
            InteractionModel::FirstOrder => (0.0, -s.a_aprime / c),
            InteractionModel::EnvelopeVg => (0.0, -a02 * s.f_fprime / (2.0 * c)),
            InteractionModel::PgFull => (a02 * (s.f2 - s.f2_cos2) / (4.0 * c), 0.0),
            InteractionModel::PgEnvelope => (a02 * s.f2 / (4.0 * c), 0.0),
        };
        InteractionScalars { pz: s.a, px, x }
    }
}

impl std::fmt::Display for InteractionModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// H(t) = H₀ + pz · p_z + px · p_x + x · x
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct InteractionScalars {
    pub pz: f64,
    pub px: f64,
    pub x: f64,
}

/// Couplings between the channels of l and l + 1.
#[derive(Debug, Clone)]
struct PairBlock {
    l: usize,
    /// 1 when only the gradient block is stored, 2 with the r block below it.
    stacked: usize,
    /// [G; R] with G = V_{l+1}ᵀ (d/dr − (l+1)/r) V_l and R = V_{l+1}ᵀ r V_l,
    /// column-major, (stacked · n) × n. The reverse coupling reads it transposed.
    m: Vec<f64>,
    links: Vec<Link>,
}

/// Angular factors between channel `lo` (angular momentum l) and `hi` (l + 1).
#[derive(Debug, Clone, Copy, PartialEq)]
struct Link {
    lo: usize,
    hi: usize,
    /// ⟨hi| cos θ |lo⟩
    cz: f64,
    /// ⟨hi| sin θ cos φ |lo⟩
    cx: f64,
}

#[derive(Debug, Clone)]
pub struct AssembledHamiltonian {
    model: InteractionModel,
    pulse: Pulse,
    channels: ChannelBasis,
    n: usize,
    /// E_{n,l} for each channel, concatenated.
    diagonal: Vec<f64>,
    pairs: Vec<PairBlock>,
}

impl AssembledHamiltonian {
    pub fn assemble(model: InteractionModel, pulse: Pulse, channels: ChannelBasis, space: &SpectralSpace) -> Result<Self> {
        if channels.l_max() > space.l_max() {
            return Err(Error::BasisMismatch(format!(
                "channels reach l = {} but spectra only l = {}",
                channels.l_max(),
                space.l_max()
            )));
        }
        let n = space.n_retained();
        let diagonal = channels
            .channels()
            .iter()
            .flat_map(|ch| space.energies(ch.l).iter().copied())
            .collect();

        let tables = coupling_tables(&channels);
        let stacked = if model.uses_position() { 2 } else { 1 };
        let pairs = (0..channels.l_max())
            .into_par_iter()
            .map(|l| {
                let (lo, hi) = (&space.spectra[l], &space.spectra[l + 1]);
                let grad = project_band(&space.ops.ddr.combine(1.0, &space.ops.inv_r, -((l + 1) as f64)), hi, n, lo, n);
                let r = (stacked == 2).then(|| project_band(&space.ops.r, hi, n, lo, n));
                let mut m = DMatrix::<f64>::zeros(stacked * n, n);
                m.rows_mut(0, n).copy_from(&grad);
                if let Some(r) = &r {
                    m.rows_mut(n, n).copy_from(r);
                }
                let mut links: Vec<Link> = Vec::new();
                for lo_ch in channels.l_block(l) {
                    for hi_ch in channels.l_block(l + 1) {
                        let find = |tab: &[crate::angular::CouplingEntry]| {
                            tab.iter()
                                .filter(|e| e.row == hi_ch && e.col == lo_ch && e.kind == RadialKind::R)
                                .map(|e| e.coeff)
                                .sum::<f64>()
                        };
                        let (cz, cx) = (find(&tables.z), find(&tables.x));
                        if cz != 0.0 || cx != 0.0 {
                            links.push(Link { lo: lo_ch, hi: hi_ch, cz, cx });
                        }
                    }
                }
                PairBlock {
                    l,
                    stacked,
                    m: m.as_slice().to_vec(),
                    links,
                }
            })
            .collect();
        Ok(Self {
            model,
            pulse,
            channels,
            n,
            diagonal,
            pairs,
        })
    }

    pub fn model(&self) -> InteractionModel {
        self.model
    }

    pub fn pulse(&self) -> &Pulse {
        &self.pulse
    }

    pub fn channels(&self) -> &ChannelBasis {
        &self.channels
    }

    pub fn n_radial(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.n * self.channels.len()
    }

    /// Number of channel pairs with a nonzero coupling block.
    pub fn n_coupling_blocks(&self) -> usize {
        self.pairs.iter().map(|p| p.links.len()).sum()
    }

    /// Field-free energies of every basis state, channel-major.
    pub fn field_free_energies(&self) -> &[f64] {
        &self.diagonal
    }

    /// The state with all weight in the lowest s state.
    pub fn ground_state(&self, t: f64) -> WavefunctionState {
        let ch = self.channels.index(0, 0).expect("channel (0, 0) is always present");
        WavefunctionState::basis_state(self.channels.len(), self.n, ch, 0, t)
    }

    pub fn zero_state(&self, t: f64) -> WavefunctionState {
        WavefunctionState::zeros(self.channels.len(), self.n, t)
    }

    /// H(t) ψ as a channel-major complex vector.
    pub fn apply(&self, psi: &WavefunctionState, t: f64) -> Vec<Complex64> {
        let mut out = self.zero_state(t);
        self.apply_raw(t, psi.raw(), out.raw_mut());
        out.coefficients()
    }

    /// out = H(t) input on split-complex buffers.
    pub fn apply_raw(&self, t: f64, input: &[f64], out: &mut [f64]) {
        self.apply_with(self.model.scalars(&self.pulse, t), input, out);
    }

    pub(crate) fn apply_with(&self, s: InteractionScalars, input: &[f64], out: &mut [f64]) {
        let n = self.n;
        assert_eq!(input.len(), 2 * n * self.channels.len());
        assert_eq!(out.len(), input.len());
        for (c, e) in self.diagonal.chunks_exact(n).enumerate() {
            let (ir, ii) = input[2 * c * n..2 * (c + 1) * n].split_at(n);
            let (or, oi) = out[2 * c * n..2 * (c + 1) * n].split_at_mut(n);
            for i in 0..n {
                or[i] = e[i] * ir[i];
                oi[i] = e[i] * ii[i];
            }
        }
        if s == InteractionScalars::default() {
            return;
        }

        // Products are independent per pair; accumulation below runs in a fixed order.
        let products: Vec<(Vec<f64>, Vec<f64>)> = self
            .pairs
            .par_iter()
            .map(|p| self.pair_product(p, s, input))
            .collect();

        for (p, (up, down)) in self.pairs.iter().zip(&products) {
            let lo = self.channels.l_block(p.l);
            let rows = p.stacked * n;
            let lo_out = &mut out[2 * lo.start * n..2 * lo.end * n];
            for (o, d) in lo_out.iter_mut().zip(down) {
                *o += d;
            }
            for link in &p.links {
                let g = s.pz * link.cz + s.px * link.cx;
                let r = s.x * link.cx;
                // l → l+1: −i g G + r R
                let src = 2 * (link.lo - lo.start) * rows;
                let (yr, yi) = (&up[src..src + n], &up[src + rows..src + rows + n]);
                let dst = 2 * link.hi * n;
                let (or, oi) = out[dst..dst + 2 * n].split_at_mut(n);
                for i in 0..n {
                    or[i] += g * yi[i];
                    oi[i] -= g * yr[i];
                }
                if r != 0.0 && p.stacked == 2 {
                    let (zr, zi) = (&up[src + n..src + 2 * n], &up[src + rows + n..src + rows + 2 * n]);
                    for i in 0..n {
                        or[i] += r * zr[i];
                        oi[i] += r * zi[i];
                    }
                }
            }
        }
    }

    /// One pass over the stored block of a pair. Returns M·Y_l (unmixed, one
    /// column per re/im of each l channel) and the already mixed reverse
    /// contribution Mᵀ Z to the l channels, where Z gathers the l + 1 input.
    fn pair_product(&self, p: &PairBlock, s: InteractionScalars, input: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.n;
        let rows = p.stacked * n;
        let lo = self.channels.l_block(p.l);
        let cols = 2 * lo.len();
        let with_r = p.stacked == 2 && s.x != 0.0;
        let active = if with_r { rows } else { n };

        // l+1 → l: the gradient block is −Gᵀ, so −i g (−Gᵀ) = +i g Gᵀ.
        let mut z = vec![0.0; rows * cols];
        for link in &p.links {
            let g = s.pz * link.cz + s.px * link.cx;
            let r = s.x * link.cx;
            let (yr, yi) = input[2 * link.hi * n..2 * (link.hi + 1) * n].split_at(n);
            let a = link.lo - lo.start;
            let (zre, zim) = z[2 * a * rows..2 * (a + 1) * rows].split_at_mut(rows);
            for i in 0..n {
                zre[i] -= g * yi[i];
                zim[i] += g * yr[i];
            }
            if with_r {
                for i in 0..n {
                    zre[n + i] += r * yr[i];
                    zim[n + i] += r * yi[i];
                }
            }
        }
        let z_live: Vec<bool> = z.chunks_exact(rows).map(|c| c[..active].iter().any(|&v| v != 0.0)).collect();

        let mut up = vec![0.0; rows * cols];
        let mut down = vec![0.0; n * cols];
        kernel::pair_kernel(
            &kernel::PairOperands {
                m: &p.m,
                rows,
                active,
                n,
                y: &input[2 * lo.start * n..2 * lo.end * n],
                z: &z,
                z_live: &z_live,
            },
            &mut up,
            &mut down,
        );
        (up, down)
    }
}

/// Field values at the window edges, where the gauge transformations between the
/// velocity and propagation forms reduce to the identity when A and f vanish.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaugeBoundaryReport {
    pub a_start: f64,
    pub f_start: f64,
    pub a_end: f64,
    pub f_end: f64,
    pub u_is_identity: bool,
    pub tolerance: f64,
}

pub const GAUGE_BOUNDARY_TOLERANCE: f64 = 1e-8;

pub fn gauge_boundary_check(pulse: &Pulse) -> GaugeBoundaryReport {
    let a_start = pulse.vector_potential(pulse.t_start).abs();
    let f_start = pulse.envelope(pulse.t_start).abs();
    let a_end = pulse.vector_potential(pulse.t_end).abs();
    let f_end = pulse.envelope(pulse.t_end).abs();
    let tol = GAUGE_BOUNDARY_TOLERANCE;
    GaugeBoundaryReport {
        a_start,
        f_start,
        a_end,
        f_end,
        u_is_identity: [a_start, f_start, a_end, f_end].iter().all(|&v| v < tol),
        tolerance: tol,
    }
}
