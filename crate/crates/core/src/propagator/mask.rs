use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::angular::ChannelBasis;
use crate::error::{Error, Result};
use crate::hamiltonian::{SpectralSpace, WavefunctionState};
use crate::radial::{assemble_weighted, project_band};

/// Absorber m(r) = 1 for r < r_on, cos^exponent(π/2 · (r − r_on)/(r_max − r_on)) beyond.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskSpec {
    pub r_on: f64,
    pub exponent: f64,
}

impl MaskSpec {
    pub fn value(&self, r: f64, r_max: f64) -> f64 {
        if r <= self.r_on {
            1.0
        } else if r >= r_max {
            0.0
        } else {
            (FRAC_PI_2 * (r - self.r_on) / (r_max - self.r_on)).cos().powf(self.exponent)
        }
    }
}

/// The mask compressed onto the retained eigenstates of each l: K_l = V_lᵀ M V_l.
#[derive(Debug, Clone)]
pub struct MaskOperator {
    spec: MaskSpec,
    n: usize,
    /// Column-major n × n per l; empty when the mask is the identity.
    blocks: Vec<Vec<f64>>,
    channels: ChannelBasis,
}

impl MaskOperator {
    pub fn new(spec: MaskSpec, space: &SpectralSpace, channels: &ChannelBasis) -> Result<Self> {
        if !(spec.r_on > 0.0) || !(spec.exponent > 0.0) {
            return Err(Error::invalid(format!(
                "mask needs r_on > 0 and exponent > 0, got r_on = {}, exponent = {}",
                spec.r_on, spec.exponent
            )));
        }
        let n = space.n_retained();
        let r_max = space.basis.r_max();
        let blocks = if spec.r_on >= r_max {
            Vec::new()
        } else {
            let m = assemble_weighted(&space.basis, |r| spec.value(r, r_max));
            (0..=channels.l_max())
                .map(|l| {
                    let s = &space.spectra[l];
                    project_band(&m, s, n, s, n).as_slice().to_vec()
                })
                .collect()
        };
        Ok(Self {
            spec,
            n,
            blocks,
            channels: channels.clone(),
        })
    }

    pub fn spec(&self) -> MaskSpec {
        self.spec
    }

    pub fn is_identity(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn apply(&self, psi: &mut WavefunctionState) {
        self.apply_raw(psi.raw_mut());
    }

    pub(crate) fn apply_raw(&self, data: &mut [f64]) {
        if self.is_identity() {
            return;
        }
        let n = self.n;
        for (l, k) in self.blocks.iter().enumerate() {
            let block = self.channels.l_block(l);
            let cols = 2 * block.len();
            let slice = &mut data[2 * block.start * n..2 * block.end * n];
            let input = slice.to_vec();
            // SAFETY: dimensions and strides describe the slices exactly.
            unsafe {
                matrixmultiply::dgemm(
                    n,
                    n,
                    cols,
                    1.0,
                    k.as_ptr(),
                    1,
                    n as isize,
                    input.as_ptr(),
                    1,
                    n as isize,
                    0.0,
                    slice.as_mut_ptr(),
                    1,
                    n as isize,
                );
            }
        }
    }
}

/// Multiplies ψ by the absorber in position space.
pub fn apply_mask(psi: &WavefunctionState, mask: &MaskOperator) -> WavefunctionState {
    let mut out = psi.clone();
    mask.apply(&mut out);
    out
}
