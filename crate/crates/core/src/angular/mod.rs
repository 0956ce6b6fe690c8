//! Partial-wave channels and the angular parts of z, x, p_z and p_x between them.

mod couplings;
mod harmonics;
mod wigner;

pub use couplings::{coupling_tables, gaunt, CouplingEntry, CouplingTables, Operator, RadialKind};
pub use harmonics::{spherical_harmonic, LegendreTable};
pub use wigner::{wigner3j, wigner3j_doubled};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which combinations of ±m are kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Symmetry {
    /// Complex Y_lm for every −m..=m.
    Full,
    /// Combinations (Y_lm + (−1)^m Y_l,−m)/√2 for m > 0 and Y_l0, which are even under
    /// y → −y. The subspace is invariant under z, x, p_z and p_x and contains the
    /// ground state.
    ReflectionEven,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Channel {
    pub l: usize,
    pub m: i32,
}

/// Ordered channels, l-major then m ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelBasis {
    l_max: usize,
    m_max: usize,
    symmetry: Symmetry,
    channels: Vec<Channel>,
    /// Index of the first channel with angular momentum l; length l_max + 2.
    offsets: Vec<usize>,
}

impl ChannelBasis {
    pub fn new(l_max: usize, m_max: usize, symmetry: Symmetry) -> Result<Self> {
        if m_max > l_max {
            return Err(Error::invalid(format!("m_max = {m_max} exceeds l_max = {l_max}")));
        }
        let mut channels = Vec::new();
        let mut offsets = Vec::with_capacity(l_max + 2);
        for l in 0..=l_max {
            offsets.push(channels.len());
            let top = l.min(m_max) as i32;
            let bottom = match symmetry {
                Symmetry::Full => -top,
                Symmetry::ReflectionEven => 0,
            };
            channels.extend((bottom..=top).map(|m| Channel { l, m }));
        }
        offsets.push(channels.len());
        Ok(Self {
            l_max,
            m_max,
            symmetry,
            channels,
            offsets,
        })
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    pub fn m_max(&self) -> usize {
        self.m_max
    }

    pub fn symmetry(&self) -> Symmetry {
        self.symmetry
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn get(&self, idx: usize) -> Channel {
        self.channels[idx]
    }

    pub fn index(&self, l: usize, m: i32) -> Option<usize> {
        if l > self.l_max {
            return None;
        }
        let top = l.min(self.m_max) as i32;
        let bottom = match self.symmetry {
            Symmetry::Full => -top,
            Symmetry::ReflectionEven => 0,
        };
        (bottom..=top)
            .contains(&m)
            .then(|| self.offsets[l] + (m - bottom) as usize)
    }

    /// Channel indices with angular momentum `l`.
    pub fn l_block(&self, l: usize) -> std::ops::Range<usize> {
        self.offsets[l]..self.offsets[l + 1]
    }

    /// Expansion of channel `idx` in complex harmonics: pairs (m, weight).
    pub fn components(&self, idx: usize) -> Vec<(i32, f64)> {
        let Channel { m, .. } = self.channels[idx];
        match (self.symmetry, m) {
            (Symmetry::Full, _) | (Symmetry::ReflectionEven, 0) => vec![(m, 1.0)],
            (Symmetry::ReflectionEven, _) => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                let parity = if m % 2 == 0 { 1.0 } else { -1.0 };
                vec![(m, s), (-m, parity * s)]
            }
        }
    }

    /// Angular function of channel `idx` at (θ, φ).
    pub fn eval(&self, idx: usize, theta: f64, phi: f64) -> Complex64 {
        let l = self.channels[idx].l;
        self.components(idx)
            .into_iter()
            .map(|(m, w)| w * spherical_harmonic(l, m, theta, phi))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn channel_counts() {
        assert_eq!(ChannelBasis::new(2, 2, Symmetry::Full).unwrap().len(), 9);
        assert_eq!(ChannelBasis::new(2, 0, Symmetry::Full).unwrap().len(), 3);
        // (0,0) (1,0) (1,1) (2,0) (2,1) (2,2)
        let even = ChannelBasis::new(2, 2, Symmetry::ReflectionEven).unwrap();
        assert_eq!(even.len(), 6);
        assert!(ChannelBasis::new(2, 3, Symmetry::Full).is_err());
    }

    #[test]
    fn ordering_and_index_round_trip() {
        for sym in [Symmetry::Full, Symmetry::ReflectionEven] {
            let b = ChannelBasis::new(7, 3, sym).unwrap();
            for (i, ch) in b.channels().iter().enumerate() {
                assert_eq!(b.index(ch.l, ch.m), Some(i));
            }
            for w in b.channels().windows(2) {
                assert!((w[0].l, w[0].m) < (w[1].l, w[1].m));
            }
            for l in 0..=7 {
                assert!(b.l_block(l).all(|i| b.get(i).l == l));
            }
            assert_eq!(b.index(2, 3), None);
            assert_eq!(b.index(8, 0), None);
        }
    }

    #[test]
    fn reflection_even_functions_are_even_in_y() {
        let b = ChannelBasis::new(4, 4, Symmetry::ReflectionEven).unwrap();
        for i in 0..b.len() {
            for &(theta, phi) in &[(0.3, 0.7), (1.2, 2.5), (2.9, -1.1)] {
                let a = b.eval(i, theta, phi);
                let r = b.eval(i, theta, -phi);
                assert!((a - r).norm() < 1e-14);
                assert!(a.im.abs() < 1e-14);
            }
        }
    }
}
