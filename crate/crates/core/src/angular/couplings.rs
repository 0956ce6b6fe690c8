//! Angular coefficients of z, x, p_z and p_x between channels.
//!
//! The radial factor of each operator acts on reduced radial functions u = rR. For a
//! Cartesian component n̂·r with angular part ⟨l′m′|n̂|lm⟩:
//!
//! * position: ⟨l′m′|n̂|lm⟩ · r
//! * gradient: ⟨l′m′|n̂|lm⟩ · (d/dr − (l+1)/r) for l′ = l + 1 and
//!   ⟨l′m′|n̂|lm⟩ · (d/dr + l/r) for l′ = l − 1
//!
//! Momentum is p = −i∇. Tables store the real coefficients of ∇; the −i is applied
//! by the consumer.

use std::f64::consts::PI;

use super::{wigner3j, ChannelBasis};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Operator {
    Z,
    X,
    Pz,
    Px,
}

/// Radial matrix that multiplies an angular coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RadialKind {
    R,
    Ddr,
    InvR,
}

/// `coeff · ⟨u_row| kind |u_col⟩` contributes to the (row, col) channel block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingEntry {
    pub row: usize,
    pub col: usize,
    pub kind: RadialKind,
    pub coeff: f64,
}

#[derive(Debug, Clone, Default)]
pub struct CouplingTables {
    pub z: Vec<CouplingEntry>,
    pub x: Vec<CouplingEntry>,
    /// Coefficients of ∂/∂z; p_z = −i times this.
    pub pz: Vec<CouplingEntry>,
    /// Coefficients of ∂/∂x; p_x = −i times this.
    pub px: Vec<CouplingEntry>,
}

impl CouplingTables {
    pub fn get(&self, op: Operator) -> &[CouplingEntry] {
        match op {
            Operator::Z => &self.z,
            Operator::X => &self.x,
            Operator::Pz => &self.pz,
            Operator::Px => &self.px,
        }
    }
}

/// ∫ Y*_{l1 m1} Y_{l2 m2} Y_{l3 m3} dΩ
pub fn gaunt(l1: usize, m1: i32, l2: usize, m2: i32, l3: usize, m3: i32) -> f64 {
    let (l1, l2, l3) = (l1 as i32, l2 as i32, l3 as i32);
    let pref = (((2 * l1 + 1) * (2 * l2 + 1) * (2 * l3 + 1)) as f64 / (4.0 * PI)).sqrt();
    let phase = if m1 % 2 == 0 { 1.0 } else { -1.0 };
    phase * pref * wigner3j(l1, l2, l3, 0, 0, 0) * wigner3j(l1, l2, l3, -m1, m2, m3)
}

/// ⟨l′m′| cos θ |lm⟩
fn cos_theta(lp: usize, mp: i32, l: usize, m: i32) -> f64 {
    (4.0 * PI / 3.0).sqrt() * gaunt(lp, mp, 1, 0, l, m)
}

/// ⟨l′m′| sin θ cos φ |lm⟩
fn sin_theta_cos_phi(lp: usize, mp: i32, l: usize, m: i32) -> f64 {
    (2.0 * PI / 3.0).sqrt() * (gaunt(lp, mp, 1, -1, l, m) - gaunt(lp, mp, 1, 1, l, m))
}

/// Matrix element of a complex-harmonic angular operator between two channels.
fn between(basis: &ChannelBasis, row: usize, col: usize, op: impl Fn(usize, i32, usize, i32) -> f64) -> f64 {
    let (lr, lc) = (basis.get(row).l, basis.get(col).l);
    let mut v = 0.0;
    for (mr, wr) in basis.components(row) {
        for (mc, wc) in basis.components(col) {
            v += wr * wc * op(lr, mr, lc, mc);
        }
    }
    v
}

pub fn coupling_tables(basis: &ChannelBasis) -> CouplingTables {
    let mut t = CouplingTables::default();
    for col in 0..basis.len() {
        let l = basis.get(col).l;
        for lp in [l.wrapping_sub(1), l + 1] {
            if lp > basis.l_max() {
                continue;
            }
            let inv_r_weight = if lp == l + 1 { -((l + 1) as f64) } else { l as f64 };
            for row in basis.l_block(lp) {
                let cz = between(basis, row, col, cos_theta);
                let cx = between(basis, row, col, sin_theta_cos_phi);
                for (coeff, pos, grad) in [(cz, &mut t.z, &mut t.pz), (cx, &mut t.x, &mut t.px)] {
                    if coeff.abs() < 1e-15 {
                        continue;
                    }
                    pos.push(CouplingEntry { row, col, kind: RadialKind::R, coeff });
                    grad.push(CouplingEntry { row, col, kind: RadialKind::Ddr, coeff });
                    grad.push(CouplingEntry {
                        row,
                        col,
                        kind: RadialKind::InvR,
                        coeff: coeff * inv_r_weight,
                    });
                }
            }
        }
    }
    t
}
