use serde::{Deserialize, Serialize};

use super::SpectralProjection;
use crate::error::{Error, Result};

/// Energy nodes with density-of-states weights ΔE_k = (E_{k+1} − E_{k−1})/2,
/// one-sided at the ends. Node k owns the cell of width ΔE_k around it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl EnergyGrid {
    pub fn from_levels(levels: &[f64]) -> Result<Self> {
        if levels.len() < 2 {
            return Err(Error::invalid("an energy grid needs at least two nodes"));
        }
        if levels.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("energy nodes must be strictly increasing"));
        }
        Ok(Self {
            nodes: levels.to_vec(),
            weights: level_spacings(levels),
        })
    }

    /// `n` equally spaced nodes on [e_min, e_max].
    pub fn uniform(e_min: f64, e_max: f64, n: usize) -> Result<Self> {
        if n < 2 || !(e_max > e_min) {
            return Err(Error::invalid(format!("bad uniform grid [{e_min}, {e_max}] with {n} nodes")));
        }
        let h = (e_max - e_min) / (n - 1) as f64;
        Self::from_levels(&(0..n).map(|k| e_min + k as f64 * h).collect::<Vec<_>>())
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Cell edges; length len() + 1.
    fn edges(&self) -> Vec<f64> {
        cell_edges(&self.nodes, &self.weights)
    }
}

fn level_spacings(e: &[f64]) -> Vec<f64> {
    let n = e.len();
    (0..n)
        .map(|k| match k {
            0 => e[1] - e[0],
            _ if k == n - 1 => e[n - 1] - e[n - 2],
            _ => 0.5 * (e[k + 1] - e[k - 1]),
        })
        .collect()
}

/// Edges halfway between nodes, with the outer cells symmetric about their node.
fn cell_edges(nodes: &[f64], weights: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut edges = Vec::with_capacity(n + 1);
    edges.push(nodes[0] - 0.5 * weights[0]);
    edges.extend(nodes.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    edges.push(nodes[n - 1] + 0.5 * weights[n - 1]);
    edges
}

/// dP/dE on a grid, in total and per l.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergySpectrum {
    pub grid: EnergyGrid,
    pub total: Vec<f64>,
    /// Index l holds the contribution of all channels with that l.
    pub per_l: Vec<Vec<f64>>,
}

impl EnergySpectrum {
    /// Σ_k dP/dE(E_k) ΔE_k
    pub fn integral(&self) -> f64 {
        self.total.iter().zip(self.grid.weights()).map(|(d, w)| d * w).sum()
    }

    /// ∫ |a − b| dE over nodes in [e_lo, e_hi] on a shared grid.
    pub fn l1_distance(&self, other: &EnergySpectrum, e_lo: f64, e_hi: f64) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::BasisMismatch("spectra are on different energy grids".into()));
        }
        Ok(self.masked_sum(e_lo, e_hi, |k| (self.total[k] - other.total[k]).abs()))
    }

    /// ∫ dP/dE dE over nodes in [e_lo, e_hi].
    pub fn integral_between(&self, e_lo: f64, e_hi: f64) -> f64 {
        self.masked_sum(e_lo, e_hi, |k| self.total[k])
    }

    fn masked_sum(&self, e_lo: f64, e_hi: f64, f: impl Fn(usize) -> f64) -> f64 {
        (0..self.grid.len())
            .filter(|&k| (e_lo..=e_hi).contains(&self.grid.nodes[k]))
            .map(|k| f(k) * self.grid.weights[k])
            .sum()
    }
}

/// Each continuum state spreads |c|² uniformly over its own cell, built from the
/// spacing of its channel's levels; cells are rebinned onto `grid` by overlap.
/// Probability outside the grid range is folded into the end cells, so the
/// integral equals the continuum population.
pub fn energy_spectrum(proj: &SpectralProjection, grid: &EnergyGrid) -> Result<EnergySpectrum> {
    let edges = grid.edges();
    let n = grid.len();
    let l_max = proj.channels.iter().map(|c| c.l).max().unwrap_or(0);
    let mut per_l = vec![vec![0.0; n]; l_max + 1];
    for ((ch, energies), amps) in proj.channels.iter().zip(&proj.energies).zip(&proj.amplitudes) {
        let first = energies.partition_point(|&e| e < 0.0);
        let levels = &energies[first..];
        if levels.len() < 2 {
            return Err(Error::invalid(format!(
                "channel l = {}, m = {} has fewer than two continuum states",
                ch.l, ch.m
            )));
        }
        let spacing = level_spacings(levels);
        if spacing.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::invalid("degenerate continuum level spacing"));
        }
        let cells = cell_edges(levels, &spacing);
        let row = &mut per_l[ch.l];
        for (i, a) in amps[first..].iter().enumerate() {
            let p = a.norm_sqr();
            if p == 0.0 {
                continue;
            }
            deposit(row, &edges, cells[i], cells[i + 1], p);
        }
    }
    for row in &mut per_l {
        for (v, w) in row.iter_mut().zip(grid.weights()) {
            *v /= w;
        }
    }
    let total = (0..n).map(|k| per_l.iter().map(|r| r[k]).sum()).collect();
    Ok(EnergySpectrum {
        grid: grid.clone(),
        total,
        per_l,
    })
}

/// Adds probability `p`, spread uniformly over [a, b], to the cells delimited by `edges`.
fn deposit(row: &mut [f64], edges: &[f64], a: f64, b: f64, p: f64) {
    let n = row.len();
    let density = p / (b - a);
    let (lo, hi) = (edges[0], edges[n]);
    if a < lo {
        row[0] += density * (b.min(lo) - a);
    }
    if b > hi {
        row[n - 1] += density * (b - a.max(hi));
    }
    let (a, b) = (a.max(lo), b.min(hi));
    if a >= b {
        return;
    }
    let mut k = edges.partition_point(|&e| e <= a).saturating_sub(1).min(n - 1);
    while k < n && edges[k] < b {
        let overlap = b.min(edges[k + 1]) - a.max(edges[k]);
        if overlap > 0.0 {
            row[k] += density * overlap;
        }
        k += 1;
    }
}
