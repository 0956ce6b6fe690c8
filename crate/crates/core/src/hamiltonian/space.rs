use std::path::Path;

use rayon::prelude::*;

use crate::error::Result;
use crate::radial::{
    assemble_operators, read_spectrum, solve_channel, spectrum_cache_path, write_spectrum, BasisParams, ChannelSpectrum,
    RadialBasis, RadialOperators, SpectrumKey,
};

/// Field-free eigenstates used as the propagation basis. Every l keeps the same number
/// of radial states: as many as there are s states with E ≤ `e_cut`.
#[derive(Debug, Clone)]
pub struct SpectralSpace {
    pub basis: RadialBasis,
    pub ops: RadialOperators,
    /// Truncated spectra indexed by l.
    pub spectra: Vec<ChannelSpectrum>,
    pub z: f64,
    e_cut: f64,
    n_retained: usize,
}

impl SpectralSpace {
    /// Solves (or loads from `cache_dir`) the spectra for l = 0..=l_max.
    pub fn build(params: BasisParams, l_max: usize, z: f64, e_cut: f64, cache_dir: Option<&Path>) -> Result<Self> {
        let basis = RadialBasis::new(params)?;
        let ops = assemble_operators(&basis);
        let full = (0..=l_max)
            .into_par_iter()
            .map(|l| load_or_solve(&basis, &ops, l, z, cache_dir))
            .collect::<Result<Vec<_>>>()?;
        Self::from_spectra(basis, ops, full, e_cut)
    }

    pub fn from_spectra(basis: RadialBasis, ops: RadialOperators, full: Vec<ChannelSpectrum>, e_cut: f64) -> Result<Self> {
        if full.is_empty() {
            return Err(crate::Error::invalid("no channel spectra"));
        }
        if !(e_cut > 0.0) {
            return Err(crate::Error::invalid(format!("e_cut must be > 0, got {e_cut}")));
        }
        for (l, s) in full.iter().enumerate() {
            if s.l != l || s.basis_fingerprint() != basis.fingerprint() {
                return Err(crate::Error::BasisMismatch(format!("spectrum {l} does not match the radial basis")));
            }
        }
        let n_retained = full[0].count_below(e_cut);
        if n_retained == 0 {
            return Err(crate::Error::invalid(format!("no s states below e_cut = {e_cut}")));
        }
        let z = full[0].z;
        let spectra = full.iter().map(|s| s.truncated(n_retained)).collect();
        Ok(Self {
            basis,
            ops,
            spectra,
            z,
            e_cut,
            n_retained,
        })
    }

    pub fn l_max(&self) -> usize {
        self.spectra.len() - 1
    }

    pub fn n_retained(&self) -> usize {
        self.n_retained
    }

    pub fn e_cut(&self) -> f64 {
        self.e_cut
    }

    pub fn energies(&self, l: usize) -> &[f64] {
        &self.spectra[l].energies
    }
}

fn load_or_solve(
    basis: &RadialBasis,
    ops: &RadialOperators,
    l: usize,
    z: f64,
    cache_dir: Option<&Path>,
) -> Result<ChannelSpectrum> {
    let Some(dir) = cache_dir else {
        return solve_channel(basis, ops, l, z);
    };
    let path = spectrum_cache_path(dir, &SpectrumKey::new(basis, l, z));
    if path.exists() {
        if let Ok(s) = read_spectrum(&path, basis, l, z) {
            return Ok(s);
        }
    }
    let s = solve_channel(basis, ops, l, z)?;
    std::fs::create_dir_all(dir).map_err(|e| crate::Error::io(dir, e))?;
    // Write to a temporary name first so concurrent runs never read a partial file.
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    write_spectrum(&tmp, basis, &s)?;
    std::fs::rename(&tmp, &path).map_err(|e| crate::Error::io(&path, e))?;
    Ok(s)
}
