use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use super::{BandMatrix, RadialBasis, RadialOperators};
use crate::error::{Error, Result};

/// Field-free eigenpairs H₀(l) c = E S c for one orbital angular momentum.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpectrum {
    pub l: usize,
    pub z: f64,
    /// Ascending.
    pub energies: Vec<f64>,
    /// Spline coefficients, one S-normalized eigenvector per column.
    pub vectors: DMatrix<f64>,
    pub(crate) fingerprint: u64,
}

impl ChannelSpectrum {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// Number of states with E < 0.
    pub fn n_bound(&self) -> usize {
        self.energies.partition_point(|&e| e < 0.0)
    }

    /// Number of states with E ≤ `e_max`.
    pub fn count_below(&self, e_max: f64) -> usize {
        self.energies.partition_point(|&e| e <= e_max)
    }

    pub fn basis_fingerprint(&self) -> u64 {
        self.fingerprint
    }

    /// Keeps the lowest `n` eigenpairs.
    pub fn truncated(&self, n: usize) -> ChannelSpectrum {
        let n = n.min(self.len());
        ChannelSpectrum {
            l: self.l,
            z: self.z,
            energies: self.energies[..n].to_vec(),
            vectors: self.vectors.columns(0, n).into_owned(),
            fingerprint: self.fingerprint,
        }
    }

    /// max |cᵢᵀ S cⱼ − δᵢⱼ|
    pub fn orthonormality_error(&self, ops: &RadialOperators) -> f64 {
        let sv = ops.s.mul_dense(&self.vectors);
        let g = self.vectors.transpose() * sv;
        let mut err: f64 = 0.0;
        for i in 0..g.nrows() {
            for j in 0..g.ncols() {
                let target = if i == j { 1.0 } else { 0.0 };
                err = err.max((g[(i, j)] - target).abs());
            }
        }
        err
    }
}

/// Solves the generalized symmetric-definite problem for channel `l`.
pub fn solve_channel(basis: &RadialBasis, ops: &RadialOperators, l: usize, z: f64) -> Result<ChannelSpectrum> {
    if ops.fingerprint != basis.fingerprint() {
        return Err(Error::BasisMismatch(
            "radial operators were assembled on a different basis".into(),
        ));
    }
    let h = ops.field_free_hamiltonian(l, z);
    let (energies, vectors) = generalized_eigen(&h, &ops.s).map_err(|reason| Error::Eigensolver { l, reason })?;
    Ok(ChannelSpectrum {
        l,
        z,
        energies,
        vectors,
        fingerprint: basis.fingerprint(),
    })
}

/// Solves every l in `0..=l_max` concurrently.
pub fn solve_channels(
    basis: &RadialBasis,
    ops: &RadialOperators,
    l_max: usize,
    z: f64,
) -> Result<Vec<ChannelSpectrum>> {
    (0..=l_max)
        .into_par_iter()
        .map(|l| solve_channel(basis, ops, l, z))
        .collect()
}

fn generalized_eigen(h: &BandMatrix, s: &BandMatrix) -> std::result::Result<(Vec<f64>, DMatrix<f64>), String> {
    let n = h.dim();
    let chol = s
        .to_dense()
        .cholesky()
        .ok_or_else(|| "overlap matrix is not positive definite".to_string())?;
    let lower = chol.l();
    // C = L⁻¹ H L⁻ᵀ
    let mut tmp = h.to_dense();
    if !lower.solve_lower_triangular_mut(&mut tmp) {
        return Err("singular Cholesky factor".into());
    }
    let mut c = tmp.transpose();
    lower.solve_lower_triangular_mut(&mut c);
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(c, f64::EPSILON, 0)
        .ok_or_else(|| "symmetric eigensolver did not converge".to_string())?;
    if eig.eigenvalues.iter().any(|e| !e.is_finite()) {
        return Err("non-finite eigenvalue".into());
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let energies: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut y = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    // x = L⁻ᵀ y
    lower.tr_solve_lower_triangular_mut(&mut y);
    fix_signs(&mut y);
    Ok((energies, y))
}

/// Makes each eigenfunction positive near the origin: the first coefficient
/// exceeding 1e-3 of the column maximum is made positive.
fn fix_signs(v: &mut DMatrix<f64>) {
    for mut col in v.column_iter_mut() {
        let amax = col.amax();
        if let Some(first) = col.iter().find(|x| x.abs() > 1e-3 * amax).copied() {
            if first < 0.0 {
                col.neg_mut();
            }
        }
    }
}

/// Radial matrix elements between two truncated spectra.
#[derive(Debug, Clone)]
pub struct RadialTables {
    /// ⟨a| r |b⟩
    pub r: DMatrix<f64>,
    /// ⟨a| d/dr |b⟩
    pub ddr: DMatrix<f64>,
    /// ⟨a| 1/r |b⟩
    pub inv_r: DMatrix<f64>,
}

/// Dense tables cᵀ M c′ over the eigenpairs of `a` and `b` with energy ≤ `e_max`
/// (all eigenpairs when `e_max` is `None`).
pub fn radial_matrix_elements(
    a: &ChannelSpectrum,
    b: &ChannelSpectrum,
    ops: &RadialOperators,
    e_max: Option<f64>,
) -> Result<RadialTables> {
    if a.fingerprint != b.fingerprint || a.fingerprint != ops.fingerprint {
        return Err(Error::BasisMismatch(
            "spectra and operators do not share one radial basis".into(),
        ));
    }
    let na = e_max.map_or(a.len(), |e| a.count_below(e));
    let nb = e_max.map_or(b.len(), |e| b.count_below(e));
    let va = a.vectors.columns(0, na);
    let vb = b.vectors.columns(0, nb).into_owned();
    let project = |m: &BandMatrix| va.transpose() * m.mul_dense(&vb);
    Ok(RadialTables {
        r: project(&ops.r),
        ddr: project(&ops.ddr),
        inv_r: project(&ops.inv_r),
    })
}

/// Vᵀ M V′ for a banded operator, keeping the first `na`, `nb` columns.
pub fn project_band(m: &BandMatrix, a: &ChannelSpectrum, na: usize, b: &ChannelSpectrum, nb: usize) -> DMatrix<f64> {
    let va = a.vectors.columns(0, na);
    let vb = b.vectors.columns(0, nb).into_owned();
    va.transpose() * m.mul_dense(&vb)
}
