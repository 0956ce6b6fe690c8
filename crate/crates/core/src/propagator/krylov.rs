use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::hamiltonian::{axpy_raw, inner_raw, scale_raw};

/// Result of one Krylov exponential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovStats {
    pub dim: usize,
    pub residual: f64,
}

/// Lanczos basis storage reused across steps.
#[derive(Debug, Default)]
pub(crate) struct KrylovWorkspace {
    vectors: Vec<Vec<f64>>,
    scratch: Vec<f64>,
}

/// Overwrites `psi` with exp(−i dt H) psi, where `apply(v, out)` computes out = H v.
///
/// The subspace grows until β h_{m+1,m} |e_mᵀ exp(−i dt T) e₁| drops below `tol`;
/// every new vector is orthogonalized twice against all previous ones.
pub(crate) fn expm_apply(
    n: usize,
    psi: &mut [f64],
    dt: f64,
    dim_max: usize,
    tol: f64,
    ws: &mut KrylovWorkspace,
    mut apply: impl FnMut(&[f64], &mut [f64]),
) -> Result<KrylovStats, KrylovStats> {
    let len = psi.len();
    let beta = inner_raw(n, psi, psi).re.sqrt();
    if beta == 0.0 {
        return Ok(KrylovStats { dim: 0, residual: 0.0 });
    }
    while ws.vectors.len() < dim_max + 1 {
        ws.vectors.push(vec![0.0; len]);
    }
    for v in &mut ws.vectors {
        v.resize(len, 0.0);
    }
    ws.scratch.resize(len, 0.0);

    ws.vectors[0].copy_from_slice(psi);
    scale_raw(n, Complex64::new(1.0 / beta, 0.0), &mut ws.vectors[0]);

    let mut alpha: Vec<f64> = Vec::with_capacity(dim_max);
    let mut offdiag: Vec<f64> = Vec::with_capacity(dim_max);
    let mut last = KrylovStats { dim: 0, residual: f64::INFINITY };
    for j in 0..dim_max {
        let (head, tail) = ws.vectors.split_at_mut(j + 1);
        let w = &mut tail[0];
        apply(&head[j], w);
        let a = inner_raw(n, &head[j], w).re;
        alpha.push(a);
        for _ in 0..2 {
            for v in head.iter() {
                let c = inner_raw(n, v, w);
                axpy_raw(n, -c, v, w);
            }
        }
        let b = inner_raw(n, w, w).re.sqrt();
        let m = j + 1;
        let coeffs = small_exponential(&alpha, &offdiag, dt);
        let residual = beta * b * coeffs[m - 1].norm();
        last = KrylovStats { dim: m, residual };
        if residual < tol || b < 1e-300 {
            combine(n, psi, beta, &coeffs, &ws.vectors[..m]);
            return Ok(last);
        }
        offdiag.push(b);
        scale_raw(n, Complex64::new(1.0 / b, 0.0), &mut ws.vectors[j + 1]);
    }
    Err(last)
}

/// exp(−i dt T) e₁ for the symmetric tridiagonal T.
fn small_exponential(alpha: &[f64], offdiag: &[f64], dt: f64) -> Vec<Complex64> {
    let m = alpha.len();
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = offdiag[i];
            t[(i + 1, i)] = offdiag[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let q = &eig.eigenvectors;
    (0..m)
        .map(|i| {
            (0..m)
                .map(|k| q[(i, k)] * q[(0, k)] * Complex64::from_polar(1.0, -dt * eig.eigenvalues[k]))
                .sum()
        })
        .collect()
}

fn combine(n: usize, psi: &mut [f64], beta: f64, coeffs: &[Complex64], vectors: &[Vec<f64>]) {
    psi.fill(0.0);
    for (c, v) in coeffs.iter().zip(vectors) {
        axpy_raw(n, c * beta, v, psi);
    }
}
