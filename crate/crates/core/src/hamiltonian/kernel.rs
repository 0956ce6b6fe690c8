//! The per-pair product behind `apply`: one pass over a stored coupling block M
//! computes both M·Y (forward) and Mᵀ·Z (reverse).
//!
//! Sums are written out in a fixed order, so the vectorized and scalar
//! instantiations produce identical bits.

pub(super) struct PairOperands<'a> {
    /// Column-major, `rows` × n.
    pub m: &'a [f64],
    pub rows: usize,
    /// Leading rows of M that take part.
    pub active: usize,
    pub n: usize,
    /// n × cols, column-major.
    pub y: &'a [f64],
    /// rows × cols, column-major.
    pub z: &'a [f64],
    pub z_live: &'a [bool],
}

/// up (rows × cols) += M·Y, down (n × cols) = Mᵀ·Z on the active rows.
pub(super) fn pair_kernel(ops: &PairOperands, up: &mut [f64], down: &mut [f64]) {
    #[cfg(target_arch = "x86_64")]
    {
        if std::arch::is_x86_feature_detected!("avx2") {
            // SAFETY: the required CPU feature was detected at runtime.
            unsafe { pair_kernel_avx2(ops, up, down) };
            return;
        }
    }
    kernel_body(ops, up, down);
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn pair_kernel_avx2(ops: &PairOperands, up: &mut [f64], down: &mut [f64]) {
    kernel_body(ops, up, down);
}

#[inline(always)]
fn kernel_body(ops: &PairOperands, up: &mut [f64], down: &mut [f64]) {
    let &PairOperands {
        m,
        rows,
        active,
        n,
        y,
        z,
        z_live,
    } = ops;
    let cols = z_live.len();
    let col = |j: usize| &m[j * rows..j * rows + active];

    let mut j = 0;
    while j + 4 <= n {
        let (m0, m1, m2, m3) = (col(j), col(j + 1), col(j + 2), col(j + 3));
        for c in 0..cols {
            let yc = &y[c * n + j..c * n + j + 4];
            if yc.iter().any(|&v| v != 0.0) {
                let w = &mut up[c * rows..c * rows + active];
                let (y0, y1, y2, y3) = (yc[0], yc[1], yc[2], yc[3]);
                for ((((w, a0), a1), a2), a3) in w.iter_mut().zip(m0).zip(m1).zip(m2).zip(m3) {
                    *w += (a0 * y0 + a1 * y1) + (a2 * y2 + a3 * y3);
                }
            }
            if z_live[c] {
                let d = dot4([m0, m1, m2, m3], &z[c * rows..c * rows + active]);
                down[c * n + j..c * n + j + 4].copy_from_slice(&d);
            }
        }
        j += 4;
    }
    while j < n {
        let mj = col(j);
        for c in 0..cols {
            let yc = y[c * n + j];
            if yc != 0.0 {
                let w = &mut up[c * rows..c * rows + active];
                for (w, a) in w.iter_mut().zip(mj) {
                    *w += a * yc;
                }
            }
            if z_live[c] {
                down[c * n + j] = dot4([mj, mj, mj, mj], &z[c * rows..c * rows + active])[0];
            }
        }
        j += 1;
    }
}

/// Four dot products against one vector, each with four interleaved partial sums.
#[inline(always)]
fn dot4(a: [&[f64]; 4], b: &[f64]) -> [f64; 4] {
    let len = b.len();
    let body = len - len % 4;
    let mut acc = [[0.0; 4]; 4];
    for (k, ak) in a.iter().enumerate() {
        for (x, y) in ak[..body].chunks_exact(4).zip(b[..body].chunks_exact(4)) {
            for lane in 0..4 {
                acc[k][lane] += x[lane] * y[lane];
            }
        }
    }
    let mut out = [0.0; 4];
    for (k, ak) in a.iter().enumerate() {
        let tail: f64 = ak[body..len].iter().zip(&b[body..]).map(|(x, y)| x * y).sum();
        out[k] = ((acc[k][0] + acc[k][2]) + (acc[k][1] + acc[k][3])) + tail;
    }
    out
}
