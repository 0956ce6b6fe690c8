use nalgebra::DMatrix;

use super::RadialBasis;

/// Square matrix with nonzeros only within `half_bw` of the diagonal.
/// Row-major band storage: entry (i, j) lives at `i * (2w+1) + (j + w - i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    half_bw: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, half_bw: usize) -> Self {
        Self {
            n,
            half_bw,
            data: vec![0.0; n * (2 * half_bw + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn half_bandwidth(&self) -> usize {
        self.half_bw
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let w = self.half_bw;
        (j + w >= i && j <= i + w).then(|| i * (2 * w + 1) + (j + w - i))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.data[s])
    }

    fn add(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j).expect("entry outside band");
        self.data[s] += v;
    }

    /// Iterates over (i, j) pairs inside the band.
    fn band_indices(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let w = self.half_bw;
        (0..self.n).flat_map(move |i| (i.saturating_sub(w)..(i + w + 1).min(self.n)).map(move |j| (i, j)))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (i, j) in self.band_indices() {
            m[(i, j)] = self.get(i, j);
        }
        m
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &BandMatrix, b: f64) -> BandMatrix {
        assert_eq!(self.n, other.n);
        assert_eq!(self.half_bw, other.half_bw);
        BandMatrix {
            n: self.n,
            half_bw: self.half_bw,
            data: self.data.iter().zip(&other.data).map(|(x, y)| a * x + b * y).collect(),
        }
    }

    /// self · dense (n × m), returned dense.
    pub fn mul_dense(&self, v: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(v.nrows(), self.n);
        let w = self.half_bw;
        let mut out = DMatrix::zeros(self.n, v.ncols());
        for c in 0..v.ncols() {
            let col = v.column(c);
            let col = col.as_slice();
            let oc = out.column_mut(c);
            let oc = oc.data.into_slice_mut();
            for i in 0..self.n {
                let lo = i.saturating_sub(w);
                let hi = (i + w + 1).min(self.n);
                let row = &self.data[i * (2 * w + 1)..];
                let mut acc = 0.0;
                for j in lo..hi {
                    acc += row[j + w - i] * col[j];
                }
                oc[i] = acc;
            }
        }
        out
    }

    pub fn max_abs_asymmetry(&self) -> f64 {
        self.band_indices()
            .map(|(i, j)| (self.get(i, j) - self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_symmetric_part(&self) -> f64 {
        self.band_indices()
            .map(|(i, j)| (self.get(i, j) + self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }
}

/// Field-free radial matrices over the retained splines.
#[derive(Debug, Clone)]
pub struct RadialOperators {
    /// ⟨B_i|B_j⟩
    pub s: BandMatrix,
    /// ⟨B_i|d²/dr²|B_j⟩ = −⟨B_i'|B_j'⟩
    pub d2: BandMatrix,
    pub inv_r: BandMatrix,
    pub inv_r2: BandMatrix,
    pub r: BandMatrix,
    /// ⟨B_i|d/dr|B_j⟩
    pub ddr: BandMatrix,
    pub(crate) fingerprint: u64,
}

impl RadialOperators {
    /// H₀(l) = −½ D2 + ½ l(l+1) / r² − Z / r
    pub fn field_free_hamiltonian(&self, l: usize, z: f64) -> BandMatrix {
        let cent = 0.5 * (l * (l + 1)) as f64;
        let mut h = self.d2.combine(-0.5, &self.inv_r2, cent);
        h = h.combine(1.0, &self.inv_r, -z);
        h
    }

    pub fn dim(&self) -> usize {
        self.s.dim()
    }
}

pub fn assemble_operators(basis: &RadialBasis) -> RadialOperators {
    let n = basis.n_splines();
    let w = basis.order() - 1;
    let mut s = BandMatrix::zeros(n, w);
    let mut d2 = BandMatrix::zeros(n, w);
    let mut inv_r = BandMatrix::zeros(n, w);
    let mut inv_r2 = BandMatrix::zeros(n, w);
    let mut r_op = BandMatrix::zeros(n, w);
    let mut ddr = BandMatrix::zeros(n, w);
    for_each_pair(basis, |i, j, r, wt, bi, bj, dbi, dbj| {
        s.add(i, j, wt * bi * bj);
        d2.add(i, j, -wt * dbi * dbj);
        inv_r.add(i, j, wt * bi * bj / r);
        inv_r2.add(i, j, wt * bi * bj / (r * r));
        r_op.add(i, j, wt * bi * bj * r);
        ddr.add(i, j, wt * bi * dbj);
    });
    RadialOperators {
        s,
        d2,
        inv_r,
        inv_r2,
        r: r_op,
        ddr,
        fingerprint: basis.fingerprint(),
    }
}

/// ⟨B_i| g(r) |B_j⟩ for an arbitrary multiplicative function.
pub fn assemble_weighted(basis: &RadialBasis, g: impl Fn(f64) -> f64) -> BandMatrix {
    let mut m = BandMatrix::zeros(basis.n_splines(), basis.order() - 1);
    for_each_pair(basis, |i, j, r, wt, bi, bj, _, _| {
        m.add(i, j, wt * g(r) * bi * bj);
    });
    m
}

#[allow(clippy::too_many_arguments)]
fn for_each_pair(basis: &RadialBasis, mut f: impl FnMut(usize, usize, f64, f64, f64, f64, f64, f64)) {
    let k = basis.order();
    let n = basis.n_splines() as isize;
    for iq in &basis.intervals {
        for (q, (&r, &wt)) in iq.nodes.iter().zip(&iq.weights).enumerate() {
            let vals = &iq.values[q * k..(q + 1) * k];
            let ders = &iq.derivs[q * k..(q + 1) * k];
            for a in 0..k {
                let i = iq.first + a as isize;
                if i < 0 || i >= n {
                    continue;
                }
                for b in 0..k {
                    let j = iq.first + b as isize;
                    if j < 0 || j >= n {
                        continue;
                    }
                    f(i as usize, j as usize, r, wt, vals[a], vals[b], ders[a], ders[b]);
                }
            }
        }
    }
}
