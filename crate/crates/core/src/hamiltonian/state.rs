use num_complex::Complex64;

/// Coefficients over (channel, radial eigenstate).
///
/// Stored as a column-major real matrix with `n_radial` rows and two columns per
/// channel (real part, then imaginary part), so that all channels of one l form a
/// contiguous block that matrix products can consume directly.
#[derive(Debug, Clone, PartialEq)]
pub struct WavefunctionState {
    n_radial: usize,
    n_channels: usize,
    pub t: f64,
    pub(crate) data: Vec<f64>,
}

impl WavefunctionState {
    pub fn zeros(n_channels: usize, n_radial: usize, t: f64) -> Self {
        Self {
            n_radial,
            n_channels,
            t,
            data: vec![0.0; 2 * n_radial * n_channels],
        }
    }

    /// Unit amplitude on a single (channel, radial state) pair.
    pub fn basis_state(n_channels: usize, n_radial: usize, channel: usize, radial: usize, t: f64) -> Self {
        let mut s = Self::zeros(n_channels, n_radial, t);
        s.set(channel, radial, Complex64::new(1.0, 0.0));
        s
    }

    pub fn from_coefficients(n_channels: usize, n_radial: usize, t: f64, coeffs: &[Complex64]) -> Self {
        assert_eq!(coeffs.len(), n_channels * n_radial);
        let mut s = Self::zeros(n_channels, n_radial, t);
        for c in 0..n_channels {
            for i in 0..n_radial {
                s.set(c, i, coeffs[c * n_radial + i]);
            }
        }
        s
    }

    pub fn n_radial(&self) -> usize {
        self.n_radial
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    pub fn len(&self) -> usize {
        self.n_radial * self.n_channels
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn get(&self, channel: usize, radial: usize) -> Complex64 {
        let base = 2 * channel * self.n_radial + radial;
        Complex64::new(self.data[base], self.data[base + self.n_radial])
    }

    #[inline]
    pub fn set(&mut self, channel: usize, radial: usize, v: Complex64) {
        let base = 2 * channel * self.n_radial + radial;
        self.data[base] = v.re;
        self.data[base + self.n_radial] = v.im;
    }

    /// (real, imaginary) parts of one channel.
    pub fn channel(&self, channel: usize) -> (&[f64], &[f64]) {
        let n = self.n_radial;
        let block = &self.data[2 * channel * n..2 * (channel + 1) * n];
        block.split_at(n)
    }

    /// Channel-major complex coefficient vector (index channel · n_radial + radial).
    pub fn coefficients(&self) -> Vec<Complex64> {
        (0..self.n_channels)
            .flat_map(|c| (0..self.n_radial).map(move |i| (c, i)))
            .map(|(c, i)| self.get(c, i))
            .collect()
    }

    pub fn raw(&self) -> &[f64] {
        &self.data
    }

    pub fn raw_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    pub fn channel_norm_sq(&self, channel: usize) -> f64 {
        let (re, im) = self.channel(channel);
        re.iter().chain(im).map(|x| x * x).sum()
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &WavefunctionState) -> Complex64 {
        inner_raw(self.n_radial, &self.data, &other.data)
    }
}

/// ⟨a|b⟩ for two split-complex buffers with `n` rows per column.
pub(crate) fn inner_raw(n: usize, a: &[f64], b: &[f64]) -> Complex64 {
    let mut re = 0.0;
    let mut im = 0.0;
    for (ca, cb) in a.chunks_exact(2 * n).zip(b.chunks_exact(2 * n)) {
        let (ar, ai) = ca.split_at(n);
        let (br, bi) = cb.split_at(n);
        for i in 0..n {
            re += ar[i] * br[i] + ai[i] * bi[i];
            im += ar[i] * bi[i] - ai[i] * br[i];
        }
    }
    Complex64::new(re, im)
}

/// y += α x for split-complex buffers.
pub(crate) fn axpy_raw(n: usize, alpha: Complex64, x: &[f64], y: &mut [f64]) {
    for (cx, cy) in x.chunks_exact(2 * n).zip(y.chunks_exact_mut(2 * n)) {
        let (xr, xi) = cx.split_at(n);
        let (yr, yi) = cy.split_at_mut(n);
        for i in 0..n {
            yr[i] += alpha.re * xr[i] - alpha.im * xi[i];
            yi[i] += alpha.re * xi[i] + alpha.im * xr[i];
        }
    }
}

/// x *= α for split-complex buffers.
pub(crate) fn scale_raw(n: usize, alpha: Complex64, x: &mut [f64]) {
    for cx in x.chunks_exact_mut(2 * n) {
        let (xr, xi) = cx.split_at_mut(n);
        for i in 0..n {
            let (r, m) = (xr[i], xi[i]);
            xr[i] = alpha.re * r - alpha.im * m;
            xi[i] = alpha.re * m + alpha.im * r;
        }
    }
}
