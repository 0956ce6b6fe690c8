//! B-spline discretization of the reduced radial coordinate u(r) = r R(r).
//!
//! The first and last B-splines of the clamped knot vector are dropped so that every
//! retained function vanishes at r = 0 and r = r_max.

pub mod bspline;
mod cache;
mod operators;
pub mod quadrature;
mod spectrum;

pub use cache::{read_spectrum, spectrum_cache_path, write_spectrum, SpectrumKey};
pub use operators::{assemble_operators, assemble_weighted, BandMatrix, RadialOperators};
pub use spectrum::{
    project_band, radial_matrix_elements, solve_channel, solve_channels, ChannelSpectrum, RadialTables,
};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Breakpoint distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum KnotLaw {
    Linear,
    /// Quadratic in a uniform parameter up to `r_match`, linear beyond, with a
    /// continuous spacing at the junction.
    SqrtRamp { r_match: f64 },
}

impl KnotLaw {
    pub const DEFAULT_MATCH_RADIUS: f64 = 20.0;

    pub fn sqrt_ramp() -> Self {
        KnotLaw::SqrtRamp {
            r_match: Self::DEFAULT_MATCH_RADIUS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasisParams {
    pub r_max: f64,
    pub order: usize,
    pub n_breakpoints: usize,
    pub knot_law: KnotLaw,
}

/// Quadrature data for one nondegenerate knot interval.
#[derive(Debug, Clone)]
pub(crate) struct IntervalQuadrature {
    /// Index of the first *retained* spline nonzero on the interval, as if the
    /// dropped first spline had index -1; may be -1.
    pub first: isize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// `order` values per node.
    pub values: Vec<f64>,
    pub derivs: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct RadialBasis {
    params: BasisParams,
    breakpoints: Vec<f64>,
    knots: Vec<f64>,
    n_splines: usize,
    pub(crate) intervals: Vec<IntervalQuadrature>,
    fingerprint: u64,
}

/// Points per knot interval. Well above `order` so that the 1/r and 1/r² integrands
/// on the geometrically growing intervals near the origin are resolved to round-off.
const QUAD_POINTS: usize = 24;

impl RadialBasis {
    pub fn new(params: BasisParams) -> Result<Self> {
        let BasisParams {
            r_max,
            order,
            n_breakpoints,
            knot_law,
        } = params;
        if !(r_max > 0.0 && r_max.is_finite()) {
            return Err(Error::invalid(format!("r_max must be > 0, got {r_max}")));
        }
        if order < 4 || order > 20 {
            return Err(Error::invalid(format!("B-spline order must be in 4..=20, got {order}")));
        }
        if n_breakpoints < order + 2 {
            return Err(Error::invalid(format!(
                "need at least order + 2 = {} breakpoints, got {n_breakpoints}",
                order + 2
            )));
        }
        let breakpoints = match knot_law {
            KnotLaw::Linear => (0..n_breakpoints)
                .map(|i| r_max * i as f64 / (n_breakpoints - 1) as f64)
                .collect::<Vec<_>>(),
            KnotLaw::SqrtRamp { r_match } => {
                if !(r_match > 0.0 && r_match < r_max) {
                    return Err(Error::invalid(format!(
                        "matching radius must lie in (0, r_max), got {r_match}"
                    )));
                }
                sqrt_ramp_breakpoints(r_max, r_match, n_breakpoints)
            }
        };
        if breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("breakpoints are not strictly increasing"));
        }

        let mut knots = vec![0.0; order - 1];
        knots.extend_from_slice(&breakpoints);
        knots.extend(std::iter::repeat_n(r_max, order - 1));
        let n_total = knots.len() - order;
        let n_splines = n_total - 2;

        let (gx, gw) = quadrature::gauss_legendre(QUAD_POINTS);
        let mut intervals = Vec::with_capacity(n_breakpoints - 1);
        let mut vals = vec![0.0; order];
        let mut ders = vec![0.0; order];
        for mu in (order - 1)..n_total {
            let (a, b) = (knots[mu], knots[mu + 1]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            let mut iq = IntervalQuadrature {
                first: mu as isize + 1 - order as isize - 1,
                nodes: Vec::with_capacity(QUAD_POINTS),
                weights: Vec::with_capacity(QUAD_POINTS),
                values: Vec::with_capacity(QUAD_POINTS * order),
                derivs: Vec::with_capacity(QUAD_POINTS * order),
            };
            for (x, w) in gx.iter().zip(&gw) {
                let r = mid + half * x;
                bspline::eval_nonzero(&knots, order, mu, r, &mut vals, &mut ders);
                iq.nodes.push(r);
                iq.weights.push(half * w);
                iq.values.extend_from_slice(&vals);
                iq.derivs.extend_from_slice(&ders);
            }
            intervals.push(iq);
        }

        let mut hasher = Sha256::new();
        hasher.update((order as u64).to_le_bytes());
        for k in &knots {
            hasher.update(k.to_le_bytes());
        }
        let digest = hasher.finalize();
        let fingerprint = u64::from_le_bytes(digest[..8].try_into().unwrap());

        Ok(Self {
            params,
            breakpoints,
            knots,
            n_splines,
            intervals,
            fingerprint,
        })
    }

    pub fn params(&self) -> &BasisParams {
        &self.params
    }

    pub fn r_max(&self) -> f64 {
        self.params.r_max
    }

    pub fn order(&self) -> usize {
        self.params.order
    }

    pub fn n_splines(&self) -> usize {
        self.n_splines
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Full clamped knot vector (endpoint multiplicity = order).
    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Identifies the knot set and order; equal fingerprints mean interchangeable bases.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    /// Value of retained spline `i` at `r`.
    pub fn eval(&self, i: usize, r: f64) -> f64 {
        let k = self.order();
        let mu = bspline::find_interval(&self.knots, k, r);
        let mut vals = vec![0.0; k];
        let mut ders = vec![0.0; k];
        bspline::eval_nonzero(&self.knots, k, mu, r, &mut vals, &mut ders);
        // retained index i is full index i + 1
        let full = i + 1;
        let lo = mu + 1 - k;
        if full >= lo && full <= mu {
            vals[full - lo]
        } else {
            0.0
        }
    }

    /// Evaluates Σ c_i B_i(r) for retained-spline coefficients `coeffs`.
    pub fn eval_expansion(&self, coeffs: &[f64], r: f64) -> f64 {
        let k = self.order();
        let mu = bspline::find_interval(&self.knots, k, r);
        let mut vals = vec![0.0; k];
        let mut ders = vec![0.0; k];
        bspline::eval_nonzero(&self.knots, k, mu, r, &mut vals, &mut ders);
        let lo = (mu + 1 - k) as isize - 1;
        (0..k)
            .filter_map(|j| {
                let i = lo + j as isize;
                (i >= 0 && (i as usize) < self.n_splines).then(|| coeffs[i as usize] * vals[j])
            })
            .sum()
    }
}

/// Breakpoints r(s) = r_match (s/s_m)² for s ≤ s_m, linear with matching slope beyond,
/// for uniform s ∈ [0, 1].
fn sqrt_ramp_breakpoints(r_max: f64, r_match: f64, n: usize) -> Vec<f64> {
    let s_m = 2.0 * r_match / (r_max + r_match);
    let slope = 2.0 * r_match / s_m;
    let mut b: Vec<f64> = (0..n)
        .map(|i| {
            let s = i as f64 / (n - 1) as f64;
            if s <= s_m {
                r_match * (s / s_m).powi(2)
            } else {
                r_match + slope * (s - s_m)
            }
        })
        .collect();
    b[0] = 0.0;
    b[n - 1] = r_max;
    b
}

/// Default box radius: room for the classical excursion plus a margin.
pub fn default_r_max(quiver_amplitude: f64) -> f64 {
    f64::max(150.0, 4.0 * quiver_amplitude + 50.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_knots() {
        let b = RadialBasis::new(BasisParams {
            r_max: 100.0,
            order: 7,
            n_breakpoints: 200,
            knot_law: KnotLaw::Linear,
        })
        .unwrap();
        let t = b.knots();
        assert_eq!(t.len(), 200 + 2 * 6);
        assert!(t[..7].iter().all(|&x| x == 0.0));
        assert!(t[t.len() - 7..].iter().all(|&x| x == 100.0));
        for w in b.breakpoints().windows(2) {
            assert!((w[1] - w[0] - 100.0 / 199.0).abs() < 1e-12);
        }
        assert_eq!(b.n_splines(), 200 + 7 - 4);
    }

    #[test]
    fn rejects_too_few_breakpoints() {
        let r = RadialBasis::new(BasisParams {
            r_max: 10.0,
            order: 3,
            n_breakpoints: 4,
            knot_law: KnotLaw::Linear,
        });
        assert!(r.is_err());
        let r = RadialBasis::new(BasisParams {
            r_max: 10.0,
            order: 7,
            n_breakpoints: 8,
            knot_law: KnotLaw::Linear,
        });
        assert!(r.is_err());
        let r = RadialBasis::new(BasisParams {
            r_max: 10.0,
            order: 7,
            n_breakpoints: 50,
            knot_law: KnotLaw::SqrtRamp { r_match: 20.0 },
        });
        assert!(r.is_err());
    }

    #[test]
    fn sqrt_ramp_is_monotone_with_continuous_spacing() {
        let b = sqrt_ramp_breakpoints(150.0, 20.0, 301);
        assert_eq!(b[0], 0.0);
        assert_eq!(*b.last().unwrap(), 150.0);
        let gaps: Vec<f64> = b.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(gaps.iter().all(|&g| g > 0.0));
        assert!(gaps[0] < 0.01);
        // spacing grows then stays constant; no jump larger than one quadratic increment
        for w in gaps.windows(2) {
            assert!(w[1] >= w[0] - 1e-9);
            assert!(w[1] - w[0] < 2.0 * gaps[0] + 1e-9);
        }
    }

    #[test]
    fn retained_splines_vanish_at_both_ends() {
        let b = RadialBasis::new(BasisParams {
            r_max: 30.0,
            order: 7,
            n_breakpoints: 40,
            knot_law: KnotLaw::SqrtRamp { r_match: 5.0 },
        })
        .unwrap();
        for i in 0..b.n_splines() {
            assert_eq!(b.eval(i, 0.0), 0.0);
            assert!(b.eval(i, 30.0).abs() < 1e-15);
        }
    }
}
