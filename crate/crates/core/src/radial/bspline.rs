//! B-spline evaluation on a clamped knot vector.

/// Index μ of the knot interval [t_μ, t_μ+1) containing `x`, restricted to
/// nondegenerate intervals. `x == t_last` maps to the last nondegenerate interval.
pub fn find_interval(knots: &[f64], order: usize, x: f64) -> usize {
    let n_total = knots.len() - order;
    if x >= knots[n_total] {
        return n_total - 1;
    }
    if x <= knots[order - 1] {
        return order - 1;
    }
    // knots[mu] <= x < knots[mu + 1]
    let upper = knots.partition_point(|&t| t <= x);
    upper - 1
}

/// Values and first derivatives of the `order` B-splines that are nonzero on
/// interval μ, i.e. B_{μ-order+1} ..= B_μ, written into `vals` and `ders`.
pub fn eval_nonzero(knots: &[f64], order: usize, mu: usize, x: f64, vals: &mut [f64], ders: &mut [f64]) {
    let k = order;
    debug_assert!(vals.len() >= k && ders.len() >= k);
    let mut left = [0.0f64; 32];
    let mut right = [0.0f64; 32];
    let mut lower = [0.0f64; 32];
    vals[0] = 1.0;
    for j in 1..k {
        if j == k - 1 {
            lower[..j].copy_from_slice(&vals[..j]);
        }
        left[j] = x - knots[mu + 1 - j];
        right[j] = knots[mu + j] - x;
        let mut saved = 0.0;
        for r in 0..j {
            let temp = vals[r] / (right[r + 1] + left[j - r]);
            vals[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        vals[j] = saved;
    }
    if k == 1 {
        ders[0] = 0.0;
        return;
    }
    // B'_{i,k} = (k-1) [B_{i,k-1}/(t_{i+k-1}-t_i) - B_{i+1,k-1}/(t_{i+k}-t_{i+1})]
    let km1 = (k - 1) as f64;
    for r in 0..k {
        let i = mu + 1 + r - k;
        let mut d = 0.0;
        if r >= 1 {
            let span = knots[i + k - 1] - knots[i];
            if span > 0.0 {
                d += lower[r - 1] / span;
            }
        }
        if r < k - 1 {
            let span = knots[i + k] - knots[i + 1];
            if span > 0.0 {
                d -= lower[r] / span;
            }
        }
        ders[r] = km1 * d;
    }
}
