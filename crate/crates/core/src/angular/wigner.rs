//! Wigner 3j symbols by the three-term recursion in the first angular momentum,
//! run forward through the classically forbidden region and backward through the
//! allowed one.
//!
//! Arguments are doubled so that half-integer momenta are representable.

/// 3j symbol for integer arguments.
pub fn wigner3j(j1: i32, j2: i32, j3: i32, m1: i32, m2: i32, m3: i32) -> f64 {
    wigner3j_doubled(2 * j1, 2 * j2, 2 * j3, 2 * m1, 2 * m2, 2 * m3)
}

/// 3j symbol with every argument given as twice its value.
pub fn wigner3j_doubled(tj1: i32, tj2: i32, tj3: i32, tm1: i32, tm2: i32, tm3: i32) -> f64 {
    if !selection_rules_hold([tj1, tj2, tj3], [tm1, tm2, tm3]) {
        return 0.0;
    }
    let cols = [(tj1, tm1), (tj2, tm2), (tj3, tm3)];
    // Recurse over a column whose lower recursion bound is nonzero; cyclic column
    // permutations leave the symbol unchanged.
    for lead in 0..3 {
        let (a, b, c) = match lead {
            0 => (cols[0], cols[1], cols[2]),
            1 => (cols[1], cols[2], cols[0]),
            _ => (cols[2], cols[0], cols[1]),
        };
        let tjmin = (b.0 - c.0).abs().max(a.1.abs());
        if tjmin > 0 {
            return recurse_first(a, b, c);
        }
    }
    // All three lower bounds vanish: j1 = j2 = j3 and m1 = m2 = m3 = 0.
    equal_zero_projection(tj1 / 2)
}

fn selection_rules_hold(tj: [i32; 3], tm: [i32; 3]) -> bool {
    if tj.iter().any(|&j| j < 0) {
        return false;
    }
    if tm[0] + tm[1] + tm[2] != 0 {
        return false;
    }
    for i in 0..3 {
        if tm[i].abs() > tj[i] || (tj[i] - tm[i]) % 2 != 0 {
            return false;
        }
    }
    let [a, b, c] = tj;
    if c > a + b || c < (a - b).abs() || (a + b + c) % 2 != 0 {
        return false;
    }
    true
}

/// (j j j; 0 0 0), nonzero only for even 3j.
fn equal_zero_projection(j: i32) -> f64 {
    if (3 * j) % 2 != 0 {
        return 0.0;
    }
    let g = 3 * j / 2;
    // (−1)^g sqrt[(j!)³ / (3j+1)!] g! / ((g−j)!)³
    let ln_fact = |n: i32| (1..=n).map(|k| (k as f64).ln()).sum::<f64>();
    let ln_mag = 0.5 * (3.0 * ln_fact(j) - ln_fact(3 * j + 1)) + ln_fact(g) - 3.0 * ln_fact(g - j);
    let sign = if g % 2 == 0 { 1.0 } else { -1.0 };
    sign * ln_mag.exp()
}

/// Evaluates (j1 j2 j3; m1 m2 m3) with the recursion running over j1. Requires the
/// lower end of the j1 range to be nonzero.
fn recurse_first(first: (i32, i32), second: (i32, i32), third: (i32, i32)) -> f64 {
    let (tj1, tm1) = first;
    let (j2, m2) = (second.0 as f64 / 2.0, second.1 as f64 / 2.0);
    let (j3, m3) = (third.0 as f64 / 2.0, third.1 as f64 / 2.0);
    let m1 = tm1 as f64 / 2.0;
    let tjmin = (second.0 - third.0).abs().max(tm1.abs());
    let tjmax = second.0 + third.0;
    let jmin = tjmin as f64 / 2.0;
    let n = ((tjmax - tjmin) / 2 + 1) as usize;
    let target = ((tj1 - tjmin) / 2) as usize;

    let coef_a = |j: f64| -> f64 {
        let v = (j * j - (j2 - j3).powi(2)) * ((j2 + j3 + 1.0).powi(2) - j * j) * (j * j - m1 * m1);
        v.max(0.0).sqrt()
    };
    let coef_b = |j: f64| -> f64 {
        -(2.0 * j + 1.0) * (j2 * (j2 + 1.0) * m1 - j3 * (j3 + 1.0) * m1 - j * (j + 1.0) * (m3 - m2))
    };

    let mut f = vec![0.0f64; n];
    if n == 1 {
        f[0] = 1.0;
    } else {
        // Forward from jmin while |f| grows.
        f[0] = 1.0;
        let mut stop = n - 1;
        for i in 0..n - 1 {
            let j = jmin + i as f64;
            let prev = if i > 0 { (j + 1.0) * coef_a(j) * f[i - 1] } else { 0.0 };
            f[i + 1] = -(coef_b(j) * f[i] + prev) / (j * coef_a(j + 1.0));
            if f[i + 1].abs() > 1e150 {
                for x in &mut f[..=i + 1] {
                    *x *= 1e-150;
                }
            }
            if i + 1 >= 2 && f[i + 1].abs() < f[i].abs() {
                stop = i + 1;
                break;
            }
        }
        if stop < n - 1 {
            // Backward from jmax down to stop − 1 and match on the two-point overlap.
            let mut g = vec![0.0f64; n];
            g[n - 1] = 1.0;
            for i in (stop..n).rev() {
                let j = jmin + i as f64;
                let next = if i + 1 < n { j * coef_a(j + 1.0) * g[i + 1] } else { 0.0 };
                g[i - 1] = -(coef_b(j) * g[i] + next) / ((j + 1.0) * coef_a(j));
                if g[i - 1].abs() > 1e150 {
                    for x in &mut g[i - 1..] {
                        *x *= 1e-150;
                    }
                }
            }
            let (num, den) = (stop - 1..=stop).fold((0.0, 0.0), |(nu, de), i| (nu + f[i] * g[i], de + g[i] * g[i]));
            let scale = num / den;
            for i in stop - 1..n {
                f[i] = g[i] * scale;
            }
        }
    }

    let norm: f64 = f
        .iter()
        .enumerate()
        .map(|(i, v)| (2.0 * (jmin + i as f64) + 1.0) * v * v)
        .sum();
    // sign of (j1max j2 j3; m1 m2 m3) is (−1)^(j2 − j3 − m1)
    let sign_exp = (second.0 - third.0 - tm1) / 2;
    let want = if sign_exp.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let scale = want * f[n - 1].signum() / norm.sqrt();
    f[target] * scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::{One, Signed, ToPrimitive, Zero};

    fn fact(n: i64) -> BigInt {
        (1..=n).fold(BigInt::one(), |acc, k| acc * k)
    }

    /// Racah's closed form evaluated in exact rational arithmetic. Returns the signed
    /// value as f64 from sign · sqrt(square).
    fn racah(j1: i64, j2: i64, j3: i64, m1: i64, m2: i64, m3: i64) -> f64 {
        if m1 + m2 + m3 != 0 || j3 > j1 + j2 || j3 < (j1 - j2).abs() || m1.abs() > j1 || m2.abs() > j2 || m3.abs() > j3 {
            return 0.0;
        }
        let delta = BigRational::new(
            fact(j1 + j2 - j3) * fact(j1 - j2 + j3) * fact(-j1 + j2 + j3),
            fact(j1 + j2 + j3 + 1),
        );
        let pref = fact(j1 + m1) * fact(j1 - m1) * fact(j2 + m2) * fact(j2 - m2) * fact(j3 + m3) * fact(j3 - m3);
        let kmin = 0.max(j2 - j3 - m1).max(j1 - j3 + m2);
        let kmax = (j1 + j2 - j3).min(j1 - m1).min(j2 + m2);
        let mut sum = BigRational::zero();
        for k in kmin..=kmax {
            let den = fact(k) * fact(j3 - j2 + k + m1) * fact(j3 - j1 + k - m2) * fact(j1 + j2 - j3 - k) * fact(j1 - k - m1) * fact(j2 - k + m2);
            let term = BigRational::new(BigInt::one(), den);
            if k % 2 == 0 {
                sum += term;
            } else {
                sum -= term;
            }
        }
        if sum.is_zero() {
            return 0.0;
        }
        let square = delta * BigRational::from_integer(pref) * &sum * &sum;
        let mut sign = if sum.is_positive() { 1.0 } else { -1.0 };
        if (j1 - j2 - m3).rem_euclid(2) == 1 {
            sign = -sign;
        }
        sign * square.to_f64().unwrap().sqrt()
    }

    #[test]
    fn closed_form_examples() {
        assert!((wigner3j(0, 0, 0, 0, 0, 0) - 1.0).abs() < 1e-15);
        assert!((wigner3j(1, 1, 0, 0, 0, 0) + 1.0 / 3f64.sqrt()).abs() < 1e-15);
        for j in 0..8 {
            for m in -j..=j {
                let closed = if (j - m) % 2 == 0 { 1.0 } else { -1.0 } / ((2 * j + 1) as f64).sqrt();
                assert!((wigner3j(j, j, 0, m, -m, 0) - closed).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn racah_oracle_spot_value() {
        let oracle = racah(6, 4, 2, 1, -3, 2);
        let v = wigner3j(6, 4, 2, 1, -3, 2);
        assert!(oracle != 0.0);
        assert!(((v - oracle) / oracle).abs() < 1e-12, "{v} vs {oracle}");
    }

    #[test]
    fn matches_racah_oracle_exhaustively() {
        for j1 in 0..=6i64 {
            for j2 in 0..=6i64 {
                for j3 in (j1 - j2).abs()..=(j1 + j2).min(8) {
                    for m1 in -j1..=j1 {
                        for m2 in -j2..=j2 {
                            let m3 = -m1 - m2;
                            if m3.abs() > j3 {
                                continue;
                            }
                            let oracle = racah(j1, j2, j3, m1, m2, m3);
                            let v = wigner3j(j1 as i32, j2 as i32, j3 as i32, m1 as i32, m2 as i32, m3 as i32);
                            assert!(
                                (v - oracle).abs() < 1e-12 * oracle.abs().max(1e-3),
                                "({j1} {j2} {j3}; {m1} {m2} {m3}): {v} vs {oracle}"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn large_arguments_match_oracle() {
        for &(j1, j2, j3, m1, m2) in &[(40, 1, 41, 3, 0), (60, 61, 1, -5, 5), (30, 25, 20, 7, -2), (50, 50, 50, 0, 0), (45, 1, 44, -44, 1)] {
            let m3 = -m1 - m2;
            let oracle = racah(j1, j2, j3, m1, m2, m3);
            let v = wigner3j(j1 as i32, j2 as i32, j3 as i32, m1 as i32, m2 as i32, m3 as i32);
            assert!((v - oracle).abs() <= 1e-11 * oracle.abs() + 1e-300, "({j1} {j2} {j3}; {m1} {m2} {m3}): {v} vs {oracle}");
        }
    }

    #[test]
    fn half_integer_values() {
        // (1/2 1/2 1; 1/2 −1/2 0) = 1/√6
        let v = wigner3j_doubled(1, 1, 2, 1, -1, 0);
        assert!((v - 1.0 / 6f64.sqrt()).abs() < 1e-14);
        // Σ_{m1,m2} (2j3+1) (3/2 1/2 1; m1 m2 m3)² summed over m3 counts 2j3+1 = 3 states
        let mut s = 0.0;
        for tm1 in [-3, -1, 1, 3] {
            for tm2 in [-1, 1] {
                let v = wigner3j_doubled(3, 1, 2, tm1, tm2, -tm1 - tm2);
                if (-tm1 - tm2).abs() <= 2 {
                    s += 3.0 * v * v;
                }
            }
        }
        assert!((s - 3.0).abs() < 1e-13);
    }

    #[test]
    fn selection_rule_failures_are_zero() {
        assert_eq!(wigner3j(1, 1, 3, 0, 0, 0), 0.0);
        assert_eq!(wigner3j(1, 1, 1, 1, 1, 0), 0.0);
        assert_eq!(wigner3j(2, 1, 1, 3, 0, -3), 0.0);
        assert_eq!(wigner3j(1, 1, 1, 0, 0, 0), 0.0);
    }

    #[test]
    fn orthogonality_up_to_ten() {
        for j1 in 0..=10 {
            for j2 in 0..=10 {
                let lo = (j1 - j2).abs();
                let hi = j1 + j2;
                for j3 in lo..=hi {
                    for j3p in lo..=hi {
                        for m3 in -j3.min(j3p)..=j3.min(j3p) {
                            let mut s = 0.0;
                            for m1 in -j1..=j1 {
                                let m2 = -m1 - m3;
                                if m2.abs() > j2 {
                                    continue;
                                }
                                s += wigner3j(j1, j2, j3, m1, m2, m3) * wigner3j(j1, j2, j3p, m1, m2, m3);
                            }
                            s *= (2 * j3 + 1) as f64;
                            let want = if j3 == j3p { 1.0 } else { 0.0 };
                            assert!((s - want).abs() < 1e-12, "{j1} {j2} {j3} {j3p} {m3}: {s}");
                        }
                    }
                }
            }
        }
    }
}
