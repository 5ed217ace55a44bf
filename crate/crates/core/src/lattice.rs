//! Exact formulas for the simple symmetric random walk on Z.

use libm::lgamma as ln_gamma;

/// P(S_n = y).
pub fn pmf(n: u64, y: i64) -> f64 {
    let n_i = n as i64;
    if y.abs() > n_i || (n_i + y) % 2 != 0 {
        return 0.0;
    }
    let k = ((n_i + y) / 2) as f64;
    let nf = n as f64;
    (ln_gamma(nf + 1.0) - ln_gamma(k + 1.0) - ln_gamma(nf - k + 1.0) - nf * std::f64::consts::LN_2).exp()
}

/// P(S_n = y, L_n >= -r) by reflection at level -(r+1).
pub fn pmf_min_at_least(n: u64, y: i64, r: u64) -> f64 {
    let r = r as i64;
    if y < -r {
        return 0.0;
    }
    (pmf(n, y) - pmf(n, -2 * (r + 1) - y)).max(0.0)
}

/// P(L_n >= -r) = P(-r <= S_n <= r + 1).
pub fn prob_min_at_least(n: u64, r: u64) -> f64 {
    let r = r as i64;
    let hi = (r + 1).min(n as i64);
    let lo = (-r).max(-(n as i64));
    (lo..=hi).map(|y| pmf(n, y)).sum::<f64>().min(1.0)
}

/// P(L_n >= -r) for a real level r >= 0.
pub fn prob_min_at_least_real(n: u64, r: f64) -> f64 {
    if r < 0.0 {
        return 0.0;
    }
    prob_min_at_least(n, r.floor() as u64)
}

/// E[S_n^power; L_n >= 0].
pub fn moment_min_nonneg(n: u64, power: f64) -> f64 {
    (0..=n as i64).map(|y| (y as f64).powf(power) * pmf_min_at_least(n, y, 0)).sum()
}

/// V(x) = floor(x) + 1 for x >= 0, 0 otherwise.
pub fn renewal_v(x: f64) -> f64 {
    if x < 0.0 {
        0.0
    } else {
        x.floor() + 1.0
    }
}

/// U(x) = 1 + sum_k P(-S_k > x, L_k >= 0): 1 at x = 0, 2 ceil(|x|) for x < 0.
pub fn renewal_u(x: f64) -> f64 {
    if x > 0.0 {
        0.0
    } else if x == 0.0 {
        1.0
    } else {
        2.0 * (-x).ceil()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pmf_sums_to_one() {
        for n in [0_u64, 1, 7, 100, 4096] {
            let s: f64 = (-(n as i64)..=n as i64).map(|y| pmf(n, y)).sum();
            assert!((s - 1.0).abs() < 1e-10, "n={n}");
        }
        assert_eq!(pmf(3, 0), 0.0);
    }

    #[test]
    fn reflection_matches_enumeration() {
        let n = 12;
        for r in 0..4_i64 {
            let mut count = 0u64;
            let mut joint = vec![0u64; 2 * n + 1];
            for bits in 0u32..(1 << n) {
                let mut s = 0i64;
                let mut min = 0i64;
                for j in 0..n {
                    s += if bits >> j & 1 == 1 { 1 } else { -1 };
                    min = min.min(s);
                }
                if min >= -r {
                    count += 1;
                    joint[(s + n as i64) as usize] += 1;
                }
            }
            let total = (1u64 << n) as f64;
            assert!((prob_min_at_least(n as u64, r as u64) - count as f64 / total).abs() < 1e-12);
            for y in -(n as i64)..=n as i64 {
                let exact = joint[(y + n as i64) as usize] as f64 / total;
                assert!((pmf_min_at_least(n as u64, y, r as u64) - exact).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn renewal_functions_are_harmonic() {
        for x in 0..20 {
            let x = x as f64;
            let lhs = 0.5 * renewal_v(x + 1.0) + 0.5 * renewal_v(x - 1.0);
            assert_eq!(lhs, renewal_v(x));
            let y = -x;
            let lhs_u = 0.5 * if y + 1.0 < 0.0 { renewal_u(y + 1.0) } else { 0.0 } + 0.5 * renewal_u(y - 1.0);
            assert_eq!(lhs_u, renewal_u(y));
        }
    }
}
