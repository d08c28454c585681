//! Bessel functions of the first kind of orders 0 and 1, their zeros, and the
//! averaged-partial-sum accelerator used for Hankel-type oscillatory tails.
//!
//! Small arguments (`x < 12`) use the power series; larger arguments use the
//! Hankel asymptotic expansion truncated at its smallest term.

use std::f64::consts::PI;

const SERIES_CUTOFF: f64 = 12.0;

fn series(nu: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let q = -half * half;
    let mut term = half.powi(nu as i32) / (1..=nu).map(f64::from).product::<f64>();
    let mut sum = term;
    for k in 1..200u32 {
        term *= q / (f64::from(k) * f64::from(k + nu));
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

fn asymptotic(nu: u32, x: f64) -> f64 {
    let mu = 4.0 * f64::from(nu * nu);
    let mut p = 1.0;
    let mut q = 0.0;
    let mut a = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..60u32 {
        let odd = f64::from(2 * k - 1);
        a *= (mu - odd * odd) / (f64::from(k) * 8.0 * x);
        if a.abs() >= prev || a.abs() < 1e-17 {
            break;
        }
        prev = a.abs();
        // k odd contributes to Q, k even to P, with alternating signs.
        match k % 4 {
            1 => q += a,
            2 => p -= a,
            3 => q -= a,
            _ => p += a,
        }
    }
    let chi = x - (0.5 * f64::from(nu) + 0.25) * PI;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// J₀(x).
pub fn j0(x: f64) -> f64 {
    let x = x.abs();
    if x < SERIES_CUTOFF {
        series(0, x)
    } else {
        asymptotic(0, x)
    }
}

/// J₁(x).
pub fn j1(x: f64) -> f64 {
    let s = x.signum();
    let x = x.abs();
    s * if x < SERIES_CUTOFF {
        series(1, x)
    } else {
        asymptotic(1, x)
    }
}

/// J₀′(x) = −J₁(x).
pub fn j0_prime(x: f64) -> f64 {
    -j1(x)
}

/// J₀″(x) = −J₀(x) + J₁(x)/x, from Bessel's equation.
pub fn j0_second(x: f64) -> f64 {
    if x.abs() < 1e-6 {
        return -0.5 + 3.0 * x * x / 16.0;
    }
    -j0(x) + j1(x) / x
}

/// First `count` positive zeros of J_ν for ν ∈ {0, 1}, by McMahon's
/// expansion refined with Newton's method.
pub fn zeros(nu: u32, count: usize) -> Vec<f64> {
    assert!(nu <= 1, "only orders 0 and 1 are supported");
    let mu = 4.0 * f64::from(nu * nu);
    (1..=count)
        .map(|s| {
            let beta = (s as f64 + 0.5 * f64::from(nu) - 0.25) * PI;
            let mut z = beta - (mu - 1.0) / (8.0 * beta) - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * (8.0 * beta).powi(3));
            for _ in 0..50 {
                let (f, df) = if nu == 0 {
                    (j0(z), -j1(z))
                } else {
                    (j1(z), j0(z) - j1(z) / z)
                };
                let dz = f / df;
                z -= dz;
                if dz.abs() < 1e-15 * z {
                    break;
                }
            }
            z
        })
        .collect()
}

/// Limit of an oscillating sequence of partial sums by repeated averaging of
/// neighbours (the Euler-type mean). Uses the last `depth + 1` entries.
pub fn averaged_limit(partial: &[f64], depth: usize) -> Option<f64> {
    if partial.len() < depth + 1 {
        return None;
    }
    let mut row: Vec<f64> = partial[partial.len() - depth - 1..].to_vec();
    while row.len() > 1 {
        row = row.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    }
    Some(row[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Miller backward recurrence, normalised with J₀ + 2ΣJ₂ₖ = 1.
    fn miller(x: f64) -> (f64, f64) {
        let start = 2 * ((x as usize + 40) / 2);
        let mut next = 0.0;
        let mut cur = 1e-30;
        let mut norm = 0.0;
        let mut vals = vec![0.0; start + 2];
        vals[start] = cur;
        for n in (1..=start).rev() {
            let prev = 2.0 * n as f64 / x * cur - next;
            next = cur;
            cur = prev;
            vals[n - 1] = cur;
            if vals.iter().any(|v: &f64| v.abs() > 1e250) {
                for v in vals.iter_mut() {
                    *v *= 1e-250;
                }
                next *= 1e-250;
                cur *= 1e-250;
            }
        }
        for (n, v) in vals.iter().enumerate() {
            if n == 0 {
                norm += v;
            } else if n % 2 == 0 {
                norm += 2.0 * v;
            }
        }
        (vals[0] / norm, vals[1] / norm)
    }

    #[test]
    fn j0_at_zero_is_one() {
        assert_eq!(j0(0.0), 1.0);
        assert_eq!(j1(0.0), 0.0);
    }

    #[test]
    fn matches_recurrence_oracle_across_branches() {
        for i in 1..400 {
            let x = 0.1 * i as f64;
            let (a0, a1) = miller(x);
            assert!((j0(x) - a0).abs() < 2e-11, "J0({x}): {} vs {a0}", j0(x));
            assert!((j1(x) - a1).abs() < 2e-11, "J1({x}): {} vs {a1}", j1(x));
        }
    }

    #[test]
    fn continuity_at_branch_switch() {
        let below = series(0, SERIES_CUTOFF);
        let above = asymptotic(0, SERIES_CUTOFF);
        assert!((below - above).abs() < 1e-11);
    }

    #[test]
    fn first_zeros_of_j0() {
        let z = zeros(0, 3);
        let published = [2.4048, 5.5201, 8.6537];
        for (a, b) in z.iter().zip(published) {
            assert!((a - b).abs() < 1e-3, "{a} vs {b}");
        }
        for s in zeros(0, 100) {
            assert!(j0(s).abs() < 1e-12);
        }
        for s in zeros(1, 100) {
            assert!(j1(s).abs() < 1e-12);
        }
    }

    #[test]
    fn averaging_sums_alternating_series() {
        // 1 - 1/2 + 1/3 - ... = ln 2
        let mut s = 0.0;
        let partial: Vec<f64> = (1..=30)
            .map(|k| {
                s += if k % 2 == 1 { 1.0 } else { -1.0 } / k as f64;
                s
            })
            .collect();
        let v = averaged_limit(&partial, 12).unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-7, "{v}");
    }
}
