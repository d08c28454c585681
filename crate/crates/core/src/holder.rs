//! Hölder difference quotients computed directly in physical space.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectral::{Grid, SpectralField};

/// `sup_{x, h} |f(x+h) − f(x)| / |h|^s` over grid shifts `h` of dyadic length
/// along the axes and diagonals, with periodic wrap.
pub fn shift_quotient(f: &SpectralField, s: f64) -> f64 {
    let g = *f.grid();
    let n = g.n();
    let v = f.values();
    let mut best = 0.0f64;
    let mut step = 1usize;
    while step <= n / 2 {
        for (a, b) in [(step as isize, 0isize), (0, step as isize), (step as isize, step as isize), (step as isize, -(step as isize))] {
            let dist = g.spacing() * ((a * a + b * b) as f64).sqrt();
            let scale = dist.powf(-s);
            for i2 in 0..n {
                let j2 = (i2 as isize + b).rem_euclid(n as isize) as usize;
                for i1 in 0..n {
                    let j1 = (i1 as isize + a).rem_euclid(n as isize) as usize;
                    best = best.max((v[j2 * n + j1] - v[i2 * n + i1]).abs() * scale);
                }
            }
        }
        step *= 2;
    }
    best
}

#[derive(Debug, Clone, Serialize)]
pub struct BandHolder {
    pub mu: f64,
    pub seminorm: f64,
    pub pairs_used: usize,
    /// Per dyadic range `[2^{-k}, 2^{-k+1}]·L`: (k, sup quotient).
    pub per_range: Vec<(u32, f64)>,
}

/// Pair-sampled `|f|_μ` over points of `band` (flat grid indices).
///
/// Every band point `x` draws the same number of partners per dyadic
/// distance range (enough to spend at least `budget` pairs): a direction and
/// a length, with `y` rounded to the grid and kept only if it lies in the
/// band without crossing the periodic seam.
pub fn band_seminorm(grid: &Grid, values: &[f64], band: &[usize], mu: f64, budget: usize, seed: u64) -> Result<BandHolder> {
    band_seminorm_vec(grid, &[values], band, mu, budget, seed)
}

/// As [`band_seminorm`] for a vector field, with `|f(x) − f(y)|` the
/// Euclidean norm over components.
pub fn band_seminorm_vec(grid: &Grid, components: &[&[f64]], band: &[usize], mu: f64, budget: usize, seed: u64) -> Result<BandHolder> {
    if !(mu > 0.0 && mu <= 1.0) {
        return Err(Error::invalid(format!("Hölder exponent must lie in (0, 1], got {mu}")));
    }
    if band.len() < 100 {
        return Err(Error::Geometry(format!("band has {} sample points; need at least 100", band.len())));
    }
    if components.is_empty() || components.iter().any(|c| c.len() != grid.len()) {
        return Err(Error::GridMismatch("values do not match grid".into()));
    }
    let n = grid.n();
    let h = grid.spacing();
    let l = grid.length();
    let mut in_band = vec![false; grid.len()];
    for &i in band {
        in_band[i] = true;
    }
    let mut ranges = Vec::new();
    let mut k = 1u32;
    while l * 2f64.powi(-(k as i32) + 1) >= h {
        ranges.push(k);
        k += 1;
    }
    let per = budget.div_ceil(band.len() * ranges.len()).max(1);
    let mut sups = vec![0.0f64; ranges.len()];
    let mut used = 0;
    for &x in band {
        // one stream per grid point keeps a point's pairs fixed as the band changes
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(x as u64);
        let (x1, x2) = ((x % n) as isize, (x / n) as isize);
        for (r, &k) in ranges.iter().enumerate() {
            let lo = (l * 2f64.powi(-(k as i32))).max(h);
            let hi = l * 2f64.powi(-(k as i32) + 1);
            for _ in 0..per {
                let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                let d: f64 = rng.gen_range(lo..=hi);
                let y1 = x1 + (d * theta.cos() / h).round() as isize;
                let y2 = x2 + (d * theta.sin() / h).round() as isize;
                if y1 < 0 || y2 < 0 || y1 >= n as isize || y2 >= n as isize {
                    continue;
                }
                let y = y2 as usize * n + y1 as usize;
                if y == x || !in_band[y] {
                    continue;
                }
                let dist = h * (((y1 - x1).pow(2) + (y2 - x2).pow(2)) as f64).sqrt();
                let diff = components.iter().map(|c| (c[y] - c[x]).powi(2)).sum::<f64>().sqrt();
                sups[r] = sups[r].max(diff / dist.powf(mu));
                used += 1;
            }
        }
    }
    let best = sups.iter().copied().fold(0.0, f64::max);
    let per_range = ranges.iter().copied().zip(sups).collect();
    Ok(BandHolder { mu, seminorm: best, pairs_used: used, per_range })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_has_zero_quotient() {
        let g = Grid::periodic(32).unwrap();
        let f = SpectralField::from_fn(g, |_, _| 3.0);
        assert_eq!(shift_quotient(&f, 0.5), 0.0);
        let band: Vec<usize> = (0..g.len()).collect();
        assert_eq!(band_seminorm(&g, f.values(), &band, 0.5, 1000, 1).unwrap().seminorm, 0.0);
    }

    #[test]
    fn linear_function_on_annulus() {
        let g = Grid::periodic(128).unwrap();
        let c = g.length() / 2.0;
        let vals: Vec<f64> = (0..g.len()).map(|i| g.coords(i).0).collect();
        let band: Vec<usize> = (0..g.len())
            .filter(|&i| {
                let (x, y) = g.coords(i);
                ((x - c).hypot(y - c) - 1.5).abs() < 0.3
            })
            .collect();
        let est = band_seminorm(&g, &vals, &band, 1.0, 20_000, 4).unwrap();
        assert!((est.seminorm - 1.0).abs() <= 0.05, "{}", est.seminorm);
        assert!(est.seminorm <= 1.0 + 1e-12);
    }

    #[test]
    fn small_band_is_rejected() {
        let g = Grid::periodic(32).unwrap();
        let v = vec![0.0; g.len()];
        assert!(band_seminorm(&g, &v, &[1, 2, 3], 0.5, 10, 0).is_err());
    }

    #[test]
    fn sine_quotient_at_unit_exponent() {
        let g = Grid::periodic(64).unwrap();
        let f = SpectralField::from_fn(g, |x, _| x.sin());
        let q = shift_quotient(&f, 1.0);
        assert!(q <= 1.0 && q > 0.99, "{q}");
    }
}
