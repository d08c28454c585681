//! Initial vorticity fields.

use crate::error::{Error, Result};
use crate::spectral::{Grid, SpectralField};

/// Signed minimal-image offset on a circle of period `l`.
pub fn wrap_offset(d: f64, l: f64) -> f64 {
    d - l * (d / l).round()
}

/// Laguerre polynomial `L_p(q)`.
pub fn laguerre(p: usize, q: f64) -> f64 {
    let (mut a, mut b) = (1.0, 1.0 - q);
    if p == 0 {
        return a;
    }
    for k in 1..p {
        let kf = k as f64;
        let c = ((2.0 * kf + 1.0 - q) * b - kf * a) / (kf + 1.0);
        a = b;
        b = c;
    }
    b
}

/// `A·L_p(r²/σ²)·exp(−r²/σ²)` around `center`. For `p ≥ 1` the total
/// circulation vanishes and the spectrum decays like `|k|^{2p}` at low `k`,
/// which keeps the field radial to high accuracy on the torus.
pub fn laguerre_gaussian(grid: Grid, center: (f64, f64), amp: f64, sigma: f64, order: usize) -> SpectralField {
    let l = grid.length();
    SpectralField::from_fn(grid, |x, y| {
        let dx = wrap_offset(x - center.0, l);
        let dy = wrap_offset(y - center.1, l);
        let q = (dx * dx + dy * dy) / (sigma * sigma);
        amp * laguerre(order, q) * (-q).exp()
    })
}

pub fn gaussian(grid: Grid, center: (f64, f64), amp: f64, sigma: f64) -> SpectralField {
    laguerre_gaussian(grid, center, amp, sigma, 0)
}

/// Counter-rotating Gaussian pair on the line `x₂ = L/2`, centres snapped
/// to grid points.
pub fn vortex_pair(grid: Grid, amp: f64, sigma: f64, separation: f64) -> Result<SpectralField> {
    if !(sigma > 0.0 && separation > 0.0 && separation < grid.length() / 2.0) {
        return Err(Error::invalid("vortex pair needs sigma > 0 and 0 < separation < L/2"));
    }
    let h = grid.spacing();
    let c = grid.length() / 2.0;
    let off = (0.5 * separation / h).round() * h;
    let left = gaussian(grid, (c - off, c), amp, sigma);
    let right = gaussian(grid, (c + off, c), -amp, sigma);
    left.add(&right)
}

/// `A cos(k₁x₁ + k₂x₂)`.
pub fn cosine_mode(grid: Grid, amp: f64, k: (i32, i32)) -> SpectralField {
    let k0 = grid.k0();
    SpectralField::from_fn(grid, |x, y| amp * (k0 * (f64::from(k.0) * x + f64::from(k.1) * y)).cos())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laguerre_values() {
        // L_2(q) = 1 - 2q + q²/2, L_4(1) = 1 - 4 + 3 - 2/3 + 1/24
        assert!((laguerre(2, 3.0) - (1.0 - 6.0 + 4.5)).abs() < 1e-14);
        assert!((laguerre(4, 1.0) - (1.0 - 4.0 + 3.0 - 2.0 / 3.0 + 1.0 / 24.0)).abs() < 1e-14);
    }

    #[test]
    fn shielded_data_have_zero_mean() {
        let g = Grid::periodic(128).unwrap();
        for p in 1..=4 {
            let w = laguerre_gaussian(g, (1.0, 2.0), 3.0, 0.4, p);
            assert!(w.mean().abs() < 1e-12, "p={p}: {}", w.mean());
        }
        let pair = vortex_pair(g, 3.0, 0.4, 1.6).unwrap();
        assert!(pair.mean().abs() < 1e-12);
    }

    #[test]
    fn wrap_is_minimal() {
        assert!((wrap_offset(5.9, 6.0) + 0.1).abs() < 1e-12);
        assert!((wrap_offset(-2.0, 6.0) + 2.0).abs() < 1e-12);
    }
}
