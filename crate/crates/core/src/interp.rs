//! Periodic bicubic (4×4 cubic Lagrange) interpolation of grid samples.

use crate::spectral::Grid;

#[inline]
fn weights(t: f64) -> [f64; 4] {
    // nodes at -1, 0, 1, 2
    let a = t + 1.0;
    let b = t;
    let c = t - 1.0;
    let d = t - 2.0;
    [-b * c * d / 6.0, a * c * d / 2.0, -a * b * d / 2.0, a * b * c / 6.0]
}

/// Interpolant over one periodic sample array.
#[derive(Debug, Clone, Copy)]
pub struct Bicubic<'a> {
    n: usize,
    inv_h: f64,
    values: &'a [f64],
}

impl<'a> Bicubic<'a> {
    pub fn new(grid: &Grid, values: &'a [f64]) -> Self {
        assert_eq!(values.len(), grid.len(), "sample count must match the grid");
        Bicubic { n: grid.n(), inv_h: 1.0 / grid.spacing(), values }
    }

    /// Value at physical point `(x, y)`, wrapped periodically.
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.eval_grid(x * self.inv_h, y * self.inv_h)
    }

    /// Value at grid node `idx` displaced by `(dx, dy)`; exact at zero
    /// displacement.
    pub fn eval_from(&self, idx: usize, dx: f64, dy: f64) -> f64 {
        self.eval_grid((idx % self.n) as f64 + dx * self.inv_h, (idx / self.n) as f64 + dy * self.inv_h)
    }

    fn eval_grid(&self, gx: f64, gy: f64) -> f64 {
        let n = self.n as isize;
        let (fx, fy) = (gx.floor(), gy.floor());
        let wx = weights(gx - fx);
        let wy = weights(gy - fy);
        let (ix, iy) = (fx as isize, fy as isize);
        let mut acc = 0.0;
        for (dj, wyj) in wy.iter().enumerate() {
            let row = (iy + dj as isize - 1).rem_euclid(n) as usize * self.n;
            let mut r = 0.0;
            for (di, wxi) in wx.iter().enumerate() {
                r += wxi * self.values[row + (ix + di as isize - 1).rem_euclid(n) as usize];
            }
            acc += wyj * r;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_nodes_and_cubics() {
        let g = Grid::new(16, 16.0).unwrap();
        let vals: Vec<f64> = (0..g.len()).map(|i| (i as f64 * 0.37).sin()).collect();
        let b = Bicubic::new(&g, &vals);
        for i in 0..g.len() {
            let (x, y) = g.coords(i);
            assert!((b.eval(x, y) - vals[i]).abs() < 1e-14);
        }
        // exact for cubics away from the periodic seam
        let c: Vec<f64> = (0..g.len())
            .map(|i| {
                let (x, y) = g.coords(i);
                x * x * x - 2.0 * x * y + y * y
            })
            .collect();
        let b = Bicubic::new(&g, &c);
        let (x, y) = (5.3, 7.9);
        assert!((b.eval(x, y) - (x * x * x - 2.0 * x * y + y * y)).abs() < 1e-10);
    }

    #[test]
    fn node_offsets_are_exact() {
        let g = Grid::periodic(16).unwrap();
        let vals: Vec<f64> = (0..g.len()).map(|i| (i as f64 * 0.91).cos()).collect();
        let b = Bicubic::new(&g, &vals);
        for i in 0..g.len() {
            assert_eq!(b.eval_from(i, 0.0, 0.0), vals[i]);
            let (x, y) = g.coords(i);
            assert!((b.eval_from(i, 0.13, -0.2) - b.eval(x + 0.13, y - 0.2)).abs() < 1e-13);
        }
    }

    #[test]
    fn wraps_periodically() {
        let g = Grid::periodic(32).unwrap();
        let vals: Vec<f64> = (0..g.len()).map(|i| g.coords(i).0.sin()).collect();
        let b = Bicubic::new(&g, &vals);
        let l = g.length();
        assert!((b.eval(0.3, 1.0) - b.eval(0.3 + l, 1.0 - 2.0 * l)).abs() < 1e-12);
        assert!((b.eval(-0.05, 0.0) - (-0.05f64).sin()).abs() < 1e-5);
    }
}
