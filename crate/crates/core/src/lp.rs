//! Dyadic Littlewood–Paley blocks on the torus and the Besov norms
//! `X = B^s_{2,2}` and `Y = B^s_{∞,∞}`.

use rustfft::num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::multiplier::Multiplier;
use crate::spectral::{inverse_pair, Grid, SpectralField, VectorField};

/// Polynomial smoothstep used for the transition of `χ` in `log₂|ξ|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum Profile {
    /// `3t² − 2t³`, C¹.
    Cubic,
    /// `6t⁵ − 15t⁴ + 10t³`, C².
    #[default]
    Quintic,
    /// C³ septic.
    Septic,
}

impl Profile {
    fn step(self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        match self {
            Profile::Cubic => t * t * (3.0 - 2.0 * t),
            Profile::Quintic => t * t * t * (t * (6.0 * t - 15.0) + 10.0),
            Profile::Septic => t.powi(4) * (35.0 + t * (-84.0 + t * (70.0 - 20.0 * t))),
        }
    }
}

/// Inner radius of the transition of `χ`; `χ = 1` below it.
pub const CHI_INNER: f64 = 0.75;
/// `χ = 0` at and beyond this radius.
pub const CHI_OUTER: f64 = 1.0;

#[derive(Debug, Clone)]
pub struct Partition {
    grid: Grid,
    profile: Profile,
    j_max: i32,
    j_top: i32,
    // weights[b][idx] for block b = j + 1, j = -1..=j_top
    weights: Vec<Vec<f64>>,
}

impl Partition {
    /// `χ(ξ)` at radius `r`.
    pub fn chi(&self, r: f64) -> f64 {
        chi(self.profile, r)
    }

    /// `φ(ξ) = χ(ξ/2) − χ(ξ)`.
    pub fn phi(&self, r: f64) -> f64 {
        self.chi(0.5 * r) - self.chi(r)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn profile(&self) -> Profile {
        self.profile
    }

    /// Largest block whose annulus fits below the dealias cut.
    pub fn j_max(&self) -> i32 {
        self.j_max
    }

    /// Largest block that sees any grid wavenumber.
    pub fn j_top(&self) -> i32 {
        self.j_top
    }

    /// Block indices `-1..=j_top`.
    pub fn blocks(&self) -> impl Iterator<Item = i32> {
        -1..=self.j_top
    }

    /// Fourier weight of block `j` at flat index `idx`.
    pub fn weight(&self, j: i32, idx: usize) -> f64 {
        self.weights[(j + 1) as usize][idx]
    }

    /// Fourier weight of `S_j = Σ_{k ≤ j} Δ_k`, i.e. `χ(2^{−(j+1)}ξ)`.
    pub fn partial_weight(&self, j: i32, r: f64) -> f64 {
        self.chi(r * 2f64.powi(-(j + 1)))
    }
}

fn chi(profile: Profile, r: f64) -> f64 {
    if r <= CHI_INNER {
        return 1.0;
    }
    if r >= CHI_OUTER {
        return 0.0;
    }
    let t = (r / CHI_INNER).log2() / (CHI_OUTER / CHI_INNER).log2();
    1.0 - profile.step(t)
}

pub fn build_partition(grid: Grid, profile: Profile) -> Result<Partition> {
    // 2^{j+1} ≤ k0·N/3
    let cut = grid.k0() * grid.n() as f64 / 3.0;
    let j_max = cut.log2().floor() as i32 - 1;
    if j_max < 2 {
        return Err(Error::GridTooSmall(format!(
            "N={} L={} gives jMax={j_max}; need at least 2",
            grid.n(),
            grid.length()
        )));
    }
    let k_corner = grid.k0() * grid.n() as f64 / 2.0 * std::f64::consts::SQRT_2;
    let mut j_top = j_max;
    while CHI_INNER * 2f64.powi(j_top + 1) < k_corner {
        j_top += 1;
    }
    let radii: Vec<f64> = (0..grid.len()).map(|i| grid.wavenumber_magnitude(i)).collect();
    let weights = (-1..=j_top)
        .map(|j| {
            radii
                .iter()
                .map(|&r| {
                    if j < 0 {
                        chi(profile, r)
                    } else {
                        let s = r * 2f64.powi(-j);
                        chi(profile, 0.5 * s) - chi(profile, s)
                    }
                })
                .collect()
        })
        .collect();
    Ok(Partition { grid, profile, j_max, j_top, weights })
}

#[derive(Debug, Clone)]
pub struct Decomposition {
    /// Block `j` is stored at position `j + 1`.
    pub blocks: Vec<SpectralField>,
    pub j_max: i32,
    pub source_l2: f64,
}

impl Decomposition {
    pub fn block(&self, j: i32) -> &SpectralField {
        &self.blocks[(j + 1) as usize]
    }

    pub fn reconstruct(&self) -> SpectralField {
        let g = *self.blocks[0].grid();
        let mut v = vec![0.0; g.len()];
        for b in &self.blocks {
            for (a, x) in v.iter_mut().zip(b.values()) {
                *a += x;
            }
        }
        SpectralField::from_values(g, v).expect("same grid")
    }
}

fn weighted(c: &[Complex64], w: &[f64]) -> Vec<Complex64> {
    c.iter().zip(w).map(|(c, w)| c * *w).collect()
}

pub fn decompose(f: &SpectralField, p: &Partition) -> Result<Decomposition> {
    if f.grid() != p.grid() {
        return Err(Error::GridMismatch("field and partition grids differ".into()));
    }
    let g = *f.grid();
    let c = f.coeffs();
    let count = p.weights.len();
    let mut blocks = Vec::with_capacity(count);
    let mut b = 0;
    while b < count {
        let wa = weighted(c, &p.weights[b]);
        if b + 1 < count {
            let wb = weighted(c, &p.weights[b + 1]);
            let (va, vb) = inverse_pair(g.n(), &wa, &wb);
            blocks.push(SpectralField::from_values(g, va)?);
            blocks.push(SpectralField::from_values(g, vb)?);
            b += 2;
        } else {
            let (va, _) = inverse_pair(g.n(), &wa, &vec![Complex64::default(); g.len()]);
            blocks.push(SpectralField::from_values(g, va)?);
            b += 1;
        }
    }
    Ok(Decomposition { blocks, j_max: p.j_max, source_l2: f.l2_norm() })
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockNorm {
    pub j: i32,
    pub l2: f64,
    pub linf: f64,
    pub weighted_l2: f64,
    pub weighted_linf: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BesovNorms {
    pub s: f64,
    pub x_norm: f64,
    pub y_norm: f64,
    pub l2: f64,
    /// `‖f‖_{C^s ∩ L²}` proxy: `Y + ‖f‖_{L²}`.
    pub proxy: f64,
    pub j_max: i32,
    pub per_block: Vec<BlockNorm>,
}

impl BesovNorms {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("j,l2,linf,weighted_l2,weighted_linf\n");
        for b in &self.per_block {
            out.push_str(&format!("{},{:e},{:e},{:e},{:e}\n", b.j, b.l2, b.linf, b.weighted_l2, b.weighted_linf));
        }
        out
    }
}

pub fn besov_norms(d: &Decomposition, s: f64) -> Result<BesovNorms> {
    if !(s > 0.0 && s <= 4.0) {
        return Err(Error::invalid(format!("regularity exponent must lie in (0, 4], got {s}")));
    }
    let mut per_block = Vec::with_capacity(d.blocks.len());
    let (mut x2, mut y) = (0.0f64, 0.0f64);
    for (b, field) in d.blocks.iter().enumerate() {
        let j = b as i32 - 1;
        let w = 2f64.powf(j as f64 * s);
        let l2 = field.l2_norm();
        let linf = field.linf_norm();
        x2 += (w * l2).powi(2);
        y = y.max(w * linf);
        per_block.push(BlockNorm { j, l2, linf, weighted_l2: w * l2, weighted_linf: w * linf });
    }
    let l2 = d.source_l2;
    Ok(BesovNorms { s, x_norm: x2.sqrt(), y_norm: y, l2, proxy: y + l2, j_max: d.j_max, per_block })
}

/// `(Σ_k (1+|k|²)^s |f̂(k)|²)^{1/2}` in the same `L²` normalisation.
pub fn sobolev_norm(f: &SpectralField, s: f64) -> f64 {
    let g = *f.grid();
    f.coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| (1.0 + g.wavenumber_magnitude(i).powi(2)).powf(s) * c.norm_sqr())
        .sum::<f64>()
        .sqrt()
        * g.length()
}

#[derive(Debug, Clone, Serialize)]
pub struct GradientBlock {
    pub j: i32,
    pub sup: f64,
    pub m_at_2j: f64,
    pub normalized: f64,
}

/// `‖S_j ∇u‖_∞ / m(2^j)` for `j = 0..=j_top`, with the pointwise Frobenius norm.
pub fn sup_block_gradient(u: &VectorField, p: &Partition, m: &Multiplier) -> Result<Vec<GradientBlock>> {
    let g = *u.grid();
    if &g != p.grid() {
        return Err(Error::GridMismatch("velocity and partition grids differ".into()));
    }
    let c1 = u.u1.coeffs();
    let c2 = u.u2.coeffs();
    let radii: Vec<f64> = (0..g.len()).map(|i| g.wavenumber_magnitude(i)).collect();
    let mut table = Vec::new();
    for j in 0..=p.j_top {
        let mut comps: [Vec<Complex64>; 4] = Default::default();
        for (idx, r) in radii.iter().enumerate() {
            let w = p.partial_weight(j, *r);
            let (k1, k2) = g.derivative_wavevector(idx);
            let d1 = Complex64::new(0.0, k1 * w);
            let d2 = Complex64::new(0.0, k2 * w);
            comps[0].push(d1 * c1[idx]);
            comps[1].push(d2 * c1[idx]);
            comps[2].push(d1 * c2[idx]);
            comps[3].push(d2 * c2[idx]);
        }
        let (a, b) = inverse_pair(g.n(), &comps[0], &comps[1]);
        let (c, d) = inverse_pair(g.n(), &comps[2], &comps[3]);
        let sup = (0..g.len()).fold(0.0f64, |acc, i| acc.max((a[i] * a[i] + b[i] * b[i] + c[i] * c[i] + d[i] * d[i]).sqrt()));
        let m_at = m.eval(2f64.powi(j))?;
        table.push(GradientBlock { j, sup, m_at_2j: m_at, normalized: sup / m_at });
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid;

    #[test]
    fn jmax_from_dealias_cut() {
        assert_eq!(build_partition(Grid::periodic(256).unwrap(), Profile::default()).unwrap().j_max(), 5);
        assert_eq!(build_partition(Grid::periodic(128).unwrap(), Profile::default()).unwrap().j_max(), 4);
        assert!(matches!(
            build_partition(Grid::periodic(16).unwrap(), Profile::default()),
            Err(Error::GridTooSmall(_))
        ));
    }

    #[test]
    fn profiles_are_monotone_steps() {
        for p in [Profile::Cubic, Profile::Quintic, Profile::Septic] {
            assert_eq!(p.step(0.0), 0.0);
            assert!((p.step(1.0) - 1.0).abs() < 1e-15);
            let mut prev = 0.0;
            for i in 1..=100 {
                let v = p.step(i as f64 / 100.0);
                assert!(v >= prev);
                prev = v;
            }
        }
    }

    #[test]
    fn phi_support_in_annulus() {
        let p = build_partition(Grid::periodic(64).unwrap(), Profile::default()).unwrap();
        for i in 0..2000 {
            let r = i as f64 * 0.002;
            if !(0.5..=2.0).contains(&r) {
                assert_eq!(p.phi(r), 0.0, "r={r}");
            }
        }
    }

    #[test]
    fn pure_mode_lives_in_three_blocks() {
        let g = Grid::periodic(128).unwrap();
        let p = build_partition(g, Profile::default()).unwrap();
        let f = SpectralField::from_fn(g, |x, _| (8.0 * x).cos());
        let d = decompose(&f, &p).unwrap();
        for j in p.blocks() {
            if !(2..=4).contains(&j) {
                assert!(d.block(j).linf_norm() < 1e-14, "block {j}");
            }
        }
    }
}
