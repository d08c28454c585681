//! Seeded random band-limited fields.
//!
//! Coefficients are drawn per integer wavevector in a fixed order, so a given
//! `(seed, index)` produces the same function on every grid that resolves
//! the band.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectral::{Grid, SpectralField};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorpusSpec {
    pub seed: u64,
    pub count: usize,
    /// Amplitudes fall off like `|k|^{-slope}`.
    pub slope: f64,
    /// Largest integer wavenumber magnitude present.
    pub cutoff: f64,
}

#[derive(Debug, Clone)]
pub struct FieldCorpus {
    spec: CorpusSpec,
    grid: Grid,
}

impl FieldCorpus {
    pub fn new(grid: Grid, spec: CorpusSpec) -> Result<Self> {
        if !(spec.cutoff >= 1.0 && spec.cutoff < grid.n() as f64 / 3.0) {
            return Err(Error::invalid(format!(
                "corpus cutoff {} must lie in [1, N/3) for N = {}",
                spec.cutoff,
                grid.n()
            )));
        }
        if !spec.slope.is_finite() {
            return Err(Error::invalid("corpus slope must be finite"));
        }
        Ok(FieldCorpus { spec, grid })
    }

    pub fn spec(&self) -> &CorpusSpec {
        &self.spec
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.spec.count
    }

    pub fn is_empty(&self) -> bool {
        self.spec.count == 0
    }

    pub fn sample(&self, index: usize) -> SpectralField {
        band_limited(self.grid, self.spec.seed, index as u64, self.spec.slope, self.spec.cutoff)
    }

    pub fn iter(&self) -> impl Iterator<Item = SpectralField> + '_ {
        (0..self.spec.count).map(|i| self.sample(i))
    }
}

/// One real, mean-free field with `f̂(k) ∝ |k|^{-slope}·(ξ + iη)` for
/// `0 < |k| ≤ cutoff` (integer wavevectors).
pub fn band_limited(grid: Grid, seed: u64, stream: u64, slope: f64, cutoff: f64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let n = grid.n();
    let kc = cutoff.floor() as i64;
    let mut coeffs = vec![Complex64::default(); grid.len()];
    let idx = |k: i64| k.rem_euclid(n as i64) as usize;
    // half-plane: k2 > 0, or k2 = 0 and k1 > 0
    for k2 in 0..=kc {
        for k1 in -kc..=kc {
            if k2 == 0 && k1 <= 0 {
                continue;
            }
            let r = ((k1 * k1 + k2 * k2) as f64).sqrt();
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            if r > cutoff {
                continue;
            }
            let c = Complex64::new(re, im) * (0.5 * r.powf(-slope));
            coeffs[idx(k2) * n + idx(k1)] = c;
            coeffs[idx(-k2) * n + idx(-k1)] = c.conj();
        }
    }
    SpectralField::from_coeffs(grid, coeffs).expect("grid sized")
}
