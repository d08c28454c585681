//! Real scalar fields on the periodic `N×N` torus and the Fourier-multiplier
//! operators shared by the Euler and patch solvers.
//!
//! Storage is row-major with rows along `x₂`: `values[i2 * N + i1]` holds the
//! sample at `(i1 h, i2 h)`. Coefficients are normalised so that
//! `f(x) = Σ_k f̂(k) e^{ik·x}`.

mod fft;
pub mod io;

use std::f64::consts::PI;
use std::sync::OnceLock;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multiplier::Multiplier;

pub use fft::{forward, forward_pair, inverse_pair, inverse_real};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
    length: f64,
}

impl Grid {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::invalid(format!("grid size must be a power of two >= 16, got {n}")));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::invalid(format!("domain period must be positive, got {length}")));
        }
        Ok(Grid { n, length })
    }

    /// `N` points on the `2π`-periodic torus.
    pub fn periodic(n: usize) -> Result<Self> {
        Self::new(n, 2.0 * PI)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Scale from integer wavenumber to physical wavenumber, `2π/L`.
    pub fn k0(&self) -> f64 {
        2.0 * PI / self.length
    }

    /// Signed integer frequency of FFT index `i`.
    pub fn freq(&self, i: usize) -> isize {
        if i < self.n / 2 {
            i as isize
        } else {
            i as isize - self.n as isize
        }
    }

    /// Physical wavenumber components at flat index `idx`.
    pub fn wavevector(&self, idx: usize) -> (f64, f64) {
        let (i2, i1) = (idx / self.n, idx % self.n);
        (self.k0() * self.freq(i1) as f64, self.k0() * self.freq(i2) as f64)
    }

    /// Wavevector with Nyquist components zeroed, for odd-order derivatives.
    pub fn derivative_wavevector(&self, idx: usize) -> (f64, f64) {
        let (i2, i1) = (idx / self.n, idx % self.n);
        let half = self.n / 2;
        let k1 = if i1 == half { 0.0 } else { self.k0() * self.freq(i1) as f64 };
        let k2 = if i2 == half { 0.0 } else { self.k0() * self.freq(i2) as f64 };
        (k1, k2)
    }

    pub fn wavenumber_magnitude(&self, idx: usize) -> f64 {
        let (k1, k2) = self.wavevector(idx);
        k1.hypot(k2)
    }

    /// Whether the 2/3 rule removes the mode at `idx`.
    pub fn is_dealiased_out(&self, idx: usize) -> bool {
        let (i2, i1) = (idx / self.n, idx % self.n);
        let cut = self.n as f64 / 3.0;
        self.freq(i1).unsigned_abs() as f64 > cut || self.freq(i2).unsigned_abs() as f64 > cut
    }

    pub fn coords(&self, idx: usize) -> (f64, f64) {
        let h = self.spacing();
        ((idx % self.n) as f64 * h, (idx / self.n) as f64 * h)
    }

    /// `m(|k|)` at every grid wavevector.
    pub fn symbol_table(&self, m: &Multiplier) -> Result<Vec<f64>> {
        (0..self.len()).map(|idx| m.eval(self.wavenumber_magnitude(idx))).collect()
    }

    pub(crate) fn check_same(&self, other: &Grid) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!(
                "N={} L={} vs N={} L={}",
                self.n, self.length, other.n, other.length
            )));
        }
        Ok(())
    }
}

/// A real scalar field with lazily computed Fourier coefficients.
#[derive(Debug)]
pub struct SpectralField {
    grid: Grid,
    values: Vec<f64>,
    coeffs: OnceLock<Vec<Complex64>>,
}

impl Clone for SpectralField {
    fn clone(&self) -> Self {
        let coeffs = OnceLock::new();
        if let Some(c) = self.coeffs.get() {
            let _ = coeffs.set(c.clone());
        }
        SpectralField { grid: self.grid, values: self.values.clone(), coeffs }
    }
}

impl SpectralField {
    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!("{} values for an {}x{} grid", values.len(), grid.n, grid.n)));
        }
        Ok(SpectralField { grid, values, coeffs: OnceLock::new() })
    }

    pub fn zeros(grid: Grid) -> Self {
        SpectralField { grid, values: vec![0.0; grid.len()], coeffs: OnceLock::new() }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|idx| {
                let (x1, x2) = grid.coords(idx);
                f(x1, x2)
            })
            .collect();
        SpectralField { grid, values, coeffs: OnceLock::new() }
    }

    /// Field from Hermitian coefficients; the imaginary residue of the inverse
    /// transform is discarded.
    pub fn from_coeffs(grid: Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::GridMismatch("coefficient count".into()));
        }
        let values = inverse_real(grid.n, &coeffs);
        let cell = OnceLock::new();
        let _ = cell.set(coeffs);
        Ok(SpectralField { grid, values, coeffs: cell })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Mutable access to samples; invalidates the cached spectrum.
    pub fn values_mut(&mut self) -> &mut [f64] {
        self.coeffs = OnceLock::new();
        &mut self.values
    }

    pub fn coeffs(&self) -> &[Complex64] {
        self.coeffs.get_or_init(|| forward(self.grid.n, &self.values))
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>()).sqrt() * self.grid.spacing()
    }

    /// `L²` norm from the coefficient sum (Parseval).
    pub fn l2_norm_spectral(&self) -> f64 {
        self.coeffs().iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt() * self.grid.length
    }

    pub fn linf_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn scaled(&self, c: f64) -> SpectralField {
        SpectralField { grid: self.grid, values: self.values.iter().map(|v| c * v).collect(), coeffs: OnceLock::new() }
    }

    pub fn add(&self, other: &SpectralField) -> Result<SpectralField> {
        self.grid.check_same(&other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(SpectralField { grid: self.grid, values, coeffs: OnceLock::new() })
    }

    pub fn sub(&self, other: &SpectralField) -> Result<SpectralField> {
        self.add(&other.scaled(-1.0))
    }

    pub fn mul(&self, other: &SpectralField) -> Result<SpectralField> {
        self.grid.check_same(&other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect();
        Ok(SpectralField { grid: self.grid, values, coeffs: OnceLock::new() })
    }

    /// Apply a coefficient-wise symbol `s(idx)`.
    pub fn map_spectrum(&self, s: impl Fn(usize) -> Complex64) -> SpectralField {
        let c: Vec<Complex64> = self.coeffs().iter().enumerate().map(|(i, c)| c * s(i)).collect();
        SpectralField::from_coeffs(self.grid, c).expect("same grid")
    }
}

#[derive(Debug, Clone)]
pub struct VectorField {
    pub u1: SpectralField,
    pub u2: SpectralField,
}

impl VectorField {
    pub fn grid(&self) -> &Grid {
        self.u1.grid()
    }

    /// Spectral divergence `∂₁u₁ + ∂₂u₂`.
    pub fn divergence(&self) -> SpectralField {
        let g = *self.grid();
        let c1 = self.u1.coeffs();
        let c2 = self.u2.coeffs();
        let c: Vec<Complex64> = (0..g.len())
            .map(|i| {
                let (k1, k2) = g.derivative_wavevector(i);
                Complex64::new(0.0, k1) * c1[i] + Complex64::new(0.0, k2) * c2[i]
            })
            .collect();
        SpectralField::from_coeffs(g, c).expect("same grid")
    }

    /// `sup_x |u(x)|`.
    pub fn max_magnitude(&self) -> f64 {
        self.u1.values().iter().zip(self.u2.values()).fold(0.0, |a, (x, y)| a.max(x.hypot(*y)))
    }

    pub fn dot(&self, other: &VectorField) -> Result<SpectralField> {
        self.u1.mul(&other.u1)?.add(&self.u2.mul(&other.u2)?)
    }

    /// Velocity-gradient tensor `G[a][b] = ∂_b u_a`.
    pub fn gradient_tensor(&self) -> [[SpectralField; 2]; 2] {
        let a = gradient(&self.u1);
        let b = gradient(&self.u2);
        [[a.u1, a.u2], [b.u1, b.u2]]
    }
}

/// Pointwise Frobenius norm of a 2×2 tensor field.
pub fn tensor_norm(g: &[[SpectralField; 2]; 2]) -> Vec<f64> {
    let n = g[0][0].values().len();
    (0..n)
        .map(|i| {
            let s: f64 = g.iter().flatten().map(|c| c.values()[i].powi(2)).sum();
            s.sqrt()
        })
        .collect()
}

/// Precomputed modified Biot–Savart symbol `m(|k|) i k⊥ / |k|²` on a grid.
#[derive(Debug, Clone)]
pub struct BiotSavart {
    grid: Grid,
    // coefficient for u1 and u2 per mode (purely imaginary)
    s1: Vec<f64>,
    s2: Vec<f64>,
}

impl BiotSavart {
    pub fn new(grid: Grid, m: &Multiplier) -> Result<Self> {
        let table = grid.symbol_table(m)?;
        let mut s1 = vec![0.0; grid.len()];
        let mut s2 = vec![0.0; grid.len()];
        for idx in 1..grid.len() {
            let (k1, k2) = grid.wavevector(idx);
            let k2sum = k1 * k1 + k2 * k2;
            let (d1, d2) = grid.derivative_wavevector(idx);
            // u = ∇⊥ψ with ψ̂ = -ω̂/|k|²; ∇⊥ = (-∂₂, ∂₁)
            s1[idx] = table[idx] * d2 / k2sum;
            s2[idx] = -table[idx] * d1 / k2sum;
        }
        Ok(BiotSavart { grid, s1, s2 })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Velocity coefficients from vorticity coefficients; `û(0) = 0`.
    pub fn velocity_coeffs(&self, omega_hat: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let u1 = omega_hat.iter().zip(&self.s1).map(|(w, s)| Complex64::new(0.0, *s) * w).collect();
        let u2 = omega_hat.iter().zip(&self.s2).map(|(w, s)| Complex64::new(0.0, *s) * w).collect();
        (u1, u2)
    }

    pub fn apply(&self, omega: &SpectralField) -> Result<VectorField> {
        self.grid.check_same(omega.grid())?;
        let (c1, c2) = self.velocity_coeffs(omega.coeffs());
        let (v1, v2) = inverse_pair(self.grid.n, &c1, &c2);
        Ok(VectorField {
            u1: SpectralField::from_values(self.grid, v1)?,
            u2: SpectralField::from_values(self.grid, v2)?,
        })
    }
}

/// `u = m(|D|) ∇⊥ Δ⁻¹ ω` with the mean of `ω` removed.
pub fn biot_savart(omega: &SpectralField, m: &Multiplier) -> Result<VectorField> {
    BiotSavart::new(*omega.grid(), m)?.apply(omega)
}

/// Coefficient-wise multiplication by `m(|k|)`; the zero mode uses the clamped value.
pub fn apply_multiplier(f: &SpectralField, m: &Multiplier) -> Result<SpectralField> {
    let table = f.grid().symbol_table(m)?;
    Ok(f.map_spectrum(|i| Complex64::new(table[i], 0.0)))
}

pub fn gradient(f: &SpectralField) -> VectorField {
    let g = *f.grid();
    let c = f.coeffs();
    let mut c1 = Vec::with_capacity(g.len());
    let mut c2 = Vec::with_capacity(g.len());
    for (i, ci) in c.iter().enumerate() {
        let (k1, k2) = g.derivative_wavevector(i);
        c1.push(Complex64::new(0.0, k1) * ci);
        c2.push(Complex64::new(0.0, k2) * ci);
    }
    let (v1, v2) = inverse_pair(g.n, &c1, &c2);
    VectorField {
        u1: SpectralField::from_values(g, v1).expect("grid"),
        u2: SpectralField::from_values(g, v2).expect("grid"),
    }
}

/// `∇⊥f = (−∂₂f, ∂₁f)`.
pub fn perp_gradient(f: &SpectralField) -> VectorField {
    let VectorField { u1, u2 } = gradient(f);
    VectorField { u1: u2.scaled(-1.0), u2: u1 }
}

/// 2/3-rule truncation.
pub fn dealias(f: &SpectralField) -> SpectralField {
    let g = *f.grid();
    f.map_spectrum(|i| if g.is_dealiased_out(i) { Complex64::new(0.0, 0.0) } else { Complex64::new(1.0, 0.0) })
}
