use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

type Plan = Arc<dyn Fft<f64>>;

fn plans(n: usize) -> (Plan, Plan) {
    static CACHE: OnceLock<Mutex<HashMap<usize, (Plan, Plan)>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
        })
        .clone()
}

fn transpose(data: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in i + 1..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}

fn fft2(data: &mut [Complex64], n: usize, inverse: bool) {
    let (fwd, inv) = plans(n);
    let plan = if inverse { inv } else { fwd };
    let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
    plan.process_with_scratch(data, &mut scratch);
    transpose(data, n);
    plan.process_with_scratch(data, &mut scratch);
    transpose(data, n);
}

/// Normalised forward transform of real samples.
pub fn forward(n: usize, values: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft2(&mut buf, n, false);
    let s = 1.0 / (n * n) as f64;
    buf.iter_mut().for_each(|c| *c *= s);
    buf
}

/// Transforms of two real fields with one complex FFT.
pub fn forward_pair(n: usize, a: &[f64], b: &[f64]) -> (Vec<Complex64>, Vec<Complex64>) {
    let mut buf: Vec<Complex64> = a.iter().zip(b).map(|(&x, &y)| Complex64::new(x, y)).collect();
    fft2(&mut buf, n, false);
    let s = 0.5 / (n * n) as f64;
    let mut ca = vec![Complex64::default(); n * n];
    let mut cb = vec![Complex64::default(); n * n];
    for i2 in 0..n {
        for i1 in 0..n {
            let k = i2 * n + i1;
            let m = ((n - i2) % n) * n + (n - i1) % n;
            let z = buf[k];
            let zc = buf[m].conj();
            ca[k] = (z + zc) * s;
            cb[k] = (z - zc) * Complex64::new(0.0, -s);
        }
    }
    (ca, cb)
}

/// Real part of the inverse transform.
pub fn inverse_real(n: usize, coeffs: &[Complex64]) -> Vec<f64> {
    let mut buf = coeffs.to_vec();
    fft2(&mut buf, n, true);
    buf.into_iter().map(|c| c.re).collect()
}

/// Inverse transforms of two Hermitian spectra with one complex FFT.
pub fn inverse_pair(n: usize, a: &[Complex64], b: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
    let i = Complex64::new(0.0, 1.0);
    let mut buf: Vec<Complex64> = a.iter().zip(b).map(|(x, y)| x + i * y).collect();
    fft2(&mut buf, n, true);
    buf.into_iter().map(|c| (c.re, c.im)).unzip()
}
