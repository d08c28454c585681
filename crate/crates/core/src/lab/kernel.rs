//! Radial kernel of the symbol m(|ξ|)/|ξ|² in the plane, tabulated with its
//! first two derivatives.
//!
//! With x = 2πρr the derivatives reduce to two oscillatory integrals against
//! J₁ (after one integration by parts):
//!
//!   f′(ρ) = −(2π/ρ) F,     f″(ρ) = (2π/ρ²)(F + G),
//!   F = ∫₀^∞ J₁(x) m(x/2πρ) dx,   G = ∫₀^∞ J₁(x) (r m′)(x/2πρ) dx.
//!
//! The value itself is renormalized inside the unit ball:
//!
//!   f(ρ) = 2π ∫₀¹ (J₀(2πρr) − 1) m(r)/r dr + 2π ∫_{2πρ}^∞ J₀(x) m(x/2πρ)/x dx.
//!
//! Each tail is summed interval by interval between consecutive Bessel
//! zeros and the partial sums are accelerated by repeated averaging.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::bessel::{averaged_limit, j0, j1, zeros};
use crate::multiplier::Multiplier;
use crate::quadrature::{fixed_gl, gauss_legendre, integrate};
use crate::{Error, Result};

/// Quadrature and acceleration settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KernelConfig {
    /// Gauss-Legendre nodes per zero interval.
    pub nodes_per_interval: usize,
    /// Averaging depth of the partial-sum accelerator.
    pub depth: usize,
    pub tol: f64,
    pub max_intervals: usize,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig { nodes_per_interval: 16, depth: 12, tol: 1e-9, max_intervals: 200 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelRow {
    pub rho: f64,
    pub f: f64,
    pub f1: f64,
    pub f2: f64,
    /// ρ²|f″| / (1 + m(1/ρ))
    pub majorant: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelTable {
    pub multiplier: String,
    pub config: KernelConfig,
    pub rows: Vec<KernelRow>,
    pub sup_majorant: f64,
    pub argmax: usize,
}

impl KernelTable {
    /// Whether the majorant peaks strictly inside the ρ grid.
    pub fn sup_is_interior(&self) -> bool {
        self.argmax > 0 && self.argmax + 1 < self.rows.len()
    }

    /// Least-squares slope of f against ln ρ.
    pub fn log_slope(&self) -> f64 {
        let xs: Vec<f64> = self.rows.iter().map(|r| r.rho.ln()).collect();
        let ys: Vec<f64> = self.rows.iter().map(|r| r.f).collect();
        slope(&xs, &ys)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("rho,f,f1,f2,majorant\n");
        for r in &self.rows {
            s.push_str(&format!("{:e},{:e},{:e},{:e},{:e}\n", r.rho, r.f, r.f1, r.f2, r.majorant));
        }
        s
    }
}

pub(crate) fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Integrator for ∫_a^∞ J(x) h(x) dx over the zeros of J.
struct Tail<'a> {
    zeros: &'a [f64],
    nodes: &'a [f64],
    weights: &'a [f64],
    cfg: &'a KernelConfig,
}

impl Tail<'_> {
    /// `kinks` are extra breakpoints where h is not smooth.
    fn integrate<F: Fn(f64) -> f64>(&self, h: F, a: f64, kinks: &[f64]) -> Result<f64> {
        let first = self.zeros.partition_point(|&z| z <= a);
        let mut ends: Vec<f64> = self.zeros[first..].iter().copied().take(self.cfg.max_intervals).collect();
        let piece = |lo: f64, hi: f64| -> f64 {
            let mut cuts = vec![lo];
            // integrands like J₀(x)/x vary on the scale of x itself near a small
            // start, so refine geometrically there
            let mut c = 2.0 * lo;
            while lo > 0.0 && c < hi {
                cuts.push(c);
                c *= 2.0;
            }
            cuts.extend(kinks.iter().copied().filter(|&k| k > lo && k < hi));
            cuts.sort_by(f64::total_cmp);
            cuts.push(hi);
            cuts.windows(2).map(|w| fixed_gl(&h, w[0], w[1], self.nodes, self.weights)).sum()
        };
        let mut partial = Vec::with_capacity(ends.len());
        let mut acc = 0.0;
        let mut lo = a;
        let mut prev: Option<f64> = None;
        let mut agree = 0;
        for hi in ends.drain(..) {
            acc += piece(lo, hi);
            lo = hi;
            partial.push(acc);
            // only start judging once past every kink
            if kinks.iter().any(|&k| k > lo) {
                continue;
            }
            if let Some(est) = averaged_limit(&partial, self.cfg.depth) {
                if let Some(p) = prev {
                    let scale = est.abs().max(partial.iter().fold(0.0f64, |m, v| m.max(v.abs()))).max(1e-300);
                    if (est - p).abs() <= self.cfg.tol * scale {
                        agree += 1;
                        if agree >= 3 {
                            return Ok(est);
                        }
                    } else {
                        agree = 0;
                    }
                }
                prev = Some(est);
            }
        }
        let keep = partial.len().saturating_sub(8);
        Err(Error::AccelerationFailed { intervals: partial.len(), partial_sums: partial[keep..].to_vec() })
    }
}

/// Kernel value and derivatives at one radius.
pub fn kernel_at(m: &Multiplier, rho: f64, cfg: &KernelConfig) -> Result<KernelRow> {
    let ctx = Context::new(cfg);
    ctx.row(m, rho)
}

struct Context {
    j0_zeros: Vec<f64>,
    j1_zeros: Vec<f64>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    cfg: KernelConfig,
}

impl Context {
    fn new(cfg: &KernelConfig) -> Self {
        // ρ ≤ 1 puts the tail start below 2π, so two extra zeros are plenty
        let count = cfg.max_intervals + 4;
        let (nodes, weights) = gauss_legendre(cfg.nodes_per_interval);
        Context { j0_zeros: zeros(0, count), j1_zeros: zeros(1, count), nodes, weights, cfg: *cfg }
    }

    fn row(&self, m: &Multiplier, rho: f64) -> Result<KernelRow> {
        let scale = TAU * rho;
        let r_of = |x: f64| x / scale;
        // m is flat below its clamp floor; the derivative jumps there
        let kinks: Vec<f64> = if m.is_constant() { Vec::new() } else { vec![m.clamp_floor * scale] };
        let eval = |r: f64| m.eval(r).unwrap_or(f64::NAN);
        let logd = |r: f64| m.log_derivative(r).unwrap_or(f64::NAN);

        let j1_tail = Tail { zeros: &self.j1_zeros, nodes: &self.nodes, weights: &self.weights, cfg: &self.cfg };
        let big_f = j1_tail.integrate(|x| j1(x) * eval(r_of(x)), 0.0, &kinks)?;
        let big_g = if m.is_constant() { 0.0 } else { j1_tail.integrate(|x| j1(x) * logd(r_of(x)), 0.0, &kinks)? };

        let j0_tail = Tail { zeros: &self.j0_zeros, nodes: &self.nodes, weights: &self.weights, cfg: &self.cfg };
        let outer = j0_tail.integrate(|x| j0(x) * eval(r_of(x)) / x, scale, &kinks)?;
        let inner = integrate(|r| if r == 0.0 { 0.0 } else { (j0(scale * r) - 1.0) * eval(r) / r }, 0.0, 1.0, 1e-13, 1e-12)?;

        let f = TAU * (inner + outer);
        let f1 = -TAU / rho * big_f;
        let f2 = TAU / (rho * rho) * (big_f + big_g);
        let majorant = rho * rho * f2.abs() / (1.0 + m.eval(1.0 / rho)?);
        if ![f, f1, f2].iter().all(|v| v.is_finite()) {
            return Err(Error::Quadrature(format!("non-finite kernel value at rho = {rho:e}")));
        }
        Ok(KernelRow { rho, f, f1, f2, majorant })
    }
}

/// Tabulates the kernel over `rhos` (each in [1e-3, 1]).
pub fn compute_radial_kernel(m: &Multiplier, rhos: &[f64], cfg: &KernelConfig) -> Result<KernelTable> {
    if rhos.is_empty() {
        return Err(Error::invalid("rho grid is empty"));
    }
    if let Some(r) = rhos.iter().find(|r| !(1e-3 - 1e-15..=1.0 + 1e-15).contains(*r)) {
        return Err(Error::invalid(format!("rho = {r} outside [1e-3, 1]")));
    }
    if cfg.nodes_per_interval < 2 || cfg.depth == 0 || cfg.max_intervals <= cfg.depth + 3 || !(cfg.tol > 0.0) {
        return Err(Error::invalid("kernel quadrature settings out of range"));
    }
    let ctx = Context::new(cfg);
    let rows = rhos.par_iter().map(|&rho| ctx.row(m, rho)).collect::<Result<Vec<_>>>()?;
    let (argmax, sup) = rows.iter().enumerate().fold((0, f64::NEG_INFINITY), |acc, (i, r)| if r.majorant > acc.1 { (i, r.majorant) } else { acc });
    Ok(KernelTable { multiplier: m.label(), config: *cfg, rows, sup_majorant: sup, argmax })
}
