//! Ratio tests of the harmonic-analysis estimates behind the growth bounds.
//!
//! Every estimate is turned into a left/right ratio evaluated on concrete
//! fields. Constants are never asserted; sweeps report the largest ratio with
//! the generator seed that produced it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::corpus::band_limited;
use super::kernel::slope;
use crate::holder::band_seminorm_vec;
use crate::lp::{besov_norms, build_partition, decompose, Partition, Profile};
use crate::multiplier::Multiplier;
use crate::osgood::log_plus;
use crate::patch::{patch_velocity, PatchShape, PatchState};
use crate::spectral::{apply_multiplier, forward, inverse_pair, perp_gradient, Grid, SpectralField};
use crate::{Error, Result};

/// Zero-order operator composed with `m(|D|)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Operator {
    #[default]
    Identity,
    /// `∂ᵢ∂ⱼΔ⁻¹`, indices in {1, 2}.
    Riesz { i: u8, j: u8 },
}

impl Operator {
    pub fn validate(&self) -> Result<()> {
        match self {
            Operator::Identity => Ok(()),
            Operator::Riesz { i, j } if (1..=2).contains(i) && (1..=2).contains(j) => Ok(()),
            Operator::Riesz { i, j } => Err(Error::invalid(format!("Riesz indices must be 1 or 2, got ({i}, {j})"))),
        }
    }

    fn symbol(&self, k: (f64, f64)) -> f64 {
        match *self {
            Operator::Identity => 1.0,
            Operator::Riesz { i, j } => {
                let r2 = k.0 * k.0 + k.1 * k.1;
                if r2 == 0.0 {
                    return 0.0;
                }
                let c = |a: u8| if a == 1 { k.0 } else { k.1 };
                c(i) * c(j) / r2
            }
        }
    }
}

/// `sup_x |Δ_j v(x)|` for every block, `v` given by its component
/// coefficients.
fn block_sups(grid: &Grid, comps: &[Vec<Complex64>], p: &Partition) -> Vec<(i32, f64)> {
    let zero = vec![Complex64::default(); grid.len()];
    p.blocks()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&j| {
            let w: Vec<Vec<Complex64>> = comps.iter().map(|c| c.iter().enumerate().map(|(i, v)| v * p.weight(j, i)).collect()).collect();
            let mut sq = vec![0.0; grid.len()];
            for pair in w.chunks(2) {
                let (a, b) = inverse_pair(grid.n(), &pair[0], pair.get(1).unwrap_or(&zero));
                for (s, (x, y)) in sq.iter_mut().zip(a.iter().zip(&b)) {
                    *s += x * x + y * y;
                }
            }
            (j, sq.iter().fold(0.0f64, |m, v| m.max(*v)).sqrt())
        })
        .collect()
}

/// `sup_j 2^{jμ} w_j s_j` with the maximizing block.
fn weighted_sup(sups: &[(i32, f64)], mu: f64, weight: impl Fn(i32) -> Result<f64>) -> Result<(f64, i32)> {
    let mut best = (0.0, -1);
    for &(j, s) in sups {
        let v = 2f64.powf(j as f64 * mu) * weight(j)? * s;
        if v > best.0 {
            best = (v, j);
        }
    }
    Ok(best)
}

fn check_exponent(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v <= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must lie in (0, 1], got {v}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MainRatio {
    pub ratio: f64,
    pub sup_f: f64,
    pub l2: f64,
    pub linf: f64,
    pub proxy: f64,
    pub q: f64,
    pub q_clamped: bool,
    /// Frequency cutoff `Log₂ Q` of the splitting argument.
    pub cutoff: f64,
}

/// `‖m(D)R g‖_∞ / (‖g‖_{L²} + ‖g‖_∞(1 + Log Q · m(Q)))`, `Q = ‖g‖_{C^s}/‖g‖_∞`.
pub fn main_inequality_ratio(g: &SpectralField, m: &Multiplier, s: f64, op: Operator, p: &Partition) -> Result<MainRatio> {
    check_exponent("s", s)?;
    op.validate()?;
    if g.grid() != p.grid() {
        return Err(Error::GridMismatch("field and partition grids differ".into()));
    }
    let linf = g.linf_norm();
    if linf == 0.0 {
        return Err(Error::invalid("g must be nonzero"));
    }
    let grid = *g.grid();
    let table = grid.symbol_table(m)?;
    let f = g.map_spectrum(|i| Complex64::new(table[i] * op.symbol(grid.wavevector(i)), 0.0));
    let sup_f = f.linf_norm();
    let norms = besov_norms(&decompose(g, p)?, s)?;
    let raw_q = norms.proxy / linf;
    let q = raw_q.max(1.0);
    let denom = norms.l2 + linf * (1.0 + q.ln() * m.eval(q)?);
    Ok(MainRatio { ratio: sup_f / denom, sup_f, l2: norms.l2, linf, proxy: norms.proxy, q, q_clamped: raw_q < 1.0, cutoff: q.log2() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CommutatorRatio {
    pub ratio: f64,
    pub numerator: f64,
    pub g_norm: f64,
    pub grad_f: f64,
    /// Block attaining the numerator's sup.
    pub block: i32,
}

fn max_wavenumber(f: &SpectralField) -> f64 {
    let g = *f.grid();
    let c = f.coeffs();
    let peak = c.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    c.iter().enumerate().filter(|(_, v)| v.norm() > 1e-13 * peak).map(|(i, _)| g.wavenumber_magnitude(i)).fold(0.0, f64::max)
}

/// `sup_j 2^{jμ} m(2^j)^{-1} ‖Δ_j[m(D), f] g‖_∞ / (sup_j 2^{jμ}‖Δ_j g‖_∞ ‖∇f‖_∞)`
/// with `[m(D), f] g = (m(D)f) g − m(D)(f g)`.
pub fn commutator_ratio(f: &SpectralField, g: &SpectralField, m: &Multiplier, mu: f64, p: &Partition) -> Result<CommutatorRatio> {
    check_exponent("mu", mu)?;
    let grid = *f.grid();
    grid.check_same(g.grid())?;
    if &grid != p.grid() {
        return Err(Error::GridMismatch("field and partition grids differ".into()));
    }
    let cut = grid.k0() * grid.n() as f64 / 8.0;
    if max_wavenumber(f) >= cut {
        return Err(Error::invalid(format!("f must be band-limited below N/8 = {cut}")));
    }
    let mean = g.mean();
    let spread = g.values().iter().fold(0.0f64, |a, v| a.max((v - mean).abs()));
    if spread <= 1e-14 * g.linf_norm() {
        return Err(Error::invalid("g is constant; the commutator ratio is undefined"));
    }
    let mf = apply_multiplier(f, m)?;
    let comm = mf.mul(g)?.sub(&apply_multiplier(&f.mul(g)?, m)?)?;
    let (num, block) = weighted_sup(&block_sups(&grid, &[comm.coeffs().to_vec()], p), mu, |j| Ok(1.0 / m.eval(2f64.powi(j))?))?;
    let (g_norm, _) = weighted_sup(&block_sups(&grid, &[g.coeffs().to_vec()], p), mu, |_| Ok(1.0))?;
    let grad = crate::spectral::gradient(f);
    let grad_f = grad.max_magnitude();
    let denom = g_norm * grad_f;
    if !(denom > 0.0) {
        return Err(Error::invalid("commutator denominator vanishes (f constant or g zero)"));
    }
    Ok(CommutatorRatio { ratio: num / denom, numerator: num, g_norm, grad_f, block })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TangentialHolderRatio {
    pub ratio: f64,
    pub numerator: f64,
    pub w_seminorm: f64,
    pub delta: f64,
}

/// `sup_j 2^{jσ} m(2^j)^{-1} ‖Δ_j(∇u W)‖_∞ / ((1 + Log Δ_σ)|W|_σ)` with
/// `W = ∇⊥φ`; the seminorm and `Δ_σ` are sampled on the boundary band.
pub fn tangential_holder_ratio(state: &PatchState, m: &Multiplier, sigma: f64, budget: usize, seed: u64, p: &Partition) -> Result<TangentialHolderRatio> {
    check_exponent("sigma", sigma)?;
    let grid = *state.grid();
    if &grid != p.grid() {
        return Err(Error::GridMismatch("patch and partition grids differ".into()));
    }
    let u = patch_velocity(state, m)?;
    let w = perp_gradient(state.phi());
    let geo = state.geometry();
    let gt = u.gradient_tensor();
    let (w1, w2) = (w.u1.values(), w.u2.values());
    let comp = |a: usize| -> Vec<f64> {
        let (ga, gb) = (gt[a][0].values(), gt[a][1].values());
        (0..grid.len()).map(|i| ga[i] * w1[i] + gb[i] * w2[i]).collect()
    };
    let comps = [forward(grid.n(), &comp(0)), forward(grid.n(), &comp(1))];
    let (numerator, _) = weighted_sup(&block_sups(&grid, &comps, p), sigma, |j| Ok(1.0 / m.eval(2f64.powi(j))?))?;
    // |∇⊥φ| = |∇φ| pointwise, so the band geometry supplies both
    let h = band_seminorm_vec(&grid, &[&geo.g1, &geo.g2], &geo.band, sigma, budget, seed)?;
    let w_inf = geo.band.iter().map(|&i| geo.norm[i]).fold(f64::INFINITY, f64::min);
    let delta = h.seminorm / w_inf;
    let denom = (1.0 + log_plus(delta)) * h.seminorm;
    if !(denom > 0.0) {
        return Err(Error::invalid("boundary field has vanishing Hölder seminorm"));
    }
    Ok(TangentialHolderRatio { ratio: numerator / denom, numerator, w_seminorm: h.seminorm, delta })
}

/// One evaluated sample of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioSample {
    pub seed: u64,
    pub stream: u64,
    pub value: f64,
    /// Sweep-specific abscissa (Q, aspect ratio).
    pub x: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioReport {
    pub name: String,
    pub samples: Vec<RatioSample>,
    pub max: f64,
    pub median: f64,
    pub argmax: usize,
    pub argmax_seed: u64,
    pub argmax_stream: u64,
    /// Slope of ln(value) against ln(x) over samples carrying an abscissa.
    pub log_log_slope: Option<f64>,
    /// Samples whose Q was clamped to 1.
    pub clamped: usize,
}

impl RatioReport {
    pub fn new(name: impl Into<String>, samples: Vec<RatioSample>, clamped: usize) -> Result<Self> {
        let name = name.into();
        if samples.is_empty() {
            return Err(Error::invalid(format!("{name}: empty sweep")));
        }
        if let Some(s) = samples.iter().find(|s| !s.value.is_finite()) {
            return Err(Error::invalid(format!("{name}: non-finite ratio for seed {} stream {}", s.seed, s.stream)));
        }
        let mut sorted: Vec<f64> = samples.iter().map(|s| s.value).collect();
        sorted.sort_by(f64::total_cmp);
        let k = sorted.len();
        let median = if k % 2 == 1 { sorted[k / 2] } else { 0.5 * (sorted[k / 2 - 1] + sorted[k / 2]) };
        let argmax = (0..k).fold(0, |b, i| if samples[i].value > samples[b].value { i } else { b });
        let pts: Vec<(f64, f64)> = samples.iter().filter_map(|s| s.x.filter(|x| *x > 0.0 && s.value > 0.0).map(|x| (x.ln(), s.value.ln()))).collect();
        let spread = pts.iter().any(|p| (p.0 - pts[0].0).abs() > 1e-12);
        let log_log_slope = (pts.len() >= 2 && spread).then(|| {
            let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
            slope(&xs, &ys)
        });
        Ok(RatioReport {
            name,
            max: samples[argmax].value,
            median,
            argmax,
            argmax_seed: samples[argmax].seed,
            argmax_stream: samples[argmax].stream,
            samples,
            log_log_slope,
            clamped,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Shape of the fields in a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// Random phases, `|ĝ(k)| ∝ |k|^{-slope}`.
    #[default]
    Random,
    /// Truncated, shifted `Σ sin(n₁x) sin(n₂y)/(n₁n₂)^slope` over odd `n`;
    /// at slope 1 this is the square wave `sgn(sin x)·sgn(sin y)`, whose
    /// Riesz transforms grow like the log of the cutoff.
    Corner,
}

/// Corpus whose spectral slope and cutoff vary per sample; the draw depends
/// only on `(seed, index)`, so every grid with `N/3 > cutoff_max` sees the
/// same functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub seed: u64,
    pub count: usize,
    pub slope: (f64, f64),
    pub cutoff: (f64, f64),
    #[serde(default)]
    pub family: Family,
}

impl SweepSpec {
    fn rng(&self, index: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x9e37_79b9_7f4a_7c15);
        rng.set_stream(index as u64);
        rng
    }

    fn params(&self, index: usize) -> (f64, f64) {
        let mut rng = self.rng(index);
        let s = self.slope.0 + (self.slope.1 - self.slope.0) * rng.gen::<f64>();
        let c = self.cutoff.0 + (self.cutoff.1 - self.cutoff.0) * rng.gen::<f64>();
        (s, c.floor().max(1.0))
    }

    fn validate(&self, limit: f64) -> Result<()> {
        if self.count == 0 {
            return Err(Error::invalid("sweep count must be positive"));
        }
        let (lo, hi) = self.cutoff;
        if !(lo >= 1.0 && hi >= lo && hi < limit) {
            return Err(Error::invalid(format!("sweep cutoff range [{lo}, {hi}] must lie in [1, {limit})")));
        }
        if !(self.slope.0.is_finite() && self.slope.1 >= self.slope.0 && self.slope.1.is_finite()) {
            return Err(Error::invalid("sweep slope range must be finite and ordered"));
        }
        Ok(())
    }

    /// Sample `index` drawn on stream `stream_offset + index`.
    pub fn field(&self, grid: Grid, index: usize, stream_offset: u64) -> SpectralField {
        let (s, c) = self.params(index);
        match self.family {
            Family::Random => band_limited(grid, self.seed, stream_offset + index as u64, s, c),
            Family::Corner => {
                let mut rng = self.rng(index);
                let _ = (rng.gen::<f64>(), rng.gen::<f64>());
                let shift = (std::f64::consts::TAU * rng.gen::<f64>(), std::f64::consts::TAU * rng.gen::<f64>());
                corner_field(grid, s, c, shift)
            }
        }
    }
}

fn corner_field(grid: Grid, slope: f64, cutoff: f64, (a, b): (f64, f64)) -> SpectralField {
    let n = grid.n();
    let kc = cutoff.floor() as i64;
    let idx = |k: i64| k.rem_euclid(n as i64) as usize;
    let mut coeffs = vec![Complex64::default(); grid.len()];
    for k2 in (-kc..=kc).filter(|k| k % 2 != 0) {
        for k1 in (-kc..=kc).filter(|k| k % 2 != 0) {
            if ((k1 * k1 + k2 * k2) as f64).sqrt() > cutoff {
                continue;
            }
            let w = -0.25 * ((k1 * k2).signum() as f64) * ((k1 * k2).abs() as f64).powf(-slope);
            coeffs[idx(k2) * n + idx(k1)] = Complex64::from_polar(w, -(k1 as f64 * a + k2 as f64 * b));
        }
    }
    SpectralField::from_coeffs(grid, coeffs).expect("grid sized")
}

/// Main-inequality ratio over a sweep, with Q as abscissa.
pub fn main_inequality_sweep(grid: Grid, spec: &SweepSpec, m: &Multiplier, s: f64, op: Operator) -> Result<RatioReport> {
    spec.validate(grid.n() as f64 / 3.0)?;
    let p = build_partition(grid, Profile::default())?;
    let rows = (0..spec.count)
        .into_par_iter()
        .map(|i| main_inequality_ratio(&spec.field(grid, i, 0), m, s, op, &p))
        .collect::<Result<Vec<_>>>()?;
    let clamped = rows.iter().filter(|r| r.q_clamped).count();
    let samples = rows.iter().enumerate().map(|(i, r)| RatioSample { seed: spec.seed, stream: i as u64, value: r.ratio, x: Some(r.q) }).collect();
    RatioReport::new(format!("main-inequality {} {:?}", m.label(), op), samples, clamped)
}

/// Commutator ratio over a sweep. Sample `i` pairs `f` on stream `2i`
/// (cutoff capped below N/8) with `g` on stream `2i+1`.
pub fn commutator_sweep(grid: Grid, spec: &SweepSpec, f_cutoff: f64, m: &Multiplier, mu: f64) -> Result<RatioReport> {
    spec.validate(grid.n() as f64 / 3.0)?;
    if !(f_cutoff >= 1.0 && f_cutoff < grid.n() as f64 / 8.0) {
        return Err(Error::invalid(format!("f cutoff {f_cutoff} must lie in [1, N/8)")));
    }
    let p = build_partition(grid, Profile::default())?;
    let rows = (0..spec.count)
        .into_par_iter()
        .map(|i| {
            let (slope, _) = spec.params(i);
            let f = band_limited(grid, spec.seed, 2 * i as u64, slope, f_cutoff);
            let (gs, gc) = spec.params(i + spec.count);
            let g = band_limited(grid, spec.seed, 2 * i as u64 + 1, gs, gc);
            commutator_ratio(&f, &g, m, mu, &p)
        })
        .collect::<Result<Vec<_>>>()?;
    let samples = rows.iter().enumerate().map(|(i, r)| RatioSample { seed: spec.seed, stream: 2 * i as u64, value: r.ratio, x: None }).collect();
    RatioReport::new(format!("commutator {}", m.label()), samples, 0)
}

/// Tangential Hölder ratio over an ellipse aspect sweep (area `πR²`,
/// centred on the torus).
pub fn tangential_sweep(grid: Grid, m: &Multiplier, sigma: f64, radius: f64, aspects: &[f64], budget: usize, seed: u64) -> Result<RatioReport> {
    let p = build_partition(grid, Profile::default())?;
    let c = (grid.length() / 2.0, grid.length() / 2.0);
    let rows = aspects
        .par_iter()
        .map(|&a| {
            let state = PatchState::new(PatchShape::ellipse(c, radius, a, 0.0).level_set(grid)?, 1.0)?;
            tangential_holder_ratio(&state, m, sigma, budget, seed, &p)
        })
        .collect::<Result<Vec<_>>>()?;
    let samples = rows.iter().zip(aspects).map(|(r, a)| RatioSample { seed, stream: 0, value: r.ratio, x: Some(*a) }).collect();
    RatioReport::new(format!("tangential-holder {}", m.label()), samples, 0)
}
