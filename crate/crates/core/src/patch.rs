//! Level-set evolution of a modified vortex patch `ω = a₀·1_E`,
//! `E = {φ > 0}`, with boundary-local regularity diagnostics.

use std::f64::consts::{PI, TAU};

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::euler::{BlowUp, DtPolicy};
use crate::holder::band_seminorm_vec;
use crate::initial::wrap_offset;
use crate::interp::Bicubic;
use crate::multiplier::Multiplier;
use crate::osgood::{self, log_plus, EnvelopeForm, FitResult, GrowthFunction, OsgoodEnvelope};
use crate::spectral::{biot_savart, forward, inverse_pair, inverse_real, BiotSavart, Grid, SpectralField, VectorField};

pub const BAND_CELLS: f64 = 6.0;
pub const SMOOTH_CELLS: f64 = 2.0;

/// Quintic step rising from 0 at `z = -1` to 1 at `z = 1`.
pub fn smooth_step(z: f64) -> f64 {
    if z <= -1.0 {
        0.0
    } else if z >= 1.0 {
        1.0
    } else {
        let x = 0.5 * (z + 1.0);
        x * x * x * (10.0 - 15.0 * x + 6.0 * x * x)
    }
}

/// Elliptical patch `exp(−s ρ²) − exp(−s)`, `ρ² = (x'/a)² + (y'/b)²` in
/// coordinates rotated by `angle`, scaled so `|∇φ| = 1` at the tips of the
/// major axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatchShape {
    pub center: (f64, f64),
    pub a: f64,
    pub b: f64,
    pub angle: f64,
    /// Steepness `s`; `None` picks one that keeps the periodic tail below
    /// `e^{-14}`.
    pub steepness: Option<f64>,
}

impl PatchShape {
    pub fn circle(center: (f64, f64), radius: f64) -> Self {
        PatchShape { center, a: radius, b: radius, angle: 0.0, steepness: None }
    }

    /// Ellipse of area `πR²` and aspect ratio `aspect = a/b`.
    pub fn ellipse(center: (f64, f64), radius: f64, aspect: f64, angle: f64) -> Self {
        let r = aspect.sqrt();
        PatchShape { center, a: radius * r, b: radius / r, angle, steepness: None }
    }

    pub fn steepness_for(&self, grid: &Grid) -> f64 {
        self.steepness.unwrap_or_else(|| (14.0 * (self.a.max(self.b) * 2.0 / grid.length()).powi(2)).max(2.0))
    }

    pub fn level_set(&self, grid: Grid) -> Result<SpectralField> {
        if !(self.a > 0.0 && self.b > 0.0) {
            return Err(Error::invalid("patch semi-axes must be positive"));
        }
        let s = self.steepness_for(&grid);
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::invalid(format!("patch steepness must be positive, got {s}")));
        }
        let (c, sn) = (self.angle.cos(), self.angle.sin());
        let l = grid.length();
        let major = self.a.max(self.b);
        let scale = major / (2.0 * s * (-s).exp());
        let (a, b, center) = (self.a, self.b, self.center);
        Ok(SpectralField::from_fn(grid, |x, y| {
            let dx = wrap_offset(x - center.0, l);
            let dy = wrap_offset(y - center.1, l);
            let (u, v) = (c * dx + sn * dy, -sn * dx + c * dy);
            let rho2 = (u / a).powi(2) + (v / b).powi(2);
            scale * ((-s * rho2).exp() - (-s).exp())
        }))
    }
}

/// Derived fields of one level set.
#[derive(Debug, Clone)]
pub struct Geometry {
    pub g1: Vec<f64>,
    pub g2: Vec<f64>,
    pub norm: Vec<f64>,
    /// `φ / |∇φ|`, signed distance near the boundary.
    pub distance: Vec<f64>,
    pub band: Vec<usize>,
}

/// Unit tangent `∇⊥φ/|∇⊥φ|` on the band; zero elsewhere.
#[derive(Debug, Clone)]
pub struct TangentField {
    pub t1: Vec<f64>,
    pub t2: Vec<f64>,
    pub mask: Vec<bool>,
}

#[derive(Debug, Clone)]
pub struct PatchState {
    phi: SpectralField,
    a0: f64,
    band_width: f64,
    smooth_width: f64,
    t: f64,
}

impl PatchState {
    pub fn new(phi: SpectralField, a0: f64) -> Result<Self> {
        Self::with_widths(phi, a0, BAND_CELLS, SMOOTH_CELLS)
    }

    pub fn with_widths(phi: SpectralField, a0: f64, band_cells: f64, smooth_cells: f64) -> Result<Self> {
        if !a0.is_finite() {
            return Err(Error::invalid("patch amplitude must be finite"));
        }
        if !(band_cells > 0.0 && smooth_cells > 0.0) {
            return Err(Error::invalid("band and smoothing widths must be positive"));
        }
        let h = phi.grid().spacing();
        let s = PatchState { phi, a0, band_width: band_cells * h, smooth_width: smooth_cells * h, t: 0.0 };
        s.check_geometry()?;
        Ok(s)
    }

    pub fn grid(&self) -> &Grid {
        self.phi.grid()
    }

    pub fn phi(&self) -> &SpectralField {
        &self.phi
    }

    pub fn a0(&self) -> f64 {
        self.a0
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn band_width(&self) -> f64 {
        self.band_width
    }

    pub fn smooth_width(&self) -> f64 {
        self.smooth_width
    }

    /// `E` nonempty and at least `L/8` away from the cell edges.
    pub fn check_geometry(&self) -> Result<()> {
        let g = self.grid();
        let l = g.length();
        let margin = l / 8.0;
        let mut any = false;
        for (idx, v) in self.phi.values().iter().enumerate() {
            if *v > 0.0 {
                any = true;
                let (x, y) = g.coords(idx);
                if x.min(l - x).min(y).min(l - y) < margin {
                    return Err(Error::Geometry(format!("patch touches the domain margin near ({x:.3}, {y:.3})")));
                }
            }
        }
        if !any {
            return Err(Error::Geometry("patch region {φ > 0} is empty".into()));
        }
        Ok(())
    }

    pub fn geometry(&self) -> Geometry {
        geometry_of(&self.phi, self.band_width)
    }

    /// Mollified indicator `a₀ S(d/ε)`.
    pub fn indicator(&self, geo: &Geometry) -> SpectralField {
        let v = geo.distance.iter().map(|d| self.a0 * smooth_step(d / self.smooth_width)).collect();
        SpectralField::from_values(*self.grid(), v).expect("grid sized")
    }

    /// Area of the mollified region.
    pub fn area(&self, geo: &Geometry) -> f64 {
        let h = self.grid().spacing();
        geo.distance.iter().map(|d| smooth_step(d / self.smooth_width)).sum::<f64>() * h * h
    }

    pub fn tangent_field(&self, geo: &Geometry) -> TangentField {
        let n = self.grid().len();
        let mut t = TangentField { t1: vec![0.0; n], t2: vec![0.0; n], mask: vec![false; n] };
        for &i in &geo.band {
            t.t1[i] = -geo.g2[i] / geo.norm[i];
            t.t2[i] = geo.g1[i] / geo.norm[i];
            t.mask[i] = true;
        }
        t
    }

    /// Centroid of the mollified region, in unwrapped coordinates.
    pub fn centroid(&self, geo: &Geometry) -> (f64, f64) {
        let g = self.grid();
        let (mut w, mut cx, mut cy) = (0.0, 0.0, 0.0);
        for (idx, d) in geo.distance.iter().enumerate() {
            let s = smooth_step(d / self.smooth_width);
            let (x, y) = g.coords(idx);
            w += s;
            cx += s * x;
            cy += s * y;
        }
        (cx / w, cy / w)
    }
}

fn geometry_of(phi: &SpectralField, band_width: f64) -> Geometry {
    let g = *phi.grid();
    let (c1, c2) = derivative_coeffs(&g, phi.coeffs());
    let (g1, g2) = inverse_pair(g.n(), &c1, &c2);
    finish_geometry(phi.values(), g1, g2, band_width)
}

fn finish_geometry(phi: &[f64], g1: Vec<f64>, g2: Vec<f64>, band_width: f64) -> Geometry {
    let norm: Vec<f64> = g1.iter().zip(&g2).map(|(a, b)| a.hypot(*b)).collect();
    let distance: Vec<f64> = phi
        .iter()
        .zip(&norm)
        .map(|(p, n)| if *n > 0.0 { p / n } else if *p > 0.0 { f64::INFINITY } else { f64::NEG_INFINITY })
        .collect();
    let band = distance.iter().enumerate().filter(|(_, d)| d.abs() < band_width).map(|(i, _)| i).collect();
    Geometry { g1, g2, norm, distance, band }
}

fn derivative_coeffs(g: &Grid, c: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
    (0..g.len())
        .map(|i| {
            let (k1, k2) = g.derivative_wavevector(i);
            (Complex64::new(0.0, k1) * c[i], Complex64::new(0.0, k2) * c[i])
        })
        .unzip()
}

/// Velocity of the mollified patch under the modified Biot–Savart law.
pub fn patch_velocity(state: &PatchState, m: &Multiplier) -> Result<VectorField> {
    state.check_geometry()?;
    biot_savart(&state.indicator(&state.geometry()), m)
}

/// `sup_band |⟨∇u τ, τ⟩|` and `sup_band |∇u|`.
pub fn tangential_gradient_sup(state: &PatchState, u: &VectorField) -> (f64, f64) {
    let geo = state.geometry();
    let tau = state.tangent_field(&geo);
    let gt = u.gradient_tensor();
    let (mut tang, mut full) = (0.0f64, 0.0f64);
    for &i in &geo.band {
        let (a, b) = (tau.t1[i], tau.t2[i]);
        let (g11, g12, g21, g22) = (gt[0][0].values()[i], gt[0][1].values()[i], gt[1][0].values()[i], gt[1][1].values()[i]);
        let v = a * (g11 * a + g12 * b) + b * (g21 * a + g22 * b);
        tang = tang.max(v.abs());
        full = full.max((g11 * g11 + g12 * g12 + g21 * g21 + g22 * g22).sqrt());
    }
    (tang, full)
}

/// `tangentialSup / (1 + m(Δ) Log Δ)`.
pub fn tangential_ratio(tangential_sup: f64, delta: f64, m: &Multiplier) -> Result<f64> {
    Ok(tangential_sup / (1.0 + m.eval(delta.max(0.0))? * log_plus(delta)))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ArcSample {
    pub rho: f64,
    pub measure: f64,
    pub bound: f64,
}

/// `2π((1 + 2^μ) d/ρ + 2^μ (ρ/μ)^μ)`.
pub fn arc_bound(d: f64, rho: f64, mu: f64) -> f64 {
    let p = 2f64.powf(mu);
    TAU * ((1.0 + p) * d / rho + p * (rho / mu).powf(mu))
}

/// Measure of `{z : x₀ + ρz ∈ E} Δ {z : n·z ≥ 0}` on the unit circle, from
/// `samples` midpoint angles.
pub fn arc_measure_with(
    inside: impl Fn(f64, f64) -> bool,
    x0: (f64, f64),
    foot: (f64, f64),
    normal: (f64, f64),
    rhos: &[f64],
    samples: usize,
    mu: f64,
) -> Vec<ArcSample> {
    let d = (x0.0 - foot.0).hypot(x0.1 - foot.1);
    let dirs: Vec<(f64, f64)> = (0..samples).map(|k| (TAU * (k as f64 + 0.5) / samples as f64).sin_cos()).map(|(s, c)| (c, s)).collect();
    rhos.iter()
        .map(|&rho| {
            let miss = dirs
                .iter()
                .filter(|(zx, zy)| inside(x0.0 + rho * zx, x0.1 + rho * zy) != (normal.0 * zx + normal.1 * zy >= 0.0))
                .count();
            ArcSample { rho, measure: TAU * miss as f64 / samples as f64, bound: arc_bound(d, rho, mu) }
        })
        .collect()
}

/// Nearest boundary point of the interpolated level set, by projected
/// Newton iteration from `x0`.
pub fn boundary_foot(state: &PatchState, geo: &Geometry, x0: (f64, f64)) -> Result<((f64, f64), (f64, f64))> {
    let g = state.grid();
    let phi = Bicubic::new(g, state.phi.values());
    let (i1, i2) = (Bicubic::new(g, &geo.g1), Bicubic::new(g, &geo.g2));
    let mut p = x0;
    for _ in 0..50 {
        let v = phi.eval(p.0, p.1);
        let (a, b) = (i1.eval(p.0, p.1), i2.eval(p.0, p.1));
        let n2 = a * a + b * b;
        if n2 == 0.0 {
            break;
        }
        p = (p.0 - v * a / n2, p.1 - v * b / n2);
        if v.abs() < 1e-13 * n2.sqrt() * g.spacing() {
            break;
        }
    }
    let dist = (p.0 - x0.0).hypot(p.1 - x0.1);
    if !(dist.is_finite() && dist <= state.band_width && phi.eval(p.0, p.1).abs() <= 1e-8 * g.spacing()) {
        return Err(Error::Geometry(format!("no boundary point within the band of ({:.4}, {:.4})", x0.0, x0.1)));
    }
    Ok((p, (i1.eval(p.0, p.1), i2.eval(p.0, p.1))))
}

/// Arc-measure table for the interpolated patch at `x0`; returns `d(x₀)`.
pub fn arc_measure(state: &PatchState, x0: (f64, f64), rhos: &[f64], samples: usize, mu: f64) -> Result<(f64, Vec<ArcSample>)> {
    let geo = state.geometry();
    let (foot, normal) = boundary_foot(state, &geo, x0)?;
    let phi = Bicubic::new(state.grid(), state.phi.values());
    let d = (x0.0 - foot.0).hypot(x0.1 - foot.1);
    Ok((d, arc_measure_with(|x, y| phi.eval(x, y) > 0.0, x0, foot, normal, rhos, samples, mu)))
}

/// Boundary radius along each angle from `center`, by marching out from the
/// centre to the first sign change and bisecting.
pub fn boundary_radii(state: &PatchState, center: (f64, f64), angles: &[f64]) -> Result<Vec<f64>> {
    let g = state.grid();
    let phi = Bicubic::new(g, state.phi.values());
    if phi.eval(center.0, center.1) <= 0.0 {
        return Err(Error::Geometry("patch is not star-shaped about its centroid".into()));
    }
    let step = 0.5 * g.spacing();
    angles
        .iter()
        .map(|&th| {
            let (s, c) = th.sin_cos();
            let f = |r: f64| phi.eval(center.0 + r * c, center.1 + r * s);
            let mut r = 0.0;
            while f(r + step) > 0.0 {
                r += step;
                if r > 0.5 * g.length() {
                    return Err(Error::Geometry("no boundary crossing along a ray".into()));
                }
            }
            let (mut lo, mut hi) = (r, r + step);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if f(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok(0.5 * (lo + hi))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PatchStepper {
    Rk4,
    SemiLagrangian { inner: usize },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PatchConfig {
    pub grid: Grid,
    pub multiplier: Multiplier,
    pub shape: PatchShape,
    pub a0: f64,
    pub stepper: PatchStepper,
    pub dt: DtPolicy,
    pub t_end: f64,
    pub cadence: f64,
    pub mu_list: Vec<f64>,
    /// Total exponent loss `ε` in `μ_t = μ − ηV(t)`.
    pub epsilon: f64,
    pub band_cells: f64,
    pub smooth_cells: f64,
    pub pair_budget: usize,
    pub seed: u64,
    /// Stop once `|∇φ|_inf` falls below this fraction of its initial value.
    pub grad_floor_fraction: f64,
    pub arc_samples: usize,
    pub arc_points: usize,
}

impl PatchConfig {
    pub fn new(grid: Grid, multiplier: Multiplier, shape: PatchShape, t_end: f64) -> Self {
        PatchConfig {
            grid,
            multiplier,
            shape,
            a0: 1.0,
            stepper: PatchStepper::Rk4,
            dt: DtPolicy::Cfl { safety: 0.5, dt_max: 0.05 },
            t_end,
            cadence: t_end / 10.0,
            mu_list: vec![0.5],
            epsilon: 0.25,
            band_cells: BAND_CELLS,
            smooth_cells: SMOOTH_CELLS,
            pair_budget: 20_000,
            seed: 0,
            grad_floor_fraction: 1e-2,
            arc_samples: 4096,
            arc_points: 4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::invalid(format!("tEnd must be positive, got {}", self.t_end)));
        }
        if !(self.cadence.is_finite() && self.cadence > 0.0) {
            return Err(Error::invalid(format!("cadence must be positive, got {}", self.cadence)));
        }
        match self.dt {
            DtPolicy::Fixed { dt } if !(dt.is_finite() && dt > 0.0) => {
                return Err(Error::invalid(format!("fixed dt must be positive, got {dt}")));
            }
            DtPolicy::Cfl { safety, dt_max } if !(safety > 0.0 && safety <= 1.0 && dt_max > 0.0) => {
                return Err(Error::invalid("CFL safety must lie in (0, 1] and dt_max > 0"));
            }
            _ => {}
        }
        if let PatchStepper::SemiLagrangian { inner: 0 } = self.stepper {
            return Err(Error::invalid("semi-Lagrangian stepper needs at least one inner iteration"));
        }
        if self.mu_list.is_empty() || self.mu_list.iter().any(|m| !(*m > 0.0 && *m <= 1.0)) {
            return Err(Error::invalid("mu list must be non-empty with every mu in (0, 1]"));
        }
        if self.mu_list.iter().any(|m| !(self.epsilon > 0.0 && self.epsilon < *m)) {
            return Err(Error::invalid("epsilon must lie in (0, mu) for every tracked mu"));
        }
        if !(self.grad_floor_fraction > 0.0 && self.grad_floor_fraction < 1.0) {
            return Err(Error::invalid("gradient floor fraction must lie in (0, 1)"));
        }
        if self.pair_budget < 100 || self.arc_samples < 16 {
            return Err(Error::invalid("pair budget must be at least 100 and arc samples at least 16"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PatchRecord {
    pub t: f64,
    pub area: f64,
    pub grad_inf: f64,
    pub grad_holder: Vec<f64>,
    pub delta: Vec<f64>,
    pub tangential_sup: f64,
    pub grad_u_band_sup: f64,
    /// `∫₀ᵗ (1 + Log Δ_μ)` for the first `μ`, with `C(γ) = 1`.
    pub v: f64,
    pub mu_t: Vec<f64>,
    /// `tangentialSup / (1 + m(Δ_μ) Log Δ_μ)` for the first `μ`.
    pub tangential_ratio: f64,
    pub tangential_integral: f64,
    /// Largest radial boundary displacement from `t = 0`.
    pub displacement: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ArcRow {
    pub t: f64,
    pub point: usize,
    pub d: f64,
    pub rho: f64,
    pub measure: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PatchSeries {
    pub mu_list: Vec<f64>,
    pub epsilon: f64,
    pub records: Vec<PatchRecord>,
    pub arcs: Vec<ArcRow>,
    pub regularity_lost: Option<BlowUp>,
    pub blow_up: Option<BlowUp>,
    pub steps: usize,
}

impl PatchSeries {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,area,grad_inf");
        for m in &self.mu_list {
            out.push_str(&format!(",grad_holder_{m}"));
        }
        for m in &self.mu_list {
            out.push_str(&format!(",Delta_mu_{m}"));
        }
        out.push_str(",tangential_sup,grad_u_band_sup,V");
        for m in &self.mu_list {
            out.push_str(&format!(",mu_t_{m}"));
        }
        out.push_str(",tangential_ratio,tangential_integral,displacement\n");
        for r in &self.records {
            out.push_str(&format!("{:e},{:e},{:e}", r.t, r.area, r.grad_inf));
            for v in r.grad_holder.iter().chain(&r.delta) {
                out.push_str(&format!(",{v:e}"));
            }
            out.push_str(&format!(",{:e},{:e},{:e}", r.tangential_sup, r.grad_u_band_sup, r.v));
            for v in &r.mu_t {
                out.push_str(&format!(",{v:e}"));
            }
            out.push_str(&format!(",{:e},{:e},{:e}\n", r.tangential_ratio, r.tangential_integral, r.displacement));
        }
        out
    }

    pub fn arcs_csv(&self) -> String {
        let mut out = String::from("t,point,d,rho,measure,bound\n");
        for a in &self.arcs {
            out.push_str(&format!("{:e},{},{:e},{:e},{:e},{:e}\n", a.t, a.point, a.d, a.rho, a.measure, a.bound));
        }
        out
    }
}

/// Transport state for `φ_t + u·∇φ = 0`, with `φ` held as dealiased
/// coefficients.
#[derive(Debug, Clone)]
pub struct PatchSolver {
    state: PatchState,
    bs: BiotSavart,
    keep: Vec<f64>,
    phi_hat: Vec<Complex64>,
    last_speed: f64,
}

impl PatchSolver {
    pub fn new(state: PatchState, m: &Multiplier) -> Result<Self> {
        let grid = *state.grid();
        let bs = BiotSavart::new(grid, m)?;
        let keep: Vec<f64> = (0..grid.len()).map(|i| if grid.is_dealiased_out(i) { 0.0 } else { 1.0 }).collect();
        let phi_hat: Vec<Complex64> = state.phi.coeffs().iter().zip(&keep).map(|(c, k)| c * *k).collect();
        let mut s = PatchSolver { state, bs, keep, phi_hat, last_speed: 0.0 };
        s.sync();
        s.last_speed = s.velocity().max_magnitude();
        Ok(s)
    }

    fn sync(&mut self) {
        self.state.phi = SpectralField::from_coeffs(*self.state.grid(), self.phi_hat.clone()).expect("grid sized");
    }

    pub fn state(&self) -> &PatchState {
        &self.state
    }

    pub fn velocity(&self) -> VectorField {
        let omega = self.state.indicator(&self.state.geometry());
        let (a, b) = self.bs.velocity_coeffs(omega.coeffs());
        let (u1, u2) = inverse_pair(self.state.grid().n(), &a, &b);
        VectorField {
            u1: SpectralField::from_values(*self.state.grid(), u1).expect("grid sized"),
            u2: SpectralField::from_values(*self.state.grid(), u2).expect("grid sized"),
        }
    }

    pub fn max_speed(&self) -> f64 {
        self.last_speed
    }

    /// Velocity values from level-set coefficients.
    fn velocity_from(&self, phi_hat: &[Complex64]) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
        let g = *self.state.grid();
        let n = g.n();
        let phi = inverse_real(n, phi_hat);
        let (c1, c2) = derivative_coeffs(&g, phi_hat);
        let (g1, g2) = inverse_pair(n, &c1, &c2);
        let geo = finish_geometry(&phi, g1, g2, self.state.band_width);
        let omega: Vec<f64> = geo.distance.iter().map(|d| self.state.a0 * smooth_step(d / self.state.smooth_width)).collect();
        let (a, b) = self.bs.velocity_coeffs(&forward(n, &omega));
        let (u1, u2) = inverse_pair(n, &a, &b);
        (u1, u2, geo.g1, geo.g2)
    }

    fn rhs(&self, phi_hat: &[Complex64]) -> (Vec<Complex64>, f64) {
        let n = self.state.grid().n();
        let (u1, u2, g1, g2) = self.velocity_from(phi_hat);
        let mut speed = 0.0f64;
        let prod: Vec<f64> = (0..u1.len())
            .map(|i| {
                speed = speed.max(u1[i].hypot(u2[i]));
                u1[i] * g1[i] + u2[i] * g2[i]
            })
            .collect();
        let mut out = forward(n, &prod);
        for (c, k) in out.iter_mut().zip(&self.keep) {
            *c *= -k;
        }
        out[0] = Complex64::default();
        (out, speed)
    }

    fn commit(&mut self, next: Vec<Complex64>, dt: f64, speed: f64) -> Result<()> {
        if next.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::BlowUp { t: self.state.t + dt, reason: "non-finite level set".into() });
        }
        self.phi_hat = next;
        self.state.t += dt;
        self.last_speed = speed;
        self.sync();
        Ok(())
    }

    pub fn step_rk4(&mut self, dt: f64) -> Result<()> {
        let w = &self.phi_hat;
        let axpy = |a: &[Complex64], k: &[Complex64], h: f64| -> Vec<Complex64> { a.iter().zip(k).map(|(a, k)| a + k * h).collect() };
        let (k1, speed) = self.rhs(w);
        let (k2, _) = self.rhs(&axpy(w, &k1, 0.5 * dt));
        let (k3, _) = self.rhs(&axpy(w, &k2, 0.5 * dt));
        let (k4, _) = self.rhs(&axpy(w, &k3, dt));
        let next = (0..w.len()).map(|i| w[i] + (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (dt / 6.0)).collect();
        self.commit(next, dt, speed)
    }

    /// Picard-iterated semi-Lagrangian transport with bicubic departure
    /// interpolation.
    pub fn step_semi_lagrangian(&mut self, dt: f64, inner: usize) -> Result<()> {
        if inner == 0 {
            return Err(Error::invalid("semi-Lagrangian stepper needs at least one inner iteration"));
        }
        let g = *self.state.grid();
        let n = g.n();
        let base_vals = self.state.phi.values().to_vec();
        let base = Bicubic::new(&g, &base_vals);
        let (un1, un2, _, _) = self.velocity_from(&self.phi_hat);
        let speed = un1.iter().zip(&un2).fold(0.0f64, |a, (x, y)| a.max(x.hypot(*y)));
        let (mut up1, mut up2) = (un1.clone(), un2.clone());
        let mut next = self.phi_hat.clone();
        for _ in 0..inner {
            let s1: Vec<f64> = un1.iter().zip(&up1).map(|(a, b)| 0.5 * (a + b)).collect();
            let s2: Vec<f64> = un2.iter().zip(&up2).map(|(a, b)| 0.5 * (a + b)).collect();
            let (i1, i2) = (Bicubic::new(&g, &s1), Bicubic::new(&g, &s2));
            let moved: Vec<f64> = (0..g.len())
                .map(|idx| {
                    let (mx, my) = (-0.5 * dt * s1[idx], -0.5 * dt * s2[idx]);
                    base.eval_from(idx, -dt * i1.eval_from(idx, mx, my), -dt * i2.eval_from(idx, mx, my))
                })
                .collect();
            // update as an increment so a zero displacement is exact
            let inc: Vec<f64> = moved.iter().zip(&base_vals).map(|(a, b)| a - b).collect();
            let inc_hat = forward(n, &inc);
            next = (0..g.len()).map(|i| self.phi_hat[i] + inc_hat[i] * self.keep[i]).collect();
            next[0] = self.phi_hat[0];
            let (v1, v2, _, _) = self.velocity_from(&next);
            up1 = v1;
            up2 = v2;
        }
        self.commit(next, dt, speed)
    }

    pub fn step(&mut self, stepper: PatchStepper, dt: f64) -> Result<()> {
        match stepper {
            PatchStepper::Rk4 => self.step_rk4(dt),
            PatchStepper::SemiLagrangian { inner } => self.step_semi_lagrangian(dt, inner),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PatchRun {
    pub series: PatchSeries,
    /// `1 + Log Δ_μ` against the two-term envelope for `γ̃`.
    pub fit: Option<FitResult>,
    pub fit_error: Option<String>,
    #[serde(skip)]
    pub final_state: PatchState,
}

struct Reference {
    center: (f64, f64),
    angles: Vec<f64>,
    radii: Vec<f64>,
}

fn diagnose(
    solver: &PatchSolver,
    cfg: &PatchConfig,
    reference: &Reference,
    v: f64,
    tangential_integral: f64,
    arcs: &mut Vec<ArcRow>,
) -> Result<PatchRecord> {
    let state = solver.state();
    let geo = state.geometry();
    let grid = *state.grid();
    let grad_inf = geo.band.iter().map(|&i| geo.norm[i]).fold(f64::INFINITY, f64::min);
    let mut grad_holder = Vec::with_capacity(cfg.mu_list.len());
    let mut delta = Vec::with_capacity(cfg.mu_list.len());
    for (k, mu) in cfg.mu_list.iter().enumerate() {
        let h = band_seminorm_vec(&grid, &[&geo.g1, &geo.g2], &geo.band, *mu, cfg.pair_budget, cfg.seed.wrapping_add(k as u64))?;
        grad_holder.push(h.seminorm);
        delta.push(h.seminorm / grad_inf);
    }
    let u = solver.velocity();
    let (tangential_sup, grad_u_band_sup) = tangential_gradient_sup(state, &u);
    let tangential_ratio = tangential_ratio(tangential_sup, delta[0], &cfg.multiplier)?;
    let radii = boundary_radii(state, reference.center, &reference.angles)?;
    let displacement = radii.iter().zip(&reference.radii).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    // arc tables at points just inside the boundary, δ^μ = 1/(2Δ_μ)
    let mu = cfg.mu_list[0];
    let delta_len = (2.0 * delta[0]).powf(-1.0 / mu).min(grid.length() / 8.0);
    let phi = Bicubic::new(&grid, state.phi().values());
    let (i1, i2) = (Bicubic::new(&grid, &geo.g1), Bicubic::new(&grid, &geo.g2));
    for p in 0..cfg.arc_points {
        let k = p * radii.len() / cfg.arc_points.max(1);
        let (s, c) = reference.angles[k].sin_cos();
        let b = (reference.center.0 + radii[k] * c, reference.center.1 + radii[k] * s);
        let (n1, n2) = (i1.eval(b.0, b.1), i2.eval(b.0, b.1));
        let nn = n1.hypot(n2);
        let off = 0.5 * delta_len.min(state.band_width());
        let x0 = (b.0 + off * n1 / nn, b.1 + off * n2 / nn);
        let (foot, normal) = boundary_foot(state, &geo, x0)?;
        let d = (x0.0 - foot.0).hypot(x0.1 - foot.1).max(1e-12);
        let top = delta_len.max(4.0 * d);
        let rhos: Vec<f64> = (0..8).map(|i| d * (top / d).powf(i as f64 / 7.0)).collect();
        for a in arc_measure_with(|x, y| phi.eval(x, y) > 0.0, x0, foot, normal, &rhos, cfg.arc_samples, mu) {
            arcs.push(ArcRow { t: state.time(), point: p, d, rho: a.rho, measure: a.measure, bound: a.bound });
        }
    }

    Ok(PatchRecord {
        t: state.time(),
        area: state.area(&geo),
        grad_inf,
        grad_holder,
        delta,
        tangential_sup,
        grad_u_band_sup,
        v,
        mu_t: Vec::new(),
        tangential_ratio,
        tangential_integral,
        displacement,
    })
}

/// Evolve the configured patch to `t_end`, recording diagnostics every
/// `cadence`.
pub fn run(cfg: &PatchConfig) -> Result<PatchRun> {
    cfg.validate()?;
    let phi0 = cfg.shape.level_set(cfg.grid)?;
    let state = PatchState::with_widths(phi0, cfg.a0, cfg.band_cells, cfg.smooth_cells)?;
    run_from(cfg, state)
}

pub fn run_from(cfg: &PatchConfig, state: PatchState) -> Result<PatchRun> {
    cfg.validate()?;
    let mut solver = PatchSolver::new(state, &cfg.multiplier)?;
    let geo = solver.state().geometry();
    let center = solver.state().centroid(&geo);
    let angles: Vec<f64> = (0..256).map(|k| TAU * k as f64 / 256.0).collect();
    let radii = boundary_radii(solver.state(), center, &angles)?;
    let reference = Reference { center, angles, radii };

    let mut series = PatchSeries {
        mu_list: cfg.mu_list.clone(),
        epsilon: cfg.epsilon,
        records: Vec::new(),
        arcs: Vec::new(),
        regularity_lost: None,
        blow_up: None,
        steps: 0,
    };
    let mut v = 0.0;
    let mut tint = 0.0;
    let first = diagnose(&solver, cfg, &reference, v, tint, &mut series.arcs)?;
    let floor = cfg.grad_floor_fraction * first.grad_inf;
    series.records.push(first);
    let records = (cfg.t_end / cfg.cadence - 1e-9).ceil().max(1.0) as usize;
    'outer: for k in 1..=records {
        let target = if k == records { cfg.t_end } else { k as f64 * cfg.cadence };
        while solver.state().time() < target - 1e-12 * target.max(1.0) {
            let mut dt = match cfg.dt {
                DtPolicy::Fixed { dt } => dt,
                DtPolicy::Cfl { safety, dt_max } => (safety * cfg.grid.spacing() / solver.max_speed().max(1e-300)).min(dt_max),
            };
            if dt < 1e-12 * cfg.t_end {
                series.blow_up = Some(BlowUp { t: solver.state().time(), reason: format!("CFL step collapsed to {dt:e}") });
                break 'outer;
            }
            let remaining = target - solver.state().time();
            if dt >= remaining * (1.0 - 1e-9) {
                dt = remaining;
            } else if dt > 0.5 * remaining {
                dt = 0.5 * remaining;
            }
            let backup = solver.clone();
            if let Err(e) = solver.step(cfg.stepper, dt) {
                solver = backup;
                series.blow_up = Some(BlowUp { t: solver.state().time(), reason: e.to_string() });
                break 'outer;
            }
            series.steps += 1;
        }
        if let Err(e) = solver.state().check_geometry() {
            series.blow_up = Some(BlowUp { t: solver.state().time(), reason: e.to_string() });
            break;
        }
        let prev = series.records.last().expect("initial record");
        let dt = solver.state().time() - prev.t;
        let mut rec = diagnose(&solver, cfg, &reference, 0.0, 0.0, &mut series.arcs)?;
        v += 0.5 * dt * (2.0 + log_plus(prev.delta[0]) + log_plus(rec.delta[0]));
        tint += 0.5 * dt * (prev.tangential_sup + rec.tangential_sup);
        rec.v = v;
        rec.tangential_integral = tint;
        let lost = rec.grad_inf < floor;
        let t = rec.t;
        series.records.push(rec);
        if lost {
            series.regularity_lost = Some(BlowUp { t, reason: format!("patch regularity lost: |grad phi|_inf below {floor:e}") });
            break;
        }
    }

    // η = ε / V(T) so that μ_T = μ − ε
    let v_end = series.records.last().map_or(0.0, |r| r.v);
    let eta = if v_end > 0.0 { cfg.epsilon / v_end } else { 0.0 };
    for r in &mut series.records {
        r.mu_t = cfg.mu_list.iter().map(|mu| if r.v == v_end { mu - cfg.epsilon } else { mu - eta * r.v }).collect();
    }

    let (fit, fit_error) = fit_delta(cfg, &series);
    Ok(PatchRun { series, fit, fit_error, final_state: solver.state().clone() })
}

fn fit_delta(cfg: &PatchConfig, series: &PatchSeries) -> (Option<FitResult>, Option<String>) {
    let t: Vec<f64> = series.records.iter().map(|r| r.t).collect();
    let f: Vec<f64> = series.records.iter().map(|r| 1.0 + log_plus(r.delta[0])).collect();
    let result = OsgoodEnvelope::with_defaults(GrowthFunction::Tilde(cfg.multiplier.clone()))
        .and_then(|env| osgood::fit_constant(&env, EnvelopeForm::TwoTerm, f[0], &t, &f));
    match result {
        Ok(fit) => (Some(fit), None),
        Err(e) => (None, Some(e.to_string())),
    }
}

/// Angular velocity `a₀/2 (1 − πR²/L²)` inside a circular patch on the
/// torus with the mean removed.
pub fn rankine_angular_velocity(a0: f64, radius: f64, length: f64) -> f64 {
    0.5 * a0 * (1.0 - PI * radius * radius / (length * length))
}
