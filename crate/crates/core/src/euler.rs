//! Pseudospectral transport `ω_t + u·∇ω = 0`, `u = m(|D|)∇⊥Δ⁻¹ω`, on the
//! torus, with a classical RK4 stepper and a Picard-iterated semi-Lagrangian
//! splitting stepper.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interp::Bicubic;
use crate::lp::{self, Partition, Profile};
use crate::multiplier::Multiplier;
use crate::osgood::{self, EnvelopeForm, FitResult, GrowthFunction, OsgoodEnvelope};
use crate::spectral::{forward, inverse_pair, inverse_real, BiotSavart, Grid, SpectralField, VectorField};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Stepper {
    Rk4,
    SplitIterate { inner: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DtPolicy {
    Fixed { dt: f64 },
    /// `dt = safety · h / max|u|`, capped at `dt_max`.
    Cfl { safety: f64, dt_max: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    pub grid: Grid,
    pub multiplier: Multiplier,
    pub stepper: Stepper,
    pub dt: DtPolicy,
    pub t_end: f64,
    /// Time between diagnostic records.
    pub cadence: f64,
    /// Keep a snapshot every this many records (0 keeps none).
    pub snapshot_every: usize,
    /// Hölder exponents tracked through the `C^s ∩ L²` proxy; the first one
    /// defines `f(t)`.
    pub s_list: Vec<f64>,
    /// Also record the normalised `‖S_j∇u‖_∞ / m(2^j)` table.
    pub track_modulus: bool,
}

impl SolverConfig {
    pub fn new(grid: Grid, multiplier: Multiplier, t_end: f64) -> Self {
        SolverConfig {
            grid,
            multiplier,
            stepper: Stepper::Rk4,
            dt: DtPolicy::Cfl { safety: 0.5, dt_max: 0.05 },
            t_end,
            cadence: t_end / 10.0,
            snapshot_every: 0,
            s_list: vec![0.5],
            track_modulus: false,
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
                return Err(Error::invalid(format!("CFL safety must lie in (0, 1] and dt_max > 0, got {safety}, {dt_max}")));
            }
            _ => {}
        }
        if let Stepper::SplitIterate { inner: 0 } = self.stepper {
            return Err(Error::invalid("split-iterate stepper needs at least one inner iteration"));
        }
        if self.s_list.is_empty() || self.s_list.iter().any(|s| !(*s > 0.0 && *s <= 1.0)) {
            return Err(Error::invalid("s list must be non-empty with every s in (0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticRecord {
    pub t: f64,
    pub l2: f64,
    pub linf: f64,
    pub mean: f64,
    /// `Y + ‖ω‖_{L²}` per tracked `s`.
    pub cs_proxy: Vec<f64>,
    pub grad_u_inf: f64,
    /// `Log` of the proxy for the first `s`.
    pub f: f64,
    /// `∫₀ᵗ ‖∇u‖_∞` accumulated over steps (trapezoid).
    pub grad_u_integral: f64,
    pub modulus: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlowUp {
    pub t: f64,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticSeries {
    pub s_list: Vec<f64>,
    pub records: Vec<DiagnosticRecord>,
    pub blow_up: Option<BlowUp>,
    pub steps: usize,
}

/// One snapshot interval of the BKM-type comparison.
#[derive(Debug, Clone, Serialize)]
pub struct BkmInterval {
    pub t0: f64,
    pub t1: f64,
    /// `Log proxy(t1) − Log proxy(t0)` per `s`.
    pub d_log_proxy: Vec<f64>,
    pub grad_integral: f64,
}

impl DiagnosticSeries {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,L2,Linf");
        for s in &self.s_list {
            out.push_str(&format!(",Cs_proxy_{s}"));
        }
        out.push_str(",grad_u_inf,f\n");
        for r in &self.records {
            out.push_str(&format!("{:e},{:e},{:e}", r.t, r.l2, r.linf));
            for p in &r.cs_proxy {
                out.push_str(&format!(",{p:e}"));
            }
            out.push_str(&format!(",{:e},{:e}\n", r.grad_u_inf, r.f));
        }
        out
    }

    pub fn bkm_intervals(&self) -> Vec<BkmInterval> {
        self.records
            .windows(2)
            .map(|w| BkmInterval {
                t0: w[0].t,
                t1: w[1].t,
                d_log_proxy: w[0].cs_proxy.iter().zip(&w[1].cs_proxy).map(|(a, b)| b.ln() - a.ln()).collect(),
                grad_integral: w[1].grad_u_integral - w[0].grad_u_integral,
            })
            .collect()
    }

    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    pub fn f_series(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.f).collect()
    }
}

/// Time-stepping state. Vorticity is held as dealiased coefficients.
#[derive(Debug, Clone)]
pub struct EulerSolver {
    grid: Grid,
    bs: BiotSavart,
    kx: Vec<f64>,
    ky: Vec<f64>,
    keep: Vec<f64>,
    omega_hat: Vec<Complex64>,
    t: f64,
    last_speed: f64,
}

impl EulerSolver {
    /// Starts from the 2/3-truncation of `omega0`.
    pub fn new(omega0: &SpectralField, m: &Multiplier) -> Result<Self> {
        let grid = *omega0.grid();
        let bs = BiotSavart::new(grid, m)?;
        let mut kx = Vec::with_capacity(grid.len());
        let mut ky = Vec::with_capacity(grid.len());
        let mut keep = Vec::with_capacity(grid.len());
        for idx in 0..grid.len() {
            let (a, b) = grid.derivative_wavevector(idx);
            kx.push(a);
            ky.push(b);
            keep.push(if grid.is_dealiased_out(idx) { 0.0 } else { 1.0 });
        }
        let omega_hat: Vec<Complex64> = omega0.coeffs().iter().zip(&keep).map(|(c, k)| c * *k).collect();
        let mut s = EulerSolver { grid, bs, kx, ky, keep, omega_hat, t: 0.0, last_speed: 0.0 };
        s.last_speed = s.velocity().max_magnitude();
        Ok(s)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn omega(&self) -> SpectralField {
        SpectralField::from_coeffs(self.grid, self.omega_hat.clone()).expect("grid sized")
    }

    pub fn velocity(&self) -> VectorField {
        let (a, b) = self.bs.velocity_coeffs(&self.omega_hat);
        let (u1, u2) = inverse_pair(self.grid.n(), &a, &b);
        VectorField {
            u1: SpectralField::from_values(self.grid, u1).expect("grid sized"),
            u2: SpectralField::from_values(self.grid, u2).expect("grid sized"),
        }
    }

    /// `max |u|` from the most recent velocity evaluation.
    pub fn max_speed(&self) -> f64 {
        self.last_speed
    }

    /// `sup_x |∇u(x)|` (Frobenius).
    pub fn grad_u_sup(&self) -> f64 {
        let (a, b) = self.bs.velocity_coeffs(&self.omega_hat);
        let n = self.grid.n();
        let d = |c: &[Complex64], k: &[f64]| -> Vec<Complex64> { c.iter().zip(k).map(|(c, k)| Complex64::new(0.0, *k) * c).collect() };
        let (g11, g12) = inverse_pair(n, &d(&a, &self.kx), &d(&a, &self.ky));
        let (g21, g22) = inverse_pair(n, &d(&b, &self.kx), &d(&b, &self.ky));
        (0..self.grid.len()).fold(0.0f64, |acc, i| {
            acc.max((g11[i] * g11[i] + g12[i] * g12[i] + g21[i] * g21[i] + g22[i] * g22[i]).sqrt())
        })
    }

    /// Dealiased `−u·∇ω` in coefficient space, and `max |u|`.
    fn rhs(&self, w: &[Complex64]) -> (Vec<Complex64>, f64) {
        let n = self.grid.n();
        let (a, b) = self.bs.velocity_coeffs(w);
        let (u1, u2) = inverse_pair(n, &a, &b);
        let g1: Vec<Complex64> = w.iter().zip(&self.kx).map(|(c, k)| Complex64::new(0.0, *k) * c).collect();
        let g2: Vec<Complex64> = w.iter().zip(&self.ky).map(|(c, k)| Complex64::new(0.0, *k) * c).collect();
        let (w1, w2) = inverse_pair(n, &g1, &g2);
        let mut speed = 0.0f64;
        let prod: Vec<f64> = (0..self.grid.len())
            .map(|i| {
                speed = speed.max(u1[i].hypot(u2[i]));
                u1[i] * w1[i] + u2[i] * w2[i]
            })
            .collect();
        let mut out = forward(n, &prod);
        for (c, k) in out.iter_mut().zip(&self.keep) {
            *c *= -k;
        }
        out[0] = Complex64::default();
        (out, speed)
    }

    fn check_finite(&self, w: &[Complex64], t: f64) -> Result<()> {
        if w.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::BlowUp { t, reason: "non-finite vorticity".into() });
        }
        Ok(())
    }

    /// One classical RK4 step; `dt` may be negative.
    pub fn step_rk4(&mut self, dt: f64) -> Result<()> {
        let w = &self.omega_hat;
        let axpy = |a: &[Complex64], k: &[Complex64], h: f64| -> Vec<Complex64> { a.iter().zip(k).map(|(a, k)| a + k * h).collect() };
        let (k1, speed) = self.rhs(w);
        let (k2, _) = self.rhs(&axpy(w, &k1, 0.5 * dt));
        let (k3, _) = self.rhs(&axpy(w, &k2, 0.5 * dt));
        let (k4, _) = self.rhs(&axpy(w, &k3, dt));
        let next: Vec<Complex64> = (0..w.len()).map(|i| w[i] + (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (dt / 6.0)).collect();
        self.check_finite(&next, self.t + dt)?;
        self.omega_hat = next;
        self.t += dt;
        self.last_speed = speed;
        Ok(())
    }

    /// `k` Picard sweeps of semi-Lagrangian transport with velocity frozen
    /// from the previous iterate (averaged with the start-of-step velocity).
    pub fn step_split(&mut self, dt: f64, inner: usize) -> Result<()> {
        if inner == 0 {
            return Err(Error::invalid("split-iterate stepper needs at least one inner iteration"));
        }
        let n = self.grid.n();
        let omega_n = inverse_real(n, &self.omega_hat);
        let (a, b) = self.bs.velocity_coeffs(&self.omega_hat);
        let (un1, un2) = inverse_pair(n, &a, &b);
        let speed = (0..self.grid.len()).fold(0.0f64, |acc, i| acc.max(un1[i].hypot(un2[i])));
        let (mut up1, mut up2) = (un1.clone(), un2.clone());
        let mut w_hat = self.omega_hat.clone();
        let base = Bicubic::new(&self.grid, &omega_n);
        for _ in 0..inner {
            let s1: Vec<f64> = un1.iter().zip(&up1).map(|(a, b)| 0.5 * (a + b)).collect();
            let s2: Vec<f64> = un2.iter().zip(&up2).map(|(a, b)| 0.5 * (a + b)).collect();
            let (i1, i2) = (Bicubic::new(&self.grid, &s1), Bicubic::new(&self.grid, &s2));
            let moved: Vec<f64> = (0..self.grid.len())
                .map(|idx| {
                    let (mx, my) = (-0.5 * dt * s1[idx], -0.5 * dt * s2[idx]);
                    base.eval_from(idx, -dt * i1.eval_from(idx, mx, my), -dt * i2.eval_from(idx, mx, my))
                })
                .collect();
            // update as an increment so a zero displacement is exact
            let inc: Vec<f64> = moved.iter().zip(&omega_n).map(|(a, b)| a - b).collect();
            let inc_hat = forward(n, &inc);
            w_hat = (0..self.grid.len()).map(|i| self.omega_hat[i] + inc_hat[i] * self.keep[i]).collect();
            w_hat[0] = self.omega_hat[0];
            let (a, b) = self.bs.velocity_coeffs(&w_hat);
            let (v1, v2) = inverse_pair(n, &a, &b);
            up1 = v1;
            up2 = v2;
        }
        self.check_finite(&w_hat, self.t + dt)?;
        self.omega_hat = w_hat;
        self.t += dt;
        self.last_speed = speed;
        Ok(())
    }

    pub fn step(&mut self, stepper: Stepper, dt: f64) -> Result<()> {
        match stepper {
            Stepper::Rk4 => self.step_rk4(dt),
            Stepper::SplitIterate { inner } => self.step_split(dt, inner),
        }
    }

    pub fn cfl_dt(&self, safety: f64) -> f64 {
        safety * self.grid.spacing() / self.last_speed.max(1e-300)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunOutput {
    pub series: DiagnosticSeries,
    pub fit: Option<FitResult>,
    pub fit_error: Option<String>,
    #[serde(skip)]
    pub snapshots: Vec<(f64, SpectralField)>,
    #[serde(skip)]
    pub final_omega: SpectralField,
}

fn record(solver: &EulerSolver, cfg: &SolverConfig, part: &Partition, integral: f64) -> Result<DiagnosticRecord> {
    let omega = solver.omega();
    let d = lp::decompose(&omega, part)?;
    let mut cs_proxy = Vec::with_capacity(cfg.s_list.len());
    for s in &cfg.s_list {
        cs_proxy.push(lp::besov_norms(&d, *s)?.proxy);
    }
    let modulus = if cfg.track_modulus {
        Some(lp::sup_block_gradient(&solver.velocity(), part, &cfg.multiplier)?.into_iter().map(|r| r.normalized).collect())
    } else {
        None
    };
    Ok(DiagnosticRecord {
        t: solver.time(),
        l2: omega.l2_norm(),
        linf: omega.linf_norm(),
        mean: omega.mean(),
        f: cs_proxy[0].ln(),
        cs_proxy,
        grad_u_inf: solver.grad_u_sup(),
        grad_u_integral: integral,
        modulus,
    })
}

/// Advance to `t_end`, recording diagnostics every `cadence`, then fit the
/// growth constant of `f(t)` against the `Γ(r) = m(r)(1 + Log r)` envelope.
pub fn run(cfg: &SolverConfig, omega0: &SpectralField) -> Result<RunOutput> {
    cfg.validate()?;
    if omega0.grid() != &cfg.grid {
        return Err(Error::GridMismatch("initial vorticity and configured grid differ".into()));
    }
    let part = lp::build_partition(cfg.grid, Profile::default())?;
    let mut solver = EulerSolver::new(omega0, &cfg.multiplier)?;
    let mut series = DiagnosticSeries { s_list: cfg.s_list.clone(), records: Vec::new(), blow_up: None, steps: 0 };
    let mut snapshots = Vec::new();
    let mut integral = 0.0;
    let mut grad_prev = solver.grad_u_sup();
    series.records.push(record(&solver, cfg, &part, integral)?);
    if cfg.snapshot_every > 0 {
        snapshots.push((0.0, solver.omega()));
    }
    let records = (cfg.t_end / cfg.cadence - 1e-9).ceil().max(1.0) as usize;
    'outer: for k in 1..=records {
        let target = if k == records { cfg.t_end } else { k as f64 * cfg.cadence };
        while solver.time() < target - 1e-12 * target.max(1.0) {
            let mut dt = match cfg.dt {
                DtPolicy::Fixed { dt } => dt,
                DtPolicy::Cfl { safety, dt_max } => solver.cfl_dt(safety).min(dt_max),
            };
            if dt < 1e-12 * cfg.t_end {
                series.blow_up = Some(BlowUp { t: solver.time(), reason: format!("CFL step collapsed to {dt:e}") });
                break 'outer;
            }
            let remaining = target - solver.time();
            if dt >= remaining * (1.0 - 1e-9) {
                dt = remaining;
            } else if dt > 0.5 * remaining {
                // two even steps instead of one long and one sliver
                dt = 0.5 * remaining;
            }
            let backup = solver.clone();
            if let Err(e) = solver.step(cfg.stepper, dt) {
                solver = backup;
                series.blow_up = Some(BlowUp { t: solver.time(), reason: e.to_string() });
                break 'outer;
            }
            series.steps += 1;
            let g = solver.grad_u_sup();
            integral += 0.5 * dt * (g + grad_prev);
            grad_prev = g;
        }
        let rec = record(&solver, cfg, &part, integral)?;
        series.records.push(rec);
        if cfg.snapshot_every > 0 && k % cfg.snapshot_every == 0 {
            snapshots.push((solver.time(), solver.omega()));
        }
    }

    let (fit, fit_error) = fit_growth(cfg, &series);
    Ok(RunOutput { series, fit, fit_error, snapshots, final_omega: solver.omega() })
}

fn fit_growth(cfg: &SolverConfig, series: &DiagnosticSeries) -> (Option<FitResult>, Option<String>) {
    let f = series.f_series();
    let t = series.times();
    let f0 = f[0];
    if !(f0 >= 1.0) {
        return (None, Some(format!("f(0) = {f0:.4} is below 1, outside the envelope's domain")));
    }
    let result = OsgoodEnvelope::with_defaults(GrowthFunction::Theta(cfg.multiplier.clone()))
        .and_then(|env| osgood::fit_constant(&env, EnvelopeForm::Linear, f0, &t, &f));
    match result {
        Ok(fit) => (Some(fit), None),
        Err(e) => (None, Some(e.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial;

    #[test]
    fn cosine_mode_is_stationary() {
        let g = Grid::periodic(32).unwrap();
        let w0 = initial::cosine_mode(g, 1.0, (1, 0));
        for m in [Multiplier::classical(), Multiplier::iterated_log(&[1.0]).unwrap()] {
            let mut s = EulerSolver::new(&w0, &m).unwrap();
            s.step_rk4(0.1).unwrap();
            assert!(s.omega().sub(&w0).unwrap().linf_norm() < 1e-12);
            let mut s = EulerSolver::new(&w0, &m).unwrap();
            s.step_split(0.1, 3).unwrap();
            assert!(s.omega().sub(&w0).unwrap().linf_norm() < 1e-12);
        }
    }

    #[test]
    fn zero_vorticity_is_fixed() {
        let g = Grid::periodic(16).unwrap();
        let mut s = EulerSolver::new(&SpectralField::zeros(g), &Multiplier::classical()).unwrap();
        s.step_split(0.3, 1).unwrap();
        assert_eq!(s.omega().linf_norm(), 0.0);
    }

    #[test]
    fn mean_is_untouched() {
        let g = Grid::periodic(32).unwrap();
        let w0 = initial::gaussian(g, (3.0, 3.0), 2.0, 0.6).add(&SpectralField::from_fn(g, |_, _| 0.25)).unwrap();
        let mut s = EulerSolver::new(&w0, &Multiplier::classical()).unwrap();
        let m0 = s.omega_hat[0];
        for _ in 0..5 {
            s.step_rk4(0.05).unwrap();
        }
        s.step_split(0.05, 2).unwrap();
        assert_eq!(s.omega_hat[0], m0);
    }

    #[test]
    fn config_validation() {
        let g = Grid::periodic(16).unwrap();
        let mut c = SolverConfig::new(g, Multiplier::classical(), 1.0);
        assert!(c.validate().is_ok());
        c.s_list = vec![1.5];
        assert!(c.validate().is_err());
        c.s_list = vec![0.5];
        c.dt = DtPolicy::Cfl { safety: 1.5, dt_max: 0.1 };
        assert!(c.validate().is_err());
        c.dt = DtPolicy::Fixed { dt: 0.01 };
        c.stepper = Stepper::SplitIterate { inner: 0 };
        assert!(c.validate().is_err());
    }
}
