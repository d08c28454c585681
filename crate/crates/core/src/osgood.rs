//! Osgood-lemma envelopes `H⁻¹(H(f₀) + C·t·f₀)` and `H⁻¹(H(f₀) + C(t² + t))`
//! with `H(r) = ∫_a^r dr′/γ(r′)`.
//!
//! Everything is tabulated in `ρ = ln r`, where `dH/dρ = r/γ(r)`, so that
//! double- and triple-exponential envelopes stay representable.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::multiplier::Multiplier;
use crate::quadrature::gauss_legendre;

/// Growth function `γ` in the Osgood integral.
#[derive(Clone)]
pub enum GrowthFunction {
    /// `γ(r) = r`.
    Linear,
    /// `γ(r) = r Γ(r)` with `Γ(r) = m(r)(1 + Log r)`.
    Theta(Multiplier),
    /// `γ̃(r) = m(e^r)(1 + r)`.
    Tilde(Multiplier),
    /// Arbitrary positive `γ(r)`.
    Scalar(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for GrowthFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl GrowthFunction {
    pub fn label(&self) -> String {
        match self {
            GrowthFunction::Linear => "r".into(),
            GrowthFunction::Theta(m) => format!("r*m(r)*(1+Log r), m = {}", m.label()),
            GrowthFunction::Tilde(m) => format!("m(e^r)*(1+r), m = {}", m.label()),
            GrowthFunction::Scalar(_) => "custom".into(),
        }
    }

    /// `dH/dρ = r/γ(r)` at `ρ = ln r`.
    pub fn rate(&self, rho: f64) -> Result<f64> {
        let v = match self {
            GrowthFunction::Linear => 1.0,
            GrowthFunction::Theta(m) => 1.0 / (m.eval_ln(rho)? * (1.0 + rho.max(0.0))),
            GrowthFunction::Tilde(m) => 1.0 / (m.eval_lnln(rho)? * (1.0 + (-rho).exp())),
            GrowthFunction::Scalar(g) => {
                let r = rho.exp();
                r / g(r)
            }
        };
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::invalid(format!("growth function not positive at ln r = {rho} (r/γ = {v})")));
        }
        Ok(v)
    }

    /// `γ(r)` itself, for moderate `r`.
    pub fn gamma(&self, r: f64) -> Result<f64> {
        Ok(r / self.rate(r.ln())?)
    }
}

/// Node spacing in `ln(1 + ρ − ρ_a)`.
pub const NODE_STEP: f64 = 0.005;
/// Default upper end of the table in `ρ = ln r`.
pub const DEFAULT_RHO_MAX: f64 = 1e100;

/// `ln max(x, 1)`, the nonnegative logarithm used for ratios that may dip
/// below one.
pub fn log_plus(x: f64) -> f64 {
    if x > 1.0 {
        x.ln()
    } else {
        0.0
    }
}

#[derive(Debug, Clone)]
pub struct OsgoodEnvelope {
    gamma: GrowthFunction,
    lower: f64,
    rho: Vec<f64>,
    h: Vec<f64>,
    slope: Vec<f64>,
}

impl OsgoodEnvelope {
    /// Tabulate `H` from `r = lower` out to `ln r = rho_max`.
    pub fn new(gamma: GrowthFunction, lower: f64, rho_max: f64) -> Result<Self> {
        if !(lower.is_finite() && lower > 0.0) {
            return Err(Error::invalid(format!("lower limit must be positive, got {lower}")));
        }
        let rho_a = lower.ln();
        if !(rho_max.is_finite() && rho_max > rho_a + 1.0) {
            return Err(Error::invalid(format!("table end ln r = {rho_max} must exceed ln(lower) + 1")));
        }
        let s_max = (rho_max - rho_a).ln_1p();
        let count = (s_max / NODE_STEP).ceil() as usize;
        let (x, w) = gauss_legendre(8);
        let mut rho = Vec::with_capacity(count + 1);
        let mut h = Vec::with_capacity(count + 1);
        let mut slope = Vec::with_capacity(count + 1);
        rho.push(rho_a);
        h.push(0.0);
        slope.push(gamma.rate(rho_a)?);
        for i in 1..=count {
            let (s0, s1) = ((i - 1) as f64 * NODE_STEP, (i as f64 * NODE_STEP).min(s_max));
            let (c, half) = (0.5 * (s0 + s1), 0.5 * (s1 - s0));
            let mut piece = 0.0;
            for (xi, wi) in x.iter().zip(&w) {
                let s = c + half * xi;
                piece += wi * gamma.rate(rho_a + s.exp_m1())? * s.exp();
            }
            let r1 = if i == count { rho_max } else { rho_a + s1.exp_m1() };
            rho.push(r1);
            h.push(h[i - 1] + piece * half);
            slope.push(gamma.rate(r1)?);
        }
        Ok(OsgoodEnvelope { gamma, lower, rho, h, slope })
    }

    pub fn with_defaults(gamma: GrowthFunction) -> Result<Self> {
        Self::new(gamma, 1.0, DEFAULT_RHO_MAX)
    }

    pub fn gamma(&self) -> &GrowthFunction {
        &self.gamma
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn nodes(&self) -> usize {
        self.rho.len()
    }

    /// Largest tabulated `ln r`.
    pub fn rho_max(&self) -> f64 {
        *self.rho.last().expect("non-empty")
    }

    /// Largest tabulated value of `H`.
    pub fn h_max(&self) -> f64 {
        *self.h.last().expect("non-empty")
    }

    /// Tabulated `(ln r, H)` pairs.
    pub fn table(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.rho.iter().copied().zip(self.h.iter().copied())
    }

    fn hermite(&self, i: usize, rho: f64) -> (f64, f64) {
        let (x0, x1) = (self.rho[i], self.rho[i + 1]);
        let d = x1 - x0;
        let t = (rho - x0) / d;
        let (y0, y1) = (self.h[i], self.h[i + 1]);
        let (m0, m1) = (self.slope[i] * d, self.slope[i + 1] * d);
        let t2 = t * t;
        let t3 = t2 * t;
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * m0 + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * m1;
        let dv = (6.0 * t2 - 6.0 * t) * y0 + (3.0 * t2 - 4.0 * t + 1.0) * m0 + (-6.0 * t2 + 6.0 * t) * y1 + (3.0 * t2 - 2.0 * t) * m1;
        (v, dv / d)
    }

    fn segment_of_rho(&self, rho: f64) -> usize {
        match self.rho.partition_point(|x| *x <= rho) {
            0 => 0,
            k => (k - 1).min(self.rho.len() - 2),
        }
    }

    /// `H` as a function of `ln r`.
    pub fn h_ln(&self, rho: f64) -> Result<f64> {
        let lo = self.rho[0];
        if !(rho >= lo - 1e-12 * (1.0 + lo.abs())) {
            return Err(Error::invalid(format!("ln r = {rho} below the lower limit ln a = {lo}")));
        }
        if rho > self.rho_max() {
            return Err(Error::EnvelopeBlowUp { argument: rho, table_max: self.rho_max() });
        }
        let rho = rho.max(lo);
        Ok(self.hermite(self.segment_of_rho(rho), rho).0)
    }

    pub fn h(&self, r: f64) -> Result<f64> {
        self.h_ln(r.ln())
    }

    /// `ln H⁻¹(y)`.
    pub fn h_inv_ln(&self, y: f64) -> Result<f64> {
        if !(y >= -1e-14) {
            return Err(Error::invalid(format!("H⁻¹ argument {y} is negative")));
        }
        if y > self.h_max() {
            return Err(Error::EnvelopeBlowUp { argument: y, table_max: self.h_max() });
        }
        let i = match self.h.partition_point(|v| *v <= y) {
            0 => 0,
            k => (k - 1).min(self.h.len() - 2),
        };
        if y == self.h[i] {
            return Ok(self.rho[i]);
        }
        let (mut a, mut b) = (self.rho[i], self.rho[i + 1]);
        // Newton from the linear guess, safeguarded by the bracket
        let mut x = a + (b - a) * (y - self.h[i]) / (self.h[i + 1] - self.h[i]);
        for _ in 0..100 {
            let (v, dv) = self.hermite(i, x);
            let f = v - y;
            if f > 0.0 {
                b = x;
            } else {
                a = x;
            }
            let mut next = x - f / dv;
            if !(next > a && next < b) {
                next = 0.5 * (a + b);
            }
            if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
                return Ok(next);
            }
            x = next;
        }
        Ok(x)
    }

    /// `H⁻¹(y)`; infinite when the result exceeds the `f64` range.
    pub fn h_inv(&self, y: f64) -> Result<f64> {
        Ok(self.h_inv_ln(y)?.exp())
    }

    /// `ln` of the bound `H⁻¹(H(f₀) + C t f₀)` at each `t`.
    pub fn envelope_ln(&self, f0: f64, c: f64, t: &[f64]) -> Result<Vec<f64>> {
        self.check_f0(f0, c)?;
        let h0 = self.h(f0)?;
        t.iter().map(|&ti| if ti == 0.0 { Ok(f0.ln()) } else { self.h_inv_ln(h0 + c * ti * f0) }).collect()
    }

    /// The bound `H⁻¹(H(f₀) + C t f₀)` on `t`.
    pub fn envelope(&self, f0: f64, c: f64, t: &[f64]) -> Result<Vec<f64>> {
        let v = self.envelope_ln(f0, c, t)?;
        Ok(t.iter().zip(v).map(|(ti, x)| if *ti == 0.0 { f0 } else { x.exp() }).collect())
    }

    /// `ln` of the two-term bound `H⁻¹(H(f₀) + C(t² + t))`.
    pub fn two_term_ln(&self, f0: f64, c: f64, t: &[f64]) -> Result<Vec<f64>> {
        self.check_f0(f0, c)?;
        let h0 = self.h(f0)?;
        t.iter().map(|&ti| if ti == 0.0 { Ok(f0.ln()) } else { self.h_inv_ln(h0 + c * (ti * ti + ti)) }).collect()
    }

    pub fn two_term(&self, f0: f64, c: f64, t: &[f64]) -> Result<Vec<f64>> {
        let v = self.two_term_ln(f0, c, t)?;
        Ok(t.iter().zip(v).map(|(ti, x)| if *ti == 0.0 { f0 } else { x.exp() }).collect())
    }

    fn check_f0(&self, f0: f64, c: f64) -> Result<()> {
        if !(f0.is_finite() && f0 >= self.lower) {
            return Err(Error::invalid(format!("f0 = {f0} must be at least the lower limit {}", self.lower)));
        }
        if !(c.is_finite() && c >= 0.0) {
            return Err(Error::invalid(format!("envelope constant must be finite and >= 0, got {c}")));
        }
        Ok(())
    }
}

/// Which envelope family a constant is fitted against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EnvelopeForm {
    /// `H⁻¹(H(f₀) + C t f₀)`.
    Linear,
    /// `H⁻¹(H(f₀) + C(t² + t))`.
    TwoTerm,
}

pub const FIT_LOWER: f64 = 1e-6;
pub const FIT_UPPER: f64 = 1e6;

#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub c: f64,
    pub form: EnvelopeForm,
    pub f0: f64,
    /// The data are dominated already at the bottom of the bracket.
    pub at_bracket_bottom: bool,
    /// Smallest `envelope − measured` over the samples at the fitted `C`.
    pub min_margin: f64,
}

fn bound_ln(env: &OsgoodEnvelope, form: EnvelopeForm, f0: f64, c: f64, t: f64) -> Result<f64> {
    let h0 = env.h(f0)?;
    let arg = match form {
        EnvelopeForm::Linear => h0 + c * t * f0,
        EnvelopeForm::TwoTerm => h0 + c * (t * t + t),
    };
    match env.h_inv_ln(arg) {
        Ok(v) => Ok(v),
        // a bound past the table dominates anything finite
        Err(Error::EnvelopeBlowUp { .. }) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

fn dominates(env: &OsgoodEnvelope, form: EnvelopeForm, f0: f64, c: f64, t: &[f64], f: &[f64]) -> Result<bool> {
    for (ti, fi) in t.iter().zip(f) {
        if *ti <= 0.0 || *fi <= env.lower {
            continue;
        }
        let b = bound_ln(env, form, f0, c, *ti)?;
        if fi.ln() > b + 1e-12 * b.abs().max(1.0) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Least `C ∈ [1e-6, 1e6]` for which the envelope dominates `measured` at
/// every sample time, by bisection in `ln C`.
pub fn fit_constant(env: &OsgoodEnvelope, form: EnvelopeForm, f0: f64, t: &[f64], measured: &[f64]) -> Result<FitResult> {
    if t.len() != measured.len() || t.is_empty() {
        return Err(Error::invalid("time and data series must be non-empty and of equal length"));
    }
    if measured.iter().any(|v| !v.is_finite()) || t.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("measured series contains non-finite values"));
    }
    if t[0] == 0.0 && measured[0] > f0 * (1.0 + 1e-6) {
        return Err(Error::invalid(format!("measured(0) = {} exceeds f0 = {f0}", measured[0])));
    }
    env.check_f0(f0, 0.0)?;
    let margin = |c: f64| -> Result<f64> {
        let mut best = f64::INFINITY;
        for (ti, fi) in t.iter().zip(measured) {
            if *ti > 0.0 {
                best = best.min(bound_ln(env, form, f0, c, *ti)?.exp() - fi);
            }
        }
        Ok(best)
    };
    if dominates(env, form, f0, FIT_LOWER, t, measured)? {
        return Ok(FitResult { c: FIT_LOWER, form, f0, at_bracket_bottom: true, min_margin: margin(FIT_LOWER)? });
    }
    if !dominates(env, form, f0, FIT_UPPER, t, measured)? {
        return Err(Error::CannotDominate { lo: FIT_LOWER, hi: FIT_UPPER });
    }
    let (mut lo, mut hi) = (FIT_LOWER.ln(), FIT_UPPER.ln());
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if dominates(env, form, f0, mid.exp(), t, measured)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let c = hi.exp();
    Ok(FitResult { c, form, f0, at_bracket_bottom: false, min_margin: margin(c)? })
}

/// `max γ(x+y) / (γ(x) + γ(y))` over pairs from a log grid on `[lo, hi]`.
pub fn subadditivity_constant(gamma: &GrowthFunction, lo: f64, hi: f64, points: usize) -> Result<f64> {
    if !(lo > 0.0 && hi > lo && points >= 2) {
        return Err(Error::invalid("subadditivity sample needs 0 < lo < hi and at least two points"));
    }
    let step = (hi / lo).ln() / (points - 1) as f64;
    let xs: Vec<f64> = (0..points).map(|i| lo * (i as f64 * step).exp()).collect();
    let g: Vec<f64> = xs.iter().map(|x| gamma.gamma(*x)).collect::<Result<_>>()?;
    let mut best = 0.0f64;
    for i in 0..points {
        for j in i..points {
            best = best.max(gamma.gamma(xs[i] + xs[j])? / (g[i] + g[j]));
        }
    }
    Ok(best)
}

/// `t,bound` rows in `{:e}` format.
pub fn curve_csv(t: &[f64], bound: &[f64]) -> String {
    let mut out = String::from("t,bound\n");
    for (a, b) in t.iter().zip(bound) {
        out.push_str(&format!("{a:e},{b:e}\n"));
    }
    out
}
