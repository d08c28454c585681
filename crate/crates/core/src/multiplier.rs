//! Radial Fourier symbols `m(|ξ|)` and the structural checks the growth
//! theory relies on: monotonicity, doubling, sub-multiplicativity, the
//! logarithmic growth cap, and the Osgood divergence condition
//! `∫₂^∞ dt / (t Log t m(t)) = ∞`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;

/// Default frequency below which every symbol is frozen.
pub const DEFAULT_CLAMP_FLOOR: f64 = 2.0;

/// How a tabulated symbol is interpolated between nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TableInterp {
    /// `m` linear in `r`.
    Linear,
    /// `m` linear in `ln r`.
    LogLinear,
    /// `ln m` linear in `ln r`.
    LogLog,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MultiplierKind {
    Constant { value: f64 },
    /// `Π_i L_i(r)^{γ_i}` with `L_0 = Log(r²+1)` and `L_i = Log(1 + L_{i-1})`.
    IteratedLog { exponents: Vec<f64> },
    Table { r: Vec<f64>, m: Vec<f64>, interp: TableInterp },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Multiplier {
    pub kind: MultiplierKind,
    pub clamp_floor: f64,
}

impl Multiplier {
    pub fn constant(value: f64) -> Result<Self> {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::invalid(format!("constant multiplier must be positive, got {value}")));
        }
        Ok(Multiplier { kind: MultiplierKind::Constant { value }, clamp_floor: DEFAULT_CLAMP_FLOOR })
    }

    /// The classical Biot–Savart law, `m ≡ 1`.
    pub fn classical() -> Self {
        Multiplier { kind: MultiplierKind::Constant { value: 1.0 }, clamp_floor: DEFAULT_CLAMP_FLOOR }
    }

    pub fn iterated_log(exponents: &[f64]) -> Result<Self> {
        if exponents.is_empty() {
            return Err(Error::invalid("iterated-log multiplier needs at least one exponent"));
        }
        if let Some(g) = exponents.iter().find(|g| !(g.is_finite() && **g >= 0.0)) {
            return Err(Error::invalid(format!("iterated-log exponents must be finite and >= 0, got {g}")));
        }
        Ok(Multiplier {
            kind: MultiplierKind::IteratedLog { exponents: exponents.to_vec() },
            clamp_floor: DEFAULT_CLAMP_FLOOR,
        })
    }

    /// Tabulated symbol. Nodes must be strictly increasing and positive; the
    /// values are validated for monotonicity by [`check_hypotheses`].
    pub fn table(r: Vec<f64>, m: Vec<f64>, interp: TableInterp) -> Result<Self> {
        if r.len() < 2 || r.len() != m.len() {
            return Err(Error::invalid("table needs at least two (r, m) pairs of equal length"));
        }
        if r.windows(2).any(|w| !(w[1] > w[0])) || r[0] <= 0.0 {
            return Err(Error::invalid("table radii must be positive and strictly increasing"));
        }
        if m.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::invalid("table values must be finite and positive"));
        }
        let clamp_floor = DEFAULT_CLAMP_FLOOR.max(r[0]);
        Ok(Multiplier { kind: MultiplierKind::Table { r, m, interp }, clamp_floor })
    }

    pub fn with_clamp_floor(mut self, floor: f64) -> Result<Self> {
        if !(floor.is_finite() && floor > 0.0) {
            return Err(Error::invalid(format!("clamp floor must be positive, got {floor}")));
        }
        self.clamp_floor = floor;
        Ok(self)
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.kind, MultiplierKind::Constant { .. })
    }

    pub fn label(&self) -> String {
        match &self.kind {
            MultiplierKind::Constant { value } => format!("constant({value})"),
            MultiplierKind::IteratedLog { exponents } => format!("iterated-log({exponents:?})"),
            MultiplierKind::Table { r, interp, .. } => {
                format!("table({} nodes, {:?}, r in [{:e}, {:e}])", r.len(), interp, r[0], r[r.len() - 1])
            }
        }
    }

    /// Range of `ln r` on which the symbol is defined (after clamping).
    pub fn log_domain(&self) -> (f64, f64) {
        match &self.kind {
            MultiplierKind::Table { r, .. } => (r[0].ln(), r[r.len() - 1].ln()),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// `m(max(r, clampFloor))`.
    pub fn eval(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) || r.is_infinite() {
            return Err(Error::invalid(format!("frequency magnitude must be finite and >= 0, got {r}")));
        }
        match &self.kind {
            MultiplierKind::Constant { value } => Ok(*value),
            _ => self.eval_ln(r.max(self.clamp_floor).ln()),
        }
    }

    /// The symbol as a function of `ln r`, valid far beyond the range of
    /// representable `r`.
    pub fn eval_ln(&self, ln_r: f64) -> Result<f64> {
        if ln_r.is_nan() {
            return Err(Error::invalid("ln r is NaN"));
        }
        let lr = ln_r.max(self.clamp_floor.ln());
        match &self.kind {
            MultiplierKind::Constant { value } => Ok(*value),
            MultiplierKind::IteratedLog { exponents } => Ok(iterated_log_value(exponents, lr).0),
            MultiplierKind::Table { r, m, interp } => {
                let (seg, t) = table_segment(r, lr)?;
                Ok(match interp {
                    TableInterp::Linear => {
                        let x = lr.exp();
                        m[seg] + (m[seg + 1] - m[seg]) * (x - r[seg]) / (r[seg + 1] - r[seg])
                    }
                    TableInterp::LogLinear => m[seg] + (m[seg + 1] - m[seg]) * t,
                    TableInterp::LogLog => (m[seg].ln() + (m[seg + 1].ln() - m[seg].ln()) * t).exp(),
                })
            }
        }
    }

    /// The symbol at `r = exp(exp(v))`, finite for any finite `v`.
    pub fn eval_lnln(&self, v: f64) -> Result<f64> {
        if v < 700.0 {
            return self.eval_ln(v.exp());
        }
        match &self.kind {
            MultiplierKind::Constant { value } => Ok(*value),
            // L0 = 2e^v to within e^{-2e^v}; L1 = ln(1 + L0)
            MultiplierKind::IteratedLog { exponents } => {
                let mut l = std::f64::consts::LN_2 + v + (-v).exp().mul_add(0.5, 0.0).ln_1p();
                let mut value = 1.0;
                for (i, g) in exponents.iter().enumerate() {
                    if i > 0 {
                        l = l.ln_1p();
                    }
                    if *g != 0.0 {
                        value *= l.powf(*g);
                    }
                }
                Ok(value)
            }
            MultiplierKind::Table { r, .. } => Err(Error::TableRange { r: f64::INFINITY, lo: r[0], hi: r[r.len() - 1] }),
        }
    }

    /// `dm/d(ln r)`, zero below the clamp floor.
    pub fn log_derivative(&self, r: f64) -> Result<f64> {
        if r < self.clamp_floor {
            return Ok(0.0);
        }
        let lr = r.ln();
        match &self.kind {
            MultiplierKind::Constant { .. } => Ok(0.0),
            MultiplierKind::IteratedLog { exponents } => Ok(iterated_log_value(exponents, lr).1),
            MultiplierKind::Table { r: nodes, m, interp } => {
                let (seg, _) = table_segment(nodes, lr)?;
                let dlr = nodes[seg + 1].ln() - nodes[seg].ln();
                Ok(match interp {
                    TableInterp::Linear => (m[seg + 1] - m[seg]) / (nodes[seg + 1] - nodes[seg]) * r,
                    TableInterp::LogLinear => (m[seg + 1] - m[seg]) / dlr,
                    TableInterp::LogLog => self.eval_ln(lr)? * (m[seg + 1].ln() - m[seg].ln()) / dlr,
                })
            }
        }
    }
}

/// Value and log-derivative of the iterated-log symbol at `ln r`.
fn iterated_log_value(exponents: &[f64], lr: f64) -> (f64, f64) {
    // L0 = ln(r² + 1), dL0/dln r = 2r²/(r²+1)
    let (mut l, mut dl) = if lr > 20.0 {
        (2.0 * lr + (-2.0 * lr).exp().ln_1p(), 2.0 / (1.0 + (-2.0 * lr).exp()))
    } else {
        let r2 = (2.0 * lr).exp();
        (r2.ln_1p(), 2.0 * r2 / (1.0 + r2))
    };
    let mut value = 1.0;
    let mut dlog = 0.0;
    for g in exponents {
        dl /= 1.0 + l;
        l = l.ln_1p();
        if *g != 0.0 {
            value *= l.powf(*g);
            dlog += g * dl / l;
        }
    }
    (value, value * dlog)
}

fn table_segment(r: &[f64], lr: f64) -> Result<(usize, f64)> {
    let lo = r[0].ln();
    let hi = r[r.len() - 1].ln();
    // small slack for round-trip through ln/exp
    let tol = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
    if lr < lo - tol || lr > hi + tol {
        return Err(Error::TableRange { r: lr.exp(), lo: r[0], hi: r[r.len() - 1] });
    }
    let lr = lr.clamp(lo, hi);
    let seg = match r.iter().position(|x| x.ln() > lr) {
        Some(0) => 0,
        Some(i) => i - 1,
        None => r.len() - 2,
    };
    let a = r[seg].ln();
    let b = r[seg + 1].ln();
    Ok((seg, (lr - a) / (b - a)))
}

/// Log-spaced grid on `[lo, hi]` with `per_decade` points per decade.
pub fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && per_decade > 0);
    let decades = (hi / lo).log10();
    let n = (decades * per_decade as f64).ceil() as usize;
    (0..=n).map(|i| lo * 10f64.powf(decades * i as f64 / n as f64)).collect()
}

/// Default sampling density for hypothesis grids.
pub const POINTS_PER_DECADE: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OsgoodVerdict {
    Diverges,
    Converges,
    Inconclusive,
}

/// Tail-integral evidence behind an Osgood verdict.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OsgoodEvidence {
    pub verdict: OsgoodVerdict,
    /// `ln T` for each upper limit actually integrated.
    pub log_upper: Vec<f64>,
    /// `I(T) = ∫₂^T dt / (t Log t m(t))`.
    pub tail_integrals: Vec<f64>,
    /// `I(T)` plus a power-law estimate of the remaining tail; `None` where the
    /// integrand decays too slowly for a finite estimate.
    pub extrapolated_limits: Vec<Option<f64>>,
    /// Growth of `I` per e-fold of `Log Log Log T` between consecutive limits.
    pub growth_rates: Vec<f64>,
    pub diagnostic: Option<String>,
}

/// Cauchy tolerance on the extrapolated limits for a `Converges` verdict.
pub const CONVERGENCE_TOLERANCE: f64 = 1e-6;
/// Minimum growth of `I` per e-fold of `Log Log Log T` for a `Diverges` verdict.
pub const DIVERGENCE_GROWTH_FLOOR: f64 = 0.2;

/// Default upper limits: `T = 10^(10^(k/2))`, `k = 0..=14`, given as `ln T`.
pub fn default_log_upper_limits() -> Vec<f64> {
    (0..=14).map(|k| std::f64::consts::LN_10 * 10f64.powf(k as f64 / 2.0)).collect()
}

/// Decide whether `∫₂^∞ dt/(t Log t m(t))` diverges.
///
/// Upper limits are passed as `ln T` so that limits far beyond `f64::MAX` can
/// be probed. The integral is evaluated in the variable `v = ln ln t`, where it
/// reads `∫ dv / m(e^{e^v})`.
pub fn check_osgood_condition(m: &Multiplier, log_upper: &[f64]) -> Result<OsgoodEvidence> {
    if log_upper.is_empty() || log_upper.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("upper limits must be non-empty and strictly increasing"));
    }
    if log_upper[0] < std::f64::consts::LN_10 - 1e-12 {
        return Err(Error::invalid("first upper limit must be at least 10"));
    }
    let (_, ln_max) = m.log_domain();
    let limits: Vec<f64> = log_upper.iter().copied().filter(|l| *l <= ln_max).collect();
    let mut ev = OsgoodEvidence {
        verdict: OsgoodVerdict::Inconclusive,
        log_upper: limits.clone(),
        tail_integrals: Vec::new(),
        extrapolated_limits: Vec::new(),
        growth_rates: Vec::new(),
        diagnostic: None,
    };
    if limits.len() < 3 {
        ev.diagnostic = Some(format!("only {} upper limits inside the symbol's domain", limits.len()));
        return Ok(ev);
    }

    let integrand = |v: f64| -> f64 {
        match m.eval_ln(v.exp()) {
            Ok(mv) => 1.0 / mv,
            Err(_) => f64::NAN,
        }
    };
    let mut v_prev = std::f64::consts::LN_2.ln();
    let mut acc = 0.0;
    for lt in &limits {
        let v = lt.ln();
        match quadrature::integrate(integrand, v_prev, v, 1e-13, 1e-13) {
            Ok(piece) => acc += piece,
            Err(e) => {
                ev.diagnostic = Some(format!("quadrature failed below ln T = {lt}: {e}"));
                ev.tail_integrals.clear();
                return Ok(ev);
            }
        }
        ev.tail_integrals.push(acc);
        v_prev = v;
    }

    // Power-law tail in u = ln t: h(u) = 1/(u m(e^u)) ~ c u^{-p}.
    let h = |u: f64| -> Option<f64> { m.eval_ln(u).ok().map(|mv| 1.0 / (u * mv)) };
    const DELTA: f64 = 0.05;
    for (lt, i_t) in limits.iter().zip(&ev.tail_integrals) {
        let est = (|| {
            let h1 = h(*lt)?;
            let h0 = h(lt * (-DELTA).exp())?;
            let p = -(h1.ln() - h0.ln()) / DELTA;
            (p > 1.0 + 1e-9).then(|| i_t + h1 * lt / (p - 1.0))
        })();
        ev.extrapolated_limits.push(est);
    }
    for k in 1..limits.len() {
        let dlnv = limits[k].ln().ln() - limits[k - 1].ln().ln();
        ev.growth_rates.push((ev.tail_integrals[k] - ev.tail_integrals[k - 1]) / dlnv);
    }

    let n = limits.len();
    let cauchy = match (ev.extrapolated_limits[n - 2], ev.extrapolated_limits[n - 1]) {
        (Some(a), Some(b)) => (a - b).abs() <= CONVERGENCE_TOLERANCE,
        _ => false,
    };
    let last_growth = *ev.growth_rates.last().expect("at least two limits");
    ev.verdict = if cauchy {
        OsgoodVerdict::Converges
    } else if last_growth >= DIVERGENCE_GROWTH_FLOOR {
        OsgoodVerdict::Diverges
    } else {
        ev.diagnostic = Some(format!(
            "tail neither Cauchy (tol {CONVERGENCE_TOLERANCE:e}) nor growing (rate {last_growth:.3e} < {DIVERGENCE_GROWTH_FLOOR})"
        ));
        OsgoodVerdict::Inconclusive
    };
    Ok(ev)
}

/// Empirical structural constants of a symbol over a sample grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub multiplier: String,
    pub clamp_floor: f64,
    pub grid_points: usize,
    pub grid_range: (f64, f64),
    /// Least `C` with `m(2t) ≤ C m(t)` on the grid.
    pub doubling_constant: f64,
    /// Least `C` with `m(t₁t₂) ≤ C (m(t₁) + m(t₂))` over sampled pairs.
    pub sub_mult_constant: f64,
    /// Least `C` with `m(r) ≤ C Log(r + 2)` on the grid.
    pub log_growth_constant: f64,
    /// Largest decrease `m(r₁) - m(r₂)` for `r₂ > r₁` on the grid (≤ 1e-12 when monotone).
    pub max_decrease: f64,
    pub osgood: OsgoodEvidence,
}

/// Sample the structural hypotheses of `m` on a log-spaced grid.
pub fn check_hypotheses(m: &Multiplier, grid: &[f64]) -> Result<HypothesisReport> {
    if grid.len() < 100 {
        return Err(Error::invalid(format!("hypothesis grid needs >= 100 points, got {}", grid.len())));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) || grid[0] <= 0.0 {
        return Err(Error::invalid("hypothesis grid must be positive and increasing"));
    }
    if (grid[grid.len() - 1] / grid[0]).log10() < 8.0 - 1e-9 {
        return Err(Error::invalid("hypothesis grid must span at least 8 decades"));
    }
    if let MultiplierKind::Table { m: vals, .. } = &m.kind {
        if let Some(i) = vals.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::NonMonotoneTable { index: i + 1, prev: vals[i], next: vals[i + 1] });
        }
    }
    let (ln_lo, ln_hi) = m.log_domain();
    let inside = |r: f64| {
        let l = r.max(m.clamp_floor).ln();
        l >= ln_lo - 1e-12 && l <= ln_hi + 1e-12
    };
    let pts: Vec<f64> = grid.iter().copied().filter(|r| inside(*r)).collect();
    if pts.len() < 2 {
        return Err(Error::invalid("hypothesis grid does not overlap the table range"));
    }
    let vals: Vec<f64> = pts.iter().map(|r| m.eval(*r)).collect::<Result<_>>()?;

    let mut doubling: f64 = 0.0;
    let mut growth: f64 = 0.0;
    for (r, v) in pts.iter().zip(&vals) {
        if inside(2.0 * r) {
            doubling = doubling.max(m.eval(2.0 * r)? / v);
        }
        growth = growth.max(v / (r + 2.0).ln());
    }
    let mut max_decrease: f64 = 0.0;
    let mut running_max = f64::NEG_INFINITY;
    for v in &vals {
        running_max = running_max.max(*v);
        max_decrease = max_decrease.max(running_max - v);
    }
    let stride = (pts.len() / 160).max(1);
    let sub: Vec<(f64, f64)> = pts.iter().zip(&vals).step_by(stride).map(|(r, v)| (*r, *v)).collect();
    let mut sub_mult: f64 = 0.0;
    for (r1, v1) in &sub {
        for (r2, v2) in &sub {
            let lp = r1.ln() + r2.ln();
            if lp.max(m.clamp_floor.ln()) <= ln_hi + 1e-12 && lp.max(m.clamp_floor.ln()) >= ln_lo - 1e-12 {
                sub_mult = sub_mult.max(m.eval_ln(lp)? / (v1 + v2));
            }
        }
    }
    let osgood = check_osgood_condition(m, &default_log_upper_limits())?;
    Ok(HypothesisReport {
        multiplier: m.label(),
        clamp_floor: m.clamp_floor,
        grid_points: pts.len(),
        grid_range: (pts[0], pts[pts.len() - 1]),
        doubling_constant: doubling,
        sub_mult_constant: sub_mult,
        log_growth_constant: growth,
        max_decrease,
        osgood,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn loglog() -> Multiplier {
        Multiplier::iterated_log(&[1.0]).unwrap()
    }

    #[test]
    fn constant_and_zero_exponent_are_one() {
        assert_eq!(Multiplier::classical().eval(1000.0).unwrap(), 1.0);
        let m = Multiplier::iterated_log(&[0.0]).unwrap();
        for r in [0.0, 1.0, 3.5, 1e9] {
            assert_eq!(m.eval(r).unwrap(), 1.0);
        }
    }

    // Frozen from an independent 50-digit evaluation of ln(1 + ln(r² + 1))
    // (mpmath, mp.dps = 50).
    #[test]
    fn iterated_log_matches_high_precision_values() {
        let cases = [
            (2.0, 0.959_134_838_920_823_922_5),
            (10.0, 1.725_463_051_333_403_65),
            (1e3, 2.695_674_710_160_324_243),
            (1e6, 3.354_490_784_416_361_448),
            (1e12, 4.030_020_102_293_697_934),
        ];
        let m = loglog();
        for (r, want) in cases {
            let got = m.eval(r).unwrap();
            assert!((got - want).abs() < 1e-12, "r={r}: {got} vs {want}");
        }
    }

    #[test]
    fn lnln_evaluation_is_continuous() {
        let m = Multiplier::iterated_log(&[1.0, 0.5]).unwrap();
        let a = m.eval_lnln(700.0 - 1e-12).unwrap();
        let b = m.eval_lnln(700.0).unwrap();
        assert!((a - b).abs() < 1e-12 * a, "{a} {b}");
        assert!(m.eval_lnln(1e6).unwrap().is_finite());
    }

    #[test]
    fn clamp_freezes_low_frequencies() {
        let m = loglog();
        let floor = m.eval(2.0).unwrap();
        assert_eq!(m.eval(0.0).unwrap(), floor);
        assert_eq!(m.eval(1.0).unwrap(), floor);
        assert!(m.eval(0.0).unwrap() > 0.0);
    }

    #[test]
    fn table_out_of_range_names_range() {
        let m = Multiplier::table(vec![2.0, 10.0], vec![1.0, 2.0], TableInterp::Linear).unwrap();
        let e = m.eval(20.0).unwrap_err();
        assert!(matches!(e, Error::TableRange { .. }));
        assert!(e.to_string().contains("outside table range"));
    }

    #[test]
    fn log_derivative_matches_finite_difference() {
        let m = Multiplier::iterated_log(&[1.0, 0.5]).unwrap();
        for r in [3.0f64, 50.0, 1e5, 1e20] {
            let h = 1e-5;
            let fd = (m.eval_ln(r.ln() + h).unwrap() - m.eval_ln(r.ln() - h).unwrap()) / (2.0 * h);
            let d = m.log_derivative(r).unwrap();
            assert!((fd - d).abs() < 1e-8 * (1.0 + d.abs()), "r={r}: {fd} vs {d}");
        }
    }

    #[test]
    fn doubling_constants() {
        let grid = log_grid(1.0, 1e12, POINTS_PER_DECADE);
        let c = check_hypotheses(&Multiplier::classical(), &grid).unwrap();
        assert_eq!(c.doubling_constant, 1.0);

        let ll = check_hypotheses(&loglog(), &grid).unwrap();
        // brute-force maximum of m(2t)/m(t) over the same grid
        let m = loglog();
        let brute = grid
            .iter()
            .map(|t| m.eval(2.0 * t).unwrap() / m.eval(*t).unwrap())
            .fold(0.0f64, f64::max);
        assert_eq!(ll.doubling_constant, brute);
        assert!(ll.doubling_constant.is_finite() && ll.doubling_constant <= 2.0);

        let r: Vec<f64> = log_grid(0.5, 1e13, 4);
        let linear = Multiplier::table(r.clone(), r, TableInterp::LogLog).unwrap();
        let lin = check_hypotheses(&linear, &grid).unwrap();
        assert!((lin.doubling_constant - 2.0).abs() < 1e-9, "{}", lin.doubling_constant);
        assert!(ll.doubling_constant <= lin.doubling_constant);
    }

    #[test]
    fn non_monotone_table_rejected() {
        let m = Multiplier::table(vec![1.0, 10.0, 1e10], vec![1.0, 3.0, 2.0], TableInterp::LogLinear).unwrap();
        let grid = log_grid(1.0, 1e10, POINTS_PER_DECADE);
        assert!(matches!(check_hypotheses(&m, &grid), Err(Error::NonMonotoneTable { index: 2, .. })));
    }

    #[test]
    fn hypothesis_grid_preconditions() {
        let short = log_grid(1.0, 1e4, 128);
        assert!(check_hypotheses(&loglog(), &short).is_err());
        let sparse = log_grid(1.0, 1e12, 2);
        assert!(check_hypotheses(&loglog(), &sparse).is_err());
    }

    fn log_table() -> Multiplier {
        let r: Vec<f64> = std::iter::once(2.0).chain((1..=30).map(|k| 10f64.powi(10 * k))).collect();
        let m = r.iter().map(|x| x.ln()).collect();
        Multiplier::table(r, m, TableInterp::LogLinear).unwrap()
    }

    #[test]
    fn osgood_closed_forms() {
        let limits = default_log_upper_limits();
        let one = check_osgood_condition(&Multiplier::classical(), &limits).unwrap();
        assert_eq!(one.verdict, OsgoodVerdict::Diverges);
        for (lt, i) in one.log_upper.iter().zip(&one.tail_integrals) {
            let exact = lt.ln() - std::f64::consts::LN_2.ln();
            assert!((i - exact).abs() < 1e-8, "{i} vs {exact}");
        }

        let log = log_table();
        let ev = check_osgood_condition(&log, &limits).unwrap();
        assert_eq!(ev.verdict, OsgoodVerdict::Converges);
        for (lt, i) in ev.log_upper.iter().zip(&ev.tail_integrals) {
            let exact = 1.0 / std::f64::consts::LN_2 - 1.0 / lt;
            assert!((i - exact).abs() < 1e-8, "{i} vs {exact}");
        }
    }

    #[test]
    fn iterated_logs_diverge() {
        let limits = default_log_upper_limits();
        for exps in [vec![1.0], vec![0.5], vec![1.0, 1.0], vec![0.3, 0.7, 1.0]] {
            let m = Multiplier::iterated_log(&exps).unwrap();
            let ev = check_osgood_condition(&m, &limits).unwrap();
            assert_eq!(ev.verdict, OsgoodVerdict::Diverges, "{exps:?}: {ev:?}");
            assert!(ev.tail_integrals.windows(2).all(|w| w[1] > w[0]));
        }
    }

    #[test]
    fn stronger_symbol_is_inconclusive_not_diverging() {
        // m(t) = Log(t)^{1/2}: convergent-looking but too slow for the Cauchy test
        let r: Vec<f64> = std::iter::once(2.0).chain((1..=30).map(|k| 10f64.powi(10 * k))).collect();
        let m: Vec<f64> = r.iter().map(|x| x.ln().sqrt()).collect();
        let sym = Multiplier::table(r, m, TableInterp::LogLog).unwrap();
        let ev = check_osgood_condition(&sym, &default_log_upper_limits()).unwrap();
        assert_ne!(ev.verdict, OsgoodVerdict::Converges);
    }

    #[test]
    fn osgood_preconditions() {
        let m = Multiplier::classical();
        assert!(check_osgood_condition(&m, &[1.0, 2.0, 3.0]).is_err());
        assert!(check_osgood_condition(&m, &[5.0, 4.0]).is_err());
    }

    #[test]
    fn monotone_on_log_grid() {
        for m in [Multiplier::classical(), loglog(), Multiplier::iterated_log(&[1.0, 1.0, 1.0]).unwrap(), log_table()] {
            let grid = log_grid(m.clamp_floor, 1e29, 64);
            let vals: Vec<f64> = grid.iter().map(|r| m.eval(*r).unwrap()).collect();
            assert!(vals.windows(2).all(|w| w[1] >= w[0] - 1e-12), "{}", m.label());
            assert!(vals.iter().all(|v| *v > 0.0));
        }
    }
}
