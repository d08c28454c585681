//! Executes a planned scenario and writes its artifacts.

use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use super::{Expectations, Initial, Plan, Scenario};
use crate::euler::{self, SolverConfig};
use crate::initial::{cosine_mode, gaussian, laguerre_gaussian, vortex_pair};
use crate::lab::corpus::band_limited;
use crate::lab::inequality::{commutator_sweep, main_inequality_sweep, tangential_sweep, RatioReport};
use crate::lab::kernel::{compute_radial_kernel, KernelConfig};
use crate::multiplier::{check_hypotheses, log_grid, Multiplier};
use crate::osgood::{curve_csv, EnvelopeForm, GrowthFunction, OsgoodEnvelope};
use crate::patch::{self, PatchConfig};
use crate::spectral::io::write_snapshot;
use crate::spectral::Grid;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    /// Numerical blow-up or loss of patch regularity.
    BlowUp,
    /// The run finished but an `expect.*` threshold was missed.
    CheckFailed,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::BlowUp => 3,
            Status::CheckFailed => 4,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: Value,
    pub limit: Value,
    pub pass: bool,
}

fn at_most(name: &str, value: f64, limit: Option<f64>) -> Option<Check> {
    limit.map(|l| Check { name: name.into(), value: json!(value), limit: json!(l), pass: value <= l })
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub status: Status,
    pub report: Value,
    /// Files written, relative to the output directory.
    pub files: Vec<String>,
}

struct Sink<'a> {
    dir: &'a Path,
    files: Vec<String>,
}

impl Sink<'_> {
    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        fs::write(self.dir.join(name), contents)?;
        self.files.push(name.to_string());
        Ok(())
    }
}

#[derive(Default)]
struct ModeResult {
    results: Value,
    checks: Vec<Check>,
    blow_up: Option<String>,
}

/// Run `sc` on a pool of `threads` workers (0 picks the core count) and write
/// every artifact plus `report.json` under `out`.
pub fn execute(sc: &Scenario, out: &Path, threads: usize) -> Result<Outcome> {
    fs::create_dir_all(out)?;
    let mut sink = Sink { dir: out, files: Vec::new() };
    sink.write("resolved.toml", &sc.resolved.to_toml())?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| Error::invalid(e.to_string()))?;

    let start = Instant::now();
    let mode = pool.install(|| run_mode(sc, &mut sink));
    let mode = match mode {
        Ok(r) => r,
        Err(e @ (Error::BlowUp { .. } | Error::RegularityLost { .. })) => ModeResult { blow_up: Some(e.to_string()), ..Default::default() },
        Err(e) => return Err(e),
    };
    let hypotheses = match &sc.plan {
        Plan::Hypotheses { .. } => Value::Null,
        _ => pool.install(|| hypothesis_summary(&sc.multiplier)),
    };
    let wall = start.elapsed().as_secs_f64();

    let status = if mode.blow_up.is_some() {
        Status::BlowUp
    } else if mode.checks.iter().any(|c| !c.pass) {
        Status::CheckFailed
    } else {
        Status::Ok
    };
    let mut files = sink.files.clone();
    files.push("report.json".into());
    let report = json!({
        "name": sc.name,
        "mode": sc.mode,
        "seed": sc.seed,
        "multiplier": sc.multiplier.label(),
        "status": status,
        "blow_up": mode.blow_up,
        "results": mode.results,
        "checks": mode.checks,
        "hypotheses": hypotheses,
        "threads": pool.current_num_threads(),
        "wall_clock_seconds": wall,
        "files": files,
        "resolved_config": sc.resolved.to_json(),
    });
    sink.write("report.json", &serde_json::to_string_pretty(&report)?)?;
    Ok(Outcome { status, report, files })
}

fn hypothesis_summary(m: &Multiplier) -> Value {
    let grid = log_grid(m.clamp_floor, m.clamp_floor * 1e12, 16);
    match check_hypotheses(m, &grid) {
        Ok(r) => json!({
            "doubling_constant": r.doubling_constant,
            "sub_mult_constant": r.sub_mult_constant,
            "log_growth_constant": r.log_growth_constant,
            "max_decrease": r.max_decrease,
            "osgoodVerdict": r.osgood.verdict,
        }),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

fn run_mode(sc: &Scenario, sink: &mut Sink) -> Result<ModeResult> {
    let x = &sc.expect;
    match &sc.plan {
        Plan::Euler { cfg, initial } => run_euler(cfg, initial, sink, x),
        Plan::Patch(cfg) => run_patch(cfg, sink, x),
        Plan::Inequality { grids, spec, multiplier, s, op } => {
            run_sweeps(grids, sink, x, |g| main_inequality_sweep(g, spec, multiplier, *s, *op))
        }
        Plan::Commutator { grids, spec, multiplier, mu, f_cutoff } => {
            run_sweeps(grids, sink, x, |g| commutator_sweep(g, spec, *f_cutoff, multiplier, *mu))
        }
        Plan::Tangential { grid, multiplier, sigma, radius, aspects, budget, seed } => {
            let rep = tangential_sweep(*grid, multiplier, *sigma, *radius, aspects, *budget, *seed)?;
            sink.write("ratios.json", &rep.to_json()?)?;
            let per: Vec<Value> = rep.samples.iter().map(|s| json!({ "aspect": s.x, "ratio": s.value })).collect();
            let results = json!({ "max": rep.max, "argmax_aspect": rep.samples[rep.argmax].x, "samples": per });
            Ok(ModeResult { results, checks: at_most("max_ratio", rep.max, x.max_ratio).into_iter().collect(), blow_up: None })
        }
        Plan::Kernel { multiplier, rhos, cfg } => run_kernel(multiplier, rhos, cfg, sink, x),
        Plan::OsgoodTable { gamma, lower, rho_max, form, f0, c, times } => {
            run_osgood(gamma, *lower, *rho_max, *form, *f0, *c, times, sink)
        }
        Plan::Hypotheses { multiplier, grid } => {
            let rep = check_hypotheses(multiplier, grid)?;
            sink.write("hypotheses.json", &serde_json::to_string_pretty(&rep)?)?;
            let mut checks = Vec::new();
            if let Some(want) = x.osgood_verdict {
                checks.push(Check {
                    name: "osgood_verdict".into(),
                    value: json!(rep.osgood.verdict),
                    limit: json!(want),
                    pass: rep.osgood.verdict == want,
                });
            }
            let results = json!({ "osgoodVerdict": rep.osgood.verdict, "report": rep });
            Ok(ModeResult { results, checks, blow_up: None })
        }
    }
}

fn initial_field(grid: Grid, initial: &Initial) -> Result<crate::spectral::SpectralField> {
    let c = (grid.length() / 2.0, grid.length() / 2.0);
    Ok(match *initial {
        Initial::VortexPair { amp, sigma, separation } => vortex_pair(grid, amp, sigma, separation)?,
        Initial::Gaussian { amp, sigma } => gaussian(grid, c, amp, sigma),
        Initial::LaguerreGaussian { amp, sigma, order } => laguerre_gaussian(grid, c, amp, sigma, order),
        Initial::Cosine { amp, k } => cosine_mode(grid, amp, k),
        Initial::Random { amp, slope, cutoff, seed } => {
            let f = band_limited(grid, seed, 0, slope, cutoff);
            let peak = f.linf_norm();
            if peak == 0.0 {
                return Err(Error::Config("euler.cutoff admits no wavevectors".into()));
            }
            f.scaled(amp / peak)
        }
    })
}

/// Envelope values per time; past the tabulated range the bound is infinite.
fn bounds(env: &OsgoodEnvelope, form: EnvelopeForm, f0: f64, c: f64, t: &[f64]) -> Result<Vec<f64>> {
    t.iter()
        .map(|ti| {
            let v = match form {
                EnvelopeForm::Linear => env.envelope(f0, c, &[*ti]),
                EnvelopeForm::TwoTerm => env.two_term(f0, c, &[*ti]),
            };
            match v {
                Ok(v) => Ok(v[0]),
                Err(Error::EnvelopeBlowUp { .. }) => Ok(f64::INFINITY),
                Err(e) => Err(e),
            }
        })
        .collect()
}

fn run_euler(cfg: &SolverConfig, initial: &Initial, sink: &mut Sink, x: &Expectations) -> Result<ModeResult> {
    let omega0 = initial_field(cfg.grid, initial)?;
    let out = euler::run(cfg, &omega0)?;
    let recs = &out.series.records;
    sink.write("diagnostics.csv", &out.series.to_csv())?;

    let mut bkm = String::from("t0,t1,d_log_proxy,grad_integral\n");
    let mut excess = f64::NEG_INFINITY;
    for iv in out.series.bkm_intervals() {
        bkm.push_str(&format!("{:e},{:e},{:e},{:e}\n", iv.t0, iv.t1, iv.d_log_proxy[0], iv.grad_integral));
        excess = excess.max(iv.d_log_proxy[0] - iv.grad_integral);
    }
    sink.write("bkm.csv", &bkm)?;

    if let Some(fit) = &out.fit {
        let env = OsgoodEnvelope::with_defaults(GrowthFunction::Theta(cfg.multiplier.clone()))?;
        let t = out.series.times();
        sink.write("envelope.csv", &curve_csv(&t, &bounds(&env, fit.form, fit.f0, fit.c, &t)?))?;
    }
    if !out.snapshots.is_empty() {
        fs::create_dir_all(sink.dir.join("snapshots"))?;
        for (i, (t, field)) in out.snapshots.iter().enumerate() {
            let name = format!("snapshots/omega_{i:04}.bin");
            write_snapshot(&sink.dir.join(&name), field, "omega", &cfg.multiplier, *t)?;
            sink.files.push(name.clone());
            sink.files.push(format!("{name}.meta.txt"));
        }
    }

    let (l2_0, linf_0) = (recs[0].l2, recs[0].linf);
    let l2_drift = recs.iter().map(|r| (r.l2 / l2_0 - 1.0).abs()).fold(0.0, f64::max);
    let linf_growth = recs.iter().map(|r| r.linf / linf_0 - 1.0).fold(f64::NEG_INFINITY, f64::max);
    let last = recs.last().expect("at least the initial record");
    let results = json!({
        "steps": out.series.steps,
        "final_time": last.t,
        "l2_drift": l2_drift,
        "linf_growth": linf_growth,
        "final_f": last.f,
        "grad_u_integral": last.grad_u_integral,
        "bkm_max_excess": excess,
        "fit": out.fit,
        "fit_error": out.fit_error,
    });
    let checks = [at_most("max_l2_drift", l2_drift, x.max_l2_drift), at_most("max_linf_growth", linf_growth, x.max_linf_growth)];
    Ok(ModeResult {
        results,
        checks: checks.into_iter().flatten().collect(),
        blow_up: out.series.blow_up.map(|b| format!("last good t = {}: {}", b.t, b.reason)),
    })
}

fn run_patch(cfg: &PatchConfig, sink: &mut Sink, x: &Expectations) -> Result<ModeResult> {
    let out = patch::run(cfg)?;
    let s = &out.series;
    sink.write("patch.csv", &s.to_csv())?;
    sink.write("arcs.csv", &s.arcs_csv())?;
    let a0 = s.records[0].area;
    let area_drift = s.records.iter().map(|r| (r.area / a0 - 1.0).abs()).fold(0.0, f64::max);
    let displacement = s.records.iter().map(|r| r.displacement).fold(0.0, f64::max);
    let cells = displacement / cfg.grid.spacing();
    let last = s.records.last().expect("at least the initial record");
    let results = json!({
        "steps": s.steps,
        "final_time": last.t,
        "area_drift": area_drift,
        "max_displacement": displacement,
        "max_displacement_cells": cells,
        "final_delta": last.delta,
        "final_mu_t": last.mu_t,
        "tangential_integral": last.tangential_integral,
        "max_tangential_ratio": s.records.iter().map(|r| r.tangential_ratio).fold(0.0, f64::max),
        "fit": out.fit,
        "fit_error": out.fit_error,
    });
    let checks = [at_most("max_displacement_cells", cells, x.max_displacement_cells), at_most("max_area_drift", area_drift, x.max_area_drift)];
    let blow_up = s.blow_up.as_ref().or(s.regularity_lost.as_ref()).map(|b| format!("last good t = {}: {}", b.t, b.reason));
    Ok(ModeResult { results, checks: checks.into_iter().flatten().collect(), blow_up })
}

fn refinement_change(maxes: &[f64]) -> f64 {
    maxes.windows(2).map(|w| (w[1] / w[0] - 1.0).abs()).fold(0.0, f64::max)
}

fn run_sweeps<F: Fn(Grid) -> Result<RatioReport>>(grids: &[usize], sink: &mut Sink, x: &Expectations, sweep: F) -> Result<ModeResult> {
    let mut per = Vec::new();
    let mut maxes = Vec::new();
    for &n in grids {
        let rep = sweep(Grid::periodic(n)?)?;
        sink.write(&format!("ratios_N{n}.json"), &rep.to_json()?)?;
        per.push(json!({
            "N": n,
            "max": rep.max,
            "median": rep.median,
            "argmax_seed": rep.argmax_seed,
            "argmax_stream": rep.argmax_stream,
            "log_log_slope": rep.log_log_slope,
            "clamped": rep.clamped,
        }));
        maxes.push(rep.max);
    }
    let max = maxes.iter().copied().fold(0.0, f64::max);
    let change = refinement_change(&maxes);
    let checks = [at_most("max_ratio", max, x.max_ratio), at_most("max_refinement_change", change, x.max_refinement_change)];
    Ok(ModeResult {
        results: json!({ "max": max, "refinement_change": change, "grids": per }),
        checks: checks.into_iter().flatten().collect(),
        blow_up: None,
    })
}

fn run_kernel(m: &Multiplier, rhos: &[f64], cfg: &KernelConfig, sink: &mut Sink, x: &Expectations) -> Result<ModeResult> {
    let table = compute_radial_kernel(m, rhos, cfg)?;
    // the same table at twice the nodes measures quadrature error
    let fine_cfg = KernelConfig { nodes_per_interval: 2 * cfg.nodes_per_interval, ..*cfg };
    let fine = compute_radial_kernel(m, rhos, &fine_cfg)?;
    sink.write("kernel.csv", &table.to_csv())?;
    sink.write("kernel_refined.csv", &fine.to_csv())?;
    let change = refinement_change(&[table.sup_majorant, fine.sup_majorant]);
    let slope = table.log_slope();
    let mut checks: Vec<Check> = [at_most("max_ratio", table.sup_majorant, x.max_ratio), at_most("max_refinement_change", change, x.max_refinement_change)]
        .into_iter()
        .flatten()
        .collect();
    if let Some(want) = x.log_slope {
        checks.push(Check {
            name: "log_slope".into(),
            value: json!(slope),
            limit: json!({ "target": want, "tol": x.log_slope_tol }),
            pass: (slope - want).abs() <= x.log_slope_tol,
        });
    }
    let results = json!({
        "sup_majorant": table.sup_majorant,
        "argmax_rho": table.rows[table.argmax].rho,
        "sup_is_interior": table.sup_is_interior(),
        "log_slope": slope,
        "refined_sup_majorant": fine.sup_majorant,
        "refinement_change": change,
    });
    Ok(ModeResult { results, checks, blow_up: None })
}

#[allow(clippy::too_many_arguments)]
fn run_osgood(gamma: &GrowthFunction, lower: f64, rho_max: f64, form: EnvelopeForm, f0: f64, c: f64, t: &[f64], sink: &mut Sink) -> Result<ModeResult> {
    let env = OsgoodEnvelope::new(gamma.clone(), lower, rho_max)?;
    let b = bounds(&env, form, f0, c, t)?;
    sink.write("envelope.csv", &curve_csv(t, &b))?;
    let mut table = String::from("ln_r,H\n");
    for (rho, h) in env.table() {
        table.push_str(&format!("{rho:e},{h:e}\n"));
    }
    sink.write("h_table.csv", &table)?;

    // γ(r) = r has H(r) = ln(r/lower), so the envelope is explicit
    let closed_form_residual = match gamma {
        GrowthFunction::Linear => {
            let ln_b = match form {
                EnvelopeForm::Linear => env.envelope_ln(f0, c, t)?,
                EnvelopeForm::TwoTerm => env.two_term_ln(f0, c, t)?,
            };
            let worst = t
                .iter()
                .zip(ln_b)
                .map(|(ti, v)| {
                    let exact = f0.ln() + c * if form == EnvelopeForm::Linear { ti * f0 } else { ti * ti + ti };
                    (v - exact).abs() / exact.abs().max(1.0)
                })
                .fold(0.0, f64::max);
            Some(worst)
        }
        _ => None,
    };
    let results = json!({
        "gamma": gamma.label(),
        "nodes": env.nodes(),
        "h_max": env.h_max(),
        "final_bound": b.last(),
        "blow_up_time": t.iter().zip(&b).find(|(_, v)| v.is_infinite()).map(|(ti, _)| *ti),
        "closed_form_residual": closed_form_residual,
    });
    Ok(ModeResult { results, checks: Vec::new(), blow_up: None })
}
