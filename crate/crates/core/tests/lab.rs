use std::f64::consts::TAU;

use osgood_core::lab::inequality::*;
use osgood_core::lab::kernel::{compute_radial_kernel, kernel_at, KernelConfig};
use osgood_core::lp::{build_partition, Profile};
use osgood_core::multiplier::{log_grid, Multiplier};
use osgood_core::patch::{PatchShape, PatchState};
use osgood_core::spectral::{Grid, SpectralField};
use osgood_core::Error;
use proptest::prelude::*;

fn ilog() -> Multiplier {
    Multiplier::iterated_log(&[1.0]).unwrap()
}

#[test]
fn newtonian_kernel_has_log_slope() {
    let rhos = log_grid(1e-3, 1.0, 8);
    let t = compute_radial_kernel(&Multiplier::classical(), &rhos, &KernelConfig::default()).unwrap();
    assert!((t.log_slope() + TAU).abs() <= 1e-6 * TAU, "{}", t.log_slope());
    assert!(t.rows.iter().all(|r| (r.majorant - TAU / 2.0).abs() < 1e-8));
}

#[test]
fn kernel_derivatives_are_mutually_consistent() {
    // f, f′ and f″ come from three separate oscillatory integrals
    let m = ilog();
    let cfg = KernelConfig::default();
    for rho in [3e-3, 0.05, 0.4] {
        let h = 1e-4 * rho;
        let lo = kernel_at(&m, rho - h, &cfg).unwrap();
        let mid = kernel_at(&m, rho, &cfg).unwrap();
        let hi = kernel_at(&m, rho + h, &cfg).unwrap();
        let d1 = (hi.f - lo.f) / (2.0 * h);
        let d2 = (hi.f1 - lo.f1) / (2.0 * h);
        assert!((d1 - mid.f1).abs() <= 1e-5 * mid.f1.abs(), "rho={rho}: {d1} vs {}", mid.f1);
        assert!((d2 - mid.f2).abs() <= 1e-5 * mid.f2.abs(), "rho={rho}: {d2} vs {}", mid.f2);
    }
}

#[test]
fn kernel_majorant_is_resolution_stable() {
    let rhos = log_grid(1e-3, 1.0, 8);
    for m in [ilog(), Multiplier::iterated_log(&[1.0, 1.0]).unwrap()] {
        let sups: Vec<f64> = [8, 16, 32]
            .iter()
            .map(|&n| compute_radial_kernel(&m, &rhos, &KernelConfig { nodes_per_interval: n, ..Default::default() }).unwrap().sup_majorant)
            .collect();
        assert!(sups.iter().all(|s| s.is_finite()));
        assert!((sups[1] / sups[0] - 1.0).abs() <= 0.01 && (sups[2] / sups[1] - 1.0).abs() <= 0.01, "{sups:?}");
    }
}

#[test]
fn kernel_csv_and_errors() {
    let m = ilog();
    let t = compute_radial_kernel(&m, &[0.01, 0.1], &KernelConfig::default()).unwrap();
    let csv = t.to_csv();
    assert!(csv.starts_with("rho,f,f1,f2,majorant\n"));
    assert_eq!(csv.lines().count(), 3);
    assert!(compute_radial_kernel(&m, &[2.0], &KernelConfig::default()).is_err());
    assert!(compute_radial_kernel(&m, &[], &KernelConfig::default()).is_err());
    let starved = KernelConfig { max_intervals: 20, tol: 1e-300, ..Default::default() };
    match kernel_at(&m, 0.1, &starved) {
        Err(Error::AccelerationFailed { intervals, partial_sums }) => {
            assert_eq!(intervals, 20);
            assert!(!partial_sums.is_empty());
        }
        other => panic!("expected acceleration failure, got {other:?}"),
    }
}

#[test]
fn single_mode_identity_ratio_is_at_most_one() {
    let g = Grid::periodic(64).unwrap();
    let p = build_partition(g, Profile::default()).unwrap();
    let f = SpectralField::from_fn(g, |x, y| (2.0 * x + y).cos());
    let r = main_inequality_ratio(&f, &Multiplier::classical(), 0.5, Operator::Identity, &p).unwrap();
    assert!((r.sup_f - r.linf).abs() < 1e-12);
    assert!(r.ratio <= 1.0);
    assert!(!r.q_clamped && (r.cutoff - r.q.log2()).abs() < 1e-15);
    assert!(main_inequality_ratio(&SpectralField::zeros(g), &Multiplier::classical(), 0.5, Operator::Identity, &p).is_err());
    assert!(main_inequality_ratio(&f, &Multiplier::classical(), 0.5, Operator::Riesz { i: 3, j: 1 }, &p).is_err());
    assert!(main_inequality_ratio(&f, &Multiplier::classical(), 1.5, Operator::Identity, &p).is_err());
}

#[test]
fn main_sweep_is_refinement_stable() {
    let spec = SweepSpec { seed: 3, count: 40, slope: (0.5, 3.0), cutoff: (3.0, 40.0), family: Family::Random };
    let op = Operator::Riesz { i: 1, j: 2 };
    let a = main_inequality_sweep(Grid::periodic(128).unwrap(), &spec, &ilog(), 0.5, op).unwrap();
    let b = main_inequality_sweep(Grid::periodic(256).unwrap(), &spec, &ilog(), 0.5, op).unwrap();
    assert!((b.max / a.max - 1.0).abs() <= 0.2);
    assert_eq!(a.samples.len(), 40);
    let json = a.to_json().unwrap();
    assert!(json.contains("\"argmax_seed\": 3"));
}

#[test]
fn corner_family_has_log_growing_riesz_transform() {
    let g = Grid::periodic(256).unwrap();
    let p = build_partition(g, Profile::default()).unwrap();
    let sup = |k: f64| {
        let spec = SweepSpec { seed: 0, count: 1, slope: (1.0, 1.0), cutoff: (k, k), family: Family::Corner };
        main_inequality_ratio(&spec.field(g, 0, 0), &Multiplier::classical(), 0.5, Operator::Riesz { i: 1, j: 2 }, &p).unwrap()
    };
    let (a, b, c) = (sup(9.0), sup(27.0), sup(81.0));
    // square wave: bounded field, Riesz transform gains a constant per tripling
    assert!(a.linf < 1.0 && c.linf < 1.0, "{} {}", a.linf, c.linf);
    let (d1, d2) = (b.sup_f - a.sup_f, c.sup_f - b.sup_f);
    assert!(d1 > 0.05 && d2 > 0.05 && (d2 / d1 - 1.0).abs() < 0.3, "{d1} {d2}");
}

#[test]
fn commutator_vanishes_for_constant_symbol() {
    let g = Grid::periodic(128).unwrap();
    let p = build_partition(g, Profile::default()).unwrap();
    let spec = SweepSpec { seed: 9, count: 4, slope: (0.5, 2.0), cutoff: (3.0, 40.0), family: Family::Random };
    for i in 0..4 {
        let f = spec.field(g, i, 100).map_spectrum(|k| {
            let r = g.wavenumber_magnitude(k);
            if r < 10.0 {
                1.0.into()
            } else {
                0.0.into()
            }
        });
        let h = spec.field(g, i, 200);
        let r = commutator_ratio(&f, &h, &Multiplier::constant(2.5).unwrap(), 0.5, &p).unwrap();
        assert!(r.ratio <= 1e-12, "{}", r.ratio);
    }
}

#[test]
fn commutator_rejects_degenerate_inputs() {
    let g = Grid::periodic(128).unwrap();
    let p = build_partition(g, Profile::default()).unwrap();
    let smooth = SpectralField::from_fn(g, |x, y| x.sin() + (2.0 * y).cos());
    let constant = SpectralField::from_fn(g, |_, _| 1.5);
    let rough = SpectralField::from_fn(g, |x, _| (30.0 * x).sin());
    let m = ilog();
    assert!(commutator_ratio(&constant, &smooth, &m, 0.5, &p).is_err());
    assert!(commutator_ratio(&smooth, &constant, &m, 0.5, &p).is_err());
    assert!(commutator_ratio(&rough, &smooth, &m, 0.5, &p).is_err());
    assert!(commutator_ratio(&smooth, &smooth, &m, 0.0, &p).is_err());
    assert!(commutator_ratio(&smooth, &rough, &m, 0.5, &p).unwrap().ratio > 0.0);
}

#[test]
fn commutator_sweep_is_refinement_stable() {
    let spec = SweepSpec { seed: 5, count: 24, slope: (0.5, 3.0), cutoff: (3.0, 40.0), family: Family::Random };
    let a = commutator_sweep(Grid::periodic(128).unwrap(), &spec, 12.0, &ilog(), 0.5).unwrap();
    let b = commutator_sweep(Grid::periodic(256).unwrap(), &spec, 12.0, &ilog(), 0.5).unwrap();
    assert!(a.max > 0.0 && (b.max / a.max - 1.0).abs() <= 0.2, "{} {}", a.max, b.max);
    assert!(commutator_sweep(Grid::periodic(128).unwrap(), &spec, 16.0, &ilog(), 0.5).is_err());
}

fn patch(g: Grid, aspect: f64, a0: f64) -> PatchState {
    let c = (g.length() / 2.0, g.length() / 2.0);
    PatchState::new(PatchShape::ellipse(c, 1.0, aspect, 0.3).level_set(g).unwrap(), a0).unwrap()
}

#[test]
fn tangential_ratio_cases() {
    let g = Grid::periodic(128).unwrap();
    let p = build_partition(g, Profile::default()).unwrap();
    let still = tangential_holder_ratio(&patch(g, 2.0, 0.0), &ilog(), 0.5, 20_000, 0, &p).unwrap();
    assert_eq!(still.ratio, 0.0);
    let circle = tangential_holder_ratio(&patch(g, 1.0, 1.0), &ilog(), 0.5, 20_000, 0, &p).unwrap();
    assert!(circle.ratio.is_finite() && circle.ratio > 0.0 && circle.ratio < 1.0);
    let sweep = tangential_sweep(g, &ilog(), 0.5, 1.0, &[1.0, 2.0, 3.0, 4.0], 20_000, 0).unwrap();
    assert!(sweep.max < 1.0);
    assert_eq!(sweep.samples[sweep.argmax].x, Some(1.0));
}

#[test]
fn ratio_report_statistics() {
    let s = |v: f64, x: f64| RatioSample { seed: 1, stream: (v * 10.0) as u64, value: v, x: Some(x) };
    let r = RatioReport::new("t", vec![s(1.0, 1.0), s(4.0, 2.0), s(2.0, 4.0), s(3.0, 8.0)], 0).unwrap();
    assert_eq!((r.max, r.median, r.argmax, r.argmax_stream), (4.0, 2.5, 1, 40));
    assert!(r.log_log_slope.unwrap() > 0.0);
    assert!(RatioReport::new("t", vec![s(f64::NAN, 1.0)], 0).is_err());
    assert!(RatioReport::new("t", vec![], 0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn ratios_are_scale_invariant(seed in 0u64..1000, c in prop_oneof![1e-3f64..1e3, -1e3f64..-1e-3]) {
        let g = Grid::periodic(64).unwrap();
        let p = build_partition(g, Profile::default()).unwrap();
        let spec = SweepSpec { seed, count: 1, slope: (0.5, 2.5), cutoff: (2.0, 20.0), family: Family::Random };
        let field = spec.field(g, 0, 0);
        let m = ilog();
        for op in [Operator::Identity, Operator::Riesz { i: 1, j: 2 }, Operator::Riesz { i: 2, j: 2 }] {
            let a = main_inequality_ratio(&field, &m, 0.5, op, &p).unwrap().ratio;
            let b = main_inequality_ratio(&field.scaled(c), &m, 0.5, op, &p).unwrap().ratio;
            prop_assert!((a - b).abs() <= 1e-10 * a.max(1e-300), "{a} {b}");
        }
        let f = osgood_core::lab::corpus::band_limited(g, seed, 1, 1.0, 6.0);
        let a = commutator_ratio(&f, &field, &m, 0.5, &p).unwrap().ratio;
        let b = commutator_ratio(&f.scaled(c), &field, &m, 0.5, &p).unwrap().ratio;
        let d = commutator_ratio(&f, &field.scaled(c), &m, 0.5, &p).unwrap().ratio;
        prop_assert!((a - b).abs() <= 1e-10 * a && (a - d).abs() <= 1e-10 * a);
    }

    #[test]
    fn tangential_ratio_is_invariant_under_level_set_scaling(aspect in 1.0f64..3.0, c in 0.01f64..100.0) {
        let g = Grid::periodic(64).unwrap();
        let p = build_partition(g, Profile::default()).unwrap();
        let centre = (g.length() / 2.0, g.length() / 2.0);
        let phi = PatchShape::ellipse(centre, 1.2, aspect, 0.2).level_set(g).unwrap();
        let a = tangential_holder_ratio(&PatchState::new(phi.clone(), 1.0).unwrap(), &ilog(), 0.5, 5000, 7, &p).unwrap().ratio;
        let b = tangential_holder_ratio(&PatchState::new(phi.scaled(c), 1.0).unwrap(), &ilog(), 0.5, 5000, 7, &p).unwrap().ratio;
        prop_assert!((a - b).abs() <= 1e-10 * a, "{a} {b}");
    }
}
