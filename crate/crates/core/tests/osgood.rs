use osgood_core::multiplier::Multiplier;
use osgood_core::osgood::{fit_constant, subadditivity_constant, EnvelopeForm, GrowthFunction, OsgoodEnvelope};
use proptest::prelude::*;

fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[test]
fn iterated_log_envelopes_are_towers_of_exponentials() {
    for n in 1..=3usize {
        let m = Multiplier::iterated_log(&vec![1.0; n]).unwrap();
        let env = OsgoodEnvelope::new(GrowthFunction::Theta(m), 1.0, 1e300).unwrap();
        let (f0, c) = (3.0, 0.5);
        let h0 = env.h(f0).unwrap();
        // the far end of the table, where the nested logs have settled
        let (ha, hb) = (env.h_ln(1e100).unwrap(), env.h_ln(1e299).unwrap());
        let t: Vec<f64> = (0..=200).map(|i| (ha + (hb - ha) * i as f64 / 200.0 - h0) / (c * f0)).collect();
        let rho = env.envelope_ln(f0, c, &t).unwrap();
        // Log applied n+2 times to the envelope = Log applied n+1 times to ρ
        let tower: Vec<f64> = rho
            .iter()
            .map(|r| {
                let mut v = *r;
                for _ in 0..=n {
                    v = v.ln();
                }
                v
            })
            .collect();
        let b = slope(&t, &tower);
        println!("n={n}: slope ratio {}", b / (c * f0));
        assert!((b / (c * f0) - 1.0).abs() <= 0.1, "n={n}: slope {b} vs {}", c * f0);
    }
}

#[test]
fn envelope_solves_the_growth_ode() {
    for gamma in [
        GrowthFunction::Linear,
        GrowthFunction::Theta(Multiplier::classical()),
        GrowthFunction::Theta(Multiplier::iterated_log(&[1.0]).unwrap()),
    ] {
        let env = OsgoodEnvelope::with_defaults(gamma.clone()).unwrap();
        let (f0, c, dt) = (2.5, 0.8, 1e-4);
        for t in [0.1, 0.5, 1.0, 1.5] {
            let y = env.envelope_ln(f0, c, &[t - dt, t, t + dt]).unwrap();
            let d = (y[2] - y[0]) / (2.0 * dt);
            // dρ/dt = C f0 γ(r)/r
            let expect = c * f0 / gamma.rate(y[1]).unwrap();
            assert!((d - expect).abs() <= 1e-4 * expect, "{}: {d} vs {expect}", gamma.label());
        }
    }
}

#[test]
fn tilde_two_term_stays_in_table() {
    let env = OsgoodEnvelope::with_defaults(GrowthFunction::Tilde(Multiplier::iterated_log(&[1.0]).unwrap())).unwrap();
    assert!(env.h_max() >= 1e3 || env.h_max() > 1.0 * (100.0 + 10.0) + env.h(2.0).unwrap());
    let t: Vec<f64> = (0..=100).map(|i| i as f64 * 0.1).collect();
    let v = env.two_term_ln(2.0, 1.0, &t).unwrap();
    assert!(v.iter().all(|x| x.is_finite()));
    assert!(v.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn tilde_gamma_subadditive_on_samples() {
    for exps in [vec![1.0], vec![1.0, 1.0], vec![0.5]] {
        let g = GrowthFunction::Tilde(Multiplier::iterated_log(&exps).unwrap());
        let c = subadditivity_constant(&g, 1.0, 1e3, 40).unwrap();
        assert!(c <= 2.0, "{exps:?}: {c}");
    }
}

#[test]
fn fit_on_constant_data_hits_bracket_bottom() {
    let env = OsgoodEnvelope::with_defaults(GrowthFunction::Linear).unwrap();
    let t: Vec<f64> = (0..10).map(f64::from).collect();
    let fit = fit_constant(&env, EnvelopeForm::TwoTerm, 4.0, &t, &[4.0; 10]).unwrap();
    assert!(fit.at_bracket_bottom);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn monotone_in_c_f0_and_gamma(c in 0.01f64..2.0, dc in 0.0f64..1.0, f0 in 1.1f64..10.0, df in 0.0f64..5.0, t in 0.0f64..1.5) {
        let m1 = Multiplier::classical();
        let m2 = Multiplier::constant(0.5).unwrap();
        let e1 = OsgoodEnvelope::with_defaults(GrowthFunction::Theta(m1)).unwrap();
        // γ with m = 1/2 is pointwise smaller, so its envelope is lower
        let e2 = OsgoodEnvelope::with_defaults(GrowthFunction::Theta(m2)).unwrap();
        let small = e2.envelope_ln(f0, c, &[t]).unwrap()[0];
        let base = e1.envelope_ln(f0, c, &[t]).unwrap()[0];
        prop_assert!(e1.envelope_ln(f0, c + dc, &[t]).unwrap()[0] >= base - 1e-12);
        prop_assert!(e1.envelope_ln(f0 + df, c, &[t]).unwrap()[0] >= base - 1e-12);
        prop_assert!(small <= base + 1e-12);
    }

    #[test]
    fn curve_is_non_decreasing_and_starts_at_f0(c in 0.01f64..1.0, f0 in 1.0f64..4.0) {
        let env = OsgoodEnvelope::with_defaults(GrowthFunction::Theta(Multiplier::iterated_log(&[1.0]).unwrap())).unwrap();
        let t: Vec<f64> = (0..=20).map(|i| i as f64 * 0.04).collect();
        let v = env.envelope(f0, c, &t).unwrap();
        prop_assert_eq!(v[0], f0);
        prop_assert!(v.windows(2).all(|w| w[1] >= w[0]));
    }
}
