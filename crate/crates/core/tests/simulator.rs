use momvar_core::model::{expected_qv, expected_variance};
use momvar_core::simulator::{
    mc_variance_third_variation, simulate_paths, simulate_terminals, synth_panel, Functional, Scheme, SimConfig,
    DAY_LENGTH,
};
use momvar_core::HestonParams64;

fn volvol() -> HestonParams64 {
    HestonParams64::new(3.0, 0.04, 2.0, -0.5).with_v0(0.05)
}

#[test]
fn paths_are_reproducible_and_variance_is_floored() {
    let cfg = SimConfig::new(volvol(), 5.0 * DAY_LENGTH, 40, 11);
    let a = simulate_paths(&cfg).unwrap();
    assert_eq!(a, simulate_paths(&cfg).unwrap());
    let other = simulate_paths(&SimConfig { seed: 12, ..cfg }).unwrap();
    assert_ne!(a[0].r, other[0].r);
    assert!(a.iter().all(|p| p.v.iter().all(|&v| v >= 0.0)));
    assert!(a.iter().any(|p| p.truncated_steps > 0));

    // full records end where the terminal-only simulation ends
    let t = simulate_terminals(&cfg).unwrap();
    for (rec, term) in a.iter().zip(t.terminals()) {
        assert_eq!(*rec.r.last().unwrap(), term.r);
        assert_eq!(*rec.tv.last().unwrap(), term.tv);
        assert_eq!(rec.truncated_steps, term.truncated_steps);
    }
    assert_eq!(a[0].times.len(), cfg.n_steps() + 1);
}

#[test]
fn reflection_scheme_keeps_variance_non_negative() {
    let cfg = SimConfig::new(volvol(), 5.0 * DAY_LENGTH, 20, 3).with_scheme(Scheme::ReflectionEuler);
    for p in simulate_paths(&cfg).unwrap() {
        assert!(p.v.iter().all(|&v| v >= 0.0));
    }
}

#[test]
fn zero_correlation_has_zero_mean_third_variation() {
    let p = HestonParams64::new(5.0, 0.05, 0.8, 0.0);
    let set = simulate_terminals(&SimConfig::new(p, 21.0 * DAY_LENGTH, 20_000, 5).with_steps_per_day(78)).unwrap();
    assert!(set.moment(Functional::Tv).z_score(0.0).abs() < 3.0);
    assert!(set.moment(Functional::R3).z_score(0.0).abs() < 3.0);
}

#[test]
fn deterministic_variance_matches_closed_forms() {
    let p = HestonParams64::new(4.0, 0.05, 0.0, 0.3).with_v0(0.1);
    let t = 0.5;
    let set = simulate_terminals(&SimConfig::new(p, t, 2, 1)).unwrap();
    for term in set.terminals() {
        assert!((term.qv / expected_qv(&p, t).unwrap() - 1.0).abs() < 1e-4);
        assert!((term.v / expected_variance(&p, t).unwrap() - 1.0).abs() < 1e-4);
    }
}

#[test]
fn correlation_sign_flips_the_third_variation() {
    let p = HestonParams64::new(5.0, 0.05, 0.8, -0.5);
    let cfg = SimConfig::new(p, 21.0 * DAY_LENGTH, 10_000, 9).with_steps_per_day(78);
    let neg = simulate_terminals(&cfg).unwrap().moment(Functional::Tv);
    let pos = simulate_terminals(&SimConfig {
        params: HestonParams64 { rho: 0.5, ..p },
        ..cfg
    })
    .unwrap()
    .moment(Functional::Tv);
    let se = (neg.std_error.powi(2) + pos.std_error.powi(2)).sqrt();
    assert!(neg.estimate < 0.0 && pos.estimate > 0.0);
    assert!((neg.estimate + pos.estimate).abs() < 3.0 * se);
}

#[test]
fn sample_moments_agree_with_scaled_variations() {
    let cfg = SimConfig::new(volvol(), 21.0 * DAY_LENGTH, 20_000, 21);
    let set = simulate_terminals(&cfg).unwrap();
    for (a, b) in [(Functional::R3, Functional::Tv15), (Functional::R4, Functional::Fv15)] {
        let (x, y) = (set.moment(a), set.moment(b));
        let se = (x.std_error.powi(2) + y.std_error.powi(2)).sqrt();
        assert!((x.estimate - y.estimate).abs() < 3.0 * se, "{a:?} vs {b:?}: {x:?} {y:?}");
        assert!(y.std_error < x.std_error);
    }
}

#[test]
fn realized_variations_converge_to_pathwise_integrals() {
    let p = HestonParams64::new(5.0, 0.05, 0.8, -0.5);
    let bars = [6, 26, 78, 390];
    let mut err = [[0.0f64; 3]; 4];
    for seed in 0..100 {
        let cfg = SimConfig::new(p, DAY_LENGTH, 1, seed).with_steps_per_day(780);
        for (j, &n) in bars.iter().enumerate() {
            let sp = synth_panel(&cfg, 1, n).unwrap();
            let (row, pw) = (&sp.panel.rows()[0], &sp.pathwise[0]);
            err[j][0] += (row.rv - pw.qv).abs() / pw.qv;
            err[j][1] += (row.tv - pw.tv).abs() / pw.qv.powf(1.5);
            err[j][2] += (row.fv - pw.fv).abs() / pw.qv.powi(2);
        }
    }
    for k in 0..3 {
        for j in 1..bars.len() {
            assert!(err[j][k] < err[j - 1][k], "component {k}: {:?}", err.map(|e| e[k]));
        }
    }
}

#[test]
fn third_variation_variance_is_stable_across_seeds() {
    let cfg = SimConfig::new(volvol(), 1.0, 4_000, 31).with_steps_per_day(39);
    let (v1, se1) = mc_variance_third_variation(&cfg).unwrap();
    let (v2, se2) = mc_variance_third_variation(&SimConfig { seed: 32, ..cfg }).unwrap();
    assert!(v1 > 0.0 && v2 > 0.0);
    assert!((v1 - v2).abs() < 3.0 * (se1 * se1 + se2 * se2).sqrt(), "{v1} ({se1}) vs {v2} ({se2})");
}

#[test]
fn invalid_configs_are_rejected() {
    assert!(simulate_terminals(&SimConfig::new(volvol(), 0.0, 10, 1)).is_err());
    assert!(simulate_terminals(&SimConfig::new(volvol(), 1.0, 0, 1)).is_err());
    assert!(simulate_terminals(&SimConfig::new(HestonParams64::new(-1.0, 0.04, 0.5, 0.0), 1.0, 1, 1)).is_err());
    let cfg = SimConfig::new(volvol(), 3.0 * DAY_LENGTH, 1, 1);
    assert!(synth_panel(&cfg, 4, 78).is_err());
    assert!(synth_panel(&cfg, 3, 77).is_err());
}
