use std::f64::consts::PI;

use tpf_core::analysis::blowup::blowup_margin;
use tpf_core::analysis::certificate::{certify, CertifyOptions};
use tpf_core::analysis::decrease::{violation_box_scaling, BoxScanOptions};
use tpf_core::analysis::iss::MonteCarloOptions;
use tpf_core::controller::{manual_gains, synthesize_gains};
use tpf_core::exec::Exec;
use tpf_core::model::SpeedProfile;
use tpf_core::path::PathSpec;
use tpf_core::sim::{run, sweep, InitSpec, MonitorOptions, SimConfig, SweepAxis, YBox};
use tpf_core::Error;

fn sine_config() -> SimConfig {
    SimConfig {
        d: 2.0,
        speed: SpeedProfile::constant(5.0).unwrap(),
        path: PathSpec::sine(0.02, 0.01).unwrap(),
        gains: synthesize_gains(20.0, 8.1, 10.0).unwrap(),
        init: InitSpec {
            e_p0: 0.3,
            e_q0: -0.2,
            xi0: 0.005,
            ..Default::default()
        },
        dt: 1e-3,
        t_end: 20.0,
        seed: 0,
        monitor: MonitorOptions::default(),
    }
}

#[test]
fn high_curvature_run_stays_below_trap_level() {
    let cfg = SimConfig {
        path: PathSpec::circle(0.45, 0.45, 1e-3).unwrap(),
        gains: synthesize_gains(200.0, 8.1, 50.0).unwrap(),
        init: InitSpec {
            e_q0: 0.01,
            ..Default::default()
        },
        dt: 4e-4,
        t_end: 10.0,
        ..sine_config()
    };
    let out = run(&cfg).unwrap();
    let r = &out.report;
    let bm = blowup_margin(cfg.d, 0.45, r.eta_sup).unwrap();
    assert!(bm.verdict);
    let k = bm.trap_level.unwrap();
    assert!(r.kappa_sup.is_finite() && r.kappa_sup < k, "{} vs {k}", r.kappa_sup);
    assert_eq!(r.kappa_below_trap(), Some(true));
}

#[test]
fn zero_error_on_circle_remains_zero() {
    let cfg = SimConfig {
        path: PathSpec::circle(0.2, 0.2, 1e-3).unwrap(),
        init: InitSpec::default(),
        t_end: 30.0,
        ..sine_config()
    };
    let out = run(&cfg).unwrap();
    for name in ["e_p", "e_q", "xi", "eta"] {
        let m = out.trace.column(name).iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(m < 1e-6, "{name}: {m}");
    }
}

#[test]
fn logged_controls_obey_bounds_and_speed_stays_positive() {
    let cfg = sine_config();
    let out = run(&cfg).unwrap();
    let g = cfg.gains;
    let u1 = out.trace.column("u1");
    let u2 = out.trace.column("u2");
    let u = out.trace.column("u");
    let vd = out.trace.column("v_d");
    for i in 0..u.len() {
        assert!(u1[i].abs() <= g.c1 && u2[i].abs() <= g.d_sat);
        assert!(u[i] >= vd[i] * (1.0 - g.c1) * (1.0 - 1e-15) && u[i] > 0.0);
    }
    assert!(out.trace.rows.iter().all(|r| r.iter().all(|v| v.is_finite())));
}

#[test]
fn runs_are_bit_identical() {
    let cfg = sine_config();
    let a = run(&cfg).unwrap();
    let b = run(&cfg).unwrap();
    let (mut x, mut y) = (Vec::new(), Vec::new());
    a.trace.write_csv(&mut x).unwrap();
    b.trace.write_csv(&mut y).unwrap();
    assert_eq!(x, y);
}

#[test]
fn blowup_returns_partial_trace() {
    let cfg = SimConfig {
        path: PathSpec::line(0.01, 1e-3).unwrap(),
        gains: manual_gains(7500.0, 200.0, 0.1172, 0.5, 50.0, 1620.0).unwrap(),
        init: InitSpec {
            e_p0: 10.0,
            e_q0: 10.0,
            xi0: 0.9 * PI,
            ..Default::default()
        },
        t_end: 1.0,
        ..sine_config()
    };
    let f = run(&cfg).unwrap_err();
    // Curvature runs away; depending on the step the first non-finite value is
    // kappa itself or the curvature rate derived from it.
    assert!(
        matches!(&f.error, Error::Blowup { component, .. } if component == "kappa" || component == "rho0"),
        "{f}"
    );
    assert!(!f.trace.is_empty());
    assert!(f.trace.rows.iter().all(|r| r.iter().all(|v| v.is_finite())));
}

#[test]
fn initial_target_matches_configured_errors() {
    let cfg = SimConfig {
        path: PathSpec::line(0.01, 1e-3).unwrap(),
        init: InitSpec {
            e_p0: 10.0,
            e_q0: 10.0,
            xi0: 0.9 * PI,
            ..Default::default()
        },
        t_end: 0.01,
        ..sine_config()
    };
    let first = run(&cfg).unwrap().trace.rows[0];
    let col = |n: &str| first[tpf_core::sim::Trace::column_index(n).unwrap()];
    assert!((col("p") - 10.0).abs() < 1e-12);
    assert!((col("q") - 10.0).abs() < 1e-12);
    assert!((col("theta") - 0.9 * PI).abs() < 1e-12);
}

#[test]
fn dt_sweep_shows_fourth_order() {
    let mut cfg = sine_config();
    cfg.gains = synthesize_gains(20.0, 8.1, 1.0).unwrap();
    cfg.t_end = 2.0;
    let t = sweep(&cfg, SweepAxis::Dt, &[4e-3, 2e-3, 1e-3], Exec::Parallel).unwrap();
    let r = t.rows[2].richardson_ratio.unwrap();
    assert!((r / 16.0 - 1.0).abs() < 0.2, "ratio {r}");
}

#[test]
fn xi0_sweep_records_every_row() {
    // Moderate headings converge; a nearly reversed start drives the target
    // curvature past 1/d and the run stops, which is recorded, not fatal.
    let cfg = sine_config();
    let t = sweep(&cfg, SweepAxis::Xi0, &[0.9 * PI, 0.0, PI / 2.0], Exec::Parallel).unwrap();
    assert_eq!(t.rows.len(), 3);
    assert!(t.rows[0].outcome.is_ok());
    assert!(t.rows[1].outcome.is_ok());
    let last = t.rows[2].outcome.as_ref().unwrap_err();
    assert!(last.contains("kappa") || last.contains("rho0"), "{last}");
    let mut buf = Vec::new();
    t.write_csv(&mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 4);
}

#[test]
fn k2_sweep_with_theorem_gains_all_pass() {
    let mut cfg = sine_config();
    cfg.gains = synthesize_gains(50.0, 8.1, 50.0).unwrap();
    cfg.dt = 5e-4;
    cfg.t_end = 5.0;
    let t = sweep(&cfg, SweepAxis::K2, &[50.0, 100.0, 200.0], Exec::Parallel).unwrap();
    for r in &t.rows {
        let m = r.outcome.as_ref().unwrap();
        assert!(m.passed(), "k2 = {}: {:?}", r.value, m.violations());
    }
}

#[test]
fn certify_theorem_and_manual_gains() {
    let opts = CertifyOptions {
        monte_carlo: MonteCarloOptions {
            runs: 20,
            ..Default::default()
        },
        ..Default::default()
    };
    let g = synthesize_gains(200.0, 8.1, 50.0).unwrap();
    let c = certify(&g, 0.01, 2.0, &opts).unwrap();
    assert!(c.all_pass(), "{}", c.summary());

    let m = manual_gains(7500.0, 200.0, 0.1172, 0.5, 50.0, 1620.0).unwrap();
    let c = certify(&m, 0.01, 2.0, &opts).unwrap();
    let failed: Vec<&str> = c.failed().map(|r| r.check.as_str()).collect();
    assert!(failed.iter().any(|f| f.starts_with("relation C2")), "{failed:?}");
}

#[test]
fn default_box_covers_fitted_box() {
    let s = violation_box_scaling(&[100.0, 200.0, 400.0], &BoxScanOptions::default(), Exec::Parallel).unwrap();
    let d = YBox::default();
    assert!(d.c1 >= s.constants[0] && d.c2 >= s.constants[1], "{:?}", s.constants);
}
