//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any failed.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tpf_core::analysis::asymptotics::{logspace, pk_asymptotics};
use tpf_core::analysis::blowup::worst_case_trap_run;
use tpf_core::analysis::bootstrap::bootstrap_recursion;
use tpf_core::analysis::deactivation::{deactivation_scaling, XyOptions};
use tpf_core::analysis::decrease::{violation_box_scaling, BoxScanOptions};
use tpf_core::analysis::iss::{iss_monte_carlo, refined_check, MonteCarloOptions};
use tpf_core::analysis::l2gain::{l2_gain_closed_form, l2_gain_sweep, riccati_level_sq_minus_one, SweepOptions};
use tpf_core::analysis::lyapunov::{lyapunov_matrix, sandwich_fit, v_positive_definite};
use tpf_core::analysis::riccati::riccati_solve_with;
use tpf_core::analysis::SymMatrix2;
use tpf_core::controller::{manual_gains, synthesize_gains, Gains, A};
use tpf_core::exec::Exec;
use tpf_core::model::SpeedProfile;
use tpf_core::path::PathSpec;
use tpf_core::sim::{self, error_system_config, run_error_system, InitSpec, MonitorOptions, SimConfig, YBox};

// Tolerances, pinned.
const RELATION_TOL: f64 = 1e-12;
const GAIN_AGREE_TOL: f64 = 1e-6;
const L2_RANGE: (f64, f64) = (1.0, 1.2);
const LAMBDA_RANGE: (f64, f64) = (0.93, 1.0);
const RICCATI_TOL: f64 = 1e-8;
const SLOPE_TOL: f64 = 0.05;
const CHAR_POLY_TOL: f64 = 1e-12;
const FINAL_ERROR_MAX: f64 = 0.1;
const EXPONENT_REL_TOL: f64 = 0.2;
const DEACTIVATION_EXP: f64 = -1.0;
const DEACTIVATION_EXP_TOL: f64 = 0.2;
const RICHARDSON_TARGET: f64 = 16.0;
const RICHARDSON_REL_TOL: f64 = 0.2;
const BOOTSTRAP_ZERO: f64 = 1e-12;

const K2_SET: [f64; 6] = [20.0, 50.0, 100.0, 200.0, 500.0, 1000.0];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn reversed_start_config() -> SimConfig {
    SimConfig {
        d: 2.0,
        speed: SpeedProfile::constant(5.0).unwrap(),
        path: PathSpec::line(0.01, 1e-3).unwrap(),
        gains: manual_gains(7500.0, 200.0, 0.1172, 0.5, 50.0, 1620.0).unwrap(),
        init: InitSpec {
            e_p0: 10.0,
            e_q0: 10.0,
            xi0: 9.0 * PI / 10.0,
            ..Default::default()
        },
        dt: 1e-3,
        t_end: 60.0,
        seed: 0,
        monitor: MonitorOptions::default(),
    }
}

/// Residual of `P A + A^T P + P^2 / g^2 + I` written out entry by entry.
fn riccati_residual_oracle(p: &SymMatrix2, k1: f64, k2: f64, g2: f64) -> f64 {
    let (a, b, c) = (p.a, p.b, p.c);
    // A = [[0, 1], [-k1, -k2]]
    let pa = [[-k1 * b, a - k2 * b], [-k1 * c, b - k2 * c]];
    let p2 = [[a * a + b * b, a * b + b * c], [a * b + b * c, b * b + c * c]];
    let mut s = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let id = if i == j { 1.0 } else { 0.0 };
            let r = pa[i][j] + pa[j][i] + p2[i][j] / g2 + id;
            s += r * r;
        }
    }
    s.sqrt()
}

fn c1_gain_synthesis() -> Outcome {
    let g = synthesize_gains(200.0, 8.1, 50.0).unwrap();
    let exact = g.k1 == 7500.0;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let k2 = rng.gen_range(20.0..2000.0);
        let beta = rng.gen_range(8.0001..100.0);
        let d = rng.gen_range(0.1..200.0);
        let g = synthesize_gains(k2, beta, d).unwrap();
        // Independent restatement of the three relations.
        let r = [
            g.k1 / (A * k2 * k2) - 1.0,
            g.c2 * 2.0 * beta * k2 - 1.0,
            g.c1 * 4.0 * k2 / (A * g.c2) - 1.0,
            g.m / (beta * k2) - 1.0,
        ];
        worst = r.iter().fold(worst, |w, x| w.max(x.abs()));
    }
    outcome(
        exact && worst <= RELATION_TOL,
        format!("k1(200) = {}, worst relation residual {worst:.2e} over 50 draws", g.k1),
    )
}

fn c2_l2_gain() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for k2 in K2_SET {
        let k1 = A * k2 * k2;
        let u = l2_gain_closed_form(k1, k2);
        let sw = l2_gain_sweep(k1, k2, &SweepOptions::default()).unwrap();
        let agree = (u / sw.upsilon - 1.0).abs();
        let this = u > L2_RANGE.0
            && u < L2_RANGE.1
            && agree <= GAIN_AGREE_TOL
            && sw.lambda_min > LAMBDA_RANGE.0
            && sw.lambda_min < LAMBDA_RANGE.1;
        ok &= this;
        parts.push(format!("k2={k2}: {u:.6} (rel {agree:.1e}, lambda {:.5})", sw.lambda_min));
    }
    outcome(ok, parts.join("; "))
}

fn c3_riccati() -> Outcome {
    let mut ok = true;
    let mut worst = 0.0f64;
    for k2 in K2_SET {
        let k1 = A * k2 * k2;
        let gm1 = riccati_level_sq_minus_one(k1, k2);
        match riccati_solve_with(k1, k2, gm1) {
            Ok(s) => {
                let r = riccati_residual_oracle(&s.p, k1, k2, 1.0 + gm1);
                worst = worst.max(r);
                ok &= r <= RICCATI_TOL && s.p.a > 0.0 && s.p.det() > 0.0;
            }
            Err(_) => ok = false,
        }
    }
    outcome(ok, format!("worst residual {worst:.2e}, all P positive definite = {ok}"))
}

fn c4_pk_asymptotics() -> Outcome {
    let k2s = logspace(1e2, 1e4, 21);
    let a = pk_asymptotics(&k2s, SLOPE_TOL).unwrap();
    let (f1, f2, f3) = a.constants();
    outcome(
        a.slopes_ok() && a.f_det_ok(),
        format!(
            "slopes ({:.4}, {:.4}, {:.4}); F = ({f1:.4}, {f2:.4}, {f3:.4}); F1F3-F2^2 > 0 at all {} samples = {}",
            a.slopes[0],
            a.slopes[1],
            a.slopes[2],
            a.samples.len(),
            a.f_det_ok()
        ),
    )
}

fn theorem_p(g: &Gains) -> SymMatrix2 {
    riccati_solve_with(g.k1, g.k2, riccati_level_sq_minus_one(g.k1, g.k2))
        .unwrap()
        .p
}

fn c5_lyapunov() -> Outcome {
    let g = synthesize_gains(200.0, 8.1, 50.0).unwrap();
    let q = lyapunov_matrix(&g, &theorem_p(&g));
    let (m, pd) = v_positive_definite(&q);
    let sw = sandwich_fit(&q, g.k2, 10_000, 3);
    outcome(
        pd && sw.lower_positive(),
        format!(
            "min eigenvalue {m:.4e}; sandwich lower ({:.3e}, {:.3e}, {:.3e})",
            sw.lower[0], sw.lower[1], sw.lower[2]
        ),
    )
}

/// Theorem gains on a gently curved path, used where a convergent closed
/// loop is needed.
fn curved_config() -> SimConfig {
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
        t_end: 60.0,
        seed: 0,
        monitor: MonitorOptions::default(),
    }
}

fn c6_iss() -> Outcome {
    let g = synthesize_gains(200.0, 8.1, 50.0).unwrap();
    let mc = iss_monte_carlo(&g, 0.45, &MonteCarloOptions::default(), Exec::Parallel).unwrap();
    // The refined bounds assume tail sups |y1| < kappa_max and |y2| < 1; C1 is
    // tiny for theorem gains, so the start must already satisfy that.
    let mut cfg = curved_config();
    cfg.init.e_p0 = 0.01;
    cfg.init.e_q0 = -0.005;
    let ec = error_system_config(&cfg);
    let tr = run_error_system(&ec).unwrap();
    let start = tr.rows.len() / 2;
    let rc = refined_check(&tr.yxe(), start, &cfg.gains, cfg.path.kappa_max());
    outcome(
        mc.passed() && rc.violations == 0 && rc.hypotheses_ok && rc.checked > 0,
        format!(
            "MC {} runs: sup|xi| {:.3e} <= {:.3e}, sup|eta| {:.3e} <= {:.3e}; refined: hypotheses {}, {} checked, {} violations, worst ratio ({:.3}, {:.3})",
            mc.runs,
            mc.sup_xi,
            mc.xi_bound,
            mc.sup_eta,
            mc.eta_bound,
            rc.hypotheses_ok,
            rc.checked,
            rc.violations,
            rc.worst_ratio[0],
            rc.worst_ratio[1]
        ),
    )
}

fn c7_char_poly() -> Outcome {
    let mut worst = 0.0f64;
    for k2 in K2_SET {
        let k1 = A * k2 * k2;
        for s in [-k2 / 4.0, -3.0 * k2 / 4.0] {
            let p = s * s + k2 * s + k1;
            let scale = s * s + (k2 * s).abs() + k1;
            worst = worst.max(p.abs() / scale);
        }
    }
    outcome(worst <= CHAR_POLY_TOL, format!("worst relative value {worst:.2e}"))
}

fn c8_reproduction() -> Outcome {
    let cfg = reversed_start_config();
    match sim::run(&cfg) {
        Ok(out) => {
            let r = &out.report;
            outcome(
                r.final_error_norm < FINAL_ERROR_MAX && r.control_bounds_ok && r.kappa_sup.is_finite(),
                format!(
                    "final error {:.4e} m, controls bounded = {}, sup|kappa| = {:.3e}",
                    r.final_error_norm, r.control_bounds_ok, r.kappa_sup
                ),
            )
        }
        Err(f) => outcome(false, format!("run stopped: {f}")),
    }
}

fn c9_decrease() -> Outcome {
    let opts = BoxScanOptions::default();
    let s = violation_box_scaling(&[100.0, 200.0, 400.0], &opts, Exec::Parallel).unwrap();
    let errs = s.exponent_errors();
    let grid_points: usize = s.rows.iter().map(|r| r.grid.points).sum();
    let mut cfg = reversed_start_config();
    cfg.monitor.ybox = YBox::from_scaling(&s);
    let tr = run_error_system(&error_system_config(&cfg)).unwrap();
    let pass = errs[0] <= EXPONENT_REL_TOL
        && errs[1] <= EXPONENT_REL_TOL
        && s.grid_contained()
        && tr.violations_outside_box == 0;
    outcome(
        pass,
        format!(
            "exponents y1 {:.3} (expect -2), y2 {:.3} (expect -1.5); box constants ({:.4e}, {:.4e}); grid {} points, contained = {}; trajectory violations outside box {}",
            s.exponents[0],
            s.exponents[1],
            s.constants[0],
            s.constants[1],
            grid_points,
            s.grid_contained(),
            tr.violations_outside_box
        ),
    )
}

fn c10_deactivation() -> Outcome {
    let cfg = reversed_start_config();
    let ec = error_system_config(&cfg);
    let tr = run_error_system(&ec).unwrap();
    let entered = tr.sat_deactivation_tau.is_some_and(|t| t < ec.tau_end);
    let sc = deactivation_scaling(
        200.0,
        8.1,
        &[1.0, 2.0, 5.0, 10.0],
        1.0,
        1.0,
        &XyOptions::default(),
        Exec::Parallel,
    )
    .unwrap();
    let exp_ok = (sc.exponent - DEACTIVATION_EXP).abs() <= DEACTIVATION_EXP_TOL;
    outcome(
        entered && exp_ok,
        format!(
            "saturation argument stays in (-1, 1) from tau = {:?} of {}; (X,Y) limsup exponent {:.4}",
            tr.sat_deactivation_tau, ec.tau_end, sc.exponent
        ),
    )
}

fn c11_no_blowup() -> Outcome {
    let r = worst_case_trap_run(2.0, 0.45, 0.025, 5.0, 2.0, 1e-3, 20.0).unwrap();
    let k_closed = 19f64.sqrt() / 2.0;
    outcome(
        r.entry_time.is_some() && (r.trap_level / k_closed - 1.0).abs() < 1e-12,
        format!(
            "K = {:.12} (closed form {:.12}); |kappa(0)| = 2K enters below K at t = {:?}",
            r.trap_level, k_closed, r.entry_time
        ),
    )
}

fn c12_richardson() -> Outcome {
    let mut cfg = curved_config();
    cfg.gains = synthesize_gains(20.0, 8.1, 1.0).unwrap();
    cfg.t_end = 2.0;
    let finals: Vec<[f64; 9]> = [4e-3, 2e-3, 1e-3, 5e-4]
        .iter()
        .map(|&dt| {
            let mut c = cfg.clone();
            c.dt = dt;
            sim::run(&c).unwrap().report.final_state.to_array()
        })
        .collect();
    let dist = |a: &[f64; 9], b: &[f64; 9]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let ratios: Vec<f64> = (0..2)
        .map(|i| dist(&finals[i], &finals[i + 1]) / dist(&finals[i + 1], &finals[i + 2]))
        .collect();
    let ok = ratios
        .iter()
        .all(|r| (r / RICHARDSON_TARGET - 1.0).abs() <= RICHARDSON_REL_TOL);
    outcome(ok, format!("ratios {:.3}, {:.3}", ratios[0], ratios[1]))
}

fn c13_bootstrap() -> Outcome {
    let b = bootstrap_recursion(1.0, 100.0, 1.0, 1.0, 20);
    let bound = 1.0 * (1.0 + 1.0 / 100f64.powf(2.5)) / 10.0;
    let steps_ok = (0..20).all(|n| b.pair_sum(n + 1) <= bound * b.pair_sum(n) * (1.0 + 1e-12));
    outcome(
        bound < 1.0 && steps_ok && b.pair_sum(20) < BOOTSTRAP_ZERO && (b.factor / bound - 1.0).abs() < 1e-15,
        format!(
            "factor {:.6} (C'/sqrt(k2)), max step ratio {:.3e}, S_20 = {:.3e}",
            bound, b.max_ratio, b.pair_sum(20)
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 13] = [
        ("gain synthesis", c1_gain_synthesis),
        ("L2 gain", c2_l2_gain),
        ("Riccati solution", c3_riccati),
        ("P_k asymptotics", c4_pk_asymptotics),
        ("Lyapunov positive definiteness", c5_lyapunov),
        ("ISS bounds", c6_iss),
        ("eigen-structure", c7_char_poly),
        ("straight-line reproduction run", c8_reproduction),
        ("V decrease box scaling", c9_decrease),
        ("saturation deactivation", c10_deactivation),
        ("no blow-up", c11_no_blowup),
        ("integrator order", c12_richardson),
        ("bootstrap contraction", c13_bootstrap),
    ];
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let o = f();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {:>2} {tag} {name} [{:.2} s]: {}",
            i + 1,
            t0.elapsed().as_secs_f64(),
            o.detail
        );
        if !o.pass {
            failed.push(i + 1);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 13 criteria pass");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
