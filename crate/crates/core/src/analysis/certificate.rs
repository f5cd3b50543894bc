//! Aggregate certificate for one gain set.

use std::fmt::Write as _;
use std::io::Write;

use super::blowup::blowup_margin;
use super::bootstrap::bootstrap_recursion;
use super::deactivation::{deactivation_bound, XyOptions};
use super::decrease::vdot_decrease_check;
use super::iss::{iss_bounds, iss_monte_carlo, IssMode, MonteCarloOptions};
use super::l2gain::{l2_gain_closed_form, l2_gain_sweep, riccati_level_sq_minus_one, SweepOptions};
use super::linalg::{SymMatrix2, SymMatrix4};
use super::lyapunov::{lyapunov_matrix, sandwich_fit, v_positive_definite};
use super::riccati::riccati_solve_with;
use crate::controller::{GainMode, Gains, BETA_MIN, K2_MIN, SMALLNESS_LIMIT};
use crate::exec::Exec;
use crate::report::fmt_f64;
use crate::Result;

#[derive(Debug, Clone, Copy)]
pub struct CertifyOptions {
    pub riccati_tol: f64,
    pub gain_tol: f64,
    pub sweep: SweepOptions,
    pub monte_carlo: MonteCarloOptions,
    pub c_hat: f64,
    pub bootstrap_c: f64,
    pub sandwich_samples: usize,
    pub seed: u64,
    pub exec: Exec,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            riccati_tol: 1e-8,
            gain_tol: 1e-6,
            sweep: SweepOptions::default(),
            monte_carlo: MonteCarloOptions::default(),
            c_hat: super::deactivation::C_HAT_DEFAULT,
            bootstrap_c: 1.0,
            sandwich_samples: 10_000,
            seed: 1,
            exec: Exec::Parallel,
        }
    }
}

/// One line of the certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub check: String,
    pub value: f64,
    pub bound: f64,
    pub verdict: bool,
}

impl CheckRow {
    fn new(check: impl Into<String>, value: f64, bound: f64, verdict: bool) -> Self {
        CheckRow {
            check: check.into(),
            value,
            bound,
            verdict,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GainCertificate {
    pub gains: Gains,
    pub upsilon_l: f64,
    pub lambda_min: f64,
    pub p_k: Option<SymMatrix2>,
    pub riccati_residual: f64,
    pub v_matrix: Option<SymMatrix4>,
    pub v_min_eig: f64,
    pub iss_xi: f64,
    pub iss_eta: f64,
    pub blowup_margin: f64,
    pub sat_margin: f64,
    pub checks: Vec<CheckRow>,
}

impl GainCertificate {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.verdict)
    }

    pub fn failed(&self) -> impl Iterator<Item = &CheckRow> {
        self.checks.iter().filter(|c| !c.verdict)
    }

    pub fn verdict(&self, name: &str) -> Option<bool> {
        self.checks.iter().find(|c| c.check == name).map(|c| c.verdict)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = crate::report::csv_writer(w);
        wr.write_record(["check", "value", "bound", "verdict"])?;
        for c in &self.checks {
            wr.write_record([
                c.check.as_str(),
                &fmt_f64(c.value),
                &fmt_f64(c.bound),
                if c.verdict { "pass" } else { "fail" },
            ])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn summary(&self) -> String {
        let g = &self.gains;
        let mut s = String::new();
        let mode = match g.mode {
            GainMode::Theorem => "theorem",
            GainMode::Manual => "manual",
        };
        let _ = writeln!(s, "gain certificate ({mode} mode)");
        let _ = writeln!(
            s,
            "  k1 = {}  k2 = {}  C1 = {}  C2 = {}  D = {}  M = {}",
            g.k1, g.k2, g.c1, g.c2, g.d_sat, g.m
        );
        let _ = writeln!(s, "  L2 gain            {:.10}", self.upsilon_l);
        let _ = writeln!(s, "  min lambda_min     {:.10}", self.lambda_min);
        if let Some(p) = &self.p_k {
            let _ = writeln!(s, "  P_k                [[{:e}, {:e}], [{:e}, {:e}]]", p.a, p.b, p.b, p.c);
        }
        let _ = writeln!(s, "  Riccati residual   {:e}", self.riccati_residual);
        let _ = writeln!(s, "  V min eigenvalue   {:e}", self.v_min_eig);
        let _ = writeln!(s, "  ISS xi / eta       {:e} / {:e}", self.iss_xi, self.iss_eta);
        let _ = writeln!(s, "  blow-up margin     {:.6}", self.blowup_margin);
        let _ = writeln!(s, "  saturation margin  {:e}", self.sat_margin);
        let passed = self.checks.iter().filter(|c| c.verdict).count();
        let _ = writeln!(s, "  checks passed      {passed}/{}", self.checks.len());
        for c in self.failed() {
            let _ = writeln!(s, "  FAIL {}: value {:e}, bound {:e}", c.check, c.value, c.bound);
        }
        s
    }
}

/// Run every check for `g` on a path with curvature bound `kappa_max` and
/// target offset `d`.
pub fn certify(g: &Gains, kappa_max: f64, d: f64, opts: &CertifyOptions) -> Result<GainCertificate> {
    let mut checks = Vec::new();

    checks.push(CheckRow::new("h1 d*kappa_max < 1", d * kappa_max, 1.0, d * kappa_max < 1.0));

    let theorem = g.mode == GainMode::Theorem;
    for (name, r) in g.relation_residuals() {
        checks.push(CheckRow::new(format!("relation {name}"), r.abs(), 1e-12, r.abs() <= 1e-12));
    }
    checks.push(CheckRow::new("k2 >= 20", g.k2, K2_MIN, g.k2 >= K2_MIN));
    checks.push(CheckRow::new("beta > 8", g.beta, BETA_MIN, g.beta > BETA_MIN));
    checks.push(CheckRow::new(
        "1/(k2*D) <= 0.01",
        g.smallness(),
        SMALLNESS_LIMIT,
        !g.smallness_warning(),
    ));

    let upsilon = l2_gain_closed_form(g.k1, g.k2);
    checks.push(CheckRow::new("L2 gain > 1", upsilon, 1.0, upsilon > 1.0));
    checks.push(CheckRow::new("L2 gain < 1.2", upsilon, 1.2, upsilon < 1.2));
    let sweep = l2_gain_sweep(g.k1, g.k2, &opts.sweep)?;
    let agree = (upsilon / sweep.upsilon - 1.0).abs();
    checks.push(CheckRow::new("L2 gain closed form vs sweep", agree, opts.gain_tol, agree <= opts.gain_tol));
    let lam = sweep.lambda_min;
    checks.push(CheckRow::new("min lambda_min > 0.93", lam, 0.93, lam > 0.93));
    checks.push(CheckRow::new("min lambda_min < 1", lam, 1.0, lam < 1.0));

    let ric = riccati_solve_with(g.k1, g.k2, riccati_level_sq_minus_one(g.k1, g.k2));
    let (p_k, riccati_residual, v_matrix, v_min_eig) = match &ric {
        Ok(sol) => {
            checks.push(CheckRow::new(
                "Riccati residual",
                sol.residual,
                opts.riccati_tol,
                sol.residual <= opts.riccati_tol,
            ));
            checks.push(CheckRow::new("P_k positive definite", sol.p.det(), 0.0, sol.is_positive_definite()));
            let q = lyapunov_matrix(g, &sol.p);
            let (m, pd) = v_positive_definite(&q);
            checks.push(CheckRow::new("V positive definite", m, 0.0, pd));
            let sw = sandwich_fit(&q, g.k2, opts.sandwich_samples, opts.seed);
            checks.push(CheckRow::new("V sandwich lower constant", sw.lower[0], 0.0, sw.lower_positive()));
            let dc = vdot_decrease_check([0.0, 0.0, 1.0, 0.0], kappa_max, g, &sol.p);
            checks.push(CheckRow::new("V decrease at |y1| = 1", dc.vdot - dc.rhs, 0.0, dc.holds));
            (Some(sol.p), sol.residual, Some(q), m)
        }
        Err(_) => {
            checks.push(CheckRow::new("Riccati residual", f64::NAN, opts.riccati_tol, false));
            (None, f64::NAN, None, f64::NAN)
        }
    };

    let (iss_xi, iss_eta) = iss_bounds(g, kappa_max, IssMode::Asymptotic)?;
    if theorem || g.k2 * g.k2 > 4.0 * g.k1 {
        let mc = iss_monte_carlo(g, kappa_max, &opts.monte_carlo, opts.exec)?;
        checks.push(CheckRow::new(
            "ISS Monte Carlo sup|xi|",
            mc.sup_xi,
            mc.xi_bound,
            mc.sup_xi <= mc.xi_bound,
        ));
        checks.push(CheckRow::new(
            "ISS Monte Carlo sup|eta|",
            mc.sup_eta,
            mc.eta_bound,
            mc.sup_eta <= mc.eta_bound,
        ));
    }

    let bm = blowup_margin(d, kappa_max, iss_eta)?;
    checks.push(CheckRow::new("blow-up margin", bm.margin, 0.0, bm.verdict));

    let de = deactivation_bound(g, kappa_max, 1.0, opts.c_hat, &XyOptions::default());
    let sat_margin = de.predicted + g.c2 / g.d_sat;
    checks.push(CheckRow::new("predicted saturation argument < 1", sat_margin, 1.0, sat_margin < 1.0));

    let bs = bootstrap_recursion(opts.bootstrap_c, g.k2, 1.0, 1.0, 20);
    checks.push(CheckRow::new("bootstrap factor < 1", bs.factor, 1.0, bs.contractive() && bs.bound_holds()));

    Ok(GainCertificate {
        gains: *g,
        upsilon_l: upsilon,
        lambda_min: lam,
        p_k,
        riccati_residual,
        v_matrix,
        v_min_eig,
        iss_xi,
        iss_eta,
        blowup_margin: bm.margin,
        sat_margin,
        checks,
    })
}
