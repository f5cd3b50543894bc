use std::fmt::Write as _;
use std::io::Write;

use super::integrate::{name_component, rk4_step};
use super::{init_states, SimConfig};
use crate::analysis::blowup::blowup_margin;
use crate::analysis::decrease::vdot_decrease_check;
use crate::analysis::linalg::SymMatrix2;
use crate::analysis::lyapunov::v_direct;
use crate::analysis::riccati::riccati_solve_default;
use crate::controller::{compute_errors, control, physical_controls, Controls, ErrorState};
use crate::model::{closed_loop_rhs, stretch, ClosedLoopState, LoopInputs};
use crate::report::{csv_writer, fmt_f64, fmt_opt};
use crate::{Error, Result};

pub const TRACE_COLUMNS: [&str; 28] = [
    "t", "s", "x", "y", "psi", "kappa", "p", "q", "theta", "omega", "p_r", "q_r", "psi_r", "kappa_r", "e_p", "e_q",
    "xi", "eta", "y1", "y2", "u1", "u2", "u", "rho", "rho0", "v_d", "V", "sat_arg",
];

const fn col(name: &str) -> usize {
    let mut i = 0;
    while i < TRACE_COLUMNS.len() {
        if str_eq(TRACE_COLUMNS[i], name) {
            return i;
        }
        i += 1;
    }
    panic!("unknown trace column")
}

const fn str_eq(a: &str, b: &str) -> bool {
    let (a, b) = (a.as_bytes(), b.as_bytes());
    if a.len() != b.len() {
        return false;
    }
    let mut i = 0;
    while i < a.len() {
        if a[i] != b[i] {
            return false;
        }
        i += 1;
    }
    true
}

/// One row per logged step, columns as in [`TRACE_COLUMNS`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub rows: Vec<[f64; 28]>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Index of a named column.
    pub fn column_index(name: &str) -> Option<usize> {
        TRACE_COLUMNS.iter().position(|c| *c == name)
    }

    /// Copy of one column. Panics on an unknown name.
    pub fn column(&self, name: &str) -> Vec<f64> {
        let i = Self::column_index(name).unwrap_or_else(|| panic!("unknown trace column {name}"));
        self.rows.iter().map(|r| r[i]).collect()
    }

    pub fn last(&self) -> Option<&[f64; 28]> {
        self.rows.last()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv_writer(w);
        wr.write_record(TRACE_COLUMNS)?;
        for r in &self.rows {
            wr.write_record(r.iter().map(|&v| fmt_f64(v)))?;
        }
        wr.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonitorReport {
    /// Points after the split, outside the y-box, where the decrease
    /// inequality fails. `None` when no Lyapunov matrix is available.
    pub v_decrease_violations: Option<usize>,
    pub v_decrease_checked: usize,
    /// Start of the final stretch on which `|sat_arg| < 1` throughout.
    pub sat_deactivation_time: Option<f64>,
    pub kappa_sup: f64,
    pub eta_sup: f64,
    pub control_bounds_ok: bool,
    pub final_error_norm: f64,
    pub xi_final: f64,
    pub eta_final: f64,
    pub final_state: ClosedLoopState,
    /// Trap level for the measured `sup|eta|`, if the blow-up margin is positive.
    pub trap_level: Option<f64>,
    pub warnings: Vec<String>,
}

impl MonitorReport {
    pub fn kappa_below_trap(&self) -> Option<bool> {
        self.trap_level.map(|k| self.kappa_sup < k)
    }

    /// Names of the monitors that flagged a problem.
    pub fn violations(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        if self.v_decrease_violations.is_some_and(|n| n > 0) {
            v.push("v_decrease");
        }
        if self.sat_deactivation_time.is_none() {
            v.push("sat_deactivation");
        }
        if !self.control_bounds_ok {
            v.push("control_bounds");
        }
        if self.kappa_below_trap() == Some(false) {
            v.push("kappa_trap");
        }
        v
    }

    pub fn passed(&self) -> bool {
        self.violations().is_empty()
    }

    fn metrics(&self) -> Vec<(&'static str, String)> {
        let z = &self.final_state;
        let mut m = vec![
            (
                "v_decrease_violations",
                self.v_decrease_violations.map(|n| n.to_string()).unwrap_or_default(),
            ),
            ("v_decrease_checked", self.v_decrease_checked.to_string()),
            ("sat_deactivation_time", fmt_opt(self.sat_deactivation_time)),
            ("kappa_sup", fmt_f64(self.kappa_sup)),
            ("eta_sup", fmt_f64(self.eta_sup)),
            ("trap_level", fmt_opt(self.trap_level)),
            ("control_bounds_ok", self.control_bounds_ok.to_string()),
            ("final_error_norm", fmt_f64(self.final_error_norm)),
            ("xi_final", fmt_f64(self.xi_final)),
            ("eta_final", fmt_f64(self.eta_final)),
        ];
        for (name, v) in ClosedLoopState::NAMES.iter().zip(z.to_array()) {
            m.push((final_name(name), fmt_f64(v)));
        }
        m.push(("passed", self.passed().to_string()));
        m
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv_writer(w);
        wr.write_record(["metric", "value"])?;
        for (k, v) in self.metrics() {
            wr.write_record([k, v.as_str()])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn text(&self) -> String {
        let mut s = String::new();
        for w in &self.warnings {
            let _ = writeln!(s, "{w}");
        }
        for (k, v) in self.metrics() {
            let _ = writeln!(s, "{k:<24} {v}");
        }
        for v in self.violations() {
            let _ = writeln!(s, "VIOLATION {v}");
        }
        s
    }
}

fn final_name(n: &str) -> &'static str {
    match n {
        "x" => "final_x",
        "y" => "final_y",
        "psi" => "final_psi",
        "kappa" => "final_kappa",
        "omega" => "final_omega",
        "p_r" => "final_p_r",
        "q_r" => "final_q_r",
        "psi_r" => "final_psi_r",
        _ => "final_s",
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub trace: Trace,
    pub report: MonitorReport,
}

/// A run that stopped early; the trace holds every completed step.
#[derive(Debug)]
pub struct SimFailure {
    pub trace: Trace,
    pub error: Error,
}

impl std::fmt::Display for SimFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} (after {} logged steps)", self.error, self.trace.len())
    }
}

impl std::error::Error for SimFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

impl From<Error> for SimFailure {
    fn from(error: Error) -> Self {
        SimFailure {
            trace: Trace::default(),
            error,
        }
    }
}

struct Eval {
    kappa_r: f64,
    err: ErrorState,
    ctl: Controls,
}

fn evaluate(z: &ClosedLoopState, cfg: &SimConfig) -> Result<Eval> {
    let kappa_r = cfg.path.curvature_at(z.s)?;
    let err = compute_errors(&z.target(cfg.d), &z.reference(), kappa_r);
    let ctl = control(&err, &cfg.gains);
    Ok(Eval { kappa_r, err, ctl })
}

fn rhs(t: f64, a: &[f64; 9], cfg: &SimConfig) -> Result<[f64; 9]> {
    let z = ClosedLoopState::from_array(a);
    let e = evaluate(&z, cfg)?;
    let inp = LoopInputs {
        u1: e.ctl.u1,
        u2: e.ctl.u2,
        vx: cfg.speed.value(t),
        d: cfg.d,
        path: &cfg.path,
    };
    Ok(closed_loop_rhs(&z, &inp)?.to_array())
}

fn row(t: f64, z: &ClosedLoopState, cfg: &SimConfig, p: Option<&SymMatrix2>) -> Result<([f64; 28], Eval)> {
    let e = evaluate(z, cfg)?;
    let vx = cfg.speed.value(t);
    let tg = z.target(cfg.d);
    let v_d = vx * stretch(z.kappa, cfg.d);
    let rho_r = cfg.path.dcurvature_at(z.s)?;
    let pc = physical_controls(e.ctl.u1, e.ctl.u2, v_d, rho_r, z.kappa, z.omega, vx, cfg.d);
    let v = p.map_or(f64::NAN, |p| v_direct([e.err.xi, e.err.eta, e.err.y1, e.err.y2], &cfg.gains, p));
    let r = [
        t, z.s, z.x, z.y, z.psi, z.kappa, tg.p, tg.q, tg.theta, z.omega, z.p_r, z.q_r, z.psi_r, e.kappa_r, e.err.e_p,
        e.err.e_q, e.err.xi, e.err.eta, e.err.y1, e.err.y2, e.ctl.u1, e.ctl.u2, pc.u, pc.rho, pc.rho0, v_d, v,
        e.ctl.sat_arg,
    ];
    Ok((r, e))
}

struct Monitors {
    split_t: f64,
    p: Option<SymMatrix2>,
    violations: usize,
    checked: usize,
    last_saturated: Option<f64>,
    any_row: bool,
    kappa_sup: f64,
    eta_sup: f64,
    bounds_ok: bool,
}

impl Monitors {
    fn observe(&mut self, r: &[f64; 28], e: &Eval, cfg: &SimConfig) {
        let g = &cfg.gains;
        let t = r[col("t")];
        self.any_row = true;
        self.kappa_sup = self.kappa_sup.max(r[col("kappa")].abs());
        self.eta_sup = self.eta_sup.max(e.err.eta.abs());
        if e.ctl.sat_arg.abs() >= 1.0 {
            self.last_saturated = Some(t);
        }
        let tol = 1e-12;
        if e.ctl.u1.abs() > g.c1 * (1.0 + tol) || e.ctl.u2.abs() > g.d_sat * (1.0 + tol) || !(r[col("u")] > 0.0) {
            self.bounds_ok = false;
        }
        if let Some(p) = &self.p {
            if t >= self.split_t && !cfg.monitor.ybox.contains(g.k2, e.err.y1, e.err.y2) {
                self.checked += 1;
                let z = [e.err.xi, e.err.eta, e.err.y1, e.err.y2];
                if !vdot_decrease_check(z, e.kappa_r, g, p).holds {
                    self.violations += 1;
                }
            }
        }
    }
}

/// Integrate the closed loop from `t = 0` to `t_end`, logging every step.
///
/// Controls are evaluated inside the vector field, so the feedback is
/// continuous rather than held over a step. The decrease monitor uses the
/// chain-rule derivative of `V` in rescaled time, i.e. `dV/dt / v_d`.
pub fn run(cfg: &SimConfig) -> std::result::Result<SimOutput, SimFailure> {
    cfg.validate()?;
    let mut z = init_states(cfg)?;
    let p = riccati_solve_default(cfg.gains.k1, cfg.gains.k2).ok().map(|s| s.p);
    let n = cfg.steps();
    let mut trace = Trace {
        rows: Vec::with_capacity(n + 1),
    };
    let mut mon = Monitors {
        split_t: cfg.monitor.split * cfg.t_end,
        p,
        violations: 0,
        checked: 0,
        last_saturated: None,
        any_row: false,
        kappa_sup: 0.0,
        eta_sup: 0.0,
        bounds_ok: true,
    };
    let fail = |trace: Trace, error: Error| SimFailure {
        trace,
        error: name_component(error, &ClosedLoopState::NAMES),
    };

    let mut last_eval = None;
    for i in 0..=n {
        let t = i as f64 * cfg.dt;
        let (r, e) = match row(t, &z, cfg, p.as_ref()) {
            Ok(v) => v,
            Err(err) => return Err(fail(trace, err)),
        };
        // Derived columns can overflow while the state itself is still finite.
        let skip_v = p.is_none();
        if let Some(c) = (0..r.len()).find(|&c| !r[c].is_finite() && !(skip_v && c == col("V"))) {
            let err = Error::Blowup {
                t,
                component: TRACE_COLUMNS[c].to_string(),
            };
            return Err(SimFailure { trace, error: err });
        }
        mon.observe(&r, &e, cfg);
        trace.rows.push(r);
        last_eval = Some(e);
        if i == n {
            break;
        }
        match rk4_step(&z.to_array(), t, cfg.dt, |tt, a| rhs(tt, a, cfg)) {
            Ok(a) => z = ClosedLoopState::from_array(&a),
            Err(err) => return Err(fail(trace, err)),
        }
    }

    let e = last_eval.expect("at least one row is logged");
    let sat_deactivation_time = match mon.last_saturated {
        None => Some(0.0),
        Some(ts) if ts + 0.5 * cfg.dt < n as f64 * cfg.dt => Some(ts + cfg.dt),
        Some(_) => None,
    };
    let trap_level = blowup_margin(cfg.d, cfg.path.kappa_max(), mon.eta_sup)
        .ok()
        .and_then(|b| b.trap_level);
    let report = MonitorReport {
        v_decrease_violations: mon.p.map(|_| mon.violations),
        v_decrease_checked: mon.checked,
        sat_deactivation_time,
        kappa_sup: mon.kappa_sup,
        eta_sup: mon.eta_sup,
        control_bounds_ok: mon.bounds_ok,
        final_error_norm: e.err.e_p.hypot(e.err.e_q),
        xi_final: e.err.xi,
        eta_final: e.err.eta,
        final_state: z,
        trap_level,
        warnings: cfg.warnings(),
    };
    debug_assert!(mon.any_row);
    Ok(SimOutput { trace, report })
}
