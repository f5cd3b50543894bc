use std::fmt;
use std::io::Write;
use std::str::FromStr;

use super::run::{run, MonitorReport};
use super::SimConfig;
use crate::controller::{manual_gains, synthesize_gains, GainMode, Gains};
use crate::exec::Exec;
use crate::path::PathSpec;
use crate::report::{csv_writer, fmt_f64, fmt_opt};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    K2,
    D,
    Dt,
    Xi0,
    KappaMax,
    /// Target-point offset.
    Offset,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::K2 => "k2",
            SweepAxis::D => "D",
            SweepAxis::Dt => "dt",
            SweepAxis::Xi0 => "xi0",
            SweepAxis::KappaMax => "kappa_max",
            SweepAxis::Offset => "d",
        }
    }

    /// Copy of `base` with this axis set to `v`.
    pub fn apply(self, base: &SimConfig, v: f64) -> Result<SimConfig> {
        let mut c = base.clone();
        match self {
            SweepAxis::K2 => c.gains = with_gain(&base.gains, Some(v), None)?,
            SweepAxis::D => c.gains = with_gain(&base.gains, None, Some(v))?,
            SweepAxis::Dt => c.dt = v,
            SweepAxis::Xi0 => c.init.xi0 = v,
            SweepAxis::KappaMax => {
                c.path = PathSpec::new(base.path.kind().clone(), v, base.path.rho_r_max())?;
            }
            SweepAxis::Offset => c.d = v,
        }
        c.validate()?;
        Ok(c)
    }
}

fn with_gain(g: &Gains, k2: Option<f64>, d_sat: Option<f64>) -> Result<Gains> {
    let k2 = k2.unwrap_or(g.k2);
    let d_sat = d_sat.unwrap_or(g.d_sat);
    match g.mode {
        GainMode::Theorem => synthesize_gains(k2, g.beta, d_sat),
        GainMode::Manual => manual_gains(g.k1, k2, g.c1, g.c2, d_sat, g.m),
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "k2" => SweepAxis::K2,
            "D" | "d_sat" => SweepAxis::D,
            "dt" => SweepAxis::Dt,
            "xi0" => SweepAxis::Xi0,
            "kappa_max" => SweepAxis::KappaMax,
            "d" => SweepAxis::Offset,
            other => {
                return Err(Error::config(format!(
                    "unknown sweep axis '{other}' (expected k2, D, dt, xi0, kappa_max or d)"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub outcome: std::result::Result<MonitorReport, String>,
    /// Only on the `dt` axis: `|z(h) - z(h')| / |z(h') - z(h'')|` against the
    /// next two finer rows, on the final closed-loop state.
    pub richardson_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn all_ok(&self) -> bool {
        self.rows.iter().all(|r| r.outcome.as_ref().is_ok_and(|m| m.passed()))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv_writer(w);
        wr.write_record([
            self.axis.name(),
            "status",
            "final_error_norm",
            "xi_final",
            "eta_final",
            "kappa_sup",
            "sat_deactivation_time",
            "v_decrease_violations",
            "control_bounds_ok",
            "passed",
            "richardson_ratio",
            "error",
        ])?;
        for r in &self.rows {
            let mut rec = vec![fmt_f64(r.value)];
            match &r.outcome {
                Ok(m) => rec.extend([
                    "ok".to_string(),
                    fmt_f64(m.final_error_norm),
                    fmt_f64(m.xi_final),
                    fmt_f64(m.eta_final),
                    fmt_f64(m.kappa_sup),
                    fmt_opt(m.sat_deactivation_time),
                    m.v_decrease_violations.map(|n| n.to_string()).unwrap_or_default(),
                    m.control_bounds_ok.to_string(),
                    m.passed().to_string(),
                    fmt_opt(r.richardson_ratio),
                    String::new(),
                ]),
                Err(e) => {
                    rec.push("error".into());
                    rec.extend(std::iter::repeat_n(String::new(), 9));
                    rec.push(e.clone());
                }
            }
            wr.write_record(&rec)?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// One independent run per value; rows ordered by value. A failing row is
/// recorded and the sweep carries on.
pub fn sweep(base: &SimConfig, axis: SweepAxis, values: &[f64], exec: Exec) -> Result<SweepTable> {
    if values.is_empty() {
        return Err(Error::config("sweep needs at least one value"));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::config(format!("sweep value {v} is not finite")));
    }
    let mut vals = values.to_vec();
    vals.sort_by(f64::total_cmp);
    vals.dedup();
    let results = exec.map(&vals, |&v| {
        let out = axis
            .apply(base, v)
            .map_err(|e| e.to_string())
            .and_then(|c| run(&c).map_err(|f| f.to_string()));
        out.map(|o| o.report)
    });
    let finals: Vec<Option<[f64; 9]>> = results
        .iter()
        .map(|r| r.as_ref().ok().map(|m| m.final_state.to_array()))
        .collect();
    let rows = vals
        .iter()
        .zip(results)
        .enumerate()
        .map(|(i, (&value, outcome))| SweepRow {
            value,
            outcome,
            richardson_ratio: (axis == SweepAxis::Dt && i >= 2)
                .then(|| richardson(finals[i], finals[i - 1], finals[i - 2]))
                .flatten(),
        })
        .collect();
    Ok(SweepTable { axis, rows })
}

fn richardson(coarse: Option<[f64; 9]>, mid: Option<[f64; 9]>, fine: Option<[f64; 9]>) -> Option<f64> {
    let (c, m, f) = (coarse?, mid?, fine?);
    let dist = |a: &[f64; 9], b: &[f64; 9]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let num = dist(&c, &m);
    let den = dist(&m, &f);
    (den > 0.0).then(|| num / den)
}
