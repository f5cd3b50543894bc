//! TOML run configuration.
//!
//! Sections `[path]`, `[vehicle]`, `[gains]`, `[init]`, `[sim]` and
//! `[analysis]`; unknown sections and keys are rejected. Values can be
//! overridden with `section.key=value` strings or `TPF_SECTION_KEY`
//! environment variables, applied in that order after the file.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::analysis::certificate::CertifyOptions;
use crate::analysis::iss::MonteCarloOptions;
use crate::analysis::l2gain::SweepOptions;
use crate::controller::{manual_gains, synthesize_gains, Gains};
use crate::exec::Exec;
use crate::model::SpeedProfile;
use crate::path::{PathKind, PathSpec};
use crate::sim::{InitSpec, MonitorOptions, SimConfig, YBox};
use crate::{Error, Result};

/// Prefix of environment-variable overrides.
pub const ENV_PREFIX: &str = "TPF_";

const SECTIONS: [&str; 6] = ["path", "vehicle", "gains", "init", "sim", "analysis"];

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub path: PathSection,
    #[serde(default)]
    pub vehicle: VehicleSection,
    #[serde(default)]
    pub gains: GainsSection,
    #[serde(default)]
    pub init: InitSection,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathSection {
    /// `line` (default), `circle`, `sine`, `clothoid` or `table`.
    pub kind: Option<String>,
    /// Declared curvature bound [1/m]. Default 0.01; for `sine` the amplitude.
    pub kappa_max: Option<f64>,
    /// Declared bound on `dkappa/ds` [1/m^2]. Default 1e-3; for `sine` the
    /// exact slope bound.
    pub rho_r_max: Option<f64>,
    pub kappa0: Option<f64>,
    pub amplitude: Option<f64>,
    pub freq: Option<f64>,
    pub sharpness: Option<f64>,
    pub s_start: Option<f64>,
    pub s_end: Option<f64>,
    /// CSV file with columns `s,kappa`, relative to the config file.
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleSection {
    /// Target-point offset [m]. Default 2.
    pub d: Option<f64>,
    /// Constant forward speed [m/s]. Default 5. Ignored when `profile` is set.
    pub vx: Option<f64>,
    /// Piecewise-constant speed as `[[t_start, speed], ...]`.
    pub profile: Option<Vec<[f64; 2]>>,
    pub v_min: Option<f64>,
    pub v_max: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainsSection {
    /// `theorem` or `manual`; inferred from the presence of `k1` when absent.
    pub mode: Option<String>,
    /// Default 200.
    pub k2: Option<f64>,
    /// Theorem mode only. Default 8.1.
    pub beta: Option<f64>,
    /// Outer saturation level. Default 50.
    #[serde(rename = "D", alias = "d_sat", alias = "d")]
    pub d_sat: Option<f64>,
    pub k1: Option<f64>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    /// Manual mode only. Default `8.1 * k2`.
    pub m: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitSection {
    pub e_p0: Option<f64>,
    pub e_q0: Option<f64>,
    pub xi0: Option<f64>,
    pub eta0: Option<f64>,
    /// Start from this vehicle curvature instead of deriving it from `eta0`.
    pub kappa0: Option<f64>,
    pub p_r0: Option<f64>,
    pub q_r0: Option<f64>,
    pub psi_r0: Option<f64>,
    pub s0: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    /// Step [s]. Default 1e-3.
    pub dt: Option<f64>,
    /// Horizon [s]. Default 60.
    pub t_end: Option<f64>,
    pub seed: Option<u64>,
    /// Fraction of the horizon after which asymptotic monitors apply. Default 0.5.
    pub monitor_split: Option<f64>,
    pub ybox_c1: Option<f64>,
    pub ybox_c2: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    pub riccati_tol: Option<f64>,
    pub gain_tol: Option<f64>,
    pub sweep_points: Option<usize>,
    pub sweep_span: Option<f64>,
    pub mc_runs: Option<usize>,
    pub mc_segments: Option<usize>,
    pub c_hat: Option<f64>,
    pub bootstrap_c: Option<f64>,
    pub sandwich_samples: Option<usize>,
    pub seed: Option<u64>,
    pub parallel: Option<bool>,
}

/// A parsed configuration together with the directory relative paths
/// resolve against.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub file: ConfigFile,
    pub base_dir: PathBuf,
}

impl Config {
    /// Parse `text`, then apply `overrides` (`section.key=value`) and any
    /// `TPF_SECTION_KEY` pairs from `env`.
    pub fn parse<I, K, V>(text: &str, base_dir: &Path, overrides: &[String], env: I) -> Result<Self>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        // Deserialize the raw text first so errors carry line numbers.
        let _: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut table: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for o in overrides {
            let (key, value) = o
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override '{o}' is not of the form section.key=value")))?;
            let (section, key) = key
                .trim()
                .split_once('.')
                .ok_or_else(|| Error::Config(format!("override key '{key}' is not of the form section.key")))?;
            set(&mut table, section, key, value.trim())?;
        }
        let mut env_pairs: Vec<(String, String)> = env
            .into_iter()
            .filter_map(|(k, v)| {
                let k = k.as_ref().strip_prefix(ENV_PREFIX)?.to_string();
                Some((k, v.as_ref().to_string()))
            })
            .collect();
        env_pairs.sort();
        for (k, v) in env_pairs {
            let lower = k.to_ascii_lowercase();
            let Some((section, key)) = lower.split_once('_') else {
                continue;
            };
            if !SECTIONS.contains(&section) {
                continue;
            }
            set(&mut table, section, key, &v)?;
        }
        let file: ConfigFile = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(format!("after overrides: {}", e.message())))?;
        Ok(Config {
            file,
            base_dir: base_dir.to_path_buf(),
        })
    }

    /// Read a config file, applying overrides and the process environment.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Self::parse(&text, &base, overrides, std::env::vars())
            .map_err(|e| match e {
                Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
                other => other,
            })
    }

    pub fn d(&self) -> f64 {
        self.file.vehicle.d.unwrap_or(2.0)
    }

    pub fn path_spec(&self) -> Result<PathSpec> {
        let p = &self.file.path;
        let kind = p.kind.as_deref().unwrap_or("line");
        let kmax = p.kappa_max.unwrap_or(0.01);
        let rmax = p.rho_r_max.unwrap_or(1e-3);
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| Error::Config(format!("path.{name} is required for kind = \"{kind}\"")))
        };
        match kind {
            "line" => PathSpec::line(kmax, rmax),
            "circle" => PathSpec::circle(need(p.kappa0, "kappa0")?, kmax, rmax),
            "sine" => {
                let (a, f) = (need(p.amplitude, "amplitude")?, need(p.freq, "freq")?);
                if p.kappa_max.is_none() && p.rho_r_max.is_none() {
                    PathSpec::sine(a, f)
                } else {
                    let auto = PathSpec::sine(a, f)?;
                    PathSpec::new(
                        auto.kind().clone(),
                        p.kappa_max.unwrap_or(auto.kappa_max()),
                        p.rho_r_max.unwrap_or(auto.rho_r_max()),
                    )
                }
            }
            "clothoid" => PathSpec::new(
                PathKind::Clothoid {
                    kappa0: p.kappa0.unwrap_or(0.0),
                    sharpness: need(p.sharpness, "sharpness")?,
                    s_start: p.s_start.unwrap_or(0.0),
                    s_end: need(p.s_end, "s_end")?,
                },
                kmax,
                rmax,
            ),
            "table" => {
                let f = p
                    .file
                    .as_ref()
                    .ok_or_else(|| Error::Config("path.file is required for kind = \"table\"".into()))?;
                PathSpec::table_from_csv(&self.base_dir.join(f), kmax, rmax)
            }
            other => Err(Error::Config(format!(
                "path.kind = \"{other}\" is not one of line, circle, sine, clothoid, table"
            ))),
        }
    }

    pub fn speed(&self) -> Result<SpeedProfile> {
        let v = &self.file.vehicle;
        match &v.profile {
            Some(segs) => {
                let segs: Vec<(f64, f64)> = segs.iter().map(|s| (s[0], s[1])).collect();
                let lo = v.v_min.unwrap_or_else(|| segs.iter().map(|s| s.1).fold(f64::INFINITY, f64::min));
                let hi = v.v_max.unwrap_or_else(|| segs.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max));
                SpeedProfile::piecewise(lo, hi, segs)
            }
            None => SpeedProfile::constant(v.vx.unwrap_or(5.0)),
        }
    }

    pub fn gains(&self) -> Result<Gains> {
        let g = &self.file.gains;
        let mode = match g.mode.as_deref() {
            Some(m) => m.to_string(),
            None if g.k1.is_some() => "manual".into(),
            None => "theorem".into(),
        };
        let k2 = g.k2.unwrap_or(200.0);
        let d_sat = g.d_sat.unwrap_or(50.0);
        match mode.as_str() {
            "theorem" => {
                for (name, v) in [("k1", g.k1), ("c1", g.c1), ("c2", g.c2), ("m", g.m)] {
                    if v.is_some() {
                        return Err(Error::Config(format!("gains.{name} is only valid with mode = \"manual\"")));
                    }
                }
                synthesize_gains(k2, g.beta.unwrap_or(8.1), d_sat)
            }
            "manual" => {
                if g.beta.is_some() {
                    return Err(Error::Config(
                        "gains.beta is only valid with mode = \"theorem\"; give m instead".into(),
                    ));
                }
                let need = |v: Option<f64>, name: &str| {
                    v.ok_or_else(|| Error::Config(format!("gains.{name} is required with mode = \"manual\"")))
                };
                manual_gains(
                    need(g.k1, "k1")?,
                    k2,
                    need(g.c1, "c1")?,
                    need(g.c2, "c2")?,
                    d_sat,
                    g.m.unwrap_or(8.1 * k2),
                )
            }
            other => Err(Error::Config(format!("gains.mode = \"{other}\" is not theorem or manual"))),
        }
    }

    pub fn init(&self) -> InitSpec {
        let i = &self.file.init;
        InitSpec {
            e_p0: i.e_p0.unwrap_or(0.0),
            e_q0: i.e_q0.unwrap_or(0.0),
            xi0: i.xi0.unwrap_or(0.0),
            eta0: i.eta0.unwrap_or(0.0),
            kappa0: i.kappa0,
            p_r0: i.p_r0.unwrap_or(0.0),
            q_r0: i.q_r0.unwrap_or(0.0),
            psi_r0: i.psi_r0.unwrap_or(0.0),
            s0: i.s0.unwrap_or(0.0),
        }
    }

    /// Validated simulation config.
    pub fn sim_config(&self) -> Result<SimConfig> {
        let s = &self.file.sim;
        let defaults = YBox::default();
        let cfg = SimConfig {
            d: self.d(),
            speed: self.speed()?,
            path: self.path_spec()?,
            gains: self.gains()?,
            init: self.init(),
            dt: s.dt.unwrap_or(1e-3),
            t_end: s.t_end.unwrap_or(60.0),
            seed: s.seed.unwrap_or(0),
            monitor: MonitorOptions {
                split: s.monitor_split.unwrap_or(0.5),
                ybox: YBox {
                    c1: s.ybox_c1.unwrap_or(defaults.c1),
                    c2: s.ybox_c2.unwrap_or(defaults.c2),
                },
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn certify_options(&self) -> CertifyOptions {
        let a = &self.file.analysis;
        let d = CertifyOptions::default();
        let sw = SweepOptions::default();
        let mc = MonteCarloOptions::default();
        let seed = a.seed.unwrap_or(d.seed);
        CertifyOptions {
            riccati_tol: a.riccati_tol.unwrap_or(d.riccati_tol),
            gain_tol: a.gain_tol.unwrap_or(d.gain_tol),
            sweep: SweepOptions {
                points: a.sweep_points.unwrap_or(sw.points),
                span: a.sweep_span.unwrap_or(sw.span),
                ..sw
            },
            monte_carlo: MonteCarloOptions {
                runs: a.mc_runs.unwrap_or(mc.runs),
                segments: a.mc_segments.unwrap_or(mc.segments),
                seed: a.seed.unwrap_or(mc.seed),
                ..mc
            },
            c_hat: a.c_hat.unwrap_or(d.c_hat),
            bootstrap_c: a.bootstrap_c.unwrap_or(d.bootstrap_c),
            sandwich_samples: a.sandwich_samples.unwrap_or(d.sandwich_samples),
            seed,
            exec: self.exec(),
        }
    }

    pub fn exec(&self) -> Exec {
        if self.file.analysis.parallel.unwrap_or(true) {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

fn set(table: &mut toml::Table, section: &str, key: &str, raw: &str) -> Result<()> {
    if !SECTIONS.contains(&section) {
        return Err(Error::Config(format!("unknown section '{section}' in override")));
    }
    let value = parse_value(raw);
    let entry = table
        .entry(section.to_string())
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    match entry {
        toml::Value::Table(t) => {
            t.insert(key.to_string(), value);
            Ok(())
        }
        _ => Err(Error::Config(format!("'{section}' is not a section"))),
    }
}

/// A TOML literal if it parses as one, otherwise a bare string.
fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}
