//! Arclength-parameterized reference paths described by their curvature
//! profile `kappa(s)`.

use std::f64::consts::PI;
use std::path::Path as FsPath;

use crate::{Error, Result};

/// Points used when validating the declared bounds.
pub const VALIDATION_SAMPLES: usize = 10_000;

/// Relative slack allowed when the sampled profile touches a declared bound.
const BOUND_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum PathKind {
    Line,
    Circle { kappa0: f64 },
    /// `kappa(s) = amplitude * sin(2 pi freq s)`.
    Sine { amplitude: f64, freq: f64 },
    /// `kappa(s) = kappa0 + sharpness * s` for `s` in `[s_start, s_end]`.
    Clothoid {
        kappa0: f64,
        sharpness: f64,
        s_start: f64,
        s_end: f64,
    },
    /// Piecewise-linear interpolation of sampled `(s, kappa)` pairs.
    Table { s: Vec<f64>, kappa: Vec<f64> },
}

/// A validated reference path. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSpec {
    kind: PathKind,
    kappa_max: f64,
    rho_r_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum H1Verdict {
    Ok { margin: f64 },
    Violated { d_kappa_max: f64 },
}

impl H1Verdict {
    pub fn is_ok(&self) -> bool {
        matches!(self, H1Verdict::Ok { .. })
    }
}

impl PathSpec {
    /// Build a path and check the declared bounds by dense sampling.
    pub fn new(kind: PathKind, kappa_max: f64, rho_r_max: f64) -> Result<Self> {
        if !(kappa_max > 0.0 && kappa_max.is_finite()) {
            return Err(Error::param(format!("kappa_max must be positive, got {kappa_max}")));
        }
        if !(rho_r_max > 0.0 && rho_r_max.is_finite()) {
            return Err(Error::param(format!("rho_r_max must be positive, got {rho_r_max}")));
        }
        check_kind(&kind)?;
        let spec = PathSpec {
            kind,
            kappa_max,
            rho_r_max,
        };
        spec.check_bounds()?;
        Ok(spec)
    }

    pub fn line(kappa_max: f64, rho_r_max: f64) -> Result<Self> {
        Self::new(PathKind::Line, kappa_max, rho_r_max)
    }

    pub fn circle(kappa0: f64, kappa_max: f64, rho_r_max: f64) -> Result<Self> {
        Self::new(PathKind::Circle { kappa0 }, kappa_max, rho_r_max)
    }

    /// Sine profile with bounds set to the exact amplitude / slope maxima.
    pub fn sine(amplitude: f64, freq: f64) -> Result<Self> {
        let kappa_max = amplitude.abs();
        let rho = 2.0 * PI * freq.abs() * amplitude.abs();
        Self::new(PathKind::Sine { amplitude, freq }, kappa_max, rho)
    }

    /// Load a `(s, kappa)` table from a CSV file with header `s,kappa`.
    pub fn table_from_csv(file: &FsPath, kappa_max: f64, rho_r_max: f64) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(file)?;
        let headers = rdr.headers()?.clone();
        let is = headers.iter().position(|h| h.trim() == "s");
        let ik = headers.iter().position(|h| h.trim() == "kappa");
        let (is, ik) = match (is, ik) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(Error::config(format!(
                    "{}: table needs columns `s` and `kappa`",
                    file.display()
                )))
            }
        };
        let mut s = Vec::new();
        let mut kappa = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let parse = |i: usize| -> Result<f64> {
                rec.get(i)
                    .and_then(|v| v.trim().parse::<f64>().ok())
                    .ok_or_else(|| {
                        Error::config(format!("{}: bad number on data row {}", file.display(), line + 1))
                    })
            };
            s.push(parse(is)?);
            kappa.push(parse(ik)?);
        }
        Self::new(PathKind::Table { s, kappa }, kappa_max, rho_r_max)
    }

    pub fn kind(&self) -> &PathKind {
        &self.kind
    }

    pub fn kappa_max(&self) -> f64 {
        self.kappa_max
    }

    pub fn rho_r_max(&self) -> f64 {
        self.rho_r_max
    }

    /// Arclength domain; unbounded kinds report infinities.
    pub fn domain(&self) -> (f64, f64) {
        match &self.kind {
            PathKind::Clothoid { s_start, s_end, .. } => (*s_start, *s_end),
            PathKind::Table { s, .. } => (s[0], s[s.len() - 1]),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    fn in_domain(&self, s: f64) -> Result<()> {
        let (lo, hi) = self.domain();
        if s.is_nan() || s < lo || s > hi {
            return Err(Error::Domain { s, lo, hi });
        }
        Ok(())
    }

    /// Reference curvature `kappa_r*(s)`.
    pub fn curvature_at(&self, s: f64) -> Result<f64> {
        self.in_domain(s)?;
        Ok(match &self.kind {
            PathKind::Line => 0.0,
            PathKind::Circle { kappa0 } => *kappa0,
            PathKind::Sine { amplitude, freq } => amplitude * (2.0 * PI * freq * s).sin(),
            PathKind::Clothoid {
                kappa0, sharpness, ..
            } => kappa0 + sharpness * s,
            PathKind::Table { s: ss, kappa } => {
                let i = segment(ss, s);
                let w = (s - ss[i]) / (ss[i + 1] - ss[i]);
                kappa[i] + w * (kappa[i + 1] - kappa[i])
            }
        })
    }

    /// Curvature rate `d kappa_r* / ds`. At table breakpoints the right-hand
    /// derivative is returned (left-hand at the final sample).
    pub fn dcurvature_at(&self, s: f64) -> Result<f64> {
        self.in_domain(s)?;
        Ok(match &self.kind {
            PathKind::Line | PathKind::Circle { .. } => 0.0,
            PathKind::Sine { amplitude, freq } => {
                let w = 2.0 * PI * freq;
                amplitude * w * (w * s).cos()
            }
            PathKind::Clothoid { sharpness, .. } => *sharpness,
            PathKind::Table { s: ss, kappa } => {
                let i = segment(ss, s);
                (kappa[i + 1] - kappa[i]) / (ss[i + 1] - ss[i])
            }
        })
    }

    /// Arclength window used for bound validation.
    fn sample_window(&self) -> (f64, f64) {
        match &self.kind {
            PathKind::Sine { freq, .. } if *freq != 0.0 => (0.0, 1.0 / freq.abs()),
            PathKind::Clothoid { s_start, s_end, .. } => (*s_start, *s_end),
            PathKind::Table { s, .. } => (s[0], s[s.len() - 1]),
            _ => (0.0, 1.0),
        }
    }

    /// Iterator over the `n` evenly spaced validation points.
    pub fn sample_points(&self, n: usize) -> impl Iterator<Item = f64> {
        let (lo, hi) = self.sample_window();
        let n = n.max(2);
        (0..n).map(move |i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
    }

    fn check_bounds(&self) -> Result<()> {
        let kmax = self.kappa_max * (1.0 + BOUND_SLACK);
        let rmax = self.rho_r_max * (1.0 + BOUND_SLACK);
        let mut points: Vec<f64> = self.sample_points(VALIDATION_SAMPLES).collect();
        if let PathKind::Table { s, .. } = &self.kind {
            points.extend_from_slice(s);
        }
        for s in points {
            let k = self.curvature_at(s)?;
            if k.abs() > kmax {
                return Err(Error::param(format!(
                    "|kappa({s})| = {} exceeds kappa_max = {}",
                    k.abs(),
                    self.kappa_max
                )));
            }
            let r = self.dcurvature_at(s)?;
            if r.abs() > rmax {
                return Err(Error::param(format!(
                    "|dkappa/ds({s})| = {} exceeds rho_r_max = {}",
                    r.abs(),
                    self.rho_r_max
                )));
            }
        }
        Ok(())
    }
}

/// Check the target-offset condition `d * kappa_max < 1`.
pub fn validate_h1(spec: &PathSpec, d: f64) -> H1Verdict {
    h1_verdict(spec.kappa_max(), d)
}

pub fn h1_verdict(kappa_max: f64, d: f64) -> H1Verdict {
    let prod = d * kappa_max;
    if prod < 1.0 {
        H1Verdict::Ok { margin: 1.0 - prod }
    } else {
        H1Verdict::Violated { d_kappa_max: prod }
    }
}

fn check_kind(kind: &PathKind) -> Result<()> {
    let finite = |name: &str, v: f64| {
        if v.is_finite() {
            Ok(())
        } else {
            Err(Error::param(format!("{name} must be finite")))
        }
    };
    match kind {
        PathKind::Line => Ok(()),
        PathKind::Circle { kappa0 } => finite("kappa0", *kappa0),
        PathKind::Sine { amplitude, freq } => {
            finite("amplitude", *amplitude)?;
            finite("freq", *freq)
        }
        PathKind::Clothoid {
            kappa0,
            sharpness,
            s_start,
            s_end,
        } => {
            finite("kappa0", *kappa0)?;
            finite("sharpness", *sharpness)?;
            finite("s_start", *s_start)?;
            finite("s_end", *s_end)?;
            if s_end <= s_start {
                return Err(Error::param("clothoid needs s_end > s_start"));
            }
            Ok(())
        }
        PathKind::Table { s, kappa } => {
            if s.len() < 2 || s.len() != kappa.len() {
                return Err(Error::param("table needs at least two (s, kappa) rows"));
            }
            if s.iter().chain(kappa).any(|v| !v.is_finite()) {
                return Err(Error::param("table contains non-finite values"));
            }
            if s.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::param("table s values must be strictly increasing"));
            }
            Ok(())
        }
    }
}

/// Index `i` of the table segment `[s_i, s_{i+1})` containing `s`; the last
/// sample maps to the final segment.
fn segment(ss: &[f64], s: f64) -> usize {
    let n = ss.len();
    let i = ss.partition_point(|&x| x <= s);
    i.saturating_sub(1).min(n - 2)
}
