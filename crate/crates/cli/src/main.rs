use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use tpf_core::analysis::certificate::certify;
use tpf_core::config::Config;
use tpf_core::controller::synthesize_gains;
use tpf_core::sim::{self, SweepAxis};
use tpf_core::Error;

const EXIT_OK: u8 = 0;
const EXIT_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_BLOWUP: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "tpf", version, about = "Target-point path following: simulate, synthesize gains, certify, sweep")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug)]
struct Global {
    /// TOML configuration file. Built-in defaults are used when omitted.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, short, global = true, default_value = "out")]
    out: PathBuf,
    /// Seed for randomized parts; overrides sim.seed and analysis.seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Suppress everything but errors on the terminal.
    #[arg(long, short, global = true)]
    quiet: bool,
    /// Override a config key, e.g. `--set sim.dt=5e-4`. Repeatable.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE", global = true)]
    overrides: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Run the closed loop; writes trace.csv, monitors.csv and report.txt.
    Simulate,
    /// Synthesize theorem-mode gains from (k2, beta, D).
    Gains(GainsArgs),
    /// Run every numerical check for the configured gains; writes certificate.csv.
    Certify,
    /// One run per value of a parameter; writes sweep.csv.
    Sweep(SweepArgs),
}

#[derive(Args, Debug)]
struct GainsArgs {
    #[arg(long)]
    k2: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Outer saturation level.
    #[arg(long = "D", alias = "d-sat")]
    d_sat: Option<f64>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// One of k2, D, dt, xi0, kappa_max, d.
    #[arg(long)]
    axis: String,
    /// Comma-separated values.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    values: Vec<f64>,
}

/// Error carrying the exit code it maps to.
struct Failure {
    code: u8,
    err: anyhow::Error,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Config(_) | Error::Parameter(_) | Error::H1Violated(_) | Error::Init(_) => EXIT_CONFIG,
            Error::Blowup { .. } => EXIT_BLOWUP,
            _ => EXIT_FAILED,
        };
        Failure { code, err: e.into() }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(err: anyhow::Error) -> Self {
        Failure { code: EXIT_FAILED, err }
    }
}

type CmdResult = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            ExitCode::from(f.code)
        }
    }
}

fn dispatch(cli: &Cli) -> CmdResult {
    match &cli.cmd {
        Cmd::Simulate => simulate(&cli.global),
        Cmd::Gains(a) => gains(&cli.global, a),
        Cmd::Certify => certify_cmd(&cli.global),
        Cmd::Sweep(a) => sweep(&cli.global, a),
    }
}

fn load(g: &Global) -> Result<Config, Failure> {
    let mut overrides = g.overrides.clone();
    if let Some(s) = g.seed {
        overrides.push(format!("sim.seed={s}"));
        overrides.push(format!("analysis.seed={s}"));
    }
    let cfg = match &g.config {
        Some(p) => Config::load(p, &overrides)?,
        None => Config::parse("", Path::new("."), &overrides, std::env::vars())?,
    };
    Ok(cfg)
}

fn out_file(dir: &Path, name: &str) -> anyhow::Result<BufWriter<File>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let p = dir.join(name);
    let f = File::create(&p).with_context(|| format!("creating {}", p.display()))?;
    Ok(BufWriter::new(f))
}

fn write_text(dir: &Path, name: &str, text: &str) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let p = dir.join(name);
    fs::write(&p, text).with_context(|| format!("writing {}", p.display()))
}

fn say(g: &Global, msg: &str) {
    if !g.quiet {
        print!("{msg}");
    }
}

fn warn(g: &Global, warnings: &[String]) {
    if !g.quiet {
        for w in warnings {
            eprintln!("{w}");
        }
    }
}

fn simulate(g: &Global) -> CmdResult {
    let cfg = load(g)?.sim_config()?;
    warn(g, &cfg.warnings());
    match sim::run(&cfg) {
        Ok(out) => {
            out.trace.write_csv(out_file(&g.out, "trace.csv")?)?;
            out.report.write_csv(out_file(&g.out, "monitors.csv")?)?;
            let text = out.report.text();
            write_text(&g.out, "report.txt", &text)?;
            say(g, &text);
            Ok(if out.report.passed() { EXIT_OK } else { EXIT_FAILED })
        }
        Err(f) => {
            f.trace.write_csv(out_file(&g.out, "trace.csv")?)?;
            let mut text = String::new();
            for w in cfg.warnings() {
                text.push_str(&w);
                text.push('\n');
            }
            text.push_str(&format!("run failed: {f}\n"));
            write_text(&g.out, "report.txt", &text)?;
            Err(f.error.into())
        }
    }
}

fn gains(g: &Global, a: &GainsArgs) -> CmdResult {
    let (k2, beta, d) = if g.config.is_some() || !g.overrides.is_empty() {
        let c = load(g)?;
        let s = &c.file.gains;
        (
            a.k2.or(s.k2).unwrap_or(200.0),
            a.beta.or(s.beta).unwrap_or(8.1),
            a.d_sat.or(s.d_sat).unwrap_or(50.0),
        )
    } else {
        (a.k2.unwrap_or(200.0), a.beta.unwrap_or(8.1), a.d_sat.unwrap_or(50.0))
    };
    let gs = synthesize_gains(k2, beta, d)?;
    let verdict = if gs.smallness_warning() {
        "WARNING: not small enough for saturation deactivation"
    } else {
        "ok"
    };
    say(
        g,
        &format!(
            "k1 = {}\nk2 = {}\nC1 = {}\nC2 = {}\nD  = {}\nM  = {}\nbeta = {}\n1/(k2*D) = {} (limit {}): {verdict}\n",
            gs.k1,
            gs.k2,
            gs.c1,
            gs.c2,
            gs.d_sat,
            gs.m,
            gs.beta,
            gs.smallness(),
            tpf_core::controller::SMALLNESS_LIMIT
        ),
    );
    Ok(EXIT_OK)
}

fn certify_cmd(g: &Global) -> CmdResult {
    let c = load(g)?;
    let cfg = c.sim_config()?;
    let opts = c.certify_options();
    let cert = certify(&cfg.gains, cfg.path.kappa_max(), cfg.d, &opts)?;
    cert.write_csv(out_file(&g.out, "certificate.csv")?)?;
    let summary = cert.summary();
    write_text(&g.out, "summary.txt", &summary)?;
    say(g, &summary);
    Ok(if cert.all_pass() { EXIT_OK } else { EXIT_FAILED })
}

fn sweep(g: &Global, a: &SweepArgs) -> CmdResult {
    let c = load(g)?;
    let axis: SweepAxis = a.axis.parse()?;
    if a.values.is_empty() {
        return Err(Error::Config("sweep needs at least one value (--values)".into()).into());
    }
    let base = c.sim_config()?;
    warn(g, &base.warnings());
    let table = sim::sweep(&base, axis, &a.values, c.exec())?;
    table.write_csv(out_file(&g.out, "sweep.csv")?)?;
    let ok = table.rows.iter().filter(|r| r.outcome.is_ok()).count();
    say(
        g,
        &format!("sweep over {axis}: {} rows, {ok} completed, all passed = {}\n", table.rows.len(), table.all_ok()),
    );
    Ok(if table.all_ok() { EXIT_OK } else { EXIT_FAILED })
}
