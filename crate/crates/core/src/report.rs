//! Deterministic CSV formatting shared by every output file.

use std::io::Write;

/// 17 significant digits in scientific notation; `.` separator regardless
/// of locale.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Optional value; empty cell when absent.
pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// CSV writer with `\n` line endings.
pub fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}
