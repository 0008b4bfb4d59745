//! Report files. CSV reals are written as `{:.16e}` (17 significant digits)
//! with `\n` line endings, so equal inputs give byte-equal files.

use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;
use wormald_core::analysis::{DeviationReport, GumbelReport, ScalingReport};
use wormald_core::ode::Trajectory;

pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn writer(path: &Path) -> io::Result<csv::Writer<fs::File>> {
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path)?)
}

fn finish(mut w: csv::Writer<fs::File>) -> io::Result<()> {
    w.flush()
}

/// `s,z0,...,z{a-1}`
pub fn write_trajectory(path: &Path, traj: &Trajectory) -> io::Result<()> {
    let mut w = writer(path)?;
    let mut header = vec!["s".to_string()];
    header.extend((0..traj.dim()).map(|l| format!("z{l}")));
    w.write_record(&header)?;
    for p in traj.points() {
        w.write_record(std::iter::once(fmt_real(p.s)).chain(p.z.iter().map(|&v| fmt_real(v))))?;
    }
    finish(w)
}

/// `run,sup_dev,argmax_s,z0_dev,...`
pub fn write_deviations(path: &Path, reports: &[DeviationReport]) -> io::Result<()> {
    let mut w = writer(path)?;
    let dim = reports.first().map_or(0, |r| r.per_coordinate.len());
    let mut header = vec!["run".to_string(), "sup_dev".into(), "argmax_s".into()];
    header.extend((0..dim).map(|l| format!("z{l}_dev")));
    w.write_record(&header)?;
    for r in reports {
        let mut row = vec![r.run_index.to_string(), fmt_real(r.sup_deviation), fmt_real(r.argmax_s)];
        row.extend(r.per_coordinate.iter().map(|&v| fmt_real(v)));
        w.write_record(&row)?;
    }
    finish(w)
}

/// `n,runs,mean_sup_dev,stderr`
pub fn write_scaling(path: &Path, report: &ScalingReport) -> io::Result<()> {
    let mut w = writer(path)?;
    w.write_record(["n", "runs", "mean_sup_dev", "stderr"])?;
    for r in &report.rows {
        w.write_record([r.n.to_string(), r.runs.to_string(), fmt_real(r.mean_sup_dev), fmt_real(r.std_error)])?;
    }
    finish(w)
}

/// `c,empirical,stderr,ref_paper,ref_classical,exact`. `ref_paper` holds
/// `1 - exp(-exp(-exp(c)))`; `exact` is empty when the oracle was not computed.
pub fn write_gumbel(path: &Path, report: &GumbelReport) -> io::Result<()> {
    let mut w = writer(path)?;
    w.write_record(["c", "empirical", "stderr", "ref_paper", "ref_classical", "exact"])?;
    for r in &report.rows {
        w.write_record([
            fmt_real(r.c),
            fmt_real(r.empirical),
            fmt_real(r.std_error),
            fmt_real(r.reference_nested),
            fmt_real(r.reference_classical),
            r.exact.map(fmt_real).unwrap_or_default(),
        ])?;
    }
    finish(w)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_format_has_17_digits() {
        assert_eq!(fmt_real(1.0), "1.0000000000000000e0");
        assert_eq!(fmt_real(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_real(-2.5e-300), "-2.5000000000000000e-300");
    }
}
