//! CSV metrics. Floats are written in shortest round-trip form, so identical
//! inputs give byte-identical files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::estimate::EstimationTrace;
use crate::sim::StepReport;

pub const TRACE_HEADER: [&str; 6] = ["iter", "rho", "kappa_s", "kappa_b", "loss", "seconds"];
pub const STEP_HEADER: [&str; 5] = ["frame", "iterations", "residual", "potential", "min_distance"];
pub const TRACK_HEADER: [&str; 2] = ["frame", "objective"];

/// Writes `header` and `rows` to `path`, replacing any existing file.
pub fn write_csv<I, R>(path: impl AsRef<Path>, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let path = path.as_ref();
    let io = |e| Error::io(path, e);
    let mut out = BufWriter::new(File::create(path).map_err(io)?);
    writeln!(out, "{}", header.join(",")).map_err(io)?;
    for row in rows {
        let fields: Vec<String> = row.into_iter().collect();
        writeln!(out, "{}", fields.join(",")).map_err(io)?;
    }
    out.into_inner()
        .map_err(|e| Error::io(path, e.into_error()))?
        .sync_all()
        .map_err(io)
}

/// `trace.csv`: one row per Adam iteration.
pub fn write_trace_csv(trace: &EstimationTrace, path: impl AsRef<Path>) -> Result<()> {
    write_csv(
        path,
        &TRACE_HEADER,
        trace.rows.iter().map(|r| {
            [
                r.iter.to_string(),
                r.rho.to_string(),
                r.kappa_s.to_string(),
                r.kappa_b.to_string(),
                r.loss.to_string(),
                r.seconds.to_string(),
            ]
        }),
    )
}

/// Per-step solver statistics; report `k` produced frame `k + 1`. The
/// potential column is the final incremental potential; min_distance is empty
/// without colliders.
pub fn write_step_stats_csv(reports: &[StepReport], path: impl AsRef<Path>) -> Result<()> {
    write_csv(
        path,
        &STEP_HEADER,
        reports.iter().enumerate().map(|(k, r)| {
            [
                (k + 1).to_string(),
                r.iterations.to_string(),
                r.residual.to_string(),
                r.potentials.last().map_or(String::new(), f64::to_string),
                r.min_distance.map_or(String::new(), |d| d.to_string()),
            ]
        }),
    )
}

/// Final tracking objective per tracked frame (frames start at 1).
pub fn write_track_stats_csv(objectives: &[f64], path: impl AsRef<Path>) -> Result<()> {
    write_csv(
        path,
        &TRACK_HEADER,
        objectives
            .iter()
            .enumerate()
            .map(|(k, o)| [(k + 1).to_string(), o.to_string()]),
    )
}
