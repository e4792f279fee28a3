//! CSV and JSON-lines writers. Every CSV starts with a `# schema` comment.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::CliResult;

pub const SUMMARY_COLUMNS: [&str; 10] =
    ["scenario", "seed", "trials", "abort_rate", "mean_qber", "mean_keylen", "eps_corr", "eps_secr", "eps_global", "wall_ms"];

pub const SWEEP_COLUMNS: [&str; 8] =
    ["axis", "value", "trials", "mean_rate", "rate_radius", "abort_rate", "abort_radius", "mean_qber"];

pub const AUDIT_COLUMNS: [&str; 11] = [
    "name",
    "eps_corr",
    "eps_secr",
    "eps_global",
    "claimed_corr",
    "claimed_secr",
    "completeness",
    "theorem",
    "robustness",
    "verdict",
    "expected",
];

/// Writes `rows` as CSV under a `# schema <kind> v<version>` line.
pub fn write_csv<W: Write, T: Serialize>(out: W, kind: &str, rows: &[T]) -> CliResult<()> {
    let mut out = out;
    writeln!(out, "# schema {kind} v{}", crate::runner::SCHEMA_VERSION)?;
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_jsonl<W: Write, T: Serialize>(mut out: W, rows: &[T]) -> CliResult<()> {
    for row in rows {
        serde_json::to_writer(&mut out, row)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn create(dir: &Path, file: &str) -> CliResult<BufWriter<File>> {
    std::fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(file))?))
}
