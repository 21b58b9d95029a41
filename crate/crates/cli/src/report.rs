//! Deterministic artifact emission.
//!
//! CSV files use '.' decimals and 17 significant digits (full f64
//! round-trip), one column-header row, and a leading comment line with the
//! artifact version and config hash. JSON files are a single object with
//! `schema_version`, `artifact_version`, and `config_sha256` fields.
//! Plot-data files are two-column whitespace-separated `(x, y)` rows.
//! Nothing embeds a timestamp, so identical configs give byte-identical
//! bodies.

use crate::error::CliError;
use serde::Serialize;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

/// Crate version stamped into every output file.
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Version of the emitted file schemas.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Full-roundtrip decimal rendering of an f64 (17 significant digits).
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// One CSV cell.
#[derive(Debug, Clone)]
pub enum Field {
    U(u64),
    F(f64),
    S(&'static str),
}

impl Field {
    fn render(&self) -> String {
        match self {
            Field::U(v) => v.to_string(),
            Field::F(v) => format_f64(*v),
            Field::S(v) => (*v).to_string(),
        }
    }
}

fn header_comment(config_sha256: &str) -> String {
    format!("# geogame v{ARTIFACT_VERSION} config_sha256={config_sha256}\n")
}

fn write_file(path: &Path, body: &str) -> Result<(), CliError> {
    let mut file = std::fs::File::create(path)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))?;
    file.write_all(body.as_bytes())
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

/// Write a CSV table; returns the path for the run summary.
pub fn write_csv(
    dir: &Path,
    name: &str,
    config_sha256: &str,
    columns: &[&str],
    rows: &[Vec<Field>],
) -> Result<PathBuf, CliError> {
    let mut body = header_comment(config_sha256);
    body.push_str(&columns.join(","));
    body.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), columns.len());
        let line: Vec<String> = row.iter().map(Field::render).collect();
        body.push_str(&line.join(","));
        body.push('\n');
    }
    let path = dir.join(name);
    write_file(&path, &body)?;
    Ok(path)
}

/// Write two-column plot data.
pub fn write_dat(
    dir: &Path,
    name: &str,
    config_sha256: &str,
    points: &[(f64, f64)],
) -> Result<PathBuf, CliError> {
    let mut body = header_comment(config_sha256);
    for &(x, y) in points {
        let _ = writeln!(body, "{} {}", format_f64(x), format_f64(y));
    }
    let path = dir.join(name);
    write_file(&path, &body)?;
    Ok(path)
}

#[derive(Serialize)]
struct JsonEnvelope<'a, T: Serialize> {
    schema_version: u32,
    artifact_version: &'static str,
    config_sha256: &'a str,
    #[serde(flatten)]
    body: &'a T,
}

/// Write a JSON report wrapped in the common envelope.
pub fn write_json<T: Serialize>(
    dir: &Path,
    name: &str,
    config_sha256: &str,
    body: &T,
) -> Result<PathBuf, CliError> {
    let envelope = JsonEnvelope {
        schema_version: REPORT_SCHEMA_VERSION,
        artifact_version: ARTIFACT_VERSION,
        config_sha256,
        body,
    };
    let mut text = serde_json::to_string_pretty(&envelope)
        .map_err(|e| CliError::Io(format!("serialization failed: {e}")))?;
    text.push('\n');
    let path = dir.join(name);
    write_file(&path, &text)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_rendering_round_trips() {
        for &x in &[0.025, -19.957_322_735_539_91, 1.0 / 3.0, 9.0, -0.0, 1e-300] {
            let parsed: f64 = format_f64(x).parse().unwrap();
            assert_eq!(parsed.to_bits(), x.to_bits(), "{x} -> {}", format_f64(x));
        }
    }

    #[test]
    fn csv_layout() {
        let dir = std::env::temp_dir().join(format!("geogame-report-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = write_csv(
            &dir,
            "t.csv",
            "abc",
            &["agent", "rate"],
            &[vec![Field::U(0), Field::F(0.025)]],
        )
        .unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# geogame v"));
        assert!(lines[0].ends_with("config_sha256=abc"));
        assert_eq!(lines[1], "agent,rate");
        assert_eq!(lines[2], "0,2.5000000000000001e-2");
        std::fs::remove_dir_all(&dir).ok();
    }
}
