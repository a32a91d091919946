//! Output plumbing: CSV formatting, content-addressed output records, and
//! the run manifest written alongside every emitted file.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CmdError;

/// Format a real number with 17 significant digits, enough to round-trip
/// a double exactly.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

/// A line-feed-terminated CSV builder (comma separators, header row, LF
/// endings regardless of platform).
pub struct Csv {
    buffer: String,
    columns: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut buffer = String::new();
        buffer.push_str(&header.join(","));
        buffer.push('\n');
        Self {
            buffer,
            columns: header.len(),
        }
    }

    pub fn row(&mut self, fields: &[String]) {
        assert_eq!(
            fields.len(),
            self.columns,
            "CSV row width does not match the header"
        );
        let mut first = true;
        for field in fields {
            debug_assert!(
                !field.contains(',') && !field.contains('\n') && !field.contains('"'),
                "CSV fields are plain tokens by construction"
            );
            if !first {
                self.buffer.push(',');
            }
            let _ = write!(self.buffer, "{field}");
            first = false;
        }
        self.buffer.push('\n');
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buffer.into_bytes()
    }
}

/// A written output file, referenced by content digest.
#[derive(Debug, Clone, Serialize)]
pub struct OutputRecord {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

fn hex(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(2 * bytes.len());
    for b in bytes {
        let _ = write!(s, "{b:02x}");
    }
    s
}

/// Write `contents` to `path` and return its digest record.
pub fn write_tracked(path: &Path, contents: &[u8]) -> Result<OutputRecord, CmdError> {
    fs::write(path, contents)
        .map_err(|e| CmdError::Io(format!("cannot write {}: {e}", path.display())))?;
    Ok(OutputRecord {
        path: path.display().to_string(),
        sha256: hex(&Sha256::digest(contents)),
        bytes: contents.len() as u64,
    })
}

/// Manifest location for a given output file: the output path with its
/// extension replaced by `manifest.json`.
pub fn manifest_path(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}

/// Provenance record for one CLI run: inputs, resolved configuration, and
/// digests of every emitted file.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    /// Tool name.
    pub tool: &'static str,
    /// Crate version.
    pub version: &'static str,
    /// Subcommand that produced the outputs.
    pub command: String,
    /// RFC 3339 start timestamp (UTC).
    pub started_at: String,
    /// RFC 3339 end timestamp (UTC).
    pub finished_at: String,
    /// Master seed after overrides, when the command uses one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Worker threads used.
    pub threads: usize,
    /// Resolved experiment configuration in TOML (round-trips through the
    /// config parser), when the command takes one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_toml: Option<String>,
    /// Every emitted result file with its content digest.
    pub outputs: Vec<OutputRecord>,
    /// Command-specific result summary.
    pub summary: serde_json::Value,
}

impl RunManifest {
    /// Serialize and write the manifest next to `out`.
    pub fn write_alongside(&self, out: &Path) -> Result<OutputRecord, CmdError> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| CmdError::Io(format!("cannot serialize manifest: {e}")))?;
        write_tracked(&manifest_path(out), text.as_bytes())
    }
}

/// UTC timestamp in RFC 3339 with millisecond precision.
pub fn now_rfc3339() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_uses_lf_and_matches_the_header_width() {
        let mut csv = Csv::new(&["a", "b"]);
        csv.row(&["1".into(), format_real(0.5)]);
        let text = String::from_utf8(csv.into_bytes()).unwrap();
        assert_eq!(text, "a,b\n1,5.0000000000000000e-1\n");
        assert!(!text.contains('\r'));
    }

    #[test]
    fn reals_round_trip_exactly() {
        for &x in &[0.05, 1.0 / 3.0, -0.3120127868184543, 1e-300, 0.0] {
            let s = format_real(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
    }

    #[test]
    fn manifest_path_replaces_the_extension() {
        assert_eq!(
            manifest_path(Path::new("/tmp/power.csv")),
            PathBuf::from("/tmp/power.manifest.json")
        );
        assert_eq!(
            manifest_path(Path::new("report.json")),
            PathBuf::from("report.manifest.json")
        );
    }

    #[test]
    fn digests_are_stable() {
        let dir = std::env::temp_dir().join("gpptest-emit-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("x.csv");
        let rec = write_tracked(&path, b"a,b\n").unwrap();
        assert_eq!(rec.bytes, 4);
        assert_eq!(
            rec.sha256,
            // sha256 of "a,b\n"
            write_tracked(&path, b"a,b\n").unwrap().sha256
        );
        std::fs::remove_file(&path).ok();
    }
}
