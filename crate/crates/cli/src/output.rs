//! Deterministic artifact writing: JSON with floats at 17 significant
//! digits, CSV with LF endings and '.' decimals, and the run manifest.

use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

/// JSON formatter printing every float in scientific notation with 17
/// significant digits, so identical results give identical bytes.
struct SciFormatter;

impl serde_json::ser::Formatter for SciFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + Write,
    {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> io::Result<()>
    where
        W: ?Sized + Write,
    {
        write!(writer, "{value:.16e}")
    }
}

/// Compact deterministic JSON with the fixed float format and a trailing
/// newline.
pub fn to_json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut out = Vec::new();
    let mut serializer = serde_json::Serializer::with_formatter(&mut out, SciFormatter);
    value
        .serialize(&mut serializer)
        .map_err(|e| CliError::Config(format!("serialization failed: {e}")))?;
    out.push(b'\n');
    Ok(out)
}

/// Two-column CSV with a header row; rejects empty series.
pub fn plot_data(header: (&str, &str), series: &[(f64, f64)]) -> Result<String, CliError> {
    if series.is_empty() {
        return Err(CliError::EmptySeries);
    }
    let mut out = format!("{},{}\n", header.0, header.1);
    for (x, y) in series {
        out.push_str(&format!("{x},{y}\n"));
    }
    Ok(out)
}

/// Output directory tracking every artifact it writes.
pub struct OutDir {
    dir: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(CliError::Io)?;
        Ok(OutDir {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let bytes = to_json_bytes(value)?;
        std::fs::write(self.dir.join(name), bytes).map_err(CliError::Io)?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn write_csv(&mut self, name: &str, content: &str) -> Result<(), CliError> {
        std::fs::write(self.dir.join(name), content.as_bytes()).map_err(CliError::Io)?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn files(&self) -> Vec<String> {
        self.written.clone()
    }
}

/// One pass/fail line of an experiment.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl CheckResult {
    pub fn new(name: impl Into<String>, pass: bool) -> Self {
        CheckResult {
            name: name.into(),
            pass,
            value: None,
            detail: None,
        }
    }

    pub fn with_value(mut self, value: f64) -> Self {
        self.value = Some(value);
        self
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool_version: &'static str,
    pub experiment: String,
    pub config_digest: String,
    pub seed: u64,
    pub workers: usize,
    pub all_passed: bool,
    pub checks: Vec<CheckResult>,
    pub artifacts: Vec<String>,
    /// Wall-clock seconds; the only field that varies between identical
    /// runs.
    pub wall_time_s: f64,
}
