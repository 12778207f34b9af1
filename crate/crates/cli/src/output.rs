use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliResult;

/// Output directory of one command. Every file carries the config digest.
pub struct Output {
    dir: PathBuf,
    digest: String,
}

impl Output {
    pub fn create(dir: &Path, digest: String) -> CliResult<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Output {
            dir: dir.to_path_buf(),
            digest,
        })
    }

    pub fn digest(&self) -> &str {
        &self.digest
    }

    /// Comment line that starts every text output.
    pub fn header(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# config-digest: {}", self.digest);
        s
    }

    pub fn write(&self, name: &str, contents: &str) -> CliResult<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents)?;
        // a closed stdout must not fail the run
        let _ = writeln!(std::io::stdout(), "wrote {}", path.display());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(value).expect("output serializes");
        text.push('\n');
        self.write(name, &text)
    }
}

/// Quotes a CSV field when it contains a delimiter, quote or newline.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
