//! Output plumbing. Every document carries a `generated_unix` stamp — the
//! one field allowed to differ between reruns with identical inputs; all
//! other bytes are deterministic for a fixed (config, seed).

use anyhow::{Context, Result};
use serde::Serialize;
use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

pub fn now_unix() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Pretty JSON to the given path, or stdout when no path is set.
pub fn write_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).context("serializing output")?;
    match out {
        Some(path) => {
            std::fs::write(path, text + "\n")
                .with_context(|| format!("writing {}", path.display()))?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            writeln!(lock, "{text}").context("writing stdout")?;
        }
    }
    Ok(())
}

/// CSV table with a timestamp comment header.
pub struct Csv {
    lines: Vec<String>,
}

impl Csv {
    pub fn new(columns: &[&str]) -> Self {
        Self { lines: vec![format!("# generated_unix: {}", now_unix()), columns.join(",")] }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.lines.push(fields.join(","));
    }

    pub fn write(self, out: Option<&Path>) -> Result<()> {
        let text = self.lines.join("\n") + "\n";
        match out {
            Some(path) => std::fs::write(path, text)
                .with_context(|| format!("writing {}", path.display()))?,
            None => {
                let stdout = std::io::stdout();
                let mut lock = stdout.lock();
                write!(lock, "{text}").context("writing stdout")?;
            }
        }
        Ok(())
    }
}

/// Shortest round-trip representation; exact reparse guaranteed.
pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}
