//! Config echo written next to every run's outputs.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

#[derive(Serialize)]
struct RunConfig<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    subcommand: &'a str,
    args: &'a T,
}

pub enum OutputKind {
    Dir,
    File,
}

/// `dir/run_config.json` for directory outputs, `<file>.run_config.json`
/// beside file outputs.
pub fn echo_path(out: &Path, kind: OutputKind) -> PathBuf {
    match kind {
        OutputKind::Dir => out.join("run_config.json"),
        OutputKind::File => {
            let mut name = out.file_name().unwrap_or_default().to_os_string();
            name.push(".run_config.json");
            out.with_file_name(name)
        }
    }
}

pub fn write_echo<T: Serialize>(subcommand: &str, args: &T, out: &Path, kind: OutputKind) -> Result<PathBuf> {
    let path = echo_path(out, kind);
    let cfg = RunConfig {
        tool: "lof",
        version: env!("CARGO_PKG_VERSION"),
        subcommand,
        args,
    };
    let text = serde_json::to_string_pretty(&cfg)? + "\n";
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}
