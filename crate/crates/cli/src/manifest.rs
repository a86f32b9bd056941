use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Record of one run; `argv` alone reproduces it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Arguments after the program name.
    pub argv: Vec<String>,
    pub seed: Option<u64>,
    /// Effective options including defaults.
    pub config: serde_json::Value,
    /// Files written to the report directory, in creation order.
    pub outputs: Vec<String>,
    pub wall_time_secs: f64,
}

pub fn version_string() -> String {
    format!("v{}", env!("CARGO_PKG_VERSION"))
}

impl Manifest {
    pub fn save(&self, dir: &Path) -> CliResult<PathBuf> {
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, text + "\n").map_err(|e| CliError::io(format!("cannot write {}", path.display()), e))?;
        Ok(path)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(format!("cannot read {}", path.display()), e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

fn flag_value_index(argv: &[String], flag: &str) -> Option<usize> {
    argv.iter().position(|a| a == flag).map(|i| i + 1).filter(|&i| i < argv.len())
}

fn set_flag(argv: &mut Vec<String>, flag: &str, value: String) {
    let eq = format!("{flag}=");
    if let Some(i) = flag_value_index(argv, flag) {
        argv[i] = value;
    } else if let Some(pos) = argv.iter().position(|a| a.starts_with(&eq)) {
        argv[pos] = format!("{eq}{value}");
    } else {
        argv.push(flag.to_string());
        argv.push(value);
    }
}

fn get_flag(argv: &[String], flag: &str) -> Option<String> {
    let eq = format!("{flag}=");
    flag_value_index(argv, flag)
        .map(|i| argv[i].clone())
        .or_else(|| argv.iter().find_map(|a| a.strip_prefix(&eq).map(str::to_string)))
}

/// The recorded argv with `--report-dir` replaced and any `--model-out`
/// moved into the new report directory under its original file name.
pub fn replay_argv(manifest: &Manifest, report_dir: Option<&Path>) -> CliResult<Vec<String>> {
    if manifest.command == "rerun" {
        return Err(CliError::Usage("a rerun manifest cannot be replayed".into()));
    }
    let mut argv = manifest.argv.clone();
    if let Some(dir) = report_dir {
        let dir_s = dir.display().to_string();
        set_flag(&mut argv, "--report-dir", dir_s);
        if let Some(old) = get_flag(&argv, "--model-out") {
            let name = Path::new(&old)
                .file_name()
                .ok_or_else(|| CliError::Usage(format!("--model-out {old:?} has no file name")))?;
            set_flag(&mut argv, "--model-out", dir.join(name).display().to_string());
        }
    }
    Ok(argv)
}
