use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::HarnessError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Expected {
    Safe,
    Unsafe,
    Unknown,
}

impl Expected {
    pub fn name(self) -> &'static str {
        match self {
            Expected::Safe => "safe",
            Expected::Unsafe => "unsafe",
            Expected::Unknown => "unknown",
        }
    }
}

impl FromStr for Expected {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "safe" => Ok(Expected::Safe),
            "unsafe" => Ok(Expected::Unsafe),
            "unknown" => Ok(Expected::Unknown),
            _ => Err(format!("unknown verdict `{s}`")),
        }
    }
}

impl fmt::Display for Expected {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One `.mc` file with its header annotations:
///
/// ```text
/// // VERDICT: safe
/// // MAX-K: 8
/// // TIMEOUT-S: 30
/// ```
#[derive(Clone, Debug)]
pub struct Task {
    pub path: PathBuf,
    pub name: String,
    pub source: String,
    pub expected: Expected,
    pub max_k: Option<usize>,
    pub timeout_s: Option<u64>,
}

impl Task {
    pub fn from_source(name: &str, source: &str) -> Result<Self, HarnessError> {
        let mut task = Task {
            path: PathBuf::from(name),
            name: name.to_string(),
            source: source.to_string(),
            expected: Expected::Unknown,
            max_k: None,
            timeout_s: None,
        };
        for line in source.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let Some(comment) = line.strip_prefix("//") else { break };
            let Some((key, value)) = comment.split_once(':') else { continue };
            let value = value.trim();
            let bad = |what: &str| HarnessError::Header(format!("{name}: bad {what} `{value}`"));
            match key.trim() {
                "VERDICT" => task.expected = value.parse().map_err(|_| bad("VERDICT"))?,
                "MAX-K" => task.max_k = Some(value.parse().map_err(|_| bad("MAX-K"))?),
                "TIMEOUT-S" => task.timeout_s = Some(value.parse().map_err(|_| bad("TIMEOUT-S"))?),
                _ => {}
            }
        }
        Ok(task)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let source = fs::read_to_string(path)
            .map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        let mut t = Task::from_source(&name, &source)?;
        t.path = path.to_path_buf();
        Ok(t)
    }
}

/// Every `.mc` file in `dir`, sorted by name.
pub fn load_corpus(dir: &Path) -> Result<Vec<Task>, HarnessError> {
    let entries = fs::read_dir(dir).map_err(|e| HarnessError::Io(format!("{}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "mc"))
        .collect();
    paths.sort();
    paths.iter().map(|p| Task::load(p)).collect()
}
