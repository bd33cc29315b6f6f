//! Output files. Each one opens with a provenance header naming the tool,
//! the command and every resolved setting.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub settings: BTreeMap<String, String>,
}

impl Provenance {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Provenance {
            tool: "hurricat",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            settings: config.entries(),
        }
    }

    /// `# `-prefixed lines for tabular files.
    pub fn comment_block(&self) -> String {
        let mut s = format!("# {} {} {}\n", self.tool, self.version, self.command);
        for (k, v) in &self.settings {
            s.push_str(&format!("# {k}={v}\n"));
        }
        s
    }

    pub fn json_line(&self) -> String {
        format!("{}\n", json!({ "provenance": self }))
    }

    /// `{"provenance": ..., key: body}` pretty-printed.
    pub fn envelope<T: Serialize>(&self, key: &str, body: &T) -> String {
        let mut map = serde_json::Map::new();
        map.insert(
            "provenance".into(),
            serde_json::to_value(self).expect("provenance serializes"),
        );
        map.insert(
            key.into(),
            serde_json::to_value(body).expect("body serializes"),
        );
        format!(
            "{}\n",
            serde_json::to_string_pretty(&Value::Object(map)).expect("json")
        )
    }
}

pub struct OutDir {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(OutDir {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let path = self.root.join(name);
        write_file(&path, contents)?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

/// Tab-separated rows under a header, after the provenance block.
pub fn tsv(prov: &Provenance, header: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = prov.comment_block();
    s.push_str(&header.join("\t"));
    s.push('\n');
    for r in rows {
        s.push_str(&r.join("\t"));
        s.push('\n');
    }
    s
}

/// Fixed six-decimal rendering for tables.
pub fn fmt6(x: f64) -> String {
    format!("{x:.6}")
}
