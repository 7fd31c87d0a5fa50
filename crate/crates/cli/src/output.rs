use std::fs;
use std::path::{Path, PathBuf};

use restless_core::clifford::SEQUENCE_RNG;
use restless_core::seeds::SIMULATION_RNG;
use serde::Serialize;
use serde_json::{json, Value};

use crate::CliError;

pub const TOOL_VERSION: &str = concat!("restless ", env!("CARGO_PKG_VERSION"));

/// Identifies the inputs that produced an output file.
#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    pub config_hash: String,
    pub master_seed: u64,
    pub tool_version: &'static str,
    pub sequence_rng: &'static str,
    pub simulation_rng: &'static str,
}

impl Provenance {
    pub fn new(config_hash: String, master_seed: u64) -> Self {
        Provenance {
            config_hash,
            master_seed,
            tool_version: TOOL_VERSION,
            sequence_rng: SEQUENCE_RNG,
            simulation_rng: SIMULATION_RNG,
        }
    }

    fn comment_block(&self) -> String {
        format!(
            "# config_hash: {}\n# master_seed: {}\n# tool_version: {}\n# sequence_rng: {}\n# simulation_rng: {}\n",
            self.config_hash, self.master_seed, self.tool_version, self.sequence_rng, self.simulation_rng
        )
    }
}

pub struct OutDir {
    root: PathBuf,
    prov: Provenance,
    written: Vec<PathBuf>,
}

impl OutDir {
    pub fn create(root: &Path, prov: Provenance) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::Io(format!("{}: {e}", root.display())))?;
        Ok(OutDir {
            root: root.to_path_buf(),
            prov,
            written: Vec::new(),
        })
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn put(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.root.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.written.push(path);
        Ok(())
    }

    /// Writes `{"provenance": ..., <data fields>}`; non-object data goes under `"data"`.
    pub fn json<T: Serialize>(&mut self, name: &str, data: &T) -> Result<(), CliError> {
        let mut v = serde_json::to_value(data).map_err(|e| CliError::Io(e.to_string()))?;
        let prov = serde_json::to_value(&self.prov).expect("plain struct");
        let out = match v.as_object_mut() {
            Some(obj) => {
                let mut m = serde_json::Map::new();
                m.insert("provenance".into(), prov);
                m.append(obj);
                Value::Object(m)
            }
            None => json!({ "provenance": prov, "data": v }),
        };
        let mut text = serde_json::to_string_pretty(&out).map_err(|e| CliError::Io(e.to_string()))?;
        text.push('\n');
        self.put(name, text.as_bytes())
    }

    /// CSV with the provenance comment block, any extra `# key: value`
    /// lines, then a header row.
    pub fn csv(&mut self, name: &str, notes: &[(&str, String)], header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        let mut text = self.prov.comment_block();
        for (k, v) in notes {
            text.push_str(&format!("# {k}: {v}\n"));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).map_err(|e| CliError::Io(e.to_string()))?;
        for r in rows {
            w.write_record(r).map_err(|e| CliError::Io(e.to_string()))?;
        }
        let body = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        let mut bytes = text.into_bytes();
        bytes.extend_from_slice(&body);
        self.put(name, &bytes)
    }

    /// Raw bytes produced by a library writer, behind the comment block.
    pub fn csv_from<F>(&mut self, name: &str, write: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut Vec<u8>) -> restless_core::Result<()>,
    {
        let mut bytes = self.prov.comment_block().into_bytes();
        write(&mut bytes).map_err(|e| CliError::Io(e.to_string()))?;
        self.put(name, &bytes)
    }
}

pub fn fmt(v: f64) -> String {
    v.to_string()
}
