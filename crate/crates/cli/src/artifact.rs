//! Artifact files. JSON artifacts are objects {"header": .., "data": ..};
//! CSV artifacts start with one `#`-prefixed line holding the header JSON.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::CliError;

pub const FORMAT: &str = "kochergin-artifact/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub format: String,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub config: RunConfig,
}

impl Header {
    pub fn new(config: &RunConfig) -> Self {
        Header {
            format: FORMAT.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config_hash: config_hash(config),
            seed: config.seed,
            config: config.clone(),
        }
    }
}

/// SHA-256 of the compact JSON serialization of the config.
pub fn config_hash(config: &RunConfig) -> String {
    let bytes = serde_json::to_vec(config).expect("config serializes");
    hex::encode(Sha256::digest(&bytes))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    /// File name used with --out.
    pub name: String,
    pub bytes: Vec<u8>,
}

pub fn json<T: Serialize>(header: &Header, name: &str, data: &T) -> Result<Artifact, CliError> {
    #[derive(Serialize)]
    struct Doc<'a, T> {
        header: &'a Header,
        data: &'a T,
    }
    let mut bytes = serde_json::to_vec_pretty(&Doc { header, data }).map_err(|e| CliError::Runtime(e.to_string()))?;
    bytes.push(b'\n');
    Ok(Artifact { name: format!("{name}.json"), bytes })
}

/// `columns` is the CSV header row; each record must match it.
pub fn csv<R: AsRef<[String]>>(header: &Header, name: &str, columns: &[&str], rows: &[R]) -> Result<Artifact, CliError> {
    let mut bytes = b"#".to_vec();
    bytes.extend(serde_json::to_vec(header).map_err(|e| CliError::Runtime(e.to_string()))?);
    bytes.push(b'\n');
    {
        let mut w = csv::Writer::from_writer(&mut bytes);
        let io = |e: csv::Error| CliError::Runtime(e.to_string());
        w.write_record(columns).map_err(io)?;
        for r in rows {
            w.write_record(r.as_ref()).map_err(io)?;
        }
        w.flush().map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    Ok(Artifact { name: format!("{name}.csv"), bytes })
}

/// Shortest round-trip formatting, so CSV values are exact.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

/// Reads the header from an artifact file (either format) or from a
/// concatenation of artifacts as printed on stdout.
pub fn read_header(bytes: &[u8]) -> Result<Header, CliError> {
    let text = std::str::from_utf8(bytes).map_err(|_| CliError::Config("artifact is not UTF-8".into()))?;
    let bad = |e: serde_json::Error| CliError::Config(format!("artifact header: {e}"));
    if let Some(rest) = text.strip_prefix('#') {
        let line = rest.lines().next().unwrap_or("");
        return serde_json::from_str(line).map_err(bad);
    }
    // first JSON document only
    let mut stream = serde_json::Deserializer::from_str(text).into_iter::<serde_json::Value>();
    let doc = stream.next().ok_or_else(|| CliError::Config("empty artifact".into()))?.map_err(bad)?;
    let h = doc.get("header").cloned().ok_or_else(|| CliError::Config("artifact has no header".into()))?;
    serde_json::from_value(h).map_err(bad)
}
