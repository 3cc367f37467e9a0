//! Versioned JSON and CSV outputs, each carrying its provenance.

use std::path::Path;
use std::sync::Arc;

use cosearch::engine::{OracleTable, ResourceUnit, SearchOptions, SearchTrace};
use cosearch::simbench::{ArchTruth, GroundTruth, HardwareProfile, KeyTruth};
use cosearch::space::{SearchSpaceConfig, SpaceIndex, SubgraphKey};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::{sha256_json, RunConfig};
use crate::error::{CliError, Result};

pub const FORMAT_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const BENCHMARK_FORMAT: &str = "cosearch-benchmark";
pub const TRACE_FORMAT: &str = "cosearch-trace";
pub const ORACLE_FORMAT: &str = "cosearch-oracle";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub format: String,
    pub version: u32,
    pub tool_version: String,
    pub seed: u64,
    pub profile: String,
    /// Hash of (seed, space, profile): files built on the same benchmark agree.
    pub benchmark_hash: String,
    /// Hash of the full configuration that produced the file.
    pub config_hash: String,
}

impl Provenance {
    pub fn new(format: &str, config: &RunConfig) -> Result<Self> {
        Ok(Self {
            format: format.into(),
            version: FORMAT_VERSION,
            tool_version: TOOL_VERSION.into(),
            seed: config.seed,
            profile: config.profile.clone(),
            benchmark_hash: config.benchmark_hash()?,
            config_hash: config.config_hash()?,
        })
    }

    fn check_version(&self, path: &Path) -> Result<()> {
        if self.version != FORMAT_VERSION {
            return Err(CliError::parse(
                path,
                format!("format version {} is not supported (this build reads {FORMAT_VERSION})", self.version),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyRow {
    pub key: SubgraphKey,
    #[serde(flatten)]
    pub truth: KeyTruth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkFile {
    pub provenance: Provenance,
    pub space: SearchSpaceConfig,
    pub profile: HardwareProfile,
    /// Per architecture, in id order.
    pub archs: Vec<ArchTruth>,
    /// Per distinct subgraph, in id order.
    pub keys: Vec<KeyRow>,
    /// Hash of the two tables, to catch edits.
    pub tables_hash: String,
}

fn tables_hash(archs: &[ArchTruth], keys: &[KeyRow]) -> String {
    sha256_json(&(archs, keys))
}

impl BenchmarkFile {
    pub fn new(config: &RunConfig, truth: &GroundTruth) -> Result<Self> {
        let index = truth.index();
        let archs = truth.arch_tables().to_vec();
        let keys: Vec<KeyRow> =
            index.keys().iter().zip(truth.key_tables()).map(|(k, t)| KeyRow { key: *k, truth: *t }).collect();
        Ok(Self {
            provenance: Provenance::new(BENCHMARK_FORMAT, config)?,
            space: index.config().clone(),
            profile: truth.profile().clone(),
            tables_hash: tables_hash(&archs, &keys),
            archs,
            keys,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let file: Self = read_typed(path, BENCHMARK_FORMAT)?;
        file.provenance.check_version(path)?;
        if tables_hash(&file.archs, &file.keys) != file.tables_hash {
            return Err(CliError::Provenance(format!("{}: tables do not match their recorded hash", path.display())));
        }
        Ok(file)
    }

    /// Rebuilds the ground truth, checking the key table against the space.
    pub fn truth(&self) -> Result<GroundTruth> {
        let index = Arc::new(SpaceIndex::new(self.space.clone())?);
        if index.keys().len() != self.keys.len() || index.keys().iter().zip(&self.keys).any(|(k, row)| *k != row.key) {
            return Err(CliError::config("benchmark subgraph table does not match its search space"));
        }
        Ok(GroundTruth::from_tables(
            self.provenance.seed,
            index,
            self.profile.clone(),
            self.archs.clone(),
            self.keys.iter().map(|r| r.truth).collect(),
        )?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceFile {
    pub provenance: Provenance,
    pub space: SearchSpaceConfig,
    pub options: SearchOptions,
    pub trace: SearchTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleFile {
    pub provenance: Provenance,
    pub space: SearchSpaceConfig,
    /// Unit the oracle ledger is reported in.
    pub unit: ResourceUnit,
    pub table: OracleTable,
}

/// A file the report command can compare against an oracle.
#[derive(Debug, Clone, PartialEq)]
pub enum ResultFile {
    Trace(TraceFile),
    Oracle(OracleFile),
}

impl ResultFile {
    pub fn provenance(&self) -> &Provenance {
        match self {
            ResultFile::Trace(t) => &t.provenance,
            ResultFile::Oracle(o) => &o.provenance,
        }
    }
}

impl TraceFile {
    pub fn read(path: &Path) -> Result<Self> {
        let file: Self = read_typed(path, TRACE_FORMAT)?;
        file.provenance.check_version(path)?;
        Ok(file)
    }
}

impl OracleFile {
    pub fn read(path: &Path) -> Result<Self> {
        let file: Self = read_typed(path, ORACLE_FORMAT)?;
        file.provenance.check_version(path)?;
        Ok(file)
    }
}

#[derive(Deserialize)]
struct Header {
    provenance: HeaderProvenance,
}

#[derive(Deserialize)]
struct HeaderProvenance {
    format: String,
}

fn read_format(path: &Path) -> Result<String> {
    read_json::<Header>(path).map(|h| h.provenance.format)
}

/// Checks the declared format before parsing the body, so a file of the wrong
/// kind is reported as such rather than as a missing field.
fn read_typed<T: DeserializeOwned>(path: &Path, expected: &str) -> Result<T> {
    let found = read_format(path)?;
    if found != expected {
        return Err(CliError::parse(path, format!("expected a {expected} file, found '{found}'")));
    }
    read_json(path)
}

pub fn read_result(path: &Path) -> Result<ResultFile> {
    match read_format(path)?.as_str() {
        TRACE_FORMAT => TraceFile::read(path).map(ResultFile::Trace),
        ORACLE_FORMAT => OracleFile::read(path).map(ResultFile::Oracle),
        other => Err(CliError::parse(path, format!("'{other}' is not a search trace or oracle table"))),
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| {
        CliError::parse(path, format!("line {}, column {}: {e}", e.line(), e.column()))
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("outputs serialize");
    bytes.push(b'\n');
    write_bytes(path, &bytes)
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

/// CSV with a leading `# key=value` provenance comment line.
pub fn write_csv<R: Serialize>(path: &Path, provenance: &Provenance, rows: &[R]) -> Result<()> {
    let mut out = format!(
        "# format={} version={} tool_version={} seed={} profile={} benchmark_hash={} config_hash={}\n",
        provenance.format,
        provenance.version,
        provenance.tool_version,
        provenance.seed,
        provenance.profile,
        provenance.benchmark_hash,
        provenance.config_hash
    )
    .into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        for row in rows {
            w.serialize(row).map_err(|e| CliError::parse(path, e.to_string()))?;
        }
        w.flush().map_err(|e| CliError::io(path, e))?;
    }
    write_bytes(path, &out)
}
