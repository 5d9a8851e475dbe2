//! Binary model checkpoints.
//!
//! Layout: `SPINNCK\0`, format version (u32 LE), header length (u32 LE), a
//! JSON header, then the frequency matrix and the parameters as f64 LE.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use simple_pinn_core::cases::CaseConfig;
use simple_pinn_core::{NetworkConfig, NetworkModel};

use crate::error::{CliError, Result};

const MAGIC: &[u8; 8] = b"SPINNCK\0";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Header {
    network: NetworkConfig,
    anneal_step: u64,
    n_frequencies: usize,
    n_params: usize,
    step: u64,
    #[serde(default)]
    case: Option<CaseConfig>,
}

/// A trained model and the case it was trained on.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub model: NetworkModel,
    /// Optimizer steps taken.
    pub step: u64,
    pub case: Option<CaseConfig>,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let m = &self.model;
        let header = Header {
            network: m.config().clone(),
            anneal_step: m.anneal_step(),
            n_frequencies: m.frequencies().len(),
            n_params: m.params().len(),
            step: self.step,
            case: self.case.clone(),
        };
        let json = serde_json::to_vec(&header).expect("header serialises");
        let mut out = Vec::with_capacity(16 + json.len() + 8 * (header.n_frequencies + header.n_params));
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(json.len() as u32).to_le_bytes());
        out.extend_from_slice(&json);
        for x in m.frequencies().iter().chain(m.params()) {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| CliError::Checkpoint(m.to_string());
        if bytes.len() < 16 || &bytes[..8] != MAGIC {
            return Err(bad("not a checkpoint file"));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if version != VERSION {
            return Err(CliError::Checkpoint(format!("format version {version}, expected {VERSION}")));
        }
        let hlen = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
        let body = &bytes[16..];
        if body.len() < hlen {
            return Err(bad("truncated header"));
        }
        let header: Header = serde_json::from_slice(&body[..hlen]).map_err(|e| CliError::Checkpoint(format!("header: {e}")))?;
        let data = &body[hlen..];
        let n = header.n_frequencies + header.n_params;
        if data.len() != 8 * n {
            return Err(CliError::Checkpoint(format!("expected {} data bytes, found {}", 8 * n, data.len())));
        }
        let mut vals = data.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap()));
        let frequencies: Vec<f64> = vals.by_ref().take(header.n_frequencies).collect();
        let params: Vec<f64> = vals.collect();
        let model = NetworkModel::from_parts(header.network, frequencies, params, header.anneal_step)
            .map_err(|e| CliError::Checkpoint(e.to_string()))?;
        Ok(Checkpoint {
            model,
            step: header.step,
            case: header.case,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

/// Write through a temporary sibling and rename over the target.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    let mut f = std::fs::File::create(&tmp).map_err(|e| CliError::io(&tmp, e))?;
    f.write_all(bytes).and_then(|_| f.sync_all()).map_err(|e| CliError::io(&tmp, e))?;
    drop(f);
    std::fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}
