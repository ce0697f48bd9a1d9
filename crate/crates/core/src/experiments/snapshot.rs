//! Snapshot files: one line of compact JSON header terminated by `\n`, then
//! the raw little-endian `f64` payload, field after field, row-major.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField};
use crate::solver::ModelParams;

pub const FORMAT: &str = "pmchem-snapshot";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub format: String,
    pub version: u32,
    pub grid: GridSpec,
    pub params: ModelParams,
    pub time: f64,
    pub fields: Vec<String>,
    pub byte_order: String,
    /// `sha256:<hex>` of the payload.
    pub checksum: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotFile {
    pub header: SnapshotHeader,
    pub fields: Vec<ScalarField>,
}

fn checksum(payload: &[u8]) -> String {
    let digest = Sha256::digest(payload);
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    format!("sha256:{hex}")
}

impl SnapshotFile {
    pub fn new(params: &ModelParams, time: f64, named: Vec<(&str, ScalarField)>) -> Result<Self> {
        let grid = *named
            .first()
            .ok_or_else(|| Error::invalid("snapshot needs at least one field"))?
            .1
            .grid();
        for (_, f) in &named {
            grid.check_same(f.grid())?;
        }
        let names = named.iter().map(|(n, _)| n.to_string()).collect();
        let fields: Vec<ScalarField> = named.into_iter().map(|(_, f)| f).collect();
        let payload = payload_bytes(&fields);
        Ok(SnapshotFile {
            header: SnapshotHeader {
                format: FORMAT.into(),
                version: 1,
                grid,
                params: *params,
                time,
                fields: names,
                byte_order: "little-endian".into(),
                checksum: checksum(&payload),
            },
            fields,
        })
    }

    pub fn field(&self, name: &str) -> Option<&ScalarField> {
        self.header
            .fields
            .iter()
            .position(|n| n == name)
            .map(|i| &self.fields[i])
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = serde_json::to_vec(&self.header)?;
        out.push(b'\n');
        out.extend(payload_bytes(&self.fields));
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8], origin: &Path) -> Result<Self> {
        let fail = |reason: String| Error::Snapshot {
            path: origin.to_path_buf(),
            reason,
        };
        let split = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| fail("missing header terminator".into()))?;
        let header: SnapshotHeader =
            serde_json::from_slice(&bytes[..split]).map_err(|e| fail(format!("bad header: {e}")))?;
        if header.format != FORMAT || header.byte_order != "little-endian" {
            return Err(fail("unsupported format or byte order".into()));
        }
        let payload = &bytes[split + 1..];
        let n = header.grid.len();
        let expected = header.fields.len() * n * 8;
        if payload.len() != expected {
            return Err(fail(format!(
                "payload has {} bytes, expected {expected}",
                payload.len()
            )));
        }
        if checksum(payload) != header.checksum {
            return Err(fail("checksum mismatch".into()));
        }
        let fields = payload
            .chunks_exact(n * 8)
            .map(|chunk| {
                let values = chunk
                    .chunks_exact(8)
                    .map(|b| f64::from_le_bytes(b.try_into().expect("chunk of 8 bytes")))
                    .collect();
                ScalarField::new(header.grid, values)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SnapshotFile { header, fields })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path)?;
        f.write_all(&self.to_bytes()?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?, path)
    }
}

fn payload_bytes(fields: &[ScalarField]) -> Vec<u8> {
    fields
        .iter()
        .flat_map(|f| f.values().iter().flat_map(|x| x.to_le_bytes()))
        .collect()
}
