//! Binary model checkpoints.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic           8 bytes  "KGEMODEL"
//! version         u32      1
//! kind            u32      0 = TransE, 1 = DistMult, 2 = RotatE
//! dim             u64
//! entity_count    u64
//! relation_count  u64
//! seed            u64
//! config_hash     u64      caller-defined tag, 0 when unused
//! entity table    f64 × entity_count × entity_width
//! relation table  f64 × relation_count × dim
//! checksum        32 bytes SHA-256 of every preceding byte
//! ```

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::{ModelKind, ModelParams};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"KGEMODEL";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 8 + 4 + 4 + 8 * 5;
const CHECKSUM_LEN: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckpointHeader {
    pub kind: ModelKind,
    pub dim: usize,
    pub entity_count: usize,
    pub relation_count: usize,
    pub seed: u64,
    pub config_hash: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub header: CheckpointHeader,
    pub params: ModelParams,
}

impl Checkpoint {
    pub fn new(params: ModelParams, config_hash: u64) -> Self {
        let header = CheckpointHeader {
            kind: params.kind(),
            dim: params.dim(),
            entity_count: params.entity_count(),
            relation_count: params.relation_count(),
            seed: params.seed(),
            config_hash,
        };
        Checkpoint { header, params }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let h = &self.header;
        let p = &self.params;
        let n_vals = p.entity_table().len() + p.relation_table().len();
        let mut out = Vec::with_capacity(HEADER_LEN + 8 * n_vals + CHECKSUM_LEN);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&h.kind.code().to_le_bytes());
        for v in [
            h.dim as u64,
            h.entity_count as u64,
            h.relation_count as u64,
            h.seed,
            h.config_hash,
        ] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for v in p.entity_table().iter().chain(p.relation_table()) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Checkpoint> {
        let bad = |msg: &str| Error::Checkpoint(msg.to_owned());
        if bytes.len() < HEADER_LEN + CHECKSUM_LEN {
            return Err(bad("file too short"));
        }
        if &bytes[..8] != MAGIC {
            return Err(bad("bad magic bytes"));
        }
        let (body, checksum) = bytes.split_at(bytes.len() - CHECKSUM_LEN);
        if Sha256::digest(body).as_slice() != checksum {
            return Err(bad("checksum mismatch"));
        }
        let u32_at = |o: usize| u32::from_le_bytes(body[o..o + 4].try_into().unwrap());
        let u64_at = |o: usize| u64::from_le_bytes(body[o..o + 8].try_into().unwrap());
        let version = u32_at(8);
        if version != VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let kind = ModelKind::from_code(u32_at(12))
            .ok_or_else(|| Error::Checkpoint(format!("unknown model code {}", u32_at(12))))?;
        let header = CheckpointHeader {
            kind,
            dim: u64_at(16) as usize,
            entity_count: u64_at(24) as usize,
            relation_count: u64_at(32) as usize,
            seed: u64_at(40),
            config_hash: u64_at(48),
        };
        let n_ent = header.entity_count * kind.entity_width(header.dim);
        let n_rel = header.relation_count * header.dim;
        let payload = &body[HEADER_LEN..];
        if payload.len() != 8 * (n_ent + n_rel) {
            return Err(bad("payload length does not match header"));
        }
        let mut values = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
        let entities: Vec<f64> = values.by_ref().take(n_ent).collect();
        let relations: Vec<f64> = values.collect();
        let params = ModelParams::from_raw(
            kind,
            header.dim,
            header.entity_count,
            header.relation_count,
            header.seed,
            entities,
            relations,
        )?;
        Ok(Checkpoint { header, params })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Checkpoint> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Checkpoint::from_bytes(&bytes)
    }

    /// Check the header against what the caller is about to use the model for.
    pub fn validate(&self, kind: ModelKind, entity_count: usize, relation_count: usize) -> Result<()> {
        let h = &self.header;
        if h.kind != kind {
            return Err(Error::Checkpoint(format!(
                "checkpoint holds a {} model, expected {kind}",
                h.kind
            )));
        }
        if h.entity_count != entity_count || h.relation_count != relation_count {
            return Err(Error::Checkpoint(format!(
                "checkpoint sized for {} entities / {} relations, vocabulary has {entity_count} / {relation_count}",
                h.entity_count, h.relation_count
            )));
        }
        Ok(())
    }
}

pub fn save_model(path: &Path, params: &ModelParams, config_hash: u64) -> Result<()> {
    Checkpoint::new(params.clone(), config_hash).write(path)
}

/// Read a checkpoint and check it against the expected model kind and vocabulary size.
pub fn load_model(
    path: &Path,
    kind: ModelKind,
    entity_count: usize,
    relation_count: usize,
) -> Result<ModelParams> {
    let ckpt = Checkpoint::read(path)?;
    ckpt.validate(kind, entity_count, relation_count)?;
    Ok(ckpt.params)
}
