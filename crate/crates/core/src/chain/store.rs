use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::canonical::{self, CanonicalError};

use super::Block;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("block store i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed block record #{index}: {detail}")]
    Malformed { index: u64, detail: String },
    #[error(transparent)]
    Canonical(#[from] CanonicalError),
}

/// Canonical bytes of a block record, `blockHash` included.
pub fn encode_block(block: &Block) -> Result<Vec<u8>, CanonicalError> {
    canonical::encode(block)
}

/// Decode a block file: a sequence of 4-byte big-endian length prefixes,
/// each followed by that many bytes of canonical JSON.
///
/// Any record that is truncated, fails to parse, or is not byte-identical
/// to its own canonical re-encoding is reported as malformed.
pub fn decode_blocks(bytes: &[u8]) -> Result<Vec<Block>, StoreError> {
    let mut blocks = Vec::new();
    let mut rest = bytes;
    let mut index = 0u64;
    let malformed = |index: u64, detail: String| StoreError::Malformed { index, detail };
    while !rest.is_empty() {
        if rest.len() < 4 {
            return Err(malformed(index, "truncated length prefix".into()));
        }
        let len = u32::from_be_bytes([rest[0], rest[1], rest[2], rest[3]]) as usize;
        rest = &rest[4..];
        if rest.len() < len {
            return Err(malformed(index, format!("record length {len} exceeds remaining {}", rest.len())));
        }
        let (record, tail) = rest.split_at(len);
        rest = tail;

        let value: serde_json::Value =
            serde_json::from_slice(record).map_err(|e| malformed(index, e.to_string()))?;
        let recoded = canonical::to_canonical_bytes(&value).map_err(|e| malformed(index, e.to_string()))?;
        if recoded != record {
            return Err(malformed(index, "record is not in canonical form".into()));
        }
        let block: Block = serde_json::from_value(value).map_err(|e| malformed(index, e.to_string()))?;
        blocks.push(block);
        index += 1;
    }
    Ok(blocks)
}

/// Append-only block file.
#[derive(Debug)]
pub struct BlockStore {
    path: PathBuf,
    file: File,
}

impl BlockStore {
    /// Create a new, empty store. Fails if the file already exists.
    pub fn create(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let path = path.as_ref().to_path_buf();
        let file = OpenOptions::new().create_new(true).append(true).open(&path)?;
        Ok(Self { path, file })
    }

    pub fn open(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let path = path.as_ref().to_path_buf();
        let file = OpenOptions::new().append(true).open(&path)?;
        Ok(Self { path, file })
    }

    pub fn read_all(path: impl AsRef<Path>) -> Result<Vec<Block>, StoreError> {
        let bytes = std::fs::read(path)?;
        decode_blocks(&bytes)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&mut self, block: &Block) -> Result<(), StoreError> {
        let body = encode_block(block)?;
        let len = u32::try_from(body.len()).map_err(|_| StoreError::Malformed {
            index: block.height,
            detail: "block exceeds 4 GiB".into(),
        })?;
        let mut record = Vec::with_capacity(body.len() + 4);
        record.extend_from_slice(&len.to_be_bytes());
        record.extend_from_slice(&body);
        self.file.write_all(&record)?;
        self.file.sync_data()?;
        Ok(())
    }
}
