use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engine::Engine;
use crate::state::WorldState;

use super::{Block, StoreError, GENESIS_PREV_HASH};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FailureReason {
    HashMismatch,
    LinkBroken,
    StateMismatch,
    BadHeight,
    /// The persisted record could not be decoded into a block at all.
    Malformed,
}

impl fmt::Display for FailureReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FailureReason::HashMismatch => "HASH_MISMATCH",
            FailureReason::LinkBroken => "LINK_BROKEN",
            FailureReason::StateMismatch => "STATE_MISMATCH",
            FailureReason::BadHeight => "BAD_HEIGHT",
            FailureReason::Malformed => "MALFORMED",
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum VerifyError {
    #[error("EMPTY_CHAIN")]
    EmptyChain,
    #[error("chain verification failed at height {height}: {reason}")]
    Failure { height: u64, reason: FailureReason },
    #[error("cannot read block file: {0}")]
    Io(#[from] std::io::Error),
}

impl VerifyError {
    pub fn failure(&self) -> Option<(u64, FailureReason)> {
        match self {
            VerifyError::Failure { height, reason } => Some((*height, *reason)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReplayError {
    #[error("EMPTY_CHAIN")]
    EmptyChain,
    #[error("REPLAY_DIVERGENCE at height {height}")]
    Divergence { height: u64 },
}

/// Check every block invariant in height order and return the world state
/// rebuilt along the way. The first offending height is reported.
pub fn verify_chain(blocks: &[Block], engine: &Engine) -> Result<WorldState, VerifyError> {
    if blocks.is_empty() {
        return Err(VerifyError::EmptyChain);
    }
    let mut replayer = Replayer::new(engine);
    let mut expected_prev = GENESIS_PREV_HASH;
    for (index, block) in blocks.iter().enumerate() {
        let fail = |reason| VerifyError::Failure { height: index as u64, reason };
        if block.height != index as u64 {
            return Err(fail(FailureReason::BadHeight));
        }
        match block.compute_hash() {
            Ok(h) if h == block.block_hash => {}
            _ => return Err(fail(FailureReason::HashMismatch)),
        }
        if block.prev_hash != expected_prev {
            return Err(fail(FailureReason::LinkBroken));
        }
        if replayer.apply_block(block).is_err() {
            return Err(fail(FailureReason::StateMismatch));
        }
        expected_prev = &block.block_hash;
    }
    Ok(replayer.state)
}

/// Decode and verify a persisted block file.
pub fn verify_file(path: impl AsRef<Path>, engine: &Engine) -> Result<(Vec<Block>, WorldState), VerifyError> {
    let bytes = std::fs::read(path)?;
    let blocks = match super::decode_blocks(&bytes) {
        Ok(blocks) => blocks,
        Err(StoreError::Malformed { index, .. }) => {
            return Err(VerifyError::Failure { height: index, reason: FailureReason::Malformed })
        }
        Err(StoreError::Io(e)) => return Err(VerifyError::Io(e)),
        Err(StoreError::Canonical(_)) => {
            return Err(VerifyError::Failure { height: 0, reason: FailureReason::Malformed })
        }
    };
    let state = verify_chain(&blocks, engine)?;
    Ok((blocks, state))
}

/// Re-execute every accepted entry against a fresh state. Rejected entries
/// are skipped. After each block the recomputed state hash must equal the
/// recorded one.
pub fn replay(blocks: &[Block], engine: &Engine) -> Result<WorldState, ReplayError> {
    if blocks.is_empty() {
        return Err(ReplayError::EmptyChain);
    }
    let mut replayer = Replayer::new(engine);
    for block in blocks {
        replayer.apply_block(block)?;
    }
    Ok(replayer.state)
}

struct Replayer<'a> {
    engine: &'a Engine,
    state: WorldState,
    seen: HashSet<String>,
}

impl<'a> Replayer<'a> {
    fn new(engine: &'a Engine) -> Self {
        Self { engine, state: WorldState::new(), seen: HashSet::new() }
    }

    fn apply_block(&mut self, block: &Block) -> Result<(), ReplayError> {
        let diverged = ReplayError::Divergence { height: block.height };
        for entry in &block.entries {
            if !self.seen.insert(entry.envelope.tx_id.clone()) {
                return Err(diverged);
            }
            if block.height == 0 {
                let applied = self.engine.apply_genesis(&mut self.state, &entry.envelope);
                if applied.result != entry.result {
                    return Err(diverged);
                }
                continue;
            }
            if !entry.result.is_accepted() {
                continue;
            }
            let applied = self.engine.apply(&mut self.state, &entry.envelope, block.height);
            if !applied.recorded || applied.result != entry.result {
                return Err(diverged);
            }
        }
        if self.state.state_hash() != block.state_hash {
            return Err(diverged);
        }
        Ok(())
    }
}
