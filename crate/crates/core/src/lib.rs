//! Permissioned ledger for identity-based and role-based access control
//! over off-chain datasets.

pub mod access;
pub mod bibac;
pub mod brbac;
pub mod canonical;
pub mod chain;
pub mod config;
pub mod engine;
pub mod error;
pub mod gateway;
pub mod identity;
pub mod ledger;
pub mod netdef;
pub mod network;
pub mod state;

pub use chain::{Block, HistorianFilter, HistorianRecord, TxEnvelope, TxResult, TxStatus};
pub use engine::Engine;
pub use error::{Error, ErrorCode, Result};
pub use identity::{IdentityCard, KeyFile, KeyPair};
pub use ledger::{Clock, Ledger, ManualClock, Outcome, SystemClock};
pub use netdef::NetworkModel;
pub use state::WorldState;
