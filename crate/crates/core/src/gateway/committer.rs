//! The single writer. Submissions queue here in arrival order; one thread
//! drains the queue in batches of up to one block and commits them.

use std::sync::Arc;
use std::thread;

use parking_lot::RwLock;
use tokio::sync::{mpsc, oneshot};

use crate::chain::{TxEnvelope, MAX_BLOCK_ENTRIES};
use crate::ledger::{Ledger, Outcome};

const QUEUE_DEPTH: usize = 4096;

struct Job {
    envelope: TxEnvelope,
    reply: oneshot::Sender<Result<Outcome, String>>,
}

#[derive(Clone)]
pub struct Committer {
    queue: mpsc::Sender<Job>,
}

#[derive(Debug, thiserror::Error)]
pub enum CommitError {
    #[error("committer has stopped")]
    Stopped,
    #[error("commit failed: {0}")]
    Ledger(String),
}

impl Committer {
    /// Start the commit thread. It stops once every handle is dropped.
    pub fn spawn(ledger: Arc<RwLock<Ledger>>) -> Self {
        let (queue, mut rx) = mpsc::channel::<Job>(QUEUE_DEPTH);
        thread::Builder::new()
            .name("committer".into())
            .spawn(move || {
                while let Some(first) = rx.blocking_recv() {
                    let mut jobs = vec![first];
                    while jobs.len() < MAX_BLOCK_ENTRIES {
                        match rx.try_recv() {
                            Ok(job) => jobs.push(job),
                            Err(_) => break,
                        }
                    }
                    let envelopes: Vec<TxEnvelope> = jobs.iter().map(|j| j.envelope.clone()).collect();
                    match commit_all(&ledger, &envelopes) {
                        Ok(outcomes) => {
                            for (job, outcome) in jobs.into_iter().zip(outcomes) {
                                let _ = job.reply.send(Ok(outcome));
                            }
                        }
                        Err(e) => {
                            tracing::error!(error = %e, "commit failed");
                            for job in jobs {
                                let _ = job.reply.send(Err(e.to_string()));
                            }
                        }
                    }
                }
            })
            .expect("spawn committer thread");
        Committer { queue }
    }

    /// Queue an envelope and wait until its batch is committed.
    pub async fn submit(&self, envelope: TxEnvelope) -> Result<Outcome, CommitError> {
        let (reply, rx) = oneshot::channel();
        self.queue.send(Job { envelope, reply }).await.map_err(|_| CommitError::Stopped)?;
        rx.await.map_err(|_| CommitError::Stopped)?.map_err(CommitError::Ledger)
    }
}

/// Execution happens under the read lock so queries stay responsive; the
/// write lock is held only to append the sealed block.
fn commit_all(ledger: &RwLock<Ledger>, envelopes: &[TxEnvelope]) -> crate::Result<Vec<Outcome>> {
    let mut outcomes = Vec::with_capacity(envelopes.len());
    let mut rest = envelopes;
    while !rest.is_empty() {
        let prepared = ledger.read().prepare(rest)?;
        rest = &rest[prepared.consumed..];
        outcomes.extend(ledger.write().commit(prepared)?);
    }
    Ok(outcomes)
}
