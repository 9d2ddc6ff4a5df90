use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use accessledger::chain::{replay, verify_file, BlockStore};
use accessledger::config::Config;
use accessledger::{gateway, Engine, Error, KeyFile, KeyPair, Ledger, NetworkModel, SystemClock, TxEnvelope};

#[derive(Parser)]
#[command(name = "accessledger", version, about = "Permissioned access-control ledger node and tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a node.
    Node {
        #[command(subcommand)]
        command: NodeCommand,
    },
    /// Identity cards and key files.
    Id {
        #[command(subcommand)]
        command: IdCommand,
    },
    /// Verify every block invariant of a block file. Exits 1 on failure.
    Verify {
        blocks: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Rebuild the world state from a block file and print its hash.
    Replay {
        blocks: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
        /// Print every state record as JSON.
        #[arg(long)]
        dump: bool,
    },
    /// Transaction envelopes.
    Tx {
        #[command(subcommand)]
        command: TxCommand,
    },
}

#[derive(Subcommand)]
enum NodeCommand {
    /// Open or create the ledger and serve the HTTP gateway.
    Start {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Subcommand)]
enum IdCommand {
    /// Generate a key pair and write it as a key file.
    Keygen {
        #[arg(long)]
        participant: String,
        #[arg(long)]
        card: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Issue a new card for a participant, signed by the network admin.
    /// With --blocks the transaction is committed directly to a block file
    /// (the node must be stopped); otherwise the envelope is printed for
    /// submission to POST /api/tx.
    Issue {
        #[arg(long)]
        participant: String,
        #[arg(long)]
        card: String,
        /// Admin key file used to sign the transaction.
        #[arg(long)]
        admin_key: PathBuf,
        /// Where to write the new participant's key file.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        blocks: Option<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum TxCommand {
    /// Build and sign an envelope, printing it as JSON.
    Sign {
        #[arg(long)]
        key: PathBuf,
        #[arg(long = "type")]
        tx_type: String,
        /// Payload JSON object.
        #[arg(long)]
        payload: String,
        #[arg(long)]
        timestamp: Option<u64>,
    },
}

fn engine(model: Option<&Path>) -> Result<Engine, Error> {
    match model {
        Some(p) => Engine::new(NetworkModel::load(p)?),
        None => Ok(Engine::combined()),
    }
}

fn now_ms() -> u64 {
    use accessledger::Clock;
    SystemClock.now_ms()
}

fn print_json(v: &impl serde::Serialize) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Node { command: NodeCommand::Start { config } } => {
            tracing_subscriber::fmt()
                .with_env_filter(
                    tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
                )
                .init();
            let config = Config::load(config)?;
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(gateway::serve(config))?;
        }
        Command::Id { command: IdCommand::Keygen { participant, card, out } } => {
            let key = KeyPair::generate();
            KeyFile::new(card, participant, &key).save(&out)?;
            println!("{}", key.public_key_b64());
        }
        Command::Id { command: IdCommand::Issue { participant, card, admin_key, out, blocks, model } } => {
            let admin = KeyFile::load(&admin_key)?;
            let key = KeyPair::generate();
            let payload = json!({"participantId": participant, "cardId": card, "publicKey": key.public_key_b64()});
            let envelope = TxEnvelope::new("IssueIdentity", payload, admin.participant_id.clone(), now_ms())
                .signed(&admin.key_pair()?)?;
            match blocks {
                Some(path) => {
                    let mut ledger =
                        Ledger::open(&path, Arc::new(engine(model.as_deref())?), Arc::new(SystemClock))?;
                    let outcome = ledger.submit(envelope)?;
                    if let Some(code) = outcome.error_code {
                        eprintln!("IssueIdentity rejected: {code}");
                        return Ok(ExitCode::FAILURE);
                    }
                    println!("issued {card} for {participant} at height {}", ledger.height());
                }
                None => print_json(&envelope),
            }
            KeyFile::new(card, participant, &key).save(&out)?;
        }
        Command::Verify { blocks, model } => match verify_file(&blocks, &engine(model.as_deref())?) {
            Ok((chain, state)) => {
                println!("OK height={} stateHash={}", chain.len() - 1, state.state_hash());
            }
            Err(e) => {
                match e.failure() {
                    Some((height, reason)) => println!("FAILURE height={height} reason={reason}"),
                    None => println!("FAILURE {e}"),
                }
                return Ok(ExitCode::FAILURE);
            }
        },
        Command::Replay { blocks, model, dump } => {
            let chain = BlockStore::read_all(&blocks)?;
            match replay(&chain, &engine(model.as_deref())?) {
                Ok(state) => {
                    if dump {
                        print_json(&state.records().collect::<Vec<_>>());
                    }
                    println!("stateHash={} records={}", state.state_hash(), state.len());
                }
                Err(e) => {
                    println!("{e}");
                    return Ok(ExitCode::FAILURE);
                }
            }
        }
        Command::Tx { command: TxCommand::Sign { key, tx_type, payload, timestamp } } => {
            let file = KeyFile::load(&key)?;
            let payload: Value = serde_json::from_str(&payload)?;
            let envelope = TxEnvelope::new(tx_type, payload, file.participant_id.clone(), timestamp.unwrap_or_else(now_ms))
                .signed(&file.key_pair()?)?;
            print_json(&envelope);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
