//! JSON-over-UDP protocol between an executing program and the simulator.
//!
//! Every datagram is one JSON object carrying `"v": 1` and a `type` tag.
//! Commands are stop-and-wait with retransmission; the server deduplicates
//! by sequence number and answers duplicates with the cached ack.

mod client;
mod server;

pub use client::{ClientConfig, ClientStats, LossModel, WireClient};
pub use server::{serve, ServerConfig, ServerHandle, ServerStats};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::Telemetry;

pub const VERSION: u8 = 1;
pub const MAX_DATAGRAM: usize = 1200;
pub const DEFAULT_PORT: u16 = 9901;
/// No-op command a client sends to announce itself for telemetry.
pub const PING: &str = "PING";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Message {
    Cmd {
        seq: u32,
        action: String,
        #[serde(default)]
        args: Vec<String>,
    },
    Ack {
        seq: u32,
        ok: bool,
        blocked: bool,
        #[serde(default)]
        err: Option<String>,
        #[serde(default)]
        detail: String,
        /// World tick right after the command was applied.
        #[serde(default)]
        tick: u64,
    },
    Telemetry(Telemetry),
    Event {
        tick: u64,
        kind: String,
        #[serde(default)]
        detail: Option<String>,
    },
}

#[derive(Serialize)]
struct Outgoing<'a> {
    v: u8,
    #[serde(flatten)]
    msg: &'a Message,
}

#[derive(Deserialize)]
struct Incoming {
    v: u8,
    #[serde(flatten)]
    msg: Message,
}

#[derive(Debug, Error)]
pub enum WireError {
    #[error("datagram of {0} bytes exceeds the {MAX_DATAGRAM} byte limit")]
    TooLarge(usize),
    #[error("unsupported protocol version {0}")]
    Version(u8),
    #[error("malformed datagram: {0}")]
    Malformed(#[from] serde_json::Error),
}

pub fn encode(msg: &Message) -> Result<Vec<u8>, WireError> {
    let bytes = serde_json::to_vec(&Outgoing { v: VERSION, msg })?;
    if bytes.len() > MAX_DATAGRAM {
        return Err(WireError::TooLarge(bytes.len()));
    }
    Ok(bytes)
}

pub fn decode(bytes: &[u8]) -> Result<Message, WireError> {
    if bytes.len() > MAX_DATAGRAM {
        return Err(WireError::TooLarge(bytes.len()));
    }
    let incoming: Incoming = serde_json::from_slice(bytes)?;
    if incoming.v != VERSION {
        return Err(WireError::Version(incoming.v));
    }
    Ok(incoming.msg)
}
