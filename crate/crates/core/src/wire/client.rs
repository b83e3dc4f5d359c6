use std::collections::VecDeque;
use std::io::{self, ErrorKind};
use std::net::{SocketAddr, UdpSocket};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::sync::{Arc, Condvar, Mutex, MutexGuard};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tracing::debug;

use super::{decode, encode, Message, PING};
use crate::interp::{Robot, RobotError, TelemetrySample};
use crate::sim::{CommandResult, Telemetry};

/// Drops whole attempts: with probability `rate` either the command or its
/// ack (chosen by a fair coin) is discarded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossModel {
    pub rate: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClientConfig {
    pub timeout: Duration,
    pub retries: u32,
    pub loss: Option<LossModel>,
    /// How long `telemetry()` waits for a snapshot reflecting the last ack.
    pub telemetry_wait: Duration,
}

impl Default for ClientConfig {
    fn default() -> Self {
        ClientConfig {
            timeout: Duration::from_millis(200),
            retries: 5,
            loss: None,
            telemetry_wait: Duration::from_millis(200),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClientStats {
    pub commands: u64,
    pub transmissions: u64,
    pub dropped_cmds: u64,
    pub dropped_acks: u64,
    pub timeouts: u64,
}

#[derive(Debug)]
struct Ack {
    seq: u32,
    ok: bool,
    blocked: bool,
    err: Option<String>,
    detail: String,
    tick: u64,
}

#[derive(Default)]
struct Latest {
    telemetry: Option<(Telemetry, Instant)>,
    events: VecDeque<(u64, String, Option<String>)>,
}

struct Shared {
    latest: Mutex<Latest>,
    fresh: Condvar,
    stop: AtomicBool,
    malformed: AtomicU64,
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|e| e.into_inner())
}

struct Pending {
    seq: u32,
    bytes: Vec<u8>,
}

/// Stop-and-wait command client with a background receiver for acks,
/// telemetry and events.
pub struct WireClient {
    socket: UdpSocket,
    server: SocketAddr,
    config: ClientConfig,
    next_seq: u32,
    acks: Receiver<Ack>,
    shared: Arc<Shared>,
    rng: Option<ChaCha8Rng>,
    pending: Option<Pending>,
    last_tick: u64,
    stats: ClientStats,
    receiver: Option<JoinHandle<()>>,
}

const MAX_EVENTS: usize = 256;

impl WireClient {
    /// Binds an ephemeral port and announces itself with a PING.
    pub fn connect(server: SocketAddr, config: ClientConfig) -> io::Result<Self> {
        let bind: SocketAddr = if server.is_ipv4() {
            ([0, 0, 0, 0], 0).into()
        } else {
            (std::net::Ipv6Addr::UNSPECIFIED, 0).into()
        };
        let socket = UdpSocket::bind(bind)?;
        let shared = Arc::new(Shared {
            latest: Mutex::new(Latest::default()),
            fresh: Condvar::new(),
            stop: AtomicBool::new(false),
            malformed: AtomicU64::new(0),
        });
        let (tx, rx) = mpsc::channel();
        let recv_socket = socket.try_clone()?;
        recv_socket.set_read_timeout(Some(Duration::from_millis(50)))?;
        let recv_shared = Arc::clone(&shared);
        let receiver = std::thread::Builder::new()
            .name("spark-wire-recv".into())
            .spawn(move || receive_loop(recv_socket, tx, recv_shared))?;
        let mut client = WireClient {
            socket,
            server,
            config,
            next_seq: 1,
            acks: rx,
            shared,
            rng: config.loss.map(|l| ChaCha8Rng::seed_from_u64(l.seed)),
            pending: None,
            last_tick: 0,
            stats: ClientStats::default(),
            receiver: Some(receiver),
        };
        client
            .send_command(PING, &[])
            .map_err(|e| io::Error::new(ErrorKind::TimedOut, e.to_string()))?;
        Ok(client)
    }

    pub fn server(&self) -> SocketAddr {
        self.server
    }

    pub fn stats(&self) -> ClientStats {
        self.stats
    }

    pub fn malformed(&self) -> u64 {
        self.shared.malformed.load(Ordering::Relaxed)
    }

    /// Events received since the last call, as `(tick, kind, detail)`.
    pub fn drain_events(&mut self) -> Vec<(u64, String, Option<String>)> {
        lock(&self.shared.latest).events.drain(..).collect()
    }

    /// Sends one command with a fresh sequence number and waits for its ack.
    pub fn send_command(&mut self, action: &str, args: &[String]) -> Result<CommandResult, RobotError> {
        let seq = self.next_seq;
        self.next_seq = self.next_seq.wrapping_add(1);
        let bytes = encode(&Message::Cmd {
            seq,
            action: action.to_owned(),
            args: args.to_vec(),
        })
        .map_err(|e| RobotError::Transport(e.to_string()))?;
        self.pending = Some(Pending { seq, bytes });
        self.stats.commands += 1;
        self.finish(action)
    }

    /// Retransmits the command that last timed out under its original
    /// sequence number, so the server executes it at most once.
    pub fn retry_pending(&mut self) -> Option<Result<CommandResult, RobotError>> {
        self.pending.as_ref()?;
        Some(self.finish("pending command"))
    }

    fn finish(&mut self, action: &str) -> Result<CommandResult, RobotError> {
        let pending = self.pending.as_ref().expect("caller sets pending");
        let (seq, bytes) = (pending.seq, pending.bytes.clone());
        let ack = self.transact(seq, &bytes, action)?;
        self.pending = None;
        self.last_tick = self.last_tick.max(ack.tick);
        match ack.err {
            Some(err) => Err(RobotError::Rejected(err)),
            None => Ok(CommandResult {
                ok: ack.ok,
                blocked: ack.blocked,
                detail: ack.detail,
            }),
        }
    }

    fn roll_loss(&mut self) -> (bool, bool) {
        let (Some(rng), Some(loss)) = (self.rng.as_mut(), self.config.loss) else {
            return (false, false);
        };
        if !rng.random_bool(loss.rate) {
            return (false, false);
        }
        let cmd = rng.random_bool(0.5);
        (cmd, !cmd)
    }

    fn transact(&mut self, seq: u32, bytes: &[u8], action: &str) -> Result<Ack, RobotError> {
        let attempts = self.config.retries + 1;
        for _ in 0..attempts {
            let (drop_cmd, drop_ack) = self.roll_loss();
            self.stats.transmissions += 1;
            if drop_cmd {
                self.stats.dropped_cmds += 1;
            } else {
                self.socket
                    .send_to(bytes, self.server)
                    .map_err(|e| RobotError::Transport(e.to_string()))?;
            }
            let deadline = Instant::now() + self.config.timeout;
            loop {
                let remaining = deadline.saturating_duration_since(Instant::now());
                if remaining.is_zero() {
                    break;
                }
                match self.acks.recv_timeout(remaining) {
                    Ok(ack) if ack.seq == seq => {
                        if drop_ack {
                            self.stats.dropped_acks += 1;
                            continue;
                        }
                        return Ok(ack);
                    }
                    Ok(_) => continue,
                    Err(RecvTimeoutError::Timeout) => break,
                    Err(RecvTimeoutError::Disconnected) => {
                        return Err(RobotError::Transport("receiver stopped".into()))
                    }
                }
            }
        }
        self.stats.timeouts += 1;
        Err(RobotError::Timeout {
            action: action.to_owned(),
            attempts,
        })
    }

    /// Latest snapshot, waiting briefly for one that reflects the last
    /// acknowledged command.
    pub fn latest_telemetry(&self) -> Result<TelemetrySample, RobotError> {
        let deadline = Instant::now() + self.config.telemetry_wait;
        let mut latest = lock(&self.shared.latest);
        loop {
            let current = latest.telemetry.as_ref().is_some_and(|(t, _)| t.tick >= self.last_tick);
            let remaining = deadline.saturating_duration_since(Instant::now());
            if current || remaining.is_zero() {
                break;
            }
            latest = self
                .shared
                .fresh
                .wait_timeout(latest, remaining)
                .unwrap_or_else(|e| e.into_inner())
                .0;
        }
        latest
            .telemetry
            .as_ref()
            .map(|(t, at)| TelemetrySample {
                telemetry: t.clone(),
                age: at.elapsed(),
            })
            .ok_or(RobotError::NoTelemetry)
    }
}

impl Drop for WireClient {
    fn drop(&mut self) {
        self.shared.stop.store(true, Ordering::SeqCst);
        if let Some(t) = self.receiver.take() {
            let _ = t.join();
        }
    }
}

impl Robot for WireClient {
    fn command(&mut self, action: &str, args: &[String]) -> Result<CommandResult, RobotError> {
        self.send_command(action, args)
    }

    fn telemetry(&mut self) -> Result<TelemetrySample, RobotError> {
        self.latest_telemetry()
    }
}

fn receive_loop(socket: UdpSocket, acks: Sender<Ack>, shared: Arc<Shared>) {
    let mut buf = [0u8; 2048];
    while !shared.stop.load(Ordering::SeqCst) {
        let n = match socket.recv_from(&mut buf) {
            Ok((n, _)) => n,
            Err(e) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => continue,
            Err(e) => {
                debug!("client recv error: {e}");
                continue;
            }
        };
        match decode(&buf[..n]) {
            Ok(Message::Ack {
                seq,
                ok,
                blocked,
                err,
                detail,
                tick,
            }) => {
                let ack = Ack {
                    seq,
                    ok,
                    blocked,
                    err,
                    detail,
                    tick,
                };
                if acks.send(ack).is_err() {
                    return;
                }
            }
            Ok(Message::Telemetry(t)) => {
                let mut latest = lock(&shared.latest);
                let newer = latest.telemetry.as_ref().is_none_or(|(old, _)| t.tick >= old.tick);
                if newer {
                    latest.telemetry = Some((t, Instant::now()));
                    shared.fresh.notify_all();
                }
            }
            Ok(Message::Event { tick, kind, detail }) => {
                let mut latest = lock(&shared.latest);
                if latest.events.len() == MAX_EVENTS {
                    latest.events.pop_front();
                }
                latest.events.push_back((tick, kind, detail));
            }
            Ok(Message::Cmd { .. }) | Err(_) => {
                shared.malformed.fetch_add(1, Ordering::Relaxed);
            }
        }
    }
}
