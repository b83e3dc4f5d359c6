use std::collections::{HashMap, VecDeque};
use std::io::{self, ErrorKind};
use std::net::{SocketAddr, ToSocketAddrs, UdpSocket};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use tracing::{debug, warn};

use super::{decode, encode, Message, WireError, PING};
use crate::sim::{is_animation, Telemetry, World, WorldState};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServerConfig {
    pub telemetry_period: Duration,
    /// Recent sequence numbers remembered per peer.
    pub dedup_window: usize,
    pub max_peers: usize,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            telemetry_period: Duration::from_millis(100),
            dedup_window: 64,
            max_peers: 1024,
        }
    }
}

#[derive(Debug, Default)]
pub struct ServerStats {
    pub executed: AtomicU64,
    pub duplicates: AtomicU64,
    pub malformed: AtomicU64,
    pub telemetry_generated: AtomicU64,
    pub telemetry_sent: AtomicU64,
}

impl ServerStats {
    pub fn get(counter: &AtomicU64) -> u64 {
        counter.load(Ordering::Relaxed)
    }
}

struct Shared {
    world: Mutex<World>,
    latest: Mutex<Telemetry>,
    stats: ServerStats,
    shutdown: AtomicBool,
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|e| e.into_inner())
}

/// Running simulator. Dropping the handle stops the loop.
pub struct ServerHandle {
    addr: SocketAddr,
    shared: Arc<Shared>,
    thread: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn world_state(&self) -> WorldState {
        lock(&self.shared.world).state.clone()
    }

    /// Most recently generated telemetry snapshot.
    pub fn telemetry(&self) -> Telemetry {
        lock(&self.shared.latest).clone()
    }

    pub fn stats(&self) -> &ServerStats {
        &self.shared.stats
    }

    pub fn shutdown(mut self) {
        self.stop();
    }

    /// Blocks until the loop exits.
    pub fn join(mut self) {
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }

    fn stop(&mut self) {
        self.shared.shutdown.store(true, Ordering::SeqCst);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        self.stop();
    }
}

/// Binds and starts the simulator loop on its own thread.
pub fn serve(world: World, bind: impl ToSocketAddrs, config: ServerConfig) -> io::Result<ServerHandle> {
    let socket = UdpSocket::bind(bind)?;
    let addr = socket.local_addr()?;
    let shared = Arc::new(Shared {
        latest: Mutex::new(world.sense()),
        world: Mutex::new(world),
        stats: ServerStats::default(),
        shutdown: AtomicBool::new(false),
    });
    let mut server = Loop {
        socket,
        config,
        shared: Arc::clone(&shared),
        peers: HashMap::new(),
        client: None,
        uses: 0,
    };
    let thread = std::thread::Builder::new()
        .name(format!("spark-sim-{}", addr.port()))
        .spawn(move || server.run())?;
    Ok(ServerHandle {
        addr,
        shared,
        thread: Some(thread),
    })
}

#[derive(Default)]
struct PeerWindow {
    acks: VecDeque<(u32, Vec<u8>)>,
    highest: Option<u32>,
    last_use: u64,
}

struct Loop {
    socket: UdpSocket,
    config: ServerConfig,
    shared: Arc<Shared>,
    peers: HashMap<SocketAddr, PeerWindow>,
    client: Option<SocketAddr>,
    uses: u64,
}

impl Loop {
    fn run(&mut self) {
        let period = self.config.telemetry_period;
        let mut next_tick = Instant::now() + period;
        let mut buf = [0u8; 2048];
        while !self.shared.shutdown.load(Ordering::SeqCst) {
            let now = Instant::now();
            if now >= next_tick {
                self.publish();
                next_tick += period;
                if next_tick <= now {
                    next_tick = now + period;
                }
                continue;
            }
            let wait = (next_tick - now).max(Duration::from_millis(1));
            if let Err(e) = self.socket.set_read_timeout(Some(wait)) {
                warn!("cannot set read timeout: {e}");
            }
            match self.socket.recv_from(&mut buf) {
                Ok((n, peer)) => self.datagram(&buf[..n], peer),
                Err(e) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => {}
                Err(e) => debug!("recv error: {e}"),
            }
        }
    }

    fn send(&self, bytes: &[u8], to: SocketAddr) {
        if let Err(e) = self.socket.send_to(bytes, to) {
            debug!("send to {to} failed: {e}");
        }
    }

    fn publish(&mut self) {
        let telemetry = {
            let mut world = lock(&self.shared.world);
            world.tick += 1;
            world.sense()
        };
        self.shared.stats.telemetry_generated.fetch_add(1, Ordering::Relaxed);
        *lock(&self.shared.latest) = telemetry.clone();
        if let Some(client) = self.client {
            self.send_telemetry(telemetry, client);
        }
    }

    fn send_telemetry(&self, mut telemetry: Telemetry, to: SocketAddr) {
        let bytes = match encode(&Message::Telemetry(telemetry.clone())) {
            Err(WireError::TooLarge(_)) => {
                telemetry.found.retain(|_, found| *found);
                encode(&Message::Telemetry(telemetry))
            }
            other => other,
        };
        match bytes {
            Ok(bytes) => {
                self.send(&bytes, to);
                self.shared.stats.telemetry_sent.fetch_add(1, Ordering::Relaxed);
            }
            Err(e) => warn!("telemetry not sent: {e}"),
        }
    }

    fn datagram(&mut self, bytes: &[u8], peer: SocketAddr) {
        let (seq, action, args) = match decode(bytes) {
            Ok(Message::Cmd { seq, action, args }) => (seq, action, args),
            Ok(other) => {
                debug!("unexpected {other:?} from {peer}");
                self.shared.stats.malformed.fetch_add(1, Ordering::Relaxed);
                return;
            }
            Err(e) => {
                debug!("dropping datagram from {peer}: {e}");
                self.shared.stats.malformed.fetch_add(1, Ordering::Relaxed);
                return;
            }
        };
        self.client = Some(peer);
        self.uses += 1;
        let window = self.config.dedup_window as u64;
        let uses = self.uses;
        let entry = self.peers.entry(peer).or_default();
        entry.last_use = uses;
        if let Some((_, ack)) = entry.acks.iter().find(|(s, _)| *s == seq) {
            let ack = ack.clone();
            self.shared.stats.duplicates.fetch_add(1, Ordering::Relaxed);
            self.send(&ack, peer);
            return;
        }
        if entry.highest.is_some_and(|h| seq <= h && u64::from(h - seq) >= window) {
            self.shared.stats.duplicates.fetch_add(1, Ordering::Relaxed);
            return;
        }

        let (ack, events, telemetry) = self.execute(seq, &action, &args);
        let ack = encode(&ack).expect("acks fit in a datagram");
        let entry = self.peers.get_mut(&peer).expect("entry inserted above");
        entry.highest = Some(entry.highest.map_or(seq, |h| h.max(seq)));
        entry.acks.push_back((seq, ack.clone()));
        while entry.acks.len() > self.config.dedup_window {
            entry.acks.pop_front();
        }
        self.evict_peers();

        self.send(&ack, peer);
        for event in events {
            if let Ok(bytes) = encode(&event) {
                self.send(&bytes, peer);
            }
        }
        *lock(&self.shared.latest) = telemetry.clone();
        self.send_telemetry(telemetry, peer);
    }

    fn execute(&self, seq: u32, action: &str, args: &[String]) -> (Message, Vec<Message>, Telemetry) {
        let mut world = lock(&self.shared.world);
        let mut events = vec![];
        let ack = if action == PING {
            Message::Ack {
                seq,
                ok: true,
                blocked: false,
                err: None,
                detail: "pong".into(),
                tick: world.tick,
            }
        } else {
            self.shared.stats.executed.fetch_add(1, Ordering::Relaxed);
            world.tick += 1;
            let tick = world.tick;
            match world.apply_command(action, args) {
                Ok(r) => {
                    let kind = if r.blocked {
                        Some("blocked")
                    } else if is_animation(action) {
                        Some("animation")
                    } else if action == "FIND" {
                        Some("find")
                    } else {
                        None
                    };
                    if let Some(kind) = kind {
                        events.push(Message::Event {
                            tick,
                            kind: kind.into(),
                            detail: Some(format!("{action}: {}", r.detail)),
                        });
                    }
                    Message::Ack {
                        seq,
                        ok: r.ok,
                        blocked: r.blocked,
                        err: None,
                        detail: r.detail,
                        tick,
                    }
                }
                Err(e) => Message::Ack {
                    seq,
                    ok: false,
                    blocked: false,
                    err: Some(e.to_string()),
                    detail: String::new(),
                    tick,
                },
            }
        };
        (ack, events, world.sense())
    }

    fn evict_peers(&mut self) {
        if self.peers.len() <= self.config.max_peers {
            return;
        }
        if let Some(oldest) = self.peers.iter().min_by_key(|(_, p)| p.last_use).map(|(a, _)| *a) {
            self.peers.remove(&oldest);
        }
    }
}
