use std::io;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};

use spark_core::interp::{Robot, RobotError, TelemetrySample};
use spark_core::sim::CommandResult;
use spark_core::wire::{serve, ClientConfig, ServerConfig, ServerHandle, WireClient};
use spark_core::{Telemetry, World};

/// The single robot connection shared by all sessions.
pub struct RobotLink {
    client: Arc<Mutex<WireClient>>,
    busy: Arc<AtomicBool>,
    _embedded: Option<ServerHandle>,
}

impl RobotLink {
    /// Starts a simulator on a loopback port and connects to it.
    pub fn embedded(world: World) -> io::Result<Self> {
        let server = serve(world, "127.0.0.1:0", ServerConfig::default())?;
        let mut link = Self::connect(server.local_addr())?;
        link._embedded = Some(server);
        Ok(link)
    }

    pub fn connect(addr: SocketAddr) -> io::Result<Self> {
        let client = WireClient::connect(addr, ClientConfig::default())?;
        Ok(RobotLink {
            client: Arc::new(Mutex::new(client)),
            busy: Arc::new(AtomicBool::new(false)),
            _embedded: None,
        })
    }

    pub fn server(&self) -> SocketAddr {
        lock(&self.client).server()
    }

    pub fn snapshot(&self) -> Option<Telemetry> {
        lock(&self.client).latest_telemetry().ok().map(|s| s.telemetry)
    }

    /// Like [`snapshot`](Self::snapshot) but gives up instead of waiting
    /// for a command in flight.
    pub fn try_snapshot(&self) -> Option<Telemetry> {
        let client = self.client.try_lock().ok()?;
        client.latest_telemetry().ok().map(|s| s.telemetry)
    }

    pub fn is_busy(&self) -> bool {
        self.busy.load(Ordering::Acquire)
    }

    /// Claims the robot for one program run, or `None` while another run
    /// holds it.
    pub fn try_claim(&self) -> Option<RobotClaim> {
        self.busy
            .compare_exchange(false, true, Ordering::AcqRel, Ordering::Acquire)
            .ok()?;
        Some(RobotClaim {
            client: self.client.clone(),
            busy: self.busy.clone(),
        })
    }
}

fn lock(client: &Mutex<WireClient>) -> MutexGuard<'_, WireClient> {
    client.lock().unwrap_or_else(|e| e.into_inner())
}

/// Exclusive use of the robot; released on drop.
pub struct RobotClaim {
    client: Arc<Mutex<WireClient>>,
    busy: Arc<AtomicBool>,
}

impl Robot for RobotClaim {
    fn command(&mut self, action: &str, args: &[String]) -> Result<CommandResult, RobotError> {
        lock(&self.client).command(action, args)
    }

    fn telemetry(&mut self) -> Result<TelemetrySample, RobotError> {
        lock(&self.client).telemetry()
    }
}

impl Drop for RobotClaim {
    fn drop(&mut self) {
        self.busy.store(false, Ordering::Release);
    }
}
