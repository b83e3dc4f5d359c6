//! Network front end for Spark: chat sessions over WebSocket, the function
//! registry and world snapshots over HTTP, all under `/v1`.

mod http;
pub mod robot;
pub mod sessions;
pub mod store;
mod ws;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::Duration;

use axum::Router;
use spark_core::decompose::{ConfigError, DecomposerConfig};
use spark_core::dialog::Lexicon;
use spark_core::sim::SimError;
use spark_core::{Decomposer, ExecutionLimits, World};
use thiserror::Error;

pub use robot::{RobotClaim, RobotLink};
pub use sessions::{Session, Sessions, SESSION_TTL};
pub use store::{DeleteError, RegistryStore, StoreError};
pub use ws::{Inbound, Outbound};

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Decomposer(#[from] ConfigError),
    #[error("world: {0}")]
    World(#[from] SimError),
    #[error("robot connection: {0}")]
    Robot(std::io::Error),
    #[error("invalid SPARK_SIM_ADDR {0:?}")]
    SimAddr(String),
}

#[derive(Debug, Clone)]
pub struct GatewayConfig {
    pub registry_file: Option<PathBuf>,
    pub world_file: Option<PathBuf>,
    /// Simulator to drive; an embedded one is started when unset.
    pub sim_addr: Option<SocketAddr>,
    pub decomposer: DecomposerConfig,
    pub session_ttl: Duration,
    pub limits: ExecutionLimits,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        GatewayConfig {
            registry_file: None,
            world_file: None,
            sim_addr: None,
            decomposer: DecomposerConfig::from_values(Some("rules"), None, None).expect("rules config"),
            session_ttl: SESSION_TTL,
            limits: ExecutionLimits::default(),
        }
    }
}

impl GatewayConfig {
    /// Reads SPARK_REGISTRY_FILE, SPARK_WORLD_FILE, SPARK_SIM_ADDR and the
    /// decomposer variables.
    pub fn from_env() -> Result<Self, GatewayError> {
        let var = |k: &str| std::env::var(k).ok().filter(|v| !v.is_empty());
        let sim_addr = match var("SPARK_SIM_ADDR") {
            Some(a) => Some(a.parse().map_err(|_| GatewayError::SimAddr(a))?),
            None => None,
        };
        Ok(GatewayConfig {
            registry_file: var("SPARK_REGISTRY_FILE").map(PathBuf::from),
            world_file: var("SPARK_WORLD_FILE").map(PathBuf::from),
            sim_addr,
            decomposer: DecomposerConfig::from_env()?,
            ..Default::default()
        })
    }
}

/// Shared state behind every route.
pub struct AppState {
    pub sessions: Sessions,
    pub store: Mutex<RegistryStore>,
    pub decomposer: Decomposer,
    pub lexicon: Lexicon,
    pub robot: RobotLink,
    pub limits: ExecutionLimits,
}

impl AppState {
    pub fn store(&self) -> MutexGuard<'_, RegistryStore> {
        self.store.lock().unwrap_or_else(|e| e.into_inner())
    }
}

#[derive(Clone)]
pub struct Gateway {
    state: Arc<AppState>,
}

impl Gateway {
    pub fn new(config: &GatewayConfig) -> Result<Self, GatewayError> {
        let store = match &config.registry_file {
            Some(path) => RegistryStore::open(path)?,
            None => RegistryStore::in_memory(),
        };
        let robot = match config.sim_addr {
            Some(addr) => RobotLink::connect(addr),
            None => {
                let world = match &config.world_file {
                    Some(path) => World::load(path)?,
                    None => World::default_world(),
                };
                RobotLink::embedded(world)
            }
        }
        .map_err(GatewayError::Robot)?;
        Ok(Gateway {
            state: Arc::new(AppState {
                sessions: Sessions::with_ttl(config.session_ttl),
                store: Mutex::new(store),
                decomposer: Decomposer::from_config(&config.decomposer)?,
                lexicon: Lexicon::default(),
                robot,
                limits: config.limits,
            }),
        })
    }

    pub fn state(&self) -> &Arc<AppState> {
        &self.state
    }

    pub fn router(&self) -> Router {
        Router::new()
            .nest("/v1", http::routes().merge(ws::routes()))
            .with_state(self.state.clone())
    }

    /// Serves until `shutdown` resolves, sweeping idle sessions once a
    /// minute.
    pub async fn serve(
        self,
        listener: tokio::net::TcpListener,
        shutdown: impl std::future::Future<Output = ()> + Send + 'static,
    ) -> std::io::Result<()> {
        let state = self.state.clone();
        let sweeper = tokio::spawn(async move {
            let mut tick = tokio::time::interval(Duration::from_secs(60));
            loop {
                tick.tick().await;
                let dropped = state.sessions.sweep();
                if dropped > 0 {
                    tracing::info!(dropped, "expired idle sessions");
                }
            }
        });
        let result = axum::serve(listener, self.router())
            .with_graceful_shutdown(shutdown)
            .await;
        sweeper.abort();
        result
    }
}
