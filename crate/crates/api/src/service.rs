//! Shared service state and the running server.

use std::collections::HashMap;
use std::sync::Arc;
use std::time::Duration;

use tokio::net::TcpListener;
use vt_core::ingest::{Ingestor, WatchdogThreshold};
use vt_core::planner::{build_graph, TransportGraph};
use vt_core::status::{sink_from_spec, NotificationSink, StatusBoard};
use vt_core::store::Store;
use vt_core::SiteConfig;

use crate::auth::{Clock, Sessions, SystemClock, UserAccount, UserDirectory};
use crate::config::{ConfigError, ServiceConfig};

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("site topology: {0}")]
    Site(#[from] vt_core::site::SiteError),
    #[error("store: {0}")]
    Store(#[from] vt_core::StoreError),
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: String, source: std::io::Error },
    #[error("server stopped: {0}")]
    Io(#[from] std::io::Error),
}

pub struct Services {
    pub site: Arc<SiteConfig>,
    pub store: Arc<Store>,
    pub ingest: Arc<Ingestor>,
    pub graph: TransportGraph,
    pub users: UserDirectory,
    pub sessions: Sessions,
    pub clock: Arc<dyn Clock>,
    pub threshold: WatchdogThreshold,
}

pub type AppState = Arc<Services>;

pub struct Parts {
    pub site: SiteConfig,
    pub store: Store,
    pub users: UserDirectory,
    pub sink: Box<dyn NotificationSink>,
    pub loggers: HashMap<String, String>,
    pub clock: Arc<dyn Clock>,
    pub threshold: WatchdogThreshold,
    pub session_ttl_s: i64,
}

impl Services {
    pub fn new(parts: Parts) -> Result<AppState, ServeError> {
        let site = Arc::new(parts.site);
        let store = Arc::new(parts.store);
        let board = Arc::new(StatusBoard::open(site.clone(), store.clone(), parts.sink)?);
        let ingest = Arc::new(Ingestor::new(site.clone(), store.clone(), board, parts.loggers));
        Ok(Arc::new(Services {
            graph: build_graph(&site),
            site,
            store,
            ingest,
            users: parts.users,
            sessions: Sessions::new(parts.session_ttl_s),
            clock: parts.clock,
            threshold: parts.threshold,
        }))
    }

    /// Opens the store, account table and sink named by `cfg`, and creates
    /// any seed users that do not exist yet.
    pub fn from_config(cfg: &ServiceConfig, clock: Arc<dyn Clock>) -> Result<AppState, ServeError> {
        let site = SiteConfig::load(cfg.site_path())?;
        let store_dir = cfg.store_path();
        let store = Store::open(&store_dir, &site)?;
        let users = UserDirectory::open(Some(&store_dir))?;
        for seed in &cfg.users {
            if users.get(&seed.user_id).is_none() {
                users.put(UserAccount::new(&seed.user_id, &seed.display_name, seed.role, &seed.password))?;
            }
        }
        let sink = sink_from_spec(&cfg.notification_sink, &cfg.base_dir).map_err(ConfigError::Invalid)?;
        let threshold = WatchdogThreshold::new(cfg.watchdog_threshold_s).map_err(ConfigError::Invalid)?;
        Services::new(Parts {
            site,
            store,
            users,
            sink,
            loggers: cfg.loggers.iter().map(|l| (l.id.clone(), l.token.clone())).collect(),
            clock,
            threshold,
            session_ttl_s: cfg.session_ttl_s,
        })
    }
}

/// Runs the watchdog every `every` until the task is dropped.
pub fn spawn_watchdog(state: AppState, every: Duration) -> tokio::task::JoinHandle<()> {
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(every);
        tick.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
        loop {
            tick.tick().await;
            let moved = state.ingest.watchdog_sweep(state.clock.now(), state.threshold);
            if !moved.is_empty() {
                tracing::info!(lifts = ?moved, "watchdog marked lifts as not communicating");
            }
        }
    })
}

/// Serves on an already bound listener until the future completes or fails.
pub async fn serve_on(listener: TcpListener, state: AppState, watchdog_every: Duration) -> std::io::Result<()> {
    let watchdog = spawn_watchdog(state.clone(), watchdog_every);
    let result = axum::serve(listener, crate::routes::router(state)).await;
    watchdog.abort();
    result
}

pub async fn serve(cfg: ServiceConfig) -> Result<(), ServeError> {
    let state = Services::from_config(&cfg, Arc::new(SystemClock))?;
    let addr = format!("{}:{}", cfg.bind, cfg.port);
    let listener = TcpListener::bind(&addr).await.map_err(|source| ServeError::Bind { addr: addr.clone(), source })?;
    tracing::info!(%addr, "serving");
    serve_on(listener, state, Duration::from_secs(cfg.watchdog_interval_s)).await?;
    Ok(())
}
