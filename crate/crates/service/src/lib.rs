//! HTTP challenge service: issues rendered challenges, verifies answers once within a
//! TTL, and logs response times as pilot records for calibration.

mod api;
pub mod clock;
pub mod config;
pub mod pilot_log;
pub mod pool;
pub mod session;

use std::future::Future;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};
use std::time::Duration;

use spatial_captcha::difficulty::{DifficultyError, DifficultyModel};
use spatial_captcha::manifest::{shipped_manifests, Manifest};
use spatial_captcha::pipeline::PipelineError;

pub use api::router;
pub use clock::{Clock, ManualClock, SystemClock};
pub use config::{ConfigError, ServiceConfig, ENV_VARS};
pub use pilot_log::{respondent_hash, LoggedRecord, PilotLog, PILOT_LOG_FILE};
pub use pool::{Pool, PoolItem};
pub use session::{SessionCounts, SessionRecord, SessionState, Sessions, Token, Verdict, VerifyError};

pub const SNAPSHOT_FILE: &str = "sessions.json";
pub const MODEL_FILE: &str = "model.json";

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Model(#[from] DifficultyError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("no instances to serve: {0}")]
    EmptyPool(String),
}

fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> ServiceError {
    let path = path.into();
    move |source| ServiceError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Default)]
pub struct Counters {
    pub issued: AtomicU64,
    pub verified: AtomicU64,
    pub rejected: AtomicU64,
    pub generated: AtomicU64,
}

pub struct AppState {
    pub config: ServiceConfig,
    pub clock: Arc<dyn Clock>,
    pub pool: Pool,
    pub sessions: Sessions,
    pub pilot: PilotLog,
    pub counters: Counters,
    model: RwLock<Option<Arc<DifficultyModel>>>,
    salt: String,
}

impl AppState {
    /// State without persistence or startup work; tests fill the pool themselves.
    pub fn new(config: ServiceConfig, clock: Arc<dyn Clock>, pool: Pool, pilot: PilotLog) -> Self {
        let salt = config.respondent_salt.clone().unwrap_or_else(|| Token::random().as_str().to_owned());
        Self {
            config,
            clock,
            pool,
            sessions: Sessions::default(),
            pilot,
            counters: Counters::default(),
            model: RwLock::new(None),
            salt,
        }
    }

    /// Pool from the dataset directory, or generated from `manifests`; model, pilot
    /// log and session snapshot from the configured paths.
    pub fn build(config: ServiceConfig, clock: Arc<dyn Clock>, manifests: Vec<Manifest>) -> Result<Self, ServiceError> {
        let pilot = match &config.state_dir {
            Some(dir) => PilotLog::open(dir).map_err(io_err(dir))?,
            None => PilotLog::in_memory(),
        };
        let model = match &config.model {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(io_err(p))?;
                Some(DifficultyModel::from_json(&text)?)
            }
            None => None,
        };
        let pool = Pool::new(manifests, config.seed);
        match &config.dataset_dir {
            Some(dir) => {
                pool.load_dataset(dir)?;
            }
            None if pool.manifests().is_empty() => {
                return Err(ServiceError::EmptyPool("no dataset and no manifests".into()));
            }
            None => {
                pool.generate(config.pool_size, config.seed, model.as_ref())?;
            }
        }
        if pool.is_empty() && pool.manifests().is_empty() {
            return Err(ServiceError::EmptyPool("the dataset holds no instances".into()));
        }
        let state = Self::new(config, clock, pool, pilot);
        if let Some(m) = model {
            state.install_model(m);
        }
        if let Some(dir) = &state.config.state_dir {
            let path = dir.join(SNAPSHOT_FILE);
            if path.exists() {
                let text = std::fs::read_to_string(&path).map_err(io_err(&path))?;
                let rows: Vec<SessionRecord> = serde_json::from_str(&text)
                    .map_err(|e| io_err(&path)(std::io::Error::new(std::io::ErrorKind::InvalidData, e)))?;
                let n = state.sessions.restore(rows, |id| state.pool.find(id));
                tracing::info!(restored = n, "sessions restored from snapshot");
            }
        }
        Ok(state)
    }

    /// [`AppState::build`] with the shipped manifests and the system clock.
    pub fn from_config(config: ServiceConfig) -> Result<Self, ServiceError> {
        Self::build(config, Arc::new(SystemClock), shipped_manifests())
    }

    pub fn now(&self) -> f64 {
        self.clock.now()
    }

    pub fn ttl(&self) -> f64 {
        self.config.ttl_seconds as f64
    }

    pub fn model(&self) -> Option<Arc<DifficultyModel>> {
        self.model.read().expect("model lock").clone()
    }

    pub fn install_model(&self, model: DifficultyModel) {
        self.pool.rebin(&model);
        *self.model.write().expect("model lock") = Some(Arc::new(model));
    }

    pub fn respondent(&self, client_id: &str) -> String {
        respondent_hash(&self.salt, client_id)
    }

    /// Flush the pilot log and write the session snapshot.
    pub fn persist(&self) -> Result<(), ServiceError> {
        self.pilot.flush().map_err(io_err("pilot log"))?;
        if let Some(dir) = &self.config.state_dir {
            let path = dir.join(SNAPSHOT_FILE);
            let text = serde_json::to_string(&self.sessions.snapshot()).expect("snapshots serialize");
            let tmp = dir.join(format!("{SNAPSHOT_FILE}.tmp"));
            std::fs::write(&tmp, text).map_err(io_err(&tmp))?;
            std::fs::rename(&tmp, &path).map_err(io_err(&path))?;
        }
        Ok(())
    }

    pub fn counter(&self, c: &AtomicU64) -> u64 {
        c.load(Ordering::Relaxed)
    }
}

/// Serve until `shutdown` resolves, then drain and persist.
pub async fn serve(
    state: Arc<AppState>,
    listener: tokio::net::TcpListener,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> Result<(), ServiceError> {
    let housekeeping = {
        let state = state.clone();
        let period = Duration::from_secs(state.config.snapshot_seconds.max(1));
        tokio::spawn(async move {
            let mut tick = tokio::time::interval(period);
            loop {
                tick.tick().await;
                state.sessions.sweep(state.now(), state.ttl());
                if let Err(e) = state.persist() {
                    tracing::warn!(error = %e, "snapshot failed");
                }
            }
        })
    };
    let addr = listener.local_addr().map_err(io_err("listener"))?;
    tracing::info!(%addr, pool = state.pool.len(), "serving");
    let result = axum::serve(listener, router(state.clone())).with_graceful_shutdown(shutdown).await;
    housekeeping.abort();
    state.persist()?;
    result.map_err(io_err(addr.to_string()))
}

/// Resolves on ctrl-c or SIGTERM.
pub async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
}
