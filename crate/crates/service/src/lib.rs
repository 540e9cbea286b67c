//! HTTP API and session persistence for the iterative check → explain →
//! apply workflow, including the iteration and time-to-resolve metrics.

mod api;
mod service;
pub mod session;
pub mod store;

use std::future::Future;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use sleec_core::checker::CheckConfig;
use sleec_core::explain::{Explainer, LlmConfig, LlmError, ResponseCache};
use tokio::net::TcpListener;

pub use api::{router, ApiError};
pub use service::{Service, ServiceError, Submission};
pub use session::{ExplanationRecord, Revision, Session, SessionMetrics};
pub use store::{Clock, ManualClock, SessionHandle, Store, StoreError, SystemClock};

/// Server-side limit on one check run.
pub const CHECK_BUDGET: Duration = Duration::from_secs(30);

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub port: u16,
    pub data_dir: PathBuf,
    pub static_dir: Option<PathBuf>,
    pub check: CheckConfig,
    pub budget: Duration,
    pub llm: LlmConfig,
}

impl ServiceConfig {
    /// `SLEEC_PORT` (default 8080), `SLEEC_DATA_DIR` (default
    /// `./sleec-data`), `SLEEC_STATIC_DIR`, and the explainer's variables.
    pub fn from_env() -> Result<Self, LlmError> {
        Self::from_vars(|k| std::env::var(k).ok())
    }

    pub fn from_vars(var: impl Fn(&str) -> Option<String>) -> Result<Self, LlmError> {
        let port = match var("SLEEC_PORT") {
            Some(p) => p
                .trim()
                .parse()
                .map_err(|_| LlmError::Config(format!("SLEEC_PORT `{p}` is not a port number")))?,
            None => 8080,
        };
        Ok(ServiceConfig {
            port,
            data_dir: var("SLEEC_DATA_DIR").map_or_else(|| PathBuf::from("sleec-data"), PathBuf::from),
            static_dir: var("SLEEC_STATIC_DIR").map(PathBuf::from),
            check: CheckConfig::default(),
            budget: CHECK_BUDGET,
            llm: LlmConfig::from_vars(&var)?,
        })
    }

    /// Store in `data_dir`, answer cache in `data_dir/cache`.
    pub fn build(&self, clock: Arc<dyn Clock>) -> Result<Service, StoreError> {
        let store = Store::open(&self.data_dir, clock)?;
        let explainer = Explainer::from_config(&self.llm, ResponseCache::in_dir(self.data_dir.join("cache")));
        Ok(Service::new(store, explainer, self.check, self.budget))
    }
}

/// Serves until `shutdown` resolves, then lets in-flight requests finish.
/// Every log record is synced when written, so nothing is pending after.
pub async fn serve(
    listener: TcpListener,
    service: Arc<Service>,
    static_dir: Option<PathBuf>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let app = router(service.clone(), static_dir);
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await?;
    tracing::info!(dir = %service.store().dir().display(), "session logs flushed, server stopped");
    Ok(())
}

/// Resolves on Ctrl-C / SIGINT, or SIGTERM on Unix.
pub async fn shutdown_signal() {
    let interrupt = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let terminate = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending().await,
        }
    };
    #[cfg(not(unix))]
    let terminate = std::future::pending::<()>();
    tokio::select! {
        _ = interrupt => {}
        _ = terminate => {}
    }
}
