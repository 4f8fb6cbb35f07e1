//! HTTP/JSON service for hemobank.
//!
//! [`router`] builds the full axum application over an [`AppState`]; [`serve`]
//! runs it on a listener until a shutdown future resolves.

use std::future::Future;
use std::sync::Arc;

use axum::http::{header, HeaderValue, Method};
use axum::Router;
use chrono::Duration;
use hemobank_auth::{Auth, AuthConfig, HashCost};
use hemobank_core::Clock;
use hemobank_store::Store;
use tokio::net::TcpListener;
use tokio::sync::Semaphore;
use tower_http::cors::CorsLayer;
use tower_http::trace::TraceLayer;

pub mod caller;
pub mod error;
pub mod openapi;
pub mod routes;
pub mod seed;

pub use caller::Caller;
pub use error::ApiError;

pub const DEFAULT_PORT: u16 = 8080;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub token_ttl: Duration,
    pub hash_cost: HashCost,
    /// Upper bound on password hashes computed at once.
    pub max_concurrent_hashes: usize,
    /// Browser origin allowed by CORS; no CORS headers when unset.
    pub ui_origin: Option<String>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            token_ttl: Duration::hours(hemobank_auth::DEFAULT_TOKEN_TTL_HOURS),
            hash_cost: HashCost::default(),
            max_concurrent_hashes: std::thread::available_parallelism().map_or(2, |n| n.get()),
            ui_origin: None,
        }
    }
}

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<dyn Store>,
    pub auth: Arc<Auth>,
    pub clock: Arc<dyn Clock>,
    hash_permits: Arc<Semaphore>,
    ui_origin: Option<String>,
}

impl AppState {
    pub fn new(store: Arc<dyn Store>, clock: Arc<dyn Clock>, config: &ServiceConfig) -> Self {
        let auth = Auth::new(
            Arc::clone(&store),
            Arc::clone(&clock),
            AuthConfig { token_ttl: config.token_ttl, hash_cost: config.hash_cost },
        );
        Self {
            store,
            auth: Arc::new(auth),
            clock,
            hash_permits: Arc::new(Semaphore::new(config.max_concurrent_hashes.max(1))),
            ui_origin: config.ui_origin.clone(),
        }
    }

    /// Runs a password-hashing auth call on the blocking pool, bounded by the
    /// hash permit count so slow hashes cannot starve the async workers.
    pub async fn with_hashing<T, F>(&self, f: F) -> Result<T, ApiError>
    where
        F: FnOnce(&Auth) -> T + Send + 'static,
        T: Send + 'static,
    {
        let _permit = self.hash_permits.acquire().await.map_err(|_| ApiError::internal())?;
        let auth = Arc::clone(&self.auth);
        tokio::task::spawn_blocking(move || f(&auth))
            .await
            .map_err(|e| {
                tracing::error!(error = %e, "hashing task failed");
                ApiError::internal()
            })
    }
}

pub fn router(state: AppState) -> Router {
    let cors = state.ui_origin.as_deref().and_then(|origin| {
        let origin = HeaderValue::from_str(origin).ok()?;
        Some(
            CorsLayer::new()
                .allow_origin(origin)
                .allow_methods([Method::GET, Method::POST, Method::PUT, Method::DELETE])
                .allow_headers([header::AUTHORIZATION, header::CONTENT_TYPE]),
        )
    });
    let app = routes::routes()
        .fallback(error::not_found)
        .method_not_allowed_fallback(error::method_not_allowed)
        .with_state(state)
        .layer(TraceLayer::new_for_http());
    match cors {
        Some(cors) => app.layer(cors),
        None => app,
    }
}

/// Serves until `shutdown` resolves, then drains in-flight requests.
pub async fn serve(
    listener: TcpListener,
    state: AppState,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state)).with_graceful_shutdown(shutdown).await
}
