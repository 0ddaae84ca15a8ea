//! HTTP+JSON API: catalogs, graph compilation and stepped simulation
//! sessions.
//!
//! Routes:
//!
//! | method | path                      | body                               |
//! |--------|---------------------------|------------------------------------|
//! | GET    | `/api/catalog`            |                                    |
//! | POST   | `/api/compile`            | krt XML                            |
//! | POST   | `/api/session`            | `{world?, programs, max_ticks?}`   |
//! | POST   | `/api/session/{id}/step`  | `{ticks}`                          |
//! | GET    | `/api/session/{id}/state` |                                    |
//! | DELETE | `/api/session/{id}`       |                                    |

mod error;
mod routes;
mod session;

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use axum::http::{HeaderValue, Method};
use axum::routing::{get, post};
use axum::Router;
use kitrobot_core::catalog::Catalog;
use tokio::net::TcpListener;
use tower_http::cors::{AllowOrigin, CorsLayer};

pub use error::ApiError;

use session::Sessions;

pub const DEFAULT_IDLE_EXPIRY: Duration = Duration::from_secs(30 * 60);
pub const DEFAULT_MAX_TICKS: u64 = 1000;

#[derive(Debug, Clone)]
pub struct Config {
    /// Robot-object catalog used by `/api/compile`.
    pub catalog: PathBuf,
    pub constructors: Option<PathBuf>,
    /// World used when a session request names none. Catalog binds in
    /// session worlds resolve against this file's directory.
    pub world: Option<PathBuf>,
    pub allow_origin: Option<String>,
    pub idle_expiry: Duration,
}

impl Config {
    pub fn new(catalog: impl Into<PathBuf>) -> Self {
        Config {
            catalog: catalog.into(),
            constructors: None,
            world: None,
            allow_origin: None,
            idle_expiry: DEFAULT_IDLE_EXPIRY,
        }
    }
}

/// Shared, immutable server state plus the session table.
#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Inner {
    catalog: Result<Arc<Catalog>, String>,
    catalog_json: Result<String, String>,
    world: Result<Option<String>, String>,
    base: PathBuf,
    sessions: Sessions,
}

impl AppState {
    /// Loads catalogs and the default world. Load failures are kept and
    /// reported by the routes that need them.
    pub fn new(config: &Config) -> Self {
        let catalog = Catalog::load_files(config.constructors.as_deref(), &config.catalog)
            .map(Arc::new)
            .map_err(|e| e.to_string());
        let catalog_json = catalog
            .as_ref()
            .map_err(Clone::clone)
            .and_then(|c| serde_json::to_string(&**c).map_err(|e| e.to_string()));
        let world = match &config.world {
            Some(path) => std::fs::read_to_string(path)
                .map(Some)
                .map_err(|e| format!("{}: {e}", path.display())),
            None => Ok(None),
        };
        let base = config
            .world
            .as_deref()
            .and_then(|p| p.parent())
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("."));
        AppState {
            inner: Arc::new(Inner {
                catalog,
                catalog_json,
                world,
                base,
                sessions: Sessions::new(config.idle_expiry),
            }),
        }
    }

    pub fn session_count(&self) -> usize {
        self.inner.sessions.len()
    }
}

pub fn router(state: AppState, allow_origin: Option<&str>) -> Router {
    let app = Router::new()
        .route("/api/catalog", get(routes::catalog))
        .route("/api/compile", post(routes::compile))
        .route("/api/session", post(routes::create_session))
        .route("/api/session/{id}/step", post(routes::step_session))
        .route("/api/session/{id}/state", get(routes::session_state))
        .route("/api/session/{id}", axum::routing::delete(routes::delete_session))
        .with_state(state);
    match allow_origin.and_then(|o| HeaderValue::from_str(o).ok()) {
        Some(origin) => app.layer(
            CorsLayer::new()
                .allow_origin(AllowOrigin::exact(origin))
                .allow_methods([Method::GET, Method::POST, Method::DELETE])
                .allow_headers([axum::http::header::CONTENT_TYPE]),
        ),
        None => app,
    }
}

/// Serves until the listener fails.
pub async fn serve(listener: TcpListener, config: &Config) -> std::io::Result<()> {
    let app = router(AppState::new(config), config.allow_origin.as_deref());
    axum::serve(listener, app).await
}
