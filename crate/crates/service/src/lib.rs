//! HTTP API over the annotation platform store.
//!
//! All bodies are JSON except the corpus export, which is XML. Every error
//! carries a machine code, a message and a correlation id.

pub mod access;
pub mod error;
mod routes;
pub mod session;

use std::sync::{Arc, RwLock, RwLockReadGuard, RwLockWriteGuard};

use axum::Router;
use chrono::{DateTime, Duration, Utc};
use csanno::platform::{Event, Settings, Store};

pub use error::{ApiError, ErrorBody};
pub use routes::*;

pub type Clock = Arc<dyn Fn() -> DateTime<Utc> + Send + Sync>;

pub struct AppState {
    store: RwLock<Store>,
    pub session_key: Vec<u8>,
    pub session_ttl: Duration,
    pub settings: Settings,
    clock: Clock,
}

impl AppState {
    pub fn new(
        store: Store,
        session_key: Vec<u8>,
        session_ttl: Duration,
        settings: Settings,
    ) -> Self {
        Self::with_clock(
            store,
            session_key,
            session_ttl,
            settings,
            Arc::new(Utc::now),
        )
    }

    pub fn with_clock(
        store: Store,
        session_key: Vec<u8>,
        session_ttl: Duration,
        settings: Settings,
        clock: Clock,
    ) -> Self {
        AppState {
            store: RwLock::new(store),
            session_key,
            session_ttl,
            settings,
            clock,
        }
    }

    pub fn now(&self) -> DateTime<Utc> {
        (self.clock)()
    }

    pub fn read(&self) -> Result<RwLockReadGuard<'_, Store>, ApiError> {
        self.store.read().map_err(|_| ApiError::internal())
    }

    fn write(&self) -> Result<RwLockWriteGuard<'_, Store>, ApiError> {
        self.store.write().map_err(|_| ApiError::internal())
    }

    /// Serializes one mutation through the store.
    pub fn commit(&self, event: Event) -> Result<bool, ApiError> {
        let mut store = self.write()?;
        // stamped under the lock so log order and time order agree
        let at = self.now();
        Ok(store.commit(event, at)?)
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    routes::build(state)
}
