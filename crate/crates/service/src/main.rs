use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::Duration;
use csanno::platform::{Settings, Store};
use csanno_service::{router, AppState};
use rand::RngCore;
use tracing_subscriber::EnvFilter;

const KEY_FILE: &str = "session.key";

fn env_or(name: &str, default: &str) -> String {
    std::env::var(name).unwrap_or_else(|_| default.to_string())
}

/// Loads the token signing key from the store directory, creating it on
/// first start.
fn session_key(dir: &Path) -> std::io::Result<Vec<u8>> {
    let path = dir.join(KEY_FILE);
    match std::fs::read(&path) {
        Ok(k) if k.len() >= 32 => return Ok(k),
        Ok(_) => {
            return Err(std::io::Error::other(format!(
                "{} is shorter than 32 bytes",
                path.display()
            )))
        }
        Err(e) if e.kind() != std::io::ErrorKind::NotFound => return Err(e),
        Err(_) => {}
    }
    let mut key = vec![0u8; 32];
    rand::rngs::OsRng.fill_bytes(&mut key);
    let mut opts = std::fs::OpenOptions::new();
    opts.write(true).create_new(true);
    #[cfg(unix)]
    std::os::unix::fs::OpenOptionsExt::mode(&mut opts, 0o600);
    std::io::Write::write_all(&mut opts.open(&path)?, &key)?;
    Ok(key)
}

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .init();

    let store_path = PathBuf::from(env_or("STORE_PATH", "./store"));
    let bind = env_or("BIND_ADDR", "127.0.0.1:8080");
    let ttl: i64 = env_or("SESSION_TTL", "28800")
        .parse()
        .map_err(|e| format!("SESSION_TTL must be seconds: {e}"))?;
    if ttl <= 0 {
        return Err("SESSION_TTL must be positive".into());
    }

    let store = Store::open(&store_path)?;
    let settings = Settings::load(&store_path)?;
    let key = session_key(&store_path)?;
    let state = Arc::new(AppState::new(store, key, Duration::seconds(ttl), settings));

    let listener = tokio::net::TcpListener::bind(&bind).await?;
    tracing::info!(addr = %bind, store = %store_path.display(), "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
