//! Signed session tokens: `base64url(claims) "." base64url(hmac-sha256)`.

use std::sync::Arc;

use axum::extract::FromRequestParts;
use axum::http::header::AUTHORIZATION;
use axum::http::request::Parts;
use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine;
use csanno::workflow::Role;
use hmac::{Hmac, Mac};
use serde::{Deserialize, Serialize};
use sha2::Sha256;

use crate::access::{allowed, Endpoint};
use crate::error::ApiError;
use crate::AppState;

type HmacSha256 = Hmac<Sha256>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Claims {
    /// Session id, the key for revocation.
    pub sid: String,
    pub sub: String,
    pub role: Role,
    /// Expiry, seconds since the epoch.
    pub exp: i64,
}

fn mac(key: &[u8]) -> HmacSha256 {
    HmacSha256::new_from_slice(key).expect("hmac accepts any key length")
}

pub fn sign(key: &[u8], claims: &Claims) -> String {
    let body = URL_SAFE_NO_PAD.encode(serde_json::to_vec(claims).expect("claims serialize"));
    let mut m = mac(key);
    m.update(body.as_bytes());
    let sig = URL_SAFE_NO_PAD.encode(m.finalize().into_bytes());
    format!("{body}.{sig}")
}

/// Checks the signature and decodes the claims. Expiry and revocation are
/// checked by the caller.
pub fn verify(key: &[u8], token: &str) -> Option<Claims> {
    let (body, sig) = token.split_once('.')?;
    let sig = URL_SAFE_NO_PAD.decode(sig).ok()?;
    let mut m = mac(key);
    m.update(body.as_bytes());
    m.verify_slice(&sig).ok()?;
    serde_json::from_slice(&URL_SAFE_NO_PAD.decode(body).ok()?).ok()
}

/// An authenticated caller.
#[derive(Debug, Clone)]
pub struct Session(pub Claims);

impl Session {
    pub fn require(&self, endpoint: Endpoint) -> Result<&Claims, ApiError> {
        if allowed(endpoint, self.0.role) {
            Ok(&self.0)
        } else {
            Err(ApiError::forbidden())
        }
    }
}

impl FromRequestParts<Arc<AppState>> for Session {
    type Rejection = ApiError;

    async fn from_request_parts(
        parts: &mut Parts,
        state: &Arc<AppState>,
    ) -> Result<Self, Self::Rejection> {
        let token = parts
            .headers
            .get(AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .ok_or_else(|| ApiError::unauthenticated("missing bearer token"))?;
        let claims = verify(&state.session_key, token)
            .ok_or_else(|| ApiError::unauthenticated("invalid session token"))?;
        if claims.exp <= state.now().timestamp() {
            return Err(ApiError::unauthenticated("session expired"));
        }
        let store = state.read()?;
        let platform = store.state();
        if platform.revoked.contains(&claims.sid) {
            return Err(ApiError::unauthenticated("session revoked"));
        }
        // the account may have changed since login
        if platform.directory.get(&claims.sub).map(|u| u.role) != Some(claims.role) {
            return Err(ApiError::unauthenticated("session no longer valid"));
        }
        Ok(Session(claims))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tampering_fails() {
        let c = Claims {
            sid: "s".into(),
            sub: "a1".into(),
            role: Role::Annotator,
            exp: 10,
        };
        let tok = sign(b"k", &c);
        assert_eq!(verify(b"k", &tok), Some(c.clone()));
        assert_eq!(verify(b"other", &tok), None);
        let forged = URL_SAFE_NO_PAD.encode(
            serde_json::to_vec(&Claims {
                role: Role::SuperUser,
                ..c
            })
            .unwrap(),
        );
        let sig = tok.split_once('.').unwrap().1;
        assert_eq!(verify(b"k", &format!("{forged}.{sig}")), None);
        assert_eq!(verify(b"k", "garbage"), None);
    }
}
