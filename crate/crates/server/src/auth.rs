//! Static bearer tokens. CI tokens upload reports; user tokens read and
//! triage, and carry a name and a role.

use std::collections::HashMap;

use axum::extract::FromRequestParts;
use axum::http::request::Parts;
use axum::http::{header, StatusCode};
use triagebase::views::Role;

use crate::config::TokenConfig;
use crate::error::ApiError;
use crate::state::AppState;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Principal {
    Ci,
    User { name: String, role: Role },
}

#[derive(Debug, Default)]
pub struct TokenTable(HashMap<String, Principal>);

impl TokenTable {
    pub fn from_config(tokens: &TokenConfig) -> Self {
        let mut map = HashMap::new();
        for t in &tokens.ci {
            map.insert(t.clone(), Principal::Ci);
        }
        for u in &tokens.users {
            map.insert(
                u.token.clone(),
                Principal::User {
                    name: u.name.clone(),
                    role: u.role,
                },
            );
        }
        Self(map)
    }

    pub fn lookup(&self, token: &str) -> Option<&Principal> {
        self.0.get(token)
    }
}

fn bearer(parts: &Parts) -> Result<&str, ApiError> {
    parts
        .headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "))
        .map(str::trim)
        .ok_or_else(|| ApiError::new(StatusCode::UNAUTHORIZED, "missing bearer token"))
}

fn principal(parts: &Parts, state: &AppState) -> Result<Principal, ApiError> {
    let token = bearer(parts)?;
    state
        .tokens
        .lookup(token)
        .cloned()
        .ok_or_else(|| ApiError::new(StatusCode::UNAUTHORIZED, "unknown token"))
}

/// A request authenticated with a CI token.
pub struct CiAuth;

impl FromRequestParts<AppState> for CiAuth {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &AppState) -> Result<Self, Self::Rejection> {
        match principal(parts, state)? {
            Principal::Ci => Ok(CiAuth),
            Principal::User { .. } => Err(ApiError::new(StatusCode::FORBIDDEN, "uploads need a CI token")),
        }
    }
}

/// A request authenticated with a user token.
pub struct UserAuth {
    pub name: String,
    pub role: Role,
}

impl FromRequestParts<AppState> for UserAuth {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &AppState) -> Result<Self, Self::Rejection> {
        match principal(parts, state)? {
            Principal::User { name, role } => Ok(UserAuth { name, role }),
            Principal::Ci => Err(ApiError::new(StatusCode::FORBIDDEN, "this endpoint needs a user token")),
        }
    }
}
