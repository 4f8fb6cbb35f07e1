use axum::extract::FromRequestParts;
use axum::http::header::AUTHORIZATION;
use axum::http::request::Parts;
use hemobank_auth::{AuthzReason, SessionToken};
use hemobank_store::RoleKind;

use crate::{ApiError, AppState};

/// The authenticated session behind `Authorization: Bearer <token>`.
/// Extraction fails with 401 when the token is absent, unknown or expired.
#[derive(Debug, Clone)]
pub struct Caller(pub SessionToken);

impl Caller {
    pub fn user_id(&self) -> i64 {
        self.0.user_id
    }

    pub fn is(&self, role: RoleKind) -> bool {
        self.0.has_role(role)
    }

    pub fn require(&self, role: RoleKind) -> Result<(), ApiError> {
        self.require_any(&[role])
    }

    pub fn require_any(&self, roles: &[RoleKind]) -> Result<(), ApiError> {
        if roles.iter().any(|r| self.is(*r)) {
            Ok(())
        } else {
            Err(AuthzReason::RoleMissing.into())
        }
    }
}

pub fn bearer_token(parts: &Parts) -> Option<&str> {
    let value = parts.headers.get(AUTHORIZATION)?.to_str().ok()?;
    let (scheme, token) = value.split_once(' ')?;
    scheme.eq_ignore_ascii_case("bearer").then(|| token.trim()).filter(|t| !t.is_empty())
}

impl FromRequestParts<AppState> for Caller {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &AppState) -> Result<Self, ApiError> {
        state
            .auth
            .authenticate(bearer_token(parts))
            .map(Caller)
            .map_err(ApiError::from)
    }
}
