use axum::extract::State;
use axum::http::StatusCode;
use axum::Json;
use chrono::{DateTime, Utc};
use hemobank_auth::{Credentials, Secret};
use hemobank_store::RoleKind;
use serde::{Deserialize, Serialize};

use crate::error::ApiJson;
use crate::{ApiError, AppState, Caller};

// Fields default to empty so a missing key surfaces as a missing field.
#[derive(Deserialize)]
pub struct RegisterBody {
    #[serde(default)]
    name: String,
    #[serde(default)]
    email: String,
    #[serde(default)]
    password: String,
}

#[derive(Serialize)]
pub struct Registered {
    user_id: i64,
}

pub async fn register(
    State(state): State<AppState>,
    ApiJson(body): ApiJson<RegisterBody>,
) -> Result<(StatusCode, Json<Registered>), ApiError> {
    let password = Secret::new(body.password);
    let user_id = state
        .with_hashing(move |auth| auth.register(&body.name, &body.email, &password))
        .await??;
    Ok((StatusCode::CREATED, Json(Registered { user_id })))
}

#[derive(Deserialize)]
pub struct LoginBody {
    #[serde(default)]
    email: String,
    #[serde(default)]
    password: String,
}

#[derive(Serialize)]
pub struct LoggedIn {
    token: String,
    user_id: i64,
    expires_at: DateTime<Utc>,
    roles: Vec<RoleKind>,
}

pub async fn login(
    State(state): State<AppState>,
    ApiJson(body): ApiJson<LoginBody>,
) -> Result<Json<LoggedIn>, ApiError> {
    let credentials = Credentials { email: body.email, password: Secret::new(body.password) };
    let session = state.with_hashing(move |auth| auth.login(&credentials)).await??;
    Ok(Json(LoggedIn {
        token: session.token,
        user_id: session.user_id,
        expires_at: session.expires_at,
        roles: session.roles,
    }))
}

pub async fn logout(State(state): State<AppState>, caller: Caller) -> StatusCode {
    state.auth.logout(&caller.0.token);
    StatusCode::NO_CONTENT
}

#[derive(Serialize)]
pub struct Me {
    user_id: i64,
    name: String,
    email: String,
    roles: Vec<RoleKind>,
    expires_at: DateTime<Utc>,
}

pub async fn me(State(state): State<AppState>, caller: Caller) -> Result<Json<Me>, ApiError> {
    let user = state
        .store
        .get_user(caller.user_id())?
        .ok_or_else(|| ApiError::not_found("UNKNOWN_USER", "account no longer exists"))?;
    Ok(Json(Me {
        user_id: user.user_id,
        name: user.name,
        email: user.email,
        roles: caller.0.roles,
        expires_at: caller.0.expires_at,
    }))
}
