#![allow(dead_code)]

use std::sync::Arc;

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use chrono::{Duration, NaiveDate};
use hemobank_api::seed::{seed, SeedProfile, DEMO_PASSWORD};
use hemobank_api::{router, AppState, ServiceConfig};
use hemobank_auth::HashCost;
use hemobank_core::ManualClock;
use hemobank_store::{MemoryStore, Store};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

pub const START: (i32, u32, u32) = (2025, 3, 1);

pub fn start_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(START.0, START.1, START.2).unwrap()
}

pub struct Harness {
    pub app: Router,
    pub state: AppState,
    pub clock: Arc<ManualClock>,
    pub store: Arc<dyn Store>,
}

pub struct Response {
    pub status: StatusCode,
    pub body: Value,
}

impl Response {
    pub fn code(&self) -> &str {
        self.body["error"]["code"].as_str().unwrap_or("")
    }
}

impl Harness {
    pub fn new() -> Self {
        Self::with_store(Arc::new(MemoryStore::new()))
    }

    pub fn with_store(store: Arc<dyn Store>) -> Self {
        store.migrate().unwrap();
        let clock = Arc::new(ManualClock::at_date(start_date()));
        let config = ServiceConfig {
            token_ttl: Duration::hours(24),
            hash_cost: HashCost::fast(),
            max_concurrent_hashes: 4,
            ui_origin: None,
        };
        let state = AppState::new(store.clone(), clock.clone(), &config);
        Self { app: router(state.clone()), state, clock, store }
    }

    /// A store holding the demo accounts.
    pub fn seeded() -> Self {
        let h = Self::new();
        seed(h.store.as_ref(), &h.state.auth, SeedProfile::Demo).unwrap();
        h
    }

    pub async fn call(
        &self,
        method: Method,
        path: &str,
        token: Option<&str>,
        body: Option<Value>,
    ) -> Response {
        let mut req = Request::builder().method(method).uri(path);
        if let Some(token) = token {
            req = req.header(header::AUTHORIZATION, format!("Bearer {token}"));
        }
        let req = match body {
            Some(body) => req
                .header(header::CONTENT_TYPE, "application/json")
                .body(Body::from(body.to_string())),
            None => req.body(Body::empty()),
        }
        .unwrap();
        self.send(req).await
    }

    pub async fn send(&self, req: Request<Body>) -> Response {
        let res = self.app.clone().oneshot(req).await.unwrap();
        let status = res.status();
        let bytes = res.into_body().collect().await.unwrap().to_bytes();
        let body = if bytes.is_empty() {
            Value::Null
        } else {
            serde_json::from_slice(&bytes)
                .unwrap_or_else(|e| panic!("non-JSON body ({e}): {}", String::from_utf8_lossy(&bytes)))
        };
        if !status.is_success() {
            assert_envelope(&body);
        }
        Response { status, body }
    }

    pub async fn get(&self, path: &str, token: Option<&str>) -> Response {
        self.call(Method::GET, path, token, None).await
    }

    pub async fn post(&self, path: &str, token: Option<&str>, body: Value) -> Response {
        self.call(Method::POST, path, token, Some(body)).await
    }

    pub async fn put(&self, path: &str, token: Option<&str>, body: Value) -> Response {
        self.call(Method::PUT, path, token, Some(body)).await
    }

    pub async fn delete(&self, path: &str, token: Option<&str>) -> Response {
        self.call(Method::DELETE, path, token, None).await
    }

    pub async fn login(&self, email: &str, password: &str) -> String {
        let res = self.post("/api/login", None, json!({ "email": email, "password": password })).await;
        assert_eq!(res.status, StatusCode::OK, "login {email}: {}", res.body);
        res.body["token"].as_str().unwrap().to_owned()
    }

    pub async fn demo_login(&self, email: &str) -> String {
        self.login(email, DEMO_PASSWORD).await
    }

    /// Registers an account and returns (user_id, token).
    pub async fn register(&self, name: &str, email: &str) -> (i64, String) {
        let res = self
            .post("/api/register", None, json!({ "name": name, "email": email, "password": "correct horse" }))
            .await;
        assert_eq!(res.status, StatusCode::CREATED, "{}", res.body);
        let id = res.body["user_id"].as_i64().unwrap();
        (id, self.login(email, "correct horse").await)
    }

    pub fn donor_id(&self, email: &str) -> i64 {
        let user = self.store.find_user_by_email(email).unwrap().unwrap();
        self.store.donor_for_user(user.user_id).unwrap().unwrap().donor.donor_id
    }

    pub fn user_id(&self, email: &str) -> i64 {
        self.store.find_user_by_email(email).unwrap().unwrap().user_id
    }
}

/// Every non-2xx body is exactly `{"error": {"code", "message", "details"?}}`.
pub fn assert_envelope(body: &Value) {
    let outer = body.as_object().unwrap_or_else(|| panic!("error body not an object: {body}"));
    assert_eq!(outer.len(), 1, "extra top-level keys: {body}");
    let err = outer["error"].as_object().unwrap_or_else(|| panic!("no error object: {body}"));
    let code = err["code"].as_str().expect("code is a string");
    assert!(
        !code.is_empty() && code.chars().all(|c| c.is_ascii_uppercase() || c == '_'),
        "code not UPPER_SNAKE: {code}"
    );
    assert!(err["message"].is_string(), "message missing: {body}");
    assert!(err.keys().all(|k| matches!(k.as_str(), "code" | "message" | "details")), "{body}");
}

pub fn names(items: &Value) -> Vec<String> {
    items
        .as_array()
        .unwrap_or_else(|| panic!("not an array: {items}"))
        .iter()
        .map(|i| i["name"].as_str().unwrap().to_owned())
        .collect()
}

pub mod authz;

impl Harness {
    /// A session for `email` that outlives any clock movement in a test.
    pub fn long_session(&self, email: &str) -> String {
        let user_id = self.user_id(email);
        let roles = self.store.roles_of(user_id).unwrap();
        let far = chrono::DateTime::<chrono::Utc>::MAX_UTC;
        self.state.auth.sessions().create(user_id, roles, far).token
    }
}
