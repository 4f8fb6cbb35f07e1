//! Registration, login, bearer-token sessions and role checks.

use std::sync::Arc;

use chrono::Duration;
use hemobank_core::{validate_required, Clock, FieldIssue, ValidationReport};
use hemobank_store::{NewUser, RoleKind, RolePayload, RoleRow, Store, StoreError, UserRow};
use serde::{Deserialize, Serialize};

pub mod password;
pub mod session;

pub use password::{generate_password, HashCost, PasswordHasher, Secret};
pub use session::{generate_token, SessionStore, SessionToken};

pub const DEFAULT_TOKEN_TTL_HOURS: i64 = 24;

#[derive(Debug, thiserror::Error)]
pub enum AuthError {
    #[error("validation failed")]
    Validation(ValidationReport),
    #[error("password must be 8 to 72 characters")]
    PasswordPolicy,
    #[error("email already registered")]
    DuplicateEmail,
    #[error("invalid email or password")]
    InvalidCredentials,
    #[error(transparent)]
    Store(StoreError),
}

impl From<StoreError> for AuthError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::DuplicateEmail => AuthError::DuplicateEmail,
            StoreError::FieldTooLong { field, .. } => AuthError::Validation(ValidationReport {
                ok: false,
                missing_fields: Vec::new(),
                malformed_fields: vec![FieldIssue { field: field.into(), reason: "too_long".into() }],
            }),
            StoreError::EmptyField(field) => AuthError::Validation(ValidationReport::missing(field)),
            other => AuthError::Store(other),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Credentials {
    pub email: String,
    pub password: Secret,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AuthzReason {
    Ok,
    NoToken,
    Expired,
    RoleMissing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthzDecision {
    pub allowed: bool,
    pub reason: AuthzReason,
}

impl AuthzDecision {
    const fn of(reason: AuthzReason) -> Self {
        Self { allowed: matches!(reason, AuthzReason::Ok), reason }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AuthConfig {
    pub token_ttl: Duration,
    pub hash_cost: HashCost,
}

impl Default for AuthConfig {
    fn default() -> Self {
        Self { token_ttl: Duration::hours(DEFAULT_TOKEN_TTL_HOURS), hash_cost: HashCost::default() }
    }
}

pub struct Auth {
    store: Arc<dyn Store>,
    clock: Arc<dyn Clock>,
    hasher: PasswordHasher,
    sessions: SessionStore,
    token_ttl: Duration,
    // Verified against on unknown emails so both failure paths cost one hash.
    decoy_hash: String,
}

impl Auth {
    pub fn new(store: Arc<dyn Store>, clock: Arc<dyn Clock>, config: AuthConfig) -> Self {
        let hasher = PasswordHasher::new(config.hash_cost);
        let decoy_hash = hasher.hash(&generate_password());
        Self {
            store,
            clock,
            hasher,
            sessions: SessionStore::new(),
            token_ttl: config.token_ttl,
            decoy_hash,
        }
    }

    pub fn sessions(&self) -> &SessionStore {
        &self.sessions
    }

    pub fn hasher(&self) -> &PasswordHasher {
        &self.hasher
    }

    fn check_new_account(name: &str, email: &str, password: &Secret) -> Result<(), AuthError> {
        let report = validate_required([
            ("name", name),
            ("email", email),
            ("password", password.expose()),
        ]);
        if !report.ok {
            return Err(AuthError::Validation(report));
        }
        if !password.meets_policy() {
            return Err(AuthError::PasswordPolicy);
        }
        Ok(())
    }

    /// Creates a user with no roles and returns its id.
    pub fn register(&self, name: &str, email: &str, password: &Secret) -> Result<i64, AuthError> {
        Self::check_new_account(name, email, password)?;
        let user = self.store.insert_user(NewUser {
            name: name.trim().to_owned(),
            email: email.trim().to_owned(),
            password_hash: self.hasher.hash(password),
        })?;
        Ok(user.user_id)
    }

    /// Creates a user and one role row in a single unit, with a generated
    /// password that is returned to the caller once and never stored.
    pub fn provision(
        &self,
        name: &str,
        email: &str,
        role: RolePayload,
    ) -> Result<(UserRow, RoleRow, Secret), AuthError> {
        let password = generate_password();
        Self::check_new_account(name, email, &password)?;
        let (user, role) = self.store.create_user_with_role(
            NewUser {
                name: name.trim().to_owned(),
                email: email.trim().to_owned(),
                password_hash: self.hasher.hash(&password),
            },
            role,
        )?;
        Ok((user, role, password))
    }

    pub fn login(&self, credentials: &Credentials) -> Result<SessionToken, AuthError> {
        let user = self.store.find_user_by_email(credentials.email.trim())?;
        let hash = user.as_ref().map_or(self.decoy_hash.as_str(), |u| u.password_hash.as_str());
        let verified = self.hasher.verify(hash, &credentials.password);
        match user {
            Some(user) if verified => {
                let roles = self.store.roles_of(user.user_id)?;
                let expires_at = self.clock.now() + self.token_ttl;
                Ok(self.sessions.create(user.user_id, roles, expires_at))
            }
            _ => Err(AuthError::InvalidCredentials),
        }
    }

    /// The live session behind `token`, or why there is none.
    pub fn authenticate(&self, token: Option<&str>) -> Result<SessionToken, AuthzReason> {
        let session = token.and_then(|t| self.sessions.get(t)).ok_or(AuthzReason::NoToken)?;
        if self.clock.now() >= session.expires_at {
            self.sessions.revoke(&session.token);
            return Err(AuthzReason::Expired);
        }
        Ok(session)
    }

    pub fn authorize(&self, token: Option<&str>, required: RoleKind) -> AuthzDecision {
        match self.authenticate(token) {
            Ok(s) if s.has_role(required) => AuthzDecision::of(AuthzReason::Ok),
            Ok(_) => AuthzDecision::of(AuthzReason::RoleMissing),
            Err(reason) => AuthzDecision::of(reason),
        }
    }

    pub fn logout(&self, token: &str) -> bool {
        self.sessions.revoke(token)
    }

    /// Re-reads the user's roles into every live session after a role change.
    pub fn refresh_roles(&self, user_id: i64) -> Result<Vec<RoleKind>, StoreError> {
        let roles = self.store.roles_of(user_id)?;
        self.sessions.set_roles(user_id, &roles);
        Ok(roles)
    }
}
