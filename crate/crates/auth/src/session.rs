use std::collections::HashMap;
use std::sync::RwLock;

use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine;
use chrono::{DateTime, Utc};
use hemobank_store::RoleKind;
use rand::RngCore;
use serde::Serialize;

/// A bearer token and what it grants.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SessionToken {
    pub token: String,
    pub user_id: i64,
    pub roles: Vec<RoleKind>,
    pub expires_at: DateTime<Utc>,
}

impl SessionToken {
    pub fn has_role(&self, role: RoleKind) -> bool {
        self.roles.contains(&role)
    }
}

/// 256 bits from the OS RNG, URL-safe base64 without padding (43 chars).
pub fn generate_token() -> String {
    let mut bytes = [0u8; 32];
    rand::rngs::OsRng.fill_bytes(&mut bytes);
    URL_SAFE_NO_PAD.encode(bytes)
}

/// Server-side session table. Tokens are revocable because they are only
/// meaningful while present here.
#[derive(Debug, Default)]
pub struct SessionStore {
    sessions: RwLock<HashMap<String, SessionToken>>,
}

impl SessionStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn create(&self, user_id: i64, roles: Vec<RoleKind>, expires_at: DateTime<Utc>) -> SessionToken {
        let mut sessions = self.sessions.write().unwrap();
        loop {
            let token = generate_token();
            if sessions.contains_key(&token) {
                continue;
            }
            let session = SessionToken { token: token.clone(), user_id, roles, expires_at };
            sessions.insert(token, session.clone());
            return session;
        }
    }

    pub fn get(&self, token: &str) -> Option<SessionToken> {
        self.sessions.read().unwrap().get(token).cloned()
    }

    pub fn revoke(&self, token: &str) -> bool {
        self.sessions.write().unwrap().remove(token).is_some()
    }

    pub fn revoke_user(&self, user_id: i64) -> usize {
        let mut sessions = self.sessions.write().unwrap();
        let before = sessions.len();
        sessions.retain(|_, s| s.user_id != user_id);
        before - sessions.len()
    }

    /// Replaces the role list on every live session of `user_id`.
    pub fn set_roles(&self, user_id: i64, roles: &[RoleKind]) {
        let mut sessions = self.sessions.write().unwrap();
        for s in sessions.values_mut().filter(|s| s.user_id == user_id) {
            s.roles = roles.to_vec();
        }
    }

    pub fn purge_expired(&self, now: DateTime<Utc>) -> usize {
        let mut sessions = self.sessions.write().unwrap();
        let before = sessions.len();
        sessions.retain(|_, s| s.expires_at > now);
        before - sessions.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn tokens_are_unique_and_url_safe() {
        let tokens: HashSet<String> = (0..10_000).map(|_| generate_token()).collect();
        assert_eq!(tokens.len(), 10_000);
        for t in tokens.iter().take(50) {
            assert_eq!(t.len(), 43);
            assert!(t.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_'));
        }
    }

    #[test]
    fn revoke_and_role_refresh() {
        let store = SessionStore::new();
        let exp = Utc::now();
        let a = store.create(1, vec![], exp);
        let b = store.create(1, vec![], exp);
        let c = store.create(2, vec![RoleKind::Admin], exp);
        store.set_roles(1, &[RoleKind::Donor]);
        assert_eq!(store.get(&a.token).unwrap().roles, vec![RoleKind::Donor]);
        assert!(store.revoke(&b.token));
        assert!(!store.revoke(&b.token));
        assert_eq!(store.revoke_user(1), 1);
        assert!(store.get(&c.token).is_some());
    }
}
