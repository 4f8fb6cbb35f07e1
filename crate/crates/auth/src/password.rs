//! Salted Argon2id password hashing.

use argon2::password_hash::rand_core::OsRng;
use argon2::password_hash::{PasswordHash, PasswordHasher as _, PasswordVerifier, SaltString};
use argon2::{Algorithm, Argon2, Params, Version};
use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine;
use rand::RngCore;

pub const MIN_PASSWORD_LEN: usize = 8;
pub const MAX_PASSWORD_LEN: usize = 72;

/// Argon2 work factor. `iterations` is what `PASSWORD_HASH_COST` sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashCost {
    pub memory_kib: u32,
    pub iterations: u32,
}

impl HashCost {
    /// Cheap parameters for tests and local demos. Never deploy these.
    pub const fn fast() -> Self {
        Self { memory_kib: 256, iterations: 1 }
    }
}

impl Default for HashCost {
    fn default() -> Self {
        Self { memory_kib: 19 * 1024, iterations: 2 }
    }
}

/// Password wrapper that keeps the raw value out of `Debug` output.
#[derive(Clone, PartialEq, Eq)]
pub struct Secret(String);

impl Secret {
    pub fn new(raw: impl Into<String>) -> Self {
        Self(raw.into())
    }

    pub fn expose(&self) -> &str {
        &self.0
    }

    pub fn meets_policy(&self) -> bool {
        (MIN_PASSWORD_LEN..=MAX_PASSWORD_LEN).contains(&self.0.chars().count())
    }
}

impl std::fmt::Debug for Secret {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("Secret(***)")
    }
}

#[derive(Clone)]
pub struct PasswordHasher {
    argon: Argon2<'static>,
}

impl PasswordHasher {
    pub fn new(cost: HashCost) -> Self {
        let params = Params::new(cost.memory_kib.max(8), cost.iterations.max(1), 1, None)
            .expect("argon2 parameters within documented bounds");
        Self { argon: Argon2::new(Algorithm::Argon2id, Version::V0x13, params) }
    }

    /// PHC-format hash with a fresh random salt.
    pub fn hash(&self, password: &Secret) -> String {
        let salt = SaltString::generate(&mut OsRng);
        self.argon
            .hash_password(password.expose().as_bytes(), &salt)
            .expect("argon2 hashing with a generated salt")
            .to_string()
    }

    /// False for a wrong password and for a malformed hash.
    pub fn verify(&self, hash: &str, password: &Secret) -> bool {
        match PasswordHash::new(hash) {
            Ok(parsed) => self
                .argon
                .verify_password(password.expose().as_bytes(), &parsed)
                .is_ok(),
            Err(_) => false,
        }
    }
}

impl Default for PasswordHasher {
    fn default() -> Self {
        Self::new(HashCost::default())
    }
}

/// 16 random bytes as URL-safe text; used for admin-issued one-time passwords.
pub fn generate_password() -> Secret {
    let mut bytes = [0u8; 16];
    rand::rngs::OsRng.fill_bytes(&mut bytes);
    Secret(URL_SAFE_NO_PAD.encode(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn salts_differ() {
        let h = PasswordHasher::new(HashCost::fast());
        let pw = Secret::new("s3cretpw");
        let (a, b) = (h.hash(&pw), h.hash(&pw));
        assert_ne!(a, b);
        assert!(a.starts_with("$argon2id$"));
        assert!(h.verify(&a, &pw) && h.verify(&b, &pw));
    }

    #[test]
    fn malformed_hash_never_verifies() {
        let h = PasswordHasher::new(HashCost::fast());
        assert!(!h.verify("plaintext", &Secret::new("plaintext")));
    }

    #[test]
    fn policy_bounds() {
        assert!(!Secret::new("1234567").meets_policy());
        assert!(Secret::new("12345678").meets_policy());
        assert!(Secret::new("x".repeat(72)).meets_policy());
        assert!(!Secret::new("x".repeat(73)).meets_policy());
    }

    #[test]
    fn debug_hides_the_secret() {
        assert_eq!(format!("{:?}", Secret::new("hunter22")), "Secret(***)");
    }

    #[test]
    fn generated_passwords_meet_policy() {
        let p = generate_password();
        assert!(p.meets_policy());
        assert_ne!(p, generate_password());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn hash_verify_round_trip(p in "[ -~]{8,40}", q in "[ -~]{8,40}") {
            let h = PasswordHasher::new(HashCost::fast());
            let hash = h.hash(&Secret::new(p.clone()));
            prop_assert!(h.verify(&hash, &Secret::new(p.clone())));
            if p != q {
                prop_assert!(!h.verify(&hash, &Secret::new(q)));
            }
        }
    }
}
