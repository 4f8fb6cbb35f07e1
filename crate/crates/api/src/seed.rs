//! Demo data for local runs and end-to-end checks.

use std::fmt;
use std::str::FromStr;

use hemobank_auth::{Auth, AuthError, Secret};
use hemobank_core::{BloodGroup, DonorStatus};
use hemobank_store::{DonorPayload, NewUser, PatientPayload, RolePayload, Store};

/// Password shared by every demo account.
pub const DEMO_PASSWORD: &str = "demo-password";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedProfile {
    None,
    /// Two donors in different cities plus a patient and an admin.
    Demo,
}

impl FromStr for SeedProfile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(SeedProfile::None),
            "demo" => Ok(SeedProfile::Demo),
            other => Err(format!("unknown seed profile {other:?} (expected none or demo)")),
        }
    }
}

impl fmt::Display for SeedProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SeedProfile::None => "none",
            SeedProfile::Demo => "demo",
        })
    }
}

pub struct DemoAccount {
    pub name: &'static str,
    pub email: &'static str,
    pub role: RolePayload,
}

pub fn demo_accounts() -> Vec<DemoAccount> {
    let donor = |phone: &str, city: &str, blood_group| {
        RolePayload::Donor(DonorPayload {
            phone: phone.into(),
            city: city.into(),
            blood_group,
            status: DonorStatus::Active,
            available: true,
        })
    };
    vec![
        DemoAccount {
            name: "Donor1",
            email: "donor1@test.com",
            role: donor("0987654321", "Sukot", BloodGroup::APos),
        },
        DemoAccount {
            name: "Donor2",
            email: "donor2@test.com",
            role: donor("0123456789", "Guprenwala", BloodGroup::ANeg),
        },
        DemoAccount {
            name: "Patient1",
            email: "patient1@test.com",
            role: RolePayload::Patient(PatientPayload {
                phone: "0111222333".into(),
                city: "Sukot".into(),
            }),
        },
        DemoAccount { name: "Admin1", email: "admin1@test.com", role: RolePayload::Admin },
    ]
}

/// Inserts the profile's accounts, skipping emails that already exist.
/// Returns how many accounts were created.
pub fn seed(store: &dyn Store, auth: &Auth, profile: SeedProfile) -> Result<usize, AuthError> {
    if profile == SeedProfile::None {
        return Ok(0);
    }
    let hash = auth.hasher().hash(&Secret::new(DEMO_PASSWORD.to_owned()));
    let mut created = 0;
    for account in demo_accounts() {
        if store.find_user_by_email(account.email)?.is_some() {
            continue;
        }
        let user = NewUser {
            name: account.name.into(),
            email: account.email.into(),
            password_hash: hash.clone(),
        };
        store.create_user_with_role(user, account.role)?;
        created += 1;
    }
    Ok(created)
}
