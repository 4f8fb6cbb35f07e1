//! Repositories for users, role profiles, blood requests, donations,
//! messages and notifications.
//!
//! Two backends implement [`Store`]: [`MemoryStore`] for tests and demos and
//! [`SqliteStore`] for durable deployments. [`open`] picks one from a
//! `DATABASE_URL`-style connection string.

use std::sync::Arc;

use chrono::NaiveDate;

pub mod error;
pub mod fault;
pub mod memory;
pub mod model;
pub mod sqlite;

pub use error::{Result, StoreError};
pub use fault::{FaultHook, FaultInjector, FaultSite};
pub use memory::MemoryStore;
pub use model::*;
pub use sqlite::SqliteStore;

pub const SCHEMA_VERSION: u32 = 1;

pub const TABLES: [&str; 8] = [
    "users",
    "donors",
    "patients",
    "admins",
    "blood_requests",
    "donations",
    "messages",
    "notifications",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Migration {
    pub version: u32,
    /// False when the store was already at `version`.
    pub applied: bool,
}

/// The repository contract shared by all backends.
///
/// Every method runs as one atomic unit. Methods other than `migrate` and
/// `schema_version` fail with [`StoreError::NotMigrated`] on a fresh store.
pub trait Store: Send + Sync {
    fn migrate(&self) -> Result<Migration>;
    fn schema_version(&self) -> Result<Option<u32>>;

    // users
    fn insert_user(&self, user: NewUser) -> Result<UserRow>;
    fn get_user(&self, user_id: i64) -> Result<Option<UserRow>>;
    fn find_user_by_email(&self, email: &str) -> Result<Option<UserRow>>;
    fn list_users(&self, page: PageRequest) -> Result<Page<UserRow>>;
    /// Removes the user together with its role rows, messages and
    /// notifications. Donations keep their (now dangling) donor id.
    fn delete_user(&self, user_id: i64) -> Result<()>;

    // roles
    fn roles_of(&self, user_id: i64) -> Result<Vec<RoleKind>>;
    /// Creates the role row for `user_id` or replaces its payload, keeping
    /// the role id.
    fn upsert_role(&self, user_id: i64, payload: RolePayload) -> Result<RoleRow>;
    fn create_user_with_role(&self, user: NewUser, payload: RolePayload)
        -> Result<(UserRow, RoleRow)>;
    fn patient_for_user(&self, user_id: i64) -> Result<Option<PatientRow>>;
    fn get_patient(&self, patient_id: i64) -> Result<Option<PatientRow>>;

    // donors
    fn get_donor(&self, donor_id: i64) -> Result<Option<DonorView>>;
    fn donor_for_user(&self, user_id: i64) -> Result<Option<DonorView>>;
    fn update_donor(&self, donor_id: i64, payload: DonorPayload) -> Result<DonorRow>;
    /// Filtered donor table, ordered by `donor_id`, with the unpaged total.
    fn find_donors(&self, filter: &DonorFilter, page: PageRequest) -> Result<Page<DonorView>>;
    fn all_donors(&self) -> Result<Vec<DonorView>>;
    fn delete_donor(&self, donor_id: i64) -> Result<()>;

    // donations
    /// Inserts the donation and moves the donor's cooldown clock in one unit.
    /// A linked MATCHED request becomes FULFILLED in the same unit.
    fn record_donation(&self, donation: NewDonation, today: NaiveDate) -> Result<RecordedDonation>;
    fn list_donations(&self, donor_id: i64) -> Result<Vec<DonationRow>>;

    // requests
    fn insert_request(&self, request: NewBloodRequest) -> Result<BloodRequestRow>;
    fn get_request(&self, request_id: i64) -> Result<Option<BloodRequestRow>>;
    fn set_request_status(&self, request_id: i64, to: RequestStatus) -> Result<BloodRequestRow>;
    fn list_requests_by_patient(&self, patient_id: i64) -> Result<Vec<BloodRequestRow>>;
    fn list_requests(
        &self,
        status: Option<RequestStatus>,
        page: PageRequest,
    ) -> Result<Page<BloodRequestRow>>;

    // messages
    fn insert_message(&self, message: NewMessage) -> Result<MessageRow>;
    /// Both directions between `a` and `b`, oldest first.
    fn list_conversation(&self, a: i64, b: i64, page: PageRequest) -> Result<Vec<MessageRow>>;
    /// Marks the listed messages read when `reader` is their recipient.
    /// Returns how many changed.
    fn mark_read(&self, reader: i64, message_ids: &[i64]) -> Result<u64>;
    fn conversations(&self, user_id: i64) -> Result<Vec<ConversationSummary>>;

    // notifications
    /// `Ok(None)` when a deduplicated notification already exists.
    fn insert_notification(&self, notification: NewNotification)
        -> Result<Option<NotificationRow>>;
    /// Newest first.
    fn list_notifications(&self, user_id: i64) -> Result<Vec<NotificationRow>>;
    /// Fails with `UnknownNotification` for ids owned by someone else.
    fn mark_notification_read(&self, user_id: i64, notification_id: i64)
        -> Result<NotificationRow>;
}

/// Opens a store from a connection string.
///
/// Accepted forms: `memory:` (or `memory://`), `sqlite::memory:`,
/// `sqlite://<path>` and `sqlite:<path>`.
pub fn open(url: &str) -> Result<Arc<dyn Store>> {
    let url = url.trim();
    if url.is_empty() {
        return Err(StoreError::InvalidUrl("empty connection string".into()));
    }
    if matches!(url, "memory:" | "memory://" | "mem:") {
        return Ok(Arc::new(MemoryStore::new()));
    }
    if url == "sqlite::memory:" {
        return Ok(Arc::new(SqliteStore::open_in_memory()?));
    }
    if let Some(path) = url.strip_prefix("sqlite://").or_else(|| url.strip_prefix("sqlite:")) {
        if path.is_empty() {
            return Err(StoreError::InvalidUrl(url.into()));
        }
        return Ok(Arc::new(SqliteStore::open(path)?));
    }
    Err(StoreError::InvalidUrl(url.into()))
}
