//! Row types shared by every backend.

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, Utc};
use hemobank_core::{BloodGroup, DonorRecord, DonorStatus};
use serde::{Deserialize, Serialize};

use crate::error::{Result, StoreError};

pub const MAX_NAME_LEN: usize = 100;
pub const MAX_EMAIL_LEN: usize = 100;
pub const MAX_CITY_LEN: usize = 100;
pub const MAX_MESSAGE_LEN: usize = 2000;
pub const MAX_NOTIFICATION_LEN: usize = 500;
pub const MAX_PAGE_LIMIT: u32 = 100;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UserRow {
    pub user_id: i64,
    pub name: String,
    pub email: String,
    #[serde(skip_serializing)]
    pub password_hash: String,
    pub created_at: DateTime<Utc>,
}

#[derive(Debug, Clone)]
pub struct NewUser {
    pub name: String,
    pub email: String,
    pub password_hash: String,
}

impl NewUser {
    pub(crate) fn check(&self) -> Result<()> {
        check_text("name", &self.name, MAX_NAME_LEN)?;
        check_text("email", &self.email, MAX_EMAIL_LEN)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum RoleKind {
    Admin,
    Donor,
    Patient,
}

impl RoleKind {
    pub const fn as_str(self) -> &'static str {
        match self {
            RoleKind::Admin => "ADMIN",
            RoleKind::Donor => "DONOR",
            RoleKind::Patient => "PATIENT",
        }
    }
}

impl fmt::Display for RoleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Donor columns a caller may write. `last_donation_date` is owned by
/// [`crate::Store::record_donation`] and is preserved across upserts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DonorPayload {
    pub phone: String,
    pub city: String,
    pub blood_group: BloodGroup,
    pub status: DonorStatus,
    pub available: bool,
}

impl DonorPayload {
    pub(crate) fn check(&self) -> Result<()> {
        check_text("phone", &self.phone, 20)?;
        check_text("city", &self.city, MAX_CITY_LEN)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatientPayload {
    pub phone: String,
    pub city: String,
}

impl PatientPayload {
    pub(crate) fn check(&self) -> Result<()> {
        check_text("phone", &self.phone, 20)?;
        check_text("city", &self.city, MAX_CITY_LEN)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RolePayload {
    Donor(DonorPayload),
    Patient(PatientPayload),
    Admin,
}

impl RolePayload {
    pub fn kind(&self) -> RoleKind {
        match self {
            RolePayload::Donor(_) => RoleKind::Donor,
            RolePayload::Patient(_) => RoleKind::Patient,
            RolePayload::Admin => RoleKind::Admin,
        }
    }

    pub(crate) fn check(&self) -> Result<()> {
        match self {
            RolePayload::Donor(p) => p.check(),
            RolePayload::Patient(p) => p.check(),
            RolePayload::Admin => Ok(()),
        }
    }
}

pub type DonorRow = DonorRecord;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatientRow {
    pub patient_id: i64,
    pub user_id: i64,
    pub phone: String,
    pub city: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdminRow {
    pub admin_id: i64,
    pub user_id: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RoleRow {
    Donor(DonorRow),
    Patient(PatientRow),
    Admin(AdminRow),
}

impl RoleRow {
    pub fn role_id(&self) -> i64 {
        match self {
            RoleRow::Donor(d) => d.donor_id,
            RoleRow::Patient(p) => p.patient_id,
            RoleRow::Admin(a) => a.admin_id,
        }
    }

    pub fn user_id(&self) -> i64 {
        match self {
            RoleRow::Donor(d) => d.user_id,
            RoleRow::Patient(p) => p.user_id,
            RoleRow::Admin(a) => a.user_id,
        }
    }
}

/// A donor row joined with its user's name and email.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DonorView {
    #[serde(flatten)]
    pub donor: DonorRow,
    pub name: String,
    pub email: String,
}

impl AsRef<DonorRecord> for DonorView {
    fn as_ref(&self) -> &DonorRecord {
        &self.donor
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DonorFilter {
    pub blood_group: Option<BloodGroup>,
    pub search: Option<String>,
}

impl DonorFilter {
    /// Brute-force form of the filter; backends must agree with it.
    pub fn accepts(&self, view: &DonorView) -> bool {
        if self.blood_group.is_some_and(|g| g != view.donor.blood_group) {
            return false;
        }
        match self.normalized_search() {
            None => true,
            Some(needle) => [
                view.name.as_str(),
                view.donor.phone.as_str(),
                view.email.as_str(),
                view.donor.city.as_str(),
            ]
            .iter()
            .any(|hay| hay.to_ascii_lowercase().contains(&needle)),
        }
    }

    pub(crate) fn normalized_search(&self) -> Option<String> {
        self.search
            .as_deref()
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::to_ascii_lowercase)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PageRequest {
    offset: u32,
    limit: u32,
}

impl PageRequest {
    pub fn new(offset: u32, limit: u32) -> Result<Self> {
        if limit == 0 || limit > MAX_PAGE_LIMIT {
            return Err(StoreError::InvalidPage);
        }
        Ok(Self { offset, limit })
    }

    pub fn first(limit: u32) -> Result<Self> {
        Self::new(0, limit)
    }

    pub fn offset(&self) -> u32 {
        self.offset
    }

    pub fn limit(&self) -> u32 {
        self.limit
    }

    pub(crate) fn slice<T: Clone>(&self, items: &[T]) -> Vec<T> {
        items
            .iter()
            .skip(self.offset as usize)
            .take(self.limit as usize)
            .cloned()
            .collect()
    }
}

impl Default for PageRequest {
    fn default() -> Self {
        Self { offset: 0, limit: MAX_PAGE_LIMIT }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Page<T> {
    pub items: Vec<T>,
    pub total: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum RequestStatus {
    Open,
    Matched,
    Fulfilled,
    Cancelled,
}

impl RequestStatus {
    pub const ALL: [RequestStatus; 4] = [
        RequestStatus::Open,
        RequestStatus::Matched,
        RequestStatus::Fulfilled,
        RequestStatus::Cancelled,
    ];

    pub const fn as_str(self) -> &'static str {
        match self {
            RequestStatus::Open => "OPEN",
            RequestStatus::Matched => "MATCHED",
            RequestStatus::Fulfilled => "FULFILLED",
            RequestStatus::Cancelled => "CANCELLED",
        }
    }

    pub const fn can_transition_to(self, to: RequestStatus) -> bool {
        use RequestStatus::*;
        matches!(
            (self, to),
            (Open, Matched) | (Open, Cancelled) | (Matched, Fulfilled) | (Matched, Cancelled)
        )
    }

    pub const fn is_terminal(self) -> bool {
        matches!(self, RequestStatus::Fulfilled | RequestStatus::Cancelled)
    }
}

impl fmt::Display for RequestStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RequestStatus {
    type Err = StoreError;

    fn from_str(s: &str) -> Result<Self> {
        RequestStatus::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| StoreError::Backend(format!("bad request status {s:?}")))
    }
}

#[derive(Debug, Clone)]
pub struct NewBloodRequest {
    pub patient_id: i64,
    pub blood_group: BloodGroup,
    pub quantity_units: u32,
    pub city: String,
}

impl NewBloodRequest {
    pub(crate) fn check(&self) -> Result<()> {
        if self.quantity_units < 1 {
            return Err(StoreError::InvalidQuantity);
        }
        check_text("city", &self.city, MAX_CITY_LEN)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BloodRequestRow {
    pub request_id: i64,
    pub patient_id: i64,
    pub blood_group: BloodGroup,
    pub quantity_units: u32,
    pub city: String,
    pub status: RequestStatus,
    pub created_at: DateTime<Utc>,
}

#[derive(Debug, Clone)]
pub struct NewDonation {
    pub donor_id: i64,
    pub donated_on: NaiveDate,
    pub request_id: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DonationRow {
    pub donation_id: i64,
    /// Kept after the donor row is deleted.
    pub donor_id: i64,
    pub request_id: Option<i64>,
    pub donated_on: NaiveDate,
}

/// Everything `record_donation` changed in its single atomic unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordedDonation {
    pub donation: DonationRow,
    pub donor: DonorRow,
    /// The linked request, when it moved MATCHED -> FULFILLED.
    pub fulfilled_request: Option<BloodRequestRow>,
}

#[derive(Debug, Clone)]
pub struct NewMessage {
    pub sender_user_id: i64,
    pub recipient_user_id: i64,
    pub body: String,
}

impl NewMessage {
    pub(crate) fn check(&self) -> Result<()> {
        if self.sender_user_id == self.recipient_user_id {
            return Err(StoreError::SelfMessage);
        }
        check_text("body", &self.body, MAX_MESSAGE_LEN)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MessageRow {
    pub message_id: i64,
    pub sender_user_id: i64,
    pub recipient_user_id: i64,
    pub body: String,
    pub sent_at: DateTime<Utc>,
    pub read: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConversationSummary {
    pub partner_user_id: i64,
    pub partner_name: String,
    pub last_sent_at: DateTime<Utc>,
    pub unread: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum NotificationKind {
    MatchFound,
    RequestStatus,
    AdminNotice,
}

impl NotificationKind {
    pub const fn as_str(self) -> &'static str {
        match self {
            NotificationKind::MatchFound => "MATCH_FOUND",
            NotificationKind::RequestStatus => "REQUEST_STATUS",
            NotificationKind::AdminNotice => "ADMIN_NOTICE",
        }
    }
}

impl FromStr for NotificationKind {
    type Err = StoreError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "MATCH_FOUND" => Ok(NotificationKind::MatchFound),
            "REQUEST_STATUS" => Ok(NotificationKind::RequestStatus),
            "ADMIN_NOTICE" => Ok(NotificationKind::AdminNotice),
            other => Err(StoreError::Backend(format!("bad notification kind {other:?}"))),
        }
    }
}

/// A notification to insert. MATCH_FOUND rows carrying a `request_id` are
/// unique per (user, request); a duplicate insert is a no-op.
#[derive(Debug, Clone)]
pub struct NewNotification {
    pub user_id: i64,
    pub kind: NotificationKind,
    pub payload: String,
    pub request_id: Option<i64>,
}

impl NewNotification {
    pub(crate) fn check(&self) -> Result<()> {
        check_text("payload", &self.payload, MAX_NOTIFICATION_LEN)
    }

    pub(crate) fn is_deduplicated(&self) -> bool {
        self.kind == NotificationKind::MatchFound && self.request_id.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NotificationRow {
    pub notification_id: i64,
    pub user_id: i64,
    pub kind: NotificationKind,
    pub payload: String,
    pub request_id: Option<i64>,
    pub created_at: DateTime<Utc>,
    pub read: bool,
}

fn check_text(field: &'static str, value: &str, max: usize) -> Result<()> {
    if value.trim().is_empty() {
        return Err(StoreError::EmptyField(field));
    }
    if value.chars().count() > max {
        return Err(StoreError::FieldTooLong { field, max });
    }
    Ok(())
}

/// Current instant at the microsecond precision every backend stores.
pub(crate) fn now_micros() -> DateTime<Utc> {
    let now = Utc::now();
    DateTime::from_timestamp_micros(now.timestamp_micros()).unwrap_or(now)
}
