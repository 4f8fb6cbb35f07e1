use axum::routing::{delete, get, post, put};
use axum::Router;
use chrono::NaiveDate;
use hemobank_core::{is_visible, next_eligible_date, BloodGroup};
use hemobank_store::{DonorView, PageRequest};
use serde::{Deserialize, Serialize};

use crate::{openapi, ApiError, AppState};

pub mod account;
pub mod admin;
pub mod donations;
pub mod donor;
pub mod messages;
pub mod notifications;
pub mod patient;
pub mod requests;

pub fn routes() -> Router<AppState> {
    Router::new()
        .route("/api/openapi.json", get(openapi::document))
        .route("/api/register", post(account::register))
        .route("/api/login", post(account::login))
        .route("/api/logout", post(account::logout))
        .route("/api/me", get(account::me))
        .route("/api/donor/enroll", post(donor::enroll))
        .route("/api/donor/profile", get(donor::get_profile).put(donor::put_profile))
        .route("/api/patient/enroll", post(patient::enroll))
        .route("/api/patient/profile", get(patient::get_profile).put(patient::put_profile))
        .route("/api/requests", post(requests::create).get(requests::list_own))
        .route("/api/requests/{id}", get(requests::get_one))
        .route("/api/requests/{id}/cancel", post(requests::cancel))
        .route("/api/requests/{id}/matches", get(requests::matches))
        .route("/api/donations", post(donations::record))
        .route("/api/admin/donors", get(admin::list_donors).post(admin::add_donor))
        .route("/api/admin/donors/{id}", put(admin::update_donor).delete(admin::delete_donor))
        .route("/api/admin/users", get(admin::list_users))
        .route("/api/admin/users/{id}", delete(admin::delete_user))
        .route("/api/admin/requests", get(admin::list_requests))
        .route("/api/admin/notices", post(admin::send_notice))
        .route("/api/messages", post(messages::send).get(messages::conversations))
        .route("/api/messages/with/{user_id}", get(messages::thread))
        .route("/api/notifications", get(notifications::list))
        .route("/api/notifications/{id}/read", post(notifications::mark_read))
}

pub(crate) const DEFAULT_PAGE_LIMIT: u32 = 50;

#[derive(Debug, Default, Deserialize)]
pub struct PageQuery {
    pub offset: Option<u32>,
    pub limit: Option<u32>,
}

impl PageQuery {
    pub fn page(&self) -> Result<PageRequest, ApiError> {
        Ok(PageRequest::new(self.offset.unwrap_or(0), self.limit.unwrap_or(DEFAULT_PAGE_LIMIT))?)
    }
}

pub(crate) fn parse_group(raw: &str) -> Result<BloodGroup, ApiError> {
    raw.trim().parse().map_err(|_| ApiError::invalid_blood_group(raw))
}

/// A donor row as returned to its owner and to admins, with the cooldown
/// state evaluated on the server's date.
#[derive(Debug, Clone, Serialize)]
pub struct DonorOut {
    #[serde(flatten)]
    pub view: DonorView,
    pub next_eligible_date: Option<NaiveDate>,
    pub visible_now: bool,
}

impl DonorOut {
    pub fn new(view: DonorView, today: NaiveDate) -> Self {
        Self {
            next_eligible_date: view.donor.last_donation_date.map(next_eligible_date),
            visible_now: is_visible(&view.donor, today),
            view,
        }
    }
}
