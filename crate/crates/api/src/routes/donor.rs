//! A donor's own profile: enrollment, reading and updating.

use axum::extract::State;
use axum::http::StatusCode;
use axum::Json;
use hemobank_core::{validate_required, DonorStatus};
use hemobank_store::{DonorPayload, RoleKind, RolePayload};
use serde::Deserialize;

use super::{parse_group, DonorOut};
use crate::error::ApiJson;
use crate::{ApiError, AppState, Caller};

#[derive(Deserialize)]
pub struct EnrollBody {
    #[serde(default)]
    phone: String,
    #[serde(default)]
    city: String,
    #[serde(default)]
    blood_group: String,
    available: Option<bool>,
}

pub async fn enroll(
    State(state): State<AppState>,
    caller: Caller,
    ApiJson(body): ApiJson<EnrollBody>,
) -> Result<(StatusCode, Json<DonorOut>), ApiError> {
    if caller.is(RoleKind::Donor) || state.store.donor_for_user(caller.user_id())?.is_some() {
        return Err(ApiError::conflict("ALREADY_ENROLLED", "account already has a donor profile"));
    }
    let report = validate_required([
        ("phone", body.phone.as_str()),
        ("city", body.city.as_str()),
        ("blood_group", body.blood_group.as_str()),
    ]);
    if !report.ok {
        return Err(ApiError::validation(report));
    }
    let blood_group = parse_group(&body.blood_group)?;
    state.store.upsert_role(
        caller.user_id(),
        RolePayload::Donor(DonorPayload {
            phone: body.phone.trim().to_owned(),
            city: body.city.trim().to_owned(),
            blood_group,
            status: DonorStatus::Active,
            available: body.available.unwrap_or(true),
        }),
    )?;
    state.auth.refresh_roles(caller.user_id())?;
    let view = state
        .store
        .donor_for_user(caller.user_id())?
        .ok_or_else(ApiError::internal)?;
    Ok((StatusCode::CREATED, Json(DonorOut::new(view, state.clock.today()))))
}

pub async fn get_profile(
    State(state): State<AppState>,
    caller: Caller,
) -> Result<Json<DonorOut>, ApiError> {
    caller.require(RoleKind::Donor)?;
    let view = state
        .store
        .donor_for_user(caller.user_id())?
        .ok_or_else(|| ApiError::not_found("UNKNOWN_DONOR", "no donor profile"))?;
    Ok(Json(DonorOut::new(view, state.clock.today())))
}

/// Partial update; absent fields keep their stored value. Status is admin-only.
#[derive(Deserialize)]
pub struct ProfileUpdate {
    phone: Option<String>,
    city: Option<String>,
    blood_group: Option<String>,
    available: Option<bool>,
}

pub async fn put_profile(
    State(state): State<AppState>,
    caller: Caller,
    ApiJson(body): ApiJson<ProfileUpdate>,
) -> Result<Json<DonorOut>, ApiError> {
    caller.require(RoleKind::Donor)?;
    let current = state
        .store
        .donor_for_user(caller.user_id())?
        .ok_or_else(|| ApiError::not_found("UNKNOWN_DONOR", "no donor profile"))?;
    let phone = body.phone.unwrap_or(current.donor.phone);
    let city = body.city.unwrap_or(current.donor.city);
    let report = validate_required([("phone", phone.as_str()), ("city", city.as_str())]);
    if !report.ok {
        return Err(ApiError::validation(report));
    }
    let blood_group = match body.blood_group {
        Some(raw) => parse_group(&raw)?,
        None => current.donor.blood_group,
    };
    state.store.update_donor(
        current.donor.donor_id,
        DonorPayload {
            phone: phone.trim().to_owned(),
            city: city.trim().to_owned(),
            blood_group,
            status: current.donor.status,
            available: body.available.unwrap_or(current.donor.available),
        },
    )?;
    let view = state
        .store
        .get_donor(current.donor.donor_id)?
        .ok_or_else(ApiError::internal)?;
    Ok(Json(DonorOut::new(view, state.clock.today())))
}
