//! Patient blood requests and donor matching.

use axum::extract::State;
use axum::http::StatusCode;
use axum::Json;
use hemobank_core::{cities_match, BloodGroup, match_donors, validate_required, MatchQuery, ValidationReport};
use hemobank_store::{
    BloodRequestRow, NewBloodRequest, NewNotification, NotificationKind, PatientRow,
    RequestStatus, RoleKind, StoreError,
};
use serde::{Deserialize, Serialize};

use super::parse_group;
use crate::error::{ApiJson, ApiPath};
use crate::{ApiError, AppState, Caller};

#[derive(Deserialize)]
pub struct CreateBody {
    #[serde(default)]
    blood_group: String,
    #[serde(default)]
    city: String,
    quantity_units: Option<i64>,
}

pub(crate) fn own_patient(state: &AppState, caller: &Caller) -> Result<PatientRow, ApiError> {
    caller.require(RoleKind::Patient)?;
    state
        .store
        .patient_for_user(caller.user_id())?
        .ok_or_else(|| ApiError::not_found("UNKNOWN_PATIENT", "no patient profile"))
}

pub async fn create(
    State(state): State<AppState>,
    caller: Caller,
    ApiJson(body): ApiJson<CreateBody>,
) -> Result<(StatusCode, Json<BloodRequestRow>), ApiError> {
    let patient = own_patient(&state, &caller)?;
    let mut report = validate_required([
        ("blood_group", body.blood_group.as_str()),
        ("city", body.city.as_str()),
    ]);
    if body.quantity_units.is_none() {
        report = report.merge(ValidationReport::missing("quantity_units"));
    }
    if !report.ok {
        return Err(ApiError::validation(report));
    }
    let blood_group = parse_group(&body.blood_group)?;
    let quantity_units = body
        .quantity_units
        .and_then(|q| u32::try_from(q).ok())
        .ok_or(StoreError::InvalidQuantity)?;
    let row = state.store.insert_request(NewBloodRequest {
        patient_id: patient.patient_id,
        blood_group,
        quantity_units,
        city: body.city.trim().to_owned(),
    })?;
    Ok((StatusCode::CREATED, Json(row)))
}

pub async fn list_own(
    State(state): State<AppState>,
    caller: Caller,
) -> Result<Json<Vec<BloodRequestRow>>, ApiError> {
    let patient = own_patient(&state, &caller)?;
    Ok(Json(state.store.list_requests_by_patient(patient.patient_id)?))
}

/// Loads a request the caller may act on: its owning patient or any admin.
fn accessible(state: &AppState, caller: &Caller, id: i64) -> Result<BloodRequestRow, ApiError> {
    caller.require_any(&[RoleKind::Patient, RoleKind::Admin])?;
    let request = state
        .store
        .get_request(id)?
        .ok_or_else(|| ApiError::not_found("UNKNOWN_REQUEST", format!("no request {id}")))?;
    if caller.is(RoleKind::Admin) {
        return Ok(request);
    }
    let owns = state
        .store
        .patient_for_user(caller.user_id())?
        .is_some_and(|p| p.patient_id == request.patient_id);
    if owns {
        Ok(request)
    } else {
        Err(ApiError::forbidden("NOT_OWNER", "request belongs to another patient"))
    }
}

pub async fn get_one(
    State(state): State<AppState>,
    caller: Caller,
    ApiPath(id): ApiPath<i64>,
) -> Result<Json<BloodRequestRow>, ApiError> {
    Ok(Json(accessible(&state, &caller, id)?))
}

pub async fn cancel(
    State(state): State<AppState>,
    caller: Caller,
    ApiPath(id): ApiPath<i64>,
) -> Result<Json<BloodRequestRow>, ApiError> {
    let request = accessible(&state, &caller, id)?;
    let row = state.store.set_request_status(request.request_id, RequestStatus::Cancelled)?;
    notify_status(&state, &row)?;
    Ok(Json(row))
}

/// Tells the owning patient that a request changed state.
pub(crate) fn notify_status(state: &AppState, row: &BloodRequestRow) -> Result<(), ApiError> {
    let Some(patient) = state.store.get_patient(row.patient_id)? else {
        return Ok(());
    };
    state.store.insert_notification(NewNotification {
        user_id: patient.user_id,
        kind: NotificationKind::RequestStatus,
        payload: format!("Request #{} is now {}", row.request_id, row.status),
        request_id: Some(row.request_id),
    })?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct MatchItem {
    pub donor_id: i64,
    pub user_id: i64,
    pub name: String,
    pub phone: String,
    pub city: String,
    pub blood_group: BloodGroup,
    pub city_match: bool,
    pub exact_group: bool,
}

pub async fn matches(
    State(state): State<AppState>,
    caller: Caller,
    ApiPath(id): ApiPath<i64>,
) -> Result<Json<Vec<MatchItem>>, ApiError> {
    let mut request = accessible(&state, &caller, id)?;
    let query = MatchQuery {
        blood_group: request.blood_group,
        city: request.city.clone(),
        now: state.clock.today(),
    };
    let donors = state.store.all_donors()?;
    let found = match_donors(&query, &donors);

    if !found.is_empty() && request.status == RequestStatus::Open {
        match state.store.set_request_status(request.request_id, RequestStatus::Matched) {
            Ok(row) => {
                notify_status(&state, &row)?;
                request = row;
            }
            // Another call won the race; reload to report the current state.
            Err(StoreError::IllegalRequestState { .. }) => {
                request = state.store.get_request(id)?.ok_or_else(ApiError::internal)?;
            }
            Err(e) => return Err(e.into()),
        }
    }
    if matches!(request.status, RequestStatus::Open | RequestStatus::Matched) {
        for view in &found {
            state.store.insert_notification(NewNotification {
                user_id: view.donor.user_id,
                kind: NotificationKind::MatchFound,
                payload: format!(
                    "Blood request #{} needs {} in {}",
                    request.request_id, request.blood_group, request.city
                ),
                request_id: Some(request.request_id),
            })?;
        }
    }

    let items = found
        .into_iter()
        .map(|view| MatchItem {
            donor_id: view.donor.donor_id,
            user_id: view.donor.user_id,
            name: view.name.clone(),
            phone: view.donor.phone.clone(),
            city: view.donor.city.clone(),
            blood_group: view.donor.blood_group,
            city_match: cities_match(&view.donor.city, &request.city),
            exact_group: view.donor.blood_group == request.blood_group,
        })
        .collect();
    Ok(Json(items))
}
