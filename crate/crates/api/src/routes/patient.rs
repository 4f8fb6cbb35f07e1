use axum::extract::State;
use axum::http::StatusCode;
use axum::Json;
use hemobank_core::validate_required;
use hemobank_store::{PatientPayload, PatientRow, RoleKind, RolePayload, RoleRow};
use serde::Deserialize;

use crate::error::ApiJson;
use crate::{ApiError, AppState, Caller};

#[derive(Deserialize)]
pub struct PatientBody {
    phone: Option<String>,
    city: Option<String>,
}

fn payload(phone: String, city: String) -> Result<PatientPayload, ApiError> {
    let report = validate_required([("phone", phone.as_str()), ("city", city.as_str())]);
    if !report.ok {
        return Err(ApiError::validation(report));
    }
    Ok(PatientPayload { phone: phone.trim().to_owned(), city: city.trim().to_owned() })
}

fn into_patient(role: RoleRow) -> Result<PatientRow, ApiError> {
    match role {
        RoleRow::Patient(p) => Ok(p),
        _ => Err(ApiError::internal()),
    }
}

pub async fn enroll(
    State(state): State<AppState>,
    caller: Caller,
    ApiJson(body): ApiJson<PatientBody>,
) -> Result<(StatusCode, Json<PatientRow>), ApiError> {
    if state.store.patient_for_user(caller.user_id())?.is_some() {
        return Err(ApiError::conflict("ALREADY_ENROLLED", "account already has a patient profile"));
    }
    let payload = payload(body.phone.unwrap_or_default(), body.city.unwrap_or_default())?;
    let row = into_patient(state.store.upsert_role(caller.user_id(), RolePayload::Patient(payload))?)?;
    state.auth.refresh_roles(caller.user_id())?;
    Ok((StatusCode::CREATED, Json(row)))
}

async fn own_profile(state: &AppState, caller: &Caller) -> Result<PatientRow, ApiError> {
    caller.require(RoleKind::Patient)?;
    state
        .store
        .patient_for_user(caller.user_id())?
        .ok_or_else(|| ApiError::not_found("UNKNOWN_PATIENT", "no patient profile"))
}

pub async fn get_profile(
    State(state): State<AppState>,
    caller: Caller,
) -> Result<Json<PatientRow>, ApiError> {
    Ok(Json(own_profile(&state, &caller).await?))
}

pub async fn put_profile(
    State(state): State<AppState>,
    caller: Caller,
    ApiJson(body): ApiJson<PatientBody>,
) -> Result<Json<PatientRow>, ApiError> {
    let current = own_profile(&state, &caller).await?;
    let payload = payload(
        body.phone.unwrap_or(current.phone),
        body.city.unwrap_or(current.city),
    )?;
    let row = into_patient(state.store.upsert_role(caller.user_id(), RolePayload::Patient(payload))?)?;
    Ok(Json(row))
}
