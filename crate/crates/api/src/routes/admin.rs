//! Admin-only donor management, user management and oversight.

use axum::extract::State;
use axum::http::StatusCode;
use axum::Json;
use hemobank_core::{validate_required, DonorStatus, ValidationReport};
use hemobank_store::{
    BloodRequestRow, DonorFilter, DonorPayload, NewNotification, NotificationKind,
    NotificationRow, Page, RequestStatus, RoleKind, RolePayload, UserRow,
};
use serde::{Deserialize, Serialize};

use super::{parse_group, DonorOut, PageQuery};
use crate::error::{ApiJson, ApiPath, ApiQuery};
use crate::{ApiError, AppState, Caller};

#[derive(Deserialize)]
pub struct DonorQuery {
    blood_group: Option<String>,
    q: Option<String>,
    offset: Option<u32>,
    limit: Option<u32>,
}

pub async fn list_donors(
    State(state): State<AppState>,
    caller: Caller,
    ApiQuery(query): ApiQuery<DonorQuery>,
) -> Result<Json<Page<DonorOut>>, ApiError> {
    caller.require(RoleKind::Admin)?;
    let blood_group = match query.blood_group.as_deref().map(str::trim) {
        None | Some("") => None,
        Some(raw) => Some(parse_group(raw)?),
    };
    let filter = DonorFilter { blood_group, search: query.q.filter(|q| !q.trim().is_empty()) };
    let page = state.store.find_donors(&filter, PageQuery { offset: query.offset, limit: query.limit }.page()?)?;
    let today = state.clock.today();
    Ok(Json(Page {
        items: page.items.into_iter().map(|v| DonorOut::new(v, today)).collect(),
        total: page.total,
    }))
}

#[derive(Deserialize)]
pub struct NewDonorBody {
    #[serde(default)]
    name: String,
    #[serde(default)]
    email: String,
    #[serde(default)]
    phone: String,
    #[serde(default)]
    city: String,
    #[serde(default)]
    blood_group: String,
    status: Option<DonorStatus>,
    available: Option<bool>,
}

#[derive(Serialize)]
pub struct ProvisionedDonor {
    donor: DonorOut,
    /// Shown once; only its hash is stored.
    temporary_password: String,
}

pub async fn add_donor(
    State(state): State<AppState>,
    caller: Caller,
    ApiJson(body): ApiJson<NewDonorBody>,
) -> Result<(StatusCode, Json<ProvisionedDonor>), ApiError> {
    caller.require(RoleKind::Admin)?;
    let report = validate_required([
        ("name", body.name.as_str()),
        ("email", body.email.as_str()),
        ("phone", body.phone.as_str()),
        ("city", body.city.as_str()),
        ("blood_group", body.blood_group.as_str()),
    ]);
    if !report.ok {
        return Err(ApiError::validation(report));
    }
    let payload = DonorPayload {
        phone: body.phone.trim().to_owned(),
        city: body.city.trim().to_owned(),
        blood_group: parse_group(&body.blood_group)?,
        status: body.status.unwrap_or(DonorStatus::Active),
        available: body.available.unwrap_or(true),
    };
    let (name, email) = (body.name, body.email);
    let (user, _, password) = state
        .with_hashing(move |auth| auth.provision(&name, &email, RolePayload::Donor(payload)))
        .await??;
    let view = state.store.donor_for_user(user.user_id)?.ok_or_else(ApiError::internal)?;
    Ok((
        StatusCode::CREATED,
        Json(ProvisionedDonor {
            donor: DonorOut::new(view, state.clock.today()),
            temporary_password: password.expose().to_owned(),
        }),
    ))
}

/// Partial donor update; absent fields keep their stored value.
#[derive(Deserialize)]
pub struct DonorUpdate {
    phone: Option<String>,
    city: Option<String>,
    blood_group: Option<String>,
    status: Option<DonorStatus>,
    available: Option<bool>,
}

pub async fn update_donor(
    State(state): State<AppState>,
    caller: Caller,
    ApiPath(id): ApiPath<i64>,
    ApiJson(body): ApiJson<DonorUpdate>,
) -> Result<Json<DonorOut>, ApiError> {
    caller.require(RoleKind::Admin)?;
    let current = state
        .store
        .get_donor(id)?
        .ok_or_else(|| ApiError::not_found("UNKNOWN_DONOR", format!("no donor {id}")))?
        .donor;
    let phone = body.phone.unwrap_or(current.phone);
    let city = body.city.unwrap_or(current.city);
    let report = validate_required([("phone", phone.as_str()), ("city", city.as_str())]);
    if !report.ok {
        return Err(ApiError::validation(report));
    }
    let blood_group = match body.blood_group {
        Some(raw) => parse_group(&raw)?,
        None => current.blood_group,
    };
    state.store.update_donor(
        id,
        DonorPayload {
            phone: phone.trim().to_owned(),
            city: city.trim().to_owned(),
            blood_group,
            status: body.status.unwrap_or(current.status),
            available: body.available.unwrap_or(current.available),
        },
    )?;
    let view = state.store.get_donor(id)?.ok_or_else(ApiError::internal)?;
    Ok(Json(DonorOut::new(view, state.clock.today())))
}

pub async fn delete_donor(
    State(state): State<AppState>,
    caller: Caller,
    ApiPath(id): ApiPath<i64>,
) -> Result<StatusCode, ApiError> {
    caller.require(RoleKind::Admin)?;
    let view = state
        .store
        .get_donor(id)?
        .ok_or_else(|| ApiError::not_found("UNKNOWN_DONOR", format!("no donor {id}")))?;
    state.store.delete_donor(id)?;
    state.auth.refresh_roles(view.donor.user_id)?;
    Ok(StatusCode::NO_CONTENT)
}

#[derive(Serialize)]
pub struct UserOut {
    #[serde(flatten)]
    user: UserRow,
    roles: Vec<RoleKind>,
}

pub async fn list_users(
    State(state): State<AppState>,
    caller: Caller,
    ApiQuery(query): ApiQuery<PageQuery>,
) -> Result<Json<Page<UserOut>>, ApiError> {
    caller.require(RoleKind::Admin)?;
    let page = state.store.list_users(query.page()?)?;
    let items = page
        .items
        .into_iter()
        .map(|user| Ok(UserOut { roles: state.store.roles_of(user.user_id)?, user }))
        .collect::<Result<_, ApiError>>()?;
    Ok(Json(Page { items, total: page.total }))
}

pub async fn delete_user(
    State(state): State<AppState>,
    caller: Caller,
    ApiPath(id): ApiPath<i64>,
) -> Result<StatusCode, ApiError> {
    caller.require(RoleKind::Admin)?;
    if id == caller.user_id() {
        return Err(ApiError::conflict("SELF_DELETE", "admins cannot delete their own account"));
    }
    if state.store.get_user(id)?.is_none() {
        return Err(ApiError::not_found("UNKNOWN_USER", format!("no user {id}")));
    }
    state.store.delete_user(id)?;
    state.auth.sessions().revoke_user(id);
    Ok(StatusCode::NO_CONTENT)
}

#[derive(Deserialize)]
pub struct RequestQuery {
    status: Option<String>,
    offset: Option<u32>,
    limit: Option<u32>,
}

pub async fn list_requests(
    State(state): State<AppState>,
    caller: Caller,
    ApiQuery(query): ApiQuery<RequestQuery>,
) -> Result<Json<Page<BloodRequestRow>>, ApiError> {
    caller.require(RoleKind::Admin)?;
    let status = match query.status.as_deref().map(str::trim) {
        None | Some("") => None,
        Some(raw) => Some(raw.to_ascii_uppercase().parse::<RequestStatus>().map_err(|_| {
            ApiError::unprocessable("INVALID_STATUS", format!("{raw:?} is not a request status"))
        })?),
    };
    Ok(Json(state.store.list_requests(status, PageQuery { offset: query.offset, limit: query.limit }.page()?)?))
}

#[derive(Deserialize)]
pub struct NoticeBody {
    user_id: Option<i64>,
    #[serde(default)]
    message: String,
}

pub async fn send_notice(
    State(state): State<AppState>,
    caller: Caller,
    ApiJson(body): ApiJson<NoticeBody>,
) -> Result<(StatusCode, Json<NotificationRow>), ApiError> {
    caller.require(RoleKind::Admin)?;
    let Some(user_id) = body.user_id else {
        return Err(ApiError::validation(ValidationReport::missing("user_id")));
    };
    if state.store.get_user(user_id)?.is_none() {
        return Err(ApiError::not_found("UNKNOWN_USER", format!("no user {user_id}")));
    }
    let row = state
        .store
        .insert_notification(NewNotification {
            user_id,
            kind: NotificationKind::AdminNotice,
            payload: body.message.trim().to_owned(),
            request_id: None,
        })?
        .ok_or_else(ApiError::internal)?;
    Ok((StatusCode::CREATED, Json(row)))
}
