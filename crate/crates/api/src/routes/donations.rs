use axum::extract::State;
use axum::http::StatusCode;
use axum::Json;
use chrono::NaiveDate;
use hemobank_core::ValidationReport;
use hemobank_store::{BloodRequestRow, DonationRow, NewDonation, RoleKind};
use serde::{Deserialize, Serialize};

use super::requests::notify_status;
use super::DonorOut;
use crate::error::ApiJson;
use crate::{ApiError, AppState, Caller};

#[derive(Deserialize)]
pub struct DonationBody {
    /// Defaults to the caller's own donor profile.
    donor_id: Option<i64>,
    /// Defaults to today.
    donated_on: Option<NaiveDate>,
    request_id: Option<i64>,
}

#[derive(Serialize)]
pub struct DonationOut {
    donation: DonationRow,
    donor: DonorOut,
    fulfilled_request: Option<BloodRequestRow>,
}

pub async fn record(
    State(state): State<AppState>,
    caller: Caller,
    ApiJson(body): ApiJson<DonationBody>,
) -> Result<(StatusCode, Json<DonationOut>), ApiError> {
    caller.require_any(&[RoleKind::Donor, RoleKind::Admin])?;
    let own = if caller.is(RoleKind::Donor) {
        state.store.donor_for_user(caller.user_id())?.map(|v| v.donor.donor_id)
    } else {
        None
    };
    let donor_id = match (body.donor_id, own) {
        (Some(id), Some(mine)) if id == mine => id,
        (Some(id), _) if caller.is(RoleKind::Admin) => id,
        (Some(_), _) => {
            return Err(ApiError::forbidden("NOT_OWNER", "donors may only record their own donations"))
        }
        (None, Some(mine)) => mine,
        (None, None) => return Err(ApiError::validation(ValidationReport::missing("donor_id"))),
    };
    if let Some(request_id) = body.request_id {
        if state.store.get_request(request_id)?.is_none() {
            return Err(ApiError::not_found("UNKNOWN_REQUEST", format!("no request {request_id}")));
        }
    }
    let today = state.clock.today();
    let recorded = state.store.record_donation(
        NewDonation { donor_id, donated_on: body.donated_on.unwrap_or(today), request_id: body.request_id },
        today,
    )?;
    if let Some(request) = &recorded.fulfilled_request {
        notify_status(&state, request)?;
    }
    let view = state.store.get_donor(donor_id)?.ok_or_else(ApiError::internal)?;
    Ok((
        StatusCode::CREATED,
        Json(DonationOut {
            donation: recorded.donation,
            donor: DonorOut::new(view, today),
            fulfilled_request: recorded.fulfilled_request,
        }),
    ))
}
