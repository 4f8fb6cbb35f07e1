use axum::extract::State;
use axum::Json;
use hemobank_store::NotificationRow;

use crate::error::ApiPath;
use crate::{ApiError, AppState, Caller};

pub async fn list(
    State(state): State<AppState>,
    caller: Caller,
) -> Result<Json<Vec<NotificationRow>>, ApiError> {
    Ok(Json(state.store.list_notifications(caller.user_id())?))
}

pub async fn mark_read(
    State(state): State<AppState>,
    caller: Caller,
    ApiPath(id): ApiPath<i64>,
) -> Result<Json<NotificationRow>, ApiError> {
    Ok(Json(state.store.mark_notification_read(caller.user_id(), id)?))
}
