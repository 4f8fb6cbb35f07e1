use axum::extract::State;
use axum::http::StatusCode;
use axum::Json;
use hemobank_core::ValidationReport;
use hemobank_store::{ConversationSummary, MessageRow, NewMessage};
use serde::Deserialize;

use super::PageQuery;
use crate::error::{ApiJson, ApiPath, ApiQuery};
use crate::{ApiError, AppState, Caller};

#[derive(Deserialize)]
pub struct SendBody {
    recipient_user_id: Option<i64>,
    #[serde(default)]
    body: String,
}

pub async fn send(
    State(state): State<AppState>,
    caller: Caller,
    ApiJson(body): ApiJson<SendBody>,
) -> Result<(StatusCode, Json<MessageRow>), ApiError> {
    let Some(recipient) = body.recipient_user_id else {
        return Err(ApiError::validation(ValidationReport::missing("recipient_user_id")));
    };
    let row = state.store.insert_message(NewMessage {
        sender_user_id: caller.user_id(),
        recipient_user_id: recipient,
        body: body.body,
    })?;
    Ok((StatusCode::CREATED, Json(row)))
}

pub async fn conversations(
    State(state): State<AppState>,
    caller: Caller,
) -> Result<Json<Vec<ConversationSummary>>, ApiError> {
    Ok(Json(state.store.conversations(caller.user_id())?))
}

/// The thread with one partner, oldest first. Fetching it marks the
/// caller's incoming messages as read.
pub async fn thread(
    State(state): State<AppState>,
    caller: Caller,
    ApiPath(partner): ApiPath<i64>,
    ApiQuery(query): ApiQuery<PageQuery>,
) -> Result<Json<Vec<MessageRow>>, ApiError> {
    if state.store.get_user(partner)?.is_none() {
        return Err(ApiError::not_found("UNKNOWN_USER", format!("no user {partner}")));
    }
    let me = caller.user_id();
    let mut rows = state.store.list_conversation(me, partner, query.page()?)?;
    let unread: Vec<i64> = rows
        .iter()
        .filter(|m| m.recipient_user_id == me && !m.read)
        .map(|m| m.message_id)
        .collect();
    if !unread.is_empty() {
        state.store.mark_read(me, &unread)?;
        for m in rows.iter_mut().filter(|m| m.recipient_user_id == me) {
            m.read = true;
        }
    }
    Ok(Json(rows))
}
