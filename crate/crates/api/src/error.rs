use axum::extract::rejection::{JsonRejection, PathRejection, QueryRejection};
use axum::extract::{FromRequest, FromRequestParts, Request};
use axum::http::request::Parts;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use hemobank_auth::{AuthError, AuthzReason};
use hemobank_core::ValidationReport;
use hemobank_store::StoreError;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

/// The single error shape for every non-2xx response:
/// `{"error": {"code", "message", "details"?}}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub details: Option<Value>,
}

#[derive(Serialize)]
struct Envelope<'a> {
    error: Body<'a>,
}

#[derive(Serialize)]
struct Body<'a> {
    code: &'a str,
    message: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    details: Option<&'a Value>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self { status, code, message: message.into(), details: None }
    }

    pub fn with_details(mut self, details: impl Serialize) -> Self {
        self.details = serde_json::to_value(details).ok();
        self
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "BAD_REQUEST", message)
    }

    pub fn not_found(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, code, message)
    }

    pub fn forbidden(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::FORBIDDEN, code, message)
    }

    pub fn unprocessable(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, code, message)
    }

    pub fn conflict(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, code, message)
    }

    pub fn validation(report: ValidationReport) -> Self {
        Self::unprocessable("VALIDATION_FAILED", "one or more fields are missing or malformed")
            .with_details(report)
    }

    pub fn invalid_blood_group(value: &str) -> Self {
        Self::unprocessable(
            "INVALID_BLOOD_GROUP",
            format!("{value:?} is not one of A+, A-, B+, B-, AB+, AB-, O+, O-"),
        )
    }

    pub fn internal() -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "INTERNAL", "internal server error")
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = Envelope {
            error: Body { code: self.code, message: &self.message, details: self.details.as_ref() },
        };
        (self.status, Json(body)).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let msg = e.to_string();
        match e {
            StoreError::DuplicateEmail => ApiError::conflict("DUPLICATE_EMAIL", msg),
            StoreError::FieldTooLong { field, max } => ApiError::unprocessable("FIELD_TOO_LONG", msg)
                .with_details(json!({ "field": field, "max": max })),
            StoreError::EmptyField("body") => ApiError::unprocessable("EMPTY_BODY", msg),
            StoreError::EmptyField(field) => ApiError::validation(ValidationReport::missing(field)),
            StoreError::UnknownUser => ApiError::not_found("UNKNOWN_USER", msg),
            StoreError::UnknownDonor => ApiError::not_found("UNKNOWN_DONOR", msg),
            StoreError::UnknownPatient => ApiError::not_found("UNKNOWN_PATIENT", msg),
            StoreError::UnknownRequest => ApiError::not_found("UNKNOWN_REQUEST", msg),
            StoreError::UnknownRecipient => ApiError::not_found("UNKNOWN_RECIPIENT", msg),
            StoreError::UnknownNotification => ApiError::not_found("UNKNOWN_NOTIFICATION", msg),
            StoreError::FutureDate => ApiError::unprocessable("FUTURE_DATE", msg),
            StoreError::IllegalRequestState { from, to } => {
                ApiError::conflict("ILLEGAL_REQUEST_STATE", msg)
                    .with_details(json!({ "from": from, "to": to }))
            }
            StoreError::InvalidQuantity => ApiError::unprocessable("INVALID_QUANTITY", msg),
            StoreError::SelfMessage => ApiError::unprocessable("SELF_MESSAGE", msg),
            StoreError::InvalidPage => ApiError::unprocessable("INVALID_PAGE", msg),
            other => {
                tracing::error!(error = %other, "storage failure");
                ApiError::internal()
            }
        }
    }
}

impl From<AuthError> for ApiError {
    fn from(e: AuthError) -> Self {
        match e {
            AuthError::Validation(report) => ApiError::validation(report),
            AuthError::PasswordPolicy => ApiError::unprocessable("PASSWORD_POLICY", e.to_string()),
            AuthError::DuplicateEmail => ApiError::conflict("DUPLICATE_EMAIL", e.to_string()),
            AuthError::InvalidCredentials => ApiError::new(
                StatusCode::UNAUTHORIZED,
                "INVALID_CREDENTIALS",
                "invalid email or password",
            ),
            AuthError::Store(s) => s.into(),
        }
    }
}

impl From<AuthzReason> for ApiError {
    fn from(reason: AuthzReason) -> Self {
        match reason {
            AuthzReason::NoToken | AuthzReason::Ok => ApiError::new(
                StatusCode::UNAUTHORIZED,
                "NO_TOKEN",
                "a valid bearer token is required",
            ),
            AuthzReason::Expired => {
                ApiError::new(StatusCode::UNAUTHORIZED, "EXPIRED", "session has expired")
            }
            AuthzReason::RoleMissing => {
                ApiError::forbidden("ROLE_MISSING", "your account lacks the required role")
            }
        }
    }
}

/// `Json` with rejections folded into [`ApiError`]: syntax problems are 400,
/// well-formed JSON of the wrong shape is 422.
pub struct ApiJson<T>(pub T);

impl<S, T> FromRequest<S> for ApiJson<T>
where
    S: Send + Sync,
    T: DeserializeOwned,
{
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        match Json::<T>::from_request(req, state).await {
            Ok(Json(value)) => Ok(ApiJson(value)),
            Err(JsonRejection::JsonDataError(e)) => {
                Err(ApiError::unprocessable("INVALID_BODY", e.body_text()))
            }
            Err(other) => Err(ApiError::bad_request(other.body_text())),
        }
    }
}

pub struct ApiPath<T>(pub T);

impl<S, T> FromRequestParts<S> for ApiPath<T>
where
    S: Send + Sync,
    T: DeserializeOwned + Send,
{
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &S) -> Result<Self, Self::Rejection> {
        axum::extract::Path::<T>::from_request_parts(parts, state)
            .await
            .map(|p| ApiPath(p.0))
            .map_err(|e: PathRejection| ApiError::bad_request(e.body_text()))
    }
}

pub struct ApiQuery<T>(pub T);

impl<S, T> FromRequestParts<S> for ApiQuery<T>
where
    S: Send + Sync,
    T: DeserializeOwned,
{
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &S) -> Result<Self, Self::Rejection> {
        axum::extract::Query::<T>::from_request_parts(parts, state)
            .await
            .map(|q| ApiQuery(q.0))
            .map_err(|e: QueryRejection| ApiError::bad_request(e.body_text()))
    }
}

pub async fn not_found() -> ApiError {
    ApiError::not_found("NOT_FOUND", "no such endpoint")
}

pub async fn method_not_allowed() -> ApiError {
    ApiError::new(StatusCode::METHOD_NOT_ALLOWED, "METHOD_NOT_ALLOWED", "method not allowed")
}
