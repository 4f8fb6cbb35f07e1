use crate::model::RequestStatus;

pub type Result<T, E = StoreError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StoreError {
    #[error("email already registered")]
    DuplicateEmail,
    #[error("field `{field}` exceeds {max} characters")]
    FieldTooLong { field: &'static str, max: usize },
    #[error("field `{0}` must not be empty")]
    EmptyField(&'static str),
    #[error("unknown user")]
    UnknownUser,
    #[error("unknown donor")]
    UnknownDonor,
    #[error("unknown patient")]
    UnknownPatient,
    #[error("unknown blood request")]
    UnknownRequest,
    #[error("unknown recipient")]
    UnknownRecipient,
    #[error("unknown notification")]
    UnknownNotification,
    #[error("donation date is in the future")]
    FutureDate,
    #[error("illegal request status change {from} -> {to}")]
    IllegalRequestState { from: RequestStatus, to: RequestStatus },
    #[error("quantity must be at least one unit")]
    InvalidQuantity,
    #[error("cannot send a message to yourself")]
    SelfMessage,
    #[error("page limit must be within 1..=100")]
    InvalidPage,
    #[error("store is not migrated")]
    NotMigrated,
    #[error("unrecognized schema state: {0}")]
    UnknownSchema(String),
    #[error("store unreachable: {0}")]
    Unreachable(String),
    #[error("unsupported database url: {0}")]
    InvalidUrl(String),
    #[error("injected fault at {0:?}")]
    Injected(crate::fault::FaultSite),
    #[error("storage backend error: {0}")]
    Backend(String),
}
