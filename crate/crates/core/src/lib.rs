//! Storage-free domain logic for the hemobank donor platform.
//!
//! Everything in this crate is a pure function over immutable inputs. Time is
//! always an explicit parameter; the [`clock`] module only defines the trait the
//! service layers use to obtain "now".

pub mod blood_group;
pub mod clock;
pub mod cooldown;
pub mod donor;
pub mod matching;
pub mod validation;

pub use blood_group::{
    antigens_of, compatible_donor_groups, is_compatible, Antigen, AntigenSet, BloodGroup,
    ParseBloodGroupError,
};
pub use clock::{Clock, ManualClock, SystemClock};
pub use cooldown::{is_visible, next_eligible_date, COOLDOWN_DAYS};
pub use donor::{DonorRecord, DonorStatus, ParseDonorStatusError};
pub use matching::{cities_match, match_donors, MatchQuery};
pub use validation::{is_valid_email, validate_required, FieldIssue, ValidationReport};
