//! Post-donation deferral: a donor is hidden from matching for a fixed number
//! of days after giving blood.

use chrono::{Duration, NaiveDate};

use crate::donor::{DonorRecord, DonorStatus};

pub const COOLDOWN_DAYS: i64 = 90;

pub fn next_eligible_date(last_donation: NaiveDate) -> NaiveDate {
    last_donation + Duration::days(COOLDOWN_DAYS)
}

/// Whether a donor may currently be offered to patients.
///
/// The donor must be ACTIVE, have marked themselves available, and be outside
/// the half-open window `[last_donation, last_donation + 90 days)`. A probe
/// dated before the donation falls outside the window.
pub fn is_visible(d: &DonorRecord, now: NaiveDate) -> bool {
    d.status == DonorStatus::Active
        && d.available
        && d
            .last_donation_date
            .is_none_or(|last| now < last || now >= next_eligible_date(last))
}
