//! Ranking visible, compatible donors for a blood request.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::{is_compatible, is_visible, BloodGroup, DonorRecord};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchQuery {
    /// The recipient's group.
    pub blood_group: BloodGroup,
    pub city: String,
    pub now: NaiveDate,
}

/// Case-insensitive comparison after trimming surrounding whitespace.
pub fn cities_match(a: &str, b: &str) -> bool {
    let (a, b) = (a.trim(), b.trim());
    a == b || a.to_lowercase() == b.to_lowercase()
}

/// Donors that are visible on `q.now` and compatible with `q.blood_group`,
/// best candidate first.
///
/// Order: same city first, then exact group before merely compatible, then
/// never-donated before the longest-ago donation, then ascending `donor_id`.
/// Accepts anything that exposes a [`DonorRecord`] so callers can rank rows
/// that carry extra columns.
pub fn match_donors<'a, T: AsRef<DonorRecord>>(q: &MatchQuery, donors: &'a [T]) -> Vec<&'a T> {
    let city = q.city.trim().to_lowercase();
    let key = |d: &DonorRecord| {
        (
            d.city.trim().to_lowercase() != city,
            d.blood_group != q.blood_group,
            // None sorts before Some, and earlier dates before later ones.
            d.last_donation_date,
            d.donor_id,
        )
    };

    let mut matched: Vec<&T> = donors
        .iter()
        .filter(|d| {
            let d = d.as_ref();
            is_visible(d, q.now) && is_compatible(d.blood_group, q.blood_group)
        })
        .collect();
    matched.sort_by_key(|d| key(d.as_ref()));
    matched
}
