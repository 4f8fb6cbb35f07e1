use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::BloodGroup;

/// Admin-controlled account status. Independent of the donor's own
/// `available` flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum DonorStatus {
    Active,
    Inactive,
}

impl DonorStatus {
    pub const fn as_str(self) -> &'static str {
        match self {
            DonorStatus::Active => "ACTIVE",
            DonorStatus::Inactive => "INACTIVE",
        }
    }
}

impl fmt::Display for DonorStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid donor status {0:?}: expected ACTIVE or INACTIVE")]
pub struct ParseDonorStatusError(pub String);

impl FromStr for DonorStatus {
    type Err = ParseDonorStatusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ACTIVE" => Ok(DonorStatus::Active),
            "INACTIVE" => Ok(DonorStatus::Inactive),
            other => Err(ParseDonorStatusError(other.to_owned())),
        }
    }
}

/// A registered donor as seen by matching and by the donor table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DonorRecord {
    pub donor_id: i64,
    pub user_id: i64,
    pub phone: String,
    pub city: String,
    pub blood_group: BloodGroup,
    pub status: DonorStatus,
    pub available: bool,
    pub last_donation_date: Option<NaiveDate>,
}

impl AsRef<DonorRecord> for DonorRecord {
    fn as_ref(&self) -> &DonorRecord {
        self
    }
}
