//! Field checks for registration and profile forms.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldIssue {
    pub field: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub missing_fields: Vec<String>,
    pub malformed_fields: Vec<FieldIssue>,
}

impl ValidationReport {
    fn from_parts(missing_fields: Vec<String>, malformed_fields: Vec<FieldIssue>) -> Self {
        Self {
            ok: missing_fields.is_empty() && malformed_fields.is_empty(),
            missing_fields,
            malformed_fields,
        }
    }

    pub fn missing(field: &str) -> Self {
        Self::from_parts(vec![field.to_owned()], Vec::new())
    }

    pub fn malformed(field: &str, reason: &str) -> Self {
        Self::from_parts(
            Vec::new(),
            vec![FieldIssue { field: field.to_owned(), reason: reason.to_owned() }],
        )
    }

    pub fn merge(mut self, other: ValidationReport) -> Self {
        self.missing_fields.extend(other.missing_fields);
        self.malformed_fields.extend(other.malformed_fields);
        Self::from_parts(self.missing_fields, self.malformed_fields)
    }
}

/// Checks every field for emptiness (after trimming) and the `email` and
/// `phone` fields for shape. Fields are reported in input order.
pub fn validate_required<'a, I>(fields: I) -> ValidationReport
where
    I: IntoIterator<Item = (&'a str, &'a str)>,
{
    let mut missing = Vec::new();
    let mut malformed = Vec::new();
    for (name, value) in fields {
        if value.trim().is_empty() {
            missing.push(name.to_owned());
            continue;
        }
        let issue = match name {
            "email" if !is_valid_email(value) => Some("shape"),
            "phone" => phone_issue(value),
            _ => None,
        };
        if let Some(reason) = issue {
            malformed.push(FieldIssue { field: name.to_owned(), reason: reason.to_owned() });
        }
    }
    ValidationReport::from_parts(missing, malformed)
}

/// `local@domain.tld`: one `@`, no whitespace, and a dotted domain whose
/// labels are all non-empty.
pub fn is_valid_email(value: &str) -> bool {
    if value.chars().any(char::is_whitespace) {
        return false;
    }
    let Some((local, domain)) = value.split_once('@') else {
        return false;
    };
    if local.is_empty() || domain.contains('@') {
        return false;
    }
    let labels: Vec<&str> = domain.split('.').collect();
    labels.len() >= 2 && labels.iter().all(|l| !l.is_empty())
}

fn phone_issue(value: &str) -> Option<&'static str> {
    let len = value.chars().count();
    if !(5..=20).contains(&len) {
        Some("length")
    } else if !value
        .chars()
        .all(|c| c.is_ascii_digit() || matches!(c, '+' | '-' | ' '))
    {
        Some("charset")
    } else {
        None
    }
}
