//! Sweep of every endpoint against every caller kind, compared with the
//! checked-in table in `tests/authz_matrix.tsv`.

use std::collections::BTreeSet;

use axum::http::Method;
use serde_json::json;

use super::Harness;

pub const TABLE: &str = include_str!("../authz_matrix.tsv");
pub const CALLERS: [&str; 4] = ["none", "patient", "donor", "admin"];

#[derive(Debug, Clone)]
pub struct Row {
    pub method: Method,
    pub path: String,
    pub expected: [String; 4],
}

pub fn rows() -> Vec<Row> {
    TABLE
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|line| {
            let cols: Vec<&str> = line.split('\t').collect();
            assert_eq!(cols.len(), 6, "bad matrix line {line:?}");
            Row {
                method: cols[0].parse().unwrap(),
                path: cols[1].to_owned(),
                expected: [cols[2], cols[3], cols[4], cols[5]].map(str::to_owned),
            }
        })
        .collect()
}

fn template(path: &str) -> String {
    let mut out = String::new();
    let mut depth = 0;
    for c in path.chars() {
        match c {
            '{' => {
                depth += 1;
                out.push('{');
            }
            '}' => {
                depth -= 1;
                out.push('}');
            }
            _ if depth > 0 => {}
            _ => out.push(c),
        }
    }
    out
}

/// Routes present in the API description but absent from the table, and
/// the reverse.
pub fn coverage_gaps() -> (Vec<String>, Vec<String>) {
    let table: BTreeSet<String> =
        rows().iter().map(|r| format!("{} {}", r.method, template(&r.path))).collect();
    let described: BTreeSet<String> = hemobank_api::openapi::OPERATIONS
        .iter()
        .map(|(m, p, _, _)| format!("{} {}", m.to_uppercase(), template(p)))
        .collect();
    (
        described.difference(&table).cloned().collect(),
        table.difference(&described).cloned().collect(),
    )
}

fn classify(code: &str) -> &'static str {
    match code {
        "NO_TOKEN" | "EXPIRED" => "401",
        "ROLE_MISSING" | "NOT_OWNER" => "403",
        _ => "ok",
    }
}

#[derive(Debug)]
pub struct Deviation {
    pub row: String,
    pub caller: &'static str,
    pub expected: String,
    pub actual: String,
}

/// Runs one row against a fresh seeded store per caller, so destructive
/// calls cannot leak into the next caller's result.
pub async fn check_row(row: &Row) -> Vec<Deviation> {
    let mut deviations = Vec::new();
    for (i, caller) in CALLERS.iter().enumerate() {
        let h = Harness::seeded();
        let patient = h.demo_login("patient1@test.com").await;
        let admin = h.demo_login("admin1@test.com").await;
        let request = h
            .post("/api/requests", Some(&patient), json!({ "blood_group": "A+", "quantity_units": 1, "city": "Sukot" }))
            .await
            .body["request_id"]
            .as_i64()
            .unwrap();
        let donor2 = h.user_id("donor2@test.com");
        let notification = h
            .post("/api/admin/notices", Some(&admin), json!({ "user_id": h.user_id("patient1@test.com"), "message": "hello" }))
            .await
            .body["notification_id"]
            .as_i64()
            .unwrap();
        let path = row
            .path
            .replace("{request}", &request.to_string())
            .replace("{donor}", &h.donor_id("donor2@test.com").to_string())
            .replace("{user}", &donor2.to_string())
            .replace("{notification}", &notification.to_string());

        let token = match *caller {
            "none" => None,
            "patient" => Some(patient),
            "donor" => Some(h.demo_login("donor1@test.com").await),
            _ => Some(admin),
        };
        let body = matches!(row.method, Method::POST | Method::PUT).then(|| json!({}));
        let res = h.call(row.method.clone(), &path, token.as_deref(), body).await;
        let actual = if res.status.is_success() { "ok" } else { classify(res.code()) };
        if actual != row.expected[i] {
            deviations.push(Deviation {
                row: format!("{} {}", row.method, row.path),
                caller,
                expected: row.expected[i].clone(),
                actual: format!("{actual} ({} {})", res.status.as_u16(), res.code()),
            });
        }
    }
    deviations
}

pub async fn sweep() -> Vec<Deviation> {
    let mut all = Vec::new();
    for row in rows() {
        all.extend(check_row(&row).await);
    }
    all
}
