//! A hand-maintained OpenAPI 3 description of the HTTP surface.

use axum::Json;
use serde_json::{json, Value};

/// (method, path, summary, required role or "public"/"any")
pub const OPERATIONS: &[(&str, &str, &str, &str)] = &[
    ("get", "/api/openapi.json", "This document", "public"),
    ("post", "/api/register", "Create an account without roles", "public"),
    ("post", "/api/login", "Exchange credentials for a bearer token", "public"),
    ("post", "/api/logout", "Revoke the current token", "any"),
    ("get", "/api/me", "Current account and roles", "any"),
    ("post", "/api/donor/enroll", "Attach a donor profile to the caller", "any"),
    ("get", "/api/donor/profile", "Own donor profile", "DONOR"),
    ("put", "/api/donor/profile", "Update own donor profile", "DONOR"),
    ("post", "/api/patient/enroll", "Attach a patient profile to the caller", "any"),
    ("get", "/api/patient/profile", "Own patient profile", "PATIENT"),
    ("put", "/api/patient/profile", "Update own patient profile", "PATIENT"),
    ("post", "/api/requests", "Open a blood request", "PATIENT"),
    ("get", "/api/requests", "Own blood requests", "PATIENT"),
    ("get", "/api/requests/{id}", "One blood request", "PATIENT|ADMIN"),
    ("post", "/api/requests/{id}/cancel", "Cancel a blood request", "PATIENT|ADMIN"),
    ("get", "/api/requests/{id}/matches", "Compatible visible donors, ranked", "PATIENT|ADMIN"),
    ("post", "/api/donations", "Record a donation", "DONOR|ADMIN"),
    ("get", "/api/admin/donors", "Search donors", "ADMIN"),
    ("post", "/api/admin/donors", "Provision a donor account", "ADMIN"),
    ("put", "/api/admin/donors/{id}", "Edit a donor", "ADMIN"),
    ("delete", "/api/admin/donors/{id}", "Delete a donor profile", "ADMIN"),
    ("get", "/api/admin/users", "List accounts", "ADMIN"),
    ("delete", "/api/admin/users/{id}", "Delete an account", "ADMIN"),
    ("get", "/api/admin/requests", "List blood requests", "ADMIN"),
    ("post", "/api/admin/notices", "Send a notice to one account", "ADMIN"),
    ("post", "/api/messages", "Send a message", "any"),
    ("get", "/api/messages", "Conversation summaries", "any"),
    ("get", "/api/messages/with/{user_id}", "Thread with one account", "any"),
    ("get", "/api/notifications", "Own notifications, newest first", "any"),
    ("post", "/api/notifications/{id}/read", "Mark a notification read", "any"),
];

fn error_schema() -> Value {
    json!({
        "type": "object",
        "required": ["error"],
        "properties": {
            "error": {
                "type": "object",
                "required": ["code", "message"],
                "properties": {
                    "code": { "type": "string" },
                    "message": { "type": "string" },
                    "details": {}
                }
            }
        }
    })
}

pub fn description() -> Value {
    let mut paths = serde_json::Map::new();
    for (method, path, summary, access) in OPERATIONS {
        let mut op = json!({
            "summary": summary,
            "x-access": access,
            "responses": {
                "default": {
                    "description": "error",
                    "content": { "application/json": { "schema": { "$ref": "#/components/schemas/Error" } } }
                }
            }
        });
        if *access != "public" {
            op["security"] = json!([{ "bearer": [] }]);
        }
        let params: Vec<Value> = path
            .split('/')
            .filter_map(|seg| seg.strip_prefix('{')?.strip_suffix('}'))
            .map(|name| json!({ "name": name, "in": "path", "required": true, "schema": { "type": "integer" } }))
            .collect();
        if !params.is_empty() {
            op["parameters"] = Value::Array(params);
        }
        let entry = paths.entry(path.to_string()).or_insert_with(|| json!({}));
        entry[*method] = op;
    }
    json!({
        "openapi": "3.0.3",
        "info": { "title": "hemobank", "version": env!("CARGO_PKG_VERSION") },
        "paths": paths,
        "components": {
            "securitySchemes": { "bearer": { "type": "http", "scheme": "bearer" } },
            "schemas": { "Error": error_schema() }
        }
    })
}

pub async fn document() -> Json<Value> {
    Json(description())
}
