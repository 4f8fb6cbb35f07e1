mod common;

use common::authz;

#[test]
fn matrix_covers_every_described_route() {
    let (untested, unknown) = authz::coverage_gaps();
    assert!(untested.is_empty(), "routes missing from the matrix: {untested:?}");
    assert!(unknown.is_empty(), "matrix rows for undescribed routes: {unknown:?}");
}

#[tokio::test]
async fn every_endpoint_matches_the_expectation_table() {
    let deviations = authz::sweep().await;
    assert!(deviations.is_empty(), "{deviations:#?}");
}

#[tokio::test]
async fn only_public_routes_answer_without_a_token() {
    for row in authz::rows() {
        let public = matches!(row.path.as_str(), "/api/register" | "/api/login" | "/api/openapi.json");
        assert_eq!(row.expected[0] == "ok", public, "{} {}", row.method, row.path);
    }
}

#[tokio::test]
async fn garbage_and_malformed_headers_are_rejected() {
    let h = common::Harness::seeded();
    for header in ["Bearer", "Bearer ", "Basic abc", "bearer nope", "nonsense"] {
        let req = axum::http::Request::builder()
            .uri("/api/me")
            .header("authorization", header)
            .body(axum::body::Body::empty())
            .unwrap();
        let res = h.send(req).await;
        assert_eq!(res.status, axum::http::StatusCode::UNAUTHORIZED, "{header:?}");
    }
}
