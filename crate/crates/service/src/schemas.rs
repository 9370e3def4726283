//! JSON Schemas for every API body, plus the OpenAPI document.

pub const OPENAPI: &str = include_str!("../openapi.json");

/// Schemas for the service's own request and response envelopes. They
/// reference the core document schemas by relative `$id`.
pub const SERVICE: &[(&str, &str)] = &[
    ("error.schema.json", include_str!("../schemas/error.schema.json")),
    ("ingest_response.schema.json", include_str!("../schemas/ingest_response.schema.json")),
    ("plan_view.schema.json", include_str!("../schemas/plan_view.schema.json")),
    ("progress_response.schema.json", include_str!("../schemas/progress_response.schema.json")),
    ("recommend_response.schema.json", include_str!("../schemas/recommend_response.schema.json")),
    ("topics_response.schema.json", include_str!("../schemas/topics_response.schema.json")),
    ("violation.schema.json", include_str!("../schemas/violation.schema.json")),
];

pub fn get(name: &str) -> Option<&'static str> {
    SERVICE
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, s)| *s)
        .or_else(|| pacepath_core::schemas::get(name))
}

/// Every published schema, service and core.
pub fn all() -> impl Iterator<Item = (&'static str, &'static str)> {
    SERVICE.iter().chain(pacepath_core::schemas::ALL).copied()
}
