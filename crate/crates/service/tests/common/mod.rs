#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use chrono::NaiveDate;
use http_body_util::BodyExt;
use pacepath_core::llm::LlmClient;
use pacepath_service::{http, schemas, App, Config};
use serde_json::Value;
use tower::ServiceExt;

pub fn core_fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(rel)
}

pub fn read_core_fixture(rel: &str) -> String {
    std::fs::read_to_string(core_fixture(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

pub fn test_config(data_dir: PathBuf) -> Config {
    Config {
        data_dir,
        catalog_dir: core_fixture("catalog"),
        transcripts_dir: Some(core_fixture("transcripts")),
        offline: true,
        ..Config::default()
    }
}

/// An app over a fresh data directory with a fixed clock.
pub fn app(data_dir: PathBuf, llm: Option<Arc<dyn LlmClient>>) -> Arc<App> {
    let clock = NaiveDate::from_ymd_opt(2025, 1, 12).unwrap().and_hms_opt(19, 0, 0).unwrap();
    Arc::new(App::new(test_config(data_dir), llm).unwrap().with_clock(Arc::new(move || clock)))
}

pub fn answers() -> Value {
    serde_json::from_str(&read_core_fixture("profile/evening_learner.answers.json")).unwrap()
}

pub fn refraction_question() -> String {
    read_core_fixture("tutor/refraction_question.txt").trim().to_string()
}

pub fn golden_plan() -> Value {
    serde_json::from_str(&read_core_fixture("golden/cosmology-evening.plan.json")).unwrap()
}

pub struct Reply {
    pub status: StatusCode,
    pub content_type: String,
    pub text: String,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_str(&self.text).unwrap_or_else(|e| panic!("{e}: {}", self.text))
    }
}

pub async fn send(router: &Router, method: Method, uri: &str, body: Option<&str>) -> Reply {
    let mut req = Request::builder().method(method).uri(uri);
    if body.is_some() {
        req = req.header("content-type", "application/json");
    }
    let req = req.body(body.map_or_else(Body::empty, |b| Body::from(b.to_string()))).unwrap();
    let resp = router.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let content_type = resp
        .headers()
        .get("content-type")
        .map(|v| v.to_str().unwrap().to_string())
        .unwrap_or_default();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    Reply {
        status,
        content_type,
        text: String::from_utf8(bytes.to_vec()).unwrap(),
    }
}

pub async fn get(router: &Router, uri: &str) -> Reply {
    send(router, Method::GET, uri, None).await
}

pub async fn post(router: &Router, uri: &str, body: &Value) -> Reply {
    send(router, Method::POST, uri, Some(&body.to_string())).await
}

pub async fn patch(router: &Router, uri: &str, body: &Value) -> Reply {
    send(router, Method::PATCH, uri, Some(&body.to_string())).await
}

pub fn router(app: Arc<App>) -> Router {
    http::router(app)
}

/// Resolves relative `$ref`s against the published schema set.
struct Published;

impl jsonschema::Retrieve for Published {
    fn retrieve(&self, uri: &jsonschema::Uri<String>) -> Result<Value, Box<dyn std::error::Error + Send + Sync>> {
        let name = uri.path().as_str().trim_start_matches('/');
        let text = schemas::get(name).ok_or_else(|| format!("no schema {name}"))?;
        Ok(serde_json::from_str(text)?)
    }
}

pub fn validator(name: &str) -> jsonschema::Validator {
    let schema: Value = serde_json::from_str(schemas::get(name).unwrap_or_else(|| panic!("no schema {name}"))).unwrap();
    jsonschema::options()
        .with_retriever(Published)
        .build(&schema)
        .unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Panics with every validation error when `value` does not match.
pub fn assert_valid(name: &str, value: &Value) {
    let v = validator(name);
    let errors: Vec<String> = v.iter_errors(value).map(|e| format!("{} at {}", e, e.instance_path())).collect();
    assert!(errors.is_empty(), "{name}: {errors:#?}\n{value:#}");
}
