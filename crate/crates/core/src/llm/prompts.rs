//! Versioned prompt templates and the JSON Schemas they embed.

pub const STRATEGY_V1: &str = include_str!("../../prompts/strategy.v1.txt");
pub const SCHEDULE_V1: &str = include_str!("../../prompts/schedule.v1.txt");
pub const PROFILE_V1: &str = include_str!("../../prompts/profile.v1.txt");
pub const TUTOR_V1: &str = include_str!("../../prompts/tutor.v1.txt");
pub const RERANK_V1: &str = include_str!("../../prompts/rerank.v1.txt");

pub const PLAN_OUTLINE_SCHEMA: &str = include_str!("../../schemas/plan_outline.schema.json");
pub const SESSION_LIST_SCHEMA: &str = include_str!("../../schemas/session_list.schema.json");
pub const PROFILE_SCHEMA: &str = include_str!("../../schemas/profile.schema.json");

/// Template ids selectable through configuration.
pub fn template(id: &str) -> Option<&'static str> {
    match id {
        "strategy.v1" => Some(STRATEGY_V1),
        "schedule.v1" => Some(SCHEDULE_V1),
        "profile.v1" => Some(PROFILE_V1),
        "tutor.v1" => Some(TUTOR_V1),
        "rerank.v1" => Some(RERANK_V1),
        _ => None,
    }
}

/// Replaces `{{name}}` placeholders. Unknown placeholders are left intact.
pub fn render(template: &str, vars: &[(&str, &str)]) -> String {
    vars.iter()
        .fold(template.to_string(), |t, (k, v)| t.replace(&format!("{{{{{k}}}}}"), v))
}

/// Pulls the JSON payload out of a model response, tolerating code fences
/// and surrounding prose.
pub fn extract_json(text: &str) -> &str {
    let trimmed = text.trim();
    let body = trimmed
        .strip_prefix("```json")
        .or_else(|| trimmed.strip_prefix("```"))
        .and_then(|rest| rest.rsplit_once("```").map(|(inner, _)| inner))
        .unwrap_or(trimmed)
        .trim();
    let open = body.find(['{', '[']);
    let close = body.rfind(['}', ']']);
    match (open, close) {
        (Some(a), Some(b)) if a < b => &body[a..=b],
        _ => body,
    }
}
