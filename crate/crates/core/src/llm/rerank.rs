use serde::Deserialize;

use super::client::{CompletionRequest, DecodingParams, LlmClient, LlmError};
use super::prompts::{extract_json, render, RERANK_V1};
use crate::catalog::CourseCard;

#[derive(Deserialize)]
struct RerankResponse {
    order: Vec<String>,
}

/// Lets the model reorder lexical recommendations. Any response that is not
/// a permutation of the candidates leaves the lexical order unchanged.
pub fn rerank_courses(
    goal_text: &str,
    ranked: Vec<(CourseCard, f64)>,
    client: &dyn LlmClient,
    params: DecodingParams,
) -> Result<Vec<(CourseCard, f64)>, LlmError> {
    if ranked.len() < 2 {
        return Ok(ranked);
    }
    let candidates = ranked
        .iter()
        .map(|(c, _)| format!("{} | {} | {}", c.course_id, c.title, c.description))
        .collect::<Vec<_>>()
        .join("\n");
    let prompt = render(RERANK_V1, &[("goal", goal_text), ("candidates", &candidates)]);
    let text = client.complete(&CompletionRequest { prompt, params })?;
    let Ok(resp) = serde_json::from_str::<RerankResponse>(extract_json(&text)) else {
        return Ok(ranked);
    };
    let mut expected: Vec<&str> = ranked.iter().map(|(c, _)| c.course_id.as_str()).collect();
    let mut got: Vec<&str> = resp.order.iter().map(String::as_str).collect();
    expected.sort_unstable();
    got.sort_unstable();
    if expected != got {
        return Ok(ranked);
    }
    let mut pool = ranked;
    Ok(resp
        .order
        .iter()
        .map(|id| {
            let at = pool.iter().position(|(c, _)| &c.course_id == id).expect("permutation checked");
            pool.remove(at)
        })
        .collect())
}
