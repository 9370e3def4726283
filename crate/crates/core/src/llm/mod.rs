//! Provider-agnostic LLM layer: clients, prompt templates, the validated
//! two-stage plan pipeline, profile extraction and course re-ranking.

mod client;
mod extract;
mod pipeline;
pub mod prompts;
mod rerank;

pub use client::{
    CompletionRequest, DecodingParams, HttpClient, LlmClient, LlmError, MockClient, RecordingClient, ReplayClient,
};
pub use extract::{
    extract_profile, extract_profile_rules, ExtractDefaults, ExtractError, Extracted, DIM_GOALS, DIM_PACE, DIM_PATH,
    DIM_TIME,
};
pub use pipeline::{
    deterministic_outline, format_to_schedule, generate_plan, generate_strategy, parse_outline, parse_schedule,
    schedule_prompt, sessions_as_response, strategy_prompt, GatewayOutcome, LessonAllocation, PipelineConfig,
    PlanOutline, UnitAllocation,
};
pub use rerank::rerank_courses;
