//! Two-stage plan generation: a strategy stage producing a [`PlanOutline`]
//! and a formatting stage producing concrete sessions. Each stage validates
//! the model output, re-prompts with the validator's message on failure and
//! falls back to the deterministic planner once the repair budget is spent.

use std::collections::HashMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::client::{CompletionRequest, DecodingParams, LlmClient, LlmError};
use super::prompts::{self, extract_json, render};
use crate::calendar::renumber_segments;
use crate::model::{session_id, ClockTime, PersonalizationProfile, Plan, Provenance, ScheduledSession, SessionKind, Syllabus};
use crate::planner::{build_plan_with, check_plan_with, unit_day_counts, PacePolicy};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub max_repair_attempts: u32,
    pub decoding: DecodingParams,
    pub strategy_template: String,
    pub schedule_template: String,
    pub profile_template: String,
    pub tutor_template: String,
    pub policy: PacePolicy,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            max_repair_attempts: 3,
            decoding: DecodingParams::default(),
            strategy_template: "strategy.v1".into(),
            schedule_template: "schedule.v1".into(),
            profile_template: "profile.v1".into(),
            tutor_template: "tutor.v1".into(),
            policy: PacePolicy::default(),
        }
    }
}

impl PipelineConfig {
    pub(crate) fn template(&self, id: &str) -> &'static str {
        prompts::template(id).unwrap_or_else(|| panic!("unknown prompt template {id:?}"))
    }

    /// Rejects unknown template ids.
    pub fn validate(&self) -> Result<(), String> {
        for id in [
            &self.strategy_template,
            &self.schedule_template,
            &self.profile_template,
            &self.tutor_template,
        ] {
            if prompts::template(id).is_none() {
                return Err(format!("unknown prompt template {id:?}"));
            }
        }
        Ok(())
    }
}

/// Result of a gateway call: the value, how many client calls were made,
/// and whether the value came from the model or the deterministic fallback.
#[derive(Clone, Debug, PartialEq)]
pub struct GatewayOutcome<T> {
    pub value: T,
    pub attempts: u32,
    pub provenance: Provenance,
    /// Last validator complaint when the fallback was used.
    pub fallback_reason: Option<String>,
}

pub(crate) enum LoopResult<T> {
    Accepted { value: T, attempts: u32 },
    Exhausted { attempts: u32, last_error: String },
}

/// Calls the client at most `max_repair_attempts + 1` times, appending the
/// validator's complaint to the prompt after each rejected response.
pub(crate) fn run_repair_loop<T>(
    client: &dyn LlmClient,
    max_repair_attempts: u32,
    params: DecodingParams,
    prompt: &str,
    mut validate: impl FnMut(&str) -> Result<T, String>,
) -> Result<LoopResult<T>, LlmError> {
    let mut request = CompletionRequest {
        prompt: prompt.to_string(),
        params,
    };
    let mut last_error = String::new();
    for attempt in 1..=max_repair_attempts + 1 {
        let response = client.complete(&request)?;
        match validate(&response) {
            Ok(value) => return Ok(LoopResult::Accepted { value, attempts: attempt }),
            Err(err) => {
                request.prompt = format!(
                    "{prompt}\n\nYour previous response was rejected by the validator:\n{err}\n\nPrevious response:\n{response}\n\nReturn a corrected response."
                );
                last_error = err;
            }
        }
    }
    Ok(LoopResult::Exhausted {
        attempts: max_repair_attempts + 1,
        last_error,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitAllocation {
    pub unit_index: usize,
    pub days: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LessonAllocation {
    pub lesson_id: String,
    pub segments: u32,
}

/// Strategy-stage output: per-unit day counts, per-lesson segment counts
/// and a free-text rationale.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanOutline {
    pub units: Vec<UnitAllocation>,
    pub lessons: Vec<LessonAllocation>,
    pub rationale: String,
}

const MAX_SEGMENTS_PER_LESSON: u32 = 8;

impl PlanOutline {
    pub fn segments_of(&self, lesson_id: &str) -> Option<u32> {
        self.lessons.iter().find(|l| l.lesson_id == lesson_id).map(|l| l.segments)
    }
}

/// Parses and checks a strategy response against the syllabus and the pace
/// policy's minimums.
pub fn parse_outline(
    text: &str,
    syllabus: &Syllabus,
    profile: &PersonalizationProfile,
    policy: &PacePolicy,
) -> Result<PlanOutline, String> {
    let outline: PlanOutline =
        serde_json::from_str(extract_json(text)).map_err(|e| format!("response does not match the schema: {e}"))?;
    let unit_ids: Vec<usize> = outline.units.iter().map(|u| u.unit_index).collect();
    let expected: Vec<usize> = (0..syllabus.units.len()).collect();
    if unit_ids != expected {
        return Err(format!("units must list unit_index {expected:?} in order, got {unit_ids:?}"));
    }
    if let Some(u) = outline.units.iter().find(|u| u.days == 0) {
        return Err(format!("unit {} has zero days", u.unit_index));
    }
    let lesson_ids: Vec<&str> = outline.lessons.iter().map(|l| l.lesson_id.as_str()).collect();
    let expected: Vec<&str> = syllabus.lessons().map(|l| l.id.as_str()).collect();
    if lesson_ids != expected {
        return Err(format!("lessons must list every lesson id once in course order: {expected:?}"));
    }
    for (alloc, lesson) in outline.lessons.iter().zip(syllabus.lessons()) {
        let minimum = policy.segments_for(lesson.difficulty, profile.pace);
        if alloc.segments < minimum || alloc.segments > MAX_SEGMENTS_PER_LESSON {
            return Err(format!(
                "lesson {} needs between {minimum} and {MAX_SEGMENTS_PER_LESSON} segments, got {}",
                lesson.id, alloc.segments
            ));
        }
    }
    Ok(outline)
}

/// The outline the deterministic planner realizes.
pub fn deterministic_outline(syllabus: &Syllabus, profile: &PersonalizationProfile, policy: &PacePolicy) -> PlanOutline {
    let plan = build_plan_with(syllabus, profile, policy);
    PlanOutline {
        units: unit_day_counts(&plan, syllabus)
            .into_iter()
            .enumerate()
            .map(|(unit_index, days)| UnitAllocation {
                unit_index,
                days: days as u32,
            })
            .collect(),
        lessons: syllabus
            .lessons()
            .map(|l| LessonAllocation {
                lesson_id: l.id.clone(),
                segments: policy.segments_for(l.difficulty, profile.pace),
            })
            .collect(),
        rationale: format!(
            "Segments per lesson follow the {:?} pace table; lessons are placed greedily in course order.",
            profile.pace
        ),
    }
}

fn lesson_lines(syllabus: &Syllabus) -> String {
    syllabus
        .lessons()
        .map(|l| format!("{} | {} | {} | unit {}", l.id, l.title, l.difficulty, l.unit_index))
        .collect::<Vec<_>>()
        .join("\n")
}

fn profile_json(profile: &PersonalizationProfile) -> String {
    serde_json::to_string_pretty(profile).expect("profile serializes")
}

pub fn strategy_prompt(syllabus: &Syllabus, profile: &PersonalizationProfile, config: &PipelineConfig) -> String {
    let minimums = syllabus
        .lessons()
        .map(|l| format!("{}: {}", l.id, config.policy.segments_for(l.difficulty, profile.pace)))
        .collect::<Vec<_>>()
        .join("\n");
    let pace = serde_json::to_value(profile.pace).expect("pace serializes");
    render(
        config.template(&config.strategy_template),
        &[
            ("course_title", &syllabus.course_title),
            ("lessons", &lesson_lines(syllabus)),
            ("profile", &profile_json(profile)),
            ("segment_minutes", &profile.segment_minutes.to_string()),
            ("pace", pace.as_str().unwrap_or_default()),
            ("minimums", &minimums),
            ("schema", prompts::PLAN_OUTLINE_SCHEMA.trim()),
        ],
    )
}

/// Strategy stage.
pub fn generate_strategy(
    syllabus: &Syllabus,
    profile: &PersonalizationProfile,
    client: &dyn LlmClient,
    config: &PipelineConfig,
) -> Result<GatewayOutcome<PlanOutline>, LlmError> {
    let prompt = strategy_prompt(syllabus, profile, config);
    let result = run_repair_loop(client, config.max_repair_attempts, config.decoding, &prompt, |text| {
        parse_outline(text, syllabus, profile, &config.policy)
    })?;
    Ok(match result {
        LoopResult::Accepted { value, attempts } => GatewayOutcome {
            value,
            attempts,
            provenance: Provenance::Llm,
            fallback_reason: None,
        },
        LoopResult::Exhausted { attempts, last_error } => GatewayOutcome {
            value: deterministic_outline(syllabus, profile, &config.policy),
            attempts,
            provenance: Provenance::FallbackUsed,
            fallback_reason: Some(last_error),
        },
    })
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SessionListDoc {
    sessions: Vec<DraftSession>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DraftSession {
    date: NaiveDate,
    start: ClockTime,
    end: ClockTime,
    kind: SessionKind,
    #[serde(default)]
    lesson_id: Option<String>,
}

/// Parses a formatting-stage response into a plan and validates it. Every
/// violation is fatal here, including window containment.
pub fn parse_schedule(
    text: &str,
    outline: &PlanOutline,
    syllabus: &Syllabus,
    profile: &PersonalizationProfile,
    policy: &PacePolicy,
) -> Result<Plan, String> {
    let doc: SessionListDoc =
        serde_json::from_str(extract_json(text)).map_err(|e| format!("response does not match the schema: {e}"))?;
    let mut sessions = Vec::with_capacity(doc.sessions.len());
    for (i, d) in doc.sessions.into_iter().enumerate() {
        if d.start >= d.end {
            return Err(format!("sessions[{i}]: start must precede end"));
        }
        let s = match (d.kind, d.lesson_id) {
            (SessionKind::Study, Some(lesson)) => ScheduledSession::study(String::new(), d.date, d.start, d.end, lesson, 1),
            (SessionKind::Break, None) => ScheduledSession::rest(String::new(), d.date, d.start, d.end),
            (SessionKind::Study, None) => return Err(format!("sessions[{i}]: study session without lesson_id")),
            (SessionKind::Break, Some(_)) => return Err(format!("sessions[{i}]: break must not carry lesson_id")),
        };
        sessions.push(s);
    }
    sessions.sort_by_key(|s| s.sort_key());
    for (i, s) in sessions.iter_mut().enumerate() {
        s.id = session_id(i as u32 + 1);
    }
    renumber_segments(&mut sessions);
    let plan = Plan {
        course_id: syllabus.course_id.clone(),
        revision: 1,
        provenance: Provenance::Llm,
        profile: profile.clone(),
        sessions,
    };

    let mut problems: Vec<String> = check_plan_with(&plan, syllabus, profile, policy)
        .into_iter()
        .map(|v| serde_json::to_string(&v).expect("violation serializes"))
        .collect();
    let mut counts: HashMap<&str, u32> = HashMap::new();
    for s in plan.study_sessions() {
        *counts.entry(s.lesson_id.as_deref().unwrap_or_default()).or_default() += 1;
    }
    for alloc in &outline.lessons {
        let have = counts.get(alloc.lesson_id.as_str()).copied().unwrap_or(0);
        if have < alloc.segments {
            problems.push(format!(
                "lesson {} has {have} study sessions but the strategy assigns {}",
                alloc.lesson_id, alloc.segments
            ));
        }
    }
    if problems.is_empty() {
        Ok(plan)
    } else {
        Err(format!("schedule violates constraints:\n{}", problems.join("\n")))
    }
}

pub fn schedule_prompt(
    outline: &PlanOutline,
    syllabus: &Syllabus,
    profile: &PersonalizationProfile,
    config: &PipelineConfig,
) -> String {
    render(
        config.template(&config.schedule_template),
        &[
            ("lessons", &lesson_lines(syllabus)),
            ("outline", &serde_json::to_string_pretty(outline).expect("outline serializes")),
            ("profile", &profile_json(profile)),
            ("segment_minutes", &profile.segment_minutes.to_string()),
            ("break_minutes", &profile.break_minutes.to_string()),
            ("start_date", &profile.start_date.to_string()),
            ("schema", prompts::SESSION_LIST_SCHEMA.trim()),
        ],
    )
}

/// Formatting stage. The returned plan always passes `check_plan` with no
/// violations.
pub fn format_to_schedule(
    outline: &PlanOutline,
    syllabus: &Syllabus,
    profile: &PersonalizationProfile,
    client: &dyn LlmClient,
    config: &PipelineConfig,
) -> Result<GatewayOutcome<Plan>, LlmError> {
    let prompt = schedule_prompt(outline, syllabus, profile, config);
    let result = run_repair_loop(client, config.max_repair_attempts, config.decoding, &prompt, |text| {
        parse_schedule(text, outline, syllabus, profile, &config.policy)
    })?;
    Ok(match result {
        LoopResult::Accepted { value, attempts } => GatewayOutcome {
            value,
            attempts,
            provenance: Provenance::Llm,
            fallback_reason: None,
        },
        LoopResult::Exhausted { attempts, last_error } => {
            let mut plan = build_plan_with(syllabus, profile, &config.policy);
            plan.provenance = Provenance::FallbackUsed;
            GatewayOutcome {
                value: plan,
                attempts,
                provenance: Provenance::FallbackUsed,
                fallback_reason: Some(last_error),
            }
        }
    })
}

/// Runs both stages. The plan's provenance is `Llm` only when neither stage
/// fell back.
pub fn generate_plan(
    syllabus: &Syllabus,
    profile: &PersonalizationProfile,
    client: &dyn LlmClient,
    config: &PipelineConfig,
) -> Result<GatewayOutcome<Plan>, LlmError> {
    let strategy = generate_strategy(syllabus, profile, client, config)?;
    let mut schedule = format_to_schedule(&strategy.value, syllabus, profile, client, config)?;
    if strategy.provenance == Provenance::FallbackUsed {
        schedule.provenance = Provenance::FallbackUsed;
        schedule.value.provenance = Provenance::FallbackUsed;
        schedule.fallback_reason = schedule.fallback_reason.or(strategy.fallback_reason);
    }
    schedule.attempts += strategy.attempts;
    Ok(schedule)
}

/// Serializes a plan's sessions in the formatting stage's output shape.
pub fn sessions_as_response(plan: &Plan) -> String {
    let sessions: Vec<serde_json::Value> = plan
        .sessions
        .iter()
        .map(|s| {
            let mut v = serde_json::json!({
                "date": s.date,
                "start": s.start,
                "end": s.end,
                "kind": s.kind,
            });
            if let Some(l) = &s.lesson_id {
                v["lesson_id"] = serde_json::Value::String(l.clone());
            }
            v
        })
        .collect();
    serde_json::to_string(&serde_json::json!({ "sessions": sessions })).expect("sessions serialize")
}
