//! Progress-gated question answering over indexed lesson transcripts.

use std::collections::BTreeSet;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::llm::prompts::render;
use crate::llm::{CompletionRequest, LlmClient, PipelineConfig};
use crate::model::{LearnerState, Plan, QuestionRecord, Syllabus};
use crate::text::content_tokens;
use crate::transcripts::{LexicalIndex, SearchError, SearchHit};

/// Chunks retrieved per question.
pub const RETRIEVAL_K: usize = 4;

/// Share of the query's distinct content words a chunk must contain to be
/// cited. Keeps a single incidental shared word from counting as coverage.
pub const MIN_TERM_COVERAGE: f64 = 0.2;

pub const NOT_COVERED_MESSAGE: &str =
    "This topic is not covered yet by the lessons you have reached. Keep going with your plan and ask again later.";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Citation {
    pub lesson_id: String,
    #[serde(rename = "start_s")]
    pub start_seconds: f64,
    #[serde(rename = "end_s")]
    pub end_seconds: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerProvenance {
    LlmComposed,
    Extractive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Answer {
    pub answer_id: String,
    pub relevant_lesson: String,
    pub body: String,
    pub citations: Vec<Citation>,
    pub provenance: AnswerProvenance,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TutorReply {
    Answered(Answer),
    NotCoveredYet { answer_id: String, message: String },
}

impl TutorReply {
    pub fn answer_id(&self) -> &str {
        match self {
            TutorReply::Answered(a) => &a.answer_id,
            TutorReply::NotCoveredYet { answer_id, .. } => answer_id,
        }
    }

    pub fn answer(&self) -> Option<&Answer> {
        match self {
            TutorReply::Answered(a) => Some(a),
            TutorReply::NotCoveredYet { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TutorError {
    #[error("question is empty or has no searchable words")]
    EmptyQuery,
    #[error("learner state belongs to course {state}, plan to {plan}")]
    CourseMismatch { state: String, plan: String },
}

/// Lessons with at least one completed session, plus the current lesson.
pub fn allowed_lessons(state: &LearnerState, plan: &Plan) -> BTreeSet<String> {
    let mut allowed: BTreeSet<String> = state
        .completed_session_ids
        .iter()
        .filter_map(|id| plan.session(id)?.lesson_id.clone())
        .collect();
    allowed.extend(state.current_lesson_id.iter().cloned());
    allowed
}

fn answer_id(state: &LearnerState, query: &str, now: NaiveDateTime) -> String {
    let mut h = Sha256::new();
    h.update(format!("{}\n{}\n{}\n{}", state.course_id, state.question_log.len(), now, query));
    format!("a{}", &hex::encode(h.finalize())[..15])
}

fn timestamp(seconds: f64) -> String {
    let s = seconds.max(0.0).round() as u64;
    format!("{}:{:02}", s / 60, s % 60)
}

fn compose(
    client: &dyn LlmClient,
    config: &PipelineConfig,
    query: &str,
    relevant: &str,
    hits: &[SearchHit<'_>],
    syllabus: &Syllabus,
) -> Option<String> {
    let excerpts = hits
        .iter()
        .map(|h| {
            let title = syllabus.lesson(&h.chunk.lesson_id).map_or(h.chunk.lesson_id.as_str(), |l| l.title.as_str());
            format!(
                "[{title} {}-{}] {}",
                timestamp(h.chunk.start_seconds),
                timestamp(h.chunk.end_seconds),
                h.chunk.text
            )
        })
        .collect::<Vec<_>>()
        .join("\n");
    let prompt = render(
        config.template(&config.tutor_template),
        &[
            ("course_title", syllabus.course_title.as_str()),
            ("relevant_lesson", relevant),
            ("excerpts", &excerpts),
            ("query", query),
        ],
    );
    let text = client
        .complete(&CompletionRequest {
            prompt,
            params: config.decoding,
        })
        .ok()?;
    let text = text.trim();
    (!text.is_empty()).then(|| text.to_string())
}

/// Answers `query` from the lessons the learner has reached and records it
/// in the question log. With a client the body is composed by the model,
/// otherwise (or if the call fails) it is the top chunk's text.
pub fn ask(
    query: &str,
    state: &mut LearnerState,
    plan: &Plan,
    syllabus: &Syllabus,
    index: &LexicalIndex,
    client: Option<(&dyn LlmClient, &PipelineConfig)>,
    now: NaiveDateTime,
) -> Result<TutorReply, TutorError> {
    if state.course_id != plan.course_id {
        return Err(TutorError::CourseMismatch {
            state: state.course_id.clone(),
            plan: plan.course_id.clone(),
        });
    }
    let allowed = allowed_lessons(state, plan);
    let hits = index.search(query, &allowed, RETRIEVAL_K).map_err(|e| match e {
        SearchError::EmptyQuery => TutorError::EmptyQuery,
    })?;
    let terms: BTreeSet<String> = content_tokens(query).into_iter().collect();
    let hits: Vec<SearchHit<'_>> = hits
        .into_iter()
        .filter(|h| {
            let shared = content_tokens(&h.chunk.text).into_iter().collect::<BTreeSet<_>>().intersection(&terms).count();
            shared as f64 >= MIN_TERM_COVERAGE * terms.len() as f64
        })
        .collect();
    let id = answer_id(state, query, now);

    let reply = match hits.first() {
        None => TutorReply::NotCoveredYet {
            answer_id: id.clone(),
            message: NOT_COVERED_MESSAGE.into(),
        },
        Some(top) => {
            let relevant = syllabus
                .lesson(&top.chunk.lesson_id)
                .map_or_else(|| top.chunk.lesson_id.clone(), |l| l.title.clone());
            let citations = hits
                .iter()
                .map(|h| Citation {
                    lesson_id: h.chunk.lesson_id.clone(),
                    start_seconds: h.chunk.start_seconds,
                    end_seconds: h.chunk.end_seconds,
                })
                .collect();
            let composed = client.and_then(|(c, cfg)| compose(c, cfg, query, &relevant, &hits, syllabus));
            let (body, provenance) = match composed {
                Some(body) => (body, AnswerProvenance::LlmComposed),
                None => (top.chunk.text.clone(), AnswerProvenance::Extractive),
            };
            TutorReply::Answered(Answer {
                answer_id: id.clone(),
                relevant_lesson: relevant,
                body,
                citations,
                provenance,
            })
        }
    };
    state.question_log.push(QuestionRecord {
        timestamp: now,
        query: query.to_string(),
        answer_id: id,
    });
    Ok(reply)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ClockTime, Provenance, ScheduledSession};
    use chrono::NaiveDate;

    fn plan() -> Plan {
        let d = NaiveDate::from_ymd_opt(2025, 1, 1).unwrap();
        let t = |m| ClockTime::from_minutes(m).unwrap();
        let profile = crate::model::PersonalizationProfile::from_json(
            br#"{"goals_text":"","availability":[{"weekdays":["mon","tue","wed","thu","fri","sat","sun"],"window_start":"18:00","window_minutes":120}],"pace":"steady","path_preferences":["video"],"start_date":"2025-01-01"}"#,
        )
        .unwrap();
        Plan {
            course_id: "c".into(),
            revision: 1,
            provenance: Provenance::Deterministic,
            profile,
            sessions: vec![
                ScheduledSession::study("s0001".into(), d, t(1080), t(1120), "a".into(), 1),
                ScheduledSession::rest("s0002".into(), d, t(1120), t(1130)),
                ScheduledSession::study("s0003".into(), d, t(1130), t(1170), "b".into(), 1),
            ],
        }
    }

    #[test]
    fn allowed_lessons_examples() {
        let plan = plan();
        let mut state = LearnerState::new("c");
        assert!(allowed_lessons(&state, &plan).is_empty());
        state.current_lesson_id = Some("a".into());
        assert_eq!(allowed_lessons(&state, &plan), BTreeSet::from(["a".to_string()]));
        state.complete(&plan, "s0003");
        state.complete(&plan, "s0002");
        state.current_lesson_id = Some("z".into());
        assert_eq!(allowed_lessons(&state, &plan), BTreeSet::from(["b".to_string(), "z".to_string()]));
    }
}
