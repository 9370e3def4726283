use std::collections::BTreeSet;

use chrono::{NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use super::{ClockTime, ModelError, PersonalizationProfile};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionKind {
    #[serde(alias = "Study")]
    Study,
    #[serde(alias = "Break")]
    Break,
}

/// One dated, clock-timed block of a plan.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SessionDoc")]
pub struct ScheduledSession {
    /// Stable within a plan's lifetime; survives edits.
    pub id: String,
    pub date: NaiveDate,
    pub start: ClockTime,
    pub end: ClockTime,
    pub kind: SessionKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lesson_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub segment_ordinal: Option<u32>,
}

impl ScheduledSession {
    pub fn study(id: String, date: NaiveDate, start: ClockTime, end: ClockTime, lesson_id: String, ordinal: u32) -> Self {
        Self {
            id,
            date,
            start,
            end,
            kind: SessionKind::Study,
            lesson_id: Some(lesson_id),
            segment_ordinal: Some(ordinal),
        }
    }

    pub fn rest(id: String, date: NaiveDate, start: ClockTime, end: ClockTime) -> Self {
        Self {
            id,
            date,
            start,
            end,
            kind: SessionKind::Break,
            lesson_id: None,
            segment_ordinal: None,
        }
    }

    pub fn is_study(&self) -> bool {
        self.kind == SessionKind::Study
    }

    pub fn start_minutes(&self) -> u32 {
        u32::from(self.start.minutes())
    }

    pub fn end_minutes(&self) -> u32 {
        u32::from(self.end.minutes())
    }

    pub fn duration_minutes(&self) -> u32 {
        self.end_minutes().saturating_sub(self.start_minutes())
    }

    pub fn start_datetime(&self) -> NaiveDateTime {
        self.date.and_hms_opt(self.start.hour().into(), self.start.minute().into(), 0).expect("valid clock")
    }

    pub fn end_datetime(&self) -> NaiveDateTime {
        self.date.and_hms_opt(self.end.hour().into(), self.end.minute().into(), 0).expect("valid clock")
    }

    /// Chronological sort key.
    pub fn sort_key(&self) -> (NaiveDate, ClockTime, ClockTime) {
        (self.date, self.start, self.end)
    }

    pub fn overlaps(&self, other: &ScheduledSession) -> bool {
        self.date == other.date && self.start < other.end && other.start < self.end
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SessionDoc {
    id: String,
    date: NaiveDate,
    start: ClockTime,
    end: ClockTime,
    kind: SessionKind,
    #[serde(default)]
    lesson_id: Option<String>,
    #[serde(default)]
    segment_ordinal: Option<u32>,
}

impl TryFrom<SessionDoc> for ScheduledSession {
    type Error = ModelError;

    fn try_from(d: SessionDoc) -> Result<Self, ModelError> {
        if d.start >= d.end {
            return Err(ModelError::invalid(format!("session {}", d.id), "start must precede end"));
        }
        match (d.kind, &d.lesson_id, d.segment_ordinal) {
            (SessionKind::Study, Some(_), Some(n)) if n >= 1 => {}
            (SessionKind::Study, _, _) => {
                return Err(ModelError::invalid(
                    format!("session {}", d.id),
                    "study sessions need lesson_id and a 1-based segment_ordinal",
                ))
            }
            (SessionKind::Break, None, None) => {}
            (SessionKind::Break, _, _) => {
                return Err(ModelError::invalid(
                    format!("session {}", d.id),
                    "breaks carry no lesson_id or segment_ordinal",
                ))
            }
        }
        Ok(ScheduledSession {
            id: d.id,
            date: d.date,
            start: d.start,
            end: d.end,
            kind: d.kind,
            lesson_id: d.lesson_id,
            segment_ordinal: d.segment_ordinal,
        })
    }
}

/// How a plan was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Deterministic,
    Llm,
    FallbackUsed,
}

/// A scheduled study plan. Field order is the document order of the
/// on-disk plan format.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Plan {
    pub course_id: String,
    pub revision: u32,
    pub provenance: Provenance,
    pub profile: PersonalizationProfile,
    pub sessions: Vec<ScheduledSession>,
}

impl Plan {
    pub fn from_json(bytes: &[u8]) -> Result<Self, ModelError> {
        Ok(serde_json::from_slice(bytes)?)
    }

    /// Canonical pretty-printed form used for golden files and storage.
    pub fn to_json_pretty(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("plan serializes");
        out.push('\n');
        out
    }

    pub fn session(&self, id: &str) -> Option<&ScheduledSession> {
        self.sessions.iter().find(|s| s.id == id)
    }

    pub fn study_sessions(&self) -> impl Iterator<Item = &ScheduledSession> {
        self.sessions.iter().filter(|s| s.is_study())
    }

    /// Distinct dates carrying at least one session, ascending.
    pub fn dates(&self) -> Vec<NaiveDate> {
        self.sessions.iter().map(|s| s.date).collect::<BTreeSet<_>>().into_iter().collect()
    }

    pub fn sort_sessions(&mut self) {
        self.sessions.sort_by_key(|s| s.sort_key());
    }

    /// Smallest numeric suffix not yet used by a session id.
    pub fn next_session_id(&self) -> String {
        let max = self
            .sessions
            .iter()
            .filter_map(|s| s.id.strip_prefix('s').and_then(|n| n.parse::<u32>().ok()))
            .max()
            .unwrap_or(0);
        session_id(max + 1)
    }
}

pub fn session_id(n: u32) -> String {
    format!("s{n:04}")
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionRecord {
    pub timestamp: NaiveDateTime,
    pub query: String,
    pub answer_id: String,
}

/// Progress of one learner through one plan.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LearnerState {
    pub course_id: String,
    #[serde(default)]
    pub completed_session_ids: BTreeSet<String>,
    #[serde(default)]
    pub current_lesson_id: Option<String>,
    #[serde(default)]
    pub question_log: Vec<QuestionRecord>,
}

impl LearnerState {
    pub fn new(course_id: impl Into<String>) -> Self {
        Self {
            course_id: course_id.into(),
            ..Self::default()
        }
    }

    /// Marks a session complete. Returns false when the plan has no such session.
    pub fn complete(&mut self, plan: &Plan, session_id: &str) -> bool {
        match plan.session(session_id) {
            Some(session) => {
                self.completed_session_ids.insert(session_id.to_string());
                if let Some(lesson) = &session.lesson_id {
                    self.current_lesson_id = Some(lesson.clone());
                }
                true
            }
            None => false,
        }
    }

    /// Ids in `completed_session_ids` that the plan does not contain.
    pub fn dangling_ids<'a>(&'a self, plan: &Plan) -> Vec<&'a str> {
        self.completed_session_ids
            .iter()
            .filter(|id| plan.session(id).is_none())
            .map(String::as_str)
            .collect()
    }
}
