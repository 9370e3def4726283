//! Plan ↔ calendar-event conversion and iCalendar export.

mod ical;

pub use ical::export_ical;

use std::collections::HashMap;

use chrono::{NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::model::{ClockTime, PersonalizationProfile, Plan, Provenance, ScheduledSession, SessionKind, Syllabus};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CalendarEvent {
    pub event_id: String,
    pub session_id: String,
    pub title: String,
    pub start: NaiveDateTime,
    pub end: NaiveDateTime,
    pub kind: SessionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lesson_id: Option<String>,
    pub editable: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EditOp {
    Move,
    Add,
    Delete,
}

/// New event contents for an `Add` edit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventPayload {
    pub start: NaiveDateTime,
    pub end: NaiveDateTime,
    pub kind: SessionKind,
    #[serde(default)]
    pub lesson_id: Option<String>,
}

/// A user calendar interaction. `event_id` names an event of the plan's
/// current revision; it is ignored for `Add`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalendarEdit {
    pub op: EditOp,
    #[serde(default)]
    pub event_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub new_start: Option<NaiveDateTime>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<EventPayload>,
}

impl CalendarEdit {
    pub fn move_to(event_id: impl Into<String>, new_start: NaiveDateTime) -> Self {
        Self {
            op: EditOp::Move,
            event_id: event_id.into(),
            new_start: Some(new_start),
            payload: None,
        }
    }

    pub fn delete(event_id: impl Into<String>) -> Self {
        Self {
            op: EditOp::Delete,
            event_id: event_id.into(),
            new_start: None,
            payload: None,
        }
    }

    pub fn add(payload: EventPayload) -> Self {
        Self {
            op: EditOp::Add,
            event_id: String::new(),
            new_start: None,
            payload: Some(payload),
        }
    }

    /// Checks the op-specific required fields.
    pub fn validate(&self) -> Result<(), String> {
        match self.op {
            EditOp::Move if self.new_start.is_none() => Err("move requires new_start".into()),
            EditOp::Add if self.payload.is_none() => Err("add requires payload".into()),
            EditOp::Move | EditOp::Delete if self.event_id.is_empty() => Err("event_id is required".into()),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CalendarError {
    #[error("session {session_id} references unknown lesson {lesson_id:?}")]
    UnknownLesson { session_id: String, lesson_id: String },
    #[error("malformed event {event_id}: {reason}")]
    MalformedEvent { event_id: String, reason: String },
}

/// Content-addressed event id: a digest of the plan revision and the
/// session's position in the plan.
pub fn event_id(revision: u32, index: usize) -> String {
    let digest = Sha256::digest(format!("{revision}:{index}").as_bytes());
    hex::encode(&digest[..8])
}

/// One event per session. Study events are titled `<lesson> (<difficulty>)`.
pub fn plan_to_events(plan: &Plan, syllabus: &Syllabus) -> Result<Vec<CalendarEvent>, CalendarError> {
    plan.sessions
        .iter()
        .enumerate()
        .map(|(index, s)| {
            let title = match (&s.kind, &s.lesson_id) {
                (SessionKind::Break, _) => "Break".to_string(),
                (SessionKind::Study, Some(id)) => syllabus
                    .lesson(id)
                    .map(|l| l.display_title())
                    .ok_or_else(|| CalendarError::UnknownLesson {
                        session_id: s.id.clone(),
                        lesson_id: id.clone(),
                    })?,
                (SessionKind::Study, None) => {
                    return Err(CalendarError::UnknownLesson {
                        session_id: s.id.clone(),
                        lesson_id: String::new(),
                    })
                }
            };
            Ok(CalendarEvent {
                event_id: event_id(plan.revision, index),
                session_id: s.id.clone(),
                title,
                start: s.start_datetime(),
                end: s.end_datetime(),
                kind: s.kind,
                lesson_id: s.lesson_id.clone(),
                editable: s.is_study(),
            })
        })
        .collect()
}

/// Plan metadata that events do not carry.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlanHeader {
    pub course_id: String,
    pub revision: u32,
    pub provenance: Provenance,
    pub profile: PersonalizationProfile,
}

impl PlanHeader {
    pub fn of(plan: &Plan) -> Self {
        Self {
            course_id: plan.course_id.clone(),
            revision: plan.revision,
            provenance: plan.provenance,
            profile: plan.profile.clone(),
        }
    }
}

pub(crate) fn clock_of(dt: &NaiveDateTime) -> Option<ClockTime> {
    if dt.second() != 0 || dt.nanosecond() != 0 {
        return None;
    }
    ClockTime::from_hm(dt.hour() as u16, dt.minute() as u16)
}

/// Converts one event into a session, validating its shape.
pub(crate) fn session_from_event(
    id: String,
    event_ref: &str,
    start: &NaiveDateTime,
    end: &NaiveDateTime,
    kind: SessionKind,
    lesson_id: Option<String>,
) -> Result<ScheduledSession, CalendarError> {
    let malformed = |reason: &str| CalendarError::MalformedEvent {
        event_id: event_ref.to_string(),
        reason: reason.to_string(),
    };
    if start.date() != end.date() {
        return Err(malformed("event must start and end on the same date"));
    }
    let (Some(s), Some(e)) = (clock_of(start), clock_of(end)) else {
        return Err(malformed("times must be whole minutes"));
    };
    if s >= e {
        return Err(malformed("start must precede end"));
    }
    match (kind, lesson_id) {
        (SessionKind::Study, Some(lesson)) => Ok(ScheduledSession::study(id, start.date(), s, e, lesson, 1)),
        (SessionKind::Study, None) => Err(malformed("study event without lesson_id")),
        (SessionKind::Break, None) => Ok(ScheduledSession::rest(id, start.date(), s, e)),
        (SessionKind::Break, Some(_)) => Err(malformed("break event with lesson_id")),
    }
}

/// Renumbers each lesson's segment ordinals in chronological order.
pub(crate) fn renumber_segments(sessions: &mut [ScheduledSession]) {
    let mut counts: HashMap<String, u32> = HashMap::new();
    for s in sessions.iter_mut() {
        if let Some(lesson) = &s.lesson_id {
            let n = counts.entry(lesson.clone()).or_default();
            *n += 1;
            s.segment_ordinal = Some(*n);
        }
    }
}

/// Inverse of [`plan_to_events`]. Sessions are sorted chronologically and
/// segment ordinals recomputed from that order.
pub fn events_to_plan(events: &[CalendarEvent], header: PlanHeader) -> Result<Plan, CalendarError> {
    let mut sessions = events
        .iter()
        .map(|e| session_from_event(e.session_id.clone(), &e.event_id, &e.start, &e.end, e.kind, e.lesson_id.clone()))
        .collect::<Result<Vec<_>, _>>()?;
    sessions.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()).then_with(|| a.id.cmp(&b.id)));
    renumber_segments(&mut sessions);
    Ok(Plan {
        course_id: header.course_id,
        revision: header.revision,
        provenance: header.provenance,
        profile: header.profile,
        sessions,
    })
}
