use chrono::NaiveDateTime;
use thiserror::Error;

use super::{check_plan_with, PacePolicy, Violation};
use crate::calendar::{event_id, renumber_segments, session_from_event, CalendarEdit, CalendarError, EditOp};
use crate::model::{Plan, Syllabus};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReviseError {
    #[error("no event {0:?} in the current revision")]
    UnknownSession(String),
    #[error("edit produces overlapping sessions: {0:?}")]
    OverlapAfterEdit(Vec<Violation>),
    #[error("edit leaves lessons under-covered: {0:?}")]
    CoverageBrokenAfterDelete(Vec<Violation>),
    #[error("invalid edit: {0}")]
    InvalidEdit(String),
}

/// An accepted edit batch: the new revision plus soft violations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Revision {
    pub plan: Plan,
    pub warnings: Vec<Violation>,
}

/// Applies edits atomically: either every edit lands and the revision is
/// bumped, or the original plan stays untouched and an error is returned.
///
/// Edits name events of `plan.revision`. Overlap and coverage stay hard
/// errors; window containment and break spacing come back as warnings.
pub fn revise_plan(
    plan: &Plan,
    edits: &[CalendarEdit],
    syllabus: &Syllabus,
    policy: &PacePolicy,
) -> Result<Revision, ReviseError> {
    let ids: Vec<String> = (0..plan.sessions.len()).map(|i| event_id(plan.revision, i)).collect();
    let mut next = plan.clone();
    // Track edits by session id, since positions shift as edits apply.
    let resolve = |next: &Plan, event: &str| -> Result<usize, ReviseError> {
        let index = ids
            .iter()
            .position(|id| id == event)
            .ok_or_else(|| ReviseError::UnknownSession(event.to_string()))?;
        let session_id = &plan.sessions[index].id;
        next.sessions
            .iter()
            .position(|s| &s.id == session_id)
            .ok_or_else(|| ReviseError::UnknownSession(event.to_string()))
    };

    for edit in edits {
        edit.validate().map_err(ReviseError::InvalidEdit)?;
        match edit.op {
            EditOp::Move => {
                let at = resolve(&next, &edit.event_id)?;
                let new_start = edit.new_start.expect("validated");
                let session = &next.sessions[at];
                let duration = chrono::Duration::minutes(i64::from(session.duration_minutes()));
                let new_end: NaiveDateTime = new_start + duration;
                let moved = session_from_event(
                    session.id.clone(),
                    &edit.event_id,
                    &new_start,
                    &new_end,
                    session.kind,
                    session.lesson_id.clone(),
                )
                .map_err(invalid)?;
                next.sessions[at] = moved;
            }
            EditOp::Delete => {
                let at = resolve(&next, &edit.event_id)?;
                next.sessions.remove(at);
            }
            EditOp::Add => {
                let p = edit.payload.as_ref().expect("validated");
                if let Some(lesson) = &p.lesson_id {
                    if syllabus.lesson(lesson).is_none() {
                        return Err(ReviseError::InvalidEdit(format!("unknown lesson {lesson:?}")));
                    }
                }
                let id = next.next_session_id();
                let session = session_from_event(id, "new", &p.start, &p.end, p.kind, p.lesson_id.clone()).map_err(invalid)?;
                next.sessions.push(session);
            }
        }
    }

    next.sessions
        .sort_by(|a, b| a.sort_key().cmp(&b.sort_key()).then_with(|| a.id.cmp(&b.id)));
    renumber_segments(&mut next.sessions);
    next.revision = plan.revision + 1;

    let (hard, warnings): (Vec<_>, Vec<_>) = check_plan_with(&next, syllabus, &plan.profile, policy)
        .into_iter()
        .partition(Violation::is_hard_for_edits);
    let overlaps: Vec<_> = hard.iter().filter(|v| matches!(v, Violation::Overlap { .. })).cloned().collect();
    if !overlaps.is_empty() {
        return Err(ReviseError::OverlapAfterEdit(overlaps));
    }
    if !hard.is_empty() {
        return Err(ReviseError::CoverageBrokenAfterDelete(hard));
    }
    Ok(Revision { plan: next, warnings })
}

fn invalid(err: CalendarError) -> ReviseError {
    ReviseError::InvalidEdit(err.to_string())
}
