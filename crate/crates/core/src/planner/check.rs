use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::PacePolicy;
use crate::model::{PersonalizationProfile, Plan, ScheduledSession, Syllabus};

/// A named constraint violation, referencing the offending sessions by id.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Violation {
    Unordered { session_id: String },
    DuplicateSessionId { session_id: String },
    UnknownLesson { session_id: String, lesson_id: String },
    Overlap { first: String, second: String },
    WindowExceeded { session_id: String },
    BreakTooShort { first: String, second: String, gap_minutes: u32 },
    UnderCovered { lesson_id: String, required: u32, found: u32 },
}

impl Violation {
    /// Whether the violation blocks a user edit. Window containment and
    /// break spacing are only warnings once a learner moves things by hand.
    pub fn is_hard_for_edits(&self) -> bool {
        !matches!(self, Violation::WindowExceeded { .. } | Violation::BreakTooShort { .. })
    }
}

/// Validates a plan against the default pace policy.
pub fn check_plan(plan: &Plan, syllabus: &Syllabus, profile: &PersonalizationProfile) -> Vec<Violation> {
    check_plan_with(plan, syllabus, profile, &PacePolicy::default())
}

/// Returns every violation found; an empty list means the plan is valid.
pub fn check_plan_with(
    plan: &Plan,
    syllabus: &Syllabus,
    profile: &PersonalizationProfile,
    policy: &PacePolicy,
) -> Vec<Violation> {
    let mut out = Vec::new();

    for pair in plan.sessions.windows(2) {
        if pair[1].sort_key() < pair[0].sort_key() {
            out.push(Violation::Unordered {
                session_id: pair[1].id.clone(),
            });
        }
    }

    let mut ids = HashSet::new();
    for s in &plan.sessions {
        if !ids.insert(s.id.as_str()) {
            out.push(Violation::DuplicateSessionId { session_id: s.id.clone() });
        }
    }

    let mut found: HashMap<&str, u32> = HashMap::new();
    for s in plan.study_sessions() {
        let lesson_id = s.lesson_id.as_deref().unwrap_or_default();
        if syllabus.lesson(lesson_id).is_none() {
            out.push(Violation::UnknownLesson {
                session_id: s.id.clone(),
                lesson_id: lesson_id.to_string(),
            });
        }
        *found.entry(lesson_id).or_default() += 1;
    }

    let mut study: Vec<&ScheduledSession> = plan.study_sessions().collect();
    study.sort_by_key(|s| s.sort_key());
    for (i, s) in study.iter().enumerate() {
        // Every earlier session on the same date that is still running.
        for prev in study[..i].iter().rev().take_while(|p| p.date == s.date) {
            if prev.end > s.start {
                out.push(Violation::Overlap {
                    first: prev.id.clone(),
                    second: s.id.clone(),
                });
            }
        }
        if i > 0 && profile.break_minutes > 0 {
            let prev = study[i - 1];
            if prev.date == s.date && prev.end <= s.start {
                let gap = s.start_minutes() - prev.end_minutes();
                if gap < profile.break_minutes {
                    out.push(Violation::BreakTooShort {
                        first: prev.id.clone(),
                        second: s.id.clone(),
                        gap_minutes: gap,
                    });
                }
            }
        }
    }

    for s in &plan.sessions {
        let inside = profile
            .windows_on(s.date)
            .iter()
            .any(|w| w.contains_interval(s.start_minutes(), s.end_minutes()));
        if !inside {
            out.push(Violation::WindowExceeded { session_id: s.id.clone() });
        }
    }

    for lesson in syllabus.lessons() {
        let required = policy.segments_for(lesson.difficulty, profile.pace);
        let have = found.get(lesson.id.as_str()).copied().unwrap_or(0);
        if have < required {
            out.push(Violation::UnderCovered {
                lesson_id: lesson.id.clone(),
                required,
                found: have,
            });
        }
    }

    out
}
