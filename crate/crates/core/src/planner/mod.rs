//! Deterministic schedule generation and validation.
//!
//! [`build_plan`] is the reference generator; [`check_plan`] is the
//! validator applied to every plan, including ones produced by a language
//! model; [`revise_plan`] applies calendar edits on top of either.

mod build;
mod check;
mod pace;
mod revise;
mod slots;

pub use build::{build_plan, build_plan_with, build_plans, lesson_segments, unit_day_counts, SegmentEntry};
pub use check::{check_plan, check_plan_with, Violation};
pub use pace::{PacePolicy, PolicyError};
pub use revise::{revise_plan, ReviseError, Revision};
pub use slots::{slice_day, DaySlots};

use crate::exec::{self, Execution};
use crate::model::{PersonalizationProfile, Plan, Syllabus};

/// Validates many plans against their inputs. Output order matches input.
pub fn check_plans(
    cases: &[(Plan, Syllabus, PersonalizationProfile)],
    policy: &PacePolicy,
    mode: Execution,
) -> Vec<Vec<Violation>> {
    exec::map_slice(cases, mode, |(plan, s, p)| check_plan_with(plan, s, p, policy))
}
