//! Domain types shared by every part of the service.
//!
//! All types are plain immutable values. Documents coming off the wire are
//! parsed into `*Doc` shapes and converted through `TryFrom`, so a value of a
//! validated type always satisfies its invariants.

mod error;
mod plan;
mod profile;
mod syllabus;
mod time;

pub use error::ModelError;
pub use plan::{session_id, LearnerState, Plan, Provenance, QuestionRecord, ScheduledSession, SessionKind};
pub use profile::{
    validate_profile, AvailabilityWindow, Pace, PersonalizationProfile, ProfileDoc, DEFAULT_BREAK_MINUTES,
    DEFAULT_SEGMENT_MINUTES, MIN_SEGMENT_MINUTES,
};
pub use syllabus::{
    validate_syllabus, Difficulty, Lesson, LessonDoc, ResourceKind, ResourceRef, Syllabus, SyllabusDoc, Unit, UnitDoc,
};
pub use time::{parse_weekday, ClockParseError, ClockTime, WeekdaySet, MINUTES_PER_DAY};
