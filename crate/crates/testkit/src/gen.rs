use std::collections::HashMap;

use chrono::{Days, NaiveDate};
use pacepath_core::model::{
    AvailabilityWindow, ClockTime, Difficulty, LessonDoc, Pace, PersonalizationProfile, Plan, ProfileDoc,
    ResourceKind, ResourceRef, Syllabus, SyllabusDoc, UnitDoc, WeekdaySet,
};
use pacepath_core::planner::build_plan;
use proptest::prelude::*;
use proptest::sample::subsequence;

pub fn arb_difficulty() -> impl Strategy<Value = Difficulty> {
    prop_oneof![Just(Difficulty::Easy), Just(Difficulty::Medium), Just(Difficulty::Hard)]
}

pub fn arb_pace() -> impl Strategy<Value = Pace> {
    prop_oneof![Just(Pace::FrontLoaded), Just(Pace::Steady), Just(Pace::BackLoaded)]
}

/// Syllabus with 1..=max_units units of 1..=max_lessons lessons each.
pub fn arb_syllabus(max_units: usize, max_lessons: usize) -> impl Strategy<Value = Syllabus> {
    prop::collection::vec(prop::collection::vec(arb_difficulty(), 1..=max_lessons), 1..=max_units).prop_map(
        |units| {
            let doc = SyllabusDoc {
                course_id: "generated".into(),
                course_title: "Generated course".into(),
                units: units
                    .into_iter()
                    .enumerate()
                    .map(|(u, lessons)| UnitDoc {
                        index: None,
                        title: format!("Unit {}", u + 1),
                        lessons: lessons
                            .into_iter()
                            .enumerate()
                            .map(|(l, difficulty)| LessonDoc {
                                id: format!("u{u}l{l}"),
                                title: format!("Lesson {}.{}", u + 1, l + 1),
                                difficulty,
                                order_in_unit: None,
                                resources: vec![ResourceRef {
                                    kind: ResourceKind::Video,
                                    locator: format!("yt:u{u}l{l}"),
                                }],
                            })
                            .collect(),
                    })
                    .collect(),
            };
            Syllabus::try_from(doc).expect("generated syllabus is valid")
        },
    )
}

const BAND_MINUTES: u32 = 480;

/// Profiles with one to three windows, each confined to its own eight-hour
/// band of the day so that same-day windows never collide.
pub fn arb_profile() -> impl Strategy<Value = PersonalizationProfile> {
    (10u32..=90, 0u32..=30, arb_pace(), 0u64..730, 1usize..=3).prop_flat_map(|(seg, brk, pace, offset, n)| {
        let window = (1u8..=127, 1u32..=4, 0u32..90, 0u32..=BAND_MINUTES);
        (prop::collection::vec(window, n), Just((seg, brk, pace, offset))).prop_map(|(windows, (seg, brk, pace, offset))| {
            let availability = windows
                .into_iter()
                .enumerate()
                .map(|(band, (bits, k, extra, shift))| {
                    let len = (seg * k + brk * (k - 1) + extra % seg).min(BAND_MINUTES - brk - 1).max(seg);
                    let slack = BAND_MINUTES - brk - 1 - len;
                    let start = band as u32 * BAND_MINUTES + shift % (slack + 1);
                    AvailabilityWindow {
                        weekdays: WeekdaySet::from_bits(bits),
                        window_start: ClockTime::from_minutes(start as u16).expect("in range"),
                        window_minutes: len,
                    }
                })
                .collect();
            let doc = ProfileDoc {
                goals_text: String::new(),
                availability,
                segment_minutes: Some(seg),
                break_minutes: Some(brk),
                pace,
                path_preferences: vec![ResourceKind::Video, ResourceKind::Reading],
                start_date: NaiveDate::from_ymd_opt(2024, 1, 1).unwrap() + Days::new(offset),
            };
            PersonalizationProfile::try_from(doc).expect("generated profile is valid")
        })
    })
}

pub fn arb_instance(max_units: usize, max_lessons: usize) -> impl Strategy<Value = (Syllabus, PersonalizationProfile)> {
    (arb_syllabus(max_units, max_lessons), arb_profile())
}

/// A deterministic plan with a random subset of sessions kept and a random
/// revision number. Still sorted; not necessarily covering.
pub fn arb_plan() -> impl Strategy<Value = (Plan, Syllabus)> {
    (arb_instance(4, 6), 1u32..50).prop_flat_map(|((syllabus, profile), revision)| {
        let plan = build_plan(&syllabus, &profile);
        let n = plan.sessions.len();
        (Just((plan, syllabus, revision)), subsequence((0..n).collect::<Vec<_>>(), 0..=n)).prop_map(
            |((mut plan, syllabus, revision), keep)| {
                plan.sessions = keep.into_iter().map(|i| plan.sessions[i].clone()).collect();
                plan.revision = revision;
                let mut seen: HashMap<String, u32> = HashMap::new();
                for s in plan.sessions.iter_mut() {
                    if let Some(lesson) = &s.lesson_id {
                        let n = seen.entry(lesson.clone()).or_default();
                        *n += 1;
                        s.segment_ordinal = Some(*n);
                    }
                }
                (plan, syllabus)
            },
        )
    })
}
