use std::collections::BTreeMap;

use chrono::Days;

use super::{slice_day, PacePolicy};
use crate::exec::{self, Execution};
use crate::model::{session_id, PersonalizationProfile, Plan, Provenance, ScheduledSession, Syllabus};

/// One study segment to place: the lesson and which of its segments it is.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SegmentEntry {
    pub lesson_id: String,
    pub ordinal: u32,
}

/// Expands every lesson, in syllabus order, into its pace-dependent number
/// of consecutive segments.
pub fn lesson_segments(syllabus: &Syllabus, profile: &PersonalizationProfile, policy: &PacePolicy) -> Vec<SegmentEntry> {
    syllabus
        .lessons()
        .flat_map(|lesson| {
            let count = policy.segments_for(lesson.difficulty, profile.pace);
            (1..=count).map(move |ordinal| SegmentEntry {
                lesson_id: lesson.id.clone(),
                ordinal,
            })
        })
        .collect()
}

/// Builds the reference plan with the default pace policy.
pub fn build_plan(syllabus: &Syllabus, profile: &PersonalizationProfile) -> Plan {
    build_plan_with(syllabus, profile, &PacePolicy::default())
}

/// Greedy fill: walk dates from `start_date`, slice every active window and
/// assign segments in syllabus order until none remain.
pub fn build_plan_with(syllabus: &Syllabus, profile: &PersonalizationProfile, policy: &PacePolicy) -> Plan {
    let segments = lesson_segments(syllabus, profile, policy);
    let mut sessions = Vec::new();
    let mut next = segments.iter().peekable();
    let mut date = profile.start_date;
    let mut seq = 0u32;
    let mut new_id = || {
        seq += 1;
        session_id(seq)
    };

    while next.peek().is_some() {
        for window in profile.windows_on(date) {
            let slots = slice_day(date, window, profile.segment_minutes, profile.break_minutes);
            for (i, &(start, end)) in slots.study.iter().enumerate() {
                let Some(entry) = next.next() else { break };
                sessions.push(ScheduledSession::study(
                    new_id(),
                    date,
                    start,
                    end,
                    entry.lesson_id.clone(),
                    entry.ordinal,
                ));
                if next.peek().is_none() {
                    break;
                }
                if let Some(&(b_start, b_end)) = slots.breaks.get(i) {
                    sessions.push(ScheduledSession::rest(new_id(), date, b_start, b_end));
                }
            }
        }
        date = date
            .checked_add_days(Days::new(1))
            .expect("plan fits in the calendar range");
    }

    Plan {
        course_id: syllabus.course_id.clone(),
        revision: 1,
        provenance: Provenance::Deterministic,
        profile: profile.clone(),
        sessions,
    }
}

/// Builds many plans, optionally across threads. Output order matches input.
pub fn build_plans(
    inputs: &[(Syllabus, PersonalizationProfile)],
    policy: &PacePolicy,
    mode: Execution,
) -> Vec<Plan> {
    exec::map_slice(inputs, mode, |(s, p)| build_plan_with(s, p, policy))
}

/// Number of distinct calendar days on which each unit has study time.
pub fn unit_day_counts(plan: &Plan, syllabus: &Syllabus) -> Vec<usize> {
    let unit_of: BTreeMap<&str, usize> = syllabus.lessons().map(|l| (l.id.as_str(), l.unit_index)).collect();
    let mut days = vec![std::collections::BTreeSet::new(); syllabus.units.len()];
    for s in plan.study_sessions() {
        if let Some(&u) = s.lesson_id.as_deref().and_then(|id| unit_of.get(id)) {
            days[u].insert(s.date);
        }
    }
    days.into_iter().map(|d| d.len()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Pace, SessionKind};

    fn syllabus(units: &[&[(&str, &str)]]) -> Syllabus {
        let units: Vec<_> = units
            .iter()
            .enumerate()
            .map(|(u, lessons)| {
                let lessons: Vec<_> = lessons
                    .iter()
                    .map(|(id, d)| format!(r#"{{"id":"{id}","title":"{id} title","difficulty":"{d}"}}"#))
                    .collect();
                format!(r#"{{"title":"Unit {u}","lessons":[{}]}}"#, lessons.join(","))
            })
            .collect();
        Syllabus::from_json(format!(r#"{{"course_id":"c","course_title":"C","units":[{}]}}"#, units.join(",")).as_bytes())
            .unwrap()
    }

    fn profile(pace: &str) -> PersonalizationProfile {
        PersonalizationProfile::from_json(
            format!(
                r#"{{"availability":[{{"weekdays":["mon","tue","wed","thu","fri","sat","sun"],"window_start":"18:00","window_minutes":120}}],
                    "pace":"{pace}","path_preferences":["video"],"start_date":"2025-01-01"}}"#
            )
            .as_bytes(),
        )
        .unwrap()
    }

    #[test]
    fn unit_one_front_loaded_is_ten_segments() {
        let s = syllabus(&[&[("a", "Easy"), ("b", "Easy"), ("c", "Medium"), ("d", "Medium"), ("e", "Hard"), ("f", "Medium")]]);
        let segs = lesson_segments(&s, &profile("front_loaded"), &PacePolicy::default());
        assert_eq!(segs.len(), 10);
        let steady = lesson_segments(&s, &profile("steady"), &PacePolicy::default());
        assert_eq!(steady.len(), 7);
    }

    #[test]
    fn single_easy_lesson_one_segment_any_pace() {
        let s = syllabus(&[&[("only", "Easy")]]);
        for pace in ["front_loaded", "steady", "back_loaded"] {
            let p = profile(pace);
            assert_eq!(lesson_segments(&s, &p, &PacePolicy::default()).len(), 1);
            let plan = build_plan(&s, &p);
            assert_eq!(plan.sessions.len(), 1, "no trailing break");
            let only = &plan.sessions[0];
            assert_eq!(only.kind, SessionKind::Study);
            assert_eq!(only.date, p.start_date);
            assert_eq!(only.start.to_string(), "18:00");
        }
    }

    #[test]
    fn unit_two_spills_into_day_nine() {
        let s = syllabus(&[
            &[("a", "Easy"), ("b", "Easy"), ("c", "Medium"), ("d", "Medium"), ("e", "Hard"), ("f", "Medium")],
            &[("g", "Medium"), ("h", "Easy"), ("i", "Hard"), ("j", "Medium")],
            &[("k", "Easy")],
        ]);
        let p = profile("front_loaded");
        assert_eq!(p.pace, Pace::FrontLoaded);
        let plan = build_plan(&s, &p);
        assert_eq!(unit_day_counts(&plan, &s), vec![5, 4, 1]);
        let last = plan.sessions.last().unwrap();
        assert_eq!(last.lesson_id.as_deref(), Some("k"));
        assert_eq!(last.date.to_string(), "2025-01-09");
        assert_eq!(last.start.to_string(), "18:50");
    }

    #[test]
    fn weekday_gaps_are_skipped() {
        let s = syllabus(&[&[("a", "Hard"), ("b", "Hard")]]);
        // 2025-01-01 is a Wednesday.
        let p = PersonalizationProfile::from_json(
            br#"{"availability":[{"weekdays":["mon"],"window_start":"07:00","window_minutes":40}],
                 "pace":"steady","path_preferences":["reading"],"start_date":"2025-01-01"}"#,
        )
        .unwrap();
        let plan = build_plan(&s, &p);
        let dates: Vec<String> = plan.sessions.iter().map(|s| s.date.to_string()).collect();
        assert_eq!(dates, ["2025-01-06", "2025-01-13", "2025-01-20", "2025-01-27"]);
    }

    #[test]
    fn batch_matches_single() {
        let s = syllabus(&[&[("a", "Hard"), ("b", "Medium")]]);
        let inputs = vec![(s.clone(), profile("steady")), (s, profile("front_loaded"))];
        let seq = build_plans(&inputs, &PacePolicy::default(), Execution::Sequential);
        let par = build_plans(&inputs, &PacePolicy::default(), Execution::Parallel);
        assert_eq!(seq, par);
        assert_eq!(seq[1], build_plan(&inputs[1].0, &inputs[1].1));
    }
}
