use std::collections::HashMap;

use chrono::Datelike;
use pacepath_core::model::{Difficulty, Pace, PersonalizationProfile, Plan, SessionKind, Syllabus};

/// Default segments per lesson, indexed [pace][difficulty].
pub const SEGMENT_TABLE: [[u32; 3]; 3] = [[1, 2, 2], [1, 1, 2], [1, 1, 1]];

pub fn expected_segments(d: Difficulty, p: Pace) -> u32 {
    let row = match p {
        Pace::FrontLoaded => 0,
        Pace::Steady => 1,
        Pace::BackLoaded => 2,
    };
    let col = match d {
        Difficulty::Easy => 0,
        Difficulty::Medium => 1,
        Difficulty::Hard => 2,
    };
    SEGMENT_TABLE[row][col]
}

/// Checks a deterministic plan minute by minute. Returns one message per
/// problem found.
pub fn brute_force_check(plan: &Plan, syllabus: &Syllabus, profile: &PersonalizationProfile) -> Vec<String> {
    let mut problems = Vec::new();
    let order: Vec<&str> = syllabus.units.iter().flat_map(|u| u.lessons.iter().map(|l| l.id.as_str())).collect();
    let position: HashMap<&str, usize> = order.iter().enumerate().map(|(i, id)| (*id, i)).collect();
    let seg = profile.segment_minutes;
    let brk = profile.break_minutes;

    let mut occupied: HashMap<chrono::NaiveDate, Vec<bool>> = HashMap::new();
    let mut last_pos = 0usize;
    let mut counts: HashMap<&str, u32> = HashMap::new();
    let mut prev_study: Option<(chrono::NaiveDate, u32)> = None;

    for (i, s) in plan.sessions.iter().enumerate() {
        let start = u32::from(s.start.minutes());
        let end = u32::from(s.end.minutes());
        if i > 0 {
            let p = &plan.sessions[i - 1];
            if (p.date, p.start.minutes()) > (s.date, s.start.minutes()) {
                problems.push(format!("{} out of order", s.id));
            }
        }
        if s.date < profile.start_date {
            problems.push(format!("{} before start date", s.id));
        }
        if end <= start {
            problems.push(format!("{} empty interval", s.id));
            continue;
        }

        let day = occupied.entry(s.date).or_insert_with(|| vec![false; 1440]);
        for m in start..end {
            if std::mem::replace(&mut day[m as usize], true) {
                problems.push(format!("{} overlaps at minute {m}", s.id));
                break;
            }
        }

        let inside = (start..end).all(|m| {
            profile.availability.iter().any(|w| {
                let ws = u32::from(w.window_start.minutes());
                w.weekdays.contains(s.date.weekday()) && m >= ws && m < ws + w.window_minutes
            })
        });
        if !inside {
            problems.push(format!("{} outside availability", s.id));
        }

        match s.kind {
            SessionKind::Study => {
                if end - start != seg {
                    problems.push(format!("{} lasts {} not {seg}", s.id, end - start));
                }
                let Some(lesson) = s.lesson_id.as_deref() else {
                    problems.push(format!("{} study without lesson", s.id));
                    continue;
                };
                let Some(&pos) = position.get(lesson) else {
                    problems.push(format!("{} unknown lesson {lesson}", s.id));
                    continue;
                };
                if pos < last_pos {
                    problems.push(format!("{} goes back to {lesson}", s.id));
                }
                last_pos = pos;
                let c = counts.entry(lesson).or_default();
                *c += 1;
                if s.segment_ordinal != Some(*c) {
                    problems.push(format!("{} ordinal {:?} expected {}", s.id, s.segment_ordinal, c));
                }
                if let Some((d, prev_end)) = prev_study {
                    if d == s.date && start < prev_end + brk {
                        problems.push(format!("{} starts {} min after previous study", s.id, start - prev_end));
                    }
                }
                prev_study = Some((s.date, end));
            }
            SessionKind::Break => {
                if end - start != brk {
                    problems.push(format!("{} break lasts {}", s.id, end - start));
                }
                let before = i.checked_sub(1).and_then(|j| plan.sessions.get(j));
                let after = plan.sessions.get(i + 1);
                let flanked = matches!(before, Some(b) if b.is_study() && b.date == s.date && b.end == s.start)
                    && matches!(after, Some(a) if a.is_study() && a.date == s.date && a.start == s.end);
                if !flanked {
                    problems.push(format!("{} break not between two segments", s.id));
                }
            }
        }
    }

    for lesson in syllabus.lessons() {
        let want = expected_segments(lesson.difficulty, profile.pace);
        let got = counts.get(lesson.id.as_str()).copied().unwrap_or(0);
        if want != got {
            problems.push(format!("{} has {got} segments, expected {want}", lesson.id));
        }
    }
    problems
}
