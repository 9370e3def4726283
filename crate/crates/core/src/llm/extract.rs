//! Natural-language preference answers → [`PersonalizationProfile`].
//!
//! The model path is tried first when a client is given; the rule-based
//! extractor below is the offline fallback.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use chrono::NaiveDate;
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::client::{LlmClient, LlmError};
use super::pipeline::{run_repair_loop, LoopResult, PipelineConfig};
use super::prompts::{self, extract_json, render};
use crate::model::{
    parse_weekday, AvailabilityWindow, ClockTime, Pace, PersonalizationProfile, ProfileDoc, Provenance, ResourceKind,
    WeekdaySet, DEFAULT_BREAK_MINUTES, DEFAULT_SEGMENT_MINUTES,
};

pub const DIM_GOALS: &str = "goals";
pub const DIM_TIME: &str = "time";
pub const DIM_PACE: &str = "pace";
pub const DIM_PATH: &str = "path";

/// Defaults applied when an answer leaves something unstated.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractDefaults {
    pub morning_start: ClockTime,
    pub afternoon_start: ClockTime,
    pub evening_start: ClockTime,
    pub night_start: ClockTime,
}

impl Default for ExtractDefaults {
    fn default() -> Self {
        let t = |h| ClockTime::from_hm(h, 0).expect("valid hour");
        Self {
            morning_start: t(8),
            afternoon_start: t(13),
            evening_start: t(18),
            night_start: t(20),
        }
    }
}

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("could not extract a profile: {0}")]
    Unextractable(String),
    #[error(transparent)]
    Llm(#[from] LlmError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Extracted {
    pub profile: PersonalizationProfile,
    /// `Llm` when the model's profile was accepted, `Deterministic` when the
    /// rules produced it without a client, `FallbackUsed` otherwise.
    pub provenance: Provenance,
}

/// Maps dimension answers (`time`, `pace`, `path`, optional `goals`) to a
/// profile starting on `start_date`.
pub fn extract_profile(
    answers: &BTreeMap<String, String>,
    start_date: NaiveDate,
    defaults: &ExtractDefaults,
    client: Option<(&dyn LlmClient, &PipelineConfig)>,
) -> Result<Extracted, ExtractError> {
    let answer = |k: &str| answers.get(k).map(|s| s.trim()).unwrap_or_default();
    let missing: Vec<&str> = [DIM_TIME, DIM_PACE, DIM_PATH].into_iter().filter(|k| answer(k).is_empty()).collect();
    if !missing.is_empty() {
        return Err(ExtractError::Unextractable(format!("missing answers for {}", missing.join(", "))));
    }

    if let Some((client, config)) = client {
        let prompt = render(
            config.template(&config.profile_template),
            &[
                ("time", answer(DIM_TIME)),
                ("pace", answer(DIM_PACE)),
                ("path", answer(DIM_PATH)),
                ("goals", answer(DIM_GOALS)),
                ("default_break", &DEFAULT_BREAK_MINUTES.to_string()),
                ("default_segment", &DEFAULT_SEGMENT_MINUTES.to_string()),
                ("evening_start", &defaults.evening_start.to_string()),
                ("start_date", &start_date.to_string()),
                ("schema", prompts::PROFILE_SCHEMA.trim()),
            ],
        );
        let result = run_repair_loop(client, config.max_repair_attempts, config.decoding, &prompt, |text| {
            let mut doc: ProfileDoc =
                serde_json::from_str(extract_json(text)).map_err(|e| format!("response does not match the schema: {e}"))?;
            doc.start_date = start_date;
            if doc.goals_text.is_empty() {
                doc.goals_text = answer(DIM_GOALS).to_string();
            }
            PersonalizationProfile::try_from(doc).map_err(|e| e.to_string())
        })?;
        if let LoopResult::Accepted { value, .. } = result {
            return Ok(Extracted {
                profile: value,
                provenance: Provenance::Llm,
            });
        }
    }

    let profile = extract_profile_rules(answers, start_date, defaults)?;
    Ok(Extracted {
        profile,
        provenance: if client.is_some() {
            Provenance::FallbackUsed
        } else {
            Provenance::Deterministic
        },
    })
}

fn duration_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"(?x)
            \b(?P<num>\d+(?:\.\d+)?|an?|one|two|three|four|five|six|seven|eight|nine|ten|eleven|twelve|fifteen|twenty|thirty|forty|forty-five|fifty|sixty|ninety)
            (?:\s*-\s*|\s+)
            (?:(?:focused|solid|full|dedicated|uninterrupted|straight|quiet|good)\s+)?
            (?P<unit>hours?|hrs?|minutes?|mins?)\b",
        )
        .expect("duration regex")
    })
}

fn number_word(s: &str) -> Option<f64> {
    Some(match s {
        "a" | "an" | "one" => 1.0,
        "two" => 2.0,
        "three" => 3.0,
        "four" => 4.0,
        "five" => 5.0,
        "six" => 6.0,
        "seven" => 7.0,
        "eight" => 8.0,
        "nine" => 9.0,
        "ten" => 10.0,
        "eleven" => 11.0,
        "twelve" => 12.0,
        "fifteen" => 15.0,
        "twenty" => 20.0,
        "thirty" => 30.0,
        "forty" => 40.0,
        "forty-five" => 45.0,
        "fifty" => 50.0,
        "sixty" => 60.0,
        "ninety" => 90.0,
        other => return other.parse().ok(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum DurationRole {
    Window,
    Segment,
    Break,
}

#[derive(Clone, Copy, Debug)]
struct Duration {
    minutes: u32,
    role: DurationRole,
}

const SEGMENT_NOUNS: &[&str] = &["burst", "session", "block", "chunk", "stint", "sprint", "segment", "interval"];

fn classify(text: &str, start: usize, end: usize) -> DurationRole {
    let before = &text[text[..start].char_indices().rev().nth(24).map_or(0, |(i, _)| i)..start];
    let after_end = text[end..].char_indices().nth(16).map_or(text.len(), |(i, _)| end + i);
    let after = &text[end..after_end];
    let next_word = after
        .trim_start_matches([' ', '-'])
        .split(|c: char| !c.is_ascii_alphabetic())
        .next()
        .unwrap_or_default();
    if next_word.starts_with("break") || next_word.starts_with("rest") || before.trim_end().ends_with("breaks of")
        || before.trim_end().ends_with("break of") || before.trim_end().ends_with("rest for")
    {
        DurationRole::Break
    } else if before.trim_end().ends_with("every")
        || SEGMENT_NOUNS.iter().any(|n| next_word.starts_with(n))
        || before.trim_end().ends_with("sessions of")
        || before.trim_end().ends_with("bursts of")
    {
        DurationRole::Segment
    } else {
        DurationRole::Window
    }
}

fn durations(text: &str) -> Vec<Duration> {
    let mut out = Vec::new();
    let mut covered = Vec::new();
    for special in [("an hour and a half", 90), ("hour and a half", 90), ("half an hour", 30), ("half hour", 30)] {
        for (i, _) in text.match_indices(special.0) {
            let span = (i, i + special.0.len());
            if covered.iter().any(|&(a, b)| span.0 < b && a < span.1) {
                continue;
            }
            covered.push(span);
            out.push((span.0, Duration {
                minutes: special.1,
                role: classify(text, span.0, span.1),
            }));
        }
    }
    for caps in duration_re().captures_iter(text) {
        let m = caps.get(0).expect("match");
        if covered.iter().any(|&(a, b)| m.start() < b && a < m.end()) {
            continue;
        }
        let Some(n) = number_word(&caps["num"]) else { continue };
        let minutes = if caps["unit"].starts_with('h') { n * 60.0 } else { n };
        out.push((m.start(), Duration {
            minutes: minutes.round() as u32,
            role: classify(text, m.start(), m.end()),
        }));
    }
    out.sort_by_key(|(pos, _)| *pos);
    out.into_iter().map(|(_, d)| d).collect()
}

fn clock_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"\b(?P<h>\d{1,2})(?::(?P<m>\d{2}))?\s*(?P<ap>a\.?m\.?|p\.?m\.?)|\b(?P<h24>[01]?\d|2[0-3]):(?P<m24>[0-5]\d)\b")
            .expect("clock regex")
    })
}

fn clock_time(text: &str) -> Option<ClockTime> {
    let caps = clock_re().captures(text)?;
    if let Some(h) = caps.name("h") {
        let mut hour: u16 = h.as_str().parse().ok()?;
        let minute: u16 = caps.name("m").map_or(Some(0), |m| m.as_str().parse().ok())?;
        if !(1..=12).contains(&hour) {
            return None;
        }
        let pm = caps["ap"].starts_with('p');
        hour %= 12;
        if pm {
            hour += 12;
        }
        ClockTime::from_hm(hour, minute)
    } else {
        ClockTime::from_hm(caps["h24"].parse().ok()?, caps["m24"].parse().ok()?)
    }
}

fn weekdays(text: &str) -> WeekdaySet {
    let mut set = WeekdaySet::EMPTY;
    if text.contains("weekday") {
        set = set.union(WeekdaySet::WEEKDAYS);
    }
    if text.contains("weekend") {
        set = set.union(WeekdaySet::WEEKEND);
    }
    for word in text.split(|c: char| !c.is_ascii_alphabetic()) {
        let singular = word.strip_suffix('s').unwrap_or(word);
        if singular.len() >= 6 && singular.ends_with("day") {
            if let Some(day) = parse_weekday(singular) {
                set = set.with(day);
            }
        }
    }
    if set.is_empty() {
        WeekdaySet::ALL
    } else {
        set
    }
}

fn window_start(text: &str, defaults: &ExtractDefaults) -> ClockTime {
    if let Some(t) = clock_time(text) {
        return t;
    }
    let has = |w: &str| text.contains(w);
    if has("morning") || has("before work") || has("breakfast") {
        defaults.morning_start
    } else if has("afternoon") || has("lunch") {
        defaults.afternoon_start
    } else if has("night") || has("late") {
        defaults.night_start
    } else {
        defaults.evening_start
    }
}

fn pace(text: &str) -> Pace {
    static FRONT: OnceLock<Regex> = OnceLock::new();
    static BACK: OnceLock<Regex> = OnceLock::new();
    let front = FRONT.get_or_init(|| {
        Regex::new(
            r"front.?load|more time\b.{0,60}\b(start|beginning|initially|first|early|fundamental|foundation|basics)|gradually (reduce|decrease|lower|lessen)|(reduce|decrease|lower) the (intensity|duration|time)|intense at first|heavier at the (start|beginning)",
        )
        .expect("front regex")
    });
    let back = BACK.get_or_init(|| {
        Regex::new(
            r"back.?load|ramp up|build up|gradually (increase|intensify|raise)|start (slow|slowly|easy|light|gently)|more time\b.{0,60}\b(later|end|advanced)|(increase|raise) the (intensity|duration|time)",
        )
        .expect("back regex")
    });
    if front.is_match(text) {
        Pace::FrontLoaded
    } else if back.is_match(text) {
        Pace::BackLoaded
    } else {
        Pace::Steady
    }
}

fn path(text: &str) -> Vec<ResourceKind> {
    let cues: [(ResourceKind, &[&str]); 3] = [
        (ResourceKind::Video, &["video", "watch", "visual", "animation", "lecture", "diagram"]),
        (ResourceKind::Reading, &["read", "article", "text", "notes", "book"]),
        (ResourceKind::Exercise, &["exercise", "practice", "quiz", "problem", "hands-on", "hands on", "interactive"]),
    ];
    let mut found: Vec<(usize, ResourceKind)> = cues
        .iter()
        .filter_map(|(kind, words)| words.iter().filter_map(|w| text.find(w)).min().map(|pos| (pos, *kind)))
        .collect();
    found.sort();
    let mut order: Vec<ResourceKind> = found.into_iter().map(|(_, k)| k).collect();
    for kind in ResourceKind::ALL {
        if !order.contains(&kind) {
            order.push(kind);
        }
    }
    order
}

/// Rule-based extraction: durations, clock times, dayparts, weekday names
/// and pace/path keywords.
pub fn extract_profile_rules(
    answers: &BTreeMap<String, String>,
    start_date: NaiveDate,
    defaults: &ExtractDefaults,
) -> Result<PersonalizationProfile, ExtractError> {
    let lower = |k: &str| answers.get(k).map(|s| s.trim().to_lowercase()).unwrap_or_default();
    let (time, pace_text, path_text) = (lower(DIM_TIME), lower(DIM_PACE), lower(DIM_PATH));
    if time.is_empty() || pace_text.is_empty() || path_text.is_empty() {
        return Err(ExtractError::Unextractable("time, pace and path answers are required".into()));
    }

    let found = durations(&time);
    let pick = |role| found.iter().filter(move |d| d.role == role).map(|d| d.minutes);
    let segment_minutes = pick(DurationRole::Segment).next().unwrap_or(DEFAULT_SEGMENT_MINUTES);
    let break_minutes = pick(DurationRole::Break).next().unwrap_or(DEFAULT_BREAK_MINUTES);
    let window_minutes = pick(DurationRole::Window).max().unwrap_or(segment_minutes);
    if found.is_empty() && clock_time(&time).is_none() {
        return Err(ExtractError::Unextractable(format!("no durations or times in {time:?}")));
    }

    let doc = ProfileDoc {
        goals_text: answers.get(DIM_GOALS).cloned().unwrap_or_default(),
        availability: vec![AvailabilityWindow {
            weekdays: weekdays(&time),
            window_start: window_start(&time, defaults),
            window_minutes,
        }],
        segment_minutes: Some(segment_minutes),
        break_minutes: Some(break_minutes),
        pace: pace(&pace_text),
        path_preferences: path(&path_text),
        start_date,
    };
    PersonalizationProfile::try_from(doc).map_err(|e| ExtractError::Unextractable(e.to_string()))
}
