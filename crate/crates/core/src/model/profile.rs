use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{ClockTime, ModelError, ResourceKind, WeekdaySet, MINUTES_PER_DAY};

pub const DEFAULT_SEGMENT_MINUTES: u32 = 40;
pub const DEFAULT_BREAK_MINUTES: u32 = 10;
pub const MIN_SEGMENT_MINUTES: u32 = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pace {
    #[serde(alias = "FrontLoaded")]
    FrontLoaded,
    #[serde(alias = "Steady")]
    Steady,
    #[serde(alias = "BackLoaded")]
    BackLoaded,
}

/// A recurring block of study time on a set of weekdays.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AvailabilityWindow {
    pub weekdays: WeekdaySet,
    pub window_start: ClockTime,
    pub window_minutes: u32,
}

impl AvailabilityWindow {
    pub fn start_minutes(&self) -> u32 {
        u32::from(self.window_start.minutes())
    }

    pub fn end_minutes(&self) -> u32 {
        self.start_minutes() + self.window_minutes
    }

    /// Whether `[start, end)` (minutes since midnight) lies inside this window.
    pub fn contains_interval(&self, start: u32, end: u32) -> bool {
        start >= self.start_minutes() && end <= self.end_minutes()
    }
}

/// The four personalization dimensions in structured form.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ProfileDoc", into = "ProfileDoc")]
pub struct PersonalizationProfile {
    pub goals_text: String,
    pub availability: Vec<AvailabilityWindow>,
    pub segment_minutes: u32,
    pub break_minutes: u32,
    pub pace: Pace,
    pub path_preferences: Vec<ResourceKind>,
    pub start_date: NaiveDate,
}

impl PersonalizationProfile {
    pub fn from_json(bytes: &[u8]) -> Result<Self, ModelError> {
        let doc: ProfileDoc = serde_json::from_slice(bytes)?;
        Self::try_from(doc)
    }

    /// Windows active on `date`, sorted by start time.
    pub fn windows_on(&self, date: NaiveDate) -> Vec<&AvailabilityWindow> {
        let mut windows: Vec<_> = self
            .availability
            .iter()
            .filter(|w| w.weekdays.contains_date(date))
            .collect();
        windows.sort_by_key(|w| w.window_start);
        windows
    }

    pub fn active_days(&self) -> WeekdaySet {
        self.availability
            .iter()
            .fold(WeekdaySet::EMPTY, |acc, w| acc.union(w.weekdays))
    }
}

/// Profile document as accepted on the wire; `segment_minutes` and
/// `break_minutes` may be omitted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileDoc {
    #[serde(default)]
    pub goals_text: String,
    #[serde(default)]
    pub availability: Vec<AvailabilityWindow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segment_minutes: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub break_minutes: Option<u32>,
    pub pace: Pace,
    pub path_preferences: Vec<ResourceKind>,
    pub start_date: NaiveDate,
}

impl TryFrom<ProfileDoc> for PersonalizationProfile {
    type Error = ModelError;

    fn try_from(doc: ProfileDoc) -> Result<Self, ModelError> {
        let segment_minutes = doc.segment_minutes.unwrap_or(DEFAULT_SEGMENT_MINUTES);
        let break_minutes = doc.break_minutes.unwrap_or(DEFAULT_BREAK_MINUTES);
        if segment_minutes < MIN_SEGMENT_MINUTES {
            return Err(ModelError::invalid(
                "segment_minutes",
                format!("{segment_minutes} is below the {MIN_SEGMENT_MINUTES}-minute minimum"),
            ));
        }
        if doc.availability.is_empty() {
            return Err(ModelError::NoAvailability);
        }
        for (i, w) in doc.availability.iter().enumerate() {
            if w.weekdays.is_empty() {
                return Err(ModelError::invalid(
                    format!("availability[{i}].weekdays"),
                    "must name at least one day",
                ));
            }
            if w.window_minutes < segment_minutes {
                return Err(ModelError::WindowTooShort {
                    window: i,
                    window_minutes: w.window_minutes,
                    segment_minutes,
                });
            }
            if w.end_minutes() >= u32::from(MINUTES_PER_DAY) {
                return Err(ModelError::invalid(
                    format!("availability[{i}]"),
                    "window must end before midnight",
                ));
            }
        }
        for (i, a) in doc.availability.iter().enumerate() {
            for (j, b) in doc.availability.iter().enumerate().skip(i + 1) {
                if !a.weekdays.intersects(b.weekdays) {
                    continue;
                }
                let (first, second) = if a.start_minutes() <= b.start_minutes() { (a, b) } else { (b, a) };
                if second.start_minutes() < first.end_minutes() + break_minutes {
                    return Err(ModelError::invalid(
                        format!("availability[{i}]/availability[{j}]"),
                        "windows sharing a weekday must be separated by at least one break",
                    ));
                }
            }
        }
        if doc.path_preferences.is_empty() {
            return Err(ModelError::invalid("path_preferences", "must not be empty"));
        }
        for (i, kind) in doc.path_preferences.iter().enumerate() {
            if doc.path_preferences[..i].contains(kind) {
                return Err(ModelError::invalid("path_preferences", format!("{kind:?} listed twice")));
            }
        }
        Ok(PersonalizationProfile {
            goals_text: doc.goals_text,
            availability: doc.availability,
            segment_minutes,
            break_minutes,
            pace: doc.pace,
            path_preferences: doc.path_preferences,
            start_date: doc.start_date,
        })
    }
}

impl From<PersonalizationProfile> for ProfileDoc {
    fn from(p: PersonalizationProfile) -> Self {
        ProfileDoc {
            goals_text: p.goals_text,
            availability: p.availability,
            segment_minutes: Some(p.segment_minutes),
            break_minutes: Some(p.break_minutes),
            pace: p.pace,
            path_preferences: p.path_preferences,
            start_date: p.start_date,
        }
    }
}

/// Parses and validates a profile document, applying defaults.
pub fn validate_profile(raw: &[u8]) -> Result<PersonalizationProfile, ModelError> {
    PersonalizationProfile::from_json(raw)
}
