use serde::{Deserialize, Serialize};

use crate::model::{Difficulty, Pace};

/// Number of study segments a lesson receives, by difficulty and pace.
///
/// Serialized as `{ "front_loaded": { "easy": 1, "medium": 2, "hard": 2 }, ... }`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PaceTable", into = "PaceTable")]
pub struct PacePolicy {
    table: [[u32; 3]; 3],
}

impl PacePolicy {
    pub fn new(front_loaded: [u32; 3], steady: [u32; 3], back_loaded: [u32; 3]) -> Result<Self, PolicyError> {
        let table = [front_loaded, steady, back_loaded];
        if table.iter().flatten().any(|&n| n == 0) {
            return Err(PolicyError);
        }
        Ok(Self { table })
    }

    pub fn segments_for(&self, difficulty: Difficulty, pace: Pace) -> u32 {
        self.table[pace_row(pace)][difficulty_col(difficulty)]
    }
}

impl Default for PacePolicy {
    /// Front-loaded gives medium and hard lessons a second segment; steady
    /// only hard ones; back-loaded gives every lesson one.
    fn default() -> Self {
        Self {
            table: [[1, 2, 2], [1, 1, 2], [1, 1, 1]],
        }
    }
}

fn pace_row(pace: Pace) -> usize {
    match pace {
        Pace::FrontLoaded => 0,
        Pace::Steady => 1,
        Pace::BackLoaded => 2,
    }
}

fn difficulty_col(d: Difficulty) -> usize {
    match d {
        Difficulty::Easy => 0,
        Difficulty::Medium => 1,
        Difficulty::Hard => 2,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("every pace/difficulty pair needs at least one segment")]
pub struct PolicyError;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PaceRow {
    easy: u32,
    medium: u32,
    hard: u32,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PaceTable {
    #[serde(default)]
    front_loaded: Option<PaceRow>,
    #[serde(default)]
    steady: Option<PaceRow>,
    #[serde(default)]
    back_loaded: Option<PaceRow>,
}

impl TryFrom<PaceTable> for PacePolicy {
    type Error = PolicyError;

    fn try_from(t: PaceTable) -> Result<Self, PolicyError> {
        let base = PacePolicy::default().table;
        let row = |r: &Option<PaceRow>, i: usize| r.as_ref().map_or(base[i], |r| [r.easy, r.medium, r.hard]);
        PacePolicy::new(row(&t.front_loaded, 0), row(&t.steady, 1), row(&t.back_loaded, 2))
    }
}

impl From<PacePolicy> for PaceTable {
    fn from(p: PacePolicy) -> Self {
        let row = |r: [u32; 3]| {
            Some(PaceRow {
                easy: r[0],
                medium: r[1],
                hard: r[2],
            })
        };
        PaceTable {
            front_loaded: row(p.table[0]),
            steady: row(p.table[1]),
            back_loaded: row(p.table[2]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_table() {
        let p = PacePolicy::default();
        let row = |pace| Difficulty::ALL.map(|d| p.segments_for(d, pace));
        assert_eq!(row(Pace::FrontLoaded), [1, 2, 2]);
        assert_eq!(row(Pace::Steady), [1, 1, 2]);
        assert_eq!(row(Pace::BackLoaded), [1, 1, 1]);
    }

    #[test]
    fn zero_entries_rejected() {
        assert!(PacePolicy::new([1, 1, 1], [1, 0, 1], [1, 1, 1]).is_err());
        let json = r#"{"front_loaded":{"easy":1,"medium":3,"hard":4},
                       "steady":{"easy":1,"medium":1,"hard":1},
                       "back_loaded":{"easy":0,"medium":1,"hard":1}}"#;
        assert!(serde_json::from_str::<PacePolicy>(json).is_err());
        let ok = json.replace(r#""easy":0"#, r#""easy":1"#);
        let p: PacePolicy = serde_json::from_str(&ok).unwrap();
        assert_eq!(p.segments_for(Difficulty::Hard, Pace::FrontLoaded), 4);
    }

    #[test]
    fn missing_rows_keep_defaults() {
        let p: PacePolicy = serde_json::from_str(r#"{"steady":{"easy":2,"medium":2,"hard":3}}"#).unwrap();
        assert_eq!(p.segments_for(Difficulty::Hard, Pace::Steady), 3);
        assert_eq!(p.segments_for(Difficulty::Medium, Pace::FrontLoaded), 2);
    }
}
