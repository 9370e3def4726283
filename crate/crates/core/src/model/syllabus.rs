use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::ModelError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Difficulty {
    #[serde(alias = "easy", alias = "EASY")]
    Easy,
    #[serde(alias = "medium", alias = "MEDIUM")]
    Medium,
    #[serde(alias = "hard", alias = "HARD")]
    Hard,
}

impl Difficulty {
    pub const ALL: [Difficulty; 3] = [Difficulty::Easy, Difficulty::Medium, Difficulty::Hard];

    pub fn label(self) -> &'static str {
        match self {
            Difficulty::Easy => "Easy",
            Difficulty::Medium => "Medium",
            Difficulty::Hard => "Hard",
        }
    }
}

impl fmt::Display for Difficulty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResourceKind {
    #[serde(alias = "Video")]
    Video,
    #[serde(alias = "Reading")]
    Reading,
    #[serde(alias = "Exercise")]
    Exercise,
}

impl ResourceKind {
    pub const ALL: [ResourceKind; 3] = [ResourceKind::Video, ResourceKind::Reading, ResourceKind::Exercise];
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ResourceRef {
    pub kind: ResourceKind,
    pub locator: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lesson {
    pub id: String,
    pub title: String,
    pub difficulty: Difficulty,
    pub unit_index: usize,
    pub order_in_unit: usize,
    pub resources: Vec<ResourceRef>,
}

impl Lesson {
    /// Calendar-facing label, e.g. `Special Relativity (Hard)`.
    pub fn display_title(&self) -> String {
        format!("{} ({})", self.title, self.difficulty)
    }

    pub fn video_locator(&self) -> Option<&str> {
        self.resources
            .iter()
            .find(|r| r.kind == ResourceKind::Video)
            .map(|r| r.locator.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Unit {
    pub index: usize,
    pub title: String,
    pub lessons: Vec<Lesson>,
}

/// Validated course structure. Construct via [`Syllabus::from_json`] or
/// `TryFrom<SyllabusDoc>`; every instance satisfies the ordering and
/// uniqueness invariants.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SyllabusDoc", into = "SyllabusDoc")]
pub struct Syllabus {
    pub course_id: String,
    pub course_title: String,
    pub units: Vec<Unit>,
}

impl Syllabus {
    pub fn from_json(bytes: &[u8]) -> Result<Self, ModelError> {
        let doc: SyllabusDoc = serde_json::from_slice(bytes)?;
        Self::try_from(doc)
    }

    pub fn to_json_pretty(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("syllabus serializes");
        out.push('\n');
        out
    }

    /// Lessons in course order.
    pub fn lessons(&self) -> impl Iterator<Item = &Lesson> {
        self.units.iter().flat_map(|u| u.lessons.iter())
    }

    pub fn lesson(&self, id: &str) -> Option<&Lesson> {
        self.lessons().find(|l| l.id == id)
    }

    /// Position of every lesson in course order.
    pub fn lesson_positions(&self) -> HashMap<&str, usize> {
        self.lessons().enumerate().map(|(i, l)| (l.id.as_str(), i)).collect()
    }

    pub fn lesson_count(&self) -> usize {
        self.units.iter().map(|u| u.lessons.len()).sum()
    }
}

/// On-disk syllabus document. Index fields are optional; when present they
/// must match the element's position.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyllabusDoc {
    pub course_id: String,
    pub course_title: String,
    pub units: Vec<UnitDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
    pub title: String,
    pub lessons: Vec<LessonDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LessonDoc {
    pub id: String,
    pub title: String,
    pub difficulty: Difficulty,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order_in_unit: Option<usize>,
    #[serde(default)]
    pub resources: Vec<ResourceRef>,
}

impl TryFrom<SyllabusDoc> for Syllabus {
    type Error = ModelError;

    fn try_from(doc: SyllabusDoc) -> Result<Self, ModelError> {
        if doc.course_id.trim().is_empty() {
            return Err(ModelError::invalid("course_id", "must not be empty"));
        }
        if doc.units.is_empty() {
            return Err(ModelError::EmptyUnit(format!(
                "syllabus {:?} has no units",
                doc.course_id
            )));
        }
        let mut seen: HashMap<String, usize> = HashMap::new();
        let mut units = Vec::with_capacity(doc.units.len());
        for (unit_index, unit) in doc.units.into_iter().enumerate() {
            if let Some(declared) = unit.index {
                if declared != unit_index {
                    return Err(ModelError::NonContiguousIndex(format!(
                        "unit {:?} declares index {declared} at position {unit_index}",
                        unit.title
                    )));
                }
            }
            if unit.lessons.is_empty() {
                return Err(ModelError::EmptyUnit(format!(
                    "unit {unit_index} ({:?}) has no lessons",
                    unit.title
                )));
            }
            let mut lessons = Vec::with_capacity(unit.lessons.len());
            for (order, lesson) in unit.lessons.into_iter().enumerate() {
                if let Some(declared) = lesson.order_in_unit {
                    if declared != order {
                        return Err(ModelError::NonContiguousIndex(format!(
                            "lesson {:?} declares order {declared} at position {order} of unit {unit_index}",
                            lesson.id
                        )));
                    }
                }
                if lesson.id.trim().is_empty() {
                    return Err(ModelError::invalid(
                        format!("units[{unit_index}].lessons[{order}].id"),
                        "must not be empty",
                    ));
                }
                if let Some(&first_unit) = seen.get(&lesson.id) {
                    return Err(ModelError::DuplicateLessonId {
                        id: lesson.id,
                        unit: unit_index,
                        first_unit,
                    });
                }
                seen.insert(lesson.id.clone(), unit_index);
                lessons.push(Lesson {
                    id: lesson.id,
                    title: lesson.title,
                    difficulty: lesson.difficulty,
                    unit_index,
                    order_in_unit: order,
                    resources: lesson.resources,
                });
            }
            units.push(Unit {
                index: unit_index,
                title: unit.title,
                lessons,
            });
        }
        Ok(Syllabus {
            course_id: doc.course_id,
            course_title: doc.course_title,
            units,
        })
    }
}

impl From<Syllabus> for SyllabusDoc {
    fn from(s: Syllabus) -> Self {
        SyllabusDoc {
            course_id: s.course_id,
            course_title: s.course_title,
            units: s
                .units
                .into_iter()
                .map(|u| UnitDoc {
                    index: None,
                    title: u.title,
                    lessons: u
                        .lessons
                        .into_iter()
                        .map(|l| LessonDoc {
                            id: l.id,
                            title: l.title,
                            difficulty: l.difficulty,
                            order_in_unit: None,
                            resources: l.resources,
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

/// Parses and validates a syllabus document.
pub fn validate_syllabus(raw: &[u8]) -> Result<Syllabus, ModelError> {
    Syllabus::from_json(raw)
}
