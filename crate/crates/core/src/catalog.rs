//! Local course repository and goal-driven course recommendation.
//!
//! A catalog directory holds one `<id>.course.json` card per course plus the
//! syllabus documents the cards point to. Syllabi are parsed on demand.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::{self, Execution};
use crate::model::{ModelError, Syllabus};
use crate::text::tokenize;

const CARD_SUFFIX: &str = ".course.json";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CourseCard {
    pub course_id: String,
    pub title: String,
    #[serde(default)]
    pub topics: Vec<String>,
    #[serde(default)]
    pub description: String,
    /// Relative to the catalog directory.
    pub syllabus_path: String,
}

impl CourseCard {
    fn search_text(&self) -> String {
        format!("{} {} {}", self.title, self.description, self.topics.join(" "))
    }
}

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("course {course_id}: syllabus {} not found", path.display())]
    MissingSyllabus { course_id: String, path: PathBuf },
    #[error("{}: {message}", path.display())]
    ParseError { path: PathBuf, message: String },
    #[error("duplicate course id {0:?}")]
    DuplicateCourse(String),
    #[error("unknown course {0:?}")]
    UnknownCourse(String),
    #[error("course {course_id}: {source}")]
    InvalidSyllabus {
        course_id: String,
        #[source]
        source: ModelError,
    },
    #[error("reading {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Sparse TF-IDF vector, L2-normalized.
type TermVector = HashMap<String, f64>;

/// Immutable snapshot of the course repository.
#[derive(Clone, Debug, Default)]
pub struct Catalog {
    root: PathBuf,
    courses: Vec<CourseCard>,
    topic_index: BTreeMap<String, Vec<String>>,
    idf: HashMap<String, f64>,
    vectors: Vec<TermVector>,
}

/// Reads every course card in `dir`. A missing directory is an error; an
/// empty one yields an empty catalog.
pub fn load_catalog(dir: &Path) -> Result<Catalog, CatalogError> {
    let io = |source| CatalogError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.ends_with(CARD_SUFFIX)))
        .collect();
    paths.sort();

    let mut cards = Vec::with_capacity(paths.len());
    for path in paths {
        let bytes = fs::read(&path).map_err(|source| CatalogError::Io {
            path: path.clone(),
            source,
        })?;
        let card: CourseCard = serde_json::from_slice(&bytes).map_err(|e| CatalogError::ParseError {
            path: path.clone(),
            message: e.to_string(),
        })?;
        let syllabus = dir.join(&card.syllabus_path);
        if !syllabus.is_file() {
            return Err(CatalogError::MissingSyllabus {
                course_id: card.course_id,
                path: syllabus,
            });
        }
        cards.push(card);
    }
    Catalog::from_cards(dir.to_path_buf(), cards)
}

impl Catalog {
    pub fn from_cards(root: PathBuf, mut courses: Vec<CourseCard>) -> Result<Self, CatalogError> {
        courses.sort_by(|a, b| a.course_id.cmp(&b.course_id));
        if let Some(pair) = courses.windows(2).find(|w| w[0].course_id == w[1].course_id) {
            return Err(CatalogError::DuplicateCourse(pair[0].course_id.clone()));
        }

        let mut topic_index: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for card in &courses {
            for topic in card.topics.iter().collect::<BTreeSet<_>>() {
                topic_index.entry(topic.clone()).or_default().push(card.course_id.clone());
            }
        }

        let docs: Vec<Vec<String>> = courses.iter().map(|c| tokenize(&c.search_text())).collect();
        let mut df: HashMap<&str, usize> = HashMap::new();
        for doc in &docs {
            for term in doc.iter().map(String::as_str).collect::<BTreeSet<_>>() {
                *df.entry(term).or_default() += 1;
            }
        }
        let n = docs.len() as f64;
        let idf: HashMap<String, f64> = df
            .into_iter()
            .map(|(t, d)| (t.to_string(), ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0))
            .collect();
        let vectors = docs.iter().map(|d| weigh(d, &idf)).collect();

        Ok(Self {
            root,
            courses,
            topic_index,
            idf,
            vectors,
        })
    }

    pub fn courses(&self) -> &[CourseCard] {
        &self.courses
    }

    pub fn topic_index(&self) -> &BTreeMap<String, Vec<String>> {
        &self.topic_index
    }

    pub fn card(&self, course_id: &str) -> Option<&CourseCard> {
        self.courses.iter().find(|c| c.course_id == course_id)
    }

    pub fn is_empty(&self) -> bool {
        self.courses.is_empty()
    }

    pub fn len(&self) -> usize {
        self.courses.len()
    }

    /// Loads and validates the syllabus a card points to.
    pub fn syllabus(&self, course_id: &str) -> Result<Syllabus, CatalogError> {
        let card = self
            .card(course_id)
            .ok_or_else(|| CatalogError::UnknownCourse(course_id.to_string()))?;
        let path = self.root.join(&card.syllabus_path);
        let bytes = fs::read(&path).map_err(|source| match source.kind() {
            std::io::ErrorKind::NotFound => CatalogError::MissingSyllabus {
                course_id: course_id.to_string(),
                path: path.clone(),
            },
            _ => CatalogError::Io {
                path: path.clone(),
                source,
            },
        })?;
        Syllabus::from_json(&bytes).map_err(|source| CatalogError::InvalidSyllabus {
            course_id: course_id.to_string(),
            source,
        })
    }
}

fn weigh(tokens: &[String], idf: &HashMap<String, f64>) -> TermVector {
    let mut v: TermVector = HashMap::new();
    for t in tokens {
        if let Some(w) = idf.get(t) {
            *v.entry(t.clone()).or_default() += w;
        }
    }
    let norm = v.values().map(|w| w * w).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.values_mut().for_each(|w| *w /= norm);
    }
    v
}

fn cosine(a: &TermVector, b: &TermVector) -> f64 {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    small.iter().filter_map(|(t, w)| large.get(t).map(|x| w * x)).sum()
}

/// Ranks courses by TF-IDF cosine similarity to the goal text.
///
/// Only courses sharing at least one term with the goal are returned; ties
/// are broken by ascending course id.
pub fn recommend_courses(goal_text: &str, catalog: &Catalog, k: usize) -> Vec<(CourseCard, f64)> {
    recommend_courses_with(goal_text, catalog, k, Execution::Sequential)
}

pub fn recommend_courses_with(goal_text: &str, catalog: &Catalog, k: usize, mode: Execution) -> Vec<(CourseCard, f64)> {
    let query = weigh(&tokenize(goal_text), &catalog.idf);
    if query.is_empty() || k == 0 {
        return Vec::new();
    }
    let scores = exec::map_slice(&catalog.vectors, mode, |doc| cosine(&query, doc));
    let mut ranked: Vec<(usize, f64)> = scores.into_iter().enumerate().filter(|&(_, s)| s > 0.0).collect();
    // Courses are stored sorted by id, so a stable sort keeps id order on ties.
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    ranked
        .into_iter()
        .take(k)
        .map(|(i, s)| (catalog.courses[i].clone(), s))
        .collect()
}

/// Deduplicated topic tags in lexical order.
pub fn list_topics(catalog: &Catalog) -> Vec<String> {
    catalog.topic_index.keys().cloned().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn card(id: &str, title: &str, topics: &[&str], description: &str) -> CourseCard {
        CourseCard {
            course_id: id.into(),
            title: title.into(),
            topics: topics.iter().map(|t| t.to_string()).collect(),
            description: description.into(),
            syllabus_path: format!("{id}.json"),
        }
    }

    #[test]
    fn no_overlap_is_empty() {
        let c = Catalog::from_cards(PathBuf::new(), vec![card("a", "Alpha", &["x"], "one two")]).unwrap();
        assert!(recommend_courses("zebra", &c, 5).is_empty());
        assert!(recommend_courses("   ", &c, 5).is_empty());
        assert!(recommend_courses("alpha", &c, 0).is_empty());
    }

    #[test]
    fn ties_break_by_course_id() {
        let cards = vec![
            card("b-course", "Same", &["t"], "shared words"),
            card("a-course", "Same", &["t"], "shared words"),
            card("c-course", "Other", &["u"], "different"),
        ];
        let c = Catalog::from_cards(PathBuf::new(), cards).unwrap();
        let got: Vec<_> = recommend_courses("shared", &c, 10).into_iter().map(|(c, _)| c.course_id).collect();
        assert_eq!(got, ["a-course", "b-course"]);
    }

    #[test]
    fn topics_dedup_and_sort() {
        let cards = vec![card("a", "A", &["physics", "astronomy"], ""), card("b", "B", &["astronomy", "astronomy"], "")];
        let c = Catalog::from_cards(PathBuf::new(), cards).unwrap();
        assert_eq!(list_topics(&c), ["astronomy", "physics"]);
        assert_eq!(c.topic_index()["astronomy"], ["a", "b"]);
        assert!(list_topics(&Catalog::default()).is_empty());
    }

    #[test]
    fn duplicate_ids_rejected() {
        let cards = vec![card("a", "A", &[], ""), card("a", "B", &[], "")];
        assert!(matches!(
            Catalog::from_cards(PathBuf::new(), cards),
            Err(CatalogError::DuplicateCourse(_))
        ));
    }

    #[test]
    fn missing_syllabus_file() {
        let dir = tempfile::tempdir().unwrap();
        let c = card("ghost", "Ghost", &[], "");
        fs::write(dir.path().join("ghost.course.json"), serde_json::to_vec(&c).unwrap()).unwrap();
        assert!(matches!(load_catalog(dir.path()), Err(CatalogError::MissingSyllabus { .. })));
    }

    #[test]
    fn empty_directory_is_empty_catalog() {
        let dir = tempfile::tempdir().unwrap();
        assert!(load_catalog(dir.path()).unwrap().is_empty());
    }

    #[test]
    fn malformed_card() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("bad.course.json"), b"{ not json").unwrap();
        assert!(matches!(load_catalog(dir.path()), Err(CatalogError::ParseError { .. })));
    }
}
