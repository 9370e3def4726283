#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use chrono::NaiveDate;
use pacepath_core::llm::{extract_profile_rules, ExtractDefaults};
use pacepath_core::model::{PersonalizationProfile, Syllabus};

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

pub fn read_fixture(rel: &str) -> String {
    std::fs::read_to_string(fixture(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

pub fn cosmology() -> Syllabus {
    Syllabus::from_json(read_fixture("catalog/syllabi/cosmology-astronomy.json").as_bytes()).unwrap()
}

pub fn jan(day: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(2025, 1, day).unwrap()
}

/// Profile extracted from the bundled evening-learner answers, starting Jan 1 2025.
pub fn evening_profile() -> PersonalizationProfile {
    let answers: BTreeMap<String, String> =
        serde_json::from_str(&read_fixture("profile/evening_learner.answers.json")).unwrap();
    extract_profile_rules(&answers, jan(1), &ExtractDefaults::default()).unwrap()
}

/// Ingests every bundled transcript whose video belongs to a syllabus lesson.
pub fn fixture_transcripts(syllabus: &Syllabus) -> Vec<pacepath_core::transcripts::TranscriptDoc> {
    use pacepath_core::transcripts::{ingest_transcript, video_id_from_locator, DirFetcher, TranscriptFetcher};
    let fetcher = DirFetcher::new(fixture("transcripts"));
    syllabus
        .lessons()
        .filter_map(|l| {
            let locator = l.video_locator()?;
            let fetched = fetcher.fetch(video_id_from_locator(locator)).ok()?;
            Some(ingest_transcript(&fetched.text, fetched.format, &l.id, locator).unwrap())
        })
        .collect()
}
