//! Caption ingestion, timestamped chunking and BM25 retrieval.

mod fetch;
mod index;
mod parse;

pub use fetch::{video_id_from_locator, DirFetcher, FetchError, FetchedTranscript, HttpFetcher, TranscriptFetcher};
pub use index::{build_index, build_index_ordered, build_index_with, Bm25Params, LexicalIndex, SearchError, SearchHit};
pub use parse::TranscriptFormat;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_CHUNK_SECONDS: f64 = 60.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranscriptSegment {
    pub start_seconds: f64,
    pub duration_seconds: f64,
    pub text: String,
}

impl TranscriptSegment {
    fn from_millis(start: u64, duration: u64, text: String) -> Self {
        Self {
            start_seconds: start as f64 / 1000.0,
            duration_seconds: duration as f64 / 1000.0,
            text,
        }
    }

    pub fn end_seconds(&self) -> f64 {
        self.start_seconds + self.duration_seconds
    }
}

/// Normalized caption track for one lesson video.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranscriptDoc {
    pub lesson_id: String,
    pub video_locator: String,
    pub segments: Vec<TranscriptSegment>,
}

impl TranscriptDoc {
    /// True when `[start, end]` lies within the span of the transcript.
    pub fn contains_interval(&self, start: f64, end: f64) -> bool {
        let first = self.segments.first().map_or(f64::INFINITY, |s| s.start_seconds);
        let last = self.segments.last().map_or(f64::NEG_INFINITY, |s| s.end_seconds());
        start >= first && end <= last && start < end
    }

    /// Text of every segment overlapping `[start, end)`.
    pub fn text_between(&self, start: f64, end: f64) -> String {
        self.segments
            .iter()
            .filter(|s| s.start_seconds < end && s.end_seconds() > start)
            .map(|s| s.text.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Retrieval unit: consecutive segments of one transcript.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Chunk {
    pub chunk_id: String,
    pub lesson_id: String,
    pub start_seconds: f64,
    pub end_seconds: f64,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TranscriptError {
    #[error("unsupported transcript format")]
    UnsupportedFormat,
    #[error("transcript has no cues")]
    EmptyTranscript,
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
}

/// Parses a caption file into a normalized transcript. The format is
/// sniffed from the content when `format` is `None`.
pub fn ingest_transcript(
    raw: &str,
    format: Option<TranscriptFormat>,
    lesson_id: &str,
    video_locator: &str,
) -> Result<TranscriptDoc, TranscriptError> {
    let format = format
        .or_else(|| TranscriptFormat::detect(raw))
        .ok_or(TranscriptError::UnsupportedFormat)?;
    let segments = parse::parse(raw, format)?;
    if segments.is_empty() {
        return Err(TranscriptError::EmptyTranscript);
    }
    Ok(TranscriptDoc {
        lesson_id: lesson_id.to_string(),
        video_locator: video_locator.to_string(),
        segments,
    })
}

/// Greedily groups consecutive segments until a group spans at least
/// `target_seconds`; the last chunk may be shorter.
pub fn chunk_transcript(doc: &TranscriptDoc, target_seconds: f64) -> Vec<Chunk> {
    let mut chunks = Vec::new();
    let mut group: Vec<&TranscriptSegment> = Vec::new();
    let mut flush = |group: &mut Vec<&TranscriptSegment>| {
        if let (Some(first), Some(last)) = (group.first(), group.last()) {
            chunks.push(Chunk {
                chunk_id: format!("{}#{}", doc.lesson_id, chunks.len()),
                lesson_id: doc.lesson_id.clone(),
                start_seconds: first.start_seconds,
                end_seconds: last.end_seconds(),
                text: group.iter().map(|s| s.text.as_str()).collect::<Vec<_>>().join(" "),
            });
        }
        group.clear();
    };
    for seg in &doc.segments {
        group.push(seg);
        let span = seg.end_seconds() - group[0].start_seconds;
        if span >= target_seconds {
            flush(&mut group);
        }
    }
    flush(&mut group);
    chunks
}
