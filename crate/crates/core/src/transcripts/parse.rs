//! WebVTT, SRT and segment-JSON caption parsing.

use serde::{Deserialize, Serialize};

use super::{TranscriptError, TranscriptSegment};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TranscriptFormat {
    WebVtt,
    Srt,
    Json,
}

impl TranscriptFormat {
    pub fn from_extension(ext: &str) -> Option<Self> {
        match ext.to_ascii_lowercase().as_str() {
            "vtt" => Some(Self::WebVtt),
            "srt" => Some(Self::Srt),
            "json" => Some(Self::Json),
            _ => None,
        }
    }

    /// Sniffs the format from content.
    pub fn detect(raw: &str) -> Option<Self> {
        let body = raw.trim_start_matches('\u{feff}').trim_start();
        if body.starts_with("WEBVTT") {
            Some(Self::WebVtt)
        } else if body.starts_with('[') || body.starts_with('{') {
            Some(Self::Json)
        } else if body.contains("-->") {
            Some(Self::Srt)
        } else {
            None
        }
    }
}

pub(crate) fn parse(raw: &str, format: TranscriptFormat) -> Result<Vec<TranscriptSegment>, TranscriptError> {
    let mut segments = match format {
        TranscriptFormat::WebVtt => parse_cues(raw, true)?,
        TranscriptFormat::Srt => parse_cues(raw, false)?,
        TranscriptFormat::Json => parse_json(raw)?,
    };
    segments.sort_by(|a, b| a.start_seconds.total_cmp(&b.start_seconds));
    Ok(segments)
}

/// Timestamp in milliseconds. Accepts `hh:mm:ss.mmm`, `mm:ss.mmm` and the
/// SRT comma separator.
fn parse_timestamp(s: &str) -> Option<u64> {
    let s = s.trim();
    let (clock, frac) = s.rsplit_once(['.', ','])?;
    if frac.len() != 3 || !frac.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let parts: Vec<&str> = clock.split(':').collect();
    let nums: Vec<u64> = parts.iter().map(|p| p.parse().ok()).collect::<Option<_>>()?;
    let (h, m, sec) = match nums.as_slice() {
        [h, m, s] => (*h, *m, *s),
        [m, s] => (0, *m, *s),
        _ => return None,
    };
    if m >= 60 || sec >= 60 {
        return None;
    }
    Some(((h * 60 + m) * 60 + sec) * 1000 + frac.parse::<u64>().ok()?)
}

fn parse_timing(line: &str) -> Option<(u64, u64)> {
    let (start, rest) = line.split_once("-->")?;
    // WebVTT cue settings follow the end timestamp.
    let end = rest.split_whitespace().next()?;
    Some((parse_timestamp(start)?, parse_timestamp(end)?))
}

fn clean_payload(lines: &[&str]) -> String {
    let joined = lines.join(" ");
    let mut out = String::with_capacity(joined.len());
    let mut in_tag = false;
    for c in joined.chars() {
        match c {
            '<' => in_tag = true,
            '>' if in_tag => in_tag = false,
            c if !in_tag => out.push(c),
            _ => {}
        }
    }
    let decoded = out
        .replace("&nbsp;", " ")
        .replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&amp;", "&");
    decoded.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn parse_cues(raw: &str, vtt: bool) -> Result<Vec<TranscriptSegment>, TranscriptError> {
    let text = raw.trim_start_matches('\u{feff}').replace("\r\n", "\n").replace('\r', "\n");
    let mut out = Vec::new();
    let mut line_no = 1;
    for (block_index, block) in text.split("\n\n").enumerate() {
        let start_line = line_no;
        line_no += block.lines().count() + 1;
        let lines: Vec<&str> = block.lines().filter(|l| !l.trim().is_empty()).collect();
        if lines.is_empty() {
            continue;
        }
        if vtt && block_index == 0 {
            if !lines[0].starts_with("WEBVTT") {
                return Err(TranscriptError::Malformed {
                    line: start_line,
                    reason: "missing WEBVTT header".into(),
                });
            }
            continue;
        }
        if vtt && ["NOTE", "STYLE", "REGION"].iter().any(|k| lines[0].starts_with(k)) {
            continue;
        }
        let Some(timing_at) = lines.iter().take(2).position(|l| l.contains("-->")) else {
            return Err(TranscriptError::Malformed {
                line: start_line,
                reason: "cue without a timing line".into(),
            });
        };
        let (start, end) = parse_timing(lines[timing_at]).ok_or_else(|| TranscriptError::Malformed {
            line: start_line + timing_at,
            reason: format!("bad timing {:?}", lines[timing_at]),
        })?;
        if end <= start {
            return Err(TranscriptError::Malformed {
                line: start_line + timing_at,
                reason: "cue ends before it starts".into(),
            });
        }
        let payload = clean_payload(&lines[timing_at + 1..]);
        if payload.is_empty() {
            continue;
        }
        out.push(TranscriptSegment::from_millis(start, end - start, payload));
    }
    Ok(out)
}

#[derive(Deserialize)]
struct JsonSegment {
    start: f64,
    duration: f64,
    text: String,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum JsonTranscript {
    Bare(Vec<JsonSegment>),
    Wrapped { segments: Vec<JsonSegment> },
}

fn parse_json(raw: &str) -> Result<Vec<TranscriptSegment>, TranscriptError> {
    let parsed: JsonTranscript = serde_json::from_str(raw).map_err(|e| TranscriptError::Malformed {
        line: e.line(),
        reason: e.to_string(),
    })?;
    let segments = match parsed {
        JsonTranscript::Bare(s) | JsonTranscript::Wrapped { segments: s } => s,
    };
    segments
        .into_iter()
        .enumerate()
        .filter(|(_, s)| !s.text.trim().is_empty())
        .map(|(i, s)| {
            if !(s.start.is_finite() && s.start >= 0.0 && s.duration.is_finite() && s.duration > 0.0) {
                return Err(TranscriptError::Malformed {
                    line: 0,
                    reason: format!("segment {i} needs start >= 0 and duration > 0"),
                });
            }
            // Quantize to milliseconds so every format agrees.
            let start = (s.start * 1000.0).round() as u64;
            let duration = (s.duration * 1000.0).round().max(1.0) as u64;
            Ok(TranscriptSegment::from_millis(start, duration, clean_payload(&[&s.text])))
        })
        .collect()
}
