use std::path::PathBuf;
use std::time::Duration;

use thiserror::Error;

use super::TranscriptFormat;

/// Raw caption text as delivered by a fetch client.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FetchedTranscript {
    pub text: String,
    pub format: Option<TranscriptFormat>,
}

#[derive(Debug, Error)]
pub enum FetchError {
    #[error("no transcript for video {0:?}")]
    NotFound(String),
    #[error("transcript fetch failed: {0}")]
    Transport(String),
    #[error("reading transcript: {0}")]
    Io(#[from] std::io::Error),
}

/// Source of caption files keyed by video id.
pub trait TranscriptFetcher: Send + Sync {
    fn fetch(&self, video_id: &str) -> Result<FetchedTranscript, FetchError>;
}

/// Strips a `scheme:` prefix such as `yt:` from a video locator.
pub fn video_id_from_locator(locator: &str) -> &str {
    locator.split_once(':').map_or(locator, |(_, id)| id)
}

/// Looks up `<video_id>.vtt`, `.srt` or `.json` in a directory.
#[derive(Clone, Debug)]
pub struct DirFetcher {
    root: PathBuf,
}

impl DirFetcher {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }
}

impl TranscriptFetcher for DirFetcher {
    fn fetch(&self, video_id: &str) -> Result<FetchedTranscript, FetchError> {
        if video_id.contains(['/', '\\']) || video_id.starts_with('.') {
            return Err(FetchError::NotFound(video_id.to_string()));
        }
        for ext in ["vtt", "srt", "json"] {
            let path = self.root.join(format!("{video_id}.{ext}"));
            if path.is_file() {
                return Ok(FetchedTranscript {
                    text: std::fs::read_to_string(&path)?,
                    format: TranscriptFormat::from_extension(ext),
                });
            }
        }
        Err(FetchError::NotFound(video_id.to_string()))
    }
}

/// `GET {endpoint}/{video_id}` returning caption text.
pub struct HttpFetcher {
    endpoint: String,
    agent: ureq::Agent,
}

impl HttpFetcher {
    pub fn new(endpoint: impl Into<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            endpoint: endpoint.into().trim_end_matches('/').to_string(),
            agent,
        }
    }
}

impl TranscriptFetcher for HttpFetcher {
    fn fetch(&self, video_id: &str) -> Result<FetchedTranscript, FetchError> {
        let url = format!("{}/{}", self.endpoint, video_id);
        crate::egress::check(&url).map_err(FetchError::Transport)?;
        let mut resp = self
            .agent
            .get(&url)
            .call()
            .map_err(|e| FetchError::Transport(e.to_string()))?;
        match resp.status().as_u16() {
            200 => {}
            404 => return Err(FetchError::NotFound(video_id.to_string())),
            other => return Err(FetchError::Transport(format!("{url} returned HTTP {other}"))),
        }
        let content_type = resp
            .headers()
            .get("content-type")
            .and_then(|v| v.to_str().ok())
            .unwrap_or_default()
            .to_ascii_lowercase();
        let format = if content_type.starts_with("text/vtt") {
            Some(TranscriptFormat::WebVtt)
        } else if content_type.contains("subrip") {
            Some(TranscriptFormat::Srt)
        } else if content_type.contains("json") {
            Some(TranscriptFormat::Json)
        } else {
            None
        };
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| FetchError::Transport(e.to_string()))?;
        Ok(FetchedTranscript { text, format })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn locator_prefix() {
        assert_eq!(video_id_from_locator("yt:abc"), "abc");
        assert_eq!(video_id_from_locator("abc"), "abc");
    }

    #[test]
    fn dir_fetcher_finds_by_extension() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("v1.srt"), "1\n00:00:00,000 --> 00:00:01,000\nhi\n").unwrap();
        let f = DirFetcher::new(dir.path());
        let got = f.fetch("v1").unwrap();
        assert_eq!(got.format, Some(TranscriptFormat::Srt));
        assert!(matches!(f.fetch("v2"), Err(FetchError::NotFound(_))));
        assert!(matches!(f.fetch("../v1"), Err(FetchError::NotFound(_))));
    }
}
