//! Directory of canonical JSON documents.
//!
//! ```text
//! plans/<plan id>/rev-000001.json   immutable plan revisions
//! plans/<plan id>/state.json        learner state
//! transcripts/<course>/<lesson>.json
//! indexes/<course>.json
//! ```
//!
//! Every write goes to a temporary file that is fsynced and renamed over
//! the target, so readers only ever see complete documents.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use pacepath_core::model::{LearnerState, Plan};
use pacepath_core::transcripts::{LexicalIndex, TranscriptDoc};
use serde::de::DeserializeOwned;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {message}", path.display())]
    Corrupt { path: PathBuf, message: String },
    #[error("plan {plan_id} already has revision {revision}")]
    RevisionExists { plan_id: String, revision: u32 },
    #[error("invalid document key {0:?}")]
    InvalidKey(String),
}

type Result<T> = std::result::Result<T, StoreError>;

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Keys become file names, so only a conservative alphabet is allowed.
pub fn valid_key(key: &str) -> bool {
    !key.is_empty()
        && key.len() <= 128
        && !key.starts_with('.')
        && key.bytes().all(|b| b.is_ascii_alphanumeric() || matches!(b, b'-' | b'_' | b'.'))
}

fn check_key(key: &str) -> Result<&str> {
    if valid_key(key) {
        Ok(key)
    } else {
        Err(StoreError::InvalidKey(key.to_string()))
    }
}

fn revision_file(revision: u32) -> String {
    format!("rev-{revision:06}.json")
}

pub struct Store {
    root: PathBuf,
    locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
    tmp_counter: AtomicU64,
}

impl Store {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        for sub in ["plans", "transcripts", "indexes"] {
            let dir = root.join(sub);
            fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        }
        Ok(Self {
            root,
            locks: Mutex::new(HashMap::new()),
            tmp_counter: AtomicU64::new(0),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Writer lock for one key (plan id or course id). Callers hold it for
    /// the whole read-modify-write.
    pub fn lock(&self, key: &str) -> Arc<Mutex<()>> {
        self.locks.lock().expect("lock table").entry(key.to_string()).or_default().clone()
    }

    fn tmp_name(&self, stem: &str) -> String {
        let n = self.tmp_counter.fetch_add(1, Ordering::Relaxed);
        format!(".tmp-{stem}-{}-{n}", std::process::id())
    }

    fn write_atomic(&self, path: &Path, bytes: &[u8]) -> Result<()> {
        let dir = path.parent().expect("document paths have a parent");
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let stem = path.file_name().and_then(|s| s.to_str()).unwrap_or("doc");
        let tmp = dir.join(self.tmp_name(stem));
        let mut f = File::create(&tmp).map_err(io_err(&tmp))?;
        f.write_all(bytes).map_err(io_err(&tmp))?;
        f.sync_all().map_err(io_err(&tmp))?;
        drop(f);
        fs::rename(&tmp, path).map_err(io_err(path))?;
        sync_dir(dir)
    }

    fn read<T: DeserializeOwned>(&self, path: &Path) -> Result<Option<T>> {
        match fs::read(path) {
            Ok(bytes) => serde_json::from_slice(&bytes).map(Some).map_err(|e| StoreError::Corrupt {
                path: path.to_path_buf(),
                message: e.to_string(),
            }),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(io_err(path)(e)),
        }
    }

    fn plan_dir(&self, plan_id: &str) -> Result<PathBuf> {
        Ok(self.root.join("plans").join(check_key(plan_id)?))
    }

    /// Stores revision 1 of a new plan with a fresh learner state. The plan
    /// directory appears atomically.
    pub fn create_plan(&self, plan: &Plan) -> Result<String> {
        let plan_id = format!("p{}", uuid::Uuid::new_v4().simple());
        let plans = self.root.join("plans");
        let staging = plans.join(self.tmp_name(&plan_id));
        fs::create_dir(&staging).map_err(io_err(&staging))?;
        self.write_atomic(&staging.join(revision_file(plan.revision)), plan.to_json_pretty().as_bytes())?;
        self.write_atomic(&staging.join("state.json"), &state_json(&LearnerState::new(&plan.course_id)))?;
        let target = plans.join(&plan_id);
        fs::rename(&staging, &target).map_err(io_err(&target))?;
        sync_dir(&plans)?;
        Ok(plan_id)
    }

    /// Adds a revision. Existing revisions are never overwritten.
    pub fn put_revision(&self, plan_id: &str, plan: &Plan) -> Result<()> {
        let dir = self.plan_dir(plan_id)?;
        let path = dir.join(revision_file(plan.revision));
        let tmp = dir.join(self.tmp_name(&revision_file(plan.revision)));
        let mut f = File::create(&tmp).map_err(io_err(&tmp))?;
        f.write_all(plan.to_json_pretty().as_bytes()).map_err(io_err(&tmp))?;
        f.sync_all().map_err(io_err(&tmp))?;
        drop(f);
        // hard_link fails if the target exists, which keeps revisions immutable.
        match fs::hard_link(&tmp, &path) {
            Ok(()) => {}
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => {
                let _ = fs::remove_file(&tmp);
                return Err(StoreError::RevisionExists {
                    plan_id: plan_id.to_string(),
                    revision: plan.revision,
                });
            }
            Err(e) => return Err(io_err(&path)(e)),
        }
        fs::remove_file(&tmp).map_err(io_err(&tmp))?;
        sync_dir(&dir)
    }

    pub fn revisions(&self, plan_id: &str) -> Result<Vec<u32>> {
        let dir = self.plan_dir(plan_id)?;
        let entries = match fs::read_dir(&dir) {
            Ok(e) => e,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(io_err(&dir)(e)),
        };
        let mut revs: Vec<u32> = entries
            .filter_map(|e| e.ok())
            .filter_map(|e| {
                let name = e.file_name().into_string().ok()?;
                name.strip_prefix("rev-")?.strip_suffix(".json")?.parse().ok()
            })
            .collect();
        revs.sort_unstable();
        Ok(revs)
    }

    pub fn plan_revision(&self, plan_id: &str, revision: u32) -> Result<Option<Plan>> {
        self.read(&self.plan_dir(plan_id)?.join(revision_file(revision)))
    }

    pub fn latest_plan(&self, plan_id: &str) -> Result<Option<Plan>> {
        match self.revisions(plan_id)?.last() {
            Some(&rev) => self.plan_revision(plan_id, rev),
            None => Ok(None),
        }
    }

    pub fn plan_ids(&self) -> Result<Vec<String>> {
        let dir = self.root.join("plans");
        let mut ids: Vec<String> = fs::read_dir(&dir)
            .map_err(io_err(&dir))?
            .filter_map(|e| e.ok()?.file_name().into_string().ok())
            .filter(|n| valid_key(n))
            .collect();
        ids.sort();
        Ok(ids)
    }

    pub fn state(&self, plan_id: &str) -> Result<Option<LearnerState>> {
        self.read(&self.plan_dir(plan_id)?.join("state.json"))
    }

    pub fn put_state(&self, plan_id: &str, state: &LearnerState) -> Result<()> {
        self.write_atomic(&self.plan_dir(plan_id)?.join("state.json"), &state_json(state))
    }

    pub fn put_transcript(&self, course_id: &str, doc: &TranscriptDoc) -> Result<()> {
        let path = self
            .root
            .join("transcripts")
            .join(check_key(course_id)?)
            .join(format!("{}.json", check_key(&doc.lesson_id)?));
        let mut bytes = serde_json::to_vec_pretty(doc).expect("transcript serializes");
        bytes.push(b'\n');
        self.write_atomic(&path, &bytes)
    }

    pub fn transcript(&self, course_id: &str, lesson_id: &str) -> Result<Option<TranscriptDoc>> {
        self.read(
            &self
                .root
                .join("transcripts")
                .join(check_key(course_id)?)
                .join(format!("{}.json", check_key(lesson_id)?)),
        )
    }

    /// Every stored transcript of a course, by lesson id.
    pub fn transcripts(&self, course_id: &str) -> Result<Vec<TranscriptDoc>> {
        let dir = self.root.join("transcripts").join(check_key(course_id)?);
        let entries = match fs::read_dir(&dir) {
            Ok(e) => e,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(io_err(&dir)(e)),
        };
        let mut paths: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.extension().is_some_and(|x| x == "json")
                    && p.file_name().and_then(|n| n.to_str()).is_some_and(valid_key)
            })
            .collect();
        paths.sort();
        let mut docs = Vec::with_capacity(paths.len());
        for p in paths {
            docs.extend(self.read::<TranscriptDoc>(&p)?);
        }
        Ok(docs)
    }

    pub fn put_index(&self, course_id: &str, index: &LexicalIndex) -> Result<()> {
        let path = self.root.join("indexes").join(format!("{}.json", check_key(course_id)?));
        self.write_atomic(&path, index.to_json().as_bytes())
    }

    pub fn index(&self, course_id: &str) -> Result<Option<LexicalIndex>> {
        self.read(&self.root.join("indexes").join(format!("{}.json", check_key(course_id)?)))
    }
}

fn state_json(state: &LearnerState) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(state).expect("state serializes");
    bytes.push(b'\n');
    bytes
}

fn sync_dir(dir: &Path) -> Result<()> {
    #[cfg(unix)]
    {
        OpenOptions::new()
            .read(true)
            .open(dir)
            .and_then(|d| d.sync_all())
            .map_err(io_err(dir))?;
    }
    #[cfg(not(unix))]
    let _ = (dir, OpenOptions::new());
    Ok(())
}
