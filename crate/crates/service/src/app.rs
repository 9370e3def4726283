//! Request handling independent of the transport: every HTTP route and CLI
//! command goes through [`App`].

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, RwLock};

use chrono::{NaiveDate, NaiveDateTime};
use pacepath_core::calendar::{export_ical, plan_to_events, CalendarEdit, CalendarError, CalendarEvent};
use pacepath_core::catalog::{list_topics, load_catalog, recommend_courses, Catalog, CatalogError, CourseCard};
use pacepath_core::llm::{
    extract_profile, extract_profile_rules, generate_plan, rerank_courses, ExtractError, HttpClient, LlmClient,
    RecordingClient, ReplayClient,
};
use pacepath_core::model::{validate_profile, LearnerState, PersonalizationProfile, Plan, Provenance, Syllabus};
use pacepath_core::planner::{build_plan_with, check_plan_with, revise_plan, ReviseError, Violation};
use pacepath_core::transcripts::{
    build_index_ordered, chunk_transcript, ingest_transcript, video_id_from_locator, DirFetcher, FetchError,
    HttpFetcher, LexicalIndex, TranscriptError, TranscriptFetcher, TranscriptFormat,
};
use pacepath_core::tutor::{self, TutorError, TutorReply};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::config::Config;
use crate::store::{valid_key, Store, StoreError};

/// Failure of an API operation, mapped one-to-one onto an HTTP status.
#[derive(Debug, Error)]
pub enum ApiError {
    #[error("{0}")]
    BadRequest(String),
    #[error("{0}")]
    NotFound(String),
    #[error("{message}")]
    Conflict { message: String, violations: Vec<Violation> },
    #[error("{0}")]
    Unprocessable(String),
    #[error("{0}")]
    Upstream(String),
    #[error("{0}")]
    Internal(String),
}

impl ApiError {
    pub fn status(&self) -> u16 {
        match self {
            ApiError::BadRequest(_) => 400,
            ApiError::NotFound(_) => 404,
            ApiError::Conflict { .. } => 409,
            ApiError::Unprocessable(_) => 422,
            ApiError::Upstream(_) => 502,
            ApiError::Internal(_) => 500,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            ApiError::BadRequest(_) => "bad_request",
            ApiError::NotFound(_) => "not_found",
            ApiError::Conflict { .. } => "conflict",
            ApiError::Unprocessable(_) => "unprocessable",
            ApiError::Upstream(_) => "upstream_failure",
            ApiError::Internal(_) => "internal",
        }
    }

    /// `{"error": {"code", "message", "details"}}`
    pub fn body(&self) -> Value {
        let details = match self {
            ApiError::Conflict { violations, .. } => serde_json::to_value(violations).expect("violations serialize"),
            _ => Value::Array(Vec::new()),
        };
        serde_json::json!({
            "error": { "code": self.code(), "message": self.to_string(), "details": details }
        })
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::InvalidKey(k) => ApiError::NotFound(format!("no such document {k:?}")),
            StoreError::RevisionExists { .. } => ApiError::Conflict {
                message: e.to_string(),
                violations: Vec::new(),
            },
            other => ApiError::Internal(other.to_string()),
        }
    }
}

impl From<CatalogError> for ApiError {
    fn from(e: CatalogError) -> Self {
        match e {
            CatalogError::UnknownCourse(id) => ApiError::NotFound(format!("unknown course {id:?}")),
            other => ApiError::Internal(other.to_string()),
        }
    }
}

impl From<CalendarError> for ApiError {
    fn from(e: CalendarError) -> Self {
        ApiError::Internal(e.to_string())
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn default_k() -> usize {
    5
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecommendRequest {
    pub goal_text: String,
    #[serde(default = "default_k")]
    pub k: usize,
    /// Let the configured model reorder the lexical ranking.
    #[serde(default)]
    pub rerank: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedCourse {
    #[serde(flatten)]
    pub card: CourseCard,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecommendResponse {
    pub courses: Vec<RankedCourse>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopicsResponse {
    pub topics: Vec<String>,
    pub courses_by_topic: BTreeMap<String, Vec<String>>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanRequest {
    pub course_id: String,
    /// Free-text answers keyed by dimension (`goals`, `time`, `pace`, `path`).
    #[serde(default)]
    pub dimension_answers: Option<BTreeMap<String, String>>,
    /// A complete profile document, used as given.
    #[serde(default)]
    pub profile: Option<Value>,
    /// First day of the plan when extracting from answers. Defaults to today.
    #[serde(default)]
    pub start_date: Option<NaiveDate>,
    #[serde(default)]
    pub use_llm: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanView {
    pub plan_id: String,
    pub revision: u32,
    pub provenance: Provenance,
    pub plan: Plan,
    pub events: Vec<CalendarEvent>,
    pub warnings: Vec<Violation>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EditRequest {
    pub edits: Vec<CalendarEdit>,
    /// Reject the batch when the plan has moved past this revision.
    #[serde(default)]
    pub base_revision: Option<u32>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProgressRequest {
    pub plan_id: String,
    pub session_id: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProgressResponse {
    pub plan_id: String,
    pub learner_state: LearnerState,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AskRequest {
    pub plan_id: String,
    pub query: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranscriptRequest {
    pub course_id: String,
    /// Omit to fetch every lesson of the course that has a video.
    #[serde(default)]
    pub lesson_id: Option<String>,
    /// Caption text to ingest instead of fetching it.
    #[serde(default)]
    pub content: Option<String>,
    #[serde(default)]
    pub format: Option<TranscriptFormat>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IngestedLesson {
    pub lesson_id: String,
    pub segments: usize,
    pub chunks: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IngestResponse {
    pub course_id: String,
    pub ingested: Vec<IngestedLesson>,
    /// Chunks in the course index after the rebuild.
    pub indexed_chunks: usize,
}

pub type Clock = Arc<dyn Fn() -> NaiveDateTime + Send + Sync>;

pub struct App {
    config: Config,
    catalog: Catalog,
    store: Store,
    llm: Option<Arc<dyn LlmClient>>,
    fetcher: Option<Arc<dyn TranscriptFetcher>>,
    clock: Clock,
    indexes: RwLock<HashMap<String, Arc<LexicalIndex>>>,
}

#[derive(Debug, Error)]
pub enum StartupError {
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("LLM provider: {0}")]
    Provider(String),
}

impl App {
    /// Builds the app with the LLM client described by `config.provider`.
    pub fn from_config(config: Config) -> Result<Self, StartupError> {
        let llm = provider_client(&config)?;
        Self::new(config, llm)
    }

    pub fn new(config: Config, llm: Option<Arc<dyn LlmClient>>) -> Result<Self, StartupError> {
        let catalog = load_catalog(&config.catalog_dir)?;
        let store = Store::open(&config.data_dir)?;
        let fetcher: Option<Arc<dyn TranscriptFetcher>> = match (&config.transcripts_dir, &config.transcript_endpoint) {
            (Some(dir), _) => Some(Arc::new(DirFetcher::new(dir))),
            (None, Some(url)) => Some(Arc::new(HttpFetcher::new(url, std::time::Duration::from_secs(30)))),
            (None, None) => None,
        };
        Ok(Self {
            config,
            catalog,
            store,
            llm,
            fetcher,
            clock: Arc::new(|| chrono::Local::now().naive_local()),
            indexes: RwLock::new(HashMap::new()),
        })
    }

    /// Replaces the wall clock, e.g. for reproducible answer ids.
    pub fn with_clock(mut self, clock: Clock) -> Self {
        self.clock = clock;
        self
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    fn llm(&self) -> Option<&dyn LlmClient> {
        self.llm.as_deref()
    }

    // Catalog

    pub fn recommend(&self, req: &RecommendRequest) -> ApiResult<RecommendResponse> {
        if req.goal_text.trim().is_empty() {
            return Err(ApiError::BadRequest("goal_text must not be empty".into()));
        }
        let mut ranked = recommend_courses(&req.goal_text, &self.catalog, req.k);
        if let (true, Some(llm)) = (req.rerank, self.llm()) {
            match rerank_courses(&req.goal_text, ranked.clone(), llm, self.config.pipeline.decoding) {
                Ok(r) => ranked = r,
                Err(e) => tracing::warn!("rerank skipped: {e}"),
            }
        }
        Ok(RecommendResponse {
            courses: ranked.into_iter().map(|(card, score)| RankedCourse { card, score }).collect(),
        })
    }

    pub fn topics(&self) -> TopicsResponse {
        TopicsResponse {
            topics: list_topics(&self.catalog),
            courses_by_topic: self.catalog.topic_index().clone(),
        }
    }

    pub fn syllabus(&self, course_id: &str) -> ApiResult<Syllabus> {
        Ok(self.catalog.syllabus(course_id)?)
    }

    // Plans

    fn profile_for(&self, req: &PlanRequest) -> ApiResult<(PersonalizationProfile, Provenance)> {
        match (&req.profile, &req.dimension_answers) {
            (Some(doc), _) => {
                let bytes = serde_json::to_vec(doc).expect("value serializes");
                let profile = validate_profile(&bytes).map_err(|e| ApiError::Unprocessable(e.to_string()))?;
                Ok((profile, Provenance::Deterministic))
            }
            (None, Some(answers)) => {
                let start = req.start_date.unwrap_or_else(|| (self.clock)().date());
                let defaults = &self.config.extract;
                let client = if req.use_llm {
                    self.llm().map(|c| (c, &self.config.pipeline))
                } else {
                    None
                };
                let extracted = match extract_profile(answers, start, defaults, client) {
                    Ok(x) => x,
                    Err(ExtractError::Llm(e)) => {
                        tracing::warn!("profile extraction fell back to rules: {e}");
                        let profile = extract_profile_rules(answers, start, defaults)
                            .map_err(|e| ApiError::Unprocessable(e.to_string()))?;
                        return Ok((profile, Provenance::FallbackUsed));
                    }
                    Err(e) => return Err(ApiError::Unprocessable(e.to_string())),
                };
                Ok((extracted.profile, extracted.provenance))
            }
            (None, None) => Err(ApiError::BadRequest("either dimension_answers or profile is required".into())),
        }
    }

    pub fn create_plan(&self, req: &PlanRequest) -> ApiResult<PlanView> {
        let syllabus = self.syllabus(&req.course_id)?;
        let (profile, profile_provenance) = self.profile_for(req)?;
        let policy = &self.config.pipeline.policy;
        let mut plan = if !req.use_llm {
            build_plan_with(&syllabus, &profile, policy)
        } else {
            match self.llm() {
                Some(llm) => match generate_plan(&syllabus, &profile, llm, &self.config.pipeline) {
                    Ok(outcome) => outcome.value,
                    Err(e) => {
                        tracing::warn!("plan generation fell back: {e}");
                        fallback_plan(&syllabus, &profile, policy)
                    }
                },
                None => fallback_plan(&syllabus, &profile, policy),
            }
        };
        if profile_provenance == Provenance::FallbackUsed {
            plan.provenance = Provenance::FallbackUsed;
        }
        let plan_id = self.store.create_plan(&plan)?;
        tracing::info!(plan_id, course = %plan.course_id, provenance = ?plan.provenance, "plan created");
        self.view(plan_id, plan, &syllabus, Vec::new())
    }

    fn view(&self, plan_id: String, plan: Plan, syllabus: &Syllabus, warnings: Vec<Violation>) -> ApiResult<PlanView> {
        let events = plan_to_events(&plan, syllabus)?;
        Ok(PlanView {
            plan_id,
            revision: plan.revision,
            provenance: plan.provenance,
            plan,
            events,
            warnings,
        })
    }

    fn load_plan(&self, plan_id: &str) -> ApiResult<Plan> {
        if !valid_key(plan_id) {
            return Err(ApiError::NotFound(format!("unknown plan {plan_id:?}")));
        }
        self.store
            .latest_plan(plan_id)?
            .ok_or_else(|| ApiError::NotFound(format!("unknown plan {plan_id:?}")))
    }

    fn load_state(&self, plan_id: &str, plan: &Plan) -> ApiResult<LearnerState> {
        Ok(self.store.state(plan_id)?.unwrap_or_else(|| LearnerState::new(&plan.course_id)))
    }

    /// Latest revision; warnings list the soft violations it still carries.
    pub fn get_plan(&self, plan_id: &str) -> ApiResult<PlanView> {
        let plan = self.load_plan(plan_id)?;
        let syllabus = self.syllabus(&plan.course_id)?;
        let warnings = check_plan_with(&plan, &syllabus, &plan.profile, &self.config.pipeline.policy);
        self.view(plan_id.to_string(), plan, &syllabus, warnings)
    }

    pub fn edit_plan(&self, plan_id: &str, req: &EditRequest) -> ApiResult<PlanView> {
        let lock = self.store.lock(plan_id);
        let _guard = lock.lock().expect("plan lock");
        let plan = self.load_plan(plan_id)?;
        if let Some(base) = req.base_revision {
            if base != plan.revision {
                return Err(ApiError::Conflict {
                    message: format!("plan is at revision {}, edits were made against {base}", plan.revision),
                    violations: Vec::new(),
                });
            }
        }
        let syllabus = self.syllabus(&plan.course_id)?;
        let revision = revise_plan(&plan, &req.edits, &syllabus, &self.config.pipeline.policy).map_err(|e| match e {
            ReviseError::UnknownSession(id) => ApiError::NotFound(format!("no event {id:?} in revision {}", plan.revision)),
            ReviseError::OverlapAfterEdit(ref v) | ReviseError::CoverageBrokenAfterDelete(ref v) => ApiError::Conflict {
                message: e.to_string(),
                violations: v.clone(),
            },
            ReviseError::InvalidEdit(msg) => ApiError::Unprocessable(msg),
        })?;
        self.store.put_revision(plan_id, &revision.plan)?;
        let mut state = self.load_state(plan_id, &plan)?;
        let dangling: Vec<String> = state.dangling_ids(&revision.plan).into_iter().map(str::to_owned).collect();
        if !dangling.is_empty() {
            for id in &dangling {
                state.completed_session_ids.remove(id);
            }
            self.store.put_state(plan_id, &state)?;
        }
        self.view(plan_id.to_string(), revision.plan, &syllabus, revision.warnings)
    }

    pub fn ical(&self, plan_id: &str) -> ApiResult<String> {
        let view = self.get_plan(plan_id)?;
        let name = self
            .catalog
            .card(&view.plan.course_id)
            .map_or_else(|| view.plan.course_id.clone(), |c| c.title.clone());
        Ok(export_ical(&view.events, &name))
    }

    // Progress and tutoring

    pub fn progress(&self, plan_id: &str) -> ApiResult<ProgressResponse> {
        let plan = self.load_plan(plan_id)?;
        Ok(ProgressResponse {
            plan_id: plan_id.to_string(),
            learner_state: self.load_state(plan_id, &plan)?,
        })
    }

    pub fn complete_session(&self, req: &ProgressRequest) -> ApiResult<ProgressResponse> {
        let lock = self.store.lock(&req.plan_id);
        let _guard = lock.lock().expect("plan lock");
        let plan = self.load_plan(&req.plan_id)?;
        let mut state = self.load_state(&req.plan_id, &plan)?;
        if !state.complete(&plan, &req.session_id) {
            return Err(ApiError::NotFound(format!("plan has no session {:?}", req.session_id)));
        }
        self.store.put_state(&req.plan_id, &state)?;
        Ok(ProgressResponse {
            plan_id: req.plan_id.clone(),
            learner_state: state,
        })
    }

    pub fn ask(&self, req: &AskRequest) -> ApiResult<TutorReply> {
        let lock = self.store.lock(&req.plan_id);
        let _guard = lock.lock().expect("plan lock");
        let plan = self.load_plan(&req.plan_id)?;
        let mut state = self.load_state(&req.plan_id, &plan)?;
        let syllabus = self.syllabus(&plan.course_id)?;
        let index = self.index(&plan.course_id)?;
        let client = self.llm().map(|c| (c, &self.config.pipeline));
        let reply = tutor::ask(&req.query, &mut state, &plan, &syllabus, &index, client, (self.clock)()).map_err(
            |e| match e {
                TutorError::EmptyQuery => ApiError::BadRequest(e.to_string()),
                TutorError::CourseMismatch { .. } => ApiError::Internal(e.to_string()),
            },
        )?;
        self.store.put_state(&req.plan_id, &state)?;
        Ok(reply)
    }

    // Transcripts

    /// Cached index, else the stored one, else an empty index.
    fn index(&self, course_id: &str) -> ApiResult<Arc<LexicalIndex>> {
        if let Some(idx) = self.indexes.read().expect("index cache").get(course_id) {
            return Ok(idx.clone());
        }
        let idx = Arc::new(match self.store.index(course_id)? {
            Some(idx) => idx,
            None => build_index_ordered(Vec::new(), &[]),
        });
        self.indexes.write().expect("index cache").insert(course_id.to_string(), idx.clone());
        Ok(idx)
    }

    pub fn ingest(&self, req: &TranscriptRequest) -> ApiResult<IngestResponse> {
        let syllabus = self.syllabus(&req.course_id)?;
        let lessons: Vec<_> = match &req.lesson_id {
            Some(id) => vec![syllabus
                .lesson(id)
                .ok_or_else(|| ApiError::NotFound(format!("course {:?} has no lesson {id:?}", req.course_id)))?],
            None if req.content.is_some() => {
                return Err(ApiError::BadRequest("content requires a lesson_id".into()));
            }
            None => syllabus.lessons().filter(|l| l.video_locator().is_some()).collect(),
        };

        let mut docs = Vec::new();
        for lesson in lessons {
            let locator = lesson.video_locator().unwrap_or_default();
            let (text, format) = match &req.content {
                Some(text) => (text.clone(), req.format),
                None => {
                    if locator.is_empty() {
                        return Err(ApiError::Unprocessable(format!("lesson {:?} has no video", lesson.id)));
                    }
                    let fetcher = self
                        .fetcher
                        .as_ref()
                        .ok_or_else(|| ApiError::Unprocessable("no transcript source configured".into()))?;
                    match fetcher.fetch(video_id_from_locator(locator)) {
                        Ok(f) => (f.text, req.format.or(f.format)),
                        // Bulk ingestion skips videos without captions.
                        Err(FetchError::NotFound(_)) if req.lesson_id.is_none() => continue,
                        Err(e @ FetchError::NotFound(_)) => return Err(ApiError::NotFound(e.to_string())),
                        Err(e) => return Err(ApiError::Upstream(e.to_string())),
                    }
                }
            };
            let doc = ingest_transcript(&text, format, &lesson.id, locator).map_err(|e: TranscriptError| {
                ApiError::Unprocessable(format!("lesson {:?}: {e}", lesson.id))
            })?;
            docs.push(doc);
        }

        let lock = self.store.lock(&format!("course:{}", req.course_id));
        let _guard = lock.lock().expect("course lock");
        let mut ingested = Vec::new();
        for doc in &docs {
            self.store.put_transcript(&req.course_id, doc)?;
            ingested.push(IngestedLesson {
                lesson_id: doc.lesson_id.clone(),
                segments: doc.segments.len(),
                chunks: chunk_transcript(doc, self.config.chunk_seconds).len(),
            });
        }
        let chunks = self
            .store
            .transcripts(&req.course_id)?
            .iter()
            .flat_map(|d| chunk_transcript(d, self.config.chunk_seconds))
            .collect();
        let order: Vec<String> = syllabus.lessons().map(|l| l.id.clone()).collect();
        let index = build_index_ordered(chunks, &order);
        self.store.put_index(&req.course_id, &index)?;
        let indexed_chunks = index.len();
        self.indexes.write().expect("index cache").insert(req.course_id.clone(), Arc::new(index));
        Ok(IngestResponse {
            course_id: req.course_id.clone(),
            ingested,
            indexed_chunks,
        })
    }
}

/// The deterministic planner standing in for an unavailable model.
fn fallback_plan(syllabus: &Syllabus, profile: &PersonalizationProfile, policy: &pacepath_core::planner::PacePolicy) -> Plan {
    let mut plan = build_plan_with(syllabus, profile, policy);
    plan.provenance = Provenance::FallbackUsed;
    plan
}

fn provider_client(config: &Config) -> Result<Option<Arc<dyn LlmClient>>, StartupError> {
    let Some(p) = &config.provider else { return Ok(None) };
    if let Some(replay) = &p.replay_file {
        let client = ReplayClient::from_jsonl(replay).map_err(|e| StartupError::Provider(e.to_string()))?;
        return Ok(Some(Arc::new(client)));
    }
    let key = p.api_key();
    let http = HttpClient::new(&p.base_url, &p.model, key.clone(), p.timeout());
    Ok(Some(match &p.record_file {
        Some(path) => Arc::new(
            RecordingClient::new(http, path, key.into_iter().collect())
                .map_err(|e| StartupError::Provider(e.to_string()))?,
        ),
        None => Arc::new(http),
    }))
}
