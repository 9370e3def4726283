//! End-to-end acceptance checks, one PASS/FAIL line per criterion.
//!
//! Runs with outbound network access disabled for the whole process; the
//! server restarted for the durability check is started in offline mode too.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Child, Command, ExitCode, Stdio};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use common::{answers, app, core_fixture, read_core_fixture, refraction_question};
use pacepath_core::calendar::{events_to_plan, export_ical, plan_to_events, PlanHeader};
use pacepath_core::egress;
use pacepath_core::llm::{
    deterministic_outline, extract_profile_rules, generate_plan, sessions_as_response, ExtractDefaults, LlmClient,
    MockClient, PipelineConfig,
};
use pacepath_core::model::{Provenance, Syllabus};
use pacepath_core::planner::{build_plan, build_plan_with, check_plan, unit_day_counts, PacePolicy};
use pacepath_core::transcripts::build_index;
use pacepath_service::app::{AskRequest, PlanRequest, ProgressRequest, TranscriptRequest};
use pacepath_testkit::corpus::{gated_query, planted_corpus};
use pacepath_testkit::gen::{arb_instance, arb_plan};
use pacepath_testkit::oracle::brute_force_check;
use proptest::test_runner::{Config as RunnerConfig, TestCaseError, TestRunner};
use rand::rngs::StdRng;
use rand::SeedableRng;
use serde_json::{json, Value};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn cosmology() -> Syllabus {
    Syllabus::from_json(read_core_fixture("catalog/syllabi/cosmology-astronomy.json").as_bytes()).unwrap()
}

fn jan(day: u32) -> chrono::NaiveDate {
    chrono::NaiveDate::from_ymd_opt(2025, 1, day).unwrap()
}

fn answer_map() -> BTreeMap<String, String> {
    serde_json::from_value(answers()).unwrap()
}

const FIRST_NINE_DAYS: &[(u32, &str, &str, &str)] = &[
    (1, "18:00", "18:40", "Scale of Earth and Sun (Easy)"),
    (1, "18:40", "18:50", "Break"),
    (1, "18:50", "19:30", "Scale of Galaxy and Universe (Easy)"),
    (2, "18:00", "18:40", "Time Scale of the Cosmos (Medium)"),
    (2, "18:40", "18:50", "Break"),
    (2, "18:50", "19:30", "Time Scale of the Cosmos (Medium)"),
    (3, "18:00", "18:40", "Light and Fundamental Forces (Medium)"),
    (3, "18:40", "18:50", "Break"),
    (3, "18:50", "19:30", "Light and Fundamental Forces (Medium)"),
    (4, "18:00", "18:40", "Special Relativity (Hard)"),
    (4, "18:40", "18:50", "Break"),
    (4, "18:50", "19:30", "Special Relativity (Hard)"),
    (5, "18:00", "18:40", "Big Bang and Expansion of the Universe (Medium)"),
    (5, "18:40", "18:50", "Break"),
    (5, "18:50", "19:30", "Big Bang and Expansion of the Universe (Medium)"),
    (6, "18:00", "18:40", "Life and Death of Stars (Medium)"),
    (6, "18:40", "18:50", "Break"),
    (6, "18:50", "19:30", "Life and Death of Stars (Medium)"),
    (7, "18:00", "18:40", "Stellar Parallax (Easy)"),
    (7, "18:40", "18:50", "Break"),
    (7, "18:50", "19:30", "Quasars and Galactic Collisions (Hard)"),
    (8, "18:00", "18:40", "Quasars and Galactic Collisions (Hard)"),
    (8, "18:40", "18:50", "Break"),
    (8, "18:50", "19:30", "Cepheid Variables (Medium)"),
    (9, "18:00", "18:40", "Cepheid Variables (Medium)"),
    (9, "18:40", "18:50", "Break"),
    (9, "18:50", "19:30", "Plate Tectonics (Medium)"),
];

fn golden_plan_fixture() -> Outcome {
    let started = Instant::now();
    let syllabus = cosmology();
    let profile = extract_profile_rules(&answer_map(), jan(1), &ExtractDefaults::default()).map_err(|e| e.to_string())?;
    let plan = build_plan(&syllabus, &profile);
    let json = plan.to_json_pretty();
    let elapsed = started.elapsed();

    ensure!(json == read_core_fixture("golden/cosmology-evening.plan.json"), "plan JSON differs from the golden file");
    let rows: Vec<(u32, String, String, String)> = plan
        .sessions
        .iter()
        .filter(|s| s.date <= jan(9))
        .map(|s| {
            let title = s
                .lesson_id
                .as_ref()
                .map_or_else(|| "Break".to_string(), |id| syllabus.lesson(id).unwrap().display_title());
            (chrono::Datelike::day(&s.date), s.start.to_string(), s.end.to_string(), title)
        })
        .collect();
    let want: Vec<(u32, String, String, String)> =
        FIRST_NINE_DAYS.iter().map(|&(d, a, b, t)| (d, a.into(), b.into(), t.into())).collect();
    ensure!(rows == want, "Days 1-9 differ from the reference table");
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");

    // The service path produces the same document.
    let dir = tempfile::tempdir().unwrap();
    let view = app(dir.path().to_path_buf(), None)
        .create_plan(&PlanRequest {
            course_id: "cosmology-astronomy".into(),
            dimension_answers: Some(answer_map()),
            start_date: Some(jan(1)),
            ..PlanRequest::default()
        })
        .map_err(|e| e.to_string())?;
    ensure!(view.plan == plan && view.provenance == Provenance::Deterministic, "service plan differs");
    Ok(format!("27 rows of Days 1-9 and byte-identical plan JSON in {} ms", elapsed.as_millis()))
}

fn unit_pacing() -> Outcome {
    let syllabus = cosmology();
    let profile = extract_profile_rules(&answer_map(), jan(1), &ExtractDefaults::default()).map_err(|e| e.to_string())?;
    let plan = build_plan(&syllabus, &profile);
    let days = unit_day_counts(&plan, &syllabus);
    ensure!(days.len() >= 3 && days[..2] == [5, 4], "unit day spans {days:?}");
    let unit_of = |lesson: &str| syllabus.units.iter().position(|u| u.lessons.iter().any(|l| l.id == lesson));
    let day9: Vec<_> = plan.study_sessions().filter(|s| s.date == jan(9)).collect();
    ensure!(day9.len() == 2, "Day 9 has {} study slots", day9.len());
    let second = unit_of(day9[1].lesson_id.as_deref().unwrap());
    ensure!(second == Some(2), "Day 9 second slot is in unit index {second:?}");
    Ok(format!("unit day spans {:?}, Day 9 second slot opens unit 3", &days[..2]))
}

fn planner_properties() -> Outcome {
    let started = Instant::now();
    let mut runner = TestRunner::new(RunnerConfig {
        cases: 1000,
        failure_persistence: None,
        ..RunnerConfig::default()
    });
    runner
        .run(&arb_instance(8, 10), |(syllabus, profile)| {
            let plan = build_plan(&syllabus, &profile);
            let problems = brute_force_check(&plan, &syllabus, &profile);
            if !problems.is_empty() {
                return Err(TestCaseError::fail(format!("{problems:?}")));
            }
            if !check_plan(&plan, &syllabus, &profile).is_empty() || plan != build_plan(&syllabus, &profile) {
                return Err(TestCaseError::fail("checker disagreement or nondeterminism"));
            }
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    Ok(format!("1000 random instances, 0 violations, {:.1} s", elapsed.as_secs_f64()))
}

fn retrieval_oracle() -> Outcome {
    let (mut queries, mut correct) = (0, 0);
    for seed in 0..100 {
        let corpus = planted_corpus(seed);
        let index = build_index(corpus.chunks.clone());
        let all: BTreeSet<String> = corpus.lessons.iter().cloned().collect();
        for (marker, chunk_id, _) in &corpus.markers {
            let hits = index.search(marker, &all, 4).map_err(|e| e.to_string())?;
            queries += 1;
            correct += usize::from(hits.first().is_some_and(|h| &h.chunk.chunk_id == chunk_id));
        }
    }
    ensure!(correct == queries, "rank-1 accuracy {correct}/{queries}");

    let mut rng = StdRng::seed_from_u64(2024);
    let corpora: Vec<_> = (0..10).map(|s| planted_corpus(500 + s)).collect();
    let indexes: Vec<_> = corpora.iter().map(|c| build_index(c.chunks.clone())).collect();
    let mut leaks = 0;
    for q in 0..1000 {
        let i = q % corpora.len();
        let (allowed, query) = gated_query(&corpora[i], &mut rng);
        let hits = indexes[i].search(&query, &allowed, 4).map_err(|e| e.to_string())?;
        leaks += hits.iter().filter(|h| !allowed.contains(&h.chunk.lesson_id)).count();
    }
    ensure!(leaks == 0, "{leaks} results outside the allowed lessons");
    Ok(format!("rank-1 {correct}/{queries} over 100 corpora, 0 leaks in 1000 gated queries"))
}

fn tutor_contract() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mock = Arc::new(MockClient::new([
        "Refraction bends seismic waves as their speed changes with depth, which reveals the layers inside the Earth.",
    ]));
    let app = app(dir.path().to_path_buf(), Some(mock.clone() as Arc<dyn LlmClient>));
    let err = |e: pacepath_service::ApiError| e.to_string();
    let course = "cosmology-astronomy";
    app.ingest(&TranscriptRequest {
        course_id: course.into(),
        lesson_id: Some("refraction-seismic-waves".into()),
        content: None,
        format: None,
    })
    .map_err(err)?;
    let view = app
        .create_plan(&PlanRequest {
            course_id: course.into(),
            dimension_answers: Some(answer_map()),
            start_date: Some(jan(1)),
            ..PlanRequest::default()
        })
        .map_err(err)?;
    let ask = AskRequest {
        plan_id: view.plan_id.clone(),
        query: refraction_question(),
    };

    let before = app.ask(&ask).map_err(err)?;
    ensure!(before.answer().is_none(), "answered before the lesson was reached");

    for s in &view.plan.sessions {
        app.complete_session(&ProgressRequest {
            plan_id: view.plan_id.clone(),
            session_id: s.id.clone(),
        })
        .map_err(err)?;
        if s.lesson_id.as_deref() == Some("refraction-seismic-waves") {
            break;
        }
    }
    let after = app.ask(&ask).map_err(err)?;
    let answer = after.answer().ok_or("not answered after completing the lesson")?;
    ensure!(answer.relevant_lesson == "Refraction of seismic waves", "relevant lesson {:?}", answer.relevant_lesson);
    ensure!(!answer.citations.is_empty(), "no citations");
    for c in &answer.citations {
        let doc = app
            .store()
            .transcript(course, &c.lesson_id)
            .map_err(|e| e.to_string())?
            .ok_or_else(|| format!("cited lesson {} has no stored transcript", c.lesson_id))?;
        ensure!(doc.contains_interval(c.start_seconds, c.end_seconds), "citation {c:?} outside the transcript");
    }
    ensure!(mock.call_count() == 1, "model called {} times", mock.call_count());
    Ok(format!("not_covered_yet before, {} resolvable citation(s) after", answer.citations.len()))
}

fn gateway_resilience() -> Outcome {
    let syllabus = cosmology();
    let profile = extract_profile_rules(&answer_map(), jan(1), &ExtractDefaults::default()).map_err(|e| e.to_string())?;
    let heavier = PacePolicy::new([1, 2, 3], [1, 1, 2], [1, 1, 1]).unwrap();
    let outline = serde_json::to_string(&deterministic_outline(&syllabus, &profile, &heavier)).unwrap();
    let schedule = sessions_as_response(&build_plan_with(&syllabus, &profile, &heavier));
    let config = PipelineConfig::default();
    let llm_err = |e: pacepath_core::llm::LlmError| e.to_string();

    // (a) two rejected outlines, then valid output from both stages.
    let mock = MockClient::new(["no json here".to_string(), "{\"units\": []}".to_string(), outline.clone(), schedule.clone()]);
    let repaired = generate_plan(&syllabus, &profile, &mock, &config).map_err(llm_err)?;
    ensure!(repaired.provenance == Provenance::Llm, "repair ended in {:?}", repaired.provenance);
    ensure!(mock.call_count() == 4, "{} calls", mock.call_count());
    ensure!(check_plan(&repaired.value, &syllabus, &profile).is_empty(), "repaired plan has violations");

    // (b) nothing usable: the deterministic planner takes over.
    let junk = MockClient::new(["```\nnot a plan\n```"]);
    let fallback = generate_plan(&syllabus, &profile, &junk, &config).map_err(llm_err)?;
    ensure!(fallback.provenance == Provenance::FallbackUsed, "expected fallback");
    let hard: Vec<_> = check_plan(&fallback.value, &syllabus, &profile);
    ensure!(hard.is_empty(), "fallback violations {hard:?}");

    // (c) same script, same bytes.
    let run = || {
        let m = MockClient::new([outline.clone(), schedule.clone()]);
        generate_plan(&syllabus, &profile, &m, &config).map(|o| o.value.to_json_pretty())
    };
    ensure!(run().map_err(llm_err)? == run().map_err(llm_err)?, "mock runs differ");
    Ok(format!("repair after 2 rejections, fallback after {} calls, reproducible bytes", junk.call_count()))
}

fn round_trips() -> Outcome {
    let mut runner = TestRunner::new(RunnerConfig {
        cases: 1000,
        failure_persistence: None,
        ..RunnerConfig::default()
    });
    runner
        .run(&arb_plan(), |(plan, syllabus)| {
            let events = plan_to_events(&plan, &syllabus).map_err(|e| TestCaseError::fail(e.to_string()))?;
            let back = events_to_plan(&events, PlanHeader::of(&plan)).map_err(|e| TestCaseError::fail(e.to_string()))?;
            let mut a = plan.sessions.clone();
            let mut b = back.sessions;
            a.sort_by(|x, y| x.id.cmp(&y.id));
            b.sort_by(|x, y| x.id.cmp(&y.id));
            if a != b {
                return Err(TestCaseError::fail("plan -> events -> plan changed the sessions"));
            }
            let want: BTreeSet<(String, String, String)> = events
                .iter()
                .filter(|e| e.editable)
                .map(|e| {
                    let f = |t: &chrono::NaiveDateTime| t.format("%Y%m%dT%H%M%S").to_string();
                    (e.event_id.clone(), f(&e.start), f(&e.end))
                })
                .collect();
            if reparse_ical(&export_ical(&events, "Plan")) != want {
                return Err(TestCaseError::fail("iCal re-parse differs"));
            }
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    let acked = kill_and_restart()?;
    Ok(format!("1000 plans round-trip, iCal re-parse matches, {acked} acknowledged writes survived SIGKILL"))
}

fn reparse_ical(ics: &str) -> BTreeSet<(String, String, String)> {
    let mut out = BTreeSet::new();
    for cal in ical::IcalParser::new(BufReader::new(ics.as_bytes())) {
        for event in cal.expect("valid iCalendar").events {
            let get = |name: &str| {
                event.properties.iter().find(|p| p.name == name).and_then(|p| p.value.clone()).unwrap_or_default()
            };
            out.insert((get("UID"), get("DTSTART"), get("DTEND")));
        }
    }
    out
}

struct Server {
    child: Child,
    base: String,
}

impl Server {
    fn start(config: &Path) -> Result<Self, String> {
        let mut child = Command::new(env!("CARGO_BIN_EXE_pacepath"))
            .args(["serve", "--config"])
            .arg(config)
            .env("PACEPATH_OFFLINE", "1")
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| format!("spawning server: {e}"))?;
        let mut line = String::new();
        BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).map_err(|e| e.to_string())?;
        let base = line
            .trim()
            .strip_prefix("listening on ")
            .ok_or_else(|| format!("unexpected server banner {line:?}"))?
            .to_string();
        Ok(Self { child, base })
    }

    fn kill(mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

#[derive(Clone, Debug)]
enum Ack {
    Revision { plan_id: String, plan: Value },
    Progress { plan_id: String, session_id: String },
}

fn agent() -> ureq::Agent {
    ureq::Agent::config_builder()
        .http_status_as_error(false)
        .timeout_global(Some(Duration::from_secs(10)))
        .build()
        .into()
}

/// Creates, edits and progresses plans until the process dies, recording
/// every 2xx response.
fn write_until_killed(base: String, acks: Arc<Mutex<Vec<Ack>>>) {
    let agent = agent();
    let profile = serde_json::from_str::<Value>(&read_core_fixture("golden/cosmology-evening.plan.json")).unwrap()["profile"].clone();
    let send = |method: &str, path: &str, body: Value| -> Option<(u16, Value)> {
        let url = format!("{base}{path}");
        let resp = match method {
            "POST" => agent.post(&url).send_json(&body),
            _ => agent.patch(&url).send_json(&body),
        };
        let mut resp = resp.ok()?;
        let status = resp.status().as_u16();
        let value: Value = resp.body_mut().read_json().ok()?;
        Some((status, value))
    };
    loop {
        let Some((201, view)) = send("POST", "/plans", json!({ "course_id": "cosmology-astronomy", "profile": profile })) else {
            return;
        };
        let plan_id = view["plan_id"].as_str().unwrap().to_string();
        acks.lock().unwrap().push(Ack::Revision { plan_id: plan_id.clone(), plan: view["plan"].clone() });

        let event = view["events"].as_array().unwrap().iter().find(|e| e["start"] == "2025-01-02T18:50:00").unwrap();
        let edit = json!({ "edits": [{ "op": "move", "event_id": event["event_id"], "new_start": "2025-01-02T19:10:00" }] });
        let Some((200, moved)) = send("PATCH", &format!("/plans/{plan_id}/events"), edit) else { return };
        acks.lock().unwrap().push(Ack::Revision { plan_id: plan_id.clone(), plan: moved["plan"].clone() });

        let Some((200, _)) = send("POST", "/progress", json!({ "plan_id": plan_id, "session_id": "s0001" })) else {
            return;
        };
        acks.lock().unwrap().push(Ack::Progress { plan_id, session_id: "s0001".into() });
    }
}

fn kill_and_restart() -> Result<usize, String> {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("pacepath.toml");
    std::fs::write(
        &config,
        format!(
            "data_dir = {:?}\ncatalog_dir = {:?}\ntranscripts_dir = {:?}\nbind = \"127.0.0.1:0\"\noffline = true\n",
            dir.path().join("data"),
            core_fixture("catalog"),
            core_fixture("transcripts"),
        ),
    )
    .unwrap();

    let server = Server::start(&config)?;
    let acks = Arc::new(Mutex::new(Vec::new()));
    let writers: Vec<_> = (0..4)
        .map(|_| {
            let (base, acks) = (server.base.clone(), acks.clone());
            std::thread::spawn(move || write_until_killed(base, acks))
        })
        .collect();
    let deadline = Instant::now() + Duration::from_secs(20);
    while acks.lock().unwrap().len() < 60 && Instant::now() < deadline {
        std::thread::sleep(Duration::from_millis(5));
    }
    server.kill();
    for w in writers {
        let _ = w.join();
    }
    let acks = acks.lock().unwrap().clone();
    ensure!(acks.len() >= 60, "only {} writes acknowledged before the deadline", acks.len());

    let server = Server::start(&config)?;
    let agent = agent();
    let fetch = |path: String| -> Result<Value, String> {
        let mut resp = agent.get(format!("{}{path}", server.base)).call().map_err(|e| e.to_string())?;
        ensure!(resp.status() == 200, "GET {path}: {}", resp.status());
        resp.body_mut().read_json().map_err(|e| e.to_string())
    };
    let check = || -> Result<(), String> {
        for ack in &acks {
            match ack {
                Ack::Revision { plan_id, plan } => {
                    let rev = plan["revision"].as_u64().unwrap();
                    let latest = fetch(format!("/plans/{plan_id}"))?;
                    ensure!(latest["revision"].as_u64().unwrap() >= rev, "plan {plan_id} lost revision {rev}");
                    if latest["revision"].as_u64() == Some(rev) {
                        ensure!(&latest["plan"] == plan, "plan {plan_id} revision {rev} changed");
                    }
                }
                Ack::Progress { plan_id, session_id } => {
                    let state = fetch(format!("/plans/{plan_id}/progress"))?;
                    let done = state["learner_state"]["completed_session_ids"].as_array().cloned().unwrap_or_default();
                    ensure!(done.iter().any(|s| s == session_id.as_str()), "plan {plan_id} lost progress");
                }
            }
        }
        Ok(())
    };
    let result = check();
    server.kill();
    result.map(|()| acks.len())
}

fn main() -> ExitCode {
    egress::deny();
    // Keep expected panics inside a criterion from cluttering the report.
    std::panic::set_hook(Box::new(|info| eprintln!("  panic: {info}")));

    let criteria: [Criterion; 7] = [
        ("golden plan fixture", golden_plan_fixture),
        ("unit pacing", unit_pacing),
        ("planner property suite", planner_properties),
        ("retrieval oracle", retrieval_oracle),
        ("tutor structural contract", tutor_contract),
        ("gateway resilience", gateway_resilience),
        ("round-trips and durability", round_trips),
    ];
    let mut passed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => {
                passed += 1;
                println!("PASS criterion {}: {name}: {detail}", i + 1);
            }
            Err(why) => println!("FAIL criterion {}: {name}: {why}", i + 1),
        }
    }
    let blocked = egress::blocked_attempts();
    let offline_ok = passed == criteria.len() && blocked == 0;
    println!(
        "{} criterion 8: offline completeness: criteria 1-7 {} with egress disabled, {blocked} outbound attempts",
        if offline_ok { "PASS" } else { "FAIL" },
        if passed == criteria.len() { "passed" } else { "did not all pass" },
    );
    if offline_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
