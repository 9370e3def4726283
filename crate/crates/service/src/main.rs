use std::collections::BTreeMap;
use std::io::{IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use pacepath_core::transcripts::TranscriptFormat;
use pacepath_service::app::{
    AskRequest, EditRequest, PlanRequest, ProgressRequest, RecommendRequest, TranscriptRequest,
};
use pacepath_service::{ApiError, App, Config};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "pacepath", version, about = "Personalized study plans with progress-aware Q&A")]
struct Cli {
    /// TOML configuration file. Defaults to ./pacepath.toml when present.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP API.
    Serve {
        /// Overrides the configured bind address.
        #[arg(long)]
        bind: Option<String>,
    },
    #[command(subcommand)]
    Courses(CoursesCmd),
    #[command(subcommand)]
    Plan(PlanCmd),
    /// Show learner progress, or mark a session complete.
    Progress {
        plan_id: String,
        #[arg(long)]
        complete: Option<String>,
    },
    #[command(subcommand)]
    Tutor(TutorCmd),
    /// Store caption files and rebuild a course's search index.
    Ingest(IngestArgs),
}

#[derive(Subcommand)]
enum CoursesCmd {
    /// Rank courses against a free-text goal.
    Recommend {
        goal: String,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long)]
        rerank: bool,
    },
    Topics,
    Syllabus { course_id: String },
}

#[derive(Subcommand)]
enum PlanCmd {
    Generate(GenerateArgs),
    Show { plan_id: String },
    /// Apply a JSON array of calendar edits.
    Edit {
        plan_id: String,
        #[arg(long)]
        edits: PathBuf,
        #[arg(long)]
        base_revision: Option<u32>,
    },
    /// Write the plan as iCalendar text.
    Ical {
        plan_id: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    course: String,
    /// JSON object of free-text answers keyed by dimension.
    #[arg(long, conflicts_with = "profile", required_unless_present = "profile")]
    answers: Option<PathBuf>,
    /// A complete profile document.
    #[arg(long)]
    profile: Option<PathBuf>,
    #[arg(long)]
    start_date: Option<NaiveDate>,
    #[arg(long)]
    use_llm: bool,
}

#[derive(Subcommand)]
enum TutorCmd {
    Ask { plan_id: String, query: String },
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    course: String,
    /// Limit ingestion to one lesson.
    #[arg(long)]
    lesson: Option<String>,
    /// Local caption file for `--lesson` instead of the configured source.
    #[arg(long, requires = "lesson")]
    file: Option<PathBuf>,
    #[arg(long, value_parser = parse_format)]
    format: Option<TranscriptFormat>,
}

fn parse_format(s: &str) -> Result<TranscriptFormat, String> {
    TranscriptFormat::from_extension(match s {
        "webvtt" => "vtt",
        other => other,
    })
    .ok_or_else(|| format!("unknown format {s:?}; expected vtt, srt or json"))
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Api(#[from] ApiError),
    #[error("{0}")]
    Other(String),
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Other(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Other(format!("{}: {e}", path.display())))
}

fn print<T: Serialize>(value: &T) {
    emit(&format!("{}\n", serde_json::to_string_pretty(value).expect("response serializes")));
}

/// Writes to stdout, staying quiet when the reader has gone away.
fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|()| out.flush());
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config_path = cli.config.or_else(|| Some(PathBuf::from("pacepath.toml")).filter(|p| p.is_file()));
    let mut config = Config::load(config_path.as_deref()).map_err(|e| CliError::Other(e.to_string()))?;
    if let Command::Serve { bind: Some(bind) } = &cli.command {
        config.bind = bind.clone();
    }
    if config.offline {
        pacepath_core::egress::deny();
    }
    let app = App::from_config(config).map_err(|e| CliError::Other(e.to_string()))?;

    match cli.command {
        Command::Serve { .. } => {
            let bind = app.config().bind.clone();
            let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Other(e.to_string()))?;
            runtime
                .block_on(pacepath_service::http::serve(Arc::new(app), &bind, |addr| {
                    println!("listening on http://{addr}");
                }))
                .map_err(|e| CliError::Other(format!("serving on {bind}: {e}")))?;
        }
        Command::Courses(CoursesCmd::Recommend { goal, k, rerank }) => print(&app.recommend(&RecommendRequest {
            goal_text: goal,
            k,
            rerank,
        })?),
        Command::Courses(CoursesCmd::Topics) => print(&app.topics()),
        Command::Courses(CoursesCmd::Syllabus { course_id }) => print(&app.syllabus(&course_id)?),
        Command::Plan(PlanCmd::Generate(args)) => {
            let req = PlanRequest {
                course_id: args.course,
                dimension_answers: args.answers.as_deref().map(read_json::<BTreeMap<String, String>>).transpose()?,
                profile: args.profile.as_deref().map(read_json).transpose()?,
                start_date: args.start_date,
                use_llm: args.use_llm,
            };
            print(&app.create_plan(&req)?);
        }
        Command::Plan(PlanCmd::Show { plan_id }) => print(&app.get_plan(&plan_id)?),
        Command::Plan(PlanCmd::Edit {
            plan_id,
            edits,
            base_revision,
        }) => {
            let req = EditRequest {
                edits: read_json(&edits)?,
                base_revision,
            };
            print(&app.edit_plan(&plan_id, &req)?);
        }
        Command::Plan(PlanCmd::Ical { plan_id, output }) => {
            let text = app.ical(&plan_id)?;
            match output {
                Some(path) => std::fs::write(&path, text).map_err(|e| CliError::Other(format!("{}: {e}", path.display())))?,
                None => emit(&text),
            }
        }
        Command::Progress { plan_id, complete } => match complete {
            Some(session_id) => print(&app.complete_session(&ProgressRequest { plan_id, session_id })?),
            None => print(&app.progress(&plan_id)?),
        },
        Command::Tutor(TutorCmd::Ask { plan_id, query }) => print(&app.ask(&AskRequest { plan_id, query })?),
        Command::Ingest(args) => {
            let content = args
                .file
                .as_deref()
                .map(|p| std::fs::read_to_string(p).map_err(|e| CliError::Other(format!("{}: {e}", p.display()))))
                .transpose()?;
            let format = args.format.or_else(|| {
                let ext = args.file.as_deref()?.extension()?.to_str()?;
                TranscriptFormat::from_extension(ext)
            });
            print(&app.ingest(&TranscriptRequest {
                course_id: args.course,
                lesson_id: args.lesson,
                content,
                format,
            })?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_env("PACEPATH_LOG").unwrap_or_else(|_| "pacepath_service=info,warn".into()),
        )
        .with_writer(std::io::stderr)
        .with_ansi(std::io::stderr().is_terminal())
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Api(e)) => {
            eprintln!("{}", serde_json::to_string_pretty(&e.body()).expect("error serializes"));
            ExitCode::from(1)
        }
        Err(CliError::Other(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
