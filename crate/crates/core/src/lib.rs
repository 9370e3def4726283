//! Core of the pacepath personalized-learning service: course catalog,
//! schedule planner, calendar conversion, transcript retrieval, tutor
//! answers and the LLM pipeline that wraps the deterministic planner.

pub mod calendar;
pub mod catalog;
pub mod egress;
pub mod exec;
pub mod llm;
pub mod model;
pub mod planner;
pub mod schemas;
pub mod text;
pub mod transcripts;
pub mod tutor;

pub use exec::Execution;
