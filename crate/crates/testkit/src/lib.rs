//! Test support: random instance generators, a brute-force plan checker
//! that shares no code with the planner, and planted-marker corpora.

pub mod corpus;
pub mod gen;
pub mod oracle;
