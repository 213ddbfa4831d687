//! Compiles 3-SAT formulas into abstract racing tracks whose completability
//! matches satisfiability, and decides and verifies track completion.
//!
//! Pipeline: [`cnf::parse_dimacs`] → [`cnf::normalize_to_3cnf`] →
//! [`compile::compile`] → optionally [`layout::layout_comb`]. The
//! [`engine`] verifies certificates and searches for them.

pub mod cnf;
pub mod compile;
pub mod corpus;
pub mod engine;
pub mod gadgets;
pub mod layout;
pub mod render;
pub mod track;

pub use cnf::{Assignment, Clause, CnfError, Formula, Literal, Polarity, RawFormula};
pub use compile::{assignment_to_certificate, compile, extract_assignment, CompileError, ReductionMeta};
pub use engine::{
    equivalence_check, solve, verify, CompletionReport, EquivalenceLimits, EquivalenceReport,
    SolveLimits,
};
pub use layout::{crossing_count, layout_comb, Block, BlockType, LayoutError, Orientation};
pub use track::{
    Action, Certificate, CheckpointId, LinkId, PadId, Position, RespawnPolicy, State, Track,
};
