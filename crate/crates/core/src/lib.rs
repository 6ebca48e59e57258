//! Exact instance-level robustness of leaderboard aggregation rules.
//!
//! A leaderboard is an `n x m` matrix of scores in `[0, 1]` (models by
//! tasks). A developer may train a target model on a subset of tasks, which
//! raises only that model's scores on those tasks. This crate computes the
//! minimum number of tasks needed to make the target a top element under
//! four aggregation rules (arithmetic mean, upper median, mean win rate and
//! pairwise majority), along with:
//!
//! * an exact branch-and-bound solver for the binary covering programs that
//!   arise for mean win rate and pairwise majority,
//! * the all-or-nothing shift-bribery view of the same problem under Borda,
//! * brute-force oracles used to cross-check every closed form,
//! * the summary statistics used to compare rules across many targets,
//! * ingestion of long/wide CSV and JSON score files.

pub mod aggregation;
pub mod bribery;
pub mod covering;
pub mod error;
pub mod ingest;
pub mod matrix;
pub mod random;
pub mod robustness;
pub mod stats;

pub use aggregation::{Leaderboard, MajorityMatrix, Rule};
pub use covering::{BranchAndBound, CoveringProgram};
pub use error::{Error, Result};
pub use matrix::{apply_training, default_caps, GainCaps, ScoreMatrix, TieBreakPolicy, TrainingScenario};
pub use robustness::{Robustness, RobustnessResult};
