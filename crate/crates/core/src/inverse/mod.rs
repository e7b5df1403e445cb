//! Inverse recovery: candidate enumeration, the feasibility, bound-tightening
//! and bounded-slack problems, and the studies built on them.

pub mod model;
pub mod realform;
mod solve;
mod study;
mod sweep;
mod validate;

pub use model::{
    build_model, Component, FreeVariable, InverseModel, Mode, ModelOptions, ModelVariable, Objective, Point,
    Residual, SequenceReference, Variable, VariableRole,
};
pub use solve::{halton, solve, solve_from, start_points, Run, Solution, SolveStatus, SolverOptions, DEFAULT_SEED};
pub use study::{
    candidates, feasibility, recover, slack_analysis, slack_analysis_from, slack_profile, tighten_bounds,
    zdiff, BoundEntry, BoundReport, CandidateFilter, FeasibilityResult, SlackResult, StudyOptions,
};
pub use sweep::{
    mismatch_sweep, standard_mismatch_matrix, ForwardPoint, Grid, MismatchCell, MismatchMatrix, SweepRecord,
    SweepReport, SweepSpec, SweepSummary,
};
pub use validate::{
    fabricated_zero_sequence, standard_mismatch, validate_and_recover, StandardMatch, ValidatedRecovery,
    ValidationFlags, ELIMINATION_ZDIFF, UNEXPLAINED_ZDIFF,
};
