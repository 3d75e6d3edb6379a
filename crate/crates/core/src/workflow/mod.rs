//! Users and roles, overlap-aware task assignment, the submission lifecycle,
//! batch quality gates and progress statistics.

mod assign;
mod progress;
mod review;
mod task;
mod users;

pub use assign::{assign_with_overlap, Assignment, OverlapEntry, QcPolicy};
pub use progress::{
    progress_report, ProgressScope, ProgressStats, WorkSession, IDLE_CUTOFF_MINUTES,
};
pub use review::{
    batch_disagreements, decide_outcome, overlap_units, review_batch, Batch, QcDecision, QcOutcome,
};
pub use task::{
    submit_task, task_payload, unit_payload, SubmitMode, TagMenus, Task, TaskPayload, TaskStatus,
    TokenPayload, Transition, UnitPayload, UnitWork,
};
pub use users::{Directory, Role, User};
