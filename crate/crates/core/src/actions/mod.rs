//! Action spaces for each role, observations, and the dispatcher that
//! applies actions to a [`WorkflowState`](crate::model::WorkflowState).

mod agents;
mod dispatch;
mod manager;
mod observation;

pub use agents::{StakeholderAction, WorkerAction};
pub use dispatch::{
    apply_manager_action, apply_stakeholder_action, apply_worker_action, ActionError,
    ActionResult, PendingPreview,
};
pub use manager::{ActionKind, DecodeError, ManagerAction};
pub use observation::{
    observe, observe_manager, observe_stakeholder, observe_worker, ArtifactMeta, AssignedTask,
    ManagerObservation, MessageView, Observation, StakeholderObservation, TaskSummary,
    WorkerObservation, WorkerSummary,
};

/// Manager actions left in the episode budget.
pub fn action_budget_check(state: &crate::model::WorkflowState) -> u32 {
    state.remaining_actions()
}
