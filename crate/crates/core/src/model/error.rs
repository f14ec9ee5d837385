use thiserror::Error;

use super::{AgentId, TaskId, TaskStatus};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("unknown task `{0}`")]
    UnknownTask(TaskId),
    #[error("unknown worker `{0}`")]
    UnknownWorker(AgentId),
    #[error("unknown agent `{0}`")]
    UnknownAgent(AgentId),
    #[error("task id `{0}` already exists")]
    DuplicateTask(TaskId),
    #[error("invalid task draft: {0}")]
    InvalidDraft(String),
    #[error("task `{0}` is running and cannot be removed")]
    TaskRunning(TaskId),
    #[error("task `{0}` has been removed")]
    TaskRemoved(TaskId),
    #[error("task `{0}` cannot depend on itself")]
    SelfDependency(TaskId),
    #[error("dependency would create a cycle: {}", format_path(.path))]
    Cycle { path: Vec<TaskId> },
    #[error("no dependency edge `{prereq}` -> `{dependent}`")]
    MissingEdge { prereq: TaskId, dependent: TaskId },
    #[error("task `{0}` already started; prerequisites can no longer be added")]
    DependentStarted(TaskId),
    #[error("decomposition template for `{0}` is empty")]
    EmptyTemplate(TaskId),
    #[error("decomposition template for `{task}` is invalid: {reason}")]
    InvalidTemplate { task: TaskId, reason: String },
    #[error("task `{0}` is completed")]
    TaskCompleted(TaskId),
    #[error("task `{task}` is {status:?}; expected {expected}")]
    WrongStatus {
        task: TaskId,
        status: TaskStatus,
        expected: &'static str,
    },
    #[error("task `{0}` is a composite and cannot be assigned")]
    CompositeTask(TaskId),
    #[error("worker `{0}` is not active")]
    WorkerInactive(AgentId),
    #[error("worker `{0}` has no free capacity")]
    WorkerAtCapacity(AgentId),
    #[error("no active workers")]
    NoActiveWorkers,
    #[error("invalid preferences: {0}")]
    InvalidPreferences(String),
    #[error("invalid deliverable: {0}")]
    InvalidDeliverable(String),
    #[error("invalid worker `{worker}`: {reason}")]
    InvalidWorker { worker: AgentId, reason: String },
    #[error("invalid constraint `{id}`: {reason}")]
    InvalidConstraint { id: String, reason: String },
    #[error("message refers to unknown message id {0}")]
    UnknownMessage(usize),
    #[error("the workflow has terminated")]
    Terminated,
}

fn format_path(path: &[TaskId]) -> String {
    path.iter()
        .map(TaskId::as_str)
        .collect::<Vec<_>>()
        .join(" -> ")
}
