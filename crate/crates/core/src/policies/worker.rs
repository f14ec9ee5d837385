use crate::actions::{WorkerAction, WorkerObservation};
use crate::engine::Decision;
use crate::model::{TaskId, TaskStatus};

/// Works on owned tasks that can progress: running ones first, then ready
/// ones by id, up to capacity.
pub fn scripted_worker(obs: &WorkerObservation) -> Decision<WorkerAction> {
    if !obs.active {
        return Decision::bare(WorkerAction::Noop {});
    }
    let mut running: Vec<TaskId> = Vec::new();
    let mut ready: Vec<TaskId> = Vec::new();
    for a in &obs.tasks {
        match a.task.status {
            TaskStatus::Running => running.push(a.task.id.clone()),
            TaskStatus::Ready => ready.push(a.task.id.clone()),
            _ => {}
        }
    }
    running.sort();
    ready.sort();
    let picked: Vec<TaskId> = running
        .into_iter()
        .chain(ready)
        .take(obs.capacity as usize)
        .collect();
    if picked.is_empty() {
        return Decision::bare(WorkerAction::Noop {});
    }
    let why = format!("work on {}", picked.iter().map(TaskId::as_str).collect::<Vec<_>>().join(", "));
    Decision::new(WorkerAction::Work { task_ids: picked }, why)
}
