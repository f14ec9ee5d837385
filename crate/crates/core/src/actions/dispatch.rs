use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    AgentId, Artifact, DecomposeOutcome, DecompositionTemplate, EndRequest, ModelError, Task,
    TaskDraft, TaskId, TaskStatus, Termination, TerminationReason, WorkflowState, MANAGER_ID,
    STAKEHOLDER_ID,
};

use super::observation::WorkerSummary;
use super::{ManagerAction, StakeholderAction, WorkerAction};

const PREVIEW_CHARS: usize = 48;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ActionError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("manager action budget exhausted")]
    BudgetExhausted,
    #[error("episode has terminated")]
    Terminated,
    #[error("an end request is already pending")]
    EndRequestPending,
    #[error("no end request is pending")]
    NoEndRequest,
    #[error("task `{task}` is not held by worker `{worker}`")]
    NotOwner { task: TaskId, worker: AgentId },
    #[error("worker `{worker}` can work on at most {capacity} tasks per timestep")]
    OverCapacity { worker: AgentId, capacity: u32 },
    #[error("message {0} is not visible to the stakeholder")]
    NotAddressed(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PendingPreview {
    pub id: TaskId,
    pub name: String,
    pub ready: bool,
}

/// Immediate payload of a manager action.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ActionResult {
    Ack,
    Status {
        histogram: BTreeMap<TaskStatus, usize>,
        ready_count: usize,
        available_agents: Vec<AgentId>,
    },
    Agents {
        agents: Vec<WorkerSummary>,
    },
    PendingTasks {
        tasks: Vec<PendingPreview>,
    },
    TaskDetail {
        task: Box<Task>,
        artifacts: Vec<Artifact>,
    },
    Created {
        task_id: TaskId,
    },
    Removed {
        task_ids: Vec<TaskId>,
    },
    Assigned {
        agent_id: AgentId,
        task_ids: Vec<TaskId>,
    },
    Decomposed {
        subtask_ids: Vec<TaskId>,
    },
    /// The task was already decomposed; nothing changed.
    AlreadyDecomposed,
    MessageSent {
        message_id: usize,
    },
    Rejected {
        error: String,
    },
}

fn manager() -> AgentId {
    AgentId::new(MANAGER_ID)
}

fn stakeholder() -> AgentId {
    AgentId::new(STAKEHOLDER_ID)
}

/// Apply one manager action. Budget accounting is the caller's job; this
/// only refuses when the budget is already spent. On error the state is
/// left untouched.
pub fn apply_manager_action(
    state: &mut WorkflowState,
    action: &ManagerAction,
) -> Result<ActionResult, ActionError> {
    if state.is_terminated() {
        return Err(ActionError::Terminated);
    }
    if state.remaining_actions() == 0 {
        return Err(ActionError::BudgetExhausted);
    }
    let result = match action {
        ManagerAction::AssignTask { task_id, agent_id } => {
            state.assign_task(task_id, agent_id)?;
            ActionResult::Assigned {
                agent_id: agent_id.clone(),
                task_ids: vec![task_id.clone()],
            }
        }
        ManagerAction::AssignAllPendingTasks { agent_id } => {
            let (agent_id, task_ids) = state.assign_all_pending(agent_id.as_ref())?;
            ActionResult::Assigned { agent_id, task_ids }
        }
        ManagerAction::CreateTask {
            name,
            description,
            est_hrs,
            est_cost,
        } => {
            let mut draft = TaskDraft::new(name.clone(), *est_hrs, *est_cost);
            draft.description = description.clone();
            let task_id = state.add_task(draft)?;
            ActionResult::Created { task_id }
        }
        ManagerAction::RemoveTask { task_id } => ActionResult::Removed {
            task_ids: state.remove_task(task_id)?,
        },
        ManagerAction::SendMessage { content, receiver_id } => {
            let message_id = state.post_message(manager(), receiver_id.clone(), content.clone(), None, None)?;
            ActionResult::MessageSent { message_id }
        }
        ManagerAction::Noop {} | ManagerAction::FailedAction { .. } => ActionResult::Ack,
        ManagerAction::GetWorkflowStatus {} => ActionResult::Status {
            histogram: state.graph.status_histogram(),
            ready_count: state.ready_set().len(),
            available_agents: state
                .active_workers()
                .filter(|w| w.has_capacity())
                .map(|w| w.id.clone())
                .collect(),
        },
        ManagerAction::GetAvailableAgents {} => ActionResult::Agents {
            agents: state
                .active_workers()
                .filter_map(|w| WorkerSummary::of(state, &w.id))
                .collect(),
        },
        ManagerAction::GetPendingTasks {} => {
            let ready = state.ready_set();
            ActionResult::PendingTasks {
                tasks: state
                    .graph
                    .tasks()
                    .filter(|t| t.status.is_open() && !t.is_composite())
                    .map(|t| PendingPreview {
                        id: t.id.clone(),
                        name: t.name.chars().take(PREVIEW_CHARS).collect(),
                        ready: ready.contains(&t.id),
                    })
                    .collect(),
            }
        }
        ManagerAction::RefineTask {
            task_id,
            new_task_instructions,
            new_est_hrs,
            new_est_cost,
        } => {
            state.refine_task(task_id, new_task_instructions, *new_est_hrs, *new_est_cost)?;
            ActionResult::Ack
        }
        ManagerAction::AddTaskDependency { prereq_id, dep_id } => {
            state.add_dependency(prereq_id, dep_id)?;
            ActionResult::Ack
        }
        ManagerAction::RemoveTaskDependency { prereq_id, dep_id } => {
            state.remove_dependency(prereq_id, dep_id)?;
            ActionResult::Ack
        }
        ManagerAction::InspectTask { task_id } => {
            let task = state.task(task_id)?.clone();
            let artifacts = state.artifacts_for(task_id).cloned().collect();
            ActionResult::TaskDetail {
                task: Box::new(task),
                artifacts,
            }
        }
        ManagerAction::DecomposeTask { task_id } => {
            let template = match state.templates.get(task_id) {
                Some(t) => t.clone(),
                None => DecompositionTemplate::generic(state.task(task_id)?),
            };
            match state.decompose_task(task_id, &template)? {
                DecomposeOutcome::Created(subtask_ids) => ActionResult::Decomposed { subtask_ids },
                DecomposeOutcome::Skipped => ActionResult::AlreadyDecomposed,
            }
        }
        ManagerAction::RequestEndWorkflow { reason } => {
            if state.pending_end_request.is_some() {
                return Err(ActionError::EndRequestPending);
            }
            let content = match reason {
                Some(r) => format!("Requesting to end the workflow: {r}"),
                None => "Requesting to end the workflow.".to_string(),
            };
            let message_id = state.post_message(manager(), Some(stakeholder()), content, None, None)?;
            state.pending_end_request = Some(EndRequest {
                timestep: state.timestep,
                reason: reason.clone(),
            });
            ActionResult::MessageSent { message_id }
        }
    };
    Ok(result)
}

/// Apply a stakeholder action. Approving a pending end request terminates
/// the episode.
pub fn apply_stakeholder_action(
    state: &mut WorkflowState,
    action: &StakeholderAction,
) -> Result<(), ActionError> {
    if state.is_terminated() {
        return Err(ActionError::Terminated);
    }
    match action {
        StakeholderAction::SendMessage { content, receiver_id } => {
            let receiver = receiver_id.clone().or_else(|| Some(manager()));
            state.post_message(stakeholder(), receiver, content.clone(), None, None)?;
        }
        StakeholderAction::UpdatePreferences { preferences } => {
            state.set_preferences(preferences.clone());
        }
        StakeholderAction::AnswerQuestion { message_id, content } => {
            let question = state
                .comms
                .get(*message_id)
                .ok_or(ModelError::UnknownMessage(*message_id))?;
            if !question.is_visible_to(&stakeholder()) || question.sender == stakeholder() {
                return Err(ActionError::NotAddressed(*message_id));
            }
            let to = question.sender.clone();
            let related = question.related_task_id.clone();
            state.post_message(stakeholder(), Some(to), content.clone(), related, Some(*message_id))?;
        }
        StakeholderAction::ApproveEnd { approve } => {
            let request = state.pending_end_request.take().ok_or(ActionError::NoEndRequest)?;
            if *approve {
                state.terminated = Some(Termination {
                    reason: TerminationReason::EndRequestApproved,
                    timestep: state.timestep,
                    detail: request.reason,
                });
            }
        }
        StakeholderAction::Noop {} => {}
    }
    Ok(())
}

/// Validate a worker's action and return the tasks it will work on this
/// timestep (empty unless the action is `Work`).
pub fn apply_worker_action(
    state: &mut WorkflowState,
    worker_id: &AgentId,
    action: &WorkerAction,
) -> Result<Vec<TaskId>, ActionError> {
    if state.is_terminated() {
        return Err(ActionError::Terminated);
    }
    let worker = state.worker(worker_id)?;
    if !worker.active {
        return Err(ModelError::WorkerInactive(worker_id.clone()).into());
    }
    match action {
        WorkerAction::Work { task_ids } => {
            if task_ids.len() > worker.capacity as usize {
                return Err(ActionError::OverCapacity {
                    worker: worker_id.clone(),
                    capacity: worker.capacity,
                });
            }
            let ready = state.ready_set();
            for t in task_ids {
                let task = state.task(t)?;
                let workable = task.status == TaskStatus::Running || ready.contains(t);
                if task.owner.as_ref() != Some(worker_id) || !workable {
                    return Err(ActionError::NotOwner {
                        task: t.clone(),
                        worker: worker_id.clone(),
                    });
                }
            }
            let mut unique = task_ids.clone();
            unique.sort();
            unique.dedup();
            Ok(unique)
        }
        WorkerAction::SendMessage { content, receiver_id } => {
            state.post_message(worker_id.clone(), receiver_id.clone(), content.clone(), None, None)?;
            Ok(Vec::new())
        }
        WorkerAction::Noop {} => Ok(Vec::new()),
    }
}
