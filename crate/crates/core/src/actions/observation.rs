//! Role-scoped views of the workflow state.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{
    AgentId, Artifact, ArtifactId, ArtifactKind, DeliverableTier, Edge, EndRequest, Message,
    ModelError, PreferenceVector, Task, TaskId, TaskStatus, WorkerKind, WorkflowState, MANAGER_ID,
    STAKEHOLDER_ID,
};

use super::ActionResult;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskSummary {
    pub id: TaskId,
    pub name: String,
    pub status: TaskStatus,
    pub owner: Option<AgentId>,
    pub estimated_hours: f64,
    pub estimated_cost: f64,
    pub progress: f64,
    pub required_skills: Vec<String>,
    pub deliverable_tier: Option<DeliverableTier>,
    pub deliverable_points: Option<f64>,
    pub parent_id: Option<TaskId>,
    pub subtask_ids: Vec<TaskId>,
    pub has_template: bool,
}

impl TaskSummary {
    fn of(task: &Task, state: &WorkflowState) -> Self {
        Self {
            id: task.id.clone(),
            name: task.name.clone(),
            status: task.status,
            owner: task.owner.clone(),
            estimated_hours: task.estimated_hours,
            estimated_cost: task.estimated_cost,
            progress: task.progress,
            required_skills: task.required_skills.clone(),
            deliverable_tier: task.deliverable.as_ref().map(|d| d.tier),
            deliverable_points: task.deliverable.as_ref().map(|d| d.points),
            parent_id: task.parent_id.clone(),
            subtask_ids: task.subtask_ids.clone(),
            has_template: state.templates.contains_key(&task.id),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkerSummary {
    pub id: AgentId,
    pub name: String,
    pub kind: WorkerKind,
    pub active: bool,
    /// Active with spare capacity.
    pub idle: bool,
    pub capacity: u32,
    pub capabilities: BTreeMap<String, f64>,
    pub cost_rate: f64,
    pub assigned_task_ids: Vec<TaskId>,
}

impl WorkerSummary {
    pub(crate) fn of(state: &WorkflowState, id: &AgentId) -> Option<Self> {
        let w = state.workers.get(id)?;
        Some(Self {
            id: w.id.clone(),
            name: w.name.clone(),
            kind: w.kind,
            active: w.active,
            idle: w.active && w.has_capacity(),
            capacity: w.capacity,
            capabilities: w.capabilities.clone(),
            cost_rate: w.cost_rate,
            assigned_task_ids: w.assigned_task_ids.iter().cloned().collect(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MessageView {
    pub id: usize,
    #[serde(flatten)]
    pub message: Message,
}

/// Artifact metadata as the manager sees it: no content, no quality.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArtifactMeta {
    pub id: ArtifactId,
    pub producing_task_id: TaskId,
    pub producer: AgentId,
    pub kind: ArtifactKind,
    pub created_timestep: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManagerObservation {
    pub timestep: u64,
    pub remaining_actions: u32,
    pub tasks: Vec<TaskSummary>,
    pub edges: Vec<Edge>,
    pub ready: Vec<TaskId>,
    pub workers: Vec<WorkerSummary>,
    pub messages: Vec<MessageView>,
    pub artifacts: Vec<ArtifactMeta>,
    pub end_request_pending: bool,
    /// Payload returned by the manager's previous action, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub last_result: Option<ActionResult>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssignedTask {
    pub task: Task,
    pub prerequisite_artifacts: Vec<Artifact>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkerObservation {
    pub worker_id: AgentId,
    pub timestep: u64,
    pub active: bool,
    pub capacity: u32,
    pub join_timestep: u64,
    pub leave_timestep: Option<u64>,
    pub tasks: Vec<AssignedTask>,
    pub messages: Vec<MessageView>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StakeholderObservation {
    pub timestep: u64,
    pub preferences: PreferenceVector,
    pub completed_point_fraction: f64,
    pub status_histogram: BTreeMap<TaskStatus, usize>,
    pub messages: Vec<MessageView>,
    pub pending_end_request: Option<EndRequest>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "role", rename_all = "snake_case")]
pub enum Observation {
    Manager(ManagerObservation),
    Worker(WorkerObservation),
    Stakeholder(StakeholderObservation),
}

fn visible_messages(state: &WorkflowState, agent: &AgentId) -> Vec<MessageView> {
    state
        .comms
        .iter()
        .enumerate()
        .filter(|(_, m)| m.is_visible_to(agent))
        .map(|(id, m)| MessageView {
            id,
            message: m.clone(),
        })
        .collect()
}

pub fn observe_manager(state: &WorkflowState) -> ManagerObservation {
    let manager = AgentId::new(MANAGER_ID);
    ManagerObservation {
        timestep: state.timestep,
        remaining_actions: state.remaining_actions(),
        tasks: state.graph.tasks().map(|t| TaskSummary::of(t, state)).collect(),
        edges: state.graph.edges().cloned().collect(),
        ready: state.ready_set().into_iter().collect(),
        workers: state
            .workers
            .keys()
            .filter_map(|id| WorkerSummary::of(state, id))
            .collect(),
        messages: visible_messages(state, &manager),
        artifacts: state
            .artifacts
            .values()
            .map(|a| ArtifactMeta {
                id: a.id.clone(),
                producing_task_id: a.producing_task_id.clone(),
                producer: a.producer.clone(),
                kind: a.kind,
                created_timestep: a.created_timestep,
            })
            .collect(),
        end_request_pending: state.pending_end_request.is_some(),
        last_result: None,
    }
}

pub fn observe_worker(state: &WorkflowState, id: &AgentId) -> Result<WorkerObservation, ModelError> {
    let worker = state.worker(id)?;
    let tasks = worker
        .assigned_task_ids
        .iter()
        .filter_map(|t| state.graph.task(t))
        .map(|task| AssignedTask {
            task: task.clone(),
            prerequisite_artifacts: state
                .graph
                .prerequisites(&task.id)
                .flat_map(|p| state.artifacts_for(p))
                .cloned()
                .collect(),
        })
        .collect();
    Ok(WorkerObservation {
        worker_id: id.clone(),
        timestep: state.timestep,
        active: worker.active,
        capacity: worker.capacity,
        join_timestep: worker.join_timestep,
        leave_timestep: worker.leave_timestep,
        tasks,
        messages: visible_messages(state, id),
    })
}

pub fn observe_stakeholder(state: &WorkflowState) -> StakeholderObservation {
    StakeholderObservation {
        timestep: state.timestep,
        preferences: state.preferences.clone(),
        completed_point_fraction: state.completed_point_fraction(),
        status_histogram: state.graph.status_histogram(),
        messages: visible_messages(state, &AgentId::new(STAKEHOLDER_ID)),
        pending_end_request: state.pending_end_request.clone(),
    }
}

/// Observation for any agent id, chosen by role.
pub fn observe(state: &WorkflowState, agent: &AgentId) -> Result<Observation, ModelError> {
    match agent.as_str() {
        MANAGER_ID => Ok(Observation::Manager(observe_manager(state))),
        STAKEHOLDER_ID => Ok(Observation::Stakeholder(observe_stakeholder(state))),
        _ if state.workers.contains_key(agent) => Ok(Observation::Worker(observe_worker(state, agent)?)),
        _ => Err(ModelError::UnknownAgent(agent.clone())),
    }
}
