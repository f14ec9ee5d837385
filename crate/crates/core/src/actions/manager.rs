use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::model::{AgentId, TaskId};

/// The manager's action space. Encoded as `{"type": ..., "params": {...}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum ManagerAction {
    AssignTask {
        task_id: TaskId,
        agent_id: AgentId,
    },
    AssignAllPendingTasks {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        agent_id: Option<AgentId>,
    },
    CreateTask {
        name: String,
        #[serde(default)]
        description: String,
        est_hrs: f64,
        est_cost: f64,
    },
    RemoveTask {
        task_id: TaskId,
    },
    SendMessage {
        content: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        receiver_id: Option<AgentId>,
    },
    Noop {},
    GetWorkflowStatus {},
    GetAvailableAgents {},
    GetPendingTasks {},
    RefineTask {
        task_id: TaskId,
        new_task_instructions: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        new_est_hrs: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        new_est_cost: Option<f64>,
    },
    AddTaskDependency {
        prereq_id: TaskId,
        dep_id: TaskId,
    },
    RemoveTaskDependency {
        prereq_id: TaskId,
        dep_id: TaskId,
    },
    InspectTask {
        task_id: TaskId,
    },
    DecomposeTask {
        task_id: TaskId,
    },
    RequestEndWorkflow {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reason: Option<String>,
    },
    FailedAction {
        #[serde(default)]
        metadata: BTreeMap<String, String>,
    },
}

/// Variant tags of [`ManagerAction`], in table order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    AssignTask,
    AssignAllPendingTasks,
    CreateTask,
    RemoveTask,
    SendMessage,
    Noop,
    GetWorkflowStatus,
    GetAvailableAgents,
    GetPendingTasks,
    RefineTask,
    AddTaskDependency,
    RemoveTaskDependency,
    InspectTask,
    DecomposeTask,
    RequestEndWorkflow,
    FailedAction,
}

impl ActionKind {
    pub const ALL: [ActionKind; 16] = [
        ActionKind::AssignTask,
        ActionKind::AssignAllPendingTasks,
        ActionKind::CreateTask,
        ActionKind::RemoveTask,
        ActionKind::SendMessage,
        ActionKind::Noop,
        ActionKind::GetWorkflowStatus,
        ActionKind::GetAvailableAgents,
        ActionKind::GetPendingTasks,
        ActionKind::RefineTask,
        ActionKind::AddTaskDependency,
        ActionKind::RemoveTaskDependency,
        ActionKind::InspectTask,
        ActionKind::DecomposeTask,
        ActionKind::RequestEndWorkflow,
        ActionKind::FailedAction,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ActionKind::AssignTask => "assign_task",
            ActionKind::AssignAllPendingTasks => "assign_all_pending_tasks",
            ActionKind::CreateTask => "create_task",
            ActionKind::RemoveTask => "remove_task",
            ActionKind::SendMessage => "send_message",
            ActionKind::Noop => "noop",
            ActionKind::GetWorkflowStatus => "get_workflow_status",
            ActionKind::GetAvailableAgents => "get_available_agents",
            ActionKind::GetPendingTasks => "get_pending_tasks",
            ActionKind::RefineTask => "refine_task",
            ActionKind::AddTaskDependency => "add_task_dependency",
            ActionKind::RemoveTaskDependency => "remove_task_dependency",
            ActionKind::InspectTask => "inspect_task",
            ActionKind::DecomposeTask => "decompose_task",
            ActionKind::RequestEndWorkflow => "request_end_workflow",
            ActionKind::FailedAction => "failed_action",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }

    /// Reads and noops: never change the workflow.
    pub fn is_read_only(self) -> bool {
        matches!(
            self,
            ActionKind::Noop
                | ActionKind::GetWorkflowStatus
                | ActionKind::GetAvailableAgents
                | ActionKind::GetPendingTasks
                | ActionKind::InspectTask
        )
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DecodeError {
    #[error("action must be an object with a `type` field")]
    NotAnAction,
    #[error("unknown action type `{0}`")]
    UnknownType(String),
    #[error("invalid params for `{kind}`: {source}")]
    Params {
        kind: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("unexpected key `{0}` in action object")]
    UnexpectedKey(String),
}

impl ManagerAction {
    pub fn kind(&self) -> ActionKind {
        match self {
            ManagerAction::AssignTask { .. } => ActionKind::AssignTask,
            ManagerAction::AssignAllPendingTasks { .. } => ActionKind::AssignAllPendingTasks,
            ManagerAction::CreateTask { .. } => ActionKind::CreateTask,
            ManagerAction::RemoveTask { .. } => ActionKind::RemoveTask,
            ManagerAction::SendMessage { .. } => ActionKind::SendMessage,
            ManagerAction::Noop {} => ActionKind::Noop,
            ManagerAction::GetWorkflowStatus {} => ActionKind::GetWorkflowStatus,
            ManagerAction::GetAvailableAgents {} => ActionKind::GetAvailableAgents,
            ManagerAction::GetPendingTasks {} => ActionKind::GetPendingTasks,
            ManagerAction::RefineTask { .. } => ActionKind::RefineTask,
            ManagerAction::AddTaskDependency { .. } => ActionKind::AddTaskDependency,
            ManagerAction::RemoveTaskDependency { .. } => ActionKind::RemoveTaskDependency,
            ManagerAction::InspectTask { .. } => ActionKind::InspectTask,
            ManagerAction::DecomposeTask { .. } => ActionKind::DecomposeTask,
            ManagerAction::RequestEndWorkflow { .. } => ActionKind::RequestEndWorkflow,
            ManagerAction::FailedAction { .. } => ActionKind::FailedAction,
        }
    }

    pub fn failed(reason: impl Into<String>) -> Self {
        ManagerAction::FailedAction {
            metadata: BTreeMap::from([("reason".to_string(), reason.into())]),
        }
    }

    /// Parse a canonical action object. A missing or null `params` is read
    /// as `{}`; any other deviation from the schema is an error.
    pub fn decode(value: &Value) -> Result<Self, DecodeError> {
        let obj = value.as_object().ok_or(DecodeError::NotAnAction)?;
        if let Some(extra) = obj.keys().find(|k| *k != "type" && *k != "params") {
            return Err(DecodeError::UnexpectedKey(extra.clone()));
        }
        let kind = obj
            .get("type")
            .and_then(Value::as_str)
            .ok_or(DecodeError::NotAnAction)?;
        if ActionKind::parse(kind).is_none() {
            return Err(DecodeError::UnknownType(kind.to_string()));
        }
        let params = match obj.get("params") {
            None | Some(Value::Null) => Value::Object(Default::default()),
            Some(p) => p.clone(),
        };
        let canonical = serde_json::json!({ "type": kind, "params": params });
        serde_json::from_value(canonical).map_err(|source| DecodeError::Params {
            kind: kind.to_string(),
            source,
        })
    }

    pub fn encode(&self) -> Value {
        serde_json::to_value(self).expect("actions serialize")
    }
}
