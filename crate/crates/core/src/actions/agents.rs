use serde::{Deserialize, Serialize};

use crate::model::{AgentId, PreferenceVector, TaskId};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum StakeholderAction {
    SendMessage {
        content: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        receiver_id: Option<AgentId>,
    },
    UpdatePreferences {
        preferences: PreferenceVector,
    },
    AnswerQuestion {
        message_id: usize,
        content: String,
    },
    ApproveEnd {
        approve: bool,
    },
    Noop {},
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum WorkerAction {
    /// Spend this timestep on the listed owned tasks (at most `capacity`).
    Work { task_ids: Vec<TaskId> },
    SendMessage {
        content: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        receiver_id: Option<AgentId>,
    },
    Noop {},
}
