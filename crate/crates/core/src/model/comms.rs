use serde::{Deserialize, Serialize};

use super::{AgentId, TaskId};

/// One entry of the append-only communication log. A message's id is its
/// index in the log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub sender: AgentId,
    /// `None` broadcasts to every agent.
    pub receiver: Option<AgentId>,
    pub content: String,
    pub timestep: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub related_task_id: Option<TaskId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reply_to: Option<usize>,
}

impl Message {
    pub fn is_visible_to(&self, agent: &AgentId) -> bool {
        &self.sender == agent || self.receiver.as_ref().is_none_or(|r| r == agent)
    }

    pub fn is_question(&self) -> bool {
        self.content.contains('?')
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ArtifactId(pub String);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArtifactKind {
    Document,
    Code,
    Data,
    Other,
}

impl ArtifactKind {
    /// Guess the artifact kind from the skills a task requires.
    pub fn for_skills(skills: &[String]) -> Self {
        let has = |needles: &[&str]| {
            skills
                .iter()
                .any(|s| needles.iter().any(|n| s.contains(n)))
        };
        if has(&["code", "engineering", "ml", "software"]) {
            ArtifactKind::Code
        } else if has(&["data", "model", "analysis", "analytics", "quant"]) {
            ArtifactKind::Data
        } else if skills.is_empty() {
            ArtifactKind::Other
        } else {
            ArtifactKind::Document
        }
    }
}

/// Immutable output of a completed task.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub id: ArtifactId,
    pub producing_task_id: TaskId,
    pub producer: AgentId,
    pub kind: ArtifactKind,
    pub content: String,
    pub quality: f64,
    pub created_timestep: u64,
}
