use serde::{Deserialize, Serialize};

use super::{AgentId, ModelError, TaskId};

/// Marker line opening the manager's instruction block inside execution notes.
pub const INSTRUCTIONS_MARKER: &str = "MANAGER_INSTRUCTIONS:";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TaskStatus {
    Pending,
    Ready,
    Running,
    Completed,
    Failed,
    Removed,
}

impl TaskStatus {
    pub const ALL: [TaskStatus; 6] = [
        TaskStatus::Pending,
        TaskStatus::Ready,
        TaskStatus::Running,
        TaskStatus::Completed,
        TaskStatus::Failed,
        TaskStatus::Removed,
    ];

    pub fn label(self) -> &'static str {
        match self {
            TaskStatus::Pending => "PENDING",
            TaskStatus::Ready => "READY",
            TaskStatus::Running => "RUNNING",
            TaskStatus::Completed => "COMPLETED",
            TaskStatus::Failed => "FAILED",
            TaskStatus::Removed => "REMOVED",
        }
    }

    /// Not yet started and still eligible to run.
    pub fn is_open(self) -> bool {
        matches!(self, TaskStatus::Pending | TaskStatus::Ready)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeliverableTier {
    Critical,
    Major,
    Supporting,
}

impl DeliverableTier {
    /// Inclusive point range for the tier.
    pub fn point_range(self) -> (f64, f64) {
        match self {
            DeliverableTier::Critical => (12.0, 18.0),
            DeliverableTier::Major => (8.0, 12.0),
            DeliverableTier::Supporting => (3.0, 8.0),
        }
    }

    pub fn contains(self, points: f64) -> bool {
        let (lo, hi) = self.point_range();
        points >= lo && points <= hi
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scoring {
    /// Full points when completed at or above the quality bar, none otherwise.
    #[default]
    Binary,
    /// Points proportional to task progress.
    Graduated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Deliverable {
    pub tier: DeliverableTier,
    pub points: f64,
    #[serde(default)]
    pub scoring: Scoring,
    /// Minimum artifact quality for binary credit.
    #[serde(default)]
    pub min_quality: f64,
}

impl Deliverable {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !self.points.is_finite() || !self.tier.contains(self.points) {
            let (lo, hi) = self.tier.point_range();
            return Err(ModelError::InvalidDeliverable(format!(
                "{:?} deliverable worth {} points is outside {lo}-{hi}",
                self.tier, self.points
            )));
        }
        if !(0.0..=1.0).contains(&self.min_quality) {
            return Err(ModelError::InvalidDeliverable(format!(
                "min_quality {} outside [0, 1]",
                self.min_quality
            )));
        }
        Ok(())
    }
}

/// Fields of a new task; status and bookkeeping are assigned on insertion.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskDraft {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<TaskId>,
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub estimated_hours: f64,
    #[serde(default)]
    pub estimated_cost: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub required_skills: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deliverable: Option<Deliverable>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub execution_notes: String,
}

impl TaskDraft {
    pub fn new(name: impl Into<String>, estimated_hours: f64, estimated_cost: f64) -> Self {
        Self {
            name: name.into(),
            estimated_hours,
            estimated_cost,
            ..Self::default()
        }
    }

    pub fn with_id(mut self, id: impl Into<TaskId>) -> Self {
        self.id = Some(id.into());
        self
    }

    pub fn with_skills<S: Into<String>>(mut self, skills: impl IntoIterator<Item = S>) -> Self {
        self.required_skills = skills.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_deliverable(mut self, deliverable: Deliverable) -> Self {
        self.deliverable = Some(deliverable);
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.name.trim().is_empty() {
            return Err(ModelError::InvalidDraft("name must not be empty".into()));
        }
        if !self.estimated_hours.is_finite() || self.estimated_hours < 0.0 {
            return Err(ModelError::InvalidDraft(format!(
                "estimated_hours must be non-negative, got {}",
                self.estimated_hours
            )));
        }
        if !self.estimated_cost.is_finite() || self.estimated_cost < 0.0 {
            return Err(ModelError::InvalidDraft(format!(
                "estimated_cost must be non-negative, got {}",
                self.estimated_cost
            )));
        }
        if let Some(id) = &self.id {
            if id.as_str().trim().is_empty() {
                return Err(ModelError::InvalidDraft("id must not be empty".into()));
            }
        }
        if let Some(deliverable) = &self.deliverable {
            deliverable.validate()?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub timestep: u64,
    pub worker: AgentId,
}

/// Execution bookkeeping for the current run of a task.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExecutionProgress {
    pub worker: AgentId,
    pub total_steps: u32,
    pub done_steps: u32,
    pub progress_at_start: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub id: TaskId,
    pub name: String,
    pub description: String,
    pub estimated_hours: f64,
    pub estimated_cost: f64,
    pub status: TaskStatus,
    pub owner: Option<AgentId>,
    pub progress: f64,
    pub execution_notes: String,
    pub subtask_ids: Vec<TaskId>,
    pub parent_id: Option<TaskId>,
    pub deliverable: Option<Deliverable>,
    pub required_skills: Vec<String>,
    pub created_at: u64,
    pub started_at: Option<u64>,
    pub completed_at: Option<u64>,
    pub assignment_history: Vec<Assignment>,
    pub execution: Option<ExecutionProgress>,
}

impl Task {
    pub(crate) fn from_draft(id: TaskId, draft: TaskDraft, timestep: u64) -> Self {
        Self {
            id,
            name: draft.name,
            description: draft.description,
            estimated_hours: draft.estimated_hours,
            estimated_cost: draft.estimated_cost,
            status: TaskStatus::Pending,
            owner: None,
            progress: 0.0,
            execution_notes: draft.execution_notes,
            subtask_ids: Vec::new(),
            parent_id: None,
            deliverable: draft.deliverable,
            required_skills: draft.required_skills,
            created_at: timestep,
            started_at: None,
            completed_at: None,
            assignment_history: Vec::new(),
            execution: None,
        }
    }

    pub fn is_composite(&self) -> bool {
        !self.subtask_ids.is_empty()
    }

    pub fn is_removed(&self) -> bool {
        self.status == TaskStatus::Removed
    }

    pub fn is_completed(&self) -> bool {
        self.status == TaskStatus::Completed
    }

    /// The current manager instruction block, if any.
    pub fn manager_instructions(&self) -> Option<&str> {
        self.execution_notes
            .find(INSTRUCTIONS_MARKER)
            .map(|at| self.execution_notes[at + INSTRUCTIONS_MARKER.len()..].trim())
    }

    /// Inject or replace the single instruction block at the end of the notes.
    pub(crate) fn set_manager_instructions(&mut self, instructions: &str) {
        let base = match self.execution_notes.find(INSTRUCTIONS_MARKER) {
            Some(at) => self.execution_notes[..at].trim_end().to_string(),
            None => self.execution_notes.trim_end().to_string(),
        };
        let cleaned = instructions.replace(INSTRUCTIONS_MARKER, "MANAGER_INSTRUCTIONS -");
        self.execution_notes = if base.is_empty() {
            format!("{INSTRUCTIONS_MARKER} {}", cleaned.trim())
        } else {
            format!("{base}\n{INSTRUCTIONS_MARKER} {}", cleaned.trim())
        };
    }
}
