use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::engine::{EpisodeConfig, ExecutionModel, DEFAULT_MAX_MANAGER_ACTIONS, DEFAULT_MAX_TIMESTEPS};
use crate::evaluation::RubricSpec;
use crate::model::{
    AgentId, Constraint, DecompositionTemplate, Edge, ModelError, PreferenceVector, TaskDraft,
    TaskId, Worker, WorkerKind, WorkflowState,
};

fn one() -> u32 {
    1
}

fn is_zero(v: &u64) -> bool {
    *v == 0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkerSpec {
    pub id: AgentId,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub name: String,
    pub kind: WorkerKind,
    #[serde(default)]
    pub capabilities: BTreeMap<String, f64>,
    #[serde(default)]
    pub cost_rate: f64,
    #[serde(default = "one")]
    pub capacity: u32,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub join_timestep: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leave_timestep: Option<u64>,
}

impl WorkerSpec {
    pub fn to_worker(&self) -> Worker {
        let mut w = Worker::new(self.id.clone(), self.kind)
            .with_cost_rate(self.cost_rate)
            .with_schedule(self.join_timestep, self.leave_timestep);
        if !self.name.is_empty() {
            w.name = self.name.clone();
        }
        w.capabilities = self.capabilities.clone();
        w.capacity = self.capacity;
        w
    }
}

/// One entry of the stakeholder's preference schedule. Weights are kept raw
/// so that off-simplex vectors surface as diagnostics rather than parse errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleEntry {
    pub timestep: u64,
    pub weights: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StakeholderSettings {
    /// Timesteps between a manager question and the stakeholder's answer.
    pub reply_latency: u64,
    /// Extra uniformly drawn latency in `0..=reply_jitter`.
    pub reply_jitter: u64,
    /// Fraction of deliverable points that must be complete to approve an end request.
    pub approval_threshold: f64,
}

impl Default for StakeholderSettings {
    fn default() -> Self {
        Self {
            reply_latency: 2,
            reply_jitter: 0,
            approval_threshold: 0.8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpisodeDefaults {
    pub max_manager_actions: u32,
    pub max_timesteps: u64,
    pub hours_per_timestep: f64,
}

impl Default for EpisodeDefaults {
    fn default() -> Self {
        Self {
            max_manager_actions: DEFAULT_MAX_MANAGER_ACTIONS,
            max_timesteps: DEFAULT_MAX_TIMESTEPS,
            hours_per_timestep: 1.0,
        }
    }
}

/// A declarative workflow scenario: the initial state plus the scripts and
/// rubrics that drive and score an episode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    pub id: String,
    pub title: String,
    pub domain: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub tasks: Vec<TaskDraft>,
    #[serde(default)]
    pub edges: Vec<Edge>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub templates: BTreeMap<TaskId, DecompositionTemplate>,
    pub workers: Vec<WorkerSpec>,
    #[serde(default)]
    pub constraints: Vec<Constraint>,
    #[serde(default)]
    pub rubrics: Vec<RubricSpec>,
    pub preferences: Vec<ScheduleEntry>,
    #[serde(default)]
    pub stakeholder: StakeholderSettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub execution: Option<ExecutionModel>,
    #[serde(default)]
    pub episode: EpisodeDefaults,
}

impl ScenarioDoc {
    /// Parse without semantic validation.
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Canonical text: pretty-printed with a trailing newline.
    pub fn to_canonical(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scenario serializes");
        s.push('\n');
        s
    }

    pub fn default_config(&self, seed: u64) -> EpisodeConfig {
        EpisodeConfig {
            seed,
            max_manager_actions: self.episode.max_manager_actions,
            max_timesteps: self.episode.max_timesteps,
            hours_per_timestep: self.episode.hours_per_timestep,
            execution: self.execution.clone().unwrap_or_default(),
        }
    }

    /// Objective names, taken from the first schedule entry.
    pub fn objectives(&self) -> Vec<String> {
        self.preferences
            .first()
            .map(|e| e.weights.keys().cloned().collect())
            .unwrap_or_default()
    }

    pub fn initial_preferences(&self) -> Option<PreferenceVector> {
        self.preferences
            .first()
            .and_then(|e| PreferenceVector::new(e.weights.clone()).ok())
    }

    /// The validated schedule as `(timestep, vector)` pairs. Invalid entries are skipped.
    pub fn schedule(&self) -> Vec<(u64, PreferenceVector)> {
        self.preferences
            .iter()
            .filter_map(|e| PreferenceVector::new(e.weights.clone()).ok().map(|v| (e.timestep, v)))
            .collect()
    }

    pub fn task(&self, id: &TaskId) -> Option<&TaskDraft> {
        self.tasks.iter().find(|t| t.id.as_ref() == Some(id))
    }

    pub fn build_state(&self, config: &EpisodeConfig) -> Result<WorkflowState, ModelError> {
        let first = self
            .preferences
            .first()
            .ok_or_else(|| ModelError::InvalidPreferences("schedule is empty".into()))?;
        let prefs = PreferenceVector::new(first.weights.clone())?;
        let mut state = WorkflowState::new(prefs, config.max_manager_actions);
        for w in &self.workers {
            state.add_worker(w.to_worker())?;
        }
        for t in &self.tasks {
            if t.id.is_none() {
                return Err(ModelError::InvalidDraft(format!("task `{}` has no id", t.name)));
            }
            state.add_task(t.clone())?;
        }
        for e in &self.edges {
            state.add_dependency(&e.prereq, &e.dependent)?;
        }
        for (task, template) in &self.templates {
            state.add_template(task.clone(), template.clone())?;
        }
        for c in &self.constraints {
            state.add_constraint(c.clone())?;
        }
        state.refresh();
        Ok(state)
    }
}
