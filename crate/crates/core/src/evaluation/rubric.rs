use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::engine::{ActionRecord, EpisodeConfig, RecordStatus};
use crate::model::{CheckPhase, Task, TaskId, WorkflowState};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunCondition {
    /// Averaged over the state at the end of every timestep.
    EachTimestep,
    /// Evaluated once against the final state.
    #[default]
    OnCompletion,
}

/// What a rubric measures. Every deterministic measure yields a fraction in [0, 1]
/// that is scaled by the rubric's `max_score`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Measure {
    /// Point-weighted completion of the listed tasks.
    DeliverableCompletion { task_ids: Vec<TaskId> },
    /// Mean output quality of the listed tasks (all deliverables when empty).
    ArtifactQuality {
        #[serde(default)]
        task_ids: Vec<TaskId>,
    },
    /// Fraction of live tasks completed.
    TasksCompleted {},
    /// Point-weighted earliness of deliverable completion.
    CompletionSpeed {},
    /// Completed estimated cost over incurred cost, capped at 1.
    CostEfficiency {},
    /// Fraction of constraints without violations.
    ConstraintCompliance {},
    /// Fraction of deliverables the manager inspected or refined.
    Oversight {},
    /// Scored by an external grader; skipped when none is configured.
    External { grader: String },
}

impl Measure {
    pub fn referenced_tasks(&self) -> &[TaskId] {
        match self {
            Measure::DeliverableCompletion { task_ids } | Measure::ArtifactQuality { task_ids } => task_ids,
            _ => &[],
        }
    }

    /// Built-in measure for well-known objective names.
    pub fn default_for(objective: &str) -> Option<Measure> {
        Some(match objective {
            "quality" => Measure::ArtifactQuality { task_ids: Vec::new() },
            "cost" => Measure::CostEfficiency {},
            "speed" => Measure::CompletionSpeed {},
            "compliance" => Measure::ConstraintCompliance {},
            "governance" => Measure::Oversight {},
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RubricSpec {
    pub name: String,
    pub objective: String,
    pub max_score: f64,
    pub measure: Measure,
    #[serde(default)]
    pub run_condition: RunCondition,
}

/// Optional hook for rubrics that need judgement beyond the state, such as
/// an LLM grader. Returns a raw score in `[0, max_score]`.
pub trait ExternalGrader {
    fn grade(&self, rubric: &RubricSpec, state: &WorkflowState, records: &[ActionRecord]) -> Option<f64>;
}

fn points(task: &Task) -> f64 {
    task.deliverable.as_ref().map_or(1.0, |d| d.points)
}

/// Deliverable tasks, or every live task when the scenario has none.
fn scored_tasks(state: &WorkflowState) -> Vec<&Task> {
    let deliverables: Vec<&Task> = state.deliverables().collect();
    if deliverables.is_empty() {
        state.graph.tasks().filter(|t| !t.is_removed() && t.parent_id.is_none()).collect()
    } else {
        deliverables
    }
}

/// Tasks the manager inspected or refined successfully.
pub(crate) fn overseen_tasks(records: &[ActionRecord]) -> BTreeSet<TaskId> {
    records
        .iter()
        .filter(|r| r.status == RecordStatus::Ok)
        .filter_map(|r| r.manager_action())
        .filter_map(|a| match a {
            crate::actions::ManagerAction::InspectTask { task_id }
            | crate::actions::ManagerAction::RefineTask { task_id, .. } => Some(task_id),
            _ => None,
        })
        .collect()
}

/// Evaluate a deterministic measure as a fraction in [0, 1]. Returns `None`
/// for external measures.
pub fn measure_fraction(
    measure: &Measure,
    state: &WorkflowState,
    config: &EpisodeConfig,
    records: &[ActionRecord],
) -> Option<f64> {
    let value = match measure {
        Measure::DeliverableCompletion { task_ids } => {
            let tasks: Vec<&Task> = task_ids.iter().filter_map(|id| state.graph.task(id)).collect();
            let total: f64 = tasks.iter().map(|t| points(t)).sum();
            let done: f64 = tasks.iter().filter(|t| t.is_completed()).map(|t| points(t)).sum();
            if total > 0.0 { done / total } else { 0.0 }
        }
        Measure::ArtifactQuality { task_ids } => {
            let ids: Vec<TaskId> = if task_ids.is_empty() {
                scored_tasks(state).into_iter().map(|t| t.id.clone()).collect()
            } else {
                task_ids.clone()
            };
            let qualities: Vec<f64> = ids
                .iter()
                .filter(|id| state.graph.task(id).is_some_and(Task::is_completed))
                .filter_map(|id| state.output_quality(id))
                .collect();
            if ids.is_empty() {
                0.0
            } else {
                qualities.iter().sum::<f64>() / ids.len() as f64
            }
        }
        Measure::TasksCompleted {} => {
            let live: Vec<&Task> = state.graph.tasks().filter(|t| !t.is_removed()).collect();
            if live.is_empty() {
                1.0
            } else {
                live.iter().filter(|t| t.is_completed()).count() as f64 / live.len() as f64
            }
        }
        Measure::CompletionSpeed {} => {
            let tasks = scored_tasks(state);
            let total: f64 = tasks.iter().map(|t| points(t)).sum();
            let horizon = config.max_timesteps.max(1) as f64;
            let earned: f64 = tasks
                .iter()
                .filter(|t| t.is_completed())
                .map(|t| {
                    let at = t.completed_at.unwrap_or(config.max_timesteps) as f64;
                    points(t) * (1.0 - at / horizon).max(0.0)
                })
                .sum();
            if total > 0.0 { earned / total } else { 0.0 }
        }
        Measure::CostEfficiency {} => {
            let value: f64 = state
                .graph
                .tasks()
                .filter(|t| t.is_completed() && !t.is_composite())
                .map(|t| t.estimated_cost)
                .sum();
            if state.cost_incurred <= 0.0 {
                if value > 0.0 || state.graph.tasks().any(|t| t.is_completed()) { 1.0 } else { 0.0 }
            } else {
                (value / state.cost_incurred).min(1.0)
            }
        }
        Measure::ConstraintCompliance {} => {
            if state.constraints.is_empty() {
                1.0
            } else {
                let ok = state
                    .constraints
                    .iter()
                    .filter(|c| c.check(state, CheckPhase::Final).is_empty())
                    .count();
                ok as f64 / state.constraints.len() as f64
            }
        }
        Measure::Oversight {} => {
            let watched = overseen_tasks(records);
            let tasks = scored_tasks(state);
            if tasks.is_empty() {
                0.0
            } else {
                tasks.iter().filter(|t| watched.contains(&t.id)).count() as f64 / tasks.len() as f64
            }
        }
        Measure::External { .. } => return None,
    };
    Some(value.clamp(0.0, 1.0))
}

