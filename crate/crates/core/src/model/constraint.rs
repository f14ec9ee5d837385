use serde::{Deserialize, Serialize};

use super::{AgentId, ModelError, TaskId, WorkerKind, WorkflowState, MANAGER_ID};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    Hard,
    Soft,
}

/// Closed predicate vocabulary for workflow constraints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Predicate {
    /// The task must be completed no later than `timestep`.
    TaskCompletedBy { task_id: TaskId, timestep: u64 },
    /// The task must have produced at least one artifact by the end.
    ArtifactExistsFor { task_id: TaskId },
    /// None of the listed tasks (all tasks when empty) may ever be assigned
    /// to a worker of `kind`.
    NoAssignmentOfKind {
        kind: WorkerKind,
        #[serde(default)]
        task_ids: Vec<TaskId>,
    },
    /// The manager must message `receiver` strictly before `timestep`.
    MessageSentBefore { receiver: AgentId, timestep: u64 },
    /// Total incurred cost must stay at or below `amount`.
    BudgetBelow { amount: f64 },
}

impl Predicate {
    pub fn referenced_tasks(&self) -> Vec<&TaskId> {
        match self {
            Predicate::TaskCompletedBy { task_id, .. } | Predicate::ArtifactExistsFor { task_id } => {
                vec![task_id]
            }
            Predicate::NoAssignmentOfKind { task_ids, .. } => task_ids.iter().collect(),
            Predicate::MessageSentBefore { .. } | Predicate::BudgetBelow { .. } => Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constraint {
    pub id: String,
    pub kind: ConstraintKind,
    #[serde(default)]
    pub description: String,
    pub predicate: Predicate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub penalty_weight: Option<f64>,
}

/// When a predicate is checked. `During` only reports violations that can no
/// longer be undone; `Final` treats the episode as over.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckPhase {
    During,
    Final,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub constraint_id: String,
    pub kind: ConstraintKind,
    pub subject: String,
    pub detail: String,
}

impl Constraint {
    pub fn validate(&self) -> Result<(), ModelError> {
        let invalid = |reason: &str| ModelError::InvalidConstraint {
            id: self.id.clone(),
            reason: reason.to_string(),
        };
        match (self.kind, self.penalty_weight) {
            (ConstraintKind::Hard, Some(_)) => return Err(invalid("hard constraints carry no penalty_weight")),
            (ConstraintKind::Soft, None) => return Err(invalid("soft constraints need a penalty_weight")),
            (ConstraintKind::Soft, Some(w)) if !w.is_finite() || w < 0.0 => {
                return Err(invalid("penalty_weight must be non-negative"))
            }
            _ => {}
        }
        if let Predicate::BudgetBelow { amount } = self.predicate {
            if !amount.is_finite() || amount < 0.0 {
                return Err(invalid("budget amount must be non-negative"));
            }
        }
        Ok(())
    }

    pub fn check(&self, state: &WorkflowState, phase: CheckPhase) -> Vec<Violation> {
        let violation = |subject: String, detail: String| Violation {
            constraint_id: self.id.clone(),
            kind: self.kind,
            subject,
            detail,
        };
        let now = state.timestep;
        match &self.predicate {
            Predicate::TaskCompletedBy { task_id, timestep } => {
                let done_in_time = state
                    .graph
                    .task(task_id)
                    .and_then(|t| t.completed_at)
                    .is_some_and(|at| at <= *timestep);
                let decided = phase == CheckPhase::Final || now > *timestep;
                if decided && !done_in_time {
                    vec![violation(task_id.to_string(), format!("not completed by t={timestep}"))]
                } else {
                    Vec::new()
                }
            }
            Predicate::ArtifactExistsFor { task_id } => {
                if phase == CheckPhase::During {
                    return Vec::new();
                }
                let exists = state
                    .artifacts
                    .values()
                    .any(|a| &a.producing_task_id == task_id)
                    || state.composite_has_artifacts(task_id);
                if exists {
                    Vec::new()
                } else {
                    vec![violation(task_id.to_string(), "no artifact produced".into())]
                }
            }
            Predicate::NoAssignmentOfKind { kind, task_ids } => state
                .graph
                .tasks()
                .filter(|t| task_ids.is_empty() || task_ids.contains(&t.id))
                .filter_map(|t| {
                    t.assignment_history
                        .iter()
                        .find(|a| state.workers.get(&a.worker).is_some_and(|w| w.kind == *kind))
                        .map(|a| {
                            violation(
                                t.id.to_string(),
                                format!("assigned to {:?} worker `{}` at t={}", kind, a.worker, a.timestep),
                            )
                        })
                })
                .collect(),
            Predicate::MessageSentBefore { receiver, timestep } => {
                let sent = state.comms.iter().any(|m| {
                    m.sender.as_str() == MANAGER_ID
                        && m.receiver.as_ref() == Some(receiver)
                        && m.timestep < *timestep
                });
                let decided = phase == CheckPhase::Final || now >= *timestep;
                if decided && !sent {
                    vec![violation(receiver.to_string(), format!("no manager message before t={timestep}"))]
                } else {
                    Vec::new()
                }
            }
            Predicate::BudgetBelow { amount } => {
                if state.cost_incurred > *amount {
                    vec![violation(
                        "budget".into(),
                        format!("incurred {:.2} exceeds {amount:.2}", state.cost_incurred),
                    )]
                } else {
                    Vec::new()
                }
            }
        }
    }
}
