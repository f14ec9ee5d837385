use crate::actions::{ManagerAction, ManagerObservation};
use crate::engine::Decision;
use crate::model::{AgentId, TaskId, TaskStatus};

use super::{best_worker, ManagerPolicy};

/// Plans every leaf task against the team present at the first turn and then
/// replays that plan, one assignment per turn, as tasks become ready. Never
/// edits the graph and never re-plans around churn.
#[derive(Default)]
pub struct AssignAllPolicy {
    plan: Option<Vec<(TaskId, AgentId)>>,
}

impl AssignAllPolicy {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn plan(&self) -> Option<&[(TaskId, AgentId)]> {
        self.plan.as_deref()
    }

    fn make_plan(obs: &ManagerObservation) -> Vec<(TaskId, AgentId)> {
        let active: Vec<_> = obs.workers.iter().filter(|w| w.active).collect();
        obs.tasks
            .iter()
            .filter(|t| t.subtask_ids.is_empty() && t.status.is_open())
            .filter_map(|t| best_worker(active.iter().copied(), &t.required_skills).map(|w| (t.id.clone(), w.id.clone())))
            .collect()
    }
}

impl ManagerPolicy for AssignAllPolicy {
    fn name(&self) -> &str {
        "assign_all"
    }

    fn decide(&mut self, obs: &ManagerObservation) -> Decision<ManagerAction> {
        let plan = self.plan.get_or_insert_with(|| Self::make_plan(obs));
        for (task_id, agent_id) in plan.iter() {
            let Some(task) = obs.tasks.iter().find(|t| &t.id == task_id) else {
                continue;
            };
            let unassigned = task.owner.is_none() && task.status == TaskStatus::Ready;
            let free = obs.workers.iter().any(|w| &w.id == agent_id && w.idle);
            if unassigned && free && obs.ready.contains(task_id) {
                return Decision::new(
                    ManagerAction::AssignTask {
                        task_id: task_id.clone(),
                        agent_id: agent_id.clone(),
                    },
                    format!("upfront plan: {task_id} -> {agent_id}"),
                );
            }
        }
        Decision::new(ManagerAction::Noop {}, "plan fully issued or waiting on readiness")
    }
}
