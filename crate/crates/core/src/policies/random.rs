use std::collections::BTreeMap;

use crate::actions::{ActionKind, ManagerAction, ManagerObservation};
use crate::engine::Decision;
use crate::model::{AgentId, TaskId, TaskStatus, STAKEHOLDER_ID};
use crate::rng::RngStream;

use super::ManagerPolicy;

/// Placeholder id used when a variant needs a task and the graph has none.
const NO_TASK: &str = "no-such-task";

/// Uniform over the sixteen variant types, then uniform over legal
/// parameters. Variants without legal parameters are still emitted, with a
/// random existing id, and fail in the dispatcher.
pub struct RandomPolicy {
    rng: RngStream,
    created: u32,
}

impl RandomPolicy {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: RngStream::substream(seed, "manager", "random_policy"),
            created: 0,
        }
    }

    fn pick_task(&mut self, pool: &[TaskId], fallback: &[TaskId]) -> TaskId {
        self.rng
            .choose(pool)
            .or_else(|| self.rng.choose(fallback))
            .cloned()
            .unwrap_or_else(|| TaskId::new(NO_TASK))
    }
}

impl ManagerPolicy for RandomPolicy {
    fn name(&self) -> &str {
        "random"
    }

    fn decide(&mut self, obs: &ManagerObservation) -> Decision<ManagerAction> {
        let kind = ActionKind::ALL[self.rng.below(ActionKind::ALL.len() as u64) as usize];
        let all: Vec<TaskId> = obs.tasks.iter().map(|t| t.id.clone()).collect();
        let live: Vec<TaskId> = obs
            .tasks
            .iter()
            .filter(|t| t.status != TaskStatus::Removed)
            .map(|t| t.id.clone())
            .collect();
        let workers: Vec<AgentId> = obs.workers.iter().filter(|w| w.active).map(|w| w.id.clone()).collect();
        let any_worker: Vec<AgentId> = obs.workers.iter().map(|w| w.id.clone()).collect();

        let action = match kind {
            ActionKind::AssignTask => {
                let ready: Vec<TaskId> = obs
                    .ready
                    .iter()
                    .filter(|id| obs.tasks.iter().any(|t| &t.id == *id && t.owner.is_none()))
                    .cloned()
                    .collect();
                let task_id = self.pick_task(&ready, &all);
                let agent_id = self
                    .rng
                    .choose(&workers)
                    .or_else(|| self.rng.choose(&any_worker))
                    .cloned()
                    .unwrap_or_else(|| AgentId::new("no-such-worker"));
                ManagerAction::AssignTask { task_id, agent_id }
            }
            ActionKind::AssignAllPendingTasks => {
                let k = self.rng.index(workers.len() + 1);
                ManagerAction::AssignAllPendingTasks {
                    agent_id: workers.get(k).cloned(),
                }
            }
            ActionKind::CreateTask => {
                self.created += 1;
                let est_hrs = 1.0 + self.rng.below(8) as f64;
                ManagerAction::CreateTask {
                    name: format!("Ad hoc task {}", self.created),
                    description: "Created by the random baseline.".to_string(),
                    est_hrs,
                    est_cost: est_hrs * (1.0 + self.rng.next_f64()),
                }
            }
            ActionKind::RemoveTask => ManagerAction::RemoveTask {
                task_id: self.pick_task(&live, &all),
            },
            ActionKind::SendMessage => {
                let mut receivers: Vec<Option<AgentId>> = vec![None, Some(AgentId::new(STAKEHOLDER_ID))];
                receivers.extend(workers.iter().cloned().map(Some));
                let receiver_id = receivers[self.rng.index(receivers.len())].clone();
                ManagerAction::SendMessage {
                    content: format!("Status check at t={}.", obs.timestep),
                    receiver_id,
                }
            }
            ActionKind::Noop => ManagerAction::Noop {},
            ActionKind::GetWorkflowStatus => ManagerAction::GetWorkflowStatus {},
            ActionKind::GetAvailableAgents => ManagerAction::GetAvailableAgents {},
            ActionKind::GetPendingTasks => ManagerAction::GetPendingTasks {},
            ActionKind::RefineTask => ManagerAction::RefineTask {
                task_id: self.pick_task(&live, &all),
                new_task_instructions: "Tighten the scope and reuse prior artifacts.".to_string(),
                new_est_hrs: None,
                new_est_cost: None,
            },
            ActionKind::AddTaskDependency => {
                let prereq_id = self.pick_task(&live, &all);
                let dep_id = self.pick_task(&live, &all);
                ManagerAction::AddTaskDependency { prereq_id, dep_id }
            }
            ActionKind::RemoveTaskDependency => match self.rng.choose(&obs.edges) {
                Some(e) => ManagerAction::RemoveTaskDependency {
                    prereq_id: e.prereq.clone(),
                    dep_id: e.dependent.clone(),
                },
                None => {
                    let prereq_id = self.pick_task(&all, &[]);
                    let dep_id = self.pick_task(&all, &[]);
                    ManagerAction::RemoveTaskDependency { prereq_id, dep_id }
                }
            },
            ActionKind::InspectTask => ManagerAction::InspectTask {
                task_id: self.pick_task(&all, &[]),
            },
            ActionKind::DecomposeTask => ManagerAction::DecomposeTask {
                task_id: self.pick_task(&live, &all),
            },
            ActionKind::RequestEndWorkflow => ManagerAction::RequestEndWorkflow {
                reason: Some("Random baseline requested the end.".to_string()),
            },
            ActionKind::FailedAction => ManagerAction::FailedAction {
                metadata: BTreeMap::from([("source".to_string(), "random baseline".to_string())]),
            },
        };
        Decision::new(action, format!("uniform draw: {kind}"))
    }
}
