use crate::actions::{ActionResult, ManagerAction, ManagerObservation, TaskSummary};
use crate::engine::Decision;
use crate::model::{AgentId, TaskStatus, MANAGER_ID, STAKEHOLDER_ID};

use super::{best_worker, ManagerPolicy};

pub const DEFAULT_STATUS_CADENCE: u64 = 10;

/// Priority-rule baseline: assign the most valuable ready task, decompose
/// templated work while blocked, keep the stakeholder informed on a fixed
/// cadence, otherwise poll status.
pub struct GreedyPolicy {
    cadence: u64,
    last_update: Option<u64>,
}

impl Default for GreedyPolicy {
    fn default() -> Self {
        Self::new(DEFAULT_STATUS_CADENCE)
    }
}

impl GreedyPolicy {
    pub fn new(cadence: u64) -> Self {
        Self {
            cadence: cadence.max(1),
            last_update: None,
        }
    }

    fn assignment(obs: &ManagerObservation) -> Option<(ManagerAction, String)> {
        let mut ready: Vec<&TaskSummary> = obs
            .tasks
            .iter()
            .filter(|t| t.owner.is_none() && t.subtask_ids.is_empty() && obs.ready.contains(&t.id))
            .collect();
        ready.sort_by(|a, b| {
            let pa = a.deliverable_points.unwrap_or(0.0);
            let pb = b.deliverable_points.unwrap_or(0.0);
            pb.total_cmp(&pa).then_with(|| a.id.cmp(&b.id))
        });
        for task in ready {
            let idle = obs.workers.iter().filter(|w| w.idle);
            let Some(worker) = best_worker(idle, &task.required_skills) else {
                continue;
            };
            // Nobody free is qualified; wait for someone who is.
            if super::skill_match(&worker.capabilities, &task.required_skills) <= 0.0 {
                continue;
            }
            let why = format!(
                "highest-value ready task {} ({} pts) to best idle match {}",
                task.id,
                task.deliverable_points.unwrap_or(0.0),
                worker.id
            );
            return Some((
                ManagerAction::AssignTask {
                    task_id: task.id.clone(),
                    agent_id: worker.id.clone(),
                },
                why,
            ));
        }
        None
    }

    fn decomposition(obs: &ManagerObservation) -> Option<ManagerAction> {
        obs.tasks
            .iter()
            .find(|t| t.has_template && t.subtask_ids.is_empty() && t.owner.is_none() && t.status.is_open())
            .map(|t| ManagerAction::DecomposeTask { task_id: t.id.clone() })
    }

    /// A stakeholder message (other than an answer) newer than the manager's latest message to them.
    fn unanswered_stakeholder(obs: &ManagerObservation) -> bool {
        let last_from = obs
            .messages
            .iter()
            .filter(|m| m.message.sender.as_str() == STAKEHOLDER_ID && m.message.reply_to.is_none())
            .map(|m| m.id)
            .max();
        let last_reply = obs
            .messages
            .iter()
            .filter(|m| {
                m.message.sender.as_str() == MANAGER_ID
                    && m.message.receiver.as_ref().is_none_or(|r| r.as_str() == STAKEHOLDER_ID)
            })
            .map(|m| m.id)
            .max();
        match (last_from, last_reply) {
            (Some(s), Some(r)) => s > r,
            (Some(_), None) => true,
            _ => false,
        }
    }

    fn status_message(obs: &ManagerObservation) -> String {
        let done = obs.tasks.iter().filter(|t| t.status == TaskStatus::Completed).count();
        let live = obs.tasks.iter().filter(|t| t.status != TaskStatus::Removed).count();
        let running = obs.tasks.iter().filter(|t| t.status == TaskStatus::Running).count();
        format!(
            "Status at t={}: {done}/{live} tasks complete, {running} in progress. Any change to priorities?",
            obs.timestep
        )
    }
}

impl ManagerPolicy for GreedyPolicy {
    fn name(&self) -> &str {
        "greedy"
    }

    fn decide(&mut self, obs: &ManagerObservation) -> Decision<ManagerAction> {
        if let Some((action, why)) = Self::assignment(obs) {
            return Decision::new(action, why);
        }
        if let Some(action) = Self::decomposition(obs) {
            return Decision::new(action, "nothing assignable; decompose templated work");
        }
        let due = match self.last_update {
            None => true,
            Some(t) => obs.timestep >= t + self.cadence,
        };
        if due || Self::unanswered_stakeholder(obs) {
            self.last_update = Some(obs.timestep);
            return Decision::new(
                ManagerAction::SendMessage {
                    content: Self::status_message(obs),
                    receiver_id: Some(AgentId::new(STAKEHOLDER_ID)),
                },
                if due { "status update due" } else { "acknowledge stakeholder message" },
            );
        }
        if !matches!(obs.last_result, Some(ActionResult::Status { .. })) {
            return Decision::new(ManagerAction::GetWorkflowStatus {}, "poll workflow status");
        }
        Decision::new(ManagerAction::Noop {}, "nothing to do")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actions::apply_manager_action;
    use crate::model::{Deliverable, DeliverableTier, Scoring, TaskDraft, TaskId};
    use crate::policies::fixtures;

    fn assign(task: &str, agent: &str) -> ManagerAction {
        ManagerAction::AssignTask {
            task_id: TaskId::new(task),
            agent_id: AgentId::new(agent),
        }
    }

    #[test]
    fn rule_order() {
        let mut state = fixtures::state();
        let mut p = GreedyPolicy::default();

        let d = p.decide(&fixtures::obs(&state));
        assert_eq!(d.action, assign("model", "analyst"), "highest points first");
        apply_manager_action(&mut state, &d.action).unwrap();

        let d = p.decide(&fixtures::obs(&state));
        assert_eq!(d.action, assign("memo", "writer"));
        apply_manager_action(&mut state, &d.action).unwrap();

        let d = p.decide(&fixtures::obs(&state));
        assert_eq!(d.action, ManagerAction::DecomposeTask { task_id: TaskId::new("plan") });
        apply_manager_action(&mut state, &d.action).unwrap();

        let d = p.decide(&fixtures::obs(&state));
        match &d.action {
            ManagerAction::SendMessage { content, receiver_id } => {
                assert_eq!(receiver_id.as_ref().map(AgentId::as_str), Some(STAKEHOLDER_ID));
                assert!(content.contains('?'));
            }
            other => panic!("expected a status message, got {other:?}"),
        }
        let result = apply_manager_action(&mut state, &d.action).unwrap();
        assert!(matches!(result, ActionResult::MessageSent { .. }));

        let mut obs = fixtures::obs(&state);
        assert_eq!(p.decide(&obs).action, ManagerAction::GetWorkflowStatus {});
        obs.last_result = Some(apply_manager_action(&mut state, &ManagerAction::GetWorkflowStatus {}).unwrap());
        assert_eq!(p.decide(&obs).action, ManagerAction::Noop {});
    }

    #[test]
    fn status_cadence() {
        let mut state = fixtures::state();
        for id in ["model", "memo", "plan", "review"] {
            state.remove_task(&TaskId::new(id)).unwrap();
        }
        let mut p = GreedyPolicy::new(5);
        let mut obs = fixtures::obs(&state);
        obs.last_result = Some(ActionResult::Ack);
        assert!(matches!(p.decide(&obs).action, ManagerAction::SendMessage { .. }));
        for t in 1..5 {
            obs.timestep = t;
            assert_eq!(p.decide(&obs).action, ManagerAction::GetWorkflowStatus {});
        }
        obs.timestep = 5;
        assert!(matches!(p.decide(&obs).action, ManagerAction::SendMessage { .. }));
    }

    #[test]
    fn skips_tasks_nobody_can_do() {
        let mut state = fixtures::state();
        let id = state
            .add_task(
                TaskDraft::new("Legal review", 3.0, 1.0)
                    .with_id("aaa-legal")
                    .with_skills(["law"])
                    .with_deliverable(Deliverable {
                        tier: DeliverableTier::Critical,
                        points: 18.0,
                        scoring: Scoring::Binary,
                        min_quality: 0.0,
                    }),
            )
            .unwrap();
        state.refresh();
        let obs = fixtures::obs(&state);
        assert!(obs.ready.contains(&id));
        let d = GreedyPolicy::default().decide(&obs);
        assert_eq!(d.action, assign("model", "analyst"));
    }
}
