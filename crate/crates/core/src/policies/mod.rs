//! Scripted decision policies and the external policy bridge.

mod assign_all;
mod bridge;
mod greedy;
mod random;
mod stakeholder;
mod worker;

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use crate::actions::{
    observe_manager, observe_stakeholder, observe_worker, ActionResult, ManagerAction,
    ManagerObservation, StakeholderAction, WorkerAction, WorkerSummary,
};
use crate::engine::{Actors, Decision};
use crate::model::{AgentId, WorkflowState};
use crate::scenario::ScenarioDoc;

pub use assign_all::AssignAllPolicy;
pub use bridge::{
    BridgeError, BridgeHost, ClientFrame, ExternalPolicy, HostFrame, BRIDGE_PROTOCOL,
    DEFAULT_BRIDGE_TIMEOUT,
};
pub use greedy::{GreedyPolicy, DEFAULT_STATUS_CADENCE};
pub use random::RandomPolicy;
pub use stakeholder::StakeholderScript;
pub use worker::scripted_worker;

pub(crate) use crate::model::skill_match;

/// Chooses the manager's action from its observation.
pub trait ManagerPolicy: Send {
    fn name(&self) -> &str;
    fn decide(&mut self, obs: &ManagerObservation) -> Decision<ManagerAction>;
    /// Called once when the episode is over.
    fn finish(&mut self, _reason: &str) {}
}

/// The active worker with the highest skill match; ties go to the smaller id.
pub(crate) fn best_worker<'a>(
    workers: impl IntoIterator<Item = &'a WorkerSummary>,
    required: &[String],
) -> Option<&'a WorkerSummary> {
    workers
        .into_iter()
        .filter(|w| w.active)
        .fold(None::<(&WorkerSummary, f64)>, |best, w| {
            let m = skill_match(&w.capabilities, required);
            match best {
                Some((b, bm)) if bm > m || (bm == m && b.id <= w.id) => Some((b, bm)),
                _ => Some((w, m)),
            }
        })
        .map(|(w, _)| w)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PolicySpec {
    Random,
    AssignAll,
    Greedy { cadence: u64 },
    External { command: String, timeout_ms: u64 },
}

impl PolicySpec {
    pub fn name(&self) -> &'static str {
        match self {
            PolicySpec::Random => "random",
            PolicySpec::AssignAll => "assign_all",
            PolicySpec::Greedy { .. } => "greedy",
            PolicySpec::External { .. } => "external",
        }
    }

    pub fn external(command: impl Into<String>) -> Self {
        PolicySpec::External {
            command: command.into(),
            timeout_ms: DEFAULT_BRIDGE_TIMEOUT.as_millis() as u64,
        }
    }

    /// Instantiate the manager policy for one episode.
    pub fn build(&self, scenario: &ScenarioDoc, seed: u64) -> Result<Box<dyn ManagerPolicy>, BridgeError> {
        Ok(match self {
            PolicySpec::Random => Box::new(RandomPolicy::new(seed)),
            PolicySpec::AssignAll => Box::new(AssignAllPolicy::new()),
            PolicySpec::Greedy { cadence } => Box::new(GreedyPolicy::new(*cadence)),
            PolicySpec::External { command, timeout_ms } => Box::new(ExternalPolicy::new(BridgeHost::spawn(
                command,
                &scenario.id,
                Duration::from_millis(*timeout_ms),
            )?)),
        })
    }
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, thiserror::Error)]
#[error("unknown policy `{0}` (expected random, assign_all, greedy or external)")]
pub struct UnknownPolicy(pub String);

impl FromStr for PolicySpec {
    type Err = UnknownPolicy;

    /// Parses the scripted kinds. `external` needs a command; use [`PolicySpec::external`].
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(PolicySpec::Random),
            "assign_all" | "assign-all" => Ok(PolicySpec::AssignAll),
            "greedy" => Ok(PolicySpec::Greedy {
                cadence: DEFAULT_STATUS_CADENCE,
            }),
            other => Err(UnknownPolicy(other.to_string())),
        }
    }
}

/// A manager policy plus the scripted stakeholder and workers.
pub struct PolicyBundle {
    pub manager: Box<dyn ManagerPolicy>,
    pub stakeholder: StakeholderScript,
}

impl PolicyBundle {
    pub fn new(manager: Box<dyn ManagerPolicy>, stakeholder: StakeholderScript) -> Self {
        Self { manager, stakeholder }
    }

    pub fn for_scenario(spec: &PolicySpec, scenario: &ScenarioDoc, seed: u64) -> Result<Self, BridgeError> {
        Ok(Self::new(spec.build(scenario, seed)?, StakeholderScript::for_scenario(scenario, seed)))
    }
}

impl Actors for PolicyBundle {
    fn stakeholder(&mut self, state: &WorkflowState) -> Decision<StakeholderAction> {
        self.stakeholder.decide(&observe_stakeholder(state))
    }

    fn manager(&mut self, state: &WorkflowState, last: Option<&ActionResult>) -> Decision<ManagerAction> {
        let mut obs = observe_manager(state);
        obs.last_result = last.cloned();
        self.manager.decide(&obs)
    }

    fn worker(&mut self, state: &WorkflowState, worker: &AgentId) -> Decision<WorkerAction> {
        match observe_worker(state, worker) {
            Ok(obs) => scripted_worker(&obs),
            Err(_) => Decision::bare(WorkerAction::Noop {}),
        }
    }
}

impl Drop for PolicyBundle {
    fn drop(&mut self) {
        self.manager.finish("episode finished");
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Engine(#[from] crate::engine::EngineError),
    #[error(transparent)]
    Bridge(#[from] BridgeError),
}

/// Run one seeded episode of `scenario` under `spec` to termination.
pub fn run_episode(
    scenario: &ScenarioDoc,
    spec: &PolicySpec,
    config: crate::engine::EpisodeConfig,
) -> Result<crate::engine::Trace, RunError> {
    let engine = crate::engine::Engine::new(scenario, config.clone(), spec.name())?;
    let mut actors = PolicyBundle::for_scenario(spec, scenario, config.seed)?;
    Ok(engine.run(&mut actors)?)
}

#[cfg(test)]
pub(crate) mod fixtures {
    use crate::actions::{observe_manager, ManagerObservation};
    use crate::model::{
        Deliverable, DeliverableTier, DecompositionTemplate, PreferenceVector, Scoring, TaskDraft, TaskId, Worker,
        WorkerKind, WorkflowState,
    };

    fn deliverable(tier: DeliverableTier, points: f64) -> Deliverable {
        Deliverable {
            tier,
            points,
            scoring: Scoring::Binary,
            min_quality: 0.0,
        }
    }

    /// Workers `analyst` (analysis) and `writer` (writing); leaves `memo`
    /// (writing, 5 pts) and `model` (analysis, 10 pts) ready, `review`
    /// waiting on `model`, and a templated `plan`.
    pub fn state() -> WorkflowState {
        let prefs = PreferenceVector::from_pairs([("quality", 0.5), ("speed", 0.5)]).unwrap();
        let mut s = WorkflowState::new(prefs, 100);
        s.add_worker(Worker::new("analyst", WorkerKind::Ai).with_skill("analysis", 0.9))
            .unwrap();
        s.add_worker(Worker::new("writer", WorkerKind::SimulatedHuman).with_skill("writing", 0.8))
            .unwrap();
        let drafts = [
            TaskDraft::new("Memo", 2.0, 1.0)
                .with_id("memo")
                .with_skills(["writing"])
                .with_deliverable(deliverable(DeliverableTier::Supporting, 5.0)),
            TaskDraft::new("Model", 4.0, 2.0)
                .with_id("model")
                .with_skills(["analysis"])
                .with_deliverable(deliverable(DeliverableTier::Major, 10.0)),
            TaskDraft::new("Review", 1.0, 1.0).with_id("review").with_skills(["writing"]),
            TaskDraft::new("Plan", 8.0, 3.0).with_id("plan").with_skills(["analysis"]),
        ];
        for d in drafts {
            s.add_task(d).unwrap();
        }
        s.add_dependency(&TaskId::new("model"), &TaskId::new("review")).unwrap();
        s.add_dependency(&TaskId::new("memo"), &TaskId::new("plan")).unwrap();
        let plan = s.task(&TaskId::new("plan")).unwrap().clone();
        s.add_template(TaskId::new("plan"), DecompositionTemplate::generic(&plan)).unwrap();
        s
    }

    pub fn obs(state: &WorkflowState) -> ManagerObservation {
        observe_manager(state)
    }
}
