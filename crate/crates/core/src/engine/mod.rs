//! The discrete-timestep episode loop.
//!
//! Each timestep runs stakeholder, manager and workers in that order (each
//! observing the state left by the previous one), then executes work,
//! advances the clock, applies churn, checks hard constraints and finally
//! the termination conditions.

mod config;
mod execution;
mod replay;
mod trace;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::actions::{
    apply_manager_action, apply_stakeholder_action, apply_worker_action, ActionError,
    ActionResult, ManagerAction, StakeholderAction, WorkerAction,
};
use crate::evaluation::{self, measure_fraction, EpisodeView, RunCondition};
use crate::model::{
    AgentId, CheckPhase, ConstraintKind, ModelError, TaskId, Termination, TerminationReason,
    WorkflowState, MANAGER_ID, STAKEHOLDER_ID,
};
use crate::scenario::{Diagnostic, ScenarioDoc};

pub use config::{EpisodeConfig, ExecutionModel, DEFAULT_MAX_MANAGER_ACTIONS, DEFAULT_MAX_TIMESTEPS};
pub use execution::{sample_duration, sample_quality, WorkOutcome};
pub use replay::{replay, Mismatch, ReplayReport};
pub use trace::{ActionRecord, RecordStatus, Role, Trace, TraceError, TraceFooter, TraceHeader, TRACE_FORMAT};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid episode config: {0}")]
    Config(String),
    #[error("scenario failed validation:\n{}", format_diagnostics(.0))]
    InvalidScenario(Vec<Diagnostic>),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("episode has already terminated")]
    Terminated,
}

fn format_diagnostics(diags: &[Diagnostic]) -> String {
    diags.iter().map(|d| format!("  {d}")).collect::<Vec<_>>().join("\n")
}

/// An action together with the policy's stated reason for it.
#[derive(Clone, Debug, PartialEq)]
pub struct Decision<A> {
    pub action: A,
    pub rationale: String,
}

impl<A> Decision<A> {
    pub fn new(action: A, rationale: impl Into<String>) -> Self {
        Self {
            action,
            rationale: rationale.into(),
        }
    }

    pub fn bare(action: A) -> Self {
        Self::new(action, String::new())
    }
}

/// Supplies every agent's action for a timestep.
pub trait Actors {
    fn stakeholder(&mut self, state: &WorkflowState) -> Decision<StakeholderAction>;
    fn manager(&mut self, state: &WorkflowState, last: Option<&ActionResult>) -> Decision<ManagerAction>;
    fn worker(&mut self, state: &WorkflowState, worker: &AgentId) -> Decision<WorkerAction>;
}

pub struct Engine {
    scenario: ScenarioDoc,
    config: EpisodeConfig,
    policy: String,
    state: WorkflowState,
    initial_digest: String,
    records: Vec<ActionRecord>,
    last_result: Option<ActionResult>,
    samples: BTreeMap<String, Vec<f64>>,
}

impl Engine {
    pub fn new(scenario: &ScenarioDoc, config: EpisodeConfig, policy: impl Into<String>) -> Result<Self, EngineError> {
        config.validate()?;
        let diagnostics = scenario.validate();
        if diagnostics.iter().any(Diagnostic::is_error) {
            return Err(EngineError::InvalidScenario(diagnostics));
        }
        let state = scenario.build_state(&config)?;
        let mut engine = Self {
            scenario: scenario.clone(),
            config,
            policy: policy.into(),
            initial_digest: state.digest(),
            state,
            records: Vec::new(),
            last_result: None,
            samples: BTreeMap::new(),
        };
        engine.check_termination();
        Ok(engine)
    }

    pub fn state(&self) -> &WorkflowState {
        &self.state
    }

    pub fn config(&self) -> &EpisodeConfig {
        &self.config
    }

    pub fn scenario(&self) -> &ScenarioDoc {
        &self.scenario
    }

    pub fn records(&self) -> &[ActionRecord] {
        &self.records
    }

    pub fn is_terminated(&self) -> bool {
        self.state.is_terminated()
    }

    fn record(
        &mut self,
        role: Role,
        agent: AgentId,
        action: serde_json::Value,
        rationale: String,
        error: Option<String>,
    ) {
        self.records.push(ActionRecord {
            seq: self.records.len() as u64 + 1,
            timestep: self.state.timestep,
            agent,
            role,
            action,
            rationale,
            status: if error.is_some() {
                RecordStatus::Rejected
            } else {
                RecordStatus::Ok
            },
            error,
            digest: self.state.digest(),
        });
    }

    /// Advance one timestep.
    pub fn step(&mut self, actors: &mut dyn Actors) -> Result<(), EngineError> {
        if self.state.is_terminated() {
            return Err(EngineError::Terminated);
        }

        let d = actors.stakeholder(&self.state);
        if d.action != (StakeholderAction::Noop {}) {
            let err = apply_stakeholder_action(&mut self.state, &d.action).err();
            let encoded = serde_json::to_value(&d.action).expect("actions serialize");
            self.record(Role::Stakeholder, AgentId::new(STAKEHOLDER_ID), encoded, d.rationale, err.map(|e| e.to_string()));
            if self.state.is_terminated() {
                return Ok(());
            }
        }

        if self.state.remaining_actions() > 0 {
            self.manager_turn(actors);
        }

        let mut work: Vec<(AgentId, Vec<TaskId>)> = Vec::new();
        let active: Vec<AgentId> = self.state.active_workers().map(|w| w.id.clone()).collect();
        for id in active {
            let d = actors.worker(&self.state, &id);
            if d.action == (WorkerAction::Noop {}) {
                continue;
            }
            let result = apply_worker_action(&mut self.state, &id, &d.action);
            let encoded = serde_json::to_value(&d.action).expect("actions serialize");
            match result {
                Ok(tasks) => {
                    self.record(Role::Worker, id.clone(), encoded, d.rationale, None);
                    if !tasks.is_empty() {
                        work.push((id, tasks));
                    }
                }
                Err(e) => self.record(Role::Worker, id, encoded, d.rationale, Some(e.to_string())),
            }
        }

        for (worker, tasks) in &work {
            for task in tasks {
                execution::work_on(&mut self.state, &self.config, worker, task);
            }
        }
        self.state.refresh();

        self.state.timestep += 1;
        self.state.apply_churn();
        self.state.refresh();
        self.check_termination();
        self.sample_rubrics();
        Ok(())
    }

    fn sample_rubrics(&mut self) {
        for rubric in &self.scenario.rubrics {
            if rubric.run_condition != RunCondition::EachTimestep {
                continue;
            }
            if let Some(f) = measure_fraction(&rubric.measure, &self.state, &self.config, &self.records) {
                self.samples.entry(rubric.name.clone()).or_default().push(f);
            }
        }
    }

    fn manager_turn(&mut self, actors: &mut dyn Actors) {
        let d = actors.manager(&self.state, self.last_result.as_ref());
        let result = apply_manager_action(&mut self.state, &d.action);
        self.state.manager_action_count += 1;
        let manager = AgentId::new(MANAGER_ID);
        match result {
            Ok(r) => {
                self.record(Role::Manager, manager, d.action.encode(), d.rationale, None);
                self.last_result = Some(r);
            }
            Err(e) => {
                let failed = rejected_as_failed(&d.action, &e);
                let error = e.to_string();
                self.record(Role::Manager, manager, failed.encode(), d.rationale, Some(error.clone()));
                self.last_result = Some(ActionResult::Rejected { error });
            }
        }
    }

    fn check_termination(&mut self) {
        if self.state.is_terminated() {
            return;
        }
        let hard: Vec<String> = self
            .state
            .constraints
            .iter()
            .filter(|c| c.kind == ConstraintKind::Hard)
            .flat_map(|c| c.check(&self.state, CheckPhase::During))
            .map(|v| format!("{}: {} ({})", v.constraint_id, v.detail, v.subject))
            .collect();
        let (reason, detail) = if !hard.is_empty() {
            (TerminationReason::HardConstraintViolated, Some(hard.join("; ")))
        } else if self.state.work_complete() {
            (TerminationReason::DeliverablesCompleted, None)
        } else if self.state.manager_action_count >= self.state.max_manager_actions {
            (TerminationReason::ActionCapReached, None)
        } else if self.state.timestep >= self.config.max_timesteps {
            (TerminationReason::TimestepCapReached, None)
        } else {
            return;
        };
        self.state.terminated = Some(Termination {
            reason,
            timestep: self.state.timestep,
            detail,
        });
    }

    /// Step until the episode terminates, then assemble the trace.
    pub fn run(mut self, actors: &mut dyn Actors) -> Result<Trace, EngineError> {
        while !self.state.is_terminated() {
            self.step(actors)?;
        }
        Ok(self.finish())
    }

    /// Scoring inputs for the episode so far.
    pub fn view(&self) -> EpisodeView<'_> {
        EpisodeView {
            scenario: &self.scenario,
            config: &self.config,
            state: &self.state,
            records: &self.records,
            samples: &self.samples,
        }
    }

    /// Build the trace. The footer is present only once the episode has terminated.
    pub fn finish(self) -> Trace {
        let footer = self.state.terminated.clone().map(|termination| TraceFooter {
            termination,
            final_timestep: self.state.timestep,
            manager_actions: self.state.manager_action_count,
            final_digest: self.state.digest(),
            metrics: evaluation::evaluate(&self.view()),
        });
        Trace {
            header: TraceHeader {
                format: TRACE_FORMAT.to_string(),
                scenario_id: self.scenario.id.clone(),
                policy: self.policy,
                seed: self.config.seed,
                config: self.config,
                initial_digest: self.initial_digest,
                scenario: self.scenario,
            },
            records: self.records,
            footer,
        }
    }

    pub fn into_state(self) -> WorkflowState {
        self.state
    }
}

fn rejected_as_failed(action: &ManagerAction, error: &ActionError) -> ManagerAction {
    ManagerAction::FailedAction {
        metadata: BTreeMap::from([
            ("attempted".to_string(), action.encode().to_string()),
            ("attempted_type".to_string(), action.kind().as_str().to_string()),
            ("error".to_string(), error.to_string()),
        ]),
    }
}
