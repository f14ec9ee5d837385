use std::collections::{BTreeMap, VecDeque};

use crate::actions::{ActionResult, ManagerAction, StakeholderAction, WorkerAction};
use crate::model::{AgentId, WorkflowState};

use super::{ActionRecord, Actors, Decision, Engine, EngineError, Role, Trace};

/// A recorded digest that the re-run did not reproduce.
#[derive(Clone, Debug, PartialEq)]
pub struct Mismatch {
    pub seq: u64,
    pub expected: String,
    pub actual: String,
}

pub struct ReplayReport {
    pub state: WorkflowState,
    /// The trace regenerated by re-applying the recorded actions.
    pub trace: Trace,
    pub mismatches: Vec<Mismatch>,
}

impl ReplayReport {
    pub fn is_faithful(&self) -> bool {
        self.mismatches.is_empty()
    }
}

type Key = (u64, Role, AgentId);

/// Feeds recorded actions back into the engine.
struct Recorded {
    queue: BTreeMap<Key, VecDeque<ActionRecord>>,
}

impl Recorded {
    fn new(records: &[ActionRecord]) -> Self {
        let mut queue: BTreeMap<Key, VecDeque<ActionRecord>> = BTreeMap::new();
        for r in records {
            queue
                .entry((r.timestep, r.role, r.agent.clone()))
                .or_default()
                .push_back(r.clone());
        }
        Self { queue }
    }

    fn take(&mut self, t: u64, role: Role, agent: &AgentId) -> Option<ActionRecord> {
        self.queue.get_mut(&(t, role, agent.clone()))?.pop_front()
    }
}

impl Actors for Recorded {
    fn stakeholder(&mut self, state: &WorkflowState) -> Decision<StakeholderAction> {
        let agent = AgentId::new(crate::model::STAKEHOLDER_ID);
        self.take(state.timestep, Role::Stakeholder, &agent)
            .and_then(|r| r.stakeholder_action().map(|a| Decision::new(a, r.rationale)))
            .unwrap_or_else(|| Decision::bare(StakeholderAction::Noop {}))
    }

    fn manager(&mut self, state: &WorkflowState, _last: Option<&ActionResult>) -> Decision<ManagerAction> {
        let agent = AgentId::new(crate::model::MANAGER_ID);
        self.take(state.timestep, Role::Manager, &agent)
            .and_then(|r| r.manager_action().map(|a| Decision::new(a, r.rationale)))
            .unwrap_or_else(|| Decision::bare(ManagerAction::Noop {}))
    }

    fn worker(&mut self, state: &WorkflowState, worker: &AgentId) -> Decision<WorkerAction> {
        self.take(state.timestep, Role::Worker, worker)
            .and_then(|r| r.worker_action().map(|a| Decision::new(a, r.rationale)))
            .unwrap_or_else(|| Decision::bare(WorkerAction::Noop {}))
    }
}

/// Rebuild the episode from the trace header and re-apply every recorded
/// action, comparing digests record by record.
pub fn replay(trace: &Trace) -> Result<ReplayReport, EngineError> {
    let header = &trace.header;
    let mut engine = Engine::new(&header.scenario, header.config.clone(), header.policy.clone())?;
    let mut mismatches = Vec::new();
    if engine.state().digest() != header.initial_digest {
        mismatches.push(Mismatch {
            seq: 0,
            expected: header.initial_digest.clone(),
            actual: engine.state().digest(),
        });
    }
    let mut actors = Recorded::new(&trace.records);
    while !engine.is_terminated() {
        engine.step(&mut actors)?;
    }
    let state = engine.state().clone();
    let regenerated = engine.finish();

    let n = trace.records.len().max(regenerated.records.len());
    for i in 0..n {
        let expected = trace.records.get(i);
        let actual = regenerated.records.get(i);
        let same = match (expected, actual) {
            (Some(e), Some(a)) => e.digest == a.digest && e.timestep == a.timestep && e.agent == a.agent,
            _ => false,
        };
        if !same {
            mismatches.push(Mismatch {
                seq: i as u64 + 1,
                expected: expected.map(|r| r.digest.clone()).unwrap_or_default(),
                actual: actual.map(|r| r.digest.clone()).unwrap_or_default(),
            });
        }
    }
    if let (Some(e), Some(a)) = (&trace.footer, &regenerated.footer) {
        if e.final_digest != a.final_digest {
            mismatches.push(Mismatch {
                seq: u64::MAX,
                expected: e.final_digest.clone(),
                actual: a.final_digest.clone(),
            });
        }
    }
    Ok(ReplayReport {
        state,
        trace: regenerated,
        mismatches,
    })
}
