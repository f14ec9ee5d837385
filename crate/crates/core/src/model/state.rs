use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{
    Artifact, ArtifactId, Assignment, Constraint, Edge, Message, ModelError, PreferenceVector,
    Task, TaskDraft, TaskGraph, TaskId, TaskStatus, Worker, AgentId,
};

pub const MANAGER_ID: &str = "manager";
pub const STAKEHOLDER_ID: &str = "stakeholder";

/// Scenario-authored subtask list with internal ordering (index pairs).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecompositionTemplate {
    pub subtasks: Vec<TaskDraft>,
    #[serde(default)]
    pub ordering: Vec<[usize; 2]>,
}

impl DecompositionTemplate {
    /// `ceil(hours / 4)` equal, sequential slices of the task.
    pub fn generic(task: &Task) -> Self {
        let parts = ((task.estimated_hours / 4.0).ceil() as usize).max(1);
        let subtasks = (1..=parts)
            .map(|k| TaskDraft {
                name: format!("{} (part {k}/{parts})", task.name),
                description: task.description.clone(),
                estimated_hours: task.estimated_hours / parts as f64,
                estimated_cost: task.estimated_cost / parts as f64,
                required_skills: task.required_skills.clone(),
                ..TaskDraft::default()
            })
            .collect();
        let ordering = (1..parts).map(|k| [k - 1, k]).collect();
        Self { subtasks, ordering }
    }

    pub fn validate(&self, task: &TaskId) -> Result<(), ModelError> {
        if self.subtasks.is_empty() {
            return Err(ModelError::EmptyTemplate(task.clone()));
        }
        let invalid = |reason: String| ModelError::InvalidTemplate {
            task: task.clone(),
            reason,
        };
        for sub in &self.subtasks {
            sub.validate().map_err(|e| invalid(e.to_string()))?;
            if sub.deliverable.is_some() {
                return Err(invalid("subtasks cannot carry deliverable tiers".into()));
            }
        }
        let n = self.subtasks.len();
        let mut indegree = vec![0usize; n];
        for &[a, b] in &self.ordering {
            if a >= n || b >= n {
                return Err(invalid(format!("ordering [{a}, {b}] out of range for {n} subtasks")));
            }
            if a == b {
                return Err(invalid(format!("ordering [{a}, {b}] is a self-edge")));
            }
            indegree[b] += 1;
        }
        let mut queue: VecDeque<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut seen = 0;
        while let Some(i) = queue.pop_front() {
            seen += 1;
            for &[a, b] in &self.ordering {
                if a == i {
                    indegree[b] -= 1;
                    if indegree[b] == 0 {
                        queue.push_back(b);
                    }
                }
            }
        }
        if seen != n {
            return Err(invalid("ordering contains a cycle".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DecomposeOutcome {
    Created(Vec<TaskId>),
    /// The task was already decomposed; nothing changed.
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EndRequest {
    pub timestep: u64,
    pub reason: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    DeliverablesCompleted,
    ActionCapReached,
    TimestepCapReached,
    EndRequestApproved,
    HardConstraintViolated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Termination {
    pub reason: TerminationReason,
    pub timestep: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

/// Snapshot of the whole workflow: graph, workers, communications,
/// artifacts and preferences, plus the clock and episode bookkeeping.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkflowState {
    pub graph: TaskGraph,
    pub workers: BTreeMap<AgentId, Worker>,
    pub comms: Vec<Message>,
    pub artifacts: BTreeMap<ArtifactId, Artifact>,
    pub preferences: PreferenceVector,
    pub constraints: Vec<Constraint>,
    pub timestep: u64,
    pub manager_action_count: u32,
    pub max_manager_actions: u32,
    pub cost_incurred: f64,
    pub templates: BTreeMap<TaskId, DecompositionTemplate>,
    pub pending_end_request: Option<EndRequest>,
    pub terminated: Option<Termination>,
    next_task_seq: u64,
    next_artifact_seq: u64,
}

/// The part of the state covered by digests: everything except the
/// manager's action counter, so read-only actions leave the digest unchanged.
#[derive(Serialize)]
struct DigestView<'a> {
    graph: &'a TaskGraph,
    workers: &'a BTreeMap<AgentId, Worker>,
    comms: &'a [Message],
    artifacts: &'a BTreeMap<ArtifactId, Artifact>,
    preferences: &'a PreferenceVector,
    timestep: u64,
    cost_incurred: f64,
    pending_end_request: &'a Option<EndRequest>,
    terminated: &'a Option<Termination>,
}

struct HashWriter(Sha256);

impl std::io::Write for HashWriter {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        self.0.update(buf);
        Ok(buf.len())
    }

    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}

impl WorkflowState {
    pub fn new(preferences: PreferenceVector, max_manager_actions: u32) -> Self {
        Self {
            graph: TaskGraph::new(),
            workers: BTreeMap::new(),
            comms: Vec::new(),
            artifacts: BTreeMap::new(),
            preferences,
            constraints: Vec::new(),
            timestep: 0,
            manager_action_count: 0,
            max_manager_actions,
            cost_incurred: 0.0,
            templates: BTreeMap::new(),
            pending_end_request: None,
            terminated: None,
            next_task_seq: 1,
            next_artifact_seq: 1,
        }
    }

    /// Hex prefix of the SHA-256 of the canonical state encoding.
    pub fn digest(&self) -> String {
        let view = DigestView {
            graph: &self.graph,
            workers: &self.workers,
            comms: &self.comms,
            artifacts: &self.artifacts,
            preferences: &self.preferences,
            timestep: self.timestep,
            cost_incurred: self.cost_incurred,
            pending_end_request: &self.pending_end_request,
            terminated: &self.terminated,
        };
        let mut writer = HashWriter(Sha256::new());
        serde_json::to_writer(&mut writer, &view).expect("state serializes");
        let bytes = writer.0.finalize();
        bytes[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn is_terminated(&self) -> bool {
        self.terminated.is_some()
    }

    pub fn remaining_actions(&self) -> u32 {
        self.max_manager_actions.saturating_sub(self.manager_action_count)
    }

    pub fn task(&self, id: &TaskId) -> Result<&Task, ModelError> {
        self.graph.task(id).ok_or_else(|| ModelError::UnknownTask(id.clone()))
    }

    fn task_mut(&mut self, id: &TaskId) -> Result<&mut Task, ModelError> {
        self.graph
            .task_mut(id)
            .ok_or_else(|| ModelError::UnknownTask(id.clone()))
    }

    pub fn worker(&self, id: &AgentId) -> Result<&Worker, ModelError> {
        self.workers
            .get(id)
            .ok_or_else(|| ModelError::UnknownWorker(id.clone()))
    }

    pub fn active_workers(&self) -> impl Iterator<Item = &Worker> {
        self.workers.values().filter(|w| w.active)
    }

    pub fn is_known_agent(&self, id: &AgentId) -> bool {
        id.as_str() == MANAGER_ID || id.as_str() == STAKEHOLDER_ID || self.workers.contains_key(id)
    }

    pub fn add_worker(&mut self, mut worker: Worker) -> Result<(), ModelError> {
        worker.validate()?;
        if self.is_known_agent(&worker.id) {
            return Err(ModelError::InvalidWorker {
                worker: worker.id.clone(),
                reason: "duplicate agent id".into(),
            });
        }
        worker.active = worker.is_scheduled_at(self.timestep);
        worker.assigned_task_ids.clear();
        self.workers.insert(worker.id.clone(), worker);
        Ok(())
    }

    pub fn add_constraint(&mut self, constraint: Constraint) -> Result<(), ModelError> {
        constraint.validate()?;
        for id in constraint.predicate.referenced_tasks() {
            self.task(id)?;
        }
        self.constraints.push(constraint);
        Ok(())
    }

    pub fn add_template(&mut self, task: TaskId, template: DecompositionTemplate) -> Result<(), ModelError> {
        self.task(&task)?;
        template.validate(&task)?;
        self.templates.insert(task, template);
        Ok(())
    }

    pub fn set_preferences(&mut self, preferences: PreferenceVector) {
        self.preferences = preferences;
    }

    fn fresh_task_id(&mut self) -> TaskId {
        loop {
            let id = TaskId::new(format!("task-{}", self.next_task_seq));
            self.next_task_seq += 1;
            if !self.graph.contains(&id) {
                return id;
            }
        }
    }

    /// Insert a new PENDING task. Readiness is refreshed by the next
    /// structural change or engine step.
    pub fn add_task(&mut self, mut draft: TaskDraft) -> Result<TaskId, ModelError> {
        draft.validate()?;
        let id = match draft.id.take() {
            Some(id) if self.graph.contains(&id) => return Err(ModelError::DuplicateTask(id)),
            Some(id) => id,
            None => self.fresh_task_id(),
        };
        let task = Task::from_draft(id.clone(), draft, self.timestep);
        self.graph.insert(task);
        Ok(id)
    }

    fn descendants(&self, id: &TaskId) -> Vec<TaskId> {
        let mut out = Vec::new();
        let mut stack = vec![id.clone()];
        while let Some(cur) = stack.pop() {
            if let Some(t) = self.graph.task(&cur) {
                for child in &t.subtask_ids {
                    out.push(child.clone());
                    stack.push(child.clone());
                }
            }
        }
        out
    }

    fn ancestors(&self, id: &TaskId) -> Vec<TaskId> {
        let mut out = Vec::new();
        let mut cur = self.graph.task(id).and_then(|t| t.parent_id.clone());
        while let Some(p) = cur {
            cur = self.graph.task(&p).and_then(|t| t.parent_id.clone());
            out.push(p);
        }
        out
    }

    /// Mark a task (and its subtasks) REMOVED, dropping incident edges and
    /// releasing any assignment.
    pub fn remove_task(&mut self, id: &TaskId) -> Result<Vec<TaskId>, ModelError> {
        let task = self.task(id)?;
        if task.is_removed() {
            return Err(ModelError::TaskRemoved(id.clone()));
        }
        let mut doomed = vec![id.clone()];
        doomed.extend(self.descendants(id));
        for t in &doomed {
            if self.task(t)?.status == TaskStatus::Running {
                return Err(ModelError::TaskRunning(t.clone()));
            }
        }
        let parent = self.task(id)?.parent_id.clone();
        for t in &doomed {
            self.release(t);
            self.graph.detach(t);
            let task = self.task_mut(t)?;
            task.status = TaskStatus::Removed;
            task.execution = None;
        }
        if let Some(parent) = parent {
            if let Some(p) = self.graph.task_mut(&parent) {
                p.subtask_ids.retain(|c| c != id);
            }
        }
        self.refresh();
        Ok(doomed)
    }

    /// Tasks reachable from `from` once subtask hierarchy is taken into
    /// account: a child must finish before its parent, and a parent's
    /// prerequisites gate all of its descendants.
    fn hierarchy_path(&self, from: &TaskId, to: &TaskId) -> Option<Vec<TaskId>> {
        let mut parent: BTreeMap<TaskId, TaskId> = BTreeMap::new();
        let mut seen: BTreeSet<TaskId> = BTreeSet::from([from.clone()]);
        let mut queue = VecDeque::from([from.clone()]);
        while let Some(node) = queue.pop_front() {
            if &node == to {
                let mut path = vec![node.clone()];
                let mut cur = node;
                while let Some(p) = parent.get(&cur) {
                    path.push(p.clone());
                    cur = p.clone();
                }
                path.reverse();
                return Some(path);
            }
            let mut next: Vec<TaskId> = Vec::new();
            for dep in self.graph.dependents(&node) {
                next.push(dep.clone());
                next.extend(self.descendants(dep));
            }
            if let Some(p) = self.graph.task(&node).and_then(|t| t.parent_id.clone()) {
                next.push(p);
            }
            for n in next {
                if seen.insert(n.clone()) {
                    parent.insert(n.clone(), node.clone());
                    queue.push_back(n);
                }
            }
        }
        None
    }

    pub fn add_dependency(&mut self, prereq: &TaskId, dependent: &TaskId) -> Result<(), ModelError> {
        self.graph.check_new_edge(prereq, dependent)?;
        if self.ancestors(prereq).contains(dependent) || self.ancestors(dependent).contains(prereq) {
            return Err(ModelError::Cycle {
                path: vec![prereq.clone(), dependent.clone(), prereq.clone()],
            });
        }
        if let Some(mut path) = self.hierarchy_path(dependent, prereq) {
            path.push(dependent.clone());
            return Err(ModelError::Cycle { path });
        }
        let dep = self.task(dependent)?;
        if matches!(dep.status, TaskStatus::Running | TaskStatus::Completed) {
            return Err(ModelError::DependentStarted(dependent.clone()));
        }
        self.graph.insert_edge(Edge::new(prereq.clone(), dependent.clone()));
        self.refresh();
        Ok(())
    }

    pub fn remove_dependency(&mut self, prereq: &TaskId, dependent: &TaskId) -> Result<(), ModelError> {
        let edge = Edge::new(prereq.clone(), dependent.clone());
        if !self.graph.delete_edge(&edge) {
            return Err(ModelError::MissingEdge {
                prereq: prereq.clone(),
                dependent: dependent.clone(),
            });
        }
        self.refresh();
        Ok(())
    }

    /// Prerequisites of the task and of all its ancestors are complete.
    pub fn prerequisites_met(&self, id: &TaskId) -> bool {
        std::iter::once(id.clone())
            .chain(self.ancestors(id))
            .all(|t| self.graph.prerequisites_complete(&t))
    }

    /// Open leaves whose (inherited) prerequisites are all complete.
    pub fn ready_set(&self) -> BTreeSet<TaskId> {
        self.graph
            .tasks()
            .filter(|t| !t.is_composite() && t.status.is_open())
            .filter(|t| self.prerequisites_met(&t.id))
            .map(|t| t.id.clone())
            .collect()
    }

    /// Split a leaf into subtasks. Already-decomposed tasks are skipped.
    pub fn decompose_task(
        &mut self,
        id: &TaskId,
        template: &DecompositionTemplate,
    ) -> Result<DecomposeOutcome, ModelError> {
        let task = self.task(id)?;
        if task.is_composite() {
            return Ok(DecomposeOutcome::Skipped);
        }
        if !(task.status.is_open() || task.status == TaskStatus::Failed) {
            return Err(ModelError::WrongStatus {
                task: id.clone(),
                status: task.status,
                expected: "PENDING, READY or FAILED",
            });
        }
        template.validate(id)?;
        let parent_skills = task.required_skills.clone();
        let dependents: Vec<TaskId> = self.graph.dependents(id).cloned().collect();

        let mut children = Vec::with_capacity(template.subtasks.len());
        for (k, sub) in template.subtasks.iter().enumerate() {
            let mut child_id = TaskId::new(format!("{id}.{}", k + 1));
            let mut bump = 1;
            while self.graph.contains(&child_id) {
                child_id = TaskId::new(format!("{id}.{}-{bump}", k + 1));
                bump += 1;
            }
            let mut draft = sub.clone();
            draft.id = None;
            if draft.required_skills.is_empty() {
                draft.required_skills = parent_skills.clone();
            }
            let mut child = Task::from_draft(child_id.clone(), draft, self.timestep);
            child.parent_id = Some(id.clone());
            self.graph.insert(child);
            children.push(child_id);
        }
        for &[a, b] in &template.ordering {
            self.graph
                .insert_edge(Edge::new(children[a].clone(), children[b].clone()));
        }
        let sinks: Vec<usize> = (0..children.len())
            .filter(|i| !template.ordering.iter().any(|[a, _]| a == i))
            .collect();
        for dep in &dependents {
            for &s in &sinks {
                self.graph.insert_edge(Edge::new(children[s].clone(), dep.clone()));
            }
        }
        self.release(id);
        let parent = self.task_mut(id)?;
        parent.subtask_ids = children.clone();
        parent.status = TaskStatus::Pending;
        parent.execution = None;
        parent.progress = 0.0;
        self.refresh();
        Ok(DecomposeOutcome::Created(children))
    }

    pub fn refine_task(
        &mut self,
        id: &TaskId,
        instructions: &str,
        new_hours: Option<f64>,
        new_cost: Option<f64>,
    ) -> Result<(), ModelError> {
        let task = self.task(id)?;
        match task.status {
            TaskStatus::Completed => return Err(ModelError::TaskCompleted(id.clone())),
            TaskStatus::Removed => return Err(ModelError::TaskRemoved(id.clone())),
            _ => {}
        }
        for v in [new_hours, new_cost].into_iter().flatten() {
            if !v.is_finite() || v < 0.0 {
                return Err(ModelError::InvalidDraft(format!("estimate {v} must be non-negative")));
            }
        }
        let task = self.task_mut(id)?;
        task.set_manager_instructions(instructions);
        if let Some(h) = new_hours {
            task.estimated_hours = h;
        }
        if let Some(c) = new_cost {
            task.estimated_cost = c;
        }
        if task.status == TaskStatus::Failed {
            task.status = TaskStatus::Pending;
            task.progress = 0.0;
            task.execution = None;
        }
        self.refresh();
        Ok(())
    }

    /// Route a READY leaf to an active worker with spare capacity.
    pub fn assign_task(&mut self, task_id: &TaskId, worker_id: &AgentId) -> Result<(), ModelError> {
        let task = self.task(task_id)?;
        if task.is_composite() {
            return Err(ModelError::CompositeTask(task_id.clone()));
        }
        if !self.ready_set().contains(task_id) {
            return Err(ModelError::WrongStatus {
                task: task_id.clone(),
                status: task.status,
                expected: "READY",
            });
        }
        let worker = self.worker(worker_id)?;
        if !worker.active {
            return Err(ModelError::WorkerInactive(worker_id.clone()));
        }
        if task.owner.as_ref() == Some(worker_id) {
            return Ok(());
        }
        if !worker.has_capacity() {
            return Err(ModelError::WorkerAtCapacity(worker_id.clone()));
        }
        self.bind(task_id, worker_id);
        Ok(())
    }

    /// Bulk-assign every unassigned, unstarted leaf to one worker, ignoring
    /// capacity. Without an explicit worker the active worker with the
    /// smallest id is used.
    pub fn assign_all_pending(&mut self, worker_id: Option<&AgentId>) -> Result<(AgentId, Vec<TaskId>), ModelError> {
        let worker_id = match worker_id {
            Some(id) => {
                let w = self.worker(id)?;
                if !w.active {
                    return Err(ModelError::WorkerInactive(id.clone()));
                }
                id.clone()
            }
            None => self
                .active_workers()
                .map(|w| w.id.clone())
                .next()
                .ok_or(ModelError::NoActiveWorkers)?,
        };
        let targets: Vec<TaskId> = self
            .graph
            .tasks()
            .filter(|t| !t.is_composite() && t.status.is_open() && t.owner.is_none())
            .map(|t| t.id.clone())
            .collect();
        for t in &targets {
            self.bind(t, &worker_id);
        }
        Ok((worker_id, targets))
    }

    fn bind(&mut self, task_id: &TaskId, worker_id: &AgentId) {
        self.release(task_id);
        let now = self.timestep;
        if let Some(task) = self.graph.task_mut(task_id) {
            task.owner = Some(worker_id.clone());
            task.assignment_history.push(Assignment {
                timestep: now,
                worker: worker_id.clone(),
            });
        }
        if let Some(w) = self.workers.get_mut(worker_id) {
            w.hold(task_id.clone());
        }
    }

    /// Drop the task's owner. A running task reverts to READY and keeps its progress.
    pub(crate) fn release(&mut self, task_id: &TaskId) {
        let Some(task) = self.graph.task_mut(task_id) else {
            return;
        };
        let owner = task.owner.take();
        if task.status == TaskStatus::Running {
            task.status = TaskStatus::Ready;
            task.execution = None;
        }
        if let Some(owner) = owner {
            if let Some(w) = self.workers.get_mut(&owner) {
                w.release(task_id);
            }
        }
    }

    pub fn post_message(
        &mut self,
        sender: AgentId,
        receiver: Option<AgentId>,
        content: impl Into<String>,
        related_task_id: Option<TaskId>,
        reply_to: Option<usize>,
    ) -> Result<usize, ModelError> {
        if !self.is_known_agent(&sender) {
            return Err(ModelError::UnknownAgent(sender));
        }
        if let Some(r) = &receiver {
            if !self.is_known_agent(r) {
                return Err(ModelError::UnknownAgent(r.clone()));
            }
        }
        if let Some(id) = reply_to {
            if id >= self.comms.len() {
                return Err(ModelError::UnknownMessage(id));
            }
        }
        if let Some(t) = &related_task_id {
            self.task(t)?;
        }
        self.comms.push(Message {
            sender,
            receiver,
            content: content.into(),
            timestep: self.timestep,
            related_task_id,
            reply_to,
        });
        Ok(self.comms.len() - 1)
    }

    pub(crate) fn register_artifact(&mut self, mut artifact: Artifact) -> ArtifactId {
        let id = ArtifactId(format!("art-{}", self.next_artifact_seq));
        self.next_artifact_seq += 1;
        artifact.id = id.clone();
        self.artifacts.insert(id.clone(), artifact);
        id
    }

    pub fn artifacts_for<'a>(&'a self, task: &'a TaskId) -> impl Iterator<Item = &'a Artifact> + 'a {
        self.artifacts
            .values()
            .filter(move |a| &a.producing_task_id == task)
    }

    pub fn composite_has_artifacts(&self, id: &TaskId) -> bool {
        self.descendants(id)
            .iter()
            .any(|d| self.artifacts_for(d).next().is_some())
    }

    /// Quality of a task's output: its best artifact, or the mean over a
    /// composite's subtasks.
    pub fn output_quality(&self, id: &TaskId) -> Option<f64> {
        let task = self.graph.task(id)?;
        if task.is_composite() {
            let qs: Vec<f64> = task
                .subtask_ids
                .iter()
                .filter_map(|c| self.output_quality(c))
                .collect();
            if qs.is_empty() || qs.len() < task.subtask_ids.len() {
                return None;
            }
            return Some(qs.iter().sum::<f64>() / qs.len() as f64);
        }
        self.artifacts_for(id).map(|a| a.quality).reduce(f64::max)
    }

    pub(crate) fn task_entry(&mut self, id: &TaskId) -> Option<&mut Task> {
        self.graph.task_mut(id)
    }

    /// Roll composite progress/status up from subtasks (deepest first) and
    /// re-derive PENDING/READY for leaves.
    pub(crate) fn refresh(&mut self) {
        let mut composites: Vec<(usize, TaskId)> = self
            .graph
            .tasks()
            .filter(|t| t.is_composite() && !t.is_removed())
            .map(|t| (self.ancestors(&t.id).len(), t.id.clone()))
            .collect();
        composites.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
        for (_, id) in composites {
            let children: Vec<(f64, TaskStatus, Option<u64>)> = self
                .task(&id)
                .map(|t| t.subtask_ids.clone())
                .unwrap_or_default()
                .iter()
                .filter_map(|c| self.graph.task(c))
                .map(|c| (c.progress, c.status, c.completed_at))
                .collect();
            let all_done = children.iter().all(|c| c.1 == TaskStatus::Completed);
            let mean = children.iter().map(|c| c.0).sum::<f64>() / children.len().max(1) as f64;
            let finished_at = children.iter().filter_map(|c| c.2).max();
            if let Some(task) = self.graph.task_mut(&id) {
                if all_done {
                    task.status = TaskStatus::Completed;
                    task.progress = 1.0;
                    task.completed_at = task.completed_at.or(finished_at);
                } else {
                    task.status = TaskStatus::Pending;
                    task.progress = mean.min(1.0 - f64::EPSILON);
                    task.completed_at = None;
                }
            }
        }
        let ready = self.ready_set();
        for task in self.graph.tasks_mut() {
            if task.is_composite() || !task.status.is_open() {
                continue;
            }
            task.status = if ready.contains(&task.id) {
                TaskStatus::Ready
            } else {
                TaskStatus::Pending
            };
        }
    }

    /// Deliverable-bearing tasks.
    pub fn deliverables(&self) -> impl Iterator<Item = &Task> {
        self.graph.tasks().filter(|t| t.deliverable.is_some())
    }

    /// All deliverables completed; without deliverables, all live tasks completed.
    pub fn work_complete(&self) -> bool {
        if self.deliverables().next().is_some() {
            self.deliverables().all(Task::is_completed)
        } else {
            self.graph
                .tasks()
                .filter(|t| !t.is_removed())
                .all(Task::is_completed)
        }
    }

    /// Toggle workers whose churn schedule changes at the current clock.
    /// Returns `(worker, now_active)` for each toggle.
    pub(crate) fn apply_churn(&mut self) -> Vec<(AgentId, bool)> {
        let now = self.timestep;
        let toggles: Vec<(AgentId, bool)> = self
            .workers
            .values()
            .filter(|w| w.active != w.is_scheduled_at(now))
            .map(|w| (w.id.clone(), !w.active))
            .collect();
        for (id, active) in &toggles {
            if !active {
                let held: Vec<TaskId> = self.workers[id].assigned_task_ids.iter().cloned().collect();
                for t in held {
                    self.release(&t);
                }
            }
            if let Some(w) = self.workers.get_mut(id) {
                w.active = *active;
            }
        }
        toggles
    }

    /// Fraction of deliverable points whose tasks are completed.
    pub fn completed_point_fraction(&self) -> f64 {
        let total: f64 = self.deliverables().filter_map(|t| t.deliverable.as_ref()).map(|d| d.points).sum();
        if total <= 0.0 {
            return 0.0;
        }
        let done: f64 = self
            .deliverables()
            .filter(|t| t.is_completed())
            .filter_map(|t| t.deliverable.as_ref())
            .map(|d| d.points)
            .sum();
        done / total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{WorkerKind, Worker};

    fn state() -> WorkflowState {
        WorkflowState::new(PreferenceVector::from_pairs([("quality", 1.0)]).unwrap(), 100)
    }

    fn t(id: &str) -> TaskId {
        TaskId::new(id)
    }

    fn add(s: &mut WorkflowState, id: &str, hours: f64) -> TaskId {
        s.add_task(TaskDraft::new(id.to_uppercase(), hours, 10.0).with_id(id)).unwrap()
    }

    fn complete(s: &mut WorkflowState, id: &str) {
        let task = s.task_entry(&t(id)).unwrap();
        task.status = TaskStatus::Completed;
        task.progress = 1.0;
        task.completed_at = Some(0);
        s.refresh();
    }

    #[test]
    fn add_task_into_empty_graph_is_pending() {
        let mut s = state();
        let id = s.add_task(TaskDraft::new("Write brief", 4.0, 200.0)).unwrap();
        assert_eq!(s.graph.len(), 1);
        assert_eq!(s.task(&id).unwrap().status, TaskStatus::Pending);
    }

    #[test]
    fn add_task_leaves_edges_alone() {
        let mut s = state();
        for id in ["a", "b", "c"] {
            add(&mut s, id, 1.0);
        }
        s.add_dependency(&t("a"), &t("b")).unwrap();
        let before: Vec<Edge> = s.graph.edges().cloned().collect();
        s.add_task(TaskDraft::new("D", 2.0, 1.0)).unwrap();
        assert_eq!(s.graph.len(), 4);
        assert_eq!(s.graph.edges().cloned().collect::<Vec<_>>(), before);
    }

    #[test]
    fn add_task_rejects_bad_drafts() {
        let mut s = state();
        assert!(matches!(
            s.add_task(TaskDraft::new("x", -1.0, 0.0)),
            Err(ModelError::InvalidDraft(_))
        ));
        add(&mut s, "a", 1.0);
        assert_eq!(
            s.add_task(TaskDraft::new("again", 1.0, 0.0).with_id("a")),
            Err(ModelError::DuplicateTask(t("a")))
        );
    }

    #[test]
    fn remove_leaf_releases_worker_and_edges() {
        let mut s = state();
        add(&mut s, "a", 1.0);
        add(&mut s, "b", 1.0);
        s.add_dependency(&t("a"), &t("b")).unwrap();
        s.add_worker(Worker::new("w", WorkerKind::Ai)).unwrap();
        complete(&mut s, "a");
        s.assign_task(&t("b"), &AgentId::new("w")).unwrap();
        s.remove_task(&t("b")).unwrap();
        assert_eq!(s.graph.edge_count(), 0);
        assert!(s.workers[&AgentId::new("w")].assigned_task_ids.is_empty());
        assert_eq!(s.task(&t("b")).unwrap().owner, None);
        assert_eq!(s.task(&t("b")).unwrap().status, TaskStatus::Removed);
    }

    #[test]
    fn remove_prereq_frees_dependents() {
        let mut s = state();
        for id in ["a", "b", "c"] {
            add(&mut s, id, 1.0);
        }
        s.add_dependency(&t("a"), &t("b")).unwrap();
        s.add_dependency(&t("a"), &t("c")).unwrap();
        assert!(s.ready_set().is_disjoint(&BTreeSet::from([t("b"), t("c")])));
        s.remove_task(&t("a")).unwrap();
        assert_eq!(s.ready_set(), BTreeSet::from([t("b"), t("c")]));
        assert_eq!(s.task(&t("b")).unwrap().status, TaskStatus::Ready);
    }

    #[test]
    fn remove_unknown_and_running() {
        let mut s = state();
        assert_eq!(s.remove_task(&t("nope")), Err(ModelError::UnknownTask(t("nope"))));
        add(&mut s, "a", 1.0);
        s.task_entry(&t("a")).unwrap().status = TaskStatus::Running;
        assert_eq!(s.remove_task(&t("a")), Err(ModelError::TaskRunning(t("a"))));
    }

    #[test]
    fn dependency_errors() {
        let mut s = state();
        add(&mut s, "a", 1.0);
        add(&mut s, "b", 1.0);
        add(&mut s, "c", 1.0);
        s.add_dependency(&t("a"), &t("b")).unwrap();
        match s.add_dependency(&t("b"), &t("a")) {
            Err(ModelError::Cycle { path }) => assert_eq!(path, vec![t("a"), t("b"), t("a")]),
            other => panic!("expected cycle, got {other:?}"),
        }
        assert_eq!(s.add_dependency(&t("a"), &t("a")), Err(ModelError::SelfDependency(t("a"))));
        s.add_dependency(&t("b"), &t("c")).unwrap();
        s.add_dependency(&t("a"), &t("c")).unwrap();
        assert_eq!(s.graph.edge_count(), 3);
        assert!(s.graph.topological_order().is_ok());
    }

    #[test]
    fn remove_dependency_readiness() {
        let mut s = state();
        for id in ["a", "b", "c"] {
            add(&mut s, id, 1.0);
        }
        s.add_dependency(&t("a"), &t("c")).unwrap();
        s.add_dependency(&t("b"), &t("c")).unwrap();
        s.remove_dependency(&t("a"), &t("c")).unwrap();
        assert_eq!(s.task(&t("c")).unwrap().status, TaskStatus::Pending);
        s.remove_dependency(&t("b"), &t("c")).unwrap();
        assert_eq!(s.task(&t("c")).unwrap().status, TaskStatus::Ready);
        assert!(matches!(
            s.remove_dependency(&t("b"), &t("c")),
            Err(ModelError::MissingEdge { .. })
        ));
    }

    #[test]
    fn decompose_into_five_and_skip_second_time() {
        let mut s = state();
        add(&mut s, "p", 20.0);
        add(&mut s, "d", 1.0);
        s.add_dependency(&t("p"), &t("d")).unwrap();
        let template = DecompositionTemplate::generic(s.task(&t("p")).unwrap());
        assert_eq!(template.subtasks.len(), 5);
        let out = s.decompose_task(&t("p"), &template).unwrap();
        let DecomposeOutcome::Created(children) = out else {
            panic!("expected subtasks")
        };
        assert_eq!(children.len(), 5);
        assert!(s.task(&t("p")).unwrap().is_composite());
        assert!(!s.ready_set().contains(&t("p")));
        assert_eq!(s.ready_set(), BTreeSet::from([children[0].clone()]));
        assert!(s.graph.has_edge(&children[4], &t("d")));

        let before = s.clone();
        assert_eq!(s.decompose_task(&t("p"), &template).unwrap(), DecomposeOutcome::Skipped);
        assert_eq!(s, before);

        let empty = DecompositionTemplate::default();
        add(&mut s, "q", 3.0);
        assert_eq!(s.decompose_task(&t("q"), &empty), Err(ModelError::EmptyTemplate(t("q"))));
    }

    #[test]
    fn composite_completes_when_children_do() {
        let mut s = state();
        add(&mut s, "p", 8.0);
        let template = DecompositionTemplate::generic(s.task(&t("p")).unwrap());
        let DecomposeOutcome::Created(children) = s.decompose_task(&t("p"), &template).unwrap() else {
            unreachable!()
        };
        complete(&mut s, children[0].as_str());
        assert_eq!(s.task(&t("p")).unwrap().status, TaskStatus::Pending);
        assert!((s.task(&t("p")).unwrap().progress - 0.5).abs() < 1e-9);
        complete(&mut s, children[1].as_str());
        assert_eq!(s.task(&t("p")).unwrap().status, TaskStatus::Completed);
        assert_eq!(s.task(&t("p")).unwrap().progress, 1.0);
    }

    #[test]
    fn edges_through_hierarchy_cannot_deadlock() {
        let mut s = state();
        add(&mut s, "a", 1.0);
        add(&mut s, "p", 8.0);
        s.add_dependency(&t("a"), &t("p")).unwrap();
        let template = DecompositionTemplate::generic(s.task(&t("p")).unwrap());
        let DecomposeOutcome::Created(children) = s.decompose_task(&t("p"), &template).unwrap() else {
            unreachable!()
        };
        assert!(matches!(s.add_dependency(&children[0], &t("a")), Err(ModelError::Cycle { .. })));
        assert!(matches!(s.add_dependency(&children[0], &t("p")), Err(ModelError::Cycle { .. })));
        assert!(!s.ready_set().contains(&children[0]));
        complete(&mut s, "a");
        assert!(s.ready_set().contains(&children[0]));
    }

    #[test]
    fn refine_replaces_block() {
        let mut s = state();
        add(&mut s, "a", 1.0);
        s.refine_task(&t("a"), "one", None, None).unwrap();
        s.refine_task(&t("a"), "two", Some(3.0), None).unwrap();
        let task = s.task(&t("a")).unwrap();
        assert_eq!(task.manager_instructions(), Some("two"));
        assert_eq!(task.estimated_hours, 3.0);
        complete(&mut s, "a");
        assert_eq!(s.refine_task(&t("a"), "x", None, None), Err(ModelError::TaskCompleted(t("a"))));
    }

    #[test]
    fn ready_set_basics() {
        let mut s = state();
        assert!(s.ready_set().is_empty());
        add(&mut s, "a", 1.0);
        add(&mut s, "b", 1.0);
        s.add_dependency(&t("a"), &t("b")).unwrap();
        complete(&mut s, "a");
        assert_eq!(s.ready_set(), BTreeSet::from([t("b")]));
    }

    #[test]
    fn assignment_rules() {
        let mut s = state();
        add(&mut s, "a", 1.0);
        add(&mut s, "b", 1.0);
        add(&mut s, "c", 1.0);
        s.add_dependency(&t("a"), &t("c")).unwrap();
        s.add_worker(Worker::new("w1", WorkerKind::Ai)).unwrap();
        s.add_worker(Worker::new("w2", WorkerKind::Ai).with_schedule(5, None)).unwrap();
        let w1 = AgentId::new("w1");
        assert!(matches!(s.assign_task(&t("c"), &w1), Err(ModelError::WrongStatus { .. })));
        assert_eq!(s.assign_task(&t("a"), &AgentId::new("w2")), Err(ModelError::WorkerInactive(AgentId::new("w2"))));
        s.assign_task(&t("a"), &w1).unwrap();
        assert_eq!(s.assign_task(&t("b"), &w1), Err(ModelError::WorkerAtCapacity(w1.clone())));
        let (who, tasks) = s.assign_all_pending(None).unwrap();
        assert_eq!(who, w1);
        assert_eq!(tasks, vec![t("b"), t("c")]);
        assert_eq!(s.workers[&w1].assigned_task_ids.len(), 3);
        assert_eq!(s.workers[&w1].peak_load, 3);
    }

    #[test]
    fn churn_releases_running_work() {
        let mut s = state();
        add(&mut s, "a", 4.0);
        s.add_worker(Worker::new("w", WorkerKind::SimulatedHuman).with_schedule(0, Some(3))).unwrap();
        let w = AgentId::new("w");
        s.assign_task(&t("a"), &w).unwrap();
        {
            let task = s.task_entry(&t("a")).unwrap();
            task.status = TaskStatus::Running;
            task.progress = 0.5;
        }
        s.timestep = 3;
        assert_eq!(s.apply_churn(), vec![(w.clone(), false)]);
        let task = s.task(&t("a")).unwrap();
        assert_eq!(task.status, TaskStatus::Ready);
        assert_eq!(task.owner, None);
        assert_eq!(task.progress, 0.5);
        assert!(!s.workers[&w].active);
    }

    #[test]
    fn digest_ignores_action_counter() {
        let mut s = state();
        add(&mut s, "a", 1.0);
        let d = s.digest();
        s.manager_action_count += 1;
        assert_eq!(s.digest(), d);
        s.post_message(AgentId::new(MANAGER_ID), None, "hi", None, None).unwrap();
        assert_ne!(s.digest(), d);
    }
}
