use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::evaluation::Measure;
use crate::model::{
    ConstraintKind, Predicate, PreferenceVector, TaskId, MANAGER_ID, STAKEHOLDER_ID,
};

use super::ScenarioDoc;

pub const MIN_DELIVERABLES: usize = 10;
pub const MAX_DELIVERABLES: usize = 25;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    /// Path into the document, e.g. `edges[3].dependent`.
    pub location: String,
    pub message: String,
}

impl Diagnostic {
    fn error(location: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Error,
            location: location.into(),
            message: message.into(),
        }
    }

    fn warning(location: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Warning,
            location: location.into(),
            message: message.into(),
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let level = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{level}: {}: {}", self.location, self.message)
    }
}

struct Checker<'a> {
    doc: &'a ScenarioDoc,
    out: Vec<Diagnostic>,
    task_ids: BTreeSet<&'a TaskId>,
}

impl<'a> Checker<'a> {
    fn err(&mut self, loc: impl Into<String>, msg: impl Into<String>) {
        self.out.push(Diagnostic::error(loc, msg));
    }

    fn require_task(&mut self, loc: String, id: &TaskId) {
        if !self.task_ids.contains(id) {
            self.err(loc, format!("unknown task `{id}`"));
        }
    }

    fn header(&mut self) {
        if self.doc.id.trim().is_empty() {
            self.err("id", "must not be empty");
        }
        if self.doc.title.trim().is_empty() {
            self.err("title", "must not be empty");
        }
    }

    fn tasks(&mut self) {
        let mut seen = BTreeSet::new();
        for (i, t) in self.doc.tasks.iter().enumerate() {
            let loc = format!("tasks[{i}]");
            match &t.id {
                None => self.err(format!("{loc}.id"), "task id is required"),
                Some(id) if !seen.insert(id) => self.err(format!("{loc}.id"), format!("duplicate task id `{id}`")),
                Some(_) => {}
            }
            if let Err(e) = t.validate() {
                let field = if t.deliverable.is_some() && e.to_string().contains("deliverable") {
                    format!("{loc}.deliverable")
                } else {
                    loc.clone()
                };
                self.err(field, e.to_string());
            }
        }
        let deliverables = self.doc.tasks.iter().filter(|t| t.deliverable.is_some()).count();
        if deliverables > 0 && !(MIN_DELIVERABLES..=MAX_DELIVERABLES).contains(&deliverables) {
            self.err(
                "tasks",
                format!("{deliverables} deliverables; expected {MIN_DELIVERABLES}-{MAX_DELIVERABLES} when tiers are used"),
            );
        }
    }

    fn edges(&mut self) {
        let mut seen = BTreeSet::new();
        let mut clean: Vec<(&TaskId, &TaskId)> = Vec::new();
        for (i, e) in self.doc.edges.iter().enumerate() {
            let loc = format!("edges[{i}]");
            let known = self.task_ids.contains(&e.prereq) && self.task_ids.contains(&e.dependent);
            self.require_task(format!("{loc}.prereq"), &e.prereq);
            self.require_task(format!("{loc}.dependent"), &e.dependent);
            if e.prereq == e.dependent {
                self.err(loc, format!("task `{}` cannot depend on itself", e.prereq));
            } else if !seen.insert((&e.prereq, &e.dependent)) {
                self.err(loc, format!("duplicate edge `{}` -> `{}`", e.prereq, e.dependent));
            } else if known {
                clean.push((&e.prereq, &e.dependent));
            }
        }
        if let Some(cycle) = find_cycle(&clean) {
            let path: Vec<&str> = cycle.iter().map(|t| t.as_str()).collect();
            self.err("edges", format!("dependency cycle: {}", path.join(" -> ")));
        }
    }

    fn templates(&mut self) {
        for (task, template) in &self.doc.templates {
            let loc = format!("templates.{task}");
            self.require_task(loc.clone(), task);
            if let Err(e) = template.validate(task) {
                self.err(loc, e.to_string());
            }
        }
    }

    fn workers(&mut self) {
        if self.doc.workers.is_empty() {
            self.err("workers", "at least one worker is required");
        }
        let mut seen = BTreeSet::new();
        for (i, w) in self.doc.workers.iter().enumerate() {
            let loc = format!("workers[{i}]");
            let id = w.id.as_str();
            if id == MANAGER_ID || id == STAKEHOLDER_ID {
                self.err(format!("{loc}.id"), format!("`{id}` is reserved"));
            } else if !seen.insert(&w.id) {
                self.err(format!("{loc}.id"), format!("duplicate worker id `{id}`"));
            }
            if w.capacity == 0 {
                self.err(format!("{loc}.capacity"), "capacity must be at least 1");
            }
            if let Err(e) = w.to_worker().validate() {
                self.err(loc, e.to_string());
            }
        }
    }

    fn constraints(&mut self) {
        let agents: BTreeSet<&str> = self
            .doc
            .workers
            .iter()
            .map(|w| w.id.as_str())
            .chain([MANAGER_ID, STAKEHOLDER_ID])
            .collect();
        let mut seen = BTreeSet::new();
        for (i, c) in self.doc.constraints.iter().enumerate() {
            let loc = format!("constraints[{i}]");
            if c.id.trim().is_empty() {
                self.err(format!("{loc}.id"), "must not be empty");
            } else if !seen.insert(&c.id) {
                self.err(format!("{loc}.id"), format!("duplicate constraint id `{}`", c.id));
            }
            if let Err(e) = c.validate() {
                self.err(loc.clone(), e.to_string());
            }
            for t in c.predicate.referenced_tasks() {
                self.require_task(format!("{loc}.predicate"), t);
            }
            if let Predicate::MessageSentBefore { receiver, .. } = &c.predicate {
                if !agents.contains(receiver.as_str()) {
                    self.err(format!("{loc}.predicate.receiver"), format!("unknown agent `{receiver}`"));
                }
            }
            if c.kind == ConstraintKind::Hard && matches!(c.predicate, Predicate::BudgetBelow { amount } if amount == 0.0) {
                self.out.push(Diagnostic::warning(loc, "zero budget is violated by any paid work"));
            }
        }
    }

    fn rubrics(&mut self, objectives: &BTreeSet<String>) {
        let mut seen = BTreeSet::new();
        for (i, r) in self.doc.rubrics.iter().enumerate() {
            let loc = format!("rubrics[{i}]");
            if r.name.trim().is_empty() {
                self.err(format!("{loc}.name"), "must not be empty");
            } else if !seen.insert(&r.name) {
                self.err(format!("{loc}.name"), format!("duplicate rubric name `{}`", r.name));
            }
            if !(r.max_score.is_finite() && r.max_score > 0.0) {
                self.err(format!("{loc}.max_score"), "must be positive");
            }
            for t in r.measure.referenced_tasks() {
                self.require_task(format!("{loc}.measure.task_ids"), t);
            }
            if matches!(&r.measure, Measure::DeliverableCompletion { task_ids } if task_ids.is_empty()) {
                self.err(format!("{loc}.measure.task_ids"), "must list at least one task");
            }
            if !objectives.is_empty() && !objectives.contains(&r.objective) {
                self.out.push(Diagnostic::warning(
                    format!("{loc}.objective"),
                    format!("objective `{}` has no preference weight", r.objective),
                ));
            }
        }
    }

    fn preferences(&mut self) -> BTreeSet<String> {
        let schedule = &self.doc.preferences;
        if schedule.is_empty() {
            self.err("preferences", "schedule needs at least one entry");
            return BTreeSet::new();
        }
        if schedule[0].timestep != 0 {
            self.err("preferences[0].timestep", "first entry must be at t=0");
        }
        let keys: BTreeSet<String> = schedule[0].weights.keys().cloned().collect();
        for (i, entry) in schedule.iter().enumerate() {
            let loc = format!("preferences[{i}]");
            if i > 0 && entry.timestep <= schedule[i - 1].timestep {
                self.err(format!("{loc}.timestep"), "timesteps must be strictly increasing");
            }
            if let Err(e) = PreferenceVector::new(entry.weights.clone()) {
                self.err(format!("{loc}.weights"), e.to_string());
            }
            let here: BTreeSet<String> = entry.weights.keys().cloned().collect();
            if here != keys {
                self.err(format!("{loc}.weights"), "objectives differ from the first entry");
            }
        }
        keys
    }

    fn settings(&mut self) {
        let s = &self.doc.stakeholder;
        if !(0.0..=1.0).contains(&s.approval_threshold) {
            self.err("stakeholder.approval_threshold", "must lie in [0, 1]");
        }
        if let Err(e) = self.doc.default_config(0).validate() {
            self.err("episode", e.to_string());
        }
    }
}

/// Any cycle among `edges`, as a closed path.
fn find_cycle<'a>(edges: &[(&'a TaskId, &'a TaskId)]) -> Option<Vec<&'a TaskId>> {
    let mut adj: BTreeMap<&TaskId, Vec<&TaskId>> = BTreeMap::new();
    for &(a, b) in edges {
        adj.entry(a).or_default().push(b);
    }
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut mark: BTreeMap<&TaskId, u8> = BTreeMap::new();
    fn dfs<'a>(
        n: &'a TaskId,
        adj: &BTreeMap<&'a TaskId, Vec<&'a TaskId>>,
        mark: &mut BTreeMap<&'a TaskId, u8>,
        stack: &mut Vec<&'a TaskId>,
    ) -> Option<Vec<&'a TaskId>> {
        mark.insert(n, 1);
        stack.push(n);
        for &m in adj.get(n).map(Vec::as_slice).unwrap_or(&[]) {
            match mark.get(m).copied().unwrap_or(0) {
                1 => {
                    let start = stack.iter().position(|x| *x == m).unwrap_or(0);
                    let mut cycle = stack[start..].to_vec();
                    cycle.push(m);
                    return Some(cycle);
                }
                0 => {
                    if let Some(c) = dfs(m, adj, mark, stack) {
                        return Some(c);
                    }
                }
                _ => {}
            }
        }
        stack.pop();
        mark.insert(n, 2);
        None
    }
    let nodes: Vec<&TaskId> = adj.keys().copied().collect();
    for n in nodes {
        if mark.get(n).copied().unwrap_or(0) == 0 {
            if let Some(c) = dfs(n, &adj, &mut mark, &mut Vec::new()) {
                return Some(c);
            }
        }
    }
    None
}

/// Check every document invariant. Empty (of errors) exactly when the
/// document can be loaded into an episode.
pub fn validate_scenario(doc: &ScenarioDoc) -> Vec<Diagnostic> {
    let mut c = Checker {
        doc,
        out: Vec::new(),
        task_ids: doc.tasks.iter().filter_map(|t| t.id.as_ref()).collect(),
    };
    c.header();
    c.tasks();
    c.edges();
    c.templates();
    c.workers();
    c.constraints();
    let objectives = c.preferences();
    c.rubrics(&objectives);
    c.settings();
    let mut out = c.out;
    if !out.iter().any(Diagnostic::is_error) {
        // Anything the structural checks missed still surfaces here.
        if let Err(e) = doc.build_state(&doc.default_config(0)) {
            out.push(Diagnostic::error("document", e.to_string()));
        }
    }
    out
}

