//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

pub mod fuzz;

use std::collections::{BTreeMap, BTreeSet};

use magym_core::model::{TaskId, TaskStatus, WorkflowState};
use petgraph::algo::is_cyclic_directed;
use petgraph::graph::DiGraph;

/// The dependency graph as a petgraph digraph over every task.
pub fn digraph(state: &WorkflowState) -> (DiGraph<TaskId, ()>, BTreeMap<TaskId, petgraph::graph::NodeIndex>) {
    let mut g = DiGraph::new();
    let mut index = BTreeMap::new();
    for t in state.graph.tasks() {
        index.insert(t.id.clone(), g.add_node(t.id.clone()));
    }
    for e in state.graph.edges() {
        if let (Some(&a), Some(&b)) = (index.get(&e.prereq), index.get(&e.dependent)) {
            g.add_edge(a, b, ());
        }
    }
    (g, index)
}

/// Would adding `prereq -> dependent` close a cycle in the plain edge graph?
pub fn edge_would_cycle(state: &WorkflowState, prereq: &TaskId, dependent: &TaskId) -> bool {
    let (mut g, index) = digraph(state);
    match (index.get(prereq), index.get(dependent)) {
        (Some(&a), Some(&b)) => {
            g.add_edge(a, b, ());
            is_cyclic_directed(&g)
        }
        _ => false,
    }
}

pub fn ancestors(state: &WorkflowState, id: &TaskId) -> Vec<TaskId> {
    let mut out = Vec::new();
    let mut cur = state.graph.task(id).and_then(|t| t.parent_id.clone());
    while let Some(p) = cur {
        cur = state.graph.task(&p).and_then(|t| t.parent_id.clone());
        out.push(p);
    }
    out
}

/// Ready set by exhaustive definition: open leaves whose own prerequisites
/// and every ancestor's prerequisites are completed.
pub fn brute_force_ready(state: &WorkflowState) -> BTreeSet<TaskId> {
    let completed = |id: &TaskId| state.graph.task(id).is_some_and(|t| t.status == TaskStatus::Completed);
    state
        .graph
        .tasks()
        .filter(|t| t.subtask_ids.is_empty())
        .filter(|t| matches!(t.status, TaskStatus::Pending | TaskStatus::Ready))
        .filter(|t| {
            let mut scope = vec![t.id.clone()];
            scope.extend(ancestors(state, &t.id));
            scope.iter().all(|x| {
                state
                    .graph
                    .edges()
                    .filter(|e| &e.dependent == x)
                    .all(|e| completed(&e.prereq))
            })
        })
        .map(|t| t.id.clone())
        .collect()
}

/// Structural invariants that must hold after every mutation.
/// Statuses under which the owner still occupies a capacity slot.
fn live(s: TaskStatus) -> bool {
    matches!(s, TaskStatus::Pending | TaskStatus::Ready | TaskStatus::Running)
}

pub fn check_structure(state: &WorkflowState) -> Result<(), String> {
    let (g, _) = digraph(state);
    if is_cyclic_directed(&g) {
        return Err("dependency graph has a cycle".into());
    }
    for e in state.graph.edges() {
        for end in [&e.prereq, &e.dependent] {
            match state.graph.task(end) {
                None => return Err(format!("dangling edge endpoint `{end}`")),
                Some(t) if t.status == TaskStatus::Removed => {
                    return Err(format!("edge touches removed task `{end}`"))
                }
                _ => {}
            }
        }
    }
    let hist: usize = state.graph.status_histogram().values().sum();
    if hist != state.graph.len() {
        return Err(format!("histogram covers {hist} of {} tasks", state.graph.len()));
    }
    for t in state.graph.tasks() {
        for c in &t.subtask_ids {
            let child = state.graph.task(c).ok_or(format!("missing subtask `{c}`"))?;
            if child.parent_id.as_ref() != Some(&t.id) {
                return Err(format!("subtask `{c}` does not point back to `{}`", t.id));
            }
        }
        if let Some(p) = t.parent_id.as_ref().filter(|_| t.status != TaskStatus::Removed) {
            let parent = state.graph.task(p).ok_or(format!("missing parent `{p}`"))?;
            if !parent.subtask_ids.contains(&t.id) {
                return Err(format!("parent `{p}` does not list `{}`", t.id));
            }
        }
        if let Some(owner) = &t.owner {
            let w = state.workers.get(owner).ok_or(format!("unknown owner `{owner}`"))?;
            // A completed task keeps its owner for attribution but frees the slot.
            let holds = w.assigned_task_ids.contains(&t.id);
            if live(t.status) != holds {
                return Err(format!("owner `{owner}` and `{}` ({:?}) disagree on holding", t.id, t.status));
            }
        }
    }
    for w in state.workers.values() {
        for id in &w.assigned_task_ids {
            let t = state.graph.task(id).ok_or(format!("worker holds missing task `{id}`"))?;
            if t.owner.as_ref() != Some(&w.id) || !live(t.status) {
                return Err(format!("worker `{}` holds `{id}` ({:?}, owned by {:?})", w.id, t.status, t.owner));
            }
        }
    }
    if state.ready_set() != brute_force_ready(state) {
        return Err("ready set disagrees with the exhaustive definition".into());
    }
    Ok(())
}

/// Status fields agree with readiness and composite rollup (true after each engine step).
pub fn check_statuses(state: &WorkflowState) -> Result<(), String> {
    let ready = brute_force_ready(state);
    for t in state.graph.tasks() {
        if t.subtask_ids.is_empty() {
            if matches!(t.status, TaskStatus::Pending | TaskStatus::Ready)
                && (t.status == TaskStatus::Ready) != ready.contains(&t.id)
            {
                return Err(format!("`{}` is {:?} but readiness says {}", t.id, t.status, ready.contains(&t.id)));
            }
        } else if t.status != TaskStatus::Removed {
            let done = t
                .subtask_ids
                .iter()
                .all(|c| state.graph.task(c).is_some_and(|c| c.status == TaskStatus::Completed));
            if done != (t.status == TaskStatus::Completed) {
                return Err(format!("composite `{}` is {:?} with children done = {done}", t.id, t.status));
            }
        }
    }
    Ok(())
}

/// No task vanishes, REMOVED is final, and a completed leaf can only be removed.
pub fn check_monotone(before: &WorkflowState, after: &WorkflowState) -> Result<(), String> {
    if after.graph.len() < before.graph.len() {
        return Err("tasks disappeared from the graph".into());
    }
    for t in before.graph.tasks() {
        let now = after.graph.task(&t.id).ok_or(format!("task `{}` vanished", t.id))?;
        if t.status == TaskStatus::Removed && now.status != TaskStatus::Removed {
            return Err(format!("removed task `{}` came back as {:?}", t.id, now.status));
        }
        let kept = matches!(now.status, TaskStatus::Completed | TaskStatus::Removed);
        if t.status == TaskStatus::Completed && t.subtask_ids.is_empty() && !kept {
            return Err(format!("completed leaf `{}` became {:?}", t.id, now.status));
        }
    }
    Ok(())
}
