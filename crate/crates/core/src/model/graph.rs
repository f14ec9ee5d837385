use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::{ModelError, Task, TaskId, TaskStatus};

/// Dependency edge: `dependent` cannot start before `prereq` completes.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub prereq: TaskId,
    pub dependent: TaskId,
}

impl Edge {
    pub fn new(prereq: impl Into<TaskId>, dependent: impl Into<TaskId>) -> Self {
        Self {
            prereq: prereq.into(),
            dependent: dependent.into(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TaskGraph {
    tasks: BTreeMap<TaskId, Task>,
    edges: BTreeSet<Edge>,
}

impl TaskGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn task(&self, id: &TaskId) -> Option<&Task> {
        self.tasks.get(id)
    }

    pub(crate) fn task_mut(&mut self, id: &TaskId) -> Option<&mut Task> {
        self.tasks.get_mut(id)
    }

    pub fn contains(&self, id: &TaskId) -> bool {
        self.tasks.contains_key(id)
    }

    pub fn tasks(&self) -> impl Iterator<Item = &Task> {
        self.tasks.values()
    }

    pub(crate) fn tasks_mut(&mut self) -> impl Iterator<Item = &mut Task> {
        self.tasks.values_mut()
    }

    pub fn task_ids(&self) -> impl Iterator<Item = &TaskId> {
        self.tasks.keys()
    }

    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, prereq: &TaskId, dependent: &TaskId) -> bool {
        self.edges.contains(&Edge {
            prereq: prereq.clone(),
            dependent: dependent.clone(),
        })
    }

    pub(crate) fn insert(&mut self, task: Task) {
        self.tasks.insert(task.id.clone(), task);
    }

    pub(crate) fn insert_edge(&mut self, edge: Edge) {
        self.edges.insert(edge);
    }

    pub(crate) fn delete_edge(&mut self, edge: &Edge) -> bool {
        self.edges.remove(edge)
    }

    /// Drop every edge touching `id`.
    pub(crate) fn detach(&mut self, id: &TaskId) {
        self.edges.retain(|e| &e.prereq != id && &e.dependent != id);
    }

    pub fn prerequisites<'a>(&'a self, id: &'a TaskId) -> impl Iterator<Item = &'a TaskId> + 'a {
        self.edges
            .iter()
            .filter(move |e| &e.dependent == id)
            .map(|e| &e.prereq)
    }

    pub fn dependents<'a>(&'a self, id: &'a TaskId) -> impl Iterator<Item = &'a TaskId> + 'a {
        self.edges
            .iter()
            .filter(move |e| &e.prereq == id)
            .map(|e| &e.dependent)
    }

    fn successors(&self) -> BTreeMap<&TaskId, Vec<&TaskId>> {
        let mut out: BTreeMap<&TaskId, Vec<&TaskId>> = BTreeMap::new();
        for e in &self.edges {
            out.entry(&e.prereq).or_default().push(&e.dependent);
        }
        out
    }

    /// Shortest directed path `from -> ... -> to`, if any.
    pub fn path(&self, from: &TaskId, to: &TaskId) -> Option<Vec<TaskId>> {
        let succ = self.successors();
        let mut parent: BTreeMap<&TaskId, &TaskId> = BTreeMap::new();
        let mut seen: BTreeSet<&TaskId> = BTreeSet::from([from]);
        let mut queue = VecDeque::from([from]);
        while let Some(node) = queue.pop_front() {
            if node == to {
                let mut path = vec![node.clone()];
                let mut cur = node;
                while let Some(p) = parent.get(cur) {
                    path.push((*p).clone());
                    cur = p;
                }
                path.reverse();
                return Some(path);
            }
            for next in succ.get(node).into_iter().flatten() {
                if seen.insert(next) {
                    parent.insert(next, node);
                    queue.push_back(next);
                }
            }
        }
        None
    }

    /// Kahn's algorithm; `Err` carries the tasks left on a cycle.
    pub fn topological_order(&self) -> Result<Vec<TaskId>, Vec<TaskId>> {
        let mut indegree: BTreeMap<&TaskId, usize> = self.tasks.keys().map(|k| (k, 0)).collect();
        for e in &self.edges {
            *indegree.entry(&e.dependent).or_insert(0) += 1;
            indegree.entry(&e.prereq).or_insert(0);
        }
        let succ = self.successors();
        let mut queue: VecDeque<&TaskId> = indegree
            .iter()
            .filter(|(_, d)| **d == 0)
            .map(|(k, _)| *k)
            .collect();
        let mut order = Vec::with_capacity(indegree.len());
        while let Some(node) = queue.pop_front() {
            order.push(node.clone());
            for next in succ.get(node).into_iter().flatten() {
                let d = indegree.get_mut(next).expect("indegree entry");
                *d -= 1;
                if *d == 0 {
                    queue.push_back(next);
                }
            }
        }
        if order.len() == indegree.len() {
            Ok(order)
        } else {
            Err(indegree
                .into_iter()
                .filter(|(_, d)| *d > 0)
                .map(|(k, _)| k.clone())
                .collect())
        }
    }

    /// Reject an edge that is a self-loop, touches a missing or removed task,
    /// or would close a cycle.
    pub fn check_new_edge(&self, prereq: &TaskId, dependent: &TaskId) -> Result<(), ModelError> {
        if prereq == dependent {
            return Err(ModelError::SelfDependency(prereq.clone()));
        }
        for id in [prereq, dependent] {
            match self.tasks.get(id) {
                None => return Err(ModelError::UnknownTask(id.clone())),
                Some(t) if t.is_removed() => return Err(ModelError::TaskRemoved(id.clone())),
                Some(_) => {}
            }
        }
        if let Some(mut path) = self.path(dependent, prereq) {
            path.push(dependent.clone());
            return Err(ModelError::Cycle { path });
        }
        Ok(())
    }

    pub fn prerequisites_complete(&self, id: &TaskId) -> bool {
        self.prerequisites(id)
            .all(|p| self.tasks.get(p).is_some_and(Task::is_completed))
    }

    pub fn status_histogram(&self) -> BTreeMap<TaskStatus, usize> {
        let mut hist: BTreeMap<TaskStatus, usize> = TaskStatus::ALL.iter().map(|s| (*s, 0)).collect();
        for t in self.tasks.values() {
            *hist.entry(t.status).or_insert(0) += 1;
        }
        hist
    }
}
