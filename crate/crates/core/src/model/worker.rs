use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{AgentId, ModelError, TaskId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorkerKind {
    Ai,
    SimulatedHuman,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Worker {
    pub id: AgentId,
    pub name: String,
    pub kind: WorkerKind,
    pub capabilities: BTreeMap<String, f64>,
    pub cost_rate: f64,
    pub join_timestep: u64,
    pub leave_timestep: Option<u64>,
    pub active: bool,
    pub capacity: u32,
    pub assigned_task_ids: BTreeSet<TaskId>,
    /// Largest number of tasks held at once over the episode.
    pub peak_load: u32,
}

impl Worker {
    pub fn new(id: impl Into<AgentId>, kind: WorkerKind) -> Self {
        let id = id.into();
        Self {
            name: id.to_string(),
            id,
            kind,
            capabilities: BTreeMap::new(),
            cost_rate: 0.0,
            join_timestep: 0,
            leave_timestep: None,
            active: true,
            capacity: 1,
            assigned_task_ids: BTreeSet::new(),
            peak_load: 0,
        }
    }

    pub fn with_skill(mut self, skill: impl Into<String>, proficiency: f64) -> Self {
        self.capabilities.insert(skill.into(), proficiency);
        self
    }

    pub fn with_schedule(mut self, join: u64, leave: Option<u64>) -> Self {
        self.join_timestep = join;
        self.leave_timestep = leave;
        self.active = self.is_scheduled_at(0);
        self
    }

    pub fn with_cost_rate(mut self, rate: f64) -> Self {
        self.cost_rate = rate;
        self
    }

    /// Whether the churn schedule puts this worker on the team at `timestep`.
    pub fn is_scheduled_at(&self, timestep: u64) -> bool {
        self.join_timestep <= timestep && self.leave_timestep.is_none_or(|leave| timestep < leave)
    }

    pub fn proficiency(&self, skill: &str) -> f64 {
        self.capabilities.get(skill).copied().unwrap_or(0.0)
    }

    /// Mean proficiency over the required skills; missing skills count as zero.
    /// A task with no skill requirements is matched fully by anyone.
    pub fn skill_match(&self, required: &[String]) -> f64 {
        skill_match(&self.capabilities, required)
    }

    pub fn has_capacity(&self) -> bool {
        (self.assigned_task_ids.len() as u32) < self.capacity
    }

    pub(crate) fn hold(&mut self, task: TaskId) {
        self.assigned_task_ids.insert(task);
        self.peak_load = self.peak_load.max(self.assigned_task_ids.len() as u32);
    }

    pub(crate) fn release(&mut self, task: &TaskId) {
        self.assigned_task_ids.remove(task);
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let invalid = |reason: String| ModelError::InvalidWorker {
            worker: self.id.clone(),
            reason,
        };
        if self.id.as_str().trim().is_empty() {
            return Err(invalid("id must not be empty".into()));
        }
        for (skill, p) in &self.capabilities {
            if !(0.0..=1.0).contains(p) {
                return Err(invalid(format!("proficiency for `{skill}` is {p}, outside [0, 1]")));
            }
        }
        if !self.cost_rate.is_finite() || self.cost_rate < 0.0 {
            return Err(invalid(format!("cost_rate {} must be non-negative", self.cost_rate)));
        }
        if let Some(leave) = self.leave_timestep {
            if leave <= self.join_timestep {
                return Err(invalid(format!(
                    "leave_timestep {leave} must come after join_timestep {}",
                    self.join_timestep
                )));
            }
        }
        if self.capacity == 0 {
            return Err(invalid("capacity must be at least 1".into()));
        }
        Ok(())
    }
}

pub(crate) fn skill_match(capabilities: &BTreeMap<String, f64>, required: &[String]) -> f64 {
    if required.is_empty() {
        return 1.0;
    }
    let total: f64 = required
        .iter()
        .map(|s| capabilities.get(s).copied().unwrap_or(0.0))
        .sum();
    total / required.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_window_is_half_open() {
        let w = Worker::new("w", WorkerKind::Ai).with_schedule(5, Some(10));
        assert!(!w.is_scheduled_at(4));
        assert!(w.is_scheduled_at(5));
        assert!(w.is_scheduled_at(9));
        assert!(!w.is_scheduled_at(10));
        assert!(!w.active);
    }

    #[test]
    fn skill_match_is_arithmetic_mean() {
        let w = Worker::new("w", WorkerKind::Ai)
            .with_skill("a", 0.8)
            .with_skill("b", 0.6);
        let req = vec!["a".to_string(), "b".to_string()];
        assert!((w.skill_match(&req) - 0.7).abs() < 1e-12);
        assert_eq!(w.skill_match(&["z".to_string()]), 0.0);
        assert_eq!(w.skill_match(&[]), 1.0);
    }

    #[test]
    fn validation_catches_bad_profiles() {
        let w = Worker::new("w", WorkerKind::Ai).with_skill("a", 1.5);
        assert!(w.validate().is_err());
        let w = Worker::new("w", WorkerKind::Ai).with_schedule(10, Some(10));
        assert!(w.validate().is_err());
    }
}
