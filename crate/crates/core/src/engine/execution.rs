//! Stochastic task execution: durations, quality, artifacts.

use crate::model::{
    AgentId, Artifact, ArtifactId, ArtifactKind, ExecutionProgress, Task, TaskId, TaskStatus,
    Worker, WorkerKind, WorkflowState,
};
use crate::rng::RngStream;

use super::{EpisodeConfig, ExecutionModel};

/// Slack for floating-point noise before rounding a duration up.
const CEIL_SLACK: f64 = 1e-9;

/// Timesteps needed for `hours` of work by a worker of `kind`, at least 1.
pub fn sample_duration(
    rng: &mut RngStream,
    estimated_hours: f64,
    kind: WorkerKind,
    model: &ExecutionModel,
    hours_per_timestep: f64,
) -> u32 {
    let multiplier = rng.lognormal(0.0, model.duration_sigma);
    let latency = match kind {
        WorkerKind::SimulatedHuman => model.human_latency,
        WorkerKind::Ai => 1.0,
    };
    let steps = (estimated_hours * multiplier * latency / hours_per_timestep - CEIL_SLACK).ceil();
    if steps.is_finite() && steps >= 1.0 {
        steps.min(u32::MAX as f64) as u32
    } else {
        1
    }
}

/// Output quality: skill match plus Gaussian noise, clamped to [0, 1].
pub fn sample_quality(rng: &mut RngStream, worker: &Worker, task: &Task, model: &ExecutionModel) -> f64 {
    let noise = rng.normal(0.0, model.quality_noise);
    (worker.skill_match(&task.required_skills) + noise).clamp(0.0, 1.0)
}

fn attempt(task: &Task) -> usize {
    task.assignment_history.len()
}

/// Outcome of one timestep of work on a task.
#[derive(Clone, Debug, PartialEq)]
pub enum WorkOutcome {
    Progressed,
    Completed(ArtifactId),
    Failed,
}

/// Advance `task_id` by one timestep of work by `worker_id`. The caller has
/// already checked ownership and readiness.
pub(crate) fn work_on(
    state: &mut WorkflowState,
    config: &EpisodeConfig,
    worker_id: &AgentId,
    task_id: &TaskId,
) -> WorkOutcome {
    let now = state.timestep;
    let worker = state.workers[worker_id].clone();
    let model = &config.execution;

    let task = state.task(task_id).expect("checked by caller").clone();
    let mut exec = match &task.execution {
        Some(e) if &e.worker == worker_id => e.clone(),
        _ => {
            let mut rng = RngStream::substream(config.seed, task_id.as_str(), "duration");
            let full = sample_duration(&mut rng, task.estimated_hours, worker.kind, model, config.hours_per_timestep);
            let remaining = ((1.0 - task.progress) * f64::from(full) - CEIL_SLACK).ceil().max(1.0) as u32;
            ExecutionProgress {
                worker: worker_id.clone(),
                total_steps: remaining,
                done_steps: 0,
                progress_at_start: task.progress,
            }
        }
    };
    exec.done_steps += 1;
    state.cost_incurred += worker.cost_rate * config.hours_per_timestep;

    if exec.done_steps < exec.total_steps {
        let progress = exec.progress_at_start
            + (1.0 - exec.progress_at_start) * f64::from(exec.done_steps) / f64::from(exec.total_steps);
        let entry = state.task_entry(task_id).expect("task exists");
        entry.status = TaskStatus::Running;
        entry.started_at.get_or_insert(now);
        entry.progress = progress.min(1.0 - f64::EPSILON);
        entry.execution = Some(exec);
        return WorkOutcome::Progressed;
    }

    let tag = format!("{task_id}#{}", attempt(&task));
    let failed = model.failure_rate > 0.0
        && RngStream::substream(config.seed, &tag, "failure").bernoulli(model.failure_rate);
    if let Some(w) = state.workers.get_mut(worker_id) {
        w.release(task_id);
    }
    let entry = state.task_entry(task_id).expect("task exists");
    entry.started_at.get_or_insert(now);
    entry.execution = None;
    if failed {
        entry.status = TaskStatus::Failed;
        entry.owner = None;
        entry.progress = exec.progress_at_start;
        return WorkOutcome::Failed;
    }
    let mut rng = RngStream::substream(config.seed, &tag, "quality");
    let quality = sample_quality(&mut rng, &worker, &task, model);
    entry.status = TaskStatus::Completed;
    entry.progress = 1.0;
    entry.completed_at = Some(now + 1);
    let kind = ArtifactKind::for_skills(&task.required_skills);
    let artifact = Artifact {
        id: ArtifactId(String::new()),
        producing_task_id: task_id.clone(),
        producer: worker_id.clone(),
        kind,
        content: format!("{kind:?} output for \"{}\" by {}", task.name, worker.name),
        quality,
        created_timestep: now + 1,
    };
    WorkOutcome::Completed(state.register_artifact(artifact))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_durations() {
        let mut rng = RngStream::from_seed(1);
        let mut model = ExecutionModel::deterministic();
        assert_eq!(sample_duration(&mut rng, 4.0, WorkerKind::Ai, &model, 1.0), 4);
        model.human_latency = 3.0;
        assert_eq!(sample_duration(&mut rng, 4.0, WorkerKind::SimulatedHuman, &model, 1.0), 12);
        assert_eq!(sample_duration(&mut rng, 0.0, WorkerKind::Ai, &model, 1.0), 1);
        assert_eq!(sample_duration(&mut rng, 4.5, WorkerKind::Ai, &model, 2.0), 3);
    }

    #[test]
    fn quality_is_skill_match_without_noise() {
        let model = ExecutionModel::deterministic();
        let mut rng = RngStream::from_seed(3);
        let worker = Worker::new("w", WorkerKind::Ai).with_skill("a", 0.8).with_skill("b", 0.6);
        let mut task = Task::from_draft(
            "t".into(),
            crate::model::TaskDraft::new("t", 1.0, 1.0).with_skills(["a", "b"]),
            0,
        );
        assert!((sample_quality(&mut rng, &worker, &task, &model) - 0.7).abs() < 1e-12);
        task.required_skills = vec!["z".into()];
        assert_eq!(sample_quality(&mut rng, &worker, &task, &model), 0.0);
        let expert = Worker::new("e", WorkerKind::Ai).with_skill("z", 1.0);
        assert_eq!(sample_quality(&mut rng, &expert, &task, &model), 1.0);
    }
}
