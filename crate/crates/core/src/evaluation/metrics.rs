use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::actions::StakeholderAction;
use crate::engine::{ActionRecord, EpisodeConfig, RecordStatus};
use crate::model::{
    AgentId, CheckPhase, ConstraintKind, Message, PreferenceVector, Scoring, Task,
    TerminationReason, WorkflowState, MANAGER_ID, STAKEHOLDER_ID,
};
use crate::scenario::ScenarioDoc;

use super::rubric::{measure_fraction, ExternalGrader, Measure, RubricSpec, RunCondition};

/// Engagement and latency penalties saturate at this many units.
pub const PENALTY_SCALE: f64 = 10.0;
/// Window in which a preference change should be acknowledged.
pub const ACK_WINDOW: u64 = 10;
/// Task graph elements (nodes plus edges) per expected coordination message.
pub const COORDINATION_ELEMENTS_PER_MESSAGE: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("preference weights are not on the simplex: {0}")]
    OffSimplex(String),
    #[error("no deliverable points to score")]
    NoDeliverables,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RubricScore {
    pub name: String,
    pub objective: String,
    pub score: f64,
    pub max_score: f64,
    /// `deterministic`, `external` or `default`.
    pub evaluator: String,
}

impl RubricScore {
    pub fn normalized(&self) -> f64 {
        if self.max_score > 0.0 {
            (self.score / self.max_score).clamp(0.0, 1.0)
        } else {
            0.0
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub preference_alignment: f64,
    pub constraint_adherence: f64,
    /// `None` when the scenario defines no deliverables.
    pub goal_achievement: Option<f64>,
    pub stakeholder_management: f64,
    pub completion_time_hours: f64,
    pub hard_violation: bool,
    pub soft_violations: usize,
    pub effective_weights: BTreeMap<String, f64>,
    pub objective_scores: BTreeMap<String, f64>,
    pub rubrics: Vec<RubricScore>,
    pub stakeholder_rubrics: BTreeMap<String, f64>,
}

/// `sum_i w_i * s_i`. The weights must lie on the simplex; missing scores count as 0.
pub fn preference_alignment(weights: &BTreeMap<String, f64>, scores: &BTreeMap<String, f64>) -> Result<f64, EvalError> {
    crate::model::PreferenceVector::new(weights.clone()).map_err(|e| EvalError::OffSimplex(e.to_string()))?;
    Ok(weights
        .iter()
        .map(|(k, w)| w * scores.get(k).copied().unwrap_or(0.0).clamp(0.0, 1.0))
        .sum())
}

/// Duration-weighted mean of piecewise-constant preference vectors. Each
/// segment `(start, vector)` lasts until the next start (or `end`).
pub fn time_weighted_preferences(segments: &[(u64, PreferenceVector)], end: u64) -> BTreeMap<String, f64> {
    let mut out: BTreeMap<String, f64> = BTreeMap::new();
    let Some((first_start, first)) = segments.first() else {
        return out;
    };
    let span = end.saturating_sub(*first_start);
    if span == 0 {
        // The latest vector applies when no time elapsed.
        let last = segments.last().map(|(_, v)| v).unwrap_or(first);
        return last.weights().clone();
    }
    for (i, (start, vector)) in segments.iter().enumerate() {
        let stop = segments.get(i + 1).map_or(end, |(s, _)| *s).min(end);
        let dur = stop.saturating_sub(*start) as f64;
        if dur == 0.0 {
            continue;
        }
        for (k, w) in vector.weights() {
            *out.entry(k.clone()).or_insert(0.0) += w * dur / span as f64;
        }
    }
    out
}

/// 0 on any hard failure; else 1 minus the weighted soft violations, floored at 0.
pub fn constraint_adherence(hard_failed: bool, soft: &[(f64, usize)]) -> f64 {
    if hard_failed {
        return 0.0;
    }
    let penalty: f64 = soft.iter().map(|(w, n)| w * *n as f64).sum();
    (1.0 - penalty).clamp(0.0, 1.0)
}

/// Earned over possible points, from `(points, credit in [0, 1])` pairs.
pub fn goal_achievement(deliverables: &[(f64, f64)]) -> Result<f64, EvalError> {
    let total: f64 = deliverables.iter().map(|(p, _)| p).sum();
    if total <= 0.0 {
        return Err(EvalError::NoDeliverables);
    }
    let earned: f64 = deliverables.iter().map(|(p, c)| p * c.clamp(0.0, 1.0)).sum();
    Ok(earned / total)
}

/// `max(0, 10 - manager_messages)`.
pub fn engagement_penalty(manager_messages: usize) -> f64 {
    (PENALTY_SCALE - manager_messages as f64).max(0.0)
}

/// Credit for one deliverable task.
pub fn deliverable_credit(task: &Task, state: &WorkflowState) -> f64 {
    let Some(d) = &task.deliverable else {
        return 0.0;
    };
    if task.is_removed() {
        return 0.0;
    }
    match d.scoring {
        Scoring::Binary => {
            let quality_ok = d.min_quality <= 0.0 || state.output_quality(&task.id).is_some_and(|q| q >= d.min_quality);
            if task.is_completed() && quality_ok { 1.0 } else { 0.0 }
        }
        Scoring::Graduated => task.progress.clamp(0.0, 1.0),
    }
}

fn to_stakeholder(m: &Message) -> bool {
    m.sender.as_str() == MANAGER_ID && m.receiver.as_ref().is_none_or(|r| r.as_str() == STAKEHOLDER_ID)
}

/// Inputs for the stakeholder-management rubrics.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StakeholderInputs {
    pub manager_to_stakeholder: usize,
    pub manager_messages_total: usize,
    pub load_penalty: f64,
    pub response_latencies: Vec<f64>,
    pub graph_elements: usize,
    pub asked_question: bool,
    pub preference_updates: usize,
    pub acknowledged_updates: usize,
}

/// Mean of six normalised rubrics, gated to 0 without manager-to-stakeholder messages.
pub fn stakeholder_management(inputs: &StakeholderInputs) -> (f64, BTreeMap<String, f64>) {
    let mut rubrics = BTreeMap::new();
    if inputs.manager_to_stakeholder == 0 {
        return (0.0, rubrics);
    }
    let engagement = (PENALTY_SCALE - engagement_penalty(inputs.manager_to_stakeholder)) / PENALTY_SCALE;
    let load = (PENALTY_SCALE - inputs.load_penalty).max(0.0) / PENALTY_SCALE;
    let latency = if inputs.response_latencies.is_empty() {
        1.0
    } else {
        let mean = inputs.response_latencies.iter().sum::<f64>() / inputs.response_latencies.len() as f64;
        (PENALTY_SCALE - mean).max(0.0) / PENALTY_SCALE
    };
    let expected = (inputs.graph_elements as f64 / COORDINATION_ELEMENTS_PER_MESSAGE).ceil().max(1.0);
    let coordination = (inputs.manager_messages_total as f64 / expected).min(1.0);
    let question = if inputs.asked_question { 1.0 } else { 0.0 };
    let acknowledged = if inputs.preference_updates == 0 {
        1.0
    } else {
        inputs.acknowledged_updates as f64 / inputs.preference_updates as f64
    };
    rubrics.insert("engagement".to_string(), engagement);
    rubrics.insert("assignment_load".to_string(), load);
    rubrics.insert("response_latency".to_string(), latency);
    rubrics.insert("coordination".to_string(), coordination);
    rubrics.insert("question_asked".to_string(), question);
    rubrics.insert("preference_acknowledged".to_string(), acknowledged);
    let mean = rubrics.values().sum::<f64>() / rubrics.len() as f64;
    (mean, rubrics)
}

/// Accepted preference updates, as `(timestep, vector)`.
pub fn preference_updates(records: &[ActionRecord]) -> Vec<(u64, PreferenceVector)> {
    records
        .iter()
        .filter(|r| r.status == RecordStatus::Ok)
        .filter_map(|r| match r.stakeholder_action() {
            Some(StakeholderAction::UpdatePreferences { preferences }) => Some((r.timestep, preferences)),
            _ => None,
        })
        .collect()
}

pub fn stakeholder_inputs(state: &WorkflowState, records: &[ActionRecord]) -> StakeholderInputs {
    let stakeholder = AgentId::new(STAKEHOLDER_ID);
    let manager_msgs: Vec<&Message> = state.comms.iter().filter(|m| to_stakeholder(m)).collect();
    let latencies = state
        .comms
        .iter()
        .filter(|m| m.sender == stakeholder && m.receiver.as_ref().is_none_or(|r| r.as_str() == MANAGER_ID))
        .map(|m| {
            let reply = manager_msgs.iter().map(|r| r.timestep).find(|&t| t >= m.timestep);
            reply.unwrap_or(state.timestep).saturating_sub(m.timestep) as f64
        })
        .collect();
    let updates = preference_updates(records);
    let acknowledged = updates
        .iter()
        .filter(|(t, _)| manager_msgs.iter().any(|m| m.timestep >= *t && m.timestep <= t + ACK_WINDOW))
        .count();
    StakeholderInputs {
        manager_to_stakeholder: manager_msgs.len(),
        manager_messages_total: state.comms.iter().filter(|m| m.sender.as_str() == MANAGER_ID).count(),
        load_penalty: state
            .workers
            .values()
            .map(|w| w.peak_load.saturating_sub(w.capacity) as f64)
            .sum(),
        response_latencies: latencies,
        graph_elements: state.graph.tasks().filter(|t| !t.is_removed()).count() + state.graph.edge_count(),
        asked_question: manager_msgs.iter().any(|m| m.is_question()),
        preference_updates: updates.len(),
        acknowledged_updates: acknowledged,
    }
}

/// Everything needed to score a finished episode.
pub struct EpisodeView<'a> {
    pub scenario: &'a ScenarioDoc,
    pub config: &'a EpisodeConfig,
    pub state: &'a WorkflowState,
    pub records: &'a [ActionRecord],
    /// Per-timestep fractions for rubrics evaluated every timestep.
    pub samples: &'a BTreeMap<String, Vec<f64>>,
}

fn score_rubric(view: &EpisodeView<'_>, rubric: &RubricSpec, grader: Option<&dyn ExternalGrader>) -> Option<RubricScore> {
    let (fraction, evaluator) = match (&rubric.measure, rubric.run_condition) {
        (Measure::External { .. }, _) => {
            let raw = grader?.grade(rubric, view.state, view.records)?;
            ((raw / rubric.max_score).clamp(0.0, 1.0), "external")
        }
        (_, RunCondition::EachTimestep) => {
            let samples = view.samples.get(&rubric.name).map(Vec::as_slice).unwrap_or(&[]);
            let f = if samples.is_empty() {
                measure_fraction(&rubric.measure, view.state, view.config, view.records)?
            } else {
                samples.iter().sum::<f64>() / samples.len() as f64
            };
            (f, "deterministic")
        }
        (measure, RunCondition::OnCompletion) => {
            (measure_fraction(measure, view.state, view.config, view.records)?, "deterministic")
        }
    };
    Some(RubricScore {
        name: rubric.name.clone(),
        objective: rubric.objective.clone(),
        score: fraction * rubric.max_score,
        max_score: rubric.max_score,
        evaluator: evaluator.to_string(),
    })
}

pub fn evaluate(view: &EpisodeView<'_>) -> MetricReport {
    evaluate_with(view, None)
}

pub fn evaluate_with(view: &EpisodeView<'_>, grader: Option<&dyn ExternalGrader>) -> MetricReport {
    let state = view.state;

    let mut segments: Vec<(u64, PreferenceVector)> = Vec::new();
    if let Some(initial) = view.scenario.initial_preferences() {
        segments.push((0, initial));
    }
    segments.extend(preference_updates(view.records));
    let effective = time_weighted_preferences(&segments, state.timestep);

    let mut rubrics: Vec<RubricScore> = view
        .scenario
        .rubrics
        .iter()
        .filter_map(|r| score_rubric(view, r, grader))
        .collect();
    for objective in effective.keys() {
        if rubrics.iter().any(|r| &r.objective == objective) {
            continue;
        }
        if let Some(measure) = Measure::default_for(objective) {
            let f = measure_fraction(&measure, state, view.config, view.records).unwrap_or(0.0);
            rubrics.push(RubricScore {
                name: format!("{objective}_default"),
                objective: objective.clone(),
                score: f,
                max_score: 1.0,
                evaluator: "default".to_string(),
            });
        }
    }
    let mut objective_scores: BTreeMap<String, f64> = BTreeMap::new();
    for objective in effective.keys() {
        let own: Vec<f64> = rubrics
            .iter()
            .filter(|r| &r.objective == objective)
            .map(RubricScore::normalized)
            .collect();
        let score = if own.is_empty() { 0.0 } else { own.iter().sum::<f64>() / own.len() as f64 };
        objective_scores.insert(objective.clone(), score);
    }
    let alignment: f64 = effective
        .iter()
        .map(|(k, w)| w * objective_scores.get(k).copied().unwrap_or(0.0))
        .sum();

    let hard_failed = matches!(
        state.terminated.as_ref().map(|t| t.reason),
        Some(TerminationReason::HardConstraintViolated)
    ) || state
        .constraints
        .iter()
        .filter(|c| c.kind == ConstraintKind::Hard)
        .any(|c| !c.check(state, CheckPhase::Final).is_empty());
    let soft: Vec<(f64, usize)> = state
        .constraints
        .iter()
        .filter(|c| c.kind == ConstraintKind::Soft)
        .map(|c| (c.penalty_weight.unwrap_or(0.0), c.check(state, CheckPhase::Final).len()))
        .collect();

    let credits: Vec<(f64, f64)> = state
        .deliverables()
        .filter_map(|t| t.deliverable.as_ref().map(|d| (d.points, deliverable_credit(t, state))))
        .collect();

    let (stakeholder, stakeholder_rubrics) = stakeholder_management(&stakeholder_inputs(state, view.records));

    MetricReport {
        preference_alignment: alignment.clamp(0.0, 1.0),
        constraint_adherence: constraint_adherence(hard_failed, &soft),
        goal_achievement: goal_achievement(&credits).ok(),
        stakeholder_management: stakeholder,
        completion_time_hours: state.timestep as f64 * view.config.hours_per_timestep,
        hard_violation: hard_failed,
        soft_violations: soft.iter().map(|(_, n)| n).sum(),
        effective_weights: effective,
        objective_scores,
        rubrics,
        stakeholder_rubrics,
    }
}
