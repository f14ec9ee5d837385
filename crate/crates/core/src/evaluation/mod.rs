//! Episode scoring: goal achievement, constraint adherence, preference
//! alignment and stakeholder management, plus rubric scoring and aggregation
//! across seeds.

mod aggregate;
mod metrics;
mod rubric;

pub use aggregate::{
    metric_value, render_csv, render_table, summarize, summary_rows, Summary, SummaryRow, METRIC_NAMES,
};
pub use metrics::{
    constraint_adherence, deliverable_credit, engagement_penalty, evaluate, evaluate_with,
    goal_achievement, preference_alignment, preference_updates, stakeholder_inputs,
    stakeholder_management, time_weighted_preferences, EpisodeView, EvalError, MetricReport,
    RubricScore, StakeholderInputs, ACK_WINDOW, COORDINATION_ELEMENTS_PER_MESSAGE, PENALTY_SCALE,
};
pub use rubric::{measure_fraction, ExternalGrader, Measure, RubricSpec, RunCondition};
