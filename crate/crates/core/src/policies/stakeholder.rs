use std::collections::BTreeSet;

use crate::actions::{StakeholderAction, StakeholderObservation};
use crate::engine::Decision;
use crate::model::{PreferenceVector, MANAGER_ID, STAKEHOLDER_ID};
use crate::rng::RngStream;
use crate::scenario::{ScenarioDoc, StakeholderSettings};

/// Scripted stakeholder. Priority each turn: a due preference change-point,
/// a pending end request, announcing the latest change, answering manager
/// questions once their reply latency has elapsed, then nothing.
#[derive(Clone, Debug)]
pub struct StakeholderScript {
    schedule: Vec<(u64, PreferenceVector)>,
    settings: StakeholderSettings,
    seed: u64,
    next_change: usize,
    announce: Option<PreferenceVector>,
    answered: BTreeSet<usize>,
}

impl StakeholderScript {
    /// The schedule's first entry is the initial state and is never re-emitted.
    pub fn new(schedule: Vec<(u64, PreferenceVector)>, settings: StakeholderSettings, seed: u64) -> Self {
        let next_change = usize::from(schedule.first().is_some_and(|(t, _)| *t == 0));
        Self {
            schedule,
            settings,
            seed,
            next_change,
            announce: None,
            answered: BTreeSet::new(),
        }
    }

    pub fn for_scenario(doc: &ScenarioDoc, seed: u64) -> Self {
        Self::new(doc.schedule(), doc.stakeholder.clone(), seed)
    }

    /// The schedule entry in effect at `timestep`.
    pub fn scheduled_at(&self, timestep: u64) -> Option<&PreferenceVector> {
        self.schedule.iter().rev().find(|(t, _)| *t <= timestep).map(|(_, v)| v)
    }

    /// Reply latency for a given message: base latency plus a per-message jitter draw.
    pub fn latency_for(&self, message_id: usize) -> u64 {
        let jitter = self.settings.reply_jitter;
        if jitter == 0 {
            return self.settings.reply_latency;
        }
        let mut rng = RngStream::substream(self.seed, &format!("message-{message_id}"), "reply_latency");
        self.settings.reply_latency + rng.below(jitter + 1)
    }

    pub fn decide(&mut self, obs: &StakeholderObservation) -> Decision<StakeholderAction> {
        if let Some((t, vector)) = self.schedule.get(self.next_change).cloned() {
            if t <= obs.timestep {
                self.next_change += 1;
                self.announce = Some(vector.clone());
                return Decision::new(
                    StakeholderAction::UpdatePreferences { preferences: vector },
                    format!("scheduled change-point at t={t}"),
                );
            }
        }
        if obs.pending_end_request.is_some() {
            let approve = obs.completed_point_fraction + 1e-12 >= self.settings.approval_threshold;
            return Decision::new(
                StakeholderAction::ApproveEnd { approve },
                format!(
                    "{:.0}% of deliverable points complete against a {:.0}% bar",
                    obs.completed_point_fraction * 100.0,
                    self.settings.approval_threshold * 100.0
                ),
            );
        }
        if let Some(vector) = self.announce.take() {
            return Decision::new(
                StakeholderAction::SendMessage {
                    content: format!(
                        "Priorities have changed: {} now matters most ({:.0}%).",
                        vector.dominant(),
                        vector.weight(vector.dominant()) * 100.0
                    ),
                    receiver_id: None,
                },
                "announce preference change",
            );
        }
        for m in &obs.messages {
            self.answered.extend(
                m.message
                    .reply_to
                    .filter(|_| m.message.sender.as_str() == STAKEHOLDER_ID),
            );
        }
        let due = obs.messages.iter().find(|m| {
            m.message.sender.as_str() == MANAGER_ID
                && m.message.is_question()
                && !self.answered.contains(&m.id)
                && obs.timestep >= m.message.timestep + self.latency_for(m.id)
        });
        if let Some(q) = due {
            let id = q.id;
            self.answered.insert(id);
            let content = format!(
                "Current priority is {}. {:.0}% of deliverable points are done; please keep going.",
                obs.preferences.dominant(),
                obs.completed_point_fraction * 100.0
            );
            return Decision::new(
                StakeholderAction::AnswerQuestion { message_id: id, content },
                format!("answer message {id} after latency"),
            );
        }
        Decision::bare(StakeholderAction::Noop {})
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actions::MessageView;
    use crate::model::{AgentId, Message};

    fn obs(t: u64, messages: Vec<MessageView>) -> StakeholderObservation {
        StakeholderObservation {
            timestep: t,
            preferences: PreferenceVector::from_pairs([("quality", 1.0)]).unwrap(),
            completed_point_fraction: 0.0,
            status_histogram: Default::default(),
            messages,
            pending_end_request: None,
        }
    }

    fn question(id: usize, t: u64) -> MessageView {
        MessageView {
            id,
            message: Message {
                sender: AgentId::new(MANAGER_ID),
                receiver: Some(AgentId::new(STAKEHOLDER_ID)),
                content: "Should we prioritise the memo?".into(),
                timestep: t,
                related_task_id: None,
                reply_to: None,
            },
        }
    }

    #[test]
    fn answers_after_latency() {
        let mut s = StakeholderScript::new(Vec::new(), StakeholderSettings::default(), 1);
        let q = question(0, 4);
        assert_eq!(s.decide(&obs(5, vec![q.clone()])).action, StakeholderAction::Noop {});
        assert!(matches!(
            s.decide(&obs(6, vec![q.clone()])).action,
            StakeholderAction::AnswerQuestion { message_id: 0, .. }
        ));
        assert_eq!(s.decide(&obs(7, vec![q])).action, StakeholderAction::Noop {});
    }

    #[test]
    fn change_points_fire_once() {
        let a = PreferenceVector::from_pairs([("speed", 0.5), ("quality", 0.5)]).unwrap();
        let b = PreferenceVector::from_pairs([("speed", 0.25), ("quality", 0.75)]).unwrap();
        let mut s = StakeholderScript::new(vec![(0, a), (35, b.clone())], StakeholderSettings::default(), 1);
        assert_eq!(s.decide(&obs(0, vec![])).action, StakeholderAction::Noop {});
        assert_eq!(
            s.decide(&obs(35, vec![])).action,
            StakeholderAction::UpdatePreferences { preferences: b }
        );
        assert!(matches!(s.decide(&obs(36, vec![])).action, StakeholderAction::SendMessage { .. }));
        assert_eq!(s.decide(&obs(37, vec![])).action, StakeholderAction::Noop {});
    }
}
