use std::collections::BTreeMap;

use magym_core::actions::{
    apply_manager_action, observe_manager, observe_stakeholder, observe_worker, ActionKind,
    ManagerAction,
};
use magym_core::engine::Engine;
use magym_core::model::{AgentId, PreferenceVector, TaskDraft, TaskId, Worker, WorkerKind, WorkflowState};
use magym_core::policies::{PolicyBundle, PolicySpec};
use magym_core::scenario::bundled_scenario;
use proptest::prelude::*;
use serde_json::{json, Value};

fn id() -> impl Strategy<Value = String> {
    "[a-z][a-z0-9-]{0,8}"
}

fn text() -> impl Strategy<Value = String> {
    any::<String>()
}

fn amount() -> impl Strategy<Value = f64> {
    (0u32..100_000).prop_map(|x| f64::from(x) / 100.0)
}

fn manager_action() -> impl Strategy<Value = ManagerAction> {
    prop_oneof![
        (id(), id()).prop_map(|(t, a)| ManagerAction::AssignTask {
            task_id: t.into(),
            agent_id: a.into()
        }),
        prop::option::of(id()).prop_map(|a| ManagerAction::AssignAllPendingTasks { agent_id: a.map(Into::into) }),
        (text(), text(), amount(), amount()).prop_map(|(name, description, est_hrs, est_cost)| ManagerAction::CreateTask {
            name,
            description,
            est_hrs,
            est_cost
        }),
        id().prop_map(|t| ManagerAction::RemoveTask { task_id: t.into() }),
        (text(), prop::option::of(id())).prop_map(|(content, r)| ManagerAction::SendMessage {
            content,
            receiver_id: r.map(Into::into)
        }),
        Just(ManagerAction::Noop {}),
        Just(ManagerAction::GetWorkflowStatus {}),
        Just(ManagerAction::GetAvailableAgents {}),
        Just(ManagerAction::GetPendingTasks {}),
        (id(), text(), prop::option::of(amount()), prop::option::of(amount())).prop_map(|(t, i, h, c)| {
            ManagerAction::RefineTask {
                task_id: t.into(),
                new_task_instructions: i,
                new_est_hrs: h,
                new_est_cost: c,
            }
        }),
        (id(), id()).prop_map(|(a, b)| ManagerAction::AddTaskDependency {
            prereq_id: a.into(),
            dep_id: b.into()
        }),
        (id(), id()).prop_map(|(a, b)| ManagerAction::RemoveTaskDependency {
            prereq_id: a.into(),
            dep_id: b.into()
        }),
        id().prop_map(|t| ManagerAction::InspectTask { task_id: t.into() }),
        id().prop_map(|t| ManagerAction::DecomposeTask { task_id: t.into() }),
        prop::option::of(text()).prop_map(|reason| ManagerAction::RequestEndWorkflow { reason }),
        prop::collection::btree_map(id(), text(), 0..3).prop_map(|metadata| ManagerAction::FailedAction { metadata }),
    ]
}

proptest! {
    #[test]
    fn canonical_encoding_round_trips(action in manager_action()) {
        let value = action.encode();
        let obj = value.as_object().unwrap();
        prop_assert_eq!(obj.len(), 2);
        prop_assert_eq!(obj["type"].as_str(), Some(action.kind().as_str()));
        prop_assert!(obj["params"].is_object());
        let decoded = ManagerAction::decode(&value).unwrap();
        prop_assert_eq!(&decoded, &action);
        let text = serde_json::to_string(&action).unwrap();
        let reparsed: Value = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(serde_json::to_string(&ManagerAction::decode(&reparsed).unwrap()).unwrap(), text);
    }

    #[test]
    fn extra_keys_are_rejected(action in manager_action(), key in "[a-z]{1,6}") {
        let mut value = action.encode();
        prop_assume!(key != "type" && key != "params");
        value.as_object_mut().unwrap().insert(key, json!(1));
        prop_assert!(ManagerAction::decode(&value).is_err());
    }

    #[test]
    fn unknown_types_are_rejected(kind in "[a-z_]{1,20}") {
        prop_assume!(ActionKind::parse(&kind).is_none());
        let value = json!({"type": kind, "params": {}});
        prop_assert!(ManagerAction::decode(&value).is_err());
    }
}

#[test]
fn kind_table_has_sixteen_distinct_tags() {
    let tags: std::collections::BTreeSet<&str> = ActionKind::ALL.iter().map(|k| k.as_str()).collect();
    assert_eq!(tags.len(), 16);
    for k in ActionKind::ALL {
        assert_eq!(ActionKind::parse(k.as_str()), Some(k));
    }
}

#[test]
fn missing_params_read_as_empty() {
    assert_eq!(ManagerAction::decode(&json!({"type": "noop"})).unwrap(), ManagerAction::Noop {});
    assert!(ManagerAction::decode(&json!({"type": "assign_task"})).is_err());
}

fn team_state() -> WorkflowState {
    let prefs = PreferenceVector::new(BTreeMap::from([("quality".to_string(), 1.0)])).unwrap();
    let mut s = WorkflowState::new(prefs, 100);
    s.add_worker(Worker::new("w1", WorkerKind::Ai).with_skill("x", 1.0)).unwrap();
    s.add_worker(Worker::new("w2", WorkerKind::Ai).with_skill("x", 1.0)).unwrap();
    for id in ["a", "b"] {
        s.add_task(TaskDraft::new(id, 1.0, 0.0).with_id(id).with_skills(["x"])).unwrap();
    }
    s.add_task(TaskDraft::new("c", 1.0, 0.0).with_id("c")).unwrap();
    s.add_dependency(&TaskId::new("a"), &TaskId::new("c")).unwrap();
    s
}

#[test]
fn worker_sees_only_its_own_tasks_and_messages() {
    let mut s = team_state();
    apply_manager_action(
        &mut s,
        &ManagerAction::AssignTask {
            task_id: "a".into(),
            agent_id: "w1".into(),
        },
    )
    .unwrap();
    apply_manager_action(
        &mut s,
        &ManagerAction::SendMessage {
            content: "for w2 only".into(),
            receiver_id: Some("w2".into()),
        },
    )
    .unwrap();
    apply_manager_action(
        &mut s,
        &ManagerAction::SendMessage {
            content: "everyone".into(),
            receiver_id: None,
        },
    )
    .unwrap();

    let w1 = observe_worker(&s, &AgentId::new("w1")).unwrap();
    assert_eq!(w1.tasks.len(), 1);
    assert_eq!(w1.tasks[0].task.id.as_str(), "a");
    let contents: Vec<&str> = w1.messages.iter().map(|m| m.message.content.as_str()).collect();
    assert_eq!(contents, vec!["everyone"]);

    let w2 = observe_worker(&s, &AgentId::new("w2")).unwrap();
    assert!(w2.tasks.is_empty());
    assert_eq!(w2.messages.len(), 2);

    let stakeholder = observe_stakeholder(&s);
    assert_eq!(stakeholder.messages.len(), 1);
}

#[test]
fn manager_view_hides_artifact_content_and_quality() {
    let doc = bundled_scenario("data-science").unwrap();
    let mut engine = Engine::new(&doc, doc.default_config(1), "assign_all").unwrap();
    let mut actors = PolicyBundle::for_scenario(&PolicySpec::AssignAll, &doc, 1).unwrap();
    while engine.state().artifacts.is_empty() && !engine.is_terminated() {
        engine.step(&mut actors).unwrap();
    }
    assert!(!engine.state().artifacts.is_empty());
    let encoded = serde_json::to_value(observe_manager(engine.state())).unwrap();
    let artifacts = encoded["artifacts"].as_array().unwrap();
    assert_eq!(artifacts.len(), engine.state().artifacts.len());
    for a in artifacts {
        assert!(a.get("content").is_none());
        assert!(a.get("quality").is_none());
        assert!(a.get("producing_task_id").is_some());
    }
}

#[test]
fn rejected_actions_leave_state_untouched() {
    let mut s = team_state();
    let before = s.clone();
    for bad in [
        ManagerAction::AssignTask {
            task_id: "c".into(),
            agent_id: "w1".into(),
        },
        ManagerAction::AssignTask {
            task_id: "a".into(),
            agent_id: "ghost".into(),
        },
        ManagerAction::AddTaskDependency {
            prereq_id: "c".into(),
            dep_id: "a".into(),
        },
        ManagerAction::RemoveTaskDependency {
            prereq_id: "b".into(),
            dep_id: "c".into(),
        },
        ManagerAction::InspectTask { task_id: "zzz".into() },
    ] {
        assert!(apply_manager_action(&mut s, &bad).is_err(), "{bad:?} should be rejected");
        assert_eq!(s, before);
    }
}
