use super::ScenarioDoc;

const SOURCES: [(&str, &str); 5] = [
    ("legal-contract", include_str!("../../scenarios/legal-contract.json")),
    ("data-science", include_str!("../../scenarios/data-science.json")),
    ("marketing-campaign", include_str!("../../scenarios/marketing-campaign.json")),
    ("icaap-draft", include_str!("../../scenarios/icaap-draft.json")),
    ("supply-chain", include_str!("../../scenarios/supply-chain.json")),
];

pub const BUNDLED_IDS: [&str; 5] = [
    SOURCES[0].0,
    SOURCES[1].0,
    SOURCES[2].0,
    SOURCES[3].0,
    SOURCES[4].0,
];

/// Canonical text of a bundled scenario.
pub fn bundled_source(id: &str) -> Option<&'static str> {
    SOURCES.iter().find(|(k, _)| *k == id).map(|(_, s)| *s)
}

pub fn bundled_scenario(id: &str) -> Option<ScenarioDoc> {
    bundled_source(id).map(|s| ScenarioDoc::from_json(s).expect("bundled scenarios parse"))
}

/// The desk-scale suite, in a fixed order.
pub fn bundled_scenarios() -> Vec<ScenarioDoc> {
    BUNDLED_IDS
        .iter()
        .filter_map(|id| bundled_scenario(id))
        .collect()
}
