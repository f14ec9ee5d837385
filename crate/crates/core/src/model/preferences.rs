use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ModelError;

const SIMPLEX_TOLERANCE: f64 = 1e-9;

/// Stakeholder objective weights. Always on the probability simplex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<String, f64>", into = "BTreeMap<String, f64>")]
pub struct PreferenceVector {
    weights: BTreeMap<String, f64>,
}

impl PreferenceVector {
    pub fn new(weights: BTreeMap<String, f64>) -> Result<Self, ModelError> {
        check_simplex(&weights)?;
        Ok(Self { weights })
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, f64)>) -> Result<Self, ModelError> {
        Self::new(pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
    }

    /// One objective gets `heavy`; the rest share the remainder equally.
    pub fn emphasis(objectives: &[String], heavy: &str, heavy_weight: f64) -> Result<Self, ModelError> {
        if !objectives.iter().any(|o| o == heavy) {
            return Err(ModelError::InvalidPreferences(format!(
                "emphasised objective `{heavy}` is not among the objectives"
            )));
        }
        let others = objectives.len() - 1;
        let weights = objectives
            .iter()
            .map(|o| {
                let w = if o == heavy {
                    if others == 0 { 1.0 } else { heavy_weight }
                } else {
                    (1.0 - heavy_weight) / others as f64
                };
                (o.clone(), w)
            })
            .collect();
        Self::new(weights)
    }

    pub fn weights(&self) -> &BTreeMap<String, f64> {
        &self.weights
    }

    pub fn weight(&self, objective: &str) -> f64 {
        self.weights.get(objective).copied().unwrap_or(0.0)
    }

    pub fn objectives(&self) -> impl Iterator<Item = &str> {
        self.weights.keys().map(String::as_str)
    }

    /// The objective with the largest weight (ties broken by name).
    pub fn dominant(&self) -> &str {
        self.weights
            .iter()
            .fold(None::<(&String, f64)>, |best, (k, &w)| match best {
                Some((_, bw)) if bw >= w => best,
                _ => Some((k, w)),
            })
            .map(|(k, _)| k.as_str())
            .unwrap_or("")
    }
}

pub(crate) fn check_simplex(weights: &BTreeMap<String, f64>) -> Result<(), ModelError> {
    if weights.is_empty() {
        return Err(ModelError::InvalidPreferences("no objectives".into()));
    }
    for (k, &w) in weights {
        if !w.is_finite() || !(0.0..=1.0).contains(&w) {
            return Err(ModelError::InvalidPreferences(format!(
                "weight for `{k}` is {w}, outside [0, 1]"
            )));
        }
    }
    let sum: f64 = weights.values().sum();
    if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
        return Err(ModelError::InvalidPreferences(format!(
            "weights sum to {sum}, expected 1"
        )));
    }
    Ok(())
}

impl TryFrom<BTreeMap<String, f64>> for PreferenceVector {
    type Error = ModelError;

    fn try_from(weights: BTreeMap<String, f64>) -> Result<Self, Self::Error> {
        Self::new(weights)
    }
}

impl From<PreferenceVector> for BTreeMap<String, f64> {
    fn from(p: PreferenceVector) -> Self {
        p.weights
    }
}
