//! Late fusion of per-mode indicator labels.
//!
//! The fused score is `Σ I_i · w_i` over the modes present for a subject.
//! When a subject is missing modes that the weights cover, the remaining
//! weights are rescaled to sum to 1 and the result is flagged.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mode::{ModeSet, SymptomId};
use crate::prevalence::WeightVector;

/// Binary classifier outputs for one subject, one per mode.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndicatorVector {
    labels: Vec<(SymptomId, bool)>,
    subject_id: Option<String>,
}

impl IndicatorVector {
    pub fn new(labels: Vec<(SymptomId, bool)>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::usage("indicator vector has no modes"));
        }
        for (i, (m, _)) in labels.iter().enumerate() {
            if labels[..i].iter().any(|(other, _)| other == m) {
                return Err(Error::data(format!("mode {m} appears twice")));
            }
        }
        Ok(IndicatorVector {
            labels,
            subject_id: None,
        })
    }

    /// Builds a vector from a pattern aligned with `modes`.
    pub fn from_pattern(modes: &ModeSet, pattern: &[bool]) -> Result<Self> {
        if modes.len() != pattern.len() {
            return Err(Error::data(format!(
                "pattern has {} labels for {} modes",
                pattern.len(),
                modes.len()
            )));
        }
        IndicatorVector::new(modes.iter().cloned().zip(pattern.iter().copied()).collect())
    }

    /// Parses `cough=1,breath=0,fever=1`.
    pub fn parse_assignments(text: &str) -> Result<Self> {
        let mut labels = Vec::new();
        for part in text.split(',').filter(|p| !p.trim().is_empty()) {
            let (name, value) = part
                .split_once('=')
                .ok_or_else(|| Error::usage(format!("expected mode=0|1, found {part:?}")))?;
            let mode = SymptomId::new(name).map_err(|e| Error::usage(e.to_string()))?;
            let label = match value.trim() {
                "0" => false,
                "1" => true,
                other => {
                    return Err(Error::usage(format!(
                        "indicator for {mode} must be 0 or 1, found {other:?}"
                    )))
                }
            };
            labels.push((mode, label));
        }
        IndicatorVector::new(labels).map_err(|e| Error::usage(e.to_string()))
    }

    pub fn with_subject(mut self, subject_id: impl Into<String>) -> Self {
        self.subject_id = Some(subject_id.into());
        self
    }

    pub fn subject_id(&self) -> Option<&str> {
        self.subject_id.as_deref()
    }

    pub fn labels(&self) -> &[(SymptomId, bool)] {
        &self.labels
    }

    pub fn get(&self, mode: &SymptomId) -> Option<bool> {
        self.labels.iter().find(|(m, _)| m == mode).map(|(_, l)| *l)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn modes(&self) -> impl Iterator<Item = &SymptomId> {
        self.labels.iter().map(|(m, _)| m)
    }

    /// Labels reordered to follow `modes`; `None` if any mode is missing.
    pub fn pattern_for(&self, modes: &ModeSet) -> Option<Vec<bool>> {
        if self.labels.len() != modes.len() {
            return None;
        }
        modes.iter().map(|m| self.get(m)).collect()
    }
}

/// Output of [`fuse`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScreeningResult {
    /// Fused score in `[0, 1]`.
    pub score: f64,
    /// `score × 100`.
    pub percent: f64,
    /// Weights actually applied (rescaled when modes were dropped).
    pub weights_used: WeightVector,
    pub modes_used: ModeSet,
    pub renormalized: bool,
}

/// Fuses indicator labels with `weights`.
pub fn fuse(indicators: &IndicatorVector, weights: &WeightVector) -> Result<ScreeningResult> {
    for mode in indicators.modes() {
        if !weights.modes().contains(mode) {
            return Err(Error::usage(format!("no weight for mode {mode}")));
        }
    }

    let used: Vec<SymptomId> = weights
        .modes()
        .iter()
        .filter(|m| indicators.get(m).is_some())
        .cloned()
        .collect();
    if used.is_empty() {
        return Err(Error::usage("indicators share no modes with the weights"));
    }

    let renormalized = used.len() < weights.modes().len();
    let weights_used = if renormalized {
        let kept: Vec<f64> = used.iter().map(|m| weights.get(m).unwrap()).collect();
        let total: f64 = kept.iter().sum();
        if total <= 0.0 {
            return Err(Error::data("the available modes all carry zero weight"));
        }
        WeightVector::new(
            ModeSet::new(used)?,
            kept.iter().map(|w| w / total).collect(),
        )?
    } else {
        weights.clone()
    };

    let mut score = 0.0;
    for (mode, w) in weights_used.iter() {
        if indicators.get(mode) == Some(true) {
            score += w;
        }
    }
    let score = score.clamp(0.0, 1.0);

    Ok(ScreeningResult {
        score,
        percent: to_percent(score)?,
        modes_used: weights_used.modes().clone(),
        weights_used,
        renormalized,
    })
}

/// `1/n` for each mode.
pub fn equal_weights(modes: &ModeSet) -> Result<WeightVector> {
    if modes.is_empty() {
        return Err(Error::usage("equal weights need at least one mode"));
    }
    let n = modes.len() as f64;
    WeightVector::new(modes.clone(), vec![1.0 / n; modes.len()])
}

pub fn to_percent(score: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&score) {
        return Err(Error::usage(format!("score {score} is outside [0, 1]")));
    }
    Ok(score * 100.0)
}
