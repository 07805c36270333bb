//! Per-mode classifiers that turn raw observations into indicator labels.
//!
//! Model inference (for example audio CNNs for cough and breath) happens
//! outside this crate. Its scores arrive as observations and are binarized
//! here with a threshold; fever is decided by a one-split temperature rule
//! or a self-report; pre-computed labels pass through unchanged.

use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::IndicatorVector;
use crate::mode::SymptomId;

pub const DEFAULT_TAU: f64 = 0.5;
pub const DEFAULT_FEVER_THRESHOLD_C: f64 = 38.0;
pub const TEMPERATURE_RANGE_C: (f64, f64) = (30.0, 45.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum Payload {
    Score(f64),
    TemperatureC(f64),
    SelfReport(bool),
    Label(bool),
}

impl Payload {
    pub fn kind(&self) -> &'static str {
        match self {
            Payload::Score(_) => "score",
            Payload::TemperatureC(_) => "temperature_c",
            Payload::SelfReport(_) => "self_report",
            Payload::Label(_) => "label",
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Payload::Score(s) if !(0.0..=1.0).contains(&s) => {
                Err(Error::data(format!("score {s} is outside [0, 1]")))
            }
            Payload::TemperatureC(t)
                if !(TEMPERATURE_RANGE_C.0..=TEMPERATURE_RANGE_C.1).contains(&t) =>
            {
                Err(Error::data(format!(
                    "temperature {t} °C is outside [30, 45]"
                )))
            }
            _ => Ok(()),
        }
    }
}

/// One raw input for one mode of one subject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeObservation {
    pub subject_id: String,
    pub mode: SymptomId,
    pub payload: Payload,
}

impl ModeObservation {
    pub fn new(subject_id: impl Into<String>, mode: SymptomId, payload: Payload) -> Result<Self> {
        payload.validate()?;
        Ok(ModeObservation {
            subject_id: subject_id.into(),
            mode,
            payload,
        })
    }
}

fn wrong_payload(expected: &str, obs: &ModeObservation) -> Error {
    Error::usage(format!(
        "{} classifier expects a {expected} payload, got {} for {}",
        obs.mode,
        obs.payload.kind(),
        obs.subject_id
    ))
}

/// 1 iff `score >= tau`.
pub fn classify_threshold(obs: &ModeObservation, tau: f64) -> Result<bool> {
    match obs.payload {
        Payload::Score(s) => {
            obs.payload.validate()?;
            Ok(s >= tau)
        }
        _ => Err(wrong_payload("score", obs)),
    }
}

/// Temperature at or above `threshold_c`, or a positive self-report.
pub fn classify_fever(obs: &ModeObservation, threshold_c: f64) -> Result<bool> {
    match obs.payload {
        Payload::TemperatureC(t) => {
            obs.payload.validate()?;
            Ok(t >= threshold_c)
        }
        Payload::SelfReport(reported) => Ok(reported),
        _ => Err(wrong_payload("temperature or self-report", obs)),
    }
}

pub fn classify_oracle(obs: &ModeObservation) -> Result<bool> {
    match obs.payload {
        Payload::Label(l) => Ok(l),
        _ => Err(wrong_payload("label", obs)),
    }
}

/// A configured classifier for one mode.
pub trait ModeClassifier: Send + Sync {
    fn classify(&self, obs: &ModeObservation) -> Result<bool>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreThreshold {
    pub tau: f64,
}

impl ScoreThreshold {
    pub fn new(tau: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::usage(format!("tau {tau} is outside [0, 1]")));
        }
        Ok(ScoreThreshold { tau })
    }
}

impl Default for ScoreThreshold {
    fn default() -> Self {
        ScoreThreshold { tau: DEFAULT_TAU }
    }
}

impl ModeClassifier for ScoreThreshold {
    fn classify(&self, obs: &ModeObservation) -> Result<bool> {
        classify_threshold(obs, self.tau)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeverRule {
    pub threshold_c: f64,
}

impl FeverRule {
    pub fn new(threshold_c: f64) -> Result<Self> {
        if !threshold_c.is_finite() {
            return Err(Error::usage("fever threshold must be finite"));
        }
        Ok(FeverRule { threshold_c })
    }
}

impl Default for FeverRule {
    fn default() -> Self {
        FeverRule {
            threshold_c: DEFAULT_FEVER_THRESHOLD_C,
        }
    }
}

impl ModeClassifier for FeverRule {
    fn classify(&self, obs: &ModeObservation) -> Result<bool> {
        classify_fever(obs, self.threshold_c)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct OracleLabel;

impl ModeClassifier for OracleLabel {
    fn classify(&self, obs: &ModeObservation) -> Result<bool> {
        classify_oracle(obs)
    }
}

/// Picks the rule by payload kind: scores are thresholded, temperatures and
/// self-reports go through the fever rule, labels pass through.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PayloadRouter {
    pub threshold: ScoreThreshold,
    pub fever: FeverRule,
}

impl ModeClassifier for PayloadRouter {
    fn classify(&self, obs: &ModeObservation) -> Result<bool> {
        match obs.payload {
            Payload::Score(_) => self.threshold.classify(obs),
            Payload::TemperatureC(_) | Payload::SelfReport(_) => self.fever.classify(obs),
            Payload::Label(_) => OracleLabel.classify(obs),
        }
    }
}

/// Mode → classifier.
#[derive(Default)]
pub struct ClassifierRegistry {
    entries: BTreeMap<SymptomId, Box<dyn ModeClassifier>>,
}

impl ClassifierRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, mode: SymptomId, classifier: impl ModeClassifier + 'static) {
        self.entries.insert(mode, Box::new(classifier));
    }

    pub fn with(mut self, mode: SymptomId, classifier: impl ModeClassifier + 'static) -> Self {
        self.register(mode, classifier);
        self
    }

    pub fn get(&self, mode: &SymptomId) -> Option<&dyn ModeClassifier> {
        self.entries.get(mode).map(|b| b.as_ref())
    }
}

/// Routes one subject's observations to their classifiers.
pub fn assemble_indicators(
    observations: &[ModeObservation],
    registry: &ClassifierRegistry,
) -> Result<IndicatorVector> {
    let first = observations
        .first()
        .ok_or_else(|| Error::usage("no observations to classify"))?;
    let mut labels: Vec<(SymptomId, bool)> = Vec::with_capacity(observations.len());
    for obs in observations {
        if obs.subject_id != first.subject_id {
            return Err(Error::data(format!(
                "observations mix subjects {} and {}",
                first.subject_id, obs.subject_id
            )));
        }
        if labels.iter().any(|(m, _)| m == &obs.mode) {
            return Err(Error::data(format!(
                "subject {} has more than one {} observation",
                obs.subject_id, obs.mode
            )));
        }
        let classifier = registry.get(&obs.mode).ok_or_else(|| {
            Error::usage(format!("no classifier registered for mode {}", obs.mode))
        })?;
        labels.push((obs.mode.clone(), classifier.classify(obs)?));
    }
    Ok(IndicatorVector::new(labels)?.with_subject(first.subject_id.clone()))
}

/// Parses an observations CSV.
///
/// Accepts either `subject_id,mode,kind,value` or the scores-only layout
/// `subject_id,mode,score`.
pub fn parse_observations_csv<R: Read>(source: R) -> Result<Vec<ModeObservation>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(source);
    let header: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let scores_only = match header
        .iter()
        .map(String::as_str)
        .collect::<Vec<_>>()
        .as_slice()
    {
        ["subject_id", "mode", "kind", "value"] => false,
        ["subject_id", "mode", "score"] => true,
        _ => {
            return Err(Error::data(format!(
                "line 1: unrecognized observations header `{}`",
                header.join(",")
            )))
        }
    };

    let mut out = Vec::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        if row.len() != header.len() {
            return Err(Error::data(format!(
                "line {line}: expected {} columns, found {}",
                header.len(),
                row.len()
            )));
        }
        let at_line = |e: Error| Error::data(format!("line {line}: {e}"));
        let mode = SymptomId::new(&row[1]).map_err(at_line)?;
        let (kind, value) = if scores_only {
            ("score", row[2].trim())
        } else {
            (row[2].trim(), row[3].trim())
        };
        let payload = parse_payload(kind, value).map_err(at_line)?;
        out.push(ModeObservation::new(row[0].trim(), mode, payload).map_err(at_line)?);
    }
    if out.is_empty() {
        return Err(Error::data("observations file has no data rows"));
    }
    Ok(out)
}

fn parse_payload(kind: &str, value: &str) -> Result<Payload> {
    let number = || {
        value
            .parse::<f64>()
            .map_err(|_| Error::data(format!("{kind} value {value:?} is not a number")))
    };
    let boolean = || match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(Error::data(format!(
            "{kind} value {value:?} is not true/false"
        ))),
    };
    match kind {
        "score" => Ok(Payload::Score(number()?)),
        "temperature_c" => Ok(Payload::TemperatureC(number()?)),
        "self_report" => Ok(Payload::SelfReport(boolean()?)),
        "label" => match value {
            "0" => Ok(Payload::Label(false)),
            "1" => Ok(Payload::Label(true)),
            _ => Err(Error::data(format!("label value {value:?} is not 0/1"))),
        },
        other => Err(Error::data(format!("unknown observation kind {other:?}"))),
    }
}

/// Splits observations by subject, keeping first-appearance order.
pub fn group_by_subject(observations: Vec<ModeObservation>) -> Vec<(String, Vec<ModeObservation>)> {
    let mut groups: Vec<(String, Vec<ModeObservation>)> = Vec::new();
    for obs in observations {
        match groups.iter_mut().find(|(id, _)| *id == obs.subject_id) {
            Some((_, list)) => list.push(obs),
            None => groups.push((obs.subject_id.clone(), vec![obs])),
        }
    }
    groups
}
