//! Symptom identifiers and ordered mode sets.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Canonical name of one screening mode ("cough", "breath", "fever", ...).
///
/// Names are trimmed and case-folded; `shortness_of_breath` is accepted as an
/// alias for `breath`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SymptomId(String);

impl SymptomId {
    pub fn new(raw: &str) -> Result<Self> {
        let name = raw.trim().to_lowercase();
        if name.is_empty() {
            return Err(Error::data("symptom name is empty"));
        }
        if name
            .chars()
            .any(|c| c.is_whitespace() || c == ',' || c == '=' || c == '"')
        {
            return Err(Error::data(format!("invalid symptom name {raw:?}")));
        }
        let name = match name.as_str() {
            "shortness_of_breath" => "breath".to_string(),
            _ => name,
        };
        Ok(SymptomId(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SymptomId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<String> for SymptomId {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        SymptomId::new(&value)
    }
}

impl From<SymptomId> for String {
    fn from(id: SymptomId) -> Self {
        id.0
    }
}

/// Non-empty, duplicate-free, ordered list of modes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<SymptomId>", into = "Vec<SymptomId>")]
pub struct ModeSet(Vec<SymptomId>);

impl ModeSet {
    pub fn new(modes: Vec<SymptomId>) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::usage("mode set is empty"));
        }
        for (i, m) in modes.iter().enumerate() {
            if modes[..i].contains(m) {
                return Err(Error::usage(format!("mode {m} listed more than once")));
            }
        }
        Ok(ModeSet(modes))
    }

    /// Parses a comma-separated list such as `cough,breath,fever`.
    pub fn parse_list(list: &str) -> Result<Self> {
        let modes = list
            .split(',')
            .map(|s| SymptomId::new(s).map_err(|e| Error::usage(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        ModeSet::new(modes)
    }

    /// `cough, breath, fever`, the order used throughout the reports.
    pub fn default_three() -> Self {
        ModeSet(vec![
            SymptomId("cough".into()),
            SymptomId("breath".into()),
            SymptomId("fever".into()),
        ])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, SymptomId> {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[SymptomId] {
        &self.0
    }

    pub fn contains(&self, mode: &SymptomId) -> bool {
        self.0.contains(mode)
    }

    pub fn position(&self, mode: &SymptomId) -> Option<usize> {
        self.0.iter().position(|m| m == mode)
    }

    /// True when both sets hold the same modes, in any order.
    pub fn same_members(&self, other: &ModeSet) -> bool {
        self.len() == other.len() && self.iter().all(|m| other.contains(m))
    }
}

impl TryFrom<Vec<SymptomId>> for ModeSet {
    type Error = Error;

    fn try_from(value: Vec<SymptomId>) -> Result<Self> {
        ModeSet::new(value)
    }
}

impl From<ModeSet> for Vec<SymptomId> {
    fn from(set: ModeSet) -> Self {
        set.0
    }
}

impl fmt::Display for ModeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, m) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str(m.as_str())?;
        }
        Ok(())
    }
}

impl<'a> IntoIterator for &'a ModeSet {
    type Item = &'a SymptomId;
    type IntoIter = std::slice::Iter<'a, SymptomId>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}
