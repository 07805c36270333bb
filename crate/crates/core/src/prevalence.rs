//! Clinical prevalence ingestion and prevalence-proportional weights.
//!
//! Prevalence values are percentages in `(0, 100]` everywhere in this module;
//! weights are unitless fractions that sum to 1.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::mode::{ModeSet, SymptomId};

pub const PREVALENCE_HEADER: [&str; 4] = ["study_id", "population", "symptom", "prevalence_pct"];

/// Tolerance on the sum of a weight vector.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

/// One study's reported prevalence of one symptom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRecord {
    pub study_id: String,
    pub population: u64,
    pub symptom: SymptomId,
    pub prevalence_pct: f64,
}

impl StudyRecord {
    pub fn new(
        study_id: impl Into<String>,
        population: u64,
        symptom: SymptomId,
        prevalence_pct: f64,
    ) -> Result<Self> {
        if population < 1 {
            return Err(Error::data("population must be at least 1"));
        }
        check_prevalence(prevalence_pct)?;
        Ok(StudyRecord {
            study_id: study_id.into(),
            population,
            symptom,
            prevalence_pct,
        })
    }
}

fn check_prevalence(pct: f64) -> Result<()> {
    if pct.is_finite() && pct > 0.0 && pct <= 100.0 {
        Ok(())
    } else {
        Err(Error::data(format!("prevalence {pct} is outside (0, 100]")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Unweighted arithmetic mean over a symptom's studies.
    #[default]
    Mean,
    /// Mean weighted by study population.
    PopulationWeighted,
}

impl Aggregation {
    pub fn label(self) -> &'static str {
        match self {
            Aggregation::Mean => "mean",
            Aggregation::PopulationWeighted => "population_weighted",
        }
    }
}

/// Study rows plus the aggregated per-symptom estimates derived from them.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PrevalenceTable {
    records: Vec<StudyRecord>,
    estimates: BTreeMap<SymptomId, f64>,
    source_digest: Option<String>,
}

impl PrevalenceTable {
    pub fn from_records(records: Vec<StudyRecord>) -> Self {
        PrevalenceTable {
            records,
            ..Default::default()
        }
    }

    pub fn records(&self) -> &[StudyRecord] {
        &self.records
    }

    pub fn estimates(&self) -> &BTreeMap<SymptomId, f64> {
        &self.estimates
    }

    pub fn estimate(&self, symptom: &SymptomId) -> Option<f64> {
        self.estimates.get(symptom).copied()
    }

    /// SHA-256 of the CSV bytes this table was parsed from, if any.
    pub fn source_digest(&self) -> Option<&str> {
        self.source_digest.as_deref()
    }

    /// Sets an estimate directly, bypassing aggregation.
    ///
    /// This is the only way to obtain a zero estimate (which yields a zero
    /// weight). Negative or non-finite values and values above 100 are
    /// rejected.
    pub fn override_estimate(&mut self, symptom: SymptomId, pct: f64) -> Result<()> {
        if !(pct.is_finite() && (0.0..=100.0).contains(&pct)) {
            return Err(Error::data(format!(
                "prevalence override {pct} for {symptom} is outside [0, 100]"
            )));
        }
        self.estimates.insert(symptom, pct);
        Ok(())
    }
}

/// Parses a prevalence CSV (`study_id,population,symptom,prevalence_pct`).
///
/// The returned table carries records only; call [`aggregate_prevalence`] to
/// fill in estimates.
pub fn parse_prevalence_csv<R: Read>(mut source: R) -> Result<PrevalenceTable> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    let digest = hex::encode(Sha256::digest(&bytes));

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(bytes.as_slice());

    let header = reader.headers()?.clone();
    let found: Vec<&str> = header.iter().map(str::trim).collect();
    if found != PREVALENCE_HEADER {
        return Err(Error::data(format!(
            "line 1: expected header `{}`, found `{}`",
            PREVALENCE_HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }

    let mut records = Vec::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        if row.len() == 1 && row[0].trim().is_empty() {
            continue;
        }
        if row.len() != PREVALENCE_HEADER.len() {
            return Err(Error::data(format!(
                "line {line}: expected 4 columns, found {}",
                row.len()
            )));
        }
        let population: u64 = row[1].trim().parse().map_err(|_| {
            Error::data(format!(
                "line {line}: population {:?} is not a whole number",
                &row[1]
            ))
        })?;
        let prevalence: f64 = row[3].trim().parse().map_err(|_| {
            Error::data(format!(
                "line {line}: prevalence {:?} is not a number",
                &row[3]
            ))
        })?;
        let symptom =
            SymptomId::new(&row[2]).map_err(|e| Error::data(format!("line {line}: {e}")))?;
        let record = StudyRecord::new(row[0].trim(), population, symptom, prevalence)
            .map_err(|e| Error::data(format!("line {line}: {e}")))?;
        records.push(record);
    }

    if records.is_empty() {
        return Err(Error::data("prevalence file has no data rows"));
    }

    Ok(PrevalenceTable {
        records,
        estimates: BTreeMap::new(),
        source_digest: Some(digest),
    })
}

/// Fills one estimate per requested mode from that symptom's records.
///
/// Records for symptoms outside `modes` are kept but get no estimate.
pub fn aggregate_prevalence(
    table: &PrevalenceTable,
    modes: &ModeSet,
    method: Aggregation,
) -> Result<PrevalenceTable> {
    let mut estimates = BTreeMap::new();
    for mode in modes {
        let rows: Vec<&StudyRecord> = table
            .records
            .iter()
            .filter(|r| &r.symptom == mode)
            .collect();
        if rows.is_empty() {
            return Err(Error::data(format!(
                "no prevalence records for mode {mode}"
            )));
        }
        let estimate = match method {
            Aggregation::Mean => {
                rows.iter().map(|r| r.prevalence_pct).sum::<f64>() / rows.len() as f64
            }
            Aggregation::PopulationWeighted => {
                let total: f64 = rows.iter().map(|r| r.population as f64).sum();
                rows.iter()
                    .map(|r| r.population as f64 * r.prevalence_pct)
                    .sum::<f64>()
                    / total
            }
        };
        estimates.insert(mode.clone(), estimate);
    }
    Ok(PrevalenceTable {
        records: table.records.clone(),
        estimates,
        source_digest: table.source_digest.clone(),
    })
}

/// Normalized per-mode fusion weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    modes: ModeSet,
    weights: Vec<f64>,
}

impl WeightVector {
    /// Builds a weight vector, checking that every weight is finite and
    /// non-negative and that they sum to 1.
    pub fn new(modes: ModeSet, weights: Vec<f64>) -> Result<Self> {
        if modes.len() != weights.len() {
            return Err(Error::data(format!(
                "{} modes but {} weights",
                modes.len(),
                weights.len()
            )));
        }
        for (m, w) in modes.iter().zip(&weights) {
            if !w.is_finite() || *w < 0.0 || *w > 1.0 {
                return Err(Error::data(format!("weight {w} for {m} is outside [0, 1]")));
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::data(format!("weights sum to {sum}, not 1")));
        }
        Ok(WeightVector { modes, weights })
    }

    pub fn modes(&self) -> &ModeSet {
        &self.modes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn get(&self, mode: &SymptomId) -> Option<f64> {
        self.modes.position(mode).map(|i| self.weights[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&SymptomId, f64)> + '_ {
        self.modes.iter().zip(self.weights.iter().copied())
    }

    /// Two-decimal weights whose hundredths still sum to exactly 100.
    ///
    /// Uses largest-remainder apportionment: every weight is floored to the
    /// hundredth, and the leftover hundredths go to the largest remainders
    /// (ties broken by mode order). For (0.3163, 0.1550, 0.5287) this gives
    /// (0.32, 0.15, 0.53).
    pub fn paper_rounded(&self) -> WeightVector {
        let scaled: Vec<f64> = self.weights.iter().map(|w| w * 100.0).collect();
        // snap near-integers so 0.29 * 100 = 28.999999999999996 floors to 29
        let mut hundredths: Vec<u32> = scaled.iter().map(|s| (s + 1e-9).floor() as u32).collect();
        let assigned: u32 = hundredths.iter().sum();
        let mut order: Vec<usize> = (0..scaled.len()).collect();
        order.sort_by(|&a, &b| {
            let ra = scaled[a] - hundredths[a] as f64;
            let rb = scaled[b] - hundredths[b] as f64;
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        for &i in order.iter().take(100u32.saturating_sub(assigned) as usize) {
            hundredths[i] += 1;
        }
        WeightVector {
            modes: self.modes.clone(),
            weights: hundredths.iter().map(|h| *h as f64 / 100.0).collect(),
        }
    }

    /// SHA-256 over the mode names and the exact bit patterns of the weights.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        for (mode, w) in self.iter() {
            hasher.update(mode.as_str().as_bytes());
            hasher.update([0u8]);
            hasher.update(w.to_bits().to_le_bytes());
        }
        hex::encode(hasher.finalize())
    }

    /// `cough=0.32 breath=0.15 fever=0.53`
    ///
    /// Shown with [`paper_rounded`](Self::paper_rounded) values so the
    /// displayed weights add up to 1.00; rounding each weight on its own
    /// would show 0.3163/0.1550/0.5287 as 0.32/0.16/0.53.
    pub fn summary_line(&self) -> String {
        self.paper_rounded()
            .iter()
            .map(|(m, w)| format!("{m}={w:.2}"))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl fmt::Display for WeightVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.summary_line())
    }
}

/// Weights proportional to each mode's prevalence estimate.
pub fn derive_weights(table: &PrevalenceTable, modes: &ModeSet) -> Result<WeightVector> {
    let mut estimates = Vec::with_capacity(modes.len());
    for mode in modes {
        let p = table
            .estimate(mode)
            .ok_or_else(|| Error::data(format!("no prevalence estimate for mode {mode}")))?;
        if !p.is_finite() || p < 0.0 {
            return Err(Error::data(format!(
                "prevalence estimate {p} for {mode} is negative"
            )));
        }
        estimates.push(p);
    }
    let total: f64 = estimates.iter().sum();
    if total <= 0.0 {
        return Err(Error::data("all prevalence estimates are zero"));
    }
    let weights = estimates.iter().map(|p| p / total).collect();
    WeightVector::new(modes.clone(), weights)
}

/// On-disk weights document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightsFile {
    pub modes: Vec<SymptomId>,
    pub weights: IndexMap<SymptomId, f64>,
    pub aggregation: Aggregation,
    pub source_digest: String,
}

impl WeightsFile {
    pub fn new(weights: &WeightVector, aggregation: Aggregation, source_digest: &str) -> Self {
        WeightsFile {
            modes: weights.modes().as_slice().to_vec(),
            weights: weights.iter().map(|(m, w)| (m.clone(), w)).collect(),
            aggregation,
            source_digest: source_digest.to_string(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("weights serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::data(format!("invalid weights file: {e}")))
    }

    /// Validated weight vector in `modes` order.
    pub fn weight_vector(&self) -> Result<WeightVector> {
        let modes = ModeSet::new(self.modes.clone()).map_err(|e| Error::data(e.to_string()))?;
        if self.weights.len() != modes.len() {
            return Err(Error::data("weights keys do not match the modes list"));
        }
        let weights = modes
            .iter()
            .map(|m| {
                self.weights
                    .get(m)
                    .copied()
                    .ok_or_else(|| Error::data(format!("no weight for mode {m}")))
            })
            .collect::<Result<Vec<_>>>()?;
        WeightVector::new(modes, weights)
    }
}
