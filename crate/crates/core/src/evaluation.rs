//! Comparison of weighted fusion against the equal-weight baseline over a
//! labeled dataset.
//!
//! Samples are grouped by (indicator pattern, ground truth). Every group in
//! which at least one mode disagrees with the truth becomes a case row
//! carrying both fused scores and their relative difference. The aggregate
//! is the occurrence-weighted mean of the per-case signed improvements.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::{equal_weights, fuse, IndicatorVector};
use crate::mode::{ModeSet, SymptomId};
use crate::prevalence::WeightVector;
use crate::rounding::{round_half_up, RoundingMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truth {
    Positive,
    Negative,
}

impl Truth {
    pub fn parse(text: &str) -> Result<Self> {
        match text.trim().to_ascii_lowercase().as_str() {
            "positive" => Ok(Truth::Positive),
            "negative" => Ok(Truth::Negative),
            other => Err(Error::data(format!(
                "truth {other:?} is not positive/negative"
            ))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Truth::Positive => "positive",
            Truth::Negative => "negative",
        }
    }

    fn as_label(self) -> bool {
        self == Truth::Positive
    }
}

impl fmt::Display for Truth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub subject_id: String,
    pub truth: Truth,
    pub indicators: IndicatorVector,
}

/// One misclassification group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseReport {
    /// Indicator labels in the evaluation mode order.
    pub pattern: Vec<bool>,
    pub truth: Truth,
    pub occurrences: usize,
    /// Weighted fused score.
    pub f_w: f64,
    /// Equal-weight fused score.
    pub f_r: f64,
    /// `100·(f_w − f_r)/f_r`; `None` when `f_r` is zero.
    pub rel_diff_pct: Option<f64>,
    /// Relative difference oriented so that positive means better.
    pub signed_improvement_pct: Option<f64>,
    /// Share of all misclassification-case samples that fall in this case.
    pub case_share_pct: f64,
}

impl CaseReport {
    /// Number of modes whose label disagrees with the truth.
    pub fn disagreements(&self) -> usize {
        let expected = self.truth.as_label();
        self.pattern.iter().filter(|l| **l != expected).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationSummary {
    pub modes: ModeSet,
    pub cases: Vec<CaseReport>,
    pub total_samples: usize,
    /// `None` when no case has a defined relative difference.
    pub weighted_improvement_pct: Option<f64>,
    /// Weights behind `f_w` (two-decimal under paper rounding).
    pub weights_used: WeightVector,
    pub rounding_mode: RoundingMode,
    /// Indices into `cases` left out of the aggregate because `f_r` is zero.
    pub excluded_cases: Vec<usize>,
}

impl EvaluationSummary {
    pub fn case_samples(&self) -> usize {
        self.cases.iter().map(|c| c.occurrences).sum()
    }
}

/// Relative difference in percent, or `None` when `f_r` is zero.
pub fn relative_difference(f_w: f64, f_r: f64) -> Option<f64> {
    if f_r == 0.0 {
        None
    } else {
        Some(100.0 * (f_w - f_r) / f_r)
    }
}

/// Positive truth keeps the sign; negative truth flips it, since a lower
/// score is the better outcome there.
pub fn signed_improvement(rel_diff_pct: f64, truth: Truth) -> f64 {
    match truth {
        Truth::Positive => rel_diff_pct,
        Truth::Negative => -rel_diff_pct,
    }
}

/// Occurrence-weighted mean of per-case signed improvements.
///
/// Under [`RoundingMode::PaperRounding`] each relative difference is first
/// rounded to one decimal. Cases without a relative difference are skipped.
pub fn weighted_improvement(cases: &[CaseReport], rounding: RoundingMode) -> Result<f64> {
    let mut weighted_sum = 0.0;
    let mut count = 0usize;
    for case in cases {
        let Some(rel) = case.rel_diff_pct else {
            continue;
        };
        let rel = match rounding {
            RoundingMode::FullPrecision => rel,
            RoundingMode::PaperRounding => round_half_up(rel, 1),
        };
        weighted_sum += case.occurrences as f64 * signed_improvement(rel, case.truth);
        count += case.occurrences;
    }
    if count == 0 {
        return Err(Error::data("no cases with a defined relative difference"));
    }
    Ok(weighted_sum / count as f64)
}

/// Canonical case order: fewest disagreeing modes first, positives before
/// negatives, then pattern. Summation follows this order, so results do not
/// depend on input order.
fn case_order(a: &CaseReport, b: &CaseReport) -> std::cmp::Ordering {
    a.disagreements()
        .cmp(&b.disagreements())
        .then(a.truth.cmp(&b.truth))
        .then_with(|| b.pattern.cmp(&a.pattern))
}

fn sample_mode_set(samples: &[LabeledSample], weights: &WeightVector) -> Result<()> {
    let first = samples
        .first()
        .ok_or_else(|| Error::data("no samples to evaluate"))?;
    let first_modes: Vec<&SymptomId> = first.indicators.modes().collect();
    for s in samples {
        let modes: Vec<&SymptomId> = s.indicators.modes().collect();
        let same =
            modes.len() == first_modes.len() && modes.iter().all(|m| first_modes.contains(m));
        if !same {
            return Err(Error::data(format!(
                "sample {} uses a different mode set than {}",
                s.subject_id, first.subject_id
            )));
        }
    }
    let weight_modes = weights.modes();
    if first_modes.len() != weight_modes.len()
        || !first_modes.iter().all(|m| weight_modes.contains(m))
    {
        return Err(Error::data(format!(
            "dataset modes do not match weight modes ({weight_modes})"
        )));
    }
    Ok(())
}

/// Groups samples into misclassification cases.
///
/// Returns the case rows in canonical order. `weights` are applied as given
/// under full precision; under paper rounding they are rounded to two
/// decimals and both fused scores are rounded to two decimals before the
/// relative difference is taken.
pub fn build_cases(
    samples: &[LabeledSample],
    weights: &WeightVector,
    rounding: RoundingMode,
) -> Result<Vec<CaseReport>> {
    sample_mode_set(samples, weights)?;
    let modes = weights.modes();

    let mut groups: BTreeMap<(Vec<bool>, Truth), usize> = BTreeMap::new();
    for s in samples {
        let pattern = s.indicators.pattern_for(modes).ok_or_else(|| {
            Error::data(format!("sample {} does not cover every mode", s.subject_id))
        })?;
        *groups.entry((pattern, s.truth)).or_default() += 1;
    }

    let (effective, baseline) = effective_weights(weights, rounding)?;
    let finish = |score: f64| match rounding {
        RoundingMode::FullPrecision => score,
        RoundingMode::PaperRounding => round_half_up(score, 2),
    };

    let mut cases = Vec::new();
    for ((pattern, truth), occurrences) in groups {
        let expected = truth.as_label();
        if pattern.iter().all(|l| *l == expected) {
            continue;
        }
        let iv = IndicatorVector::from_pattern(modes, &pattern)?;
        let f_w = finish(fuse(&iv, &effective)?.score);
        let f_r = finish(fuse(&iv, &baseline)?.score);
        let rel = relative_difference(f_w, f_r);
        cases.push(CaseReport {
            pattern,
            truth,
            occurrences,
            f_w,
            f_r,
            rel_diff_pct: rel,
            signed_improvement_pct: rel.map(|r| signed_improvement(r, truth)),
            case_share_pct: 0.0,
        });
    }
    cases.sort_by(case_order);

    let case_samples: usize = cases.iter().map(|c| c.occurrences).sum();
    for c in &mut cases {
        c.case_share_pct = 100.0 * c.occurrences as f64 / case_samples as f64;
    }
    Ok(cases)
}

fn effective_weights(
    weights: &WeightVector,
    rounding: RoundingMode,
) -> Result<(WeightVector, WeightVector)> {
    let effective = match rounding {
        RoundingMode::FullPrecision => weights.clone(),
        RoundingMode::PaperRounding => weights.paper_rounded(),
    };
    Ok((effective, equal_weights(weights.modes())?))
}

/// Full comparison: case rows, totals and the aggregate improvement.
pub fn evaluate(
    samples: &[LabeledSample],
    weights: &WeightVector,
    rounding: RoundingMode,
) -> Result<EvaluationSummary> {
    let cases = build_cases(samples, weights, rounding)?;
    let excluded_cases = cases
        .iter()
        .enumerate()
        .filter(|(_, c)| c.rel_diff_pct.is_none())
        .map(|(i, _)| i)
        .collect();
    let weighted_improvement_pct = if cases.iter().any(|c| c.rel_diff_pct.is_some()) {
        Some(weighted_improvement(&cases, rounding)?)
    } else {
        None
    };
    Ok(EvaluationSummary {
        modes: weights.modes().clone(),
        cases,
        total_samples: samples.len(),
        weighted_improvement_pct,
        weights_used: effective_weights(weights, rounding)?.0,
        rounding_mode: rounding,
        excluded_cases,
    })
}

/// Parses `subject_id,truth,<mode>,<mode>,...` with 0/1 indicator columns.
pub fn parse_dataset_csv<R: Read>(source: R) -> Result<(ModeSet, Vec<LabeledSample>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(source);
    let header = reader.headers()?.clone();
    if header.len() < 3 || header[0].trim() != "subject_id" || header[1].trim() != "truth" {
        return Err(Error::data(
            "line 1: dataset header must be `subject_id,truth,<mode>,...`",
        ));
    }
    let modes = ModeSet::new(
        header
            .iter()
            .skip(2)
            .map(SymptomId::new)
            .collect::<Result<Vec<_>>>()?,
    )
    .map_err(|e| Error::data(format!("line 1: {e}")))?;

    let mut samples = Vec::new();
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
        let truth = Truth::parse(&row[1]).map_err(|e| Error::data(format!("line {line}: {e}")))?;
        let pattern = row
            .iter()
            .skip(2)
            .map(|v| match v.trim() {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(Error::data(format!(
                    "line {line}: indicator {other:?} is not 0/1"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        let subject_id = row[0].trim().to_string();
        let indicators =
            IndicatorVector::from_pattern(&modes, &pattern)?.with_subject(subject_id.clone());
        samples.push(LabeledSample {
            subject_id,
            truth,
            indicators,
        });
    }
    if samples.is_empty() {
        return Err(Error::data("dataset has no samples"));
    }
    Ok((modes, samples))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paper_weights() -> WeightVector {
        WeightVector::new(ModeSet::default_three(), vec![0.32, 0.15, 0.53]).unwrap()
    }

    fn samples(pattern: [bool; 3], truth: Truth, n: usize) -> Vec<LabeledSample> {
        (0..n)
            .map(|i| LabeledSample {
                subject_id: format!("{truth}-{i}"),
                truth,
                indicators: IndicatorVector::from_pattern(&ModeSet::default_three(), &pattern)
                    .unwrap(),
            })
            .collect()
    }

    #[test]
    fn case_one_row() {
        let s = samples([true, false, true], Truth::Positive, 7);
        let cases = build_cases(&s, &paper_weights(), RoundingMode::PaperRounding).unwrap();
        assert_eq!(cases.len(), 1);
        assert_eq!(cases[0].occurrences, 7);
        assert_eq!(cases[0].f_w, 0.85);
        assert_eq!(cases[0].f_r, 0.67);
        assert_eq!(cases[0].disagreements(), 1);
    }

    #[test]
    fn case_two_row() {
        let s = samples([false, true, false], Truth::Negative, 198);
        let cases = build_cases(&s, &paper_weights(), RoundingMode::PaperRounding).unwrap();
        assert_eq!(cases[0].occurrences, 198);
        assert_eq!(cases[0].f_w, 0.15);
        assert_eq!(cases[0].f_r, 0.33);
    }

    #[test]
    fn correct_groups_emit_no_row() {
        let mut s = samples([true, true, true], Truth::Positive, 5);
        s.extend(samples([false, false, false], Truth::Negative, 4));
        s.extend(samples([true, false, true], Truth::Positive, 2));
        let summary = evaluate(&s, &paper_weights(), RoundingMode::FullPrecision).unwrap();
        assert_eq!(summary.cases.len(), 1);
        assert_eq!(summary.total_samples, 11);
        assert_eq!(summary.case_samples(), 2);
    }

    #[test]
    fn all_zero_positive_is_excluded() {
        let mut s = samples([false, false, false], Truth::Positive, 3);
        s.extend(samples([false, false, true], Truth::Positive, 2));
        let summary = evaluate(&s, &paper_weights(), RoundingMode::FullPrecision).unwrap();
        assert_eq!(summary.cases.len(), 2);
        assert_eq!(summary.excluded_cases.len(), 1);
        let excluded = &summary.cases[summary.excluded_cases[0]];
        assert_eq!(excluded.rel_diff_pct, None);
        let kept = summary
            .cases
            .iter()
            .find(|c| c.rel_diff_pct.is_some())
            .unwrap();
        assert_eq!(
            summary.weighted_improvement_pct,
            kept.signed_improvement_pct
        );
    }

    #[test]
    fn nothing_aggregatable() {
        let s = samples([true, true, true], Truth::Positive, 3);
        let summary = evaluate(&s, &paper_weights(), RoundingMode::PaperRounding).unwrap();
        assert!(summary.cases.is_empty());
        assert_eq!(summary.weighted_improvement_pct, None);
        assert!(matches!(
            weighted_improvement(&summary.cases, RoundingMode::PaperRounding),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn relative_difference_values() {
        assert!((relative_difference(0.85, 0.67).unwrap() - 26.865671641791).abs() < 1e-9);
        assert!((relative_difference(0.53, 0.33).unwrap() - 60.606060606060).abs() < 1e-9);
        assert_eq!(relative_difference(0.4, 0.4), Some(0.0));
        assert_eq!(relative_difference(0.4, 0.0), None);
    }

    #[test]
    fn signed_improvement_orientation() {
        assert_eq!(signed_improvement(26.9, Truth::Positive), 26.9);
        assert_eq!(signed_improvement(-54.5, Truth::Negative), 54.5);
        assert_eq!(signed_improvement(0.0, Truth::Negative), 0.0);
    }

    #[test]
    fn single_case_aggregate_is_its_improvement() {
        let s = samples([true, true, false], Truth::Negative, 6);
        let cases = build_cases(&s, &paper_weights(), RoundingMode::FullPrecision).unwrap();
        let agg = weighted_improvement(&cases, RoundingMode::FullPrecision).unwrap();
        assert_eq!(Some(agg), cases[0].signed_improvement_pct);
    }

    #[test]
    fn mode_set_mismatch() {
        let mut s = samples([true, false, true], Truth::Positive, 2);
        s.push(LabeledSample {
            subject_id: "odd".into(),
            truth: Truth::Positive,
            indicators: IndicatorVector::parse_assignments("cough=1,fever=0").unwrap(),
        });
        assert!(matches!(
            build_cases(&s, &paper_weights(), RoundingMode::FullPrecision),
            Err(Error::Data(_))
        ));
        let two =
            WeightVector::new(ModeSet::parse_list("cough,fever").unwrap(), vec![0.5, 0.5]).unwrap();
        let s = samples([true, false, true], Truth::Positive, 2);
        assert!(matches!(
            build_cases(&s, &two, RoundingMode::FullPrecision),
            Err(Error::Data(_))
        ));
        assert!(build_cases(&[], &paper_weights(), RoundingMode::FullPrecision).is_err());
    }

    #[test]
    fn dataset_columns_may_be_reordered() {
        let csv = "subject_id,truth,fever,cough,breath\na,positive,1,1,0\nb,negative,0,0,1\n";
        let (modes, parsed) = parse_dataset_csv(csv.as_bytes()).unwrap();
        assert_eq!(modes.to_string(), "fever,cough,breath");
        let cases = build_cases(&parsed, &paper_weights(), RoundingMode::PaperRounding).unwrap();
        assert_eq!(cases[0].pattern, vec![true, false, true]);
        assert_eq!(cases[0].f_w, 0.85);
    }

    #[test]
    fn dataset_parse_errors() {
        for bad in [
            "subject_id,truth,cough\n",
            "id,truth,cough\na,positive,1\n",
            "subject_id,truth\na,positive\n",
            "subject_id,truth,cough\na,maybe,1\n",
            "subject_id,truth,cough\na,positive,2\n",
            "subject_id,truth,cough,fever\na,positive,1\n",
        ] {
            assert!(
                matches!(parse_dataset_csv(bad.as_bytes()), Err(Error::Data(_))),
                "{bad}"
            );
        }
    }
}
