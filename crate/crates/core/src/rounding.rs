//! Display rounding.
//!
//! Scores print at 2 decimals and percentages at 1, rounding half away from
//! zero. Binary representation error is absorbed before rounding so that a
//! value such as 0.145 (stored as 0.14499999...) still rounds to 0.15.

use serde::{Deserialize, Serialize};

/// How far the evaluation pipeline rounds intermediate values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoundingMode {
    /// Every intermediate value at full double precision.
    FullPrecision,
    /// Replicates hand-tabulated results: weights and fused scores at two
    /// decimals, relative differences at one decimal before aggregation.
    PaperRounding,
}

impl RoundingMode {
    pub fn label(self) -> &'static str {
        match self {
            RoundingMode::FullPrecision => "full",
            RoundingMode::PaperRounding => "paper",
        }
    }
}

/// Rounds `value` to `decimals` places, ties away from zero.
pub fn round_half_up(value: f64, decimals: u32) -> f64 {
    if !value.is_finite() {
        return value;
    }
    let scale = 10f64.powi(decimals as i32);
    let scaled = value * scale;
    // relative nudge of a few ulps so representation error does not decide ties
    let nudged = scaled + scaled.signum() * scaled.abs().max(1.0) * 1e-12;
    let rounded = nudged.round() / scale;
    if rounded == 0.0 {
        0.0
    } else {
        rounded
    }
}

/// Score formatted at 2 decimals.
pub fn fmt_score(value: f64) -> String {
    format!("{:.2}", round_half_up(value, 2))
}

/// Percentage formatted at 1 decimal.
pub fn fmt_pct(value: f64) -> String {
    format!("{:.1}", round_half_up(value, 1))
}

/// Percentage formatted at 1 decimal with an explicit sign.
pub fn fmt_signed_pct(value: f64) -> String {
    let r = round_half_up(value, 1);
    if r > 0.0 {
        format!("+{r:.1}")
    } else {
        format!("{r:.1}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ties_round_away_from_zero() {
        assert_eq!(round_half_up(0.145, 2), 0.15);
        assert_eq!(round_half_up(0.125, 2), 0.13);
        assert_eq!(round_half_up(-29.85, 1), -29.9);
        assert_eq!(round_half_up(2.5, 0), 3.0);
    }

    #[test]
    fn table_scores() {
        assert_eq!(fmt_score(2.0 / 3.0), "0.67");
        assert_eq!(fmt_score(1.0 / 3.0), "0.33");
        assert_eq!(fmt_score(0.32 + 0.53), "0.85");
        assert_eq!(fmt_score(0.0), "0.00");
    }

    #[test]
    fn negative_zero_is_not_printed() {
        assert_eq!(fmt_signed_pct(-0.01), "0.0");
        assert_eq!(fmt_signed_pct(26.866), "+26.9");
        assert_eq!(fmt_signed_pct(-54.545), "-54.5");
    }
}
