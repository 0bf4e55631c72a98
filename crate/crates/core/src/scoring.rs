//! Weighted aggregation, multi-participant score merging and windowed
//! convergence detection.

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::model::{ScoreValue, ScoreVector, WeightVector, CRITERIA};
use crate::scalar::Scalar;

/// Scalar fitness of a plan: the weighted sum of its criterion scores.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AggregateScore<T>(pub T);

impl<T: Scalar> AggregateScore<T> {
    pub fn value(self) -> T {
        self.0
    }
}

pub fn aggregate_score<T: Scalar>(scores: &ScoreVector, weights: &WeightVector<T>) -> AggregateScore<T> {
    let total: T = scores.iter().zip(weights.weights()).map(|(s, w)| *w * s.value::<T>()).sum();
    // Rounding can push a perfect score a hair past the bound.
    AggregateScore(total.max(T::zero()).min(T::lit(10.0)))
}

pub fn score_delta<T: Scalar>(previous: AggregateScore<T>, current: AggregateScore<T>) -> T {
    (current.0 - previous.0).abs()
}

/// How per-participant score submissions combine into one vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MergeMode {
    /// Mean of all submissions, rounded to the lattice.
    #[default]
    Mean,
    /// Mean of human submissions only, when any human scored.
    HumanOverride,
}

/// Per-criterion mean of half points, rounded to nearest with ties up.
pub fn merge_participant_scores(submissions: &[ScoreVector]) -> Result<ScoreVector> {
    if submissions.is_empty() {
        return Err(Error::validation("no score submissions to merge"));
    }
    let n = submissions.len() as u32;
    let mut merged = [ScoreValue::MIN; CRITERIA];
    for (i, slot) in merged.iter_mut().enumerate() {
        let sum: u32 = submissions.iter().map(|s| s.0[i].half_units() as u32).sum();
        // floor(sum / n + 1/2) in integers
        let rounded = (2 * sum + n) / (2 * n);
        *slot = ScoreValue::from_half_units(rounded as u8)?;
    }
    Ok(ScoreVector(merged))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceConfig<T> {
    /// Deltas must fall strictly below this, in aggregate-score units.
    pub threshold: T,
    /// Number of consecutive deltas that must all be below the threshold.
    pub window: usize,
    pub max_iterations: usize,
}

impl<T: Scalar> ConvergenceConfig<T> {
    pub fn new(threshold: T, window: usize, max_iterations: usize) -> Result<Self> {
        #[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail too
        if !(threshold > T::zero()) || !threshold.is_finite() {
            return Err(Error::validation("convergence threshold must be positive"));
        }
        if window < 1 {
            return Err(Error::validation("convergence window must be at least 1"));
        }
        if max_iterations < window + 1 {
            return Err(Error::validation("max_iterations must be at least window + 1"));
        }
        Ok(ConvergenceConfig { threshold, window, max_iterations })
    }
}

impl<T: Scalar> Default for ConvergenceConfig<T> {
    fn default() -> Self {
        ConvergenceConfig { threshold: T::lit(0.5), window: 3, max_iterations: 50 }
    }
}

impl<'de, T: Scalar + Deserialize<'de>> Deserialize<'de> for ConvergenceConfig<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        #[derive(Deserialize)]
        struct Raw<T> {
            threshold: Option<T>,
            window: Option<usize>,
            max_iterations: Option<usize>,
        }
        let raw = Raw::<T>::deserialize(d)?;
        let def = ConvergenceConfig::<T>::default();
        ConvergenceConfig::new(
            raw.threshold.unwrap_or(def.threshold),
            raw.window.unwrap_or(def.window),
            raw.max_iterations.unwrap_or(def.max_iterations),
        )
        .map_err(D::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergenceState {
    InsufficientHistory,
    InProgress,
    Converged,
    IterationCapReached,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStatus<T> {
    pub state: ConvergenceState,
    /// The most recent deltas, oldest first, at most `window` of them.
    pub deltas_considered: Vec<T>,
}

impl<T> ConvergenceStatus<T> {
    pub fn is_converged(&self) -> bool {
        self.state == ConvergenceState::Converged
    }
}

/// Classifies an aggregate history, oldest first, against `config`.
pub fn check_convergence<T: Scalar>(
    history: &[AggregateScore<T>],
    config: &ConvergenceConfig<T>,
) -> ConvergenceStatus<T> {
    let deltas: Vec<T> = history.windows(2).map(|w| score_delta(w[0], w[1])).collect();
    let recent = deltas[deltas.len().saturating_sub(config.window)..].to_vec();
    let converged = recent.len() == config.window && recent.iter().all(|d| *d < config.threshold);
    let state = if converged {
        ConvergenceState::Converged
    } else if history.len() >= config.max_iterations {
        ConvergenceState::IterationCapReached
    } else if history.len() < config.window + 1 {
        ConvergenceState::InsufficientHistory
    } else {
        ConvergenceState::InProgress
    };
    ConvergenceStatus { state, deltas_considered: recent }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::normalize_weights;

    fn sv(values: [f64; 3]) -> ScoreVector {
        ScoreVector::from_values(values).unwrap()
    }

    fn hist(values: &[f64]) -> Vec<AggregateScore<f64>> {
        values.iter().map(|v| AggregateScore(*v)).collect()
    }

    #[test]
    fn aggregate_examples() {
        let w = normalize_weights([3.0, 1.0, 2.0]).unwrap();
        assert_eq!(aggregate_score(&sv([10.0, 10.0, 10.0]), &w).0, 10.0);
        let w = normalize_weights([2.0, 1.0, 1.0]).unwrap();
        // 0.5 * 8 + 0.25 * 6 + 0.25 * 7 = 4 + 1.5 + 1.75
        assert_eq!(aggregate_score(&sv([8.0, 6.0, 7.0]), &w).0, 7.25);
        let w = WeightVector::<f64>::equal();
        assert!((aggregate_score(&sv([5.0, 5.0, 5.0]), &w).0 - 5.0).abs() < 1e-12);
    }

    #[test]
    fn merge_examples() {
        let merged = merge_participant_scores(&[sv([7.0, 7.0, 6.0]), sv([8.0, 7.5, 6.5])]).unwrap();
        assert_eq!(merged, sv([7.5, 7.5, 6.5]));
        let single = sv([6.5, 3.0, 9.0]);
        assert_eq!(merge_participant_scores(&[single]).unwrap(), single);
        let three = merge_participant_scores(&[sv([6.0, 0.0, 0.0]), sv([6.5, 0.0, 0.0]), sv([7.0, 0.0, 0.0])]).unwrap();
        assert_eq!(three.0[0], ScoreValue::from_half_units(13).unwrap());
        assert!(merge_participant_scores(&[]).is_err());
    }

    #[test]
    fn delta_examples() {
        assert!((score_delta(AggregateScore(7.0_f64), AggregateScore(7.2)) - 0.2).abs() < 1e-12);
        assert_eq!(score_delta(AggregateScore(4.5), AggregateScore(4.5)), 0.0);
        assert_eq!(score_delta(AggregateScore(2.0), AggregateScore(9.0)), 7.0);
    }

    #[test]
    fn convergence_examples() {
        let cfg = ConvergenceConfig::new(0.5, 3, 50).unwrap();
        let status = check_convergence(&hist(&[5.0, 7.0, 7.2, 7.4, 7.3]), &cfg);
        assert_eq!(status.state, ConvergenceState::Converged);
        assert_eq!(status.deltas_considered.len(), 3);

        assert_eq!(check_convergence(&hist(&[5.0]), &cfg).state, ConvergenceState::InsufficientHistory);
        assert_eq!(check_convergence(&hist(&[]), &cfg).state, ConvergenceState::InsufficientHistory);

        let cfg2 = ConvergenceConfig::new(0.5, 2, 50).unwrap();
        assert_eq!(check_convergence(&hist(&[5.0, 6.0, 7.0, 8.0]), &cfg2).state, ConvergenceState::InProgress);
    }

    #[test]
    fn boundary_delta_does_not_converge() {
        let cfg = ConvergenceConfig::new(0.5, 2, 50).unwrap();
        assert_eq!(check_convergence(&hist(&[5.0, 5.5, 6.0]), &cfg).state, ConvergenceState::InProgress);
        assert_eq!(check_convergence(&hist(&[5.0, 5.5, 5.75]), &cfg).state, ConvergenceState::InProgress);
    }

    #[test]
    fn iteration_cap() {
        let cfg = ConvergenceConfig::new(0.5, 1, 3).unwrap();
        assert_eq!(check_convergence(&hist(&[1.0, 3.0, 5.0]), &cfg).state, ConvergenceState::IterationCapReached);
        // convergence wins over the cap
        assert_eq!(check_convergence(&hist(&[1.0, 3.0, 3.0]), &cfg).state, ConvergenceState::Converged);
    }

    #[test]
    fn config_validation() {
        assert!(ConvergenceConfig::new(0.0, 3, 50).is_err());
        assert!(ConvergenceConfig::new(0.5, 0, 50).is_err());
        assert!(ConvergenceConfig::new(0.5, 3, 3).is_err());
        assert!(ConvergenceConfig::new(0.5, 3, 4).is_ok());
        let cfg: ConvergenceConfig<f64> = serde_json::from_str("{}").unwrap();
        assert_eq!(cfg, ConvergenceConfig::default());
        assert!(serde_json::from_str::<ConvergenceConfig<f64>>(r#"{"window":0}"#).is_err());
    }
}
