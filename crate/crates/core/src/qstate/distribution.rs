use crate::tolerance;

use super::{Result, StateError};

/// Probability distribution over a finite labelled alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalDistribution {
    labels: Vec<String>,
    probs: Vec<f64>,
}

impl ClassicalDistribution {
    /// Validated distribution with labels `0..n`.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        let labels = (0..probs.len()).map(|i| i.to_string()).collect();
        Self::with_labels(labels, probs)
    }

    pub fn with_labels(labels: Vec<String>, probs: Vec<f64>) -> Result<Self> {
        if labels.len() != probs.len() {
            return Err(StateError::BadDistribution(format!(
                "{} labels for {} probabilities",
                labels.len(),
                probs.len()
            )));
        }
        if probs.is_empty() {
            return Err(StateError::BadDistribution("empty alphabet".into()));
        }
        if let Some(p) = probs.iter().find(|p| !(**p >= 0.0)) {
            return Err(StateError::BadDistribution(format!(
                "negative or NaN probability {p}"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > tolerance::DISTRIBUTION {
            return Err(StateError::BadDistribution(format!(
                "probabilities sum to {total}"
            )));
        }
        Ok(Self { labels, probs })
    }

    /// Normalises nonnegative weights into a distribution.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || weights.iter().any(|w| *w < 0.0) {
            return Err(StateError::BadDistribution(
                "weights must be nonnegative with positive sum".into(),
            ));
        }
        let labels = (0..weights.len()).map(|i| i.to_string()).collect();
        Ok(Self {
            labels,
            probs: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            labels: (0..n).map(|i| i.to_string()).collect(),
            probs: vec![1.0 / n as f64; n],
        }
    }

    /// Point mass on `index`.
    pub fn point(n: usize, index: usize) -> Self {
        let mut probs = vec![0.0; n];
        probs[index] = 1.0;
        Self {
            labels: (0..n).map(|i| i.to_string()).collect(),
            probs,
        }
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn same_alphabet(&self, other: &Self) -> bool {
        self.labels == other.labels
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(ClassicalDistribution::new(vec![0.5, 0.5]).is_ok());
        assert!(ClassicalDistribution::new(vec![0.5, 0.6]).is_err());
        assert!(ClassicalDistribution::new(vec![1.5, -0.5]).is_err());
        assert!(ClassicalDistribution::new(vec![]).is_err());
    }

    #[test]
    fn weights_normalised() {
        let d = ClassicalDistribution::from_weights(vec![1.0, 3.0]).unwrap();
        assert_eq!(d.probs(), &[0.25, 0.75]);
    }
}
