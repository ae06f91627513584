//! Open-set scores: how confident the model is that a sample belongs to one
//! of the known classes. Higher means "more known".

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::runio::EvaluationRun;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScoringError {
    #[error("feature-norm rule requires feature vectors")]
    MissingFeatures,
    #[error("unknown scoring rule {0:?} (expected msp, mls or norm)")]
    UnknownRule(String),
}

/// Which open-set score to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreRule {
    /// Maximum softmax probability.
    Msp,
    /// Maximum logit.
    Mls,
    /// Euclidean norm of the penultimate features.
    FeatureNorm,
}

impl ScoreRule {
    pub const ALL: [ScoreRule; 3] = [ScoreRule::Msp, ScoreRule::Mls, ScoreRule::FeatureNorm];

    pub fn as_str(self) -> &'static str {
        match self {
            ScoreRule::Msp => "msp",
            ScoreRule::Mls => "mls",
            ScoreRule::FeatureNorm => "feature_norm",
        }
    }
}

impl fmt::Display for ScoreRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScoreRule {
    type Err = ScoringError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "msp" => Ok(ScoreRule::Msp),
            "mls" => Ok(ScoreRule::Mls),
            "norm" | "feature_norm" | "feature-norm" => Ok(ScoreRule::FeatureNorm),
            other => Err(ScoringError::UnknownRule(other.to_owned())),
        }
    }
}

/// Per-sample scores under one rule, aligned with the run's sample order,
/// plus the closed-set prediction of each sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector {
    pub rule: ScoreRule,
    pub scores: Vec<f64>,
    pub predictions: Vec<usize>,
}

impl ScoreVector {
    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

/// Softmax with the maximum subtracted before exponentiation.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Index of the largest entry; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Closed-set prediction (argmax logit) of every sample.
pub fn predictions(run: &EvaluationRun) -> Vec<usize> {
    run.samples().iter().map(|s| argmax(&s.logits)).collect()
}

/// Largest softmax probability. Equals `1 / sum(exp(l - max))`, the
/// softmax entry at the argmax.
fn max_softmax(logits: &[f64]) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logits.iter().map(|&v| (v - max).exp()).sum();
    1.0 / sum
}

pub fn msp_scores(run: &EvaluationRun) -> ScoreVector {
    ScoreVector {
        rule: ScoreRule::Msp,
        scores: run.samples().iter().map(|s| max_softmax(&s.logits)).collect(),
        predictions: predictions(run),
    }
}

pub fn mls_scores(run: &EvaluationRun) -> ScoreVector {
    ScoreVector {
        rule: ScoreRule::Mls,
        scores: run
            .samples()
            .iter()
            .map(|s| s.logits.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .collect(),
        predictions: predictions(run),
    }
}

pub fn feature_norm_scores(run: &EvaluationRun) -> Result<ScoreVector, ScoringError> {
    if !run.has_features() {
        return Err(ScoringError::MissingFeatures);
    }
    let scores = run
        .samples()
        .iter()
        .map(|s| {
            let f = s.features.as_deref().unwrap_or_default();
            f.iter().map(|v| v * v).sum::<f64>().sqrt()
        })
        .collect();
    Ok(ScoreVector {
        rule: ScoreRule::FeatureNorm,
        scores,
        predictions: predictions(run),
    })
}

/// Dispatches on `rule`.
pub fn score(run: &EvaluationRun, rule: ScoreRule) -> Result<ScoreVector, ScoringError> {
    match rule {
        ScoreRule::Msp => Ok(msp_scores(run)),
        ScoreRule::Mls => Ok(mls_scores(run)),
        ScoreRule::FeatureNorm => feature_norm_scores(run),
    }
}

/// Writes `sample_id,label,score,prediction` rows.
pub fn write_scores<W: Write>(run: &EvaluationRun, scores: &ScoreVector, mut writer: W) -> std::io::Result<()> {
    let mut out = String::from("sample_id,label,score,prediction\n");
    for ((sample, score), pred) in run.samples().iter().zip(&scores.scores).zip(&scores.predictions) {
        let id = if sample.id.contains([',', '"', '\n', '\r']) {
            format!("\"{}\"", sample.id.replace('"', "\"\""))
        } else {
            sample.id.clone()
        };
        out.push_str(&format!("{id},{},{score},{pred}\n", sample.label.as_i64()));
    }
    writer.write_all(out.as_bytes())
}
