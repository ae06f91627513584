//! Closed- and open-set evaluation metrics.
//!
//! Conventions: AUROC and OSCR treat known samples as positives (scores
//! measure "knownness"); average precision treats unknown samples as
//! positives and retrieves the lowest scores first. Ties are always handled
//! exactly (average ranks, tie-aware precision), so results never depend on
//! input order.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::runio::{EvaluationRun, Label, MetricsReport};
use crate::scoring::{self, ScoreRule, ScoreVector, ScoringError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("accuracy undefined without known samples")]
    NoKnownSamples,
    #[error("{metric} undefined: no {side} samples")]
    EmptySide {
        metric: &'static str,
        side: &'static str,
    },
    #[error("non-finite score")]
    NonFinite,
    #[error("length mismatch: {expected} samples but {found} values")]
    LengthMismatch { expected: usize, found: usize },
    #[error("openness needs at least one known class")]
    NoKnownClasses,
    #[error(transparent)]
    Scoring(#[from] ScoringError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveKind {
    /// (false positive rate, true positive rate)
    Roc,
    /// (false positive rate on unknowns, correct classification rate on knowns)
    Oscr,
}

/// A piecewise-linear curve, sorted by x, from x = 0 to x = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoints {
    pub kind: CurveKind,
    pub points: Vec<(f64, f64)>,
}

impl CurvePoints {
    /// Trapezoidal area under the curve.
    pub fn area(&self) -> f64 {
        trapezoid(&self.points)
    }

    pub fn to_pairs(&self) -> Vec<[f64; 2]> {
        self.points.iter().map(|&(x, y)| [x, y]).collect()
    }
}

fn trapezoid(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
        .sum()
}

/// Fraction of known samples whose prediction equals their label. Unknown
/// samples are ignored.
pub fn accuracy(run: &EvaluationRun, predictions: &[usize]) -> Result<f64, MetricsError> {
    if predictions.len() != run.len() {
        return Err(MetricsError::LengthMismatch {
            expected: run.len(),
            found: predictions.len(),
        });
    }
    let (mut known, mut correct) = (0usize, 0usize);
    for (label, &pred) in run.labels().zip(predictions) {
        if let Label::Known(class) = label {
            known += 1;
            correct += usize::from(class == pred);
        }
    }
    if known == 0 {
        return Err(MetricsError::NoKnownSamples);
    }
    Ok(correct as f64 / known as f64)
}

/// Samples sharing one score value, counted by kind.
#[derive(Debug, Clone, Copy, Default)]
struct TieGroup {
    positives: u64,
    negatives: u64,
    /// Positives that also count as "hits" (for OSCR: correctly classified).
    hits: u64,
}

/// Groups `(score, is_positive, is_hit)` by equal score, in descending score
/// order.
fn descending_groups(mut items: Vec<(f64, bool, bool)>) -> Vec<TieGroup> {
    items.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut groups: Vec<TieGroup> = Vec::new();
    let mut last: Option<f64> = None;
    for (score, positive, hit) in items {
        if last != Some(score) {
            groups.push(TieGroup::default());
            last = Some(score);
        }
        let g = groups.last_mut().expect("group pushed above");
        if positive {
            g.positives += 1;
            g.hits += u64::from(hit);
        } else {
            g.negatives += 1;
        }
    }
    groups
}

fn check_sides(
    metric: &'static str,
    positives: &[f64],
    negatives: &[f64],
    positive_side: &'static str,
    negative_side: &'static str,
) -> Result<(), MetricsError> {
    if positives.is_empty() {
        return Err(MetricsError::EmptySide {
            metric,
            side: positive_side,
        });
    }
    if negatives.is_empty() {
        return Err(MetricsError::EmptySide {
            metric,
            side: negative_side,
        });
    }
    if positives.iter().chain(negatives).any(|v| !v.is_finite()) {
        return Err(MetricsError::NonFinite);
    }
    Ok(())
}

fn labelled(known: &[f64], unknown: &[f64]) -> Vec<(f64, bool, bool)> {
    known
        .iter()
        .map(|&s| (s, true, true))
        .chain(unknown.iter().map(|&s| (s, false, false)))
        .collect()
}

/// `num / den` for `0 <= num <= den`, computed so that
/// `unit_ratio(n, d) + unit_ratio(d - n, d) == 1.0` exactly.
fn unit_ratio(num: u128, den: u128) -> f64 {
    if 2 * num >= den {
        num as f64 / den as f64
    } else {
        // (den - num) / den lies in (0.5, 1], so the subtraction is exact.
        1.0 - (den - num) as f64 / den as f64
    }
}

/// Area under the ROC curve with known samples as positives: the
/// probability that a random known sample outscores a random unknown one,
/// ties counting one half.
pub fn auroc(known: &[f64], unknown: &[f64]) -> Result<f64, MetricsError> {
    check_sides("AUROC", known, unknown, "known", "unknown")?;
    let groups = descending_groups(labelled(known, unknown));
    let n_neg = unknown.len() as u128;
    // 2 * wins + ties, over 2 * n_pos * n_neg.
    let mut twice_wins_plus_ties: u128 = 0;
    let mut negatives_seen: u128 = 0;
    for g in &groups {
        let (pos, neg) = (g.positives as u128, g.negatives as u128);
        let below = n_neg - negatives_seen - neg;
        twice_wins_plus_ties += 2 * pos * below + pos * neg;
        negatives_seen += neg;
    }
    Ok(unit_ratio(
        twice_wins_plus_ties,
        2 * known.len() as u128 * n_neg,
    ))
}

/// ROC points (false positive rate, true positive rate) at every distinct
/// score threshold, from (0, 0) to (1, 1).
pub fn roc_curve(known: &[f64], unknown: &[f64]) -> Result<CurvePoints, MetricsError> {
    check_sides("AUROC", known, unknown, "known", "unknown")?;
    let (n_pos, n_neg) = (known.len() as f64, unknown.len() as f64);
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0u64, 0u64);
    for g in descending_groups(labelled(known, unknown)) {
        tp += g.positives;
        fp += g.negatives;
        points.push((fp as f64 / n_neg, tp as f64 / n_pos));
    }
    Ok(CurvePoints {
        kind: CurveKind::Roc,
        points,
    })
}

/// Open-Set Classification Rate: trapezoidal area under the curve of
/// correct-classification rate on known samples against false positive rate
/// on unknown samples, sweeping the threshold over every distinct score.
pub fn oscr(run: &EvaluationRun, scores: &ScoreVector) -> Result<(f64, CurvePoints), MetricsError> {
    if scores.scores.len() != run.len() || scores.predictions.len() != run.len() {
        return Err(MetricsError::LengthMismatch {
            expected: run.len(),
            found: scores.scores.len(),
        });
    }
    let mut items = Vec::with_capacity(run.len());
    let (mut n_known, mut n_unknown) = (0u64, 0u64);
    for ((label, &score), &pred) in run.labels().zip(&scores.scores).zip(&scores.predictions) {
        if !score.is_finite() {
            return Err(MetricsError::NonFinite);
        }
        match label {
            Label::Known(class) => {
                n_known += 1;
                items.push((score, true, class == pred));
            }
            Label::Unknown => {
                n_unknown += 1;
                items.push((score, false, false));
            }
        }
    }
    if n_known == 0 {
        return Err(MetricsError::EmptySide {
            metric: "OSCR",
            side: "known",
        });
    }
    if n_unknown == 0 {
        return Err(MetricsError::EmptySide {
            metric: "OSCR",
            side: "unknown",
        });
    }
    // Threshold +inf accepts nothing.
    let mut points = vec![(0.0, 0.0)];
    let (mut correct, mut false_pos) = (0u64, 0u64);
    for g in descending_groups(items) {
        correct += g.hits;
        false_pos += g.negatives;
        points.push((
            false_pos as f64 / n_unknown as f64,
            correct as f64 / n_known as f64,
        ));
    }
    let curve = CurvePoints {
        kind: CurveKind::Oscr,
        points,
    };
    Ok((curve.area(), curve))
}

/// Non-interpolated average precision of retrieving unknown samples, which
/// are ranked first when their score is lowest.
///
/// Tied scores contribute the expected precision over every ordering of the
/// tied block, evaluated in closed form.
pub fn average_precision(known: &[f64], unknown: &[f64]) -> Result<f64, MetricsError> {
    check_sides("AP", unknown, known, "unknown", "known")?;
    // Positives are unknowns; retrieval order is ascending score, which is
    // descending order of the negated score.
    let items: Vec<(f64, bool, bool)> = unknown
        .iter()
        .map(|&s| (-s, true, true))
        .chain(known.iter().map(|&s| (-s, false, false)))
        .collect();
    let total_pos = unknown.len() as f64;
    let (mut seen, mut seen_pos) = (0u64, 0u64);
    let mut sum = 0.0;
    for g in descending_groups(items) {
        let size = g.positives + g.negatives;
        if g.positives > 0 {
            sum += tied_block_precision(seen, seen_pos, size, g.positives);
        }
        seen += size;
        seen_pos += g.positives;
    }
    Ok(sum / total_pos)
}

/// Expected sum of precisions at the positives of a tied block of `size`
/// items holding `pos` positives, preceded by `before` items of which
/// `before_pos` are positive, averaged over all orderings of the block.
///
/// A positive lands at each block offset `j` (1-based) with probability
/// `1/size`; the other `pos - 1` positives then fill `(j - 1) (pos - 1) /
/// (size - 1)` of the earlier slots in expectation.
fn tied_block_precision(before: u64, before_pos: u64, size: u64, pos: u64) -> f64 {
    let fill = if size > 1 {
        (pos - 1) as f64 / (size - 1) as f64
    } else {
        0.0
    };
    let mut total = 0.0;
    for j in 1..=size {
        let hits = before_pos as f64 + 1.0 + (j - 1) as f64 * fill;
        total += hits / (before + j) as f64;
    }
    total * pos as f64 / size as f64
}

/// Openness of a problem with `known_classes` training/target classes and
/// `unknown_classes` additional test classes: `1 - sqrt(2K / (2K + U))`.
pub fn openness(known_classes: usize, unknown_classes: usize) -> Result<f64, MetricsError> {
    if known_classes == 0 {
        return Err(MetricsError::NoKnownClasses);
    }
    let twice_k = 2.0 * known_classes as f64;
    Ok(1.0 - (twice_k / (twice_k + unknown_classes as f64)).sqrt())
}

/// Splits scores by label into (known, unknown).
pub fn split_by_label(run: &EvaluationRun, scores: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut known = Vec::new();
    let mut unknown = Vec::new();
    for (label, &s) in run.labels().zip(scores) {
        if label.is_known() {
            known.push(s);
        } else {
            unknown.push(s);
        }
    }
    (known, unknown)
}

/// Scores `run` under `rule` and computes every metric.
///
/// Without unknown samples, AUROC, OSCR and AP are `None`.
pub fn evaluate(
    run: &EvaluationRun,
    rule: ScoreRule,
    unknown_classes: usize,
    with_curves: bool,
) -> Result<MetricsReport, MetricsError> {
    let scores = scoring::score(run, rule)?;
    evaluate_scores(run, &scores, unknown_classes, with_curves)
}

pub fn evaluate_scores(
    run: &EvaluationRun,
    scores: &ScoreVector,
    unknown_classes: usize,
    with_curves: bool,
) -> Result<MetricsReport, MetricsError> {
    let acc = accuracy(run, &scores.predictions)?;
    let openness = openness(run.num_classes(), unknown_classes)?;
    let mut report = MetricsReport {
        rule: scores.rule,
        accuracy: acc,
        auroc: None,
        oscr: None,
        ap: None,
        openness,
        roc_points: None,
        oscr_points: None,
    };
    if run.num_unknown_samples() > 0 {
        let (known, unknown) = split_by_label(run, &scores.scores);
        report.auroc = Some(auroc(&known, &unknown)?);
        report.ap = Some(average_precision(&known, &unknown)?);
        let (area, curve) = oscr(run, scores)?;
        report.oscr = Some(area);
        if with_curves {
            report.roc_points = Some(roc_curve(&known, &unknown)?.to_pairs());
            report.oscr_points = Some(curve.to_pairs());
        }
    }
    Ok(report)
}
