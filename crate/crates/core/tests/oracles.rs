use std::collections::VecDeque;

use proptest::prelude::*;

use osrkit_core::analysis::{aggregate, correlation_report, pearson, GroupField, RunSummary};
use osrkit_core::metrics::{auroc, average_precision, evaluate, oscr, roc_curve, split_by_label};
use osrkit_core::runio::{parse_run, write_run, EvaluationRun, Label, Sample, SemanticTree, TreeNode};
use osrkit_core::scoring::{feature_norm_scores, score, ScoreRule, ScoreVector};
use osrkit_core::splits::tree_distance;
use osrkit_core::synth::{generate_run, SynthConfig};

fn pairwise_auroc(known: &[f64], unknown: &[f64]) -> f64 {
    let mut twice = 0u64;
    for &k in known {
        for &u in unknown {
            twice += if k > u {
                2
            } else if k == u {
                1
            } else {
                0
            };
        }
    }
    twice as f64 / (2.0 * known.len() as f64 * unknown.len() as f64)
}

fn grid_scores(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((0i32..6).prop_map(|v| v as f64 * 0.5), 1..max_len)
}

fn run_with(labels: &[Label], preds: &[usize], num_classes: usize) -> EvaluationRun {
    let samples = labels
        .iter()
        .zip(preds)
        .enumerate()
        .map(|(i, (&label, &p))| Sample {
            id: format!("s{i}"),
            label,
            logits: (0..num_classes).map(|c| if c == p { 1.0 } else { 0.0 }).collect(),
            features: None,
        })
        .collect();
    EvaluationRun::new(num_classes, samples).unwrap()
}

// Frozen values below come from independent oracles: scikit-learn's
// roc_auc_score, exact rational enumeration of tied orderings, and
// 40-digit mpmath arithmetic.

#[test]
fn auroc_matches_sklearn_on_tied_instance() {
    let known = [0.9, 0.8, 0.8, 0.3, 0.5, 0.5];
    let unknown = [0.8, 0.1, 0.5, 0.2];
    assert_eq!(auroc(&known, &unknown).unwrap(), 0.75);
}

#[test]
fn average_precision_matches_tied_ordering_enumeration() {
    let known = [0.9, 0.8, 0.8, 0.3, 0.5, 0.5];
    let unknown = [0.8, 0.1, 0.5, 0.2];
    let expected = 11801.0 / 15120.0;
    assert!((average_precision(&known, &unknown).unwrap() - expected).abs() < 1e-15);
}

#[test]
fn oscr_matches_threshold_sweep() {
    let labels = [
        Label::Known(0),
        Label::Known(1),
        Label::Known(1),
        Label::Unknown,
        Label::Known(0),
        Label::Unknown,
        Label::Unknown,
    ];
    let preds = [0, 1, 0, 0, 0, 1, 0];
    let run = run_with(&labels, &preds, 2);
    let scores = ScoreVector {
        rule: ScoreRule::Mls,
        scores: vec![0.9, 0.8, 0.7, 0.8, 0.4, 0.3, 0.9],
        predictions: preds.to_vec(),
    };
    let (area, curve) = oscr(&run, &scores).unwrap();
    assert!((area - 5.0 / 12.0).abs() < 1e-15);
    assert_eq!(curve.points.first(), Some(&(0.0, 0.0)));
    assert_eq!(curve.points.last(), Some(&(1.0, 0.75)));
}

#[test]
fn pearson_matches_high_precision_oracle() {
    let rho = pearson(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 5.0]).unwrap();
    assert!((rho - 0.8315218406202999).abs() < 1e-15);
}

proptest! {
    #[test]
    fn auroc_equals_pairwise_count(known in grid_scores(40), unknown in grid_scores(40)) {
        let a = auroc(&known, &unknown).unwrap();
        prop_assert!((a - pairwise_auroc(&known, &unknown)).abs() <= 1e-12);
        prop_assert!((roc_curve(&known, &unknown).unwrap().area() - a).abs() <= 1e-12);
    }

    #[test]
    fn average_precision_is_order_free_and_bounded(known in grid_scores(30), unknown in grid_scores(30)) {
        let ap = average_precision(&known, &unknown).unwrap();
        let mut k = known.clone();
        let mut u = unknown.clone();
        k.reverse();
        u.reverse();
        prop_assert_eq!(ap, average_precision(&k, &u).unwrap());
        prop_assert!(ap > 0.0 && ap <= 1.0);
    }

    #[test]
    fn pearson_matches_two_pass_formula(
        pairs in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 3..40)
    ) {
        let x: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let y: Vec<f64> = pairs.iter().map(|p| p.0 + p.1).collect();
        let n = x.len() as f64;
        let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
        let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
        let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
        let oracle = sxy / (sxx * syy).sqrt();
        prop_assert!((pearson(&x, &y).unwrap() - oracle).abs() < 1e-12);
    }

    #[test]
    fn tree_distance_equals_bfs(parents in prop::collection::vec(any::<prop::sample::Index>(), 0..40)) {
        let n = parents.len() + 1;
        let parent_of = |i: usize| if i == 0 { None } else { Some(parents[i - 1].index(i)) };
        let nodes = (0..n)
            .map(|i| TreeNode { id: format!("n{i}"), parent: parent_of(i).map(|p| format!("n{p}")), class: None })
            .collect();
        let tree = SemanticTree::new(nodes).unwrap();
        let mut adj = vec![Vec::new(); n];
        for i in 1..n {
            let p = parent_of(i).unwrap();
            adj[i].push(p);
            adj[p].push(i);
        }
        for a in 0..n {
            let mut dist = vec![usize::MAX; n];
            dist[a] = 0;
            let mut queue = VecDeque::from([a]);
            while let Some(v) = queue.pop_front() {
                for &w in &adj[v] {
                    if dist[w] == usize::MAX {
                        dist[w] = dist[v] + 1;
                        queue.push_back(w);
                    }
                }
            }
            for (b, &d) in dist.iter().enumerate() {
                prop_assert_eq!(tree_distance(&tree, &format!("n{a}"), &format!("n{b}")).unwrap(), d);
            }
        }
    }
}

#[test]
fn aggregate_matches_two_pass_oracle() {
    let acc = [0.61, 0.72, 0.55, 0.9, 0.83];
    let summaries: Vec<RunSummary> = acc
        .iter()
        .enumerate()
        .map(|(i, &a)| RunSummary {
            run_id: format!("r{i}"),
            method: "m".into(),
            dataset: "d".into(),
            accuracy: a,
            auroc: a * 0.9,
            oscr: a * 0.8,
            ap: 0.5,
        })
        .collect();
    let stats = aggregate(&summaries, GroupField::Method).unwrap();
    let mean = acc.iter().sum::<f64>() / 5.0;
    let var = acc.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / 5.0;
    assert!((stats[0].mean.accuracy - mean).abs() < 1e-15);
    assert!((stats[0].std.accuracy - var.sqrt()).abs() < 1e-15);
    assert_eq!(stats[0].std.ap, 0.0);

    let report = correlation_report(&summaries).unwrap();
    let auroc: Vec<f64> = acc.iter().map(|a| a * 0.9).collect();
    assert!((report.rho - pearson(&acc, &auroc).unwrap()).abs() < 1e-15);
}

#[test]
fn evaluate_equals_library_composition() {
    let run = generate_run(&SynthConfig {
        samples_per_class: 20,
        num_unknown: 50,
        ..SynthConfig::default()
    })
    .unwrap();
    let report = evaluate(&run, ScoreRule::Mls, 4, true).unwrap();
    let s = score(&run, ScoreRule::Mls).unwrap();
    let (k, u) = split_by_label(&run, &s.scores);
    assert_eq!(report.auroc, Some(auroc(&k, &u).unwrap()));
    assert_eq!(report.ap, Some(average_precision(&k, &u).unwrap()));
    assert_eq!(report.oscr, Some(oscr(&run, &s).unwrap().0));
    assert!(report.roc_points.is_some() && report.oscr_points.is_some());
}

#[test]
fn synthetic_run_survives_file_round_trip() {
    let run = generate_run(&SynthConfig {
        samples_per_class: 10,
        num_unknown: 20,
        ..SynthConfig::default()
    })
    .unwrap();
    let mut bytes = Vec::new();
    write_run(&run, &mut bytes).unwrap();
    assert_eq!(parse_run(bytes.as_slice()).unwrap(), run);
}

fn norm_auroc(cfg: &SynthConfig) -> f64 {
    let run = generate_run(cfg).unwrap();
    let s = feature_norm_scores(&run).unwrap();
    let (k, u) = split_by_label(&run, &s.scores);
    auroc(&k, &u).unwrap()
}

#[test]
fn norm_auroc_is_invariant_under_joint_norm_scaling() {
    let base = SynthConfig {
        known_norm: 2.0,
        unknown_norm: 1.5,
        norm_noise: 0.6,
        samples_per_class: 30,
        num_unknown: 100,
        ..SynthConfig::default()
    };
    let scaled = SynthConfig {
        known_norm: 2.0 * 4.0,
        unknown_norm: 1.5 * 4.0,
        norm_noise: 0.6 * 4.0,
        ..base.clone()
    };
    let a = norm_auroc(&base);
    assert!(a > 0.5 && a < 1.0);
    assert_eq!(a, norm_auroc(&scaled));
}

#[test]
fn default_synthetic_run_orders_rules() {
    let run = generate_run(&SynthConfig::default()).unwrap();
    let rule_auroc = |rule| {
        let s = score(&run, rule).unwrap();
        let (k, u) = split_by_label(&run, &s.scores);
        auroc(&k, &u).unwrap()
    };
    let (msp, mls, norm) = (
        rule_auroc(ScoreRule::Msp),
        rule_auroc(ScoreRule::Mls),
        rule_auroc(ScoreRule::FeatureNorm),
    );
    assert!(mls > msp, "mls {mls} msp {msp}");
    assert!(norm > 0.9);
}
