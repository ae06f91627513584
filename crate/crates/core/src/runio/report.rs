use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::ParseError;
use crate::scoring::ScoreRule;

/// Evaluation metrics of one run under one scoring rule.
///
/// `auroc`, `oscr` and `ap` are `None` when the run has no unknown samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsReport {
    pub rule: ScoreRule,
    pub accuracy: f64,
    pub auroc: Option<f64>,
    pub oscr: Option<f64>,
    pub ap: Option<f64>,
    pub openness: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roc_points: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oscr_points: Option<Vec<[f64; 2]>>,
}

impl MetricsReport {
    pub fn validate(&self) -> Result<(), ParseError> {
        let scalars = [
            ("accuracy", Some(self.accuracy)),
            ("auroc", self.auroc),
            ("oscr", self.oscr),
            ("ap", self.ap),
            ("openness", Some(self.openness)),
        ];
        for (name, value) in scalars {
            if let Some(v) = value {
                if !(0.0..=1.0).contains(&v) {
                    return Err(ParseError::Invalid(format!("{name} = {v} outside [0, 1]")));
                }
            }
        }
        for (name, points) in [("roc_points", &self.roc_points), ("oscr_points", &self.oscr_points)] {
            if let Some(points) = points {
                if points.windows(2).any(|w| w[1][0] < w[0][0]) {
                    return Err(ParseError::Invalid(format!("{name} not sorted by x")));
                }
                if points.iter().flatten().any(|v| !(0.0..=1.0).contains(v)) {
                    return Err(ParseError::Invalid(format!("{name} outside the unit square")));
                }
            }
        }
        Ok(())
    }
}

pub fn parse_report<R: Read>(reader: R) -> Result<MetricsReport, ParseError> {
    let report: MetricsReport = serde_json::from_reader(reader)?;
    report.validate()?;
    Ok(report)
}

/// Pretty-printed JSON with fixed key order and a trailing newline.
pub fn write_report<W: Write>(report: &MetricsReport, mut writer: W) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut writer, report)?;
    writer.write_all(b"\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report() -> MetricsReport {
        MetricsReport {
            rule: ScoreRule::Mls,
            accuracy: 0.5,
            auroc: Some(0.75),
            oscr: None,
            ap: Some(1.0 / 3.0),
            openness: 0.1339745962155614,
            roc_points: Some(vec![[0.0, 0.0], [0.5, 1.0], [1.0, 1.0]]),
            oscr_points: None,
        }
    }

    #[test]
    fn key_order_and_nulls() {
        let mut buf = Vec::new();
        write_report(&report(), &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        let keys: Vec<_> = ["rule", "accuracy", "auroc", "oscr", "ap", "openness", "roc_points"]
            .iter()
            .map(|k| text.find(&format!("\"{k}\"")).unwrap())
            .collect();
        assert!(keys.windows(2).all(|w| w[0] < w[1]));
        assert!(text.contains("\"oscr\": null"));
        assert!(!text.contains("oscr_points"));
        assert_eq!(parse_report(buf.as_slice()).unwrap(), report());
    }

    #[test]
    fn rejects_out_of_range() {
        let mut r = report();
        r.accuracy = 1.5;
        assert!(r.validate().is_err());
        let mut r = report();
        r.roc_points = Some(vec![[0.5, 0.0], [0.0, 1.0]]);
        assert!(r.validate().is_err());
    }
}
