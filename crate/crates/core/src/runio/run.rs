use std::collections::HashSet;
use std::fmt::Write as _;
use std::io::{Read, Write};

use super::{csv_cell, parse_finite, read_csv, ParseError};

/// Label value marking a sample from an unknown (open-set) class.
pub const UNKNOWN_LABEL: i64 = -1;

/// Ground truth of one sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Known(usize),
    Unknown,
}

impl Label {
    pub fn is_known(self) -> bool {
        matches!(self, Label::Known(_))
    }

    /// The integer used on disk: the class index, or -1.
    pub fn as_i64(self) -> i64 {
        match self {
            Label::Known(class) => class as i64,
            Label::Unknown => UNKNOWN_LABEL,
        }
    }
}

/// One exported model output.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: String,
    pub label: Label,
    pub logits: Vec<f64>,
    pub features: Option<Vec<f64>>,
}

/// Per-sample logits, labels and optional penultimate features of one model
/// on one test set.
///
/// Always valid once constructed: `num_classes >= 2`, at least one sample,
/// every logit/feature finite and of the declared width, unique ids, and
/// features present on all samples or on none.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationRun {
    num_classes: usize,
    feature_dim: usize,
    samples: Vec<Sample>,
}

impl EvaluationRun {
    pub fn new(num_classes: usize, samples: Vec<Sample>) -> Result<Self, ParseError> {
        if num_classes < 2 {
            return Err(ParseError::Invalid(format!(
                "a run needs at least 2 classes, got {num_classes}"
            )));
        }
        if samples.is_empty() {
            return Err(ParseError::Empty("a run needs at least one sample"));
        }
        let feature_dim = samples[0].features.as_ref().map_or(0, Vec::len);
        let with_features = samples[0].features.is_some();
        if with_features && feature_dim == 0 {
            return Err(ParseError::Invalid("feature vectors must be nonempty".into()));
        }
        let mut seen = HashSet::with_capacity(samples.len());
        for (i, sample) in samples.iter().enumerate() {
            // Row numbers as they would appear in a run file.
            let row = i as u64 + 2;
            if !seen.insert(sample.id.as_str()) {
                return Err(ParseError::DuplicateSampleId {
                    row,
                    id: sample.id.clone(),
                });
            }
            if let Label::Known(class) = sample.label {
                if class >= num_classes {
                    return Err(ParseError::Label {
                        row,
                        value: class.to_string(),
                        num_classes,
                    });
                }
            }
            if sample.logits.len() != num_classes {
                return Err(ParseError::RowWidth {
                    row,
                    expected: num_classes,
                    found: sample.logits.len(),
                });
            }
            if let Some(j) = sample.logits.iter().position(|v| !v.is_finite()) {
                return Err(ParseError::NonFinite { row, column: j + 3 });
            }
            match &sample.features {
                None if with_features => return Err(ParseError::MixedFeatures { row }),
                Some(_) if !with_features => return Err(ParseError::MixedFeatures { row }),
                Some(f) => {
                    if f.len() != feature_dim {
                        return Err(ParseError::RowWidth {
                            row,
                            expected: feature_dim,
                            found: f.len(),
                        });
                    }
                    if let Some(j) = f.iter().position(|v| !v.is_finite()) {
                        return Err(ParseError::NonFinite {
                            row,
                            column: j + 3 + num_classes,
                        });
                    }
                }
                None => {}
            }
        }
        Ok(Self {
            num_classes,
            feature_dim,
            samples,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// Width of the feature vectors, 0 when the run carries none.
    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn has_features(&self) -> bool {
        self.feature_dim > 0
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = Label> + '_ {
        self.samples.iter().map(|s| s.label)
    }

    pub fn num_known_samples(&self) -> usize {
        self.labels().filter(|l| l.is_known()).count()
    }

    pub fn num_unknown_samples(&self) -> usize {
        self.len() - self.num_known_samples()
    }
}

/// Reads a run file: `sample_id,label,logit_0..logit_{C-1}[,feat_0..feat_{D-1}]`.
pub fn parse_run<R: Read>(reader: R) -> Result<EvaluationRun, ParseError> {
    let rows = read_csv(reader)?;
    let (header, body) = rows
        .split_first()
        .ok_or(ParseError::Empty("run file has no header"))?;
    let (num_classes, feature_dim) = parse_run_header(&header.cells)?;
    let width = 2 + num_classes + feature_dim;

    let mut samples = Vec::with_capacity(body.len());
    let mut seen = HashSet::with_capacity(body.len());
    let mut features_present: Option<bool> = None;
    for row in body {
        let line = row.line;
        if row.cells.len() != width {
            return Err(ParseError::RowWidth {
                row: line,
                expected: width,
                found: row.cells.len(),
            });
        }
        let id = row.cells[0].clone();
        if id.is_empty() {
            return Err(ParseError::EmptyValue { row: line, column: 1 });
        }
        if !seen.insert(id.clone()) {
            return Err(ParseError::DuplicateSampleId { row: line, id });
        }
        let label = parse_label(&row.cells[1], line, num_classes)?;
        let logits = row.cells[2..2 + num_classes]
            .iter()
            .enumerate()
            .map(|(j, cell)| parse_finite(cell, line, j + 3))
            .collect::<Result<Vec<_>, _>>()?;

        let feature_cells = &row.cells[2 + num_classes..];
        let has = feature_dim > 0 && feature_cells.iter().any(|c| !c.trim().is_empty());
        match features_present {
            None => features_present = Some(has),
            Some(prev) if prev != has => return Err(ParseError::MixedFeatures { row: line }),
            _ => {}
        }
        if feature_dim > 0 && !has {
            // Header declares features but this row has none at all.
            return Err(ParseError::MixedFeatures { row: line });
        }
        let features = if has {
            Some(
                feature_cells
                    .iter()
                    .enumerate()
                    .map(|(j, cell)| parse_finite(cell, line, j + 3 + num_classes))
                    .collect::<Result<Vec<_>, _>>()?,
            )
        } else {
            None
        };
        samples.push(Sample {
            id,
            label,
            logits,
            features,
        });
    }
    if samples.is_empty() {
        return Err(ParseError::Empty("run file has no samples"));
    }
    EvaluationRun::new(num_classes, samples)
}

fn parse_run_header(cells: &[String]) -> Result<(usize, usize), ParseError> {
    if cells.len() < 2 || cells[0] != "sample_id" || cells[1] != "label" {
        return Err(ParseError::Header(
            "expected `sample_id,label,logit_0,...`".into(),
        ));
    }
    let mut num_classes = 0;
    while 2 + num_classes < cells.len() && cells[2 + num_classes] == format!("logit_{num_classes}")
    {
        num_classes += 1;
    }
    let mut feature_dim = 0;
    for cell in &cells[2 + num_classes..] {
        if *cell != format!("feat_{feature_dim}") {
            return Err(ParseError::Header(format!(
                "unexpected column {cell:?}; expected logit_i then feat_j columns in order"
            )));
        }
        feature_dim += 1;
    }
    if num_classes < 2 {
        return Err(ParseError::Header(format!(
            "at least 2 logit columns required, found {num_classes}"
        )));
    }
    Ok((num_classes, feature_dim))
}

fn parse_label(cell: &str, row: u64, num_classes: usize) -> Result<Label, ParseError> {
    let err = || ParseError::Label {
        row,
        value: cell.to_owned(),
        num_classes,
    };
    let value: i64 = cell.trim().parse().map_err(|_| err())?;
    match value {
        UNKNOWN_LABEL => Ok(Label::Unknown),
        v if v >= 0 && (v as u64) < num_classes as u64 => Ok(Label::Known(v as usize)),
        _ => Err(err()),
    }
}

/// Writes a run in the format read by [`parse_run`].
pub fn write_run<W: Write>(run: &EvaluationRun, mut writer: W) -> std::io::Result<()> {
    writer.write_all(run_to_string(run).as_bytes())
}

pub(crate) fn run_to_string(run: &EvaluationRun) -> String {
    let mut out = String::from("sample_id,label");
    for j in 0..run.num_classes {
        let _ = write!(out, ",logit_{j}");
    }
    for j in 0..run.feature_dim {
        let _ = write!(out, ",feat_{j}");
    }
    out.push('\n');
    for sample in &run.samples {
        out.push_str(&csv_cell(&sample.id));
        let _ = write!(out, ",{}", sample.label.as_i64());
        for v in &sample.logits {
            let _ = write!(out, ",{v}");
        }
        for v in sample.features.iter().flatten() {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}
