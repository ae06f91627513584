//! Parsing, validation and serialization of every file the toolkit reads or
//! writes.
//!
//! Parsers reject any input that violates a type invariant, naming the row
//! (file line, header = 1), column (1-based) or node at fault. Serializers
//! are deterministic: fixed key order and shortest round-trip float
//! formatting, so `parse(write(x)) == x` holds exactly.

mod attributes;
mod hierarchy;
mod report;
mod run;
mod split;
mod tree;

use std::io::Read;

use thiserror::Error;

pub use attributes::{parse_attribute_matrix, write_attribute_matrix, AttributeMatrix};
pub use hierarchy::{parse_hierarchy_table, write_hierarchy_table, HierarchyScheme, HierarchyTable};
pub use report::{parse_report, write_report, MetricsReport};
pub use run::{parse_run, write_run, EvaluationRun, Label, Sample, UNKNOWN_LABEL};
pub use split::{parse_split, write_split, SplitMeta, SplitScheme, SplitSpec};
pub use tree::{parse_semantic_tree, write_semantic_tree, SemanticTree, TreeNode};

/// Errors raised while reading or validating an input artifact.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("I/O error: {0}")]
    Io(String),
    #[error("malformed CSV at row {row}: {message}")]
    Csv { row: u64, message: String },
    #[error("malformed JSON: {0}")]
    Json(String),
    #[error("malformed header: {0}")]
    Header(String),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("row {row}: expected {expected} columns, found {found}")]
    RowWidth {
        row: u64,
        expected: usize,
        found: usize,
    },
    #[error("invalid number {value:?} at row {row}, column {column}")]
    InvalidNumber {
        row: u64,
        column: usize,
        value: String,
    },
    #[error("non-finite value at row {row}, column {column}")]
    NonFinite { row: u64, column: usize },
    #[error("invalid label {value:?} at row {row}: expected -1 or an integer in [0, {num_classes})")]
    Label {
        row: u64,
        value: String,
        num_classes: usize,
    },
    #[error("duplicate sample id {id:?} at row {row}")]
    DuplicateSampleId { row: u64, id: String },
    #[error("row {row}: feature vector missing while other rows carry features")]
    MixedFeatures { row: u64 },
    #[error("value {value} at row {row}, column {column} outside [0, 1]")]
    OutOfUnitRange { row: u64, column: usize, value: f64 },
    #[error("class {class:?} has no attributes: similarity undefined")]
    ZeroAttributeRow { class: String },
    #[error("duplicate class name {name:?}")]
    DuplicateClass { name: String },
    #[error("empty value at row {row}, column {column}")]
    EmptyValue { row: u64, column: usize },
    #[error("duplicate node id {id:?}")]
    DuplicateNode { id: String },
    #[error("node {node:?} references missing parent {parent:?}")]
    DanglingParent { node: String, parent: String },
    #[error("cycle detected through node {node:?}")]
    Cycle { node: String },
    #[error("tree has multiple roots: {roots:?}")]
    MultipleRoots { roots: Vec<String> },
    #[error("invalid value: {0}")]
    Invalid(String),
}

impl From<std::io::Error> for ParseError {
    fn from(err: std::io::Error) -> Self {
        ParseError::Io(err.to_string())
    }
}

impl From<serde_json::Error> for ParseError {
    fn from(err: serde_json::Error) -> Self {
        ParseError::Json(err.to_string())
    }
}

/// A CSV record together with the file line it came from.
struct Row {
    line: u64,
    cells: Vec<String>,
}

/// Reads every record of a comma-separated stream. The first element is the
/// header.
fn read_csv<R: Read>(reader: R) -> Result<Vec<Row>, ParseError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|err| {
            let row = err.position().map(|p| p.line()).unwrap_or(0);
            match err.into_kind() {
                csv::ErrorKind::Io(io) => ParseError::Io(io.to_string()),
                kind => ParseError::Csv {
                    row,
                    message: format!("{kind:?}"),
                },
            }
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        rows.push(Row {
            line,
            cells: record.iter().map(str::to_owned).collect(),
        });
    }
    Ok(rows)
}

/// Parses a finite decimal number. `NaN` and infinities are rejected.
fn parse_finite(cell: &str, row: u64, column: usize) -> Result<f64, ParseError> {
    let value: f64 = cell.trim().parse().map_err(|_| ParseError::InvalidNumber {
        row,
        column,
        value: cell.to_owned(),
    })?;
    if value.is_finite() {
        Ok(value)
    } else {
        Err(ParseError::NonFinite { row, column })
    }
}

/// Quotes a CSV cell only when it needs it.
fn csv_cell(value: &str) -> String {
    if value.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", value.replace('"', "\"\""))
    } else {
        value.to_owned()
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(bytes))
}
