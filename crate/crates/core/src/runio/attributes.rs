use std::collections::HashSet;
use std::fmt::Write as _;
use std::io::{Read, Write};

use super::{csv_cell, parse_finite, read_csv, sha256_hex, ParseError};

/// Per-class attribute frequencies, one row per class, entries in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeMatrix {
    class_names: Vec<String>,
    num_attributes: usize,
    values: Vec<f64>,
}

impl AttributeMatrix {
    /// Builds a matrix from rows, checking every invariant.
    pub fn new(class_names: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self, ParseError> {
        if class_names.len() != rows.len() {
            return Err(ParseError::Invalid(format!(
                "{} class names for {} rows",
                class_names.len(),
                rows.len()
            )));
        }
        if rows.is_empty() {
            return Err(ParseError::Empty("attribute matrix has no classes"));
        }
        let num_attributes = rows[0].len();
        if num_attributes == 0 {
            return Err(ParseError::Invalid("attribute matrix has no columns".into()));
        }
        let mut seen = HashSet::new();
        let mut values = Vec::with_capacity(rows.len() * num_attributes);
        for (i, (name, row)) in class_names.iter().zip(&rows).enumerate() {
            let line = i as u64 + 2;
            if name.is_empty() {
                return Err(ParseError::EmptyValue { row: line, column: 1 });
            }
            if !seen.insert(name.as_str()) {
                return Err(ParseError::DuplicateClass { name: name.clone() });
            }
            if row.len() != num_attributes {
                return Err(ParseError::RowWidth {
                    row: line,
                    expected: num_attributes + 1,
                    found: row.len() + 1,
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(ParseError::NonFinite { row: line, column: j + 2 });
                }
                if !(0.0..=1.0).contains(&v) {
                    return Err(ParseError::OutOfUnitRange {
                        row: line,
                        column: j + 2,
                        value: v,
                    });
                }
            }
            if row.iter().all(|&v| v == 0.0) {
                return Err(ParseError::ZeroAttributeRow { class: name.clone() });
            }
            values.extend_from_slice(row);
        }
        Ok(Self {
            class_names,
            num_attributes,
            values,
        })
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn num_attributes(&self) -> usize {
        self.num_attributes
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.num_attributes..(i + 1) * self.num_attributes]
    }

    /// SHA-256 of the canonical serialization.
    pub fn digest(&self) -> String {
        sha256_hex(matrix_to_string(self).as_bytes())
    }
}

/// Reads `class,attr_0,...,attr_{A-1}`. Attribute column names are not
/// retained.
pub fn parse_attribute_matrix<R: Read>(reader: R) -> Result<AttributeMatrix, ParseError> {
    let rows = read_csv(reader)?;
    let (header, body) = rows
        .split_first()
        .ok_or(ParseError::Empty("attribute file has no header"))?;
    if header.cells.first().map(String::as_str) != Some("class") || header.cells.len() < 2 {
        return Err(ParseError::Header(
            "expected `class,attr_0,...,attr_{A-1}`".into(),
        ));
    }
    let width = header.cells.len();
    let mut names = Vec::with_capacity(body.len());
    let mut values = Vec::with_capacity(body.len());
    for row in body {
        if row.cells.len() != width {
            return Err(ParseError::RowWidth {
                row: row.line,
                expected: width,
                found: row.cells.len(),
            });
        }
        if row.cells[0].is_empty() {
            return Err(ParseError::EmptyValue { row: row.line, column: 1 });
        }
        let parsed = row.cells[1..]
            .iter()
            .enumerate()
            .map(|(j, cell)| {
                let v = parse_finite(cell, row.line, j + 2)?;
                if (0.0..=1.0).contains(&v) {
                    Ok(v)
                } else {
                    Err(ParseError::OutOfUnitRange {
                        row: row.line,
                        column: j + 2,
                        value: v,
                    })
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        names.push(row.cells[0].clone());
        values.push(parsed);
    }
    AttributeMatrix::new(names, values)
}

pub fn write_attribute_matrix<W: Write>(m: &AttributeMatrix, mut writer: W) -> std::io::Result<()> {
    writer.write_all(matrix_to_string(m).as_bytes())
}

fn matrix_to_string(m: &AttributeMatrix) -> String {
    let mut out = String::from("class");
    for j in 0..m.num_attributes {
        let _ = write!(out, ",attr_{j}");
    }
    out.push('\n');
    for (i, name) in m.class_names.iter().enumerate() {
        out.push_str(&csv_cell(name));
        for v in m.row(i) {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_like_rows() {
        let m = parse_attribute_matrix("class,attr_0,attr_1\na,1,0\nb,0,1\n".as_bytes()).unwrap();
        assert_eq!(m.num_classes(), 2);
        assert_eq!(m.num_attributes(), 2);
        assert_eq!(m.row(1), &[0.0, 1.0]);
    }

    #[test]
    fn zero_row_names_the_class() {
        let err = parse_attribute_matrix("class,attr_0,attr_1\na,1,0\nsparrow,0,0\n".as_bytes())
            .unwrap_err();
        assert_eq!(
            err,
            ParseError::ZeroAttributeRow {
                class: "sparrow".into()
            }
        );
        assert!(err.to_string().contains("sparrow"));
    }

    #[test]
    fn out_of_range_is_rejected_not_clamped() {
        let err = parse_attribute_matrix("class,attr_0\na,1.0000001\n".as_bytes()).unwrap_err();
        assert!(matches!(err, ParseError::OutOfUnitRange { row: 2, column: 2, .. }));
        let err = parse_attribute_matrix("class,attr_0\na,-0.1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, ParseError::OutOfUnitRange { .. }));
    }

    #[test]
    fn duplicate_class() {
        let err = parse_attribute_matrix("class,attr_0\na,1\na,0.5\n".as_bytes()).unwrap_err();
        assert_eq!(err, ParseError::DuplicateClass { name: "a".into() });
    }

    #[test]
    fn cub_sized_export() {
        let mut text = String::from("class");
        for j in 0..312 {
            text.push_str(&format!(",has_attribute_{j}"));
        }
        text.push('\n');
        for i in 0..200 {
            text.push_str(&format!("{:03}.Bird_{i}", i + 1));
            for j in 0..312 {
                text.push_str(&format!(",{}", ((i * 7 + j * 13) % 101) as f64 / 100.0));
            }
            text.push('\n');
        }
        let m = parse_attribute_matrix(text.as_bytes()).unwrap();
        assert_eq!(m.num_classes(), 200);
        assert_eq!(m.num_attributes(), 312);
    }

    #[test]
    fn round_trip() {
        let m = AttributeMatrix::new(
            vec!["x".into(), "y, z".into()],
            vec![vec![0.1, 0.2, 1.0], vec![1e-7, 0.0, 0.3333333333333333]],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_attribute_matrix(&m, &mut buf).unwrap();
        assert_eq!(parse_attribute_matrix(buf.as_slice()).unwrap(), m);
        assert_eq!(m.digest().len(), 64);
    }
}
