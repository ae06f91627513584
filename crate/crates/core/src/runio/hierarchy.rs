use std::collections::HashSet;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{csv_cell, read_csv, sha256_hex, ParseError};

/// Which class-name hierarchy a table follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HierarchyScheme {
    /// make, model, type, year
    Cars,
    /// manufacturer, family, variant
    Aircraft,
}

impl HierarchyScheme {
    pub fn level_names(self) -> &'static [&'static str] {
        match self {
            HierarchyScheme::Cars => &["make", "model", "type", "year"],
            HierarchyScheme::Aircraft => &["manufacturer", "family", "variant"],
        }
    }

    pub fn num_levels(self) -> usize {
        self.level_names().len()
    }
}

impl fmt::Display for HierarchyScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HierarchyScheme::Cars => "cars",
            HierarchyScheme::Aircraft => "aircraft",
        })
    }
}

impl FromStr for HierarchyScheme {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cars" => Ok(HierarchyScheme::Cars),
            "aircraft" => Ok(HierarchyScheme::Aircraft),
            other => Err(ParseError::Invalid(format!(
                "unknown hierarchy scheme {other:?} (expected cars or aircraft)"
            ))),
        }
    }
}

/// Class names with their coarse-to-fine hierarchy levels.
#[derive(Debug, Clone, PartialEq)]
pub struct HierarchyTable {
    scheme: HierarchyScheme,
    rows: Vec<(String, Vec<String>)>,
}

impl HierarchyTable {
    pub fn new(scheme: HierarchyScheme, rows: Vec<(String, Vec<String>)>) -> Result<Self, ParseError> {
        let arity = scheme.num_levels();
        let mut seen = HashSet::new();
        for (i, (name, levels)) in rows.iter().enumerate() {
            let line = i as u64 + 2;
            if name.is_empty() {
                return Err(ParseError::EmptyValue { row: line, column: 1 });
            }
            if !seen.insert(name.as_str()) {
                return Err(ParseError::DuplicateClass { name: name.clone() });
            }
            if levels.len() != arity {
                return Err(ParseError::RowWidth {
                    row: line,
                    expected: arity + 1,
                    found: levels.len() + 1,
                });
            }
            if let Some(j) = levels.iter().position(|l| l.trim().is_empty()) {
                return Err(ParseError::EmptyValue { row: line, column: j + 2 });
            }
        }
        Ok(Self { scheme, rows })
    }

    pub fn scheme(&self) -> HierarchyScheme {
        self.scheme
    }

    pub fn rows(&self) -> &[(String, Vec<String>)] {
        &self.rows
    }

    pub fn levels_of(&self, class: &str) -> Option<&[String]> {
        self.rows
            .iter()
            .find(|(name, _)| name == class)
            .map(|(_, levels)| levels.as_slice())
    }

    pub fn digest(&self) -> String {
        sha256_hex(table_to_string(self).as_bytes())
    }
}

/// Reads `class,make,model,type,year` (cars) or
/// `class,manufacturer,family,variant` (aircraft).
///
/// A file without a header row carries only the level columns; each class is
/// then named by its levels joined with `" - "`.
pub fn parse_hierarchy_table<R: Read>(
    reader: R,
    scheme: HierarchyScheme,
) -> Result<HierarchyTable, ParseError> {
    let rows = read_csv(reader)?;
    let width = scheme.num_levels() + 1;
    let expected_header: Vec<&str> = std::iter::once("class")
        .chain(scheme.level_names().iter().copied())
        .collect();

    let (body, named) = match rows.first() {
        None => return Err(ParseError::Empty("hierarchy file is empty")),
        Some(first) if first.cells.first().map(String::as_str) == Some("class") => {
            if first.cells != expected_header {
                return Err(ParseError::Header(format!(
                    "expected `{}` for the {scheme} scheme",
                    expected_header.join(",")
                )));
            }
            (&rows[1..], true)
        }
        Some(_) => (&rows[..], false),
    };
    let width = if named { width } else { width - 1 };

    let mut out = Vec::with_capacity(body.len());
    for row in body {
        if row.cells.len() != width {
            return Err(ParseError::RowWidth {
                row: row.line,
                expected: width,
                found: row.cells.len(),
            });
        }
        if let Some(j) = row.cells.iter().position(|c| c.trim().is_empty()) {
            return Err(ParseError::EmptyValue {
                row: row.line,
                column: j + 1,
            });
        }
        if named {
            out.push((row.cells[0].clone(), row.cells[1..].to_vec()));
        } else {
            out.push((row.cells.join(" - "), row.cells.clone()));
        }
    }
    if out.is_empty() {
        return Err(ParseError::Empty("hierarchy file has no classes"));
    }
    HierarchyTable::new(scheme, out)
}

pub fn write_hierarchy_table<W: Write>(t: &HierarchyTable, mut writer: W) -> std::io::Result<()> {
    writer.write_all(table_to_string(t).as_bytes())
}

fn table_to_string(t: &HierarchyTable) -> String {
    let mut out = String::from("class");
    for level in t.scheme.level_names() {
        out.push(',');
        out.push_str(level);
    }
    out.push('\n');
    for (name, levels) in &t.rows {
        out.push_str(&csv_cell(name));
        for level in levels {
            out.push(',');
            out.push_str(&csv_cell(level));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cars_row_without_header() {
        let t = parse_hierarchy_table(
            "AstonMartin,V8Vantage,Convertible,2012\n".as_bytes(),
            HierarchyScheme::Cars,
        )
        .unwrap();
        let (name, levels) = &t.rows()[0];
        assert_eq!(levels, &["AstonMartin", "V8Vantage", "Convertible", "2012"]);
        assert_eq!(name, "AstonMartin - V8Vantage - Convertible - 2012");
        let err = parse_hierarchy_table("Airbus,A330,A330-200\n".as_bytes(), HierarchyScheme::Cars)
            .unwrap_err();
        assert!(matches!(err, ParseError::RowWidth { expected: 4, found: 3, .. }));
    }

    #[test]
    fn cars_row_parses_four_levels() {
        let t = parse_hierarchy_table(
            "class,make,model,type,year\nAston Martin V8 Vantage Convertible 2012,AstonMartin,V8Vantage,Convertible,2012\n"
                .as_bytes(),
            HierarchyScheme::Cars,
        )
        .unwrap();
        assert_eq!(
            t.rows()[0].1,
            vec!["AstonMartin", "V8Vantage", "Convertible", "2012"]
        );
    }

    #[test]
    fn three_levels_under_cars_is_an_arity_error() {
        let err = parse_hierarchy_table(
            "class,make,model,type,year\nx,Airbus,A330,A330-200\n".as_bytes(),
            HierarchyScheme::Cars,
        )
        .unwrap_err();
        assert_eq!(
            err,
            ParseError::RowWidth {
                row: 2,
                expected: 5,
                found: 4
            }
        );
    }

    #[test]
    fn aircraft_levels() {
        let t = parse_hierarchy_table(
            "class,manufacturer,family,variant\nA330-200,Airbus,A330,A330-200\n".as_bytes(),
            HierarchyScheme::Aircraft,
        )
        .unwrap();
        assert_eq!(t.levels_of("A330-200").unwrap(), ["Airbus", "A330", "A330-200"]);
    }

    #[test]
    fn wrong_header_for_scheme() {
        let err = parse_hierarchy_table(
            "class,manufacturer,family,variant\nx,a,b,c\n".as_bytes(),
            HierarchyScheme::Cars,
        )
        .unwrap_err();
        assert!(matches!(err, ParseError::Header(_)));
    }

    #[test]
    fn duplicate_and_empty() {
        let dup = "class,manufacturer,family,variant\nx,a,b,c\nx,a,b,d\n";
        assert_eq!(
            parse_hierarchy_table(dup.as_bytes(), HierarchyScheme::Aircraft).unwrap_err(),
            ParseError::DuplicateClass { name: "x".into() }
        );
        let empty = "class,manufacturer,family,variant\nx,a,,c\n";
        assert_eq!(
            parse_hierarchy_table(empty.as_bytes(), HierarchyScheme::Aircraft).unwrap_err(),
            ParseError::EmptyValue { row: 2, column: 3 }
        );
    }

    #[test]
    fn round_trip() {
        let t = HierarchyTable::new(
            HierarchyScheme::Aircraft,
            vec![
                ("737-300".into(), vec!["Boeing".into(), "737".into(), "737-300".into()]),
                ("A330-200".into(), vec!["Airbus".into(), "A330".into(), "A330-200".into()]),
            ],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_hierarchy_table(&t, &mut buf).unwrap();
        assert_eq!(parse_hierarchy_table(buf.as_slice(), HierarchyScheme::Aircraft).unwrap(), t);
    }
}
