use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::ParseError;

/// How a split was constructed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SplitScheme {
    #[serde(rename = "attribute")]
    Attribute,
    #[serde(rename = "hierarchy-cars")]
    HierarchyCars,
    #[serde(rename = "hierarchy-aircraft")]
    HierarchyAircraft,
    #[serde(rename = "tree")]
    Tree,
}

impl fmt::Display for SplitScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitScheme::Attribute => "attribute",
            SplitScheme::HierarchyCars => "hierarchy-cars",
            SplitScheme::HierarchyAircraft => "hierarchy-aircraft",
            SplitScheme::Tree => "tree",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitMeta {
    /// PRNG seed; 0 for deterministic schemes.
    pub seed: u64,
    /// Number of sampled known-class subsets; 0 for deterministic schemes.
    pub samples: u64,
    /// SHA-256 of the canonical serialization of the source file.
    pub source_digest: String,
}

/// Known classes plus open-set classes binned by difficulty.
///
/// `difficulty` holds one value per open-set class; its meaning depends on
/// the scheme (max cosine similarity, shared hierarchy levels, or total tree
/// distance).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    pub scheme: SplitScheme,
    pub known: Vec<String>,
    pub easy: Vec<String>,
    pub medium: Vec<String>,
    pub hard: Vec<String>,
    pub difficulty: BTreeMap<String, f64>,
    pub meta: SplitMeta,
}

impl SplitSpec {
    /// Checks disjointness, uniqueness and that difficulty values cover
    /// exactly the open-set classes.
    pub fn validate(&self) -> Result<(), ParseError> {
        let mut seen = HashSet::new();
        for (bin, names) in [
            ("known", &self.known),
            ("easy", &self.easy),
            ("medium", &self.medium),
            ("hard", &self.hard),
        ] {
            for name in names {
                if !seen.insert(name.as_str()) {
                    return Err(ParseError::Invalid(format!(
                        "class {name:?} appears more than once (second time in {bin})"
                    )));
                }
            }
        }
        let open: HashSet<&str> = self.open_classes().map(String::as_str).collect();
        if self.difficulty.len() != open.len()
            || !self.difficulty.keys().all(|k| open.contains(k.as_str()))
        {
            return Err(ParseError::Invalid(
                "difficulty keys must be exactly the open-set classes".into(),
            ));
        }
        if let Some((k, _)) = self.difficulty.iter().find(|(_, v)| !v.is_finite()) {
            return Err(ParseError::Invalid(format!("non-finite difficulty for {k:?}")));
        }
        Ok(())
    }

    pub fn open_classes(&self) -> impl Iterator<Item = &String> {
        self.easy.iter().chain(&self.medium).chain(&self.hard)
    }
}

pub fn parse_split<R: Read>(reader: R) -> Result<SplitSpec, ParseError> {
    let spec: SplitSpec = serde_json::from_reader(reader)?;
    spec.validate()?;
    Ok(spec)
}

/// Pretty-printed JSON with fixed key order and a trailing newline.
pub fn write_split<W: Write>(spec: &SplitSpec, mut writer: W) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut writer, spec)?;
    writer.write_all(b"\n")
}
