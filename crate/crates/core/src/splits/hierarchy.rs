use std::collections::BTreeMap;

use super::{resolve_known, SplitError};
use crate::runio::{HierarchyScheme, HierarchyTable, SplitMeta, SplitScheme, SplitSpec};

/// Number of leading hierarchy levels two classes share.
fn shared_prefix(a: &[String], b: &[String]) -> usize {
    a.iter().zip(b).take_while(|(x, y)| x == y).count()
}

/// Bins open classes by the most specific hierarchy level they share with
/// any known class.
///
/// Cars (`make, model, type, year`): same make/model/type → hard; same
/// make/model → medium; same make or no shared make → easy. Medium is then
/// folded into hard, leaving an empty medium bin.
///
/// Aircraft (`manufacturer, family, variant`): same family → hard; same
/// manufacturer → medium; otherwise easy.
///
/// `difficulty` records the number of shared leading levels, so the
/// pre-merge cars assignment (2 = medium) stays recoverable. Classes are
/// listed in table order.
pub fn hierarchy_splits(table: &HierarchyTable, known: &[String]) -> Result<SplitSpec, SplitError> {
    let rows = table.rows();
    let known_idx = resolve_known(known, |name| rows.iter().position(|(n, _)| n == name))?;
    if known_idx.len() == rows.len() {
        return Err(SplitError::NoOpenClasses);
    }
    let mut is_known = vec![false; rows.len()];
    for &k in &known_idx {
        is_known[k] = true;
    }

    let mut spec = SplitSpec {
        scheme: match table.scheme() {
            HierarchyScheme::Cars => SplitScheme::HierarchyCars,
            HierarchyScheme::Aircraft => SplitScheme::HierarchyAircraft,
        },
        known: (0..rows.len())
            .filter(|&i| is_known[i])
            .map(|i| rows[i].0.clone())
            .collect(),
        easy: Vec::new(),
        medium: Vec::new(),
        hard: Vec::new(),
        difficulty: BTreeMap::new(),
        meta: SplitMeta {
            seed: 0,
            samples: 0,
            source_digest: table.digest(),
        },
    };

    for (i, (name, levels)) in rows.iter().enumerate() {
        if is_known[i] {
            continue;
        }
        let shared = known_idx
            .iter()
            .map(|&k| shared_prefix(levels, &rows[k].1))
            .max()
            .unwrap_or(0);
        let bin = match (table.scheme(), shared) {
            (HierarchyScheme::Cars, s) if s >= 2 => &mut spec.hard,
            (HierarchyScheme::Cars, _) => &mut spec.easy,
            (HierarchyScheme::Aircraft, s) if s >= 2 => &mut spec.hard,
            (HierarchyScheme::Aircraft, 1) => &mut spec.medium,
            (HierarchyScheme::Aircraft, _) => &mut spec.easy,
        };
        bin.push(name.clone());
        spec.difficulty.insert(name.clone(), shared as f64);
    }
    Ok(spec)
}
