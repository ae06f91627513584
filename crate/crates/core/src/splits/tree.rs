use std::collections::BTreeMap;

use super::{resolve_known, SplitError};
use crate::runio::{SemanticTree, SplitMeta, SplitScheme, SplitSpec};

/// Number of edges on the path between two nodes (by node id).
pub fn tree_distance(tree: &SemanticTree, a: &str, b: &str) -> Result<usize, SplitError> {
    let ia = tree
        .node_index(a)
        .ok_or_else(|| SplitError::UnknownNode(a.to_owned()))?;
    let ib = tree
        .node_index(b)
        .ok_or_else(|| SplitError::UnknownNode(b.to_owned()))?;
    Ok(node_distance(tree, ia, ib))
}

/// `depth(a) + depth(b) - 2 depth(lca(a, b))`, walking both nodes up to
/// their lowest common ancestor.
pub(crate) fn node_distance(tree: &SemanticTree, a: usize, b: usize) -> usize {
    let (mut x, mut y) = (a, b);
    let mut steps = 0;
    while tree.depth(x) > tree.depth(y) {
        x = tree.parent(x).expect("non-root node has a parent");
        steps += 1;
    }
    while tree.depth(y) > tree.depth(x) {
        y = tree.parent(y).expect("non-root node has a parent");
        steps += 1;
    }
    while x != y {
        x = tree.parent(x).expect("nodes at equal depth share the root");
        y = tree.parent(y).expect("nodes at equal depth share the root");
        steps += 2;
    }
    steps
}

/// Total tree distance from each open-set class to the known classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeDistanceTable {
    /// (class, sum of distances to every known class), in tree file order.
    pub totals: Vec<(String, u64)>,
}

pub fn total_distances(tree: &SemanticTree, known: &[String]) -> Result<TreeDistanceTable, SplitError> {
    let known_nodes = resolve_known(known, |name| tree.class_node(name))?;
    let known_set: std::collections::HashSet<&str> = known.iter().map(String::as_str).collect();
    let totals = tree
        .class_names()
        .filter(|c| !known_set.contains(c))
        .map(|class| {
            let node = tree.class_node(class).expect("class listed by the tree");
            let total = known_nodes
                .iter()
                .map(|&k| node_distance(tree, node, k) as u64)
                .sum();
            (class.to_owned(), total)
        })
        .collect();
    Ok(TreeDistanceTable { totals })
}

/// Easy = the `num_easy` open classes farthest from the known set (largest
/// total distance); Hard = the `num_hard` closest. Medium stays empty.
/// Equal totals are ordered by class name.
pub fn tree_splits(
    tree: &SemanticTree,
    known: &[String],
    num_easy: usize,
    num_hard: usize,
) -> Result<SplitSpec, SplitError> {
    let table = total_distances(tree, known)?;
    let available = table.totals.len();
    if available == 0 {
        return Err(SplitError::NoOpenClasses);
    }
    if num_easy + num_hard > available {
        return Err(SplitError::InsufficientOpenClasses {
            needed: num_easy + num_hard,
            available,
        });
    }
    let mut sorted = table.totals;
    sorted.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));

    let easy: Vec<(String, u64)> = sorted[..num_easy].to_vec();
    let hard: Vec<(String, u64)> = sorted[available - num_hard..].to_vec();
    let difficulty: BTreeMap<String, f64> = easy
        .iter()
        .chain(&hard)
        .map(|(c, d)| (c.clone(), *d as f64))
        .collect();
    let known_set: std::collections::HashSet<&str> = known.iter().map(String::as_str).collect();
    Ok(SplitSpec {
        scheme: SplitScheme::Tree,
        known: tree
            .class_names()
            .filter(|c| known_set.contains(c))
            .map(str::to_owned)
            .collect(),
        easy: easy.into_iter().map(|x| x.0).collect(),
        medium: Vec::new(),
        hard: hard.into_iter().map(|x| x.0).collect(),
        difficulty,
        meta: SplitMeta {
            seed: 0,
            samples: 0,
            source_digest: tree.digest(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runio::TreeNode;

    fn tree(edges: &[(&str, Option<&str>, Option<&str>)]) -> SemanticTree {
        SemanticTree::new(
            edges
                .iter()
                .map(|&(id, parent, class)| TreeNode {
                    id: id.into(),
                    parent: parent.map(Into::into),
                    class: class.map(Into::into),
                })
                .collect(),
        )
        .unwrap()
    }

    fn names(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn distances() {
        let t = tree(&[
            ("r", None, None),
            ("a", Some("r"), Some("A")),
            ("b", Some("r"), Some("B")),
            ("c", Some("a"), Some("C")),
        ]);
        assert_eq!(tree_distance(&t, "a", "a").unwrap(), 0);
        assert_eq!(tree_distance(&t, "a", "b").unwrap(), 2);
        assert_eq!(tree_distance(&t, "c", "b").unwrap(), 3);
        assert_eq!(tree_distance(&t, "r", "c").unwrap(), 2);
        assert_eq!(
            tree_distance(&t, "zz", "a").unwrap_err(),
            SplitError::UnknownNode("zz".into())
        );
    }

    #[test]
    fn close_class_lands_in_hard() {
        let t = tree(&[
            ("r", None, None),
            ("x", Some("r"), None),
            ("y", Some("r"), None),
            ("k", Some("x"), Some("K")),
            ("near", Some("k"), Some("Near")),
            ("mid", Some("x"), Some("Mid")),
            ("far", Some("y"), Some("Far")),
        ]);
        let spec = tree_splits(&t, &names(&["K"]), 1, 1).unwrap();
        assert_eq!(spec.hard, ["Near"]);
        assert_eq!(spec.easy, ["Far"]);
        assert!(spec.medium.is_empty());
        assert_eq!(spec.difficulty["Near"], 1.0);
        assert_eq!(spec.difficulty["Far"], 4.0);
        spec.validate().unwrap();
    }

    #[test]
    fn star_tree_falls_back_to_name_order() {
        let t = tree(&[
            ("r", None, None),
            ("1", Some("r"), Some("k")),
            ("2", Some("r"), Some("d")),
            ("3", Some("r"), Some("b")),
            ("4", Some("r"), Some("c")),
            ("5", Some("r"), Some("a")),
        ]);
        let spec = tree_splits(&t, &names(&["k"]), 2, 2).unwrap();
        assert_eq!(spec.easy, ["a", "b"]);
        assert_eq!(spec.hard, ["c", "d"]);
    }

    #[test]
    fn insufficient_open_classes() {
        let t = tree(&[("r", None, None), ("1", Some("r"), Some("k")), ("2", Some("r"), Some("o"))]);
        assert_eq!(
            tree_splits(&t, &names(&["k"]), 1, 1).unwrap_err(),
            SplitError::InsufficientOpenClasses {
                needed: 2,
                available: 1
            }
        );
        assert_eq!(tree_splits(&t, &[], 0, 0).unwrap_err(), SplitError::EmptyKnown);
    }
}
