use std::collections::HashMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{sha256_hex, ParseError};

/// One node as it appears in the tree file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeNode {
    pub id: String,
    pub parent: Option<String>,
    pub class: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct TreeFile {
    nodes: Vec<TreeNode>,
}

/// A rooted taxonomy (for example WordNet hypernyms) in which some nodes
/// carry class names.
///
/// Validated on construction: unique ids, one root, no cycles, every parent
/// reference resolves, class names unique.
#[derive(Debug, Clone)]
pub struct SemanticTree {
    nodes: Vec<TreeNode>,
    parent: Vec<Option<usize>>,
    depth: Vec<usize>,
    by_id: HashMap<String, usize>,
    by_class: HashMap<String, usize>,
}

impl PartialEq for SemanticTree {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes
    }
}

impl SemanticTree {
    pub fn new(nodes: Vec<TreeNode>) -> Result<Self, ParseError> {
        if nodes.is_empty() {
            return Err(ParseError::Empty("tree has no nodes"));
        }
        let mut by_id = HashMap::with_capacity(nodes.len());
        for (i, node) in nodes.iter().enumerate() {
            if node.id.is_empty() {
                return Err(ParseError::Invalid(format!("node #{i} has an empty id")));
            }
            if by_id.insert(node.id.clone(), i).is_some() {
                return Err(ParseError::DuplicateNode { id: node.id.clone() });
            }
        }
        let mut by_class = HashMap::new();
        for (i, node) in nodes.iter().enumerate() {
            if let Some(class) = &node.class {
                if class.is_empty() {
                    return Err(ParseError::Invalid(format!("node {:?} has an empty class", node.id)));
                }
                if by_class.insert(class.clone(), i).is_some() {
                    return Err(ParseError::DuplicateClass { name: class.clone() });
                }
            }
        }

        let mut parent = Vec::with_capacity(nodes.len());
        let mut roots = Vec::new();
        for node in &nodes {
            match &node.parent {
                None => {
                    roots.push(node.id.clone());
                    parent.push(None);
                }
                Some(p) if *p == node.id => return Err(ParseError::Cycle { node: node.id.clone() }),
                Some(p) => match by_id.get(p) {
                    Some(&idx) => parent.push(Some(idx)),
                    None => {
                        return Err(ParseError::DanglingParent {
                            node: node.id.clone(),
                            parent: p.clone(),
                        })
                    }
                },
            }
        }
        if roots.len() > 1 {
            return Err(ParseError::MultipleRoots { roots });
        }

        let depth = compute_depths(&nodes, &parent)?;
        if roots.is_empty() {
            // Unreachable: with no root every chain ends in a cycle, which
            // `compute_depths` reports.
            return Err(ParseError::Invalid("tree has no root".into()));
        }
        Ok(Self {
            nodes,
            parent,
            depth,
            by_id,
            by_class,
        })
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.by_id.get(id).copied()
    }

    /// Index of the node carrying `class`.
    pub fn class_node(&self, class: &str) -> Option<usize> {
        self.by_class.get(class).copied()
    }

    pub fn parent(&self, node: usize) -> Option<usize> {
        self.parent[node]
    }

    /// Edges from the root.
    pub fn depth(&self, node: usize) -> usize {
        self.depth[node]
    }

    /// Class names in file order.
    pub fn class_names(&self) -> impl Iterator<Item = &str> {
        self.nodes.iter().filter_map(|n| n.class.as_deref())
    }

    pub fn digest(&self) -> String {
        sha256_hex(tree_to_string(self).as_bytes())
    }
}

/// Depth of every node; fails on the first cycle found.
fn compute_depths(nodes: &[TreeNode], parent: &[Option<usize>]) -> Result<Vec<usize>, ParseError> {
    const UNSET: usize = usize::MAX;
    let mut depth = vec![UNSET; nodes.len()];
    // 0 = unvisited, 1 = on the current walk, 2 = done
    let mut state = vec![0u8; nodes.len()];
    let mut chain = Vec::new();
    for start in 0..nodes.len() {
        if state[start] == 2 {
            continue;
        }
        chain.clear();
        let mut cur = start;
        let base = loop {
            match state[cur] {
                2 => break depth[cur] + 1,
                1 => return Err(ParseError::Cycle { node: nodes[cur].id.clone() }),
                _ => {}
            }
            state[cur] = 1;
            chain.push(cur);
            match parent[cur] {
                Some(p) => cur = p,
                None => break 0,
            }
        };
        for (k, &node) in chain.iter().rev().enumerate() {
            depth[node] = base + k;
            state[node] = 2;
        }
    }
    Ok(depth)
}

/// Reads `{"nodes":[{"id":..,"parent":..,"class":..},...]}`.
pub fn parse_semantic_tree<R: Read>(reader: R) -> Result<SemanticTree, ParseError> {
    let file: TreeFile = serde_json::from_reader(reader)?;
    SemanticTree::new(file.nodes)
}

pub fn write_semantic_tree<W: Write>(tree: &SemanticTree, mut writer: W) -> std::io::Result<()> {
    writer.write_all(tree_to_string(tree).as_bytes())
}

fn tree_to_string(tree: &SemanticTree) -> String {
    let file = TreeFile {
        nodes: tree.nodes.clone(),
    };
    let mut s = serde_json::to_string_pretty(&file).expect("tree serializes");
    s.push('\n');
    s
}
