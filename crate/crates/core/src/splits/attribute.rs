use std::cmp::Ordering;
use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{resolve_known, SplitError};
use crate::runio::{AttributeMatrix, SplitMeta, SplitScheme, SplitSpec};

/// Pairwise cosine similarity between class attribute rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    class_names: Vec<String>,
    values: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn len(&self) -> usize {
        self.class_names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.class_names.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.len() + j]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.class_names.iter().position(|n| n == name)
    }
}

/// `S[i][j] = m_i . m_j` with `m_i` the L2-normalized i-th attribute row.
pub fn class_similarity_matrix(matrix: &AttributeMatrix) -> SimilarityMatrix {
    let n = matrix.num_classes();
    let normalized: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let row = matrix.row(i);
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            row.iter().map(|v| v / norm).collect()
        })
        .collect();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let dot: f64 = normalized[i]
                .iter()
                .zip(&normalized[j])
                .map(|(a, b)| a * b)
                .sum();
            values[i * n + j] = dot;
            values[j * n + i] = dot;
        }
    }
    SimilarityMatrix {
        class_names: matrix.class_names().to_vec(),
        values,
    }
}

/// An open-set class with its highest similarity to any known class.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedClass {
    pub name: String,
    pub max_similarity: f64,
}

/// Open-set class indices with their max similarity to the known set,
/// ascending (least similar first), ties by class name.
fn rank_indices(sim: &SimilarityMatrix, known: &[usize]) -> Vec<(usize, f64)> {
    let mut is_known = vec![false; sim.len()];
    for &k in known {
        is_known[k] = true;
    }
    let mut ranked: Vec<(usize, f64)> = (0..sim.len())
        .filter(|&i| !is_known[i])
        .map(|i| {
            let best = known
                .iter()
                .map(|&k| sim.get(i, k))
                .fold(f64::NEG_INFINITY, f64::max);
            (i, best)
        })
        .collect();
    let names = sim.class_names();
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| names[a.0].cmp(&names[b.0])));
    ranked
}

/// Pairs every non-known class with its maximum similarity to the known
/// classes, sorted ascending (easiest first). Ties are broken by class name.
pub fn rank_open_classes(sim: &SimilarityMatrix, known: &[String]) -> Result<Vec<RankedClass>, SplitError> {
    let known_idx = resolve_known(known, |name| sim.index_of(name))?;
    if known_idx.len() == sim.len() {
        return Err(SplitError::NoOpenClasses);
    }
    Ok(rank_indices(sim, &known_idx)
        .into_iter()
        .map(|(i, s)| RankedClass {
            name: sim.class_names()[i].clone(),
            max_similarity: s,
        })
        .collect())
}

/// Three contiguous difficulty bins.
#[derive(Debug, Clone, PartialEq)]
pub struct Bins<T> {
    pub easy: Vec<T>,
    pub medium: Vec<T>,
    pub hard: Vec<T>,
}

/// Cuts a ranked list into thirds: `floor(N/3)` easy, `floor((N+1)/3)`
/// medium, the rest hard.
pub fn bin_open_classes<T: Clone>(ranked: &[T]) -> Bins<T> {
    let n = ranked.len();
    let easy = n / 3;
    let medium = (n + 1) / 3;
    Bins {
        easy: ranked[..easy].to_vec(),
        medium: ranked[easy..easy + medium].to_vec(),
        hard: ranked[easy + medium..].to_vec(),
    }
}

/// Draws one known-class subset for sample `sample_index`.
///
/// Procedure: sort class indices by class name; seed ChaCha8 with `seed` and
/// select stream `sample_index`; run `num_known` steps of Fisher-Yates, where
/// step `i` swaps position `i` with `i + r`, `r` drawn uniformly from
/// `0..(n - i)` as a `u64`. The first `num_known` entries, sorted by index,
/// are the subset.
pub fn sample_known_subset(
    class_names: &[String],
    num_known: usize,
    seed: u64,
    sample_index: u64,
) -> Vec<usize> {
    let n = class_names.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| class_names[a].cmp(&class_names[b]));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(sample_index);
    for i in 0..num_known.min(n) {
        let r = rng.random_range(0..(n - i) as u64) as usize;
        order.swap(i, i + r);
    }
    let mut subset = order[..num_known.min(n)].to_vec();
    subset.sort_unstable();
    subset
}

/// Difficulty of a known-class subset: (mean max-similarity over the Hard
/// bin, mean over all open classes). Larger is harder.
pub fn split_objective(sim: &SimilarityMatrix, known: &[usize]) -> (f64, f64) {
    let ranked = rank_indices(sim, known);
    let bins = bin_open_classes(&ranked);
    let mean = |xs: &[(usize, f64)]| xs.iter().map(|x| x.1).sum::<f64>() / xs.len() as f64;
    (mean(&bins.hard), mean(&ranked))
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    hard: f64,
    open: f64,
    index: u64,
}

/// Larger objective wins; on exact ties the lower sample index wins.
fn better(a: Candidate, b: Candidate) -> Candidate {
    match a
        .hard
        .total_cmp(&b.hard)
        .then(a.open.total_cmp(&b.open))
        .then(b.index.cmp(&a.index))
    {
        Ordering::Less => b,
        _ => a,
    }
}

/// Samples `num_samples` random known-class subsets of size `num_known` and
/// keeps the one whose open-set split is most difficult (see
/// [`split_objective`]).
///
/// Samples are evaluated in parallel; the result depends only on the inputs,
/// not on the thread count.
pub fn search_attribute_splits(
    matrix: &AttributeMatrix,
    num_known: usize,
    num_samples: u64,
    seed: u64,
) -> Result<SplitSpec, SplitError> {
    let total = matrix.num_classes();
    if num_known == 0 || num_known >= total {
        return Err(SplitError::InvalidSize(format!(
            "num_known must be in [1, {}), got {num_known}",
            total
        )));
    }
    if num_samples == 0 {
        return Err(SplitError::InvalidSize("num_samples must be at least 1".into()));
    }
    let sim = class_similarity_matrix(matrix);
    let names = matrix.class_names();
    let best = (0..num_samples)
        .into_par_iter()
        .map(|index| {
            let known = sample_known_subset(names, num_known, seed, index);
            let (hard, open) = split_objective(&sim, &known);
            Candidate { hard, open, index }
        })
        .reduce_with(better)
        .expect("num_samples >= 1");

    let known = sample_known_subset(names, num_known, seed, best.index);
    Ok(attribute_split_spec(
        &sim,
        &known,
        SplitMeta {
            seed,
            samples: num_samples,
            source_digest: matrix.digest(),
        },
    ))
}

/// The split induced by a fixed known-class subset.
pub(crate) fn attribute_split_spec(sim: &SimilarityMatrix, known: &[usize], meta: SplitMeta) -> SplitSpec {
    let names = sim.class_names();
    let ranked = rank_indices(sim, known);
    let bins = bin_open_classes(&ranked);
    let to_names = |xs: &[(usize, f64)]| xs.iter().map(|x| names[x.0].clone()).collect::<Vec<_>>();
    SplitSpec {
        scheme: SplitScheme::Attribute,
        known: known.iter().map(|&k| names[k].clone()).collect(),
        easy: to_names(&bins.easy),
        medium: to_names(&bins.medium),
        hard: to_names(&bins.hard),
        difficulty: ranked
            .iter()
            .map(|&(i, s)| (names[i].clone(), s))
            .collect::<BTreeMap<_, _>>(),
        meta,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: &[&[f64]]) -> AttributeMatrix {
        AttributeMatrix::new(
            (0..rows.len()).map(|i| format!("c{i}")).collect(),
            rows.iter().map(|r| r.to_vec()).collect(),
        )
        .unwrap()
    }

    fn names(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn identical_and_orthogonal_rows() {
        let s = class_similarity_matrix(&matrix(&[&[0.2, 0.4], &[0.1, 0.2], &[1.0, 0.0], &[0.0, 1.0]]));
        assert!((s.get(0, 1) - 1.0).abs() < 1e-15);
        assert_eq!(s.get(2, 3), 0.0);
        for i in 0..4 {
            assert!((s.get(i, i) - 1.0).abs() < 1e-12);
            for j in 0..4 {
                assert_eq!(s.get(i, j), s.get(j, i));
            }
        }
    }

    #[test]
    fn ranking_extremes() {
        let m = matrix(&[&[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0], &[0.0, 0.0, 1.0], &[0.5, 0.5, 0.0]]);
        let s = class_similarity_matrix(&m);
        let ranked = rank_open_classes(&s, &names(&["c0"])).unwrap();
        assert_eq!(ranked[0].name, "c2");
        assert_eq!(ranked[0].max_similarity, 0.0);
        assert_eq!(ranked.last().unwrap().name, "c1");
        assert!((ranked.last().unwrap().max_similarity - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ranking_ties_by_name() {
        let m = AttributeMatrix::new(
            names(&["k", "zeta", "alpha", "mid"]),
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 1.0], vec![0.0, 1.0]],
        )
        .unwrap();
        let s = class_similarity_matrix(&m);
        let ranked: Vec<_> = rank_open_classes(&s, &names(&["k"]))
            .unwrap()
            .into_iter()
            .map(|r| r.name)
            .collect();
        assert_eq!(ranked, ["alpha", "mid", "zeta"]);
    }

    #[test]
    fn ranking_errors() {
        let s = class_similarity_matrix(&matrix(&[&[1.0], &[0.5]]));
        assert_eq!(rank_open_classes(&s, &[]).unwrap_err(), SplitError::EmptyKnown);
        assert_eq!(
            rank_open_classes(&s, &names(&["c0", "c1"])).unwrap_err(),
            SplitError::NoOpenClasses
        );
        assert_eq!(
            rank_open_classes(&s, &names(&["nope"])).unwrap_err(),
            SplitError::UnknownClass("nope".into())
        );
    }

    #[test]
    fn bin_sizes() {
        let sizes = |n: usize| {
            let v: Vec<usize> = (0..n).collect();
            let b = bin_open_classes(&v);
            (b.easy.len(), b.medium.len(), b.hard.len())
        };
        assert_eq!(sizes(3), (1, 1, 1));
        assert_eq!(sizes(100), (33, 33, 34));
        assert_eq!(sizes(1), (0, 0, 1));
        assert_eq!(sizes(2), (0, 1, 1));
        assert_eq!(sizes(5), (1, 2, 2));
        let b = bin_open_classes(&[1, 2, 3, 4, 5, 6, 7]);
        assert_eq!([b.easy, b.medium, b.hard].concat(), vec![1, 2, 3, 4, 5, 6, 7]);
    }

    #[test]
    fn subset_sampling_is_deterministic_and_valid() {
        let n: Vec<String> = (0..30).map(|i| format!("class{i:02}")).collect();
        for index in 0..50 {
            let a = sample_known_subset(&n, 10, 42, index);
            assert_eq!(a, sample_known_subset(&n, 10, 42, index));
            assert_eq!(a.len(), 10);
            assert!(a.windows(2).all(|w| w[0] < w[1]));
        }
        assert_ne!(sample_known_subset(&n, 10, 42, 0), sample_known_subset(&n, 10, 42, 1));
    }

    #[test]
    fn single_sample_search_is_that_sample() {
        let m = matrix(&[&[1.0, 0.1], &[0.3, 0.9], &[0.5, 0.5], &[0.9, 0.2], &[0.05, 1.0]]);
        let spec = search_attribute_splits(&m, 2, 1, 11).unwrap();
        let known = sample_known_subset(m.class_names(), 2, 11, 0);
        let expected: Vec<String> = known.iter().map(|&k| m.class_names()[k].clone()).collect();
        assert_eq!(spec.known, expected);
        assert_eq!(spec.meta.samples, 1);
        assert_eq!(spec.meta.seed, 11);
        spec.validate().unwrap();
    }

    #[test]
    fn search_size_errors() {
        let m = matrix(&[&[1.0], &[0.5], &[0.2]]);
        assert!(search_attribute_splits(&m, 0, 5, 0).is_err());
        assert!(search_attribute_splits(&m, 3, 5, 0).is_err());
        assert!(search_attribute_splits(&m, 1, 0, 0).is_err());
    }

    #[test]
    fn copying_a_known_row_makes_the_class_hardest() {
        let rows: Vec<Vec<f64>> = vec![
            vec![0.9, 0.1, 0.0],
            vec![0.1, 0.8, 0.3],
            vec![0.0, 0.2, 0.9],
            vec![0.4, 0.4, 0.4],
            vec![0.7, 0.0, 0.6],
        ];
        let n = names(&["a", "b", "c", "d", "e"]);
        let before = class_similarity_matrix(&AttributeMatrix::new(n.clone(), rows.clone()).unwrap());
        let mut copied = rows.clone();
        copied[2] = rows[0].clone();
        let after = class_similarity_matrix(&AttributeMatrix::new(n, copied).unwrap());
        let known = names(&["a", "b"]);
        let pos = |ranked: &[RankedClass]| ranked.iter().position(|r| r.name == "c").unwrap();
        let rb = rank_open_classes(&before, &known).unwrap();
        let ra = rank_open_classes(&after, &known).unwrap();
        assert!((ra[pos(&ra)].max_similarity - 1.0).abs() < 1e-12);
        assert!(pos(&ra) >= pos(&rb));
        assert_eq!(pos(&ra), ra.len() - 1);
    }
}
