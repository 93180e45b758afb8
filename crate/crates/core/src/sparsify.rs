//! Bond percolation and leakage-free link splitting.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{load_edges, write_edges, BipartiteGraph, Edge};

/// Keeps each edge independently with probability `q`, preserving order.
pub fn percolate<R: Rng + ?Sized>(g: &BipartiteGraph, q: f64, rng: &mut R) -> Result<BipartiteGraph> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "retain rate q must lie in (0, 1], got {q}"
        )));
    }
    let kept = g
        .edges()
        .iter()
        .copied()
        .filter(|_| rng.gen::<f64>() < q)
        .collect();
    g.with_edges(kept)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitConfig {
    pub ratios: [f64; 3],
    pub negative_ratio: f64,
    /// Recorded for configuration fidelity; the shallow scorer supervises on
    /// every training positive regardless of its value.
    pub disjoint_train_ratio: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            ratios: [0.8, 0.1, 0.1],
            negative_ratio: 1.0,
            disjoint_train_ratio: 0.0,
        }
    }
}

impl SplitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ratios.iter().any(|&r| !(r > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "split ratios must be positive, got {:?}",
                self.ratios
            )));
        }
        let total: f64 = self.ratios.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "split ratios must sum to 1, got {total}"
            )));
        }
        if !(self.negative_ratio >= 0.0) || !self.negative_ratio.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "negative_ratio must be finite and >= 0, got {}",
                self.negative_ratio
            )));
        }
        if !(0.0..1.0).contains(&self.disjoint_train_ratio) {
            return Err(Error::InvalidParameter(format!(
                "disjoint_train_ratio must lie in [0, 1), got {}",
                self.disjoint_train_ratio
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkSplit {
    pub n_u: usize,
    pub n_v: usize,
    pub train_pos: Vec<Edge>,
    pub val_pos: Vec<Edge>,
    pub test_pos: Vec<Edge>,
    pub train_neg: Vec<Edge>,
    pub val_neg: Vec<Edge>,
    pub test_neg: Vec<Edge>,
    /// Duplicate edges collapsed before splitting.
    pub collapsed_duplicates: usize,
}

impl LinkSplit {
    pub fn positives(&self) -> impl Iterator<Item = &Edge> {
        self.train_pos.iter().chain(&self.val_pos).chain(&self.test_pos)
    }

    pub fn negatives(&self) -> impl Iterator<Item = &Edge> {
        self.train_neg.iter().chain(&self.val_neg).chain(&self.test_neg)
    }
}

/// Largest-remainder apportionment of `n` items by `ratios`. Ties in the
/// fractional part go to the earlier slot.
pub fn apportion(n: usize, ratios: &[f64; 3]) -> [usize; 3] {
    let exact = ratios.map(|r| r * n as f64);
    // 1e-9 absorbs products like 0.8 * 715 landing just under an integer
    let floors = exact.map(|x| (x + 1e-9).floor());
    let frac = [0, 1, 2].map(|i| (exact[i] - floors[i]).max(0.0));
    let mut sizes = floors.map(|x| x as usize);
    let assigned: usize = sizes.iter().sum();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| frac[b].total_cmp(&frac[a]).then(a.cmp(&b)));
    for &slot in order.iter().take(n.saturating_sub(assigned)) {
        sizes[slot] += 1;
    }
    sizes
}

fn negative_count(ratio: f64, positives: usize) -> usize {
    (ratio * positives as f64).round() as usize
}

/// Shuffles the distinct edges, partitions them by `cfg.ratios` and draws
/// negatives uniformly from the complement of the edge set. Negatives are
/// pairwise distinct across all three splits.
pub fn split_links<R: Rng + ?Sized>(
    g: &BipartiteGraph,
    cfg: &SplitConfig,
    rng: &mut R,
) -> Result<LinkSplit> {
    cfg.validate()?;
    let mut distinct = g.distinct_edges();
    let collapsed = g.num_edges() - distinct.len();
    if collapsed > 0 {
        log::warn!("collapsed {collapsed} duplicate edges before splitting");
    }
    if distinct.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "need at least 3 distinct edges to split, got {}",
            distinct.len()
        )));
    }
    distinct.shuffle(rng);
    let [n_train, n_val, n_test] = apportion(distinct.len(), &cfg.ratios);
    let test_pos = distinct.split_off(n_train + n_val);
    let val_pos = distinct.split_off(n_train);
    let train_pos = distinct;
    debug_assert_eq!((val_pos.len(), test_pos.len()), (n_val, n_test));

    let counts = [n_train, n_val, n_test].map(|n| negative_count(cfg.negative_ratio, n));
    let total: usize = counts.iter().sum();
    let edge_set: HashSet<Edge> = g.edges().iter().copied().collect();
    let mut negs = sample_non_edges(g.n_u(), g.n_v(), &edge_set, total, rng)?;
    let test_neg = negs.split_off(counts[0] + counts[1]);
    let val_neg = negs.split_off(counts[0]);
    let train_neg = negs;

    Ok(LinkSplit {
        n_u: g.n_u(),
        n_v: g.n_v(),
        train_pos,
        val_pos,
        test_pos,
        train_neg,
        val_neg,
        test_neg,
        collapsed_duplicates: collapsed,
    })
}

/// Draws `count` distinct pairs from `(U x V) \ edges`, uniformly without
/// replacement. Rejection sampling while non-edges are plentiful; explicit
/// enumeration of the complement above 50% density.
pub fn sample_non_edges<R: Rng + ?Sized>(
    n_u: usize,
    n_v: usize,
    edges: &HashSet<Edge>,
    count: usize,
    rng: &mut R,
) -> Result<Vec<Edge>> {
    let cells = n_u * n_v;
    let available = cells - edges.len();
    if count > available {
        return Err(Error::NotEnoughNegatives {
            requested: count,
            available,
        });
    }
    if count == 0 {
        return Ok(Vec::new());
    }
    if edges.len() * 2 > cells {
        let mut complement: Vec<Edge> = (0..n_u as u32)
            .flat_map(|u| (0..n_v as u32).map(move |v| Edge::new(u, v)))
            .filter(|e| !edges.contains(e))
            .collect();
        let (picked, _) = complement.partial_shuffle(rng, count);
        return Ok(picked.to_vec());
    }
    let mut chosen = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let e = Edge::new(rng.gen_range(0..n_u as u32), rng.gen_range(0..n_v as u32));
        if !edges.contains(&e) && chosen.insert(e) {
            out.push(e);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitMeta {
    pub format_version: u32,
    pub seed: u64,
    pub q: Option<f64>,
    pub ratios: [f64; 3],
    pub negative_ratio: f64,
    pub disjoint_train_ratio: f64,
    pub n_u: usize,
    pub n_v: usize,
}

pub const SPLIT_FILES: [&str; 6] = [
    "train_pos.txt",
    "train_neg.txt",
    "val_pos.txt",
    "val_neg.txt",
    "test_pos.txt",
    "test_neg.txt",
];

pub fn write_split(dir: impl AsRef<Path>, split: &LinkSplit, meta: &SplitMeta) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let sets = [
        &split.train_pos,
        &split.train_neg,
        &split.val_pos,
        &split.val_neg,
        &split.test_pos,
        &split.test_neg,
    ];
    for (name, set) in SPLIT_FILES.iter().zip(sets) {
        write_edges(dir.join(name), set)?;
    }
    let meta_text = toml::to_string(meta).map_err(|e| Error::Config(e.to_string()))?;
    let meta_path = dir.join("meta.toml");
    fs::write(&meta_path, meta_text).map_err(|e| Error::io(meta_path, e))
}

pub fn read_split(dir: impl AsRef<Path>) -> Result<(LinkSplit, SplitMeta)> {
    let dir = dir.as_ref();
    let meta_path = dir.join("meta.toml");
    let text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let meta: SplitMeta =
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", meta_path.display())))?;
    let mut sets = Vec::with_capacity(6);
    for name in SPLIT_FILES {
        sets.push(load_edges(dir.join(name), meta.n_u, meta.n_v)?.into_edges());
    }
    let mut it = sets.into_iter();
    let mut next = || it.next().unwrap();
    let (train_pos, train_neg, val_pos, val_neg, test_pos, test_neg) =
        (next(), next(), next(), next(), next(), next());
    Ok((
        LinkSplit {
            n_u: meta.n_u,
            n_v: meta.n_v,
            train_pos,
            val_pos,
            test_pos,
            train_neg,
            val_neg,
            test_neg,
            collapsed_duplicates: 0,
        },
        meta,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;
    use proptest::prelude::*;

    fn grid_graph(n_u: usize, n_v: usize, stride: usize) -> BipartiteGraph {
        let edges = (0..n_u as u32)
            .flat_map(|u| (0..n_v as u32).map(move |v| Edge::new(u, v)))
            .enumerate()
            .filter(|(i, _)| i % stride == 0)
            .map(|(_, e)| e)
            .collect();
        BipartiteGraph::new(n_u, n_v, edges).unwrap()
    }

    #[test]
    fn retain_all_is_identity() {
        let g = grid_graph(10, 10, 3);
        let p = percolate(&g, 1.0, &mut rng_from_seed(1)).unwrap();
        assert_eq!(p, g);
    }

    #[test]
    fn rejects_bad_q() {
        let g = grid_graph(3, 3, 1);
        for q in [0.0, -0.1, 1.5, f64::NAN] {
            assert!(percolate(&g, q, &mut rng_from_seed(0)).is_err());
        }
    }

    #[test]
    fn binomial_mean_over_seeds() {
        // Binomial(10000, 0.5): mean 5000, sd 50 per draw; the mean of 200
        // draws has sd 50 / sqrt(200).
        let g = BipartiteGraph::new(100, 100, grid_graph(100, 100, 1).into_edges()).unwrap();
        let kept: Vec<f64> = (0..200)
            .map(|s| percolate(&g, 0.5, &mut rng_from_seed(s)).unwrap().num_edges() as f64)
            .collect();
        let mean = kept.iter().sum::<f64>() / kept.len() as f64;
        assert!((mean - 5000.0).abs() < 3.0 * 50.0 / 200f64.sqrt(), "mean {mean}");
    }

    #[test]
    fn apportion_examples() {
        assert_eq!(apportion(10, &[0.8, 0.1, 0.1]), [8, 1, 1]);
        assert_eq!(apportion(3, &[0.8, 0.1, 0.1]), [3, 0, 0]);
        assert_eq!(apportion(67, &[0.8, 0.1, 0.1]), [53, 7, 7]);
        assert_eq!(apportion(715, &[0.8, 0.1, 0.1]), [572, 72, 71]);
    }

    #[test]
    fn split_sizes_and_one_to_one_negatives() {
        let g = grid_graph(10, 10, 10);
        assert_eq!(g.num_edges(), 10);
        let s = split_links(&g, &SplitConfig::default(), &mut rng_from_seed(3)).unwrap();
        assert_eq!((s.train_pos.len(), s.val_pos.len(), s.test_pos.len()), (8, 1, 1));
        assert_eq!(s.train_neg.len(), s.train_pos.len());
        assert_eq!(s.val_neg.len(), 1);
        assert_eq!(s.test_neg.len(), 1);
    }

    #[test]
    fn complete_graph_has_no_negatives() {
        let g = grid_graph(2, 2, 1);
        let mut g3 = g.edges().to_vec();
        g3.push(Edge::new(0, 0));
        let g = BipartiteGraph::new(2, 2, g3).unwrap();
        let err = split_links(&g, &SplitConfig::default(), &mut rng_from_seed(0)).unwrap_err();
        assert!(matches!(err, Error::NotEnoughNegatives { available: 0, .. }));
    }

    #[test]
    fn too_few_edges() {
        let g = BipartiteGraph::new(3, 3, vec![Edge::new(0, 0), Edge::new(0, 0), Edge::new(1, 1)])
            .unwrap();
        assert!(split_links(&g, &SplitConfig::default(), &mut rng_from_seed(0)).is_err());
    }

    #[test]
    fn dense_graph_uses_enumeration() {
        // 70% dense: the complement path must still give distinct non-edges
        let g = grid_graph(10, 10, 1);
        let edges: Vec<Edge> = g.edges()[..70].to_vec();
        let g = BipartiteGraph::new(10, 10, edges).unwrap();
        let cfg = SplitConfig { negative_ratio: 0.4, ..SplitConfig::default() };
        let s = split_links(&g, &cfg, &mut rng_from_seed(5)).unwrap();
        let set = g.edge_set();
        let negs: HashSet<Edge> = s.negatives().copied().collect();
        // round(0.4 * 56) + round(0.4 * 7) * 2 of the 30 non-edges
        assert_eq!(negs.len(), 28);
        assert!(negs.iter().all(|e| !set.contains(e)));
    }

    #[test]
    fn split_roundtrips_through_disk() {
        let g = grid_graph(12, 9, 4);
        let s = split_links(&g, &SplitConfig::default(), &mut rng_from_seed(11)).unwrap();
        let meta = SplitMeta {
            format_version: 1,
            seed: 11,
            q: None,
            ratios: [0.8, 0.1, 0.1],
            negative_ratio: 1.0,
            disjoint_train_ratio: 0.0,
            n_u: 12,
            n_v: 9,
        };
        let dir = tempfile::tempdir().unwrap();
        write_split(dir.path(), &s, &meta).unwrap();
        let (back, meta_back) = read_split(dir.path()).unwrap();
        assert_eq!(back, s);
        assert_eq!(meta_back, meta);
    }

    proptest! {
        #[test]
        fn percolation_is_a_subsequence(seed in any::<u64>(), q in 0.01f64..1.0) {
            let g = grid_graph(15, 11, 2);
            let p = percolate(&g, q, &mut rng_from_seed(seed)).unwrap();
            let mut it = g.edges().iter();
            for e in p.edges() {
                prop_assert!(it.any(|x| x == e));
            }
            prop_assert_eq!((p.n_u(), p.n_v()), (g.n_u(), g.n_v()));
        }

        #[test]
        fn splits_are_disjoint_and_leak_free(seed in any::<u64>(), ratio in 0.0f64..2.0) {
            let g = grid_graph(20, 15, 7);
            let cfg = SplitConfig { negative_ratio: ratio, ..SplitConfig::default() };
            let s = split_links(&g, &cfg, &mut rng_from_seed(seed)).unwrap();
            let all = g.edge_set();
            let pos: Vec<Edge> = s.positives().copied().collect();
            let pos_set: HashSet<Edge> = pos.iter().copied().collect();
            prop_assert_eq!(pos.len(), pos_set.len());
            prop_assert_eq!(&pos_set, &all);
            prop_assert!(s.negatives().all(|e| !all.contains(e)));
            for (p, n) in [(&s.train_pos, &s.train_neg), (&s.val_pos, &s.val_neg), (&s.test_pos, &s.test_neg)] {
                prop_assert_eq!(n.len(), (ratio * p.len() as f64).round() as usize);
            }
            let again = split_links(&g, &cfg, &mut rng_from_seed(seed)).unwrap();
            prop_assert_eq!(again, s);
        }
    }
}
