//! Training-edge augmentation policies.
//!
//! Every policy returns `E ⊎ E'`: the input multiset in its original order
//! followed by the additions. The additive budget is `⌊(φ − 1)·|E|⌋`.
//! Copy policies ([`augment_simple`], [`augment_degree_aware`]) only ever
//! re-emit observed edges. [`augment_random_er`] and [`augment_synthetic`]
//! are null baselines. [`augment_semantic_knn`] proposes unseen pairs whose
//! endpoints are feature-space neighbours of an observed edge's endpoints.

use std::collections::HashSet;
use std::fmt;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{degrees, DegreeTable, Edge, FeatureMatrix};

pub const DEFAULT_EPSILON: f64 = 1.0;
pub const DEFAULT_RADIUS: u32 = 2;
pub const DEFAULT_K: usize = 10;
pub const DEFAULT_TAU: f64 = 0.5;
pub const DEFAULT_ALPHA: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub enum Policy {
    None,
    Simple,
    DegreeAware {
        epsilon: f64,
    },
    RandomEr,
    Synthetic {
        radius: u32,
    },
    SemanticKnn {
        k: usize,
        tau: f64,
        alpha: usize,
        /// Keep each node's self-match in its neighbour list.
        include_self: bool,
    },
}

/// Flat serialized form: `kind` plus whichever parameters that kind takes.
#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPolicy {
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    radius: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    include_self: Option<bool>,
}

impl TryFrom<RawPolicy> for Policy {
    type Error = String;

    fn try_from(raw: RawPolicy) -> std::result::Result<Self, String> {
        let allowed: &[&str] = match raw.kind.as_str() {
            "degree_aware" => &["epsilon"],
            "synthetic" => &["radius"],
            "semantic_knn" => &["k", "tau", "alpha", "include_self"],
            _ => &[],
        };
        let present = [
            ("epsilon", raw.epsilon.is_some()),
            ("radius", raw.radius.is_some()),
            ("k", raw.k.is_some()),
            ("tau", raw.tau.is_some()),
            ("alpha", raw.alpha.is_some()),
            ("include_self", raw.include_self.is_some()),
        ];
        if let Some((key, _)) = present.iter().find(|(k, p)| *p && !allowed.contains(k)) {
            return Err(format!("policy `{}` takes no parameter `{key}`", raw.kind));
        }
        Ok(match raw.kind.as_str() {
            "none" => Policy::None,
            "simple" => Policy::Simple,
            "degree_aware" => Policy::DegreeAware {
                epsilon: raw.epsilon.unwrap_or(DEFAULT_EPSILON),
            },
            "random_er" => Policy::RandomEr,
            "synthetic" => Policy::Synthetic {
                radius: raw.radius.unwrap_or(DEFAULT_RADIUS),
            },
            "semantic_knn" => Policy::SemanticKnn {
                k: raw.k.unwrap_or(DEFAULT_K),
                tau: raw.tau.unwrap_or(DEFAULT_TAU),
                alpha: raw.alpha.unwrap_or(DEFAULT_ALPHA),
                include_self: raw.include_self.unwrap_or(false),
            },
            other => return Err(format!("unknown policy kind `{other}`")),
        })
    }
}

impl From<&Policy> for RawPolicy {
    fn from(p: &Policy) -> Self {
        let mut raw = RawPolicy {
            kind: p.name().to_owned(),
            ..RawPolicy::default()
        };
        match *p {
            Policy::DegreeAware { epsilon } => raw.epsilon = Some(epsilon),
            Policy::Synthetic { radius } => raw.radius = Some(radius),
            Policy::SemanticKnn { k, tau, alpha, include_self } => {
                raw.k = Some(k);
                raw.tau = Some(tau);
                raw.alpha = Some(alpha);
                raw.include_self = Some(include_self);
            }
            _ => {}
        }
        raw
    }
}

impl Serialize for Policy {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawPolicy::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Policy {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawPolicy::deserialize(d)?;
        Policy::try_from(raw).map_err(serde::de::Error::custom)
    }
}

impl Policy {
    pub fn name(&self) -> &'static str {
        match self {
            Policy::None => "none",
            Policy::Simple => "simple",
            Policy::DegreeAware { .. } => "degree_aware",
            Policy::RandomEr => "random_er",
            Policy::Synthetic { .. } => "synthetic",
            Policy::SemanticKnn { .. } => "semantic_knn",
        }
    }

    pub fn degree_aware() -> Self {
        Policy::DegreeAware {
            epsilon: DEFAULT_EPSILON,
        }
    }

    pub fn synthetic() -> Self {
        Policy::Synthetic {
            radius: DEFAULT_RADIUS,
        }
    }

    pub fn semantic_knn() -> Self {
        Policy::SemanticKnn {
            k: DEFAULT_K,
            tau: DEFAULT_TAU,
            alpha: DEFAULT_ALPHA,
            include_self: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Policy::DegreeAware { epsilon } if !(epsilon > 0.0 && epsilon.is_finite()) => Err(
                Error::InvalidParameter(format!("epsilon must be > 0, got {epsilon}")),
            ),
            Policy::SemanticKnn { k, tau, alpha, .. } => {
                if k == 0 {
                    return Err(Error::InvalidParameter("k must be >= 1".into()));
                }
                if !(-1.0..=1.0).contains(&tau) {
                    return Err(Error::InvalidParameter(format!(
                        "tau must lie in [-1, 1], got {tau}"
                    )));
                }
                if alpha == 0 {
                    return Err(Error::InvalidParameter("alpha must be >= 1".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn check_phi(phi: f64) -> Result<()> {
    if phi >= 1.0 && phi.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "augmentation factor must be finite and >= 1, got {phi}"
        )))
    }
}

/// Number of additions for `n` input edges: `⌊(φ − 1)·n⌋`.
pub fn budget(n: usize, phi: f64) -> usize {
    // the epsilon absorbs representation error in phi, e.g. 1.3 - 1.0
    ((phi - 1.0) * n as f64 + 1e-9).floor() as usize
}

fn resample_budget(edges: &[Edge], phi: f64) -> Result<usize> {
    check_phi(phi)?;
    let n = budget(edges.len(), phi);
    if edges.is_empty() && phi > 1.0 {
        return Err(Error::Empty("cannot resample from an empty edge set"));
    }
    Ok(n)
}

/// Uniform resampling of observed edges with replacement.
pub fn augment_simple<R: Rng + ?Sized>(edges: &[Edge], phi: f64, rng: &mut R) -> Result<Vec<Edge>> {
    let n = resample_budget(edges, phi)?;
    let mut out = Vec::with_capacity(edges.len() + n);
    out.extend_from_slice(edges);
    out.extend((0..n).map(|_| edges[rng.gen_range(0..edges.len())]));
    Ok(out)
}

/// Edge sampler with `P(e) ∝ 1/(deg(u)+ε) + 1/(deg(v)+ε)`, drawn by
/// inverting the cumulative weight table.
#[derive(Debug, Clone)]
pub struct InverseDegreeSampler {
    cumulative: Vec<f64>,
}

impl InverseDegreeSampler {
    pub fn new(edges: &[Edge], deg: &DegreeTable, epsilon: f64) -> Self {
        let mut acc = 0.0;
        let cumulative = edges
            .iter()
            .map(|e| {
                acc += 1.0 / (deg.deg_u[e.u as usize] as f64 + epsilon)
                    + 1.0 / (deg.deg_v[e.v as usize] as f64 + epsilon);
                acc
            })
            .collect();
        InverseDegreeSampler { cumulative }
    }

    pub fn total_weight(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    pub fn probabilities(&self) -> Vec<f64> {
        let total = self.total_weight();
        let mut prev = 0.0;
        self.cumulative
            .iter()
            .map(|&c| {
                let w = c - prev;
                prev = c;
                w / total
            })
            .collect()
    }

    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let r = rng.gen::<f64>() * self.total_weight();
        self.cumulative
            .partition_point(|&c| c <= r)
            .min(self.cumulative.len() - 1)
    }
}

/// Resampling biased toward edges with low-degree endpoints. `deg` is
/// normally [`degrees`] of `edges` itself.
pub fn augment_degree_aware<R: Rng + ?Sized>(
    edges: &[Edge],
    deg: &DegreeTable,
    phi: f64,
    epsilon: f64,
    rng: &mut R,
) -> Result<Vec<Edge>> {
    let n = resample_budget(edges, phi)?;
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon must be > 0, got {epsilon}")));
    }
    let mut out = Vec::with_capacity(edges.len() + n);
    out.extend_from_slice(edges);
    if n == 0 {
        return Ok(out);
    }
    let sampler = InverseDegreeSampler::new(edges, deg, epsilon);
    out.extend((0..n).map(|_| edges[sampler.sample_index(rng)]));
    Ok(out)
}

/// Uniform random `(u, v)` pairs, with no membership check against `edges`.
pub fn augment_random_er<R: Rng + ?Sized>(
    edges: &[Edge],
    n_u: usize,
    n_v: usize,
    phi: f64,
    rng: &mut R,
) -> Result<Vec<Edge>> {
    augment_random_er_excluding(edges, n_u, n_v, phi, &HashSet::new(), rng)
}

/// [`augment_random_er`] that redraws any pair in `forbidden`.
pub fn augment_random_er_excluding<R: Rng + ?Sized>(
    edges: &[Edge],
    n_u: usize,
    n_v: usize,
    phi: f64,
    forbidden: &HashSet<Edge>,
    rng: &mut R,
) -> Result<Vec<Edge>> {
    check_phi(phi)?;
    if n_u == 0 || n_v == 0 {
        return Err(Error::InvalidParameter("both modes need at least one node".into()));
    }
    let n = budget(edges.len(), phi);
    let blocked = forbidden
        .iter()
        .filter(|e| (e.u as usize) < n_u && (e.v as usize) < n_v)
        .count();
    if n > 0 && blocked >= n_u * n_v {
        return Err(Error::InvalidParameter("every pair is excluded".into()));
    }
    let mut out = Vec::with_capacity(edges.len() + n);
    out.extend_from_slice(edges);
    for _ in 0..n {
        loop {
            let u = rng.gen_range(0..n_u as u32);
            let v = rng.gen_range(0..n_v as u32);
            let e = Edge::new(u, v);
            if !forbidden.contains(&e) {
                out.push(e);
                break;
            }
        }
    }
    Ok(out)
}

/// Index-perturbed copies of uniformly drawn base edges. Offsets are drawn
/// independently per axis from `{-r, …, r}` and clamped to the index range.
pub fn augment_synthetic<R: Rng + ?Sized>(
    edges: &[Edge],
    n_u: usize,
    n_v: usize,
    phi: f64,
    radius: u32,
    rng: &mut R,
) -> Result<Vec<Edge>> {
    augment_synthetic_excluding(edges, n_u, n_v, phi, radius, &HashSet::new(), rng)
}

const MAX_REDRAWS: usize = 100_000;

/// [`augment_synthetic`] that redraws base edge and offsets whenever the
/// perturbed pair lands in `forbidden`.
pub fn augment_synthetic_excluding<R: Rng + ?Sized>(
    edges: &[Edge],
    n_u: usize,
    n_v: usize,
    phi: f64,
    radius: u32,
    forbidden: &HashSet<Edge>,
    rng: &mut R,
) -> Result<Vec<Edge>> {
    let n = resample_budget(edges, phi)?;
    let r = i64::from(radius);
    let mut out = Vec::with_capacity(edges.len() + n);
    out.extend_from_slice(edges);
    for _ in 0..n {
        let mut tries = 0;
        loop {
            let base = edges[rng.gen_range(0..edges.len())];
            let du = rng.gen_range(-r..=r);
            let dv = rng.gen_range(-r..=r);
            let e = perturb(base, du, dv, n_u, n_v);
            if !forbidden.contains(&e) {
                out.push(e);
                break;
            }
            tries += 1;
            if tries == MAX_REDRAWS {
                return Err(Error::InvalidParameter(format!(
                    "no admissible perturbation found in {MAX_REDRAWS} draws"
                )));
            }
        }
    }
    Ok(out)
}

pub(crate) fn perturb(base: Edge, du: i64, dv: i64, n_u: usize, n_v: usize) -> Edge {
    let u = (i64::from(base.u) + du).clamp(0, n_u as i64 - 1);
    let v = (i64::from(base.v) + dv).clamp(0, n_v as i64 - 1);
    Edge::new(u as u32, v as u32)
}

/// Per-node `(neighbour, cosine)` lists, most similar first.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborLists {
    lists: Vec<Vec<(u32, f64)>>,
}

impl NeighborLists {
    pub fn from_lists(lists: Vec<Vec<(u32, f64)>>) -> Self {
        NeighborLists { lists }
    }

    /// Lists with no neighbours at all, for `n` nodes.
    pub fn empty(n: usize) -> Self {
        NeighborLists {
            lists: vec![Vec::new(); n],
        }
    }

    pub fn of(&self, node: u32) -> &[(u32, f64)] {
        self.lists.get(node as usize).map_or(&[], Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.lists.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lists.is_empty()
    }
}

/// Brute-force k-nearest neighbours under dot-product similarity of unit
/// rows. The top `k` are chosen first and then filtered to `sim > tau`.
/// Equal similarities rank the lower index first.
pub fn knn_neighbors(x: &FeatureMatrix, k: usize, tau: f64, include_self: bool) -> NeighborLists {
    let n = x.n_rows();
    let lists = (0..n)
        .into_par_iter()
        .map(|i| {
            let row = x.row(i);
            let mut sims: Vec<(u32, f64)> = (0..n)
                .filter(|&j| include_self || j != i)
                .map(|j| (j as u32, dot(row, x.row(j))))
                .collect();
            let by_rank = |a: &(u32, f64), b: &(u32, f64)| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0));
            if sims.len() > k {
                sims.select_nth_unstable_by(k - 1, by_rank);
                sims.truncate(k);
            }
            sims.sort_unstable_by(by_rank);
            sims.retain(|&(_, s)| s > tau);
            sims
        })
        .collect();
    NeighborLists { lists }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemanticOutcome {
    pub edges: Vec<Edge>,
    pub added: usize,
    pub shortfall: usize,
}

/// Feature-neighbour completion. Base edges are visited in stored order;
/// for each, V-side substitutes `(u, v_knn)` are proposed before U-side
/// substitutes `(u_knn, v)`. A proposal is accepted when it is new to
/// `E ∪ E'` and both endpoints are below the per-node cap `alpha`.
pub fn augment_semantic_knn(
    edges: &[Edge],
    s_u: &NeighborLists,
    s_v: &NeighborLists,
    phi: f64,
    alpha: usize,
) -> Result<SemanticOutcome> {
    augment_semantic_knn_excluding(edges, s_u, s_v, phi, alpha, &HashSet::new())
}

/// [`augment_semantic_knn`] that skips proposals in `forbidden` without
/// charging either endpoint's cap.
pub fn augment_semantic_knn_excluding(
    edges: &[Edge],
    s_u: &NeighborLists,
    s_v: &NeighborLists,
    phi: f64,
    alpha: usize,
    forbidden: &HashSet<Edge>,
) -> Result<SemanticOutcome> {
    check_phi(phi)?;
    if alpha == 0 {
        return Err(Error::InvalidParameter("alpha must be >= 1".into()));
    }
    let target = budget(edges.len(), phi);
    let mut seen: HashSet<Edge> = edges.iter().copied().collect();
    let max_u = edges.iter().map(|e| e.u as usize + 1).chain([s_u.len()]).max().unwrap_or(0);
    let max_v = edges.iter().map(|e| e.v as usize + 1).chain([s_v.len()]).max().unwrap_or(0);
    let mut cap_u = vec![0usize; max_u];
    let mut cap_v = vec![0usize; max_v];
    let mut added = Vec::new();
    let mut remaining = target;

    for &Edge { u, v } in edges {
        if remaining == 0 {
            break;
        }
        for &(v_nb, _) in s_v.of(v) {
            if remaining == 0 {
                break;
            }
            let cand = Edge::new(u, v_nb);
            let vi = v_nb as usize;
            if vi >= cap_v.len() {
                cap_v.resize(vi + 1, 0);
            }
            if cap_u[u as usize] < alpha && cap_v[vi] < alpha && !forbidden.contains(&cand) && seen.insert(cand) {
                cap_u[u as usize] += 1;
                cap_v[vi] += 1;
                added.push(cand);
                remaining -= 1;
            }
        }
        for &(u_nb, _) in s_u.of(u) {
            if remaining == 0 {
                break;
            }
            let cand = Edge::new(u_nb, v);
            let ui = u_nb as usize;
            if ui >= cap_u.len() {
                cap_u.resize(ui + 1, 0);
            }
            if cap_u[ui] < alpha && cap_v[v as usize] < alpha && !forbidden.contains(&cand) && seen.insert(cand) {
                cap_u[ui] += 1;
                cap_v[v as usize] += 1;
                added.push(cand);
                remaining -= 1;
            }
        }
    }

    let n_added = added.len();
    let mut out = Vec::with_capacity(edges.len() + n_added);
    out.extend_from_slice(edges);
    out.extend(added);
    Ok(SemanticOutcome {
        edges: out,
        added: n_added,
        shortfall: remaining,
    })
}

/// Feature-derived neighbour lists for both modes.
#[derive(Debug, Clone)]
pub struct SemanticContext {
    pub s_u: NeighborLists,
    pub s_v: NeighborLists,
}

impl SemanticContext {
    pub fn build(
        x_u: &FeatureMatrix,
        x_v: &FeatureMatrix,
        k: usize,
        tau: f64,
        include_self: bool,
    ) -> Self {
        SemanticContext {
            s_u: knn_neighbors(x_u, k, tau, include_self),
            s_v: knn_neighbors(x_v, k, tau, include_self),
        }
    }
}

/// Result of applying any policy to a training edge multiset.
#[derive(Debug, Clone, PartialEq)]
pub struct Augmentation {
    pub edges: Vec<Edge>,
    pub added: usize,
    pub shortfall: usize,
}

/// Runs `policy` on `edges`. `semantic` must be supplied for
/// [`Policy::SemanticKnn`]; it is ignored otherwise.
pub fn apply<R: Rng + ?Sized>(
    policy: &Policy,
    phi: f64,
    edges: &[Edge],
    n_u: usize,
    n_v: usize,
    semantic: Option<&SemanticContext>,
    rng: &mut R,
) -> Result<Augmentation> {
    apply_excluding(policy, phi, edges, n_u, n_v, semantic, &HashSet::new(), rng)
}

/// [`apply`] with a set of pairs no policy may add, typically held-out
/// positives. Copy policies never leave `edges` so are unaffected.
#[allow(clippy::too_many_arguments)]
pub fn apply_excluding<R: Rng + ?Sized>(
    policy: &Policy,
    phi: f64,
    edges: &[Edge],
    n_u: usize,
    n_v: usize,
    semantic: Option<&SemanticContext>,
    forbidden: &HashSet<Edge>,
    rng: &mut R,
) -> Result<Augmentation> {
    policy.validate()?;
    check_phi(phi)?;
    let copied = |out: Vec<Edge>| Augmentation {
        added: out.len() - edges.len(),
        edges: out,
        shortfall: 0,
    };
    match *policy {
        Policy::None => Ok(copied(edges.to_vec())),
        Policy::Simple => augment_simple(edges, phi, rng).map(copied),
        Policy::DegreeAware { epsilon } => {
            let deg = degrees(n_u, n_v, edges);
            augment_degree_aware(edges, &deg, phi, epsilon, rng).map(copied)
        }
        Policy::RandomEr => augment_random_er_excluding(edges, n_u, n_v, phi, forbidden, rng).map(copied),
        Policy::Synthetic { radius } => {
            augment_synthetic_excluding(edges, n_u, n_v, phi, radius, forbidden, rng).map(copied)
        }
        Policy::SemanticKnn { alpha, .. } => {
            let ctx = semantic.ok_or_else(|| {
                Error::Config("semantic_knn requires feature matrices for both modes".into())
            })?;
            let out = augment_semantic_knn_excluding(edges, &ctx.s_u, &ctx.s_v, phi, alpha, forbidden)?;
            Ok(Augmentation {
                edges: out.edges,
                added: out.added,
                shortfall: out.shortfall,
            })
        }
    }
}

/// Sidecar written next to a serialized augmented edge list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub policy: Policy,
    pub phi: f64,
    pub seed: u64,
    pub input_edges: usize,
    pub added: usize,
    pub shortfall: usize,
}

impl Provenance {
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;
    use proptest::prelude::*;

    fn e(u: u32, v: u32) -> Edge {
        Edge::new(u, v)
    }

    #[test]
    fn exclusion_is_respected_without_shrinking_the_budget() {
        let edges = [e(1, 1), e(2, 2)];
        let forbidden: HashSet<Edge> = [e(0, 0), e(1, 2), e(2, 1), e(0, 1)].into_iter().collect();
        let er = augment_random_er_excluding(&edges, 3, 3, 50.0, &forbidden, &mut rng_from_seed(3)).unwrap();
        let syn = augment_synthetic_excluding(&edges, 3, 3, 50.0, 1, &forbidden, &mut rng_from_seed(3)).unwrap();
        for out in [er, syn] {
            assert_eq!(out.len(), 100);
            assert!(out.iter().all(|x| !forbidden.contains(x)));
        }
        let all: HashSet<Edge> = (0..2).flat_map(|u| (0..2).map(move |v| e(u, v))).collect();
        assert!(augment_random_er_excluding(&[], 2, 2, 2.0, &all, &mut rng_from_seed(0)).is_ok());
        assert!(augment_random_er_excluding(&[e(0, 0)], 2, 2, 2.0, &all, &mut rng_from_seed(0)).is_err());

        let s_u = NeighborLists::from_lists(vec![vec![(1, 0.9)], vec![(0, 0.9)]]);
        let s_v = NeighborLists::from_lists(vec![vec![(1, 0.9)], vec![(0, 0.9)]]);
        let blocked: HashSet<Edge> = [e(0, 1)].into_iter().collect();
        let out = augment_semantic_knn_excluding(&[e(0, 0)], &s_u, &s_v, 3.0, 1, &blocked).unwrap();
        assert_eq!(out.edges, vec![e(0, 0), e(1, 0)]);
        assert_eq!(out.shortfall, 1);
    }

    #[test]
    fn budget_arithmetic() {
        assert_eq!(budget(67, 100.0), 6633);
        assert_eq!(budget(10, 1.0), 0);
        assert_eq!(budget(10, 1.3), 3);
        assert_eq!(budget(7, 2.5), 10);
    }

    #[test]
    fn simple_examples() {
        let edges: Vec<Edge> = (0..67).map(|i| e(i % 7, i % 5)).collect();
        let out = augment_simple(&edges, 100.0, &mut rng_from_seed(0)).unwrap();
        assert_eq!(out.len(), 6700);
        assert_eq!(&out[..67], &edges[..]);

        let out = augment_simple(&edges, 1.0, &mut rng_from_seed(0)).unwrap();
        assert_eq!(out, edges);

        let out = augment_simple(&[e(0, 0)], 5.0, &mut rng_from_seed(0)).unwrap();
        assert_eq!(out, vec![e(0, 0); 5]);
    }

    #[test]
    fn empty_input_is_rejected_for_resampling() {
        assert!(augment_simple(&[], 2.0, &mut rng_from_seed(0)).is_err());
        assert!(augment_synthetic(&[], 3, 3, 2.0, 1, &mut rng_from_seed(0)).is_err());
        let deg = degrees(1, 1, &[]);
        assert!(augment_degree_aware(&[], &deg, 2.0, 1.0, &mut rng_from_seed(0)).is_err());
        // nothing requested, nothing to reject
        assert_eq!(augment_simple(&[], 1.0, &mut rng_from_seed(0)).unwrap(), vec![]);
    }

    #[test]
    fn invalid_phi() {
        assert!(augment_simple(&[e(0, 0)], 0.5, &mut rng_from_seed(0)).is_err());
        assert!(augment_random_er(&[e(0, 0)], 1, 1, f64::NAN, &mut rng_from_seed(0)).is_err());
    }

    #[test]
    fn degree_weight_example() {
        // deg_u = (1, 1), deg_v = (2); eps = 1 → both weights 1/2 + 1/3
        let edges = [e(0, 0), e(1, 0)];
        let deg = degrees(2, 1, &edges);
        let s = InverseDegreeSampler::new(&edges, &deg, 1.0);
        assert!((s.total_weight() - 2.0 * (0.5 + 1.0 / 3.0)).abs() < 1e-15);
        let p = s.probabilities();
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn degree_weight_ratio() {
        // edge 0 has degree-1 endpoints; edge 1 sits on degree-100 endpoints
        let mut edges = vec![e(0, 0)];
        edges.extend(std::iter::repeat(e(1, 1)).take(100));
        let deg = degrees(2, 2, &edges);
        let p = InverseDegreeSampler::new(&edges, &deg, 1.0).probabilities();
        let ratio = p[0] / p[1];
        assert!((ratio - 50.5).abs() < 1e-9, "{ratio}");
    }

    #[test]
    fn sampler_handles_boundary_draws() {
        let edges = [e(0, 0), e(0, 1), e(1, 1)];
        let deg = degrees(2, 2, &edges);
        let s = InverseDegreeSampler::new(&edges, &deg, 1.0);
        let mut rng = rng_from_seed(42);
        for _ in 0..10_000 {
            assert!(s.sample_index(&mut rng) < 3);
        }
    }

    #[test]
    fn random_er_examples() {
        let out = augment_random_er(&[e(0, 0); 3], 1, 1, 4.0, &mut rng_from_seed(1)).unwrap();
        assert_eq!(out, vec![e(0, 0); 12]);
        // no edges at all still works: the budget is zero
        let out = augment_random_er(&[], 4, 5, 10.0, &mut rng_from_seed(1)).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn synthetic_clamps_and_zero_radius_copies() {
        assert_eq!(perturb(e(0, 0), -3, 0, 5, 5), e(0, 0));
        assert_eq!(perturb(e(4, 4), 3, 3, 5, 5), e(4, 4));
        assert_eq!(perturb(e(2, 2), -1, 1, 5, 5), e(1, 3));

        let edges = [e(0, 1), e(2, 3), e(4, 0)];
        let out = augment_synthetic(&edges, 5, 4, 20.0, 0, &mut rng_from_seed(9)).unwrap();
        let set: HashSet<Edge> = edges.iter().copied().collect();
        assert_eq!(out.len(), 60);
        assert!(out.iter().all(|x| set.contains(x)));
    }

    fn unit(rows: &[&[f64]]) -> FeatureMatrix {
        FeatureMatrix::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn knn_identical_and_orthogonal() {
        let x = unit(&[&[1.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]);
        let nl = knn_neighbors(&x, 2, 0.0, false);
        assert_eq!(nl.of(0), &[(1, 1.0)]);
        assert_eq!(nl.of(1), &[(0, 1.0)]);
        assert!(nl.of(2).is_empty());

        let with_self = knn_neighbors(&x, 2, 0.0, true);
        assert_eq!(with_self.of(0), &[(0, 1.0), (1, 1.0)]);
        assert_eq!(with_self.of(2), &[(2, 1.0)]);
    }

    #[test]
    fn knn_threshold_applies_after_top_k() {
        let x = unit(&[&[1.0, 0.0], &[0.9, 0.1], &[0.8, 0.2], &[0.0, 1.0]]);
        let nl = knn_neighbors(&x, 1, -1.0, false);
        assert_eq!(nl.of(0).len(), 1);
        assert_eq!(nl.of(0)[0].0, 1);
        let nl = knn_neighbors(&x, 3, 0.99, false);
        assert!(nl.of(0).iter().all(|&(_, s)| s > 0.99));
    }

    #[test]
    fn knn_zero_rows_never_selected() {
        let x = unit(&[&[1.0, 0.0], &[0.0, 0.0], &[1.0, 0.1]]);
        let nl = knn_neighbors(&x, 5, 0.0, false);
        assert!(nl.of(1).is_empty());
        assert!(nl.of(0).iter().all(|&(j, _)| j != 1));
    }

    #[test]
    fn semantic_without_neighbours_falls_short() {
        let edges = [e(0, 0), e(1, 1)];
        let out =
            augment_semantic_knn(&edges, &NeighborLists::empty(2), &NeighborLists::empty(2), 3.0, 5)
                .unwrap();
        assert_eq!(out.edges, edges);
        assert_eq!(out.added, 0);
        assert_eq!(out.shortfall, 4);
    }

    #[test]
    fn semantic_hand_simulated() {
        // U = {0,1,2}, V = {0,1,2}; E = [(0,0), (1,1), (2,2)], phi = 2 → budget 3.
        // S_V(0) = [1, 2], S_V(1) = [0], S_V(2) = []
        // S_U(0) = [1],    S_U(1) = [2], S_U(2) = [0]
        // alpha = 2.
        //   edge (0,0): V-side (0,1) ok, (0,2) ok → c_U(0) = 2; U-side (1,0) ok → budget spent.
        let s_v = NeighborLists::from_lists(vec![vec![(1, 0.9), (2, 0.8)], vec![(0, 0.9)], vec![]]);
        let s_u = NeighborLists::from_lists(vec![vec![(1, 0.7)], vec![(2, 0.7)], vec![(0, 0.6)]]);
        let edges = [e(0, 0), e(1, 1), e(2, 2)];
        let out = augment_semantic_knn(&edges, &s_u, &s_v, 2.0, 2).unwrap();
        assert_eq!(&out.edges[3..], &[e(0, 1), e(0, 2), e(1, 0)]);
        assert_eq!(out.shortfall, 0);

        // alpha = 1 with budget 6:
        //   (0,0): (0,1) ok [cU0=1,cV1=1]; (0,2) blocked cU0; U-side (1,0) ok [cU1=1,cV0=1]
        //   (1,1): V-side (1,0) already in E'; U-side (2,1) blocked cV1
        //   (2,2): V-side none; U-side (0,2) blocked cU0
        let out = augment_semantic_knn(&edges, &s_u, &s_v, 3.0, 1).unwrap();
        assert_eq!(&out.edges[3..], &[e(0, 1), e(1, 0)]);
        assert_eq!(out.shortfall, 4);
    }

    #[test]
    fn policy_toml_roundtrip() {
        #[derive(Serialize, Deserialize, PartialEq, Debug)]
        struct Wrap {
            policies: Vec<Policy>,
        }
        let text = r#"
            [[policies]]
            kind = "none"
            [[policies]]
            kind = "degree_aware"
            [[policies]]
            kind = "semantic_knn"
            k = 3
        "#;
        let w: Wrap = toml::from_str(text).unwrap();
        assert_eq!(w.policies[1], Policy::degree_aware());
        assert_eq!(
            w.policies[2],
            Policy::SemanticKnn { k: 3, tau: DEFAULT_TAU, alpha: DEFAULT_ALPHA, include_self: false }
        );
        let again: Wrap = toml::from_str(&toml::to_string(&w).unwrap()).unwrap();
        assert_eq!(again, w);
        assert!(toml::from_str::<Wrap>("[[policies]]\nkind = \"simple\"\nbogus = 1\n").is_err());
        assert!(toml::from_str::<Wrap>("[[policies]]\nkind = \"simple\"\nradius = 1\n").is_err());
        assert!(toml::from_str::<Wrap>("[[policies]]\nkind = \"mystery\"\n").is_err());
    }

    fn arb_edges() -> impl Strategy<Value = (usize, usize, Vec<Edge>)> {
        (1usize..12, 1usize..12).prop_flat_map(|(n_u, n_v)| {
            prop::collection::vec((0..n_u as u32, 0..n_v as u32), 1..30)
                .prop_map(move |es| (n_u, n_v, es.into_iter().map(Edge::from).collect()))
        })
    }

    proptest! {
        #[test]
        fn budget_law_and_determinism(
            (n_u, n_v, edges) in arb_edges(),
            phi in 1.0f64..8.0,
            seed in any::<u64>(),
        ) {
            let want = budget(edges.len(), phi);
            for policy in [Policy::Simple, Policy::degree_aware(), Policy::RandomEr, Policy::synthetic()] {
                let a = apply(&policy, phi, &edges, n_u, n_v, None, &mut rng_from_seed(seed)).unwrap();
                prop_assert_eq!(a.added, want);
                prop_assert_eq!(&a.edges[..edges.len()], &edges[..]);
                prop_assert!(a.edges.iter().all(|x| (x.u as usize) < n_u && (x.v as usize) < n_v));
                let b = apply(&policy, phi, &edges, n_u, n_v, None, &mut rng_from_seed(seed)).unwrap();
                prop_assert_eq!(a, b);
            }
        }

        #[test]
        fn synthetic_stays_within_radius(
            (n_u, n_v, edges) in arb_edges(),
            radius in 0u32..4,
            seed in any::<u64>(),
        ) {
            let out = augment_synthetic(&edges, n_u, n_v, 4.0, radius, &mut rng_from_seed(seed)).unwrap();
            for x in &out[edges.len()..] {
                let near = edges.iter().any(|b| {
                    (i64::from(x.u) - i64::from(b.u)).abs() <= i64::from(radius)
                        && (i64::from(x.v) - i64::from(b.v)).abs() <= i64::from(radius)
                });
                prop_assert!(near);
            }
        }
    }
}
