//! Bipartite graph storage, ingestion and degree bookkeeping.
//!
//! Nodes of each mode are dense 0-based indices. Edges form an ordered
//! multiset: duplicates are legal and survive every transformation, which is
//! how copy-style augmentation reaches the training loss.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single `U -> V` edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub u: u32,
    pub v: u32,
}

impl Edge {
    pub const fn new(u: u32, v: u32) -> Self {
        Edge { u, v }
    }
}

impl From<(u32, u32)> for Edge {
    fn from((u, v): (u32, u32)) -> Self {
        Edge { u, v }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteGraph {
    n_u: usize,
    n_v: usize,
    edges: Vec<Edge>,
}

impl BipartiteGraph {
    pub fn new(n_u: usize, n_v: usize, edges: Vec<Edge>) -> Result<Self> {
        check_range(n_u, n_v, &edges)?;
        Ok(BipartiteGraph { n_u, n_v, edges })
    }

    /// Builds a graph that shares the node counts of `self`.
    pub fn with_edges(&self, edges: Vec<Edge>) -> Result<Self> {
        BipartiteGraph::new(self.n_u, self.n_v, edges)
    }

    pub fn n_u(&self) -> usize {
        self.n_u
    }

    pub fn n_v(&self) -> usize {
        self.n_v
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn into_edges(self) -> Vec<Edge> {
        self.edges
    }

    /// Distinct edges in order of first occurrence.
    pub fn distinct_edges(&self) -> Vec<Edge> {
        distinct_in_order(&self.edges)
    }

    /// A copy with duplicate edges collapsed, keeping first occurrences.
    pub fn deduplicated(&self) -> BipartiteGraph {
        BipartiteGraph {
            n_u: self.n_u,
            n_v: self.n_v,
            edges: self.distinct_edges(),
        }
    }

    pub fn edge_set(&self) -> HashSet<Edge> {
        self.edges.iter().copied().collect()
    }

    pub fn degrees(&self) -> DegreeTable {
        degrees(self.n_u, self.n_v, &self.edges)
    }
}

pub(crate) fn check_range(n_u: usize, n_v: usize, edges: &[Edge]) -> Result<()> {
    for (i, e) in edges.iter().enumerate() {
        if e.u as usize >= n_u {
            return Err(Error::Shape(format!(
                "edge {i}: u index {} out of range (n_u = {n_u})",
                e.u
            )));
        }
        if e.v as usize >= n_v {
            return Err(Error::Shape(format!(
                "edge {i}: v index {} out of range (n_v = {n_v})",
                e.v
            )));
        }
    }
    Ok(())
}

pub fn distinct_in_order(edges: &[Edge]) -> Vec<Edge> {
    let mut seen = HashSet::with_capacity(edges.len());
    edges.iter().copied().filter(|e| seen.insert(*e)).collect()
}

/// Multiplicity-counted degrees of both modes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeTable {
    pub deg_u: Vec<usize>,
    pub deg_v: Vec<usize>,
}

pub fn degrees(n_u: usize, n_v: usize, edges: &[Edge]) -> DegreeTable {
    let mut deg_u = vec![0; n_u];
    let mut deg_v = vec![0; n_v];
    for e in edges {
        deg_u[e.u as usize] += 1;
        deg_v[e.v as usize] += 1;
    }
    DegreeTable { deg_u, deg_v }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Delimiter {
    Comma,
    Tab,
}

impl Delimiter {
    fn detect(line: &str) -> Option<Self> {
        if line.contains(',') {
            Some(Delimiter::Comma)
        } else if line.contains('\t') {
            Some(Delimiter::Tab)
        } else {
            None
        }
    }

    fn as_char(self) -> char {
        match self {
            Delimiter::Comma => ',',
            Delimiter::Tab => '\t',
        }
    }
}

fn is_skippable(line: &str) -> bool {
    let t = line.trim();
    t.is_empty() || t.starts_with('#')
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn load_edges(path: impl AsRef<Path>, n_u: usize, n_v: usize) -> Result<BipartiteGraph> {
    let path = path.as_ref();
    parse_edges(&read_text(path)?, n_u, n_v, path)
}

/// Parses an edge list. `origin` only labels error messages.
pub fn parse_edges(text: &str, n_u: usize, n_v: usize, origin: &Path) -> Result<BipartiteGraph> {
    let mut delim = None;
    let mut edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        if is_skippable(raw) {
            continue;
        }
        let line = raw.trim();
        let d = match delim {
            Some(d) => d,
            None => {
                let d = Delimiter::detect(line).ok_or_else(|| {
                    Error::parse(origin, line_no, "no comma or tab delimiter")
                })?;
                delim = Some(d);
                d
            }
        };
        let mut fields = line.split(d.as_char());
        let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(Error::parse(origin, line_no, "expected exactly two fields"));
        };
        let u: u32 = a
            .trim()
            .parse()
            .map_err(|_| Error::parse(origin, line_no, format!("malformed u index {a:?}")))?;
        let v: u32 = b
            .trim()
            .parse()
            .map_err(|_| Error::parse(origin, line_no, format!("malformed v index {b:?}")))?;
        if u as usize >= n_u {
            return Err(Error::parse(origin, line_no, format!("u index {u} out of range")));
        }
        if v as usize >= n_v {
            return Err(Error::parse(origin, line_no, format!("v index {v} out of range")));
        }
        edges.push(Edge { u, v });
    }
    Ok(BipartiteGraph { n_u, n_v, edges })
}

pub fn edges_to_string(edges: &[Edge]) -> String {
    let mut out = String::with_capacity(edges.len() * 8);
    for e in edges {
        let _ = writeln!(out, "{},{}", e.u, e.v);
    }
    out
}

pub fn write_edges(path: impl AsRef<Path>, edges: &[Edge]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, edges_to_string(edges)).map_err(|e| Error::io(path, e))
}

/// Dense per-mode feature rows, rescaled to unit L2 norm.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    data: Vec<f64>,
    n_rows: usize,
    dim: usize,
    zero_rows: Vec<usize>,
}

impl FeatureMatrix {
    /// Normalizes each row. All-zero rows stay zero and are listed in
    /// [`FeatureMatrix::zero_rows`].
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_rows = rows.len();
        let dim = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n_rows * dim);
        let mut zero_rows = Vec::new();
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != dim {
                return Err(Error::Shape(format!(
                    "ragged feature row {i}: {} columns, expected {dim}",
                    row.len()
                )));
            }
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                zero_rows.push(i);
                data.extend(row);
            } else {
                data.extend(row.into_iter().map(|x| x / norm));
            }
        }
        if !zero_rows.is_empty() {
            log::warn!("{} all-zero feature rows left unnormalized", zero_rows.len());
        }
        Ok(FeatureMatrix {
            data,
            n_rows,
            dim,
            zero_rows,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn zero_rows(&self) -> &[usize] {
        &self.zero_rows
    }
}

pub fn load_features(path: impl AsRef<Path>, expected_rows: usize) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    parse_features(&read_text(path)?, expected_rows, path)
}

pub fn parse_features(text: &str, expected_rows: usize, origin: &Path) -> Result<FeatureMatrix> {
    let mut delim = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        if is_skippable(raw) {
            continue;
        }
        let line = raw.trim();
        if delim.is_none() {
            delim = Some(Delimiter::detect(line));
        }
        let cells: Vec<&str> = match delim.flatten() {
            Some(d) => line.split(d.as_char()).collect(),
            None => vec![line],
        };
        let row = cells
            .iter()
            .map(|c| {
                c.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| Error::parse(origin, line_no, format!("non-numeric cell {c:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::parse(
                    origin,
                    line_no,
                    format!("ragged row: {} columns, expected {}", row.len(), first.len()),
                ));
            }
        }
        rows.push(row);
    }
    if rows.len() != expected_rows {
        return Err(Error::Shape(format!(
            "row count {} \u{2260} {expected_rows}",
            rows.len()
        )));
    }
    FeatureMatrix::from_rows(rows)
}

/// External string identifiers of one mode, indexed by dense id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IdMap {
    ids: Vec<String>,
    index: HashMap<String, u32>,
}

impl IdMap {
    pub fn intern(&mut self, id: &str) -> u32 {
        if let Some(&i) = self.index.get(id) {
            return i;
        }
        let i = self.ids.len() as u32;
        self.ids.push(id.to_owned());
        self.index.insert(id.to_owned(), i);
        i
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<u32> {
        self.index.get(id).copied()
    }

    pub fn external(&self, dense: u32) -> Option<&str> {
        self.ids.get(dense as usize).map(String::as_str)
    }

    /// `external_id,dense_index` per line.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (i, id) in self.ids.iter().enumerate() {
            let _ = writeln!(out, "{id},{i}");
        }
        out
    }
}

pub struct LabeledGraph {
    pub graph: BipartiteGraph,
    pub u_ids: IdMap,
    pub v_ids: IdMap,
}

/// Reads an edge list keyed by external identifiers and assigns dense
/// indices in order of first appearance per mode.
pub fn ingest_labeled_edges(path: impl AsRef<Path>) -> Result<LabeledGraph> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut delim = None;
    let mut u_ids = IdMap::default();
    let mut v_ids = IdMap::default();
    let mut edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        if is_skippable(raw) {
            continue;
        }
        let line = raw.trim();
        if delim.is_none() {
            delim = Some(
                Delimiter::detect(line)
                    .ok_or_else(|| Error::parse(path, line_no, "no comma or tab delimiter"))?,
            );
        }
        let d = delim.unwrap();
        let mut fields = line.split(d.as_char());
        let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(Error::parse(path, line_no, "expected exactly two fields"));
        };
        let (a, b) = (a.trim(), b.trim());
        if a.is_empty() || b.is_empty() {
            return Err(Error::parse(path, line_no, "empty identifier"));
        }
        edges.push(Edge::new(u_ids.intern(a), v_ids.intern(b)));
    }
    let graph = BipartiteGraph::new(u_ids.len(), v_ids.len(), edges)?;
    Ok(LabeledGraph {
        graph,
        u_ids,
        v_ids,
    })
}
