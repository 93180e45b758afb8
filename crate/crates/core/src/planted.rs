//! Planted-partition bipartite fixtures with block-informative features.
//!
//! Both modes are cut into the same number of blocks; block `b` of `U`
//! links to block `b` of `V` with probability `p_in` and to every other
//! block with `p_out`. Each node's feature row is its block indicator plus
//! i.i.d. Gaussian noise.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::graph::{write_edges, BipartiteGraph, Edge, FeatureMatrix};
use crate::seed::stage_rng;

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedConfig {
    pub n_u: usize,
    pub n_v: usize,
    pub blocks: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub noise_sd: f64,
    pub seed: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        PlantedConfig {
            n_u: 200,
            n_v: 200,
            blocks: 8,
            p_in: 0.5,
            p_out: 0.0,
            noise_sd: 0.3,
            seed: 0,
        }
    }
}

pub struct PlantedData {
    pub graph: BipartiteGraph,
    pub u_features: Vec<Vec<f64>>,
    pub v_features: Vec<Vec<f64>>,
    pub block_u: Vec<usize>,
    pub block_v: Vec<usize>,
}

/// Contiguous block assignment: node `i` of `n` lands in `i * blocks / n`.
fn assign_blocks(n: usize, blocks: usize) -> Vec<usize> {
    (0..n).map(|i| i * blocks / n).collect()
}

fn features<R: Rng>(blocks_of: &[usize], blocks: usize, noise: &Normal<f64>, rng: &mut R) -> Vec<Vec<f64>> {
    blocks_of
        .iter()
        .map(|&b| {
            (0..blocks)
                .map(|j| f64::from(u8::from(j == b)) + noise.sample(rng))
                .collect()
        })
        .collect()
}

pub fn generate(cfg: &PlantedConfig) -> Result<PlantedData> {
    if cfg.blocks == 0 || cfg.blocks > cfg.n_u.min(cfg.n_v) {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= blocks <= min(n_u, n_v), got {}",
            cfg.blocks
        )));
    }
    for p in [cfg.p_in, cfg.p_out] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!("edge probability {p} outside [0, 1]")));
        }
    }
    let noise = Normal::new(0.0, cfg.noise_sd).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let block_u = assign_blocks(cfg.n_u, cfg.blocks);
    let block_v = assign_blocks(cfg.n_v, cfg.blocks);

    let mut rng = stage_rng(cfg.seed, "planted-edges");
    let mut edges = Vec::new();
    for u in 0..cfg.n_u {
        for v in 0..cfg.n_v {
            let p = if block_u[u] == block_v[v] { cfg.p_in } else { cfg.p_out };
            if rng.gen::<f64>() < p {
                edges.push(Edge::new(u as u32, v as u32));
            }
        }
    }
    let mut rng = stage_rng(cfg.seed, "planted-features");
    let u_features = features(&block_u, cfg.blocks, &noise, &mut rng);
    let v_features = features(&block_v, cfg.blocks, &noise, &mut rng);
    Ok(PlantedData {
        graph: BipartiteGraph::new(cfg.n_u, cfg.n_v, edges)?,
        u_features,
        v_features,
        block_u,
        block_v,
    })
}

impl PlantedData {
    pub fn u_matrix(&self) -> Result<FeatureMatrix> {
        FeatureMatrix::from_rows(self.u_features.clone())
    }

    pub fn v_matrix(&self) -> Result<FeatureMatrix> {
        FeatureMatrix::from_rows(self.v_features.clone())
    }

    /// Writes `edges.txt`, `u_features.csv` and `v_features.csv` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<PlantedFiles> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let files = PlantedFiles {
            edges: dir.join("edges.txt"),
            u_features: dir.join("u_features.csv"),
            v_features: dir.join("v_features.csv"),
        };
        write_edges(&files.edges, self.graph.edges())?;
        for (path, rows) in [(&files.u_features, &self.u_features), (&files.v_features, &self.v_features)] {
            let mut text = String::new();
            for row in rows {
                let cells: Vec<String> = row.iter().map(|x| x.to_string()).collect();
                let _ = writeln!(text, "{}", cells.join(","));
            }
            fs::write(path, text).map_err(|e| Error::io(path, e))?;
        }
        Ok(files)
    }
}

pub struct PlantedFiles {
    pub edges: PathBuf,
    pub u_features: PathBuf,
    pub v_features: PathBuf,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{load_edges, load_features};

    #[test]
    fn blocks_are_contiguous_and_balanced() {
        let b = assign_blocks(200, 8);
        assert_eq!(b[0], 0);
        assert_eq!(b[24], 0);
        assert_eq!(b[25], 1);
        assert_eq!(b[199], 7);
    }

    #[test]
    fn edges_respect_blocks() {
        let d = generate(&PlantedConfig::default()).unwrap();
        assert!(d.graph.edges().iter().all(|e| d.block_u[e.u as usize] == d.block_v[e.v as usize]));
        // 8 blocks of 25x25 at p_in 0.5: about 2500 edges
        let n = d.graph.num_edges() as f64;
        assert!((n - 2500.0).abs() < 5.0 * (5000.0f64 * 0.25).sqrt(), "{n}");
    }

    #[test]
    fn files_reload() {
        let cfg = PlantedConfig {
            n_u: 20,
            n_v: 16,
            blocks: 4,
            ..PlantedConfig::default()
        };
        let d = generate(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let f = d.write(dir.path()).unwrap();
        assert_eq!(load_edges(&f.edges, 20, 16).unwrap(), d.graph);
        let x = load_features(&f.u_features, 20).unwrap();
        assert_eq!(x, d.u_matrix().unwrap());
        assert_eq!(load_features(&f.v_features, 16).unwrap().dim(), 4);
    }
}
