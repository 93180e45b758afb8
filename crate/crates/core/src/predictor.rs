//! Shallow link scorer: per-node embeddings scored by a dot product or a
//! bilinear form, squashed by a sigmoid and trained with class-balanced
//! binary cross-entropy.

use std::collections::HashSet;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Edge;
use crate::seed::rng_from_seed;
use crate::sparsify::sample_non_edges;

/// Scores are clamped to this range before the sigmoid.
pub const SCORE_CLAMP: f64 = 30.0;
/// Weight of each class in the loss, independent of class sizes.
pub const CLASS_WEIGHT: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scorer {
    Dot,
    Bilinear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub scorer: Scorer,
    pub d_model: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub l2: f64,
    pub init_scale: f64,
    pub seed: u64,
    /// Draw a fresh negative set every epoch instead of cycling the split's.
    pub resample_negatives: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            scorer: Scorer::Dot,
            d_model: 32,
            learning_rate: 5.0,
            epochs: 200,
            batch_size: 512,
            l2: 1e-5,
            init_scale: 0.1,
            seed: 0,
            resample_negatives: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_owned()));
        if self.d_model == 0 {
            return bad("d_model must be >= 1");
        }
        if self.epochs == 0 {
            return bad("epochs must be >= 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return bad("l2 must be >= 0");
        }
        if !(self.init_scale >= 0.0 && self.init_scale.is_finite()) {
            return bad("init_scale must be >= 0");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    scorer: Scorer,
    dim: usize,
    n_u: usize,
    n_v: usize,
    emb_u: Vec<f64>,
    emb_v: Vec<f64>,
    bilinear: Option<Vec<f64>>,
}

/// Dense gradient buffers with the same layout as [`TrainedModel`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub emb_u: Vec<f64>,
    pub emb_v: Vec<f64>,
    pub bilinear: Option<Vec<f64>>,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl TrainedModel {
    pub fn init<R: Rng + ?Sized>(n_u: usize, n_v: usize, cfg: &TrainConfig, rng: &mut R) -> Result<Self> {
        cfg.validate()?;
        let d = cfg.d_model;
        let normal = Normal::new(0.0, cfg.init_scale)
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| normal.sample(rng)).collect() };
        let emb_u = draw(n_u * d);
        let emb_v = draw(n_v * d);
        let bilinear = (cfg.scorer == Scorer::Bilinear).then(|| {
            let mut w = vec![0.0; d * d];
            for i in 0..d {
                w[i * d + i] = 1.0;
            }
            w
        });
        Ok(TrainedModel {
            scorer: cfg.scorer,
            dim: d,
            n_u,
            n_v,
            emb_u,
            emb_v,
            bilinear,
        })
    }

    pub fn scorer(&self) -> Scorer {
        self.scorer
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_u(&self) -> usize {
        self.n_u
    }

    pub fn n_v(&self) -> usize {
        self.n_v
    }

    pub fn emb_u(&self) -> &[f64] {
        &self.emb_u
    }

    pub fn emb_v(&self) -> &[f64] {
        &self.emb_v
    }

    pub fn bilinear(&self) -> Option<&[f64]> {
        self.bilinear.as_deref()
    }

    /// Flat view of every parameter: `emb_u`, `emb_v`, then `W` if present.
    pub fn parameters(&self) -> Vec<f64> {
        let mut p = self.emb_u.clone();
        p.extend_from_slice(&self.emb_v);
        if let Some(w) = &self.bilinear {
            p.extend_from_slice(w);
        }
        p
    }

    pub fn parameter_mut(&mut self, index: usize) -> &mut f64 {
        let nu = self.emb_u.len();
        let nv = self.emb_v.len();
        if index < nu {
            &mut self.emb_u[index]
        } else if index < nu + nv {
            &mut self.emb_v[index - nu]
        } else {
            &mut self.bilinear.as_mut().expect("index past the embeddings")[index - nu - nv]
        }
    }

    pub fn is_finite(&self) -> bool {
        self.parameters().iter().all(|x| x.is_finite())
    }

    /// Multiplies every embedding entry by `c`.
    pub fn scale_embeddings(&mut self, c: f64) {
        self.emb_u.iter_mut().chain(self.emb_v.iter_mut()).for_each(|x| *x *= c);
    }

    fn row_u(&self, u: u32) -> &[f64] {
        let d = self.dim;
        &self.emb_u[u as usize * d..(u as usize + 1) * d]
    }

    fn row_v(&self, v: u32) -> &[f64] {
        let d = self.dim;
        &self.emb_v[v as usize * d..(v as usize + 1) * d]
    }

    /// Raw (unclamped) score `s(u, v)`.
    pub fn score(&self, e: Edge) -> f64 {
        let (hu, hv) = (self.row_u(e.u), self.row_v(e.v));
        match &self.bilinear {
            None => dot(hu, hv),
            Some(w) => {
                let d = self.dim;
                (0..d).map(|i| hu[i] * dot(&w[i * d..(i + 1) * d], hv)).sum()
            }
        }
    }

    fn check_pair(&self, e: Edge) -> Result<()> {
        if e.u as usize >= self.n_u || e.v as usize >= self.n_v {
            return Err(Error::Shape(format!(
                "pair ({}, {}) out of range for a {}x{} model",
                e.u, e.v, self.n_u, self.n_v
            )));
        }
        Ok(())
    }

    /// `σ(s(u, v))` per pair, in input order.
    pub fn predict(&self, pairs: &[Edge]) -> Result<Vec<f64>> {
        pairs
            .iter()
            .map(|&e| {
                self.check_pair(e)?;
                Ok(sigmoid(self.score(e).clamp(-SCORE_CLAMP, SCORE_CLAMP)))
            })
            .collect()
    }

    /// Adds `coef * ∂s/∂θ` for pair `e` into the buffers.
    fn accumulate_score_grad(&self, e: Edge, coef: f64, g: &mut Gradients) {
        let d = self.dim;
        let (hu, hv) = (self.row_u(e.u), self.row_v(e.v));
        let gu = &mut g.emb_u[e.u as usize * d..(e.u as usize + 1) * d];
        match &self.bilinear {
            None => {
                for (gi, &x) in gu.iter_mut().zip(hv) {
                    *gi += coef * x;
                }
                let gv = &mut g.emb_v[e.v as usize * d..(e.v as usize + 1) * d];
                for (gi, &x) in gv.iter_mut().zip(hu) {
                    *gi += coef * x;
                }
            }
            Some(w) => {
                for i in 0..d {
                    gu[i] += coef * dot(&w[i * d..(i + 1) * d], hv);
                }
                let gv = &mut g.emb_v[e.v as usize * d..(e.v as usize + 1) * d];
                for j in 0..d {
                    let col: f64 = (0..d).map(|i| hu[i] * w[i * d + j]).sum();
                    gv[j] += coef * col;
                }
                let gw = g.bilinear.as_mut().expect("bilinear buffer");
                for i in 0..d {
                    for j in 0..d {
                        gw[i * d + j] += coef * hu[i] * hv[j];
                    }
                }
            }
        }
    }

    fn zero_gradients(&self) -> Gradients {
        Gradients {
            emb_u: vec![0.0; self.emb_u.len()],
            emb_v: vec![0.0; self.emb_v.len()],
            bilinear: self.bilinear.as_ref().map(|w| vec![0.0; w.len()]),
        }
    }

    /// Accumulates the class-balanced loss gradient into `g`, returning the
    /// loss. Scores outside the clamp range pass the gradient straight
    /// through.
    fn accumulate_loss(&self, pos: &[Edge], neg: &[Edge], g: &mut Gradients) -> f64 {
        let c_pos = CLASS_WEIGHT / pos.len() as f64;
        let c_neg = CLASS_WEIGHT / neg.len() as f64;
        let mut loss = 0.0;
        for (pairs, label, c) in [(pos, 1.0, c_pos), (neg, 0.0, c_neg)] {
            for &e in pairs {
                let s = self.score(e).clamp(-SCORE_CLAMP, SCORE_CLAMP);
                loss += c * if label == 1.0 { softplus(-s) } else { softplus(s) };
                self.accumulate_score_grad(e, c * (sigmoid(s) - label), g);
            }
        }
        loss
    }
}

/// Class-balanced BCE over `pos` and `neg` with exact analytic gradients.
/// Repeated positives count once per occurrence.
pub fn loss_and_grad(model: &TrainedModel, pos: &[Edge], neg: &[Edge]) -> Result<(f64, Gradients)> {
    if pos.is_empty() {
        return Err(Error::Empty("no positive pairs"));
    }
    if neg.is_empty() {
        return Err(Error::Empty("no negative pairs"));
    }
    for &e in pos.iter().chain(neg) {
        model.check_pair(e)?;
    }
    let mut g = model.zero_gradients();
    let loss = model.accumulate_loss(pos, neg, &mut g);
    Ok((loss, g))
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: TrainedModel,
    /// Mean mini-batch loss per epoch.
    pub epoch_losses: Vec<f64>,
}

/// Applies one SGD step with L2 decay to the rows touched by the batch.
fn sgd_step(
    model: &mut TrainedModel,
    g: &mut Gradients,
    rows_u: &[u32],
    rows_v: &[u32],
    lr: f64,
    l2: f64,
) {
    let d = model.dim;
    for &u in rows_u {
        let r = u as usize * d..(u as usize + 1) * d;
        for (p, gi) in model.emb_u[r.clone()].iter_mut().zip(&mut g.emb_u[r]) {
            *p -= lr * (*gi + l2 * *p);
            *gi = 0.0;
        }
    }
    for &v in rows_v {
        let r = v as usize * d..(v as usize + 1) * d;
        for (p, gi) in model.emb_v[r.clone()].iter_mut().zip(&mut g.emb_v[r]) {
            *p -= lr * (*gi + l2 * *p);
            *gi = 0.0;
        }
    }
    if let (Some(w), Some(gw)) = (model.bilinear.as_mut(), g.bilinear.as_mut()) {
        for (p, gi) in w.iter_mut().zip(gw.iter_mut()) {
            *p -= lr * (*gi + l2 * *p);
            *gi = 0.0;
        }
    }
}

fn touched(pairs: impl Iterator<Item = Edge>) -> (Vec<u32>, Vec<u32>) {
    let mut us: Vec<u32> = Vec::new();
    let mut vs: Vec<u32> = Vec::new();
    for e in pairs {
        us.push(e.u);
        vs.push(e.v);
    }
    us.sort_unstable();
    us.dedup();
    vs.sort_unstable();
    vs.dedup();
    (us, vs)
}

/// Mini-batch SGD over the positive multiset.
///
/// Each epoch shuffles the positives into `ceil(|pos| / batch_size)`
/// batches and spreads the (shuffled) negatives evenly across them; when
/// there are fewer negatives than batches each batch takes one, cycling.
pub fn train(pos: &[Edge], neg: &[Edge], n_u: usize, n_v: usize, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if pos.is_empty() {
        return Err(Error::Empty("no training positives"));
    }
    if neg.is_empty() {
        return Err(Error::Empty("no training negatives"));
    }
    let mut rng = rng_from_seed(cfg.seed);
    let mut model = TrainedModel::init(n_u, n_v, cfg, &mut rng)?;
    for &e in pos.iter().chain(neg) {
        model.check_pair(e)?;
    }
    let pos_set: HashSet<Edge> = if cfg.resample_negatives {
        pos.iter().copied().collect()
    } else {
        HashSet::new()
    };

    let mut grads = model.zero_gradients();
    let mut pos_order: Vec<Edge> = pos.to_vec();
    let mut negs: Vec<Edge> = neg.to_vec();
    let n_batches = pos.len().div_ceil(cfg.batch_size);
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        pos_order.shuffle(&mut rng);
        if cfg.resample_negatives {
            negs = sample_non_edges(n_u, n_v, &pos_set, neg.len(), &mut rng)?;
        } else {
            negs.shuffle(&mut rng);
        }
        let mut total = 0.0;
        for b in 0..n_batches {
            let batch_pos = &pos_order[b * cfg.batch_size..((b + 1) * cfg.batch_size).min(pos.len())];
            let batch_neg = if negs.len() >= n_batches {
                &negs[b * negs.len() / n_batches..(b + 1) * negs.len() / n_batches]
            } else {
                let i = b % negs.len();
                &negs[i..i + 1]
            };
            let loss = model.accumulate_loss(batch_pos, batch_neg, &mut grads);
            let (rows_u, rows_v) = touched(batch_pos.iter().chain(batch_neg).copied());
            sgd_step(&mut model, &mut grads, &rows_u, &rows_v, cfg.learning_rate, cfg.l2);
            total += loss;
        }
        let mean = total / n_batches as f64;
        if !mean.is_finite() || !model.is_finite() {
            return Err(Error::Diverged { epoch, loss: mean });
        }
        epoch_losses.push(mean);
    }
    Ok(TrainOutcome { model, epoch_losses })
}

const CHECKPOINT_MAGIC: &[u8; 8] = b"AEGISCK\0";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Little-endian binary dump: magic, version, scorer tag, dims, then the
/// f64 parameters in [`TrainedModel::parameters`] order.
pub fn write_checkpoint(path: impl AsRef<Path>, model: &TrainedModel) -> Result<()> {
    let path = path.as_ref();
    let params = model.parameters();
    let mut buf = Vec::with_capacity(40 + params.len() * 8);
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    buf.push(match model.scorer {
        Scorer::Dot => 0,
        Scorer::Bilinear => 1,
    });
    buf.extend_from_slice(&(model.dim as u64).to_le_bytes());
    buf.extend_from_slice(&(model.n_u as u64).to_le_bytes());
    buf.extend_from_slice(&(model.n_v as u64).to_le_bytes());
    for p in params {
        buf.extend_from_slice(&p.to_le_bytes());
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&buf).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: impl AsRef<Path>) -> Result<TrainedModel> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut buf))
        .map_err(|e| Error::io(path, e))?;
    let corrupt = |what: &str| Error::Shape(format!("{}: {what}", path.display()));
    if buf.len() < 37 || &buf[..8] != CHECKPOINT_MAGIC {
        return Err(corrupt("not a checkpoint"));
    }
    let version = u32::from_le_bytes(buf[8..12].try_into().unwrap());
    if version != CHECKPOINT_VERSION {
        return Err(corrupt(&format!("unsupported checkpoint version {version}")));
    }
    let scorer = match buf[12] {
        0 => Scorer::Dot,
        1 => Scorer::Bilinear,
        t => return Err(corrupt(&format!("unknown scorer tag {t}"))),
    };
    let word = |i: usize| u64::from_le_bytes(buf[i..i + 8].try_into().unwrap()) as usize;
    let (dim, n_u, n_v) = (word(13), word(21), word(29));
    let n_w = if scorer == Scorer::Bilinear { dim * dim } else { 0 };
    let n_params = (n_u + n_v) * dim + n_w;
    let body = &buf[37..];
    if body.len() != n_params * 8 {
        return Err(corrupt("truncated parameter block"));
    }
    let mut vals = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    let emb_u: Vec<f64> = vals.by_ref().take(n_u * dim).collect();
    let emb_v: Vec<f64> = vals.by_ref().take(n_v * dim).collect();
    let bilinear = (scorer == Scorer::Bilinear).then(|| vals.collect());
    Ok(TrainedModel {
        scorer,
        dim,
        n_u,
        n_v,
        emb_u,
        emb_v,
        bilinear,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::auc_roc;

    fn cfg(scorer: Scorer) -> TrainConfig {
        TrainConfig {
            scorer,
            d_model: 4,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn zero_init_predicts_half() {
        let c = TrainConfig {
            init_scale: 0.0,
            ..cfg(Scorer::Dot)
        };
        let m = TrainedModel::init(3, 2, &c, &mut rng_from_seed(0)).unwrap();
        let p = m.predict(&[Edge::new(0, 0), Edge::new(2, 1)]).unwrap();
        assert_eq!(p, vec![0.5, 0.5]);
        let (loss, _) = loss_and_grad(&m, &[Edge::new(0, 0)], &[Edge::new(1, 1)]).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn init_shapes_and_determinism() {
        let c = TrainConfig {
            d_model: 16,
            ..TrainConfig::default()
        };
        let a = TrainedModel::init(10, 7, &c, &mut rng_from_seed(5)).unwrap();
        let b = TrainedModel::init(10, 7, &c, &mut rng_from_seed(5)).unwrap();
        assert_eq!(a.emb_u().len(), 160);
        assert_eq!(a, b);
        let bl = TrainedModel::init(2, 2, &cfg(Scorer::Bilinear), &mut rng_from_seed(0)).unwrap();
        let w = bl.bilinear().unwrap();
        assert_eq!(w, &[1., 0., 0., 0., 0., 1., 0., 0., 0., 0., 1., 0., 0., 0., 0., 1.]);
    }

    #[test]
    fn sigmoid_of_ln3() {
        let c = TrainConfig {
            d_model: 1,
            init_scale: 0.0,
            ..TrainConfig::default()
        };
        let mut m = TrainedModel::init(1, 1, &c, &mut rng_from_seed(0)).unwrap();
        *m.parameter_mut(0) = 3f64.ln();
        *m.parameter_mut(1) = 1.0;
        let p = m.predict(&[Edge::new(0, 0)]).unwrap()[0];
        assert!((p - 0.75).abs() < 1e-15);
    }

    #[test]
    fn single_positive_gradient_closed_form() {
        let m = TrainedModel::init(2, 2, &cfg(Scorer::Dot), &mut rng_from_seed(3)).unwrap();
        let e = Edge::new(0, 1);
        let (_, g) = loss_and_grad(&m, &[e], &[Edge::new(1, 0)]).unwrap();
        let s = m.score(e);
        let d = m.dim();
        for k in 0..d {
            let want = CLASS_WEIGHT * (sigmoid(s) - 1.0) * m.emb_v()[d + k];
            assert!((g.emb_u[k] - want).abs() < 1e-15);
        }
    }

    #[test]
    fn extreme_scores_stay_inside_unit_interval() {
        let mut m = TrainedModel::init(1, 1, &cfg(Scorer::Dot), &mut rng_from_seed(0)).unwrap();
        m.scale_embeddings(1e6);
        let p = m.predict(&[Edge::new(0, 0)]).unwrap()[0];
        assert!(p > 0.0 && p < 1.0);
        let (loss, g) = loss_and_grad(&m, &[Edge::new(0, 0)], &[Edge::new(0, 0)]).unwrap();
        assert!(loss.is_finite());
        assert!(g.emb_u.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn empty_class_rejected() {
        let m = TrainedModel::init(2, 2, &cfg(Scorer::Dot), &mut rng_from_seed(0)).unwrap();
        assert!(loss_and_grad(&m, &[], &[Edge::new(0, 0)]).is_err());
        assert!(loss_and_grad(&m, &[Edge::new(0, 0)], &[]).is_err());
        assert!(m.predict(&[Edge::new(2, 0)]).is_err());
    }

    #[test]
    fn class_weights_do_not_depend_on_counts() {
        // Loss over one negative equals loss over that negative repeated.
        let m = TrainedModel::init(3, 3, &cfg(Scorer::Dot), &mut rng_from_seed(8)).unwrap();
        let pos = [Edge::new(0, 0)];
        let neg = [Edge::new(1, 2)];
        let (a, _) = loss_and_grad(&m, &pos, &neg).unwrap();
        let (b, _) = loss_and_grad(&m, &pos, &[neg[0]; 7]).unwrap();
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn epochs_zero_rejected() {
        let c = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        let err = train(&[Edge::new(0, 0)], &[Edge::new(0, 1)], 1, 2, &c).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)));
    }

    #[test]
    fn checkpoint_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        for scorer in [Scorer::Dot, Scorer::Bilinear] {
            let m = TrainedModel::init(5, 3, &cfg(scorer), &mut rng_from_seed(1)).unwrap();
            let p = dir.path().join("m.ckpt");
            write_checkpoint(&p, &m).unwrap();
            assert_eq!(read_checkpoint(&p).unwrap(), m);
        }
        let bad = dir.path().join("bad.ckpt");
        fs::write(&bad, b"nope").unwrap();
        assert!(read_checkpoint(&bad).is_err());
    }

    #[test]
    fn scaling_preserves_ranking() {
        let m = TrainedModel::init(6, 6, &cfg(Scorer::Dot), &mut rng_from_seed(2)).unwrap();
        let pairs: Vec<Edge> = (0..6).flat_map(|u| (0..6).map(move |v| Edge::new(u, v))).collect();
        let rank = |m: &TrainedModel| {
            let mut idx: Vec<usize> = (0..pairs.len()).collect();
            let s: Vec<f64> = pairs.iter().map(|&e| m.score(e)).collect();
            idx.sort_by(|&a, &b| s[a].total_cmp(&s[b]).then(a.cmp(&b)));
            idx
        };
        let mut scaled = m.clone();
        scaled.scale_embeddings(3.0);
        for &e in &pairs {
            assert!((scaled.score(e) - 9.0 * m.score(e)).abs() < 1e-12);
        }
        assert_eq!(rank(&m), rank(&scaled));
    }

    /// Two blocks of 10x10 nodes; positives are every within-block pair,
    /// negatives every cross-block pair.
    fn two_blocks() -> (Vec<Edge>, Vec<Edge>) {
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for u in 0..20u32 {
            for v in 0..20u32 {
                if (u < 10) == (v < 10) {
                    pos.push(Edge::new(u, v));
                } else {
                    neg.push(Edge::new(u, v));
                }
            }
        }
        (pos, neg)
    }

    #[test]
    fn planted_blocks_are_learned() {
        let (pos, neg) = two_blocks();
        for scorer in [Scorer::Dot, Scorer::Bilinear] {
            let c = TrainConfig {
                scorer,
                seed: 4,
                ..TrainConfig::default()
            };
            let out = train(&pos, &neg, 20, 20, &c).unwrap();
            let mut probs = out.model.predict(&pos).unwrap();
            probs.extend(out.model.predict(&neg).unwrap());
            let labels: Vec<bool> = (0..probs.len()).map(|i| i < pos.len()).collect();
            let auc = auc_roc(&probs, &labels).unwrap();
            assert!(auc > 0.95, "{scorer:?}: auc {auc}");

            // smoothed training loss never rises
            let l = &out.epoch_losses;
            let window: Vec<f64> = l.windows(10).map(|w| w.iter().sum::<f64>() / 10.0).collect();
            for pair in window.windows(2) {
                assert!(pair[1] <= pair[0] + 1e-12, "{scorer:?}: {:?}", pair);
            }
        }
    }

    #[test]
    fn heavy_duplication_keeps_loss_finite() {
        let (pos, neg) = two_blocks();
        let dup: Vec<Edge> = pos.iter().flat_map(|&e| std::iter::repeat(e).take(100)).collect();
        let c = TrainConfig {
            epochs: 5,
            seed: 1,
            ..TrainConfig::default()
        };
        let out = train(&dup, &neg, 20, 20, &c).unwrap();
        assert!(out.epoch_losses.iter().all(|l| l.is_finite()));
        assert!(out.model.is_finite());
        let again = train(&dup, &neg, 20, 20, &c).unwrap();
        assert_eq!(again.model, out.model);
    }

    #[test]
    fn resampled_negatives_train() {
        let (pos, neg) = two_blocks();
        let c = TrainConfig {
            epochs: 20,
            resample_negatives: true,
            ..TrainConfig::default()
        };
        let out = train(&pos, &neg, 20, 20, &c).unwrap();
        assert_eq!(out.epoch_losses.len(), 20);
    }
}
