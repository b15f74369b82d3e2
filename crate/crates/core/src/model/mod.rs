//! The Beta embedding model.
//!
//! Every entity owns `2n` raw parameters mapped through the positivity map
//! to `n` Beta distributions. Queries are embedded by executing their
//! computation graph bottom-up:
//!
//! - projection: an MLP over the input parameters and a learned relation
//!   vector (or one MLP per relation), followed by the positivity map
//! - intersection: per-dimension convex combination of the inputs' shape
//!   parameters, weighted by a softmax over attention logits
//! - negation: reciprocal of both shape parameters
//!
//! The distance from an entity to a query is `Σ_d KL(entity_d ‖ query_d)`.
//!
//! Embeddings are handled internally as flat `[α₁..αₙ, β₁..βₙ]` vectors.
//! Each forward pass records a [`Trace`] that the backward pass replays.

mod checkpoint;
mod distance;
pub(crate) mod nn;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::beta::BetaVector;
use crate::error::{Error, Result};
use crate::kg::EntityId;
use crate::query::{to_dm, to_dnf, QueryGraph};

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, OptimizerState};
pub(crate) use distance::{EntityStats, QueryStats};
pub use distance::Scorer;
pub use nn::{Mlp, PARAM_CAP};
use nn::{positive, positive_inverse, MlpCache};

/// How unions are executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnionMode {
    /// Rewrite to disjunctive normal form; score is the minimum distance over disjuncts.
    Dnf,
    /// Rewrite unions as `¬(¬a ∧ ¬b)` and embed one query.
    Dm,
}

impl fmt::Display for UnionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UnionMode::Dnf => "dnf",
            UnionMode::Dm => "dm",
        })
    }
}

impl FromStr for UnionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dnf" => Ok(UnionMode::Dnf),
            "dm" => Ok(UnionMode::Dm),
            _ => Err(Error::Config(format!("union mode must be dnf or dm, got {s:?}"))),
        }
    }
}

/// Granularity of intersection attention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttentionMode {
    /// One logit per input embedding.
    Global,
    /// One logit per input and Beta dimension.
    PerDim,
}

impl FromStr for AttentionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "global" => Ok(AttentionMode::Global),
            "per-dim" => Ok(AttentionMode::PerDim),
            _ => Err(Error::Config(format!("attention must be global or per-dim, got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProjectionMode {
    /// One network over `[embedding, relation vector]`.
    Shared,
    /// A separate network per relation.
    PerRelation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Beta distributions per embedding.
    pub dim: usize,
    /// Width of the projection network's hidden layers.
    pub hidden_dim: usize,
    /// Linear layers in the projection network.
    pub num_layers: usize,
    /// Width of the attention network's hidden layer.
    pub attention_hidden: usize,
    pub attention: AttentionMode,
    pub projection: ProjectionMode,
    /// Standard deviation of the noise added to raw entity parameters at init.
    pub init_std: f64,
}

impl ModelConfig {
    /// Small model for CPU experiments.
    pub fn desk() -> Self {
        Self {
            dim: 16,
            hidden_dim: 64,
            num_layers: 3,
            attention_hidden: 32,
            attention: AttentionMode::Global,
            projection: ProjectionMode::Shared,
            init_std: 0.1,
        }
    }

    /// Full-size settings: 400 Beta dimensions, three 512-wide layers.
    pub fn full_scale() -> Self {
        Self { dim: 400, hidden_dim: 512, attention_hidden: 800, ..Self::desk() }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dim", self.dim),
            ("hidden_dim", self.hidden_dim),
            ("num_layers", self.num_layers),
            ("attention_hidden", self.attention_hidden),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        if !(self.init_std >= 0.0 && self.init_std.is_finite()) {
            return Err(Error::Config(format!("init_std must be finite and >= 0, got {}", self.init_std)));
        }
        Ok(())
    }
}

const RELATION_INIT_STD: f64 = 1.0;

/// Model parameters. Entity and relation tables are row-major with `2n` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaModel {
    pub(crate) config: ModelConfig,
    pub(crate) num_entities: usize,
    pub(crate) num_relations: usize,
    pub(crate) entity: Vec<f64>,
    pub(crate) relation: Vec<f64>,
    pub(crate) projection: Vec<Mlp>,
    pub(crate) attention: Mlp,
}

/// The parameter groups, in the order used by flat parameter access.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ParamClass {
    Entity,
    Relation,
    Projection,
    Attention,
}

impl ParamClass {
    pub const ALL: [ParamClass; 4] = [ParamClass::Entity, ParamClass::Relation, ParamClass::Projection, ParamClass::Attention];
}

/// Embedding of a query under one union mode.
#[derive(Debug, Clone, PartialEq)]
pub enum QueryEmbedding {
    Single(BetaVector),
    Disjuncts(Vec<BetaVector>),
}

impl QueryEmbedding {
    pub fn parts(&self) -> &[BetaVector] {
        match self {
            QueryEmbedding::Single(e) => std::slice::from_ref(e),
            QueryEmbedding::Disjuncts(es) => es,
        }
    }
}

/// Record of one forward pass, replayed by [`BetaModel::backward`].
#[derive(Debug, Clone)]
pub(crate) enum Trace {
    Anchor { entity: u32, d_pos: Vec<f64> },
    Projection { relation: u32, child: Box<Trace>, cache: MlpCache, d_pos: Vec<f64> },
    Intersection { children: Vec<Trace>, step: IntersectStep },
    Negation { child: Box<Trace>, out: Vec<f64> },
}

/// Intersection internals kept for the backward pass. Inputs are stored in
/// canonical order; `order[i]` is the original position of input `i`.
#[derive(Debug, Clone)]
pub(crate) struct IntersectStep {
    order: Vec<usize>,
    inputs: Vec<Vec<f64>>,
    /// `weights[i][c]`, `c` ranging over logit columns (1 or n).
    weights: Vec<Vec<f64>>,
    caches: Vec<MlpCache>,
}

/// Parameter gradients. Entity rows are stored sparsely.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub(crate) entity: BTreeMap<u32, Vec<f64>>,
    pub(crate) relation: Vec<f64>,
    pub(crate) projection: Vec<Mlp>,
    pub(crate) attention: Mlp,
}

impl Gradients {
    pub fn zeros(model: &BetaModel) -> Self {
        Self {
            entity: BTreeMap::new(),
            relation: vec![0.0; model.relation.len()],
            projection: model.projection.iter().map(Mlp::zeros_like).collect(),
            attention: model.attention.zeros_like(),
        }
    }

    pub fn add(&mut self, other: &Gradients) {
        for (&v, row) in &other.entity {
            let dst = self.entity.entry(v).or_insert_with(|| vec![0.0; row.len()]);
            dst.iter_mut().zip(row).for_each(|(a, b)| *a += b);
        }
        self.relation.iter_mut().zip(&other.relation).for_each(|(a, b)| *a += b);
        for (a, b) in self.projection.iter_mut().zip(&other.projection) {
            a.add_assign(b);
        }
        self.attention.add_assign(&other.attention);
    }

    pub fn scale(&mut self, s: f64) {
        self.entity.values_mut().flatten().for_each(|x| *x *= s);
        self.relation.iter_mut().for_each(|x| *x *= s);
        for m in self.projection.iter_mut().chain(std::iter::once(&mut self.attention)) {
            m.tensors_mut().flatten().for_each(|x| *x *= s);
        }
    }

    pub fn entity_row(&self, v: EntityId) -> Option<&[f64]> {
        self.entity.get(&v.0).map(Vec::as_slice)
    }

    /// Gradient of parameter `index` within `class`, in the same flat order
    /// as [`BetaModel::param`].
    pub fn get(&self, class: ParamClass, index: usize) -> f64 {
        match class {
            ParamClass::Entity => {
                let width = self.entity.values().next().map_or(1, Vec::len);
                self.entity.get(&((index / width) as u32)).map_or(0.0, |row| row[index % width])
            }
            ParamClass::Relation => self.relation[index],
            ParamClass::Projection => *flat_nth(self.projection.iter().flat_map(Mlp::tensors), index),
            ParamClass::Attention => *flat_nth(self.attention.tensors(), index),
        }
    }

    /// Global L2 norm over all classes.
    pub fn norm(&self) -> f64 {
        let dense = self.relation.iter().chain(self.projection.iter().chain([&self.attention]).flat_map(Mlp::tensors).flatten());
        self.entity.values().flatten().chain(dense).map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Largest absolute entry; used by the divergence guard.
    pub fn max_abs(&self) -> f64 {
        let dense = self.relation.iter().chain(self.projection.iter().chain([&self.attention]).flat_map(Mlp::tensors).flatten());
        self.entity.values().flatten().chain(dense).fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.max_abs().is_finite()
    }
}

fn flat_nth<'a>(tensors: impl Iterator<Item = &'a Vec<f64>>, mut index: usize) -> &'a f64 {
    for t in tensors {
        if index < t.len() {
            return &t[index];
        }
        index -= t.len();
    }
    panic!("parameter index out of range")
}

fn flat_nth_mut<'a>(tensors: impl Iterator<Item = &'a mut Vec<f64>>, mut index: usize) -> &'a mut f64 {
    for t in tensors {
        if index < t.len() {
            return &mut t[index];
        }
        index -= t.len();
    }
    panic!("parameter index out of range")
}

/// Lexicographic total order on parameter vectors.
fn cmp_params(a: &[f64], b: &[f64]) -> Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
}

impl BetaModel {
    /// Fresh model: every entity starts near Beta(1, 1) in each dimension.
    pub fn new(config: ModelConfig, num_entities: usize, num_relations: usize, seed: u64) -> Result<Self> {
        config.validate()?;
        let n = config.dim;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let center = positive_inverse(1.0);
        let noise = Normal::new(0.0, config.init_std).map_err(|e| Error::Config(e.to_string()))?;
        let entity = (0..num_entities * 2 * n).map(|_| center + noise.sample(&mut rng)).collect();
        let rel_noise = Normal::new(0.0, RELATION_INIT_STD).expect("valid std");
        let (relation, projection) = match config.projection {
            ProjectionMode::Shared => {
                let relation = (0..num_relations * 2 * n).map(|_| rel_noise.sample(&mut rng)).collect();
                (relation, vec![Mlp::new(&Self::projection_sizes(&config, 4 * n), &mut rng)])
            }
            ProjectionMode::PerRelation => {
                let nets = (0..num_relations).map(|_| Mlp::new(&Self::projection_sizes(&config, 2 * n), &mut rng)).collect();
                (Vec::new(), nets)
            }
        };
        let logits = match config.attention {
            AttentionMode::Global => 1,
            AttentionMode::PerDim => n,
        };
        let attention = Mlp::new(&[2 * n, config.attention_hidden, logits], &mut rng);
        Ok(Self { config, num_entities, num_relations, entity, relation, projection, attention })
    }

    fn projection_sizes(config: &ModelConfig, input: usize) -> Vec<usize> {
        let mut sizes = vec![input];
        sizes.extend(std::iter::repeat(config.hidden_dim).take(config.num_layers - 1));
        sizes.push(2 * config.dim);
        sizes
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn num_entities(&self) -> usize {
        self.num_entities
    }

    pub fn num_relations(&self) -> usize {
        self.num_relations
    }

    pub fn dim(&self) -> usize {
        self.config.dim
    }

    pub fn param_count(&self, class: ParamClass) -> usize {
        match class {
            ParamClass::Entity => self.entity.len(),
            ParamClass::Relation => self.relation.len(),
            ParamClass::Projection => self.projection.iter().map(Mlp::num_params).sum(),
            ParamClass::Attention => self.attention.num_params(),
        }
    }

    /// Raw (pre-positivity-map) parameter `index` of `class`.
    pub fn param(&self, class: ParamClass, index: usize) -> f64 {
        match class {
            ParamClass::Entity => self.entity[index],
            ParamClass::Relation => self.relation[index],
            ParamClass::Projection => *flat_nth(self.projection.iter().flat_map(Mlp::tensors), index),
            ParamClass::Attention => *flat_nth(self.attention.tensors(), index),
        }
    }

    pub fn set_param(&mut self, class: ParamClass, index: usize, value: f64) {
        let slot = match class {
            ParamClass::Entity => &mut self.entity[index],
            ParamClass::Relation => &mut self.relation[index],
            ParamClass::Projection => flat_nth_mut(self.projection.iter_mut().flat_map(Mlp::tensors_mut), index),
            ParamClass::Attention => flat_nth_mut(self.attention.tensors_mut(), index),
        };
        *slot = value;
    }

    /// All parameter tensors in a fixed order; the optimizer and checkpoints
    /// rely on it.
    pub(crate) fn tensors(&self) -> Vec<&Vec<f64>> {
        let mut out = vec![&self.entity, &self.relation];
        out.extend(self.projection.iter().flat_map(Mlp::tensors));
        out.extend(self.attention.tensors());
        out
    }

    pub(crate) fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut out = vec![&mut self.entity, &mut self.relation];
        out.extend(self.projection.iter_mut().flat_map(Mlp::tensors_mut));
        out.extend(self.attention.tensors_mut());
        out
    }

    fn check_entity(&self, v: EntityId) -> Result<()> {
        if v.index() < self.num_entities {
            Ok(())
        } else {
            Err(Error::UnknownEntity(v.0))
        }
    }

    fn check_relation(&self, r: u32) -> Result<()> {
        if (r as usize) < self.num_relations {
            Ok(())
        } else {
            Err(Error::UnknownRelation(r))
        }
    }

    fn check_len(&self, e: &BetaVector) -> Result<()> {
        if e.dims() == self.dim() {
            Ok(())
        } else {
            Err(Error::Shape(format!("embedding has {} dimensions, model has {}", e.dims(), self.dim())))
        }
    }

    /// Positive parameters of entity `v` and their derivative w.r.t. the raw ones.
    pub(crate) fn entity_flat(&self, v: u32) -> (Vec<f64>, Vec<f64>) {
        let w = 2 * self.dim();
        self.entity[v as usize * w..(v as usize + 1) * w].iter().map(|&u| positive(u)).unzip()
    }

    pub fn embed_entity(&self, v: EntityId) -> Result<BetaVector> {
        self.check_entity(v)?;
        Ok(BetaVector::from_flat(&self.entity_flat(v.0).0))
    }

    fn project_flat(&self, x: &[f64], r: u32) -> (Vec<f64>, MlpCache, Vec<f64>) {
        let w = 2 * self.dim();
        let (net, input) = match self.config.projection {
            ProjectionMode::Shared => {
                let mut input = x.to_vec();
                input.extend_from_slice(&self.relation[r as usize * w..(r as usize + 1) * w]);
                (&self.projection[0], input)
            }
            ProjectionMode::PerRelation => (&self.projection[r as usize], x.to_vec()),
        };
        let (raw, cache) = net.forward(input);
        let (out, d_pos) = raw.into_iter().map(positive).unzip();
        (out, cache, d_pos)
    }

    pub fn project(&self, e: &BetaVector, r: u32) -> Result<BetaVector> {
        self.check_len(e)?;
        self.check_relation(r)?;
        Ok(BetaVector::from_flat(&self.project_flat(&e.to_flat(), r).0))
    }

    fn intersect_flat(&self, xs: Vec<Vec<f64>>) -> (Vec<f64>, IntersectStep) {
        let n = self.dim();
        let mut order: Vec<usize> = (0..xs.len()).collect();
        order.sort_by(|&a, &b| cmp_params(&xs[a], &xs[b]));
        let mut slots: Vec<Option<Vec<f64>>> = xs.into_iter().map(Some).collect();
        let inputs: Vec<Vec<f64>> = order.iter().map(|&i| slots[i].take().expect("permutation")).collect();
        let (logits, caches): (Vec<Vec<f64>>, Vec<MlpCache>) =
            inputs.iter().map(|x| self.attention.forward(x.clone())).unzip();
        let cols = logits[0].len();
        let mut weights = vec![vec![0.0; cols]; inputs.len()];
        for c in 0..cols {
            let max = logits.iter().map(|l| l[c]).fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = logits.iter().map(|l| (l[c] - max).exp()).collect();
            let total: f64 = exps.iter().sum();
            for (w, e) in weights.iter_mut().zip(&exps) {
                w[c] = e / total;
            }
        }
        let col = |d: usize| if cols == 1 { 0 } else { d % n };
        let out = (0..2 * n).map(|d| inputs.iter().zip(&weights).map(|(x, w)| w[col(d)] * x[d]).sum()).collect();
        (out, IntersectStep { order, inputs, weights, caches })
    }

    pub fn intersect(&self, inputs: &[BetaVector]) -> Result<BetaVector> {
        if inputs.len() < 2 {
            return Err(Error::Shape(format!("intersection needs at least 2 inputs, got {}", inputs.len())));
        }
        for e in inputs {
            self.check_len(e)?;
        }
        Ok(BetaVector::from_flat(&self.intersect_flat(inputs.iter().map(BetaVector::to_flat).collect()).0))
    }

    /// Softmax attention weights of an intersection, `[input][column]`, in
    /// input order. One column for global attention, `n` for per-dimension.
    pub fn attention_weights(&self, inputs: &[BetaVector]) -> Result<Vec<Vec<f64>>> {
        if inputs.len() < 2 {
            return Err(Error::Shape(format!("intersection needs at least 2 inputs, got {}", inputs.len())));
        }
        let (_, step) = self.intersect_flat(inputs.iter().map(BetaVector::to_flat).collect());
        let mut out = vec![Vec::new(); inputs.len()];
        for (w, &orig) in step.weights.into_iter().zip(&step.order) {
            out[orig] = w;
        }
        Ok(out)
    }

    pub fn negate(&self, e: &BetaVector) -> BetaVector {
        negate(e)
    }

    /// Embeds a union-free query, recording a trace for [`Self::backward`].
    pub(crate) fn forward(&self, q: &QueryGraph) -> Result<(Vec<f64>, Trace)> {
        q.validate(self.num_entities, self.num_relations)?;
        self.forward_unchecked(q)
    }

    fn forward_unchecked(&self, q: &QueryGraph) -> Result<(Vec<f64>, Trace)> {
        Ok(match q {
            QueryGraph::Anchor(v) => {
                let (out, d_pos) = self.entity_flat(v.0);
                (out, Trace::Anchor { entity: v.0, d_pos })
            }
            QueryGraph::Projection(r, c) => {
                let (x, child) = self.forward_unchecked(c)?;
                let (out, cache, d_pos) = self.project_flat(&x, r.0);
                (out, Trace::Projection { relation: r.0, child: Box::new(child), cache, d_pos })
            }
            QueryGraph::Negation(c) => {
                let (x, child) = self.forward_unchecked(c)?;
                let out: Vec<f64> = x.iter().map(|v| 1.0 / v).collect();
                (out.clone(), Trace::Negation { child: Box::new(child), out })
            }
            QueryGraph::Intersection(cs) => {
                let (xs, children): (Vec<_>, Vec<_>) =
                    cs.iter().map(|c| self.forward_unchecked(c)).collect::<Result<Vec<_>>>()?.into_iter().unzip();
                let (out, step) = self.intersect_flat(xs);
                (out, Trace::Intersection { children, step })
            }
            QueryGraph::Union(_) => {
                return Err(Error::Unsupported(format!("union must be rewritten before embedding: {q}")));
            }
        })
    }

    /// Accumulates `∂L/∂θ` given `∂L/∂(output of trace)`.
    pub(crate) fn backward(&self, trace: &Trace, d_out: Vec<f64>, grads: &mut Gradients) {
        match trace {
            Trace::Anchor { entity, d_pos } => {
                let row = grads.entity.entry(*entity).or_insert_with(|| vec![0.0; d_pos.len()]);
                for ((g, d), p) in row.iter_mut().zip(&d_out).zip(d_pos) {
                    *g += d * p;
                }
            }
            Trace::Projection { relation, child, cache, d_pos } => {
                let d_raw: Vec<f64> = d_out.iter().zip(d_pos).map(|(d, p)| d * p).collect();
                let w = 2 * self.dim();
                let d_x = match self.config.projection {
                    ProjectionMode::Shared => {
                        let mut d_in = self.projection[0].backward(cache, d_raw, &mut grads.projection[0]);
                        let r = *relation as usize;
                        for (g, d) in grads.relation[r * w..(r + 1) * w].iter_mut().zip(&d_in[w..]) {
                            *g += d;
                        }
                        d_in.truncate(w);
                        d_in
                    }
                    ProjectionMode::PerRelation => {
                        let r = *relation as usize;
                        self.projection[r].backward(cache, d_raw, &mut grads.projection[r])
                    }
                };
                self.backward(child, d_x, grads);
            }
            Trace::Negation { child, out } => {
                let d_x = d_out.iter().zip(out).map(|(d, y)| -d * y * y).collect();
                self.backward(child, d_x, grads);
            }
            Trace::Intersection { children, step } => {
                let n = self.dim();
                let cols = step.weights[0].len();
                let col = |d: usize| if cols == 1 { 0 } else { d % n };
                let m = step.inputs.len();
                let mut d_w = vec![vec![0.0; cols]; m];
                let mut d_xs: Vec<Vec<f64>> = vec![vec![0.0; 2 * n]; m];
                for i in 0..m {
                    for d in 0..2 * n {
                        d_w[i][col(d)] += d_out[d] * step.inputs[i][d];
                        d_xs[i][d] = step.weights[i][col(d)] * d_out[d];
                    }
                }
                for c in 0..cols {
                    let mean: f64 = (0..m).map(|j| step.weights[j][c] * d_w[j][c]).sum();
                    for i in 0..m {
                        d_w[i][c] = step.weights[i][c] * (d_w[i][c] - mean);
                    }
                }
                for i in 0..m {
                    let d_logit = std::mem::take(&mut d_w[i]);
                    let d_att = self.attention.backward(&step.caches[i], d_logit, &mut grads.attention);
                    d_xs[i].iter_mut().zip(d_att).for_each(|(a, b)| *a += b);
                }
                let mut by_child: Vec<Option<Vec<f64>>> = vec![None; m];
                for (d_x, &orig) in d_xs.into_iter().zip(&step.order) {
                    by_child[orig] = Some(d_x);
                }
                for (child, d_x) in children.iter().zip(by_child) {
                    self.backward(child, d_x.expect("permutation"), grads);
                }
            }
        }
    }

    /// Embeds `q`. In DNF mode each disjunct is embedded separately; in DM
    /// mode unions are rewritten with De Morgan's law.
    pub fn embed_query(&self, q: &QueryGraph, mode: UnionMode) -> Result<QueryEmbedding> {
        q.validate(self.num_entities, self.num_relations)?;
        match mode {
            UnionMode::Dm => {
                let (out, _) = self.forward_unchecked(&to_dm(q))?;
                Ok(QueryEmbedding::Single(BetaVector::from_flat(&out)))
            }
            UnionMode::Dnf => {
                let parts = to_dnf(q)?
                    .iter()
                    .map(|d| self.forward_unchecked(d).map(|(out, _)| BetaVector::from_flat(&out)))
                    .collect::<Result<Vec<_>>>()?;
                Ok(if parts.len() == 1 && !q.contains_union() {
                    QueryEmbedding::Single(parts.into_iter().next().expect("one part"))
                } else {
                    QueryEmbedding::Disjuncts(parts)
                })
            }
        }
    }

    /// `Σ_d KL(entity_d ‖ query_d)`.
    pub fn distance(&self, v: EntityId, query: &BetaVector) -> Result<f64> {
        self.check_entity(v)?;
        self.check_len(query)?;
        let e = EntityStats::new(self.entity_flat(v.0).0, false);
        Ok(e.distance(&QueryStats::new(query.to_flat(), false)))
    }

    /// Minimum distance over disjunct embeddings.
    pub fn score_union_dnf(&self, v: EntityId, disjuncts: &[BetaVector]) -> Result<f64> {
        if disjuncts.is_empty() {
            return Err(Error::Shape("union score needs at least one disjunct".into()));
        }
        disjuncts.iter().map(|d| self.distance(v, d)).try_fold(f64::INFINITY, |m, d| Ok(m.min(d?)))
    }

}

/// Reciprocal of both shape parameters in every dimension.
pub fn negate(e: &BetaVector) -> BetaVector {
    BetaVector { alpha: e.alpha.iter().map(|a| 1.0 / a).collect(), beta: e.beta.iter().map(|b| 1.0 / b).collect() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::parse_query;

    fn model() -> BetaModel {
        BetaModel::new(ModelConfig { dim: 4, hidden_dim: 8, attention_hidden: 6, ..ModelConfig::desk() }, 10, 3, 1).unwrap()
    }

    fn bv(a: &[f64], b: &[f64]) -> BetaVector {
        BetaVector::new(a.to_vec(), b.to_vec()).unwrap()
    }

    #[test]
    fn fresh_entities_are_near_uniform() {
        let m = model();
        for v in 0..10 {
            let e = m.embed_entity(EntityId(v)).unwrap();
            assert!(e.iter().all(|p| (p.alpha - 1.0).abs() < 0.5 && (p.beta - 1.0).abs() < 0.5));
        }
        assert_eq!(m.embed_entity(EntityId(3)).unwrap(), m.embed_entity(EntityId(3)).unwrap());
        assert!(matches!(m.embed_entity(EntityId(10)), Err(Error::UnknownEntity(10))));
    }

    #[test]
    fn negation_is_reciprocal() {
        let e = negate(&bv(&[2.0], &[3.0]));
        assert_eq!(e.alpha, vec![0.5]);
        assert!((e.beta[0] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn equal_weights_interpolate() {
        let m = model();
        let a = bv(&[2.0; 4], &[4.0; 4]);
        let b = bv(&[4.0; 4], &[2.0; 4]);
        // zeroing the last attention layer forces equal logits
        let mut m2 = m.clone();
        m2.attention.layers.last_mut().unwrap().weight.iter_mut().for_each(|w| *w = 0.0);
        let out = m2.intersect(&[a, b]).unwrap();
        assert!(out.iter().all(|p| p.alpha == 3.0 && p.beta == 3.0));
    }

    #[test]
    fn intersection_is_order_independent_bitwise() {
        let m = model();
        let xs: Vec<BetaVector> = (0..3).map(|v| m.embed_entity(EntityId(v)).unwrap()).collect();
        let fwd = m.intersect(&xs).unwrap();
        let rev: Vec<BetaVector> = xs.iter().rev().cloned().collect();
        assert_eq!(fwd, m.intersect(&rev).unwrap());
        let w = m.attention_weights(&xs).unwrap();
        assert!((w.iter().map(|r| r[0]).sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn union_needs_rewrite() {
        let m = model();
        let q = parse_query("(or (p 0 (e 1)) (p 1 (e 2)))").unwrap();
        assert!(matches!(m.forward(&q), Err(Error::Unsupported(_))));
        assert!(matches!(m.embed_query(&q, UnionMode::Dnf).unwrap(), QueryEmbedding::Disjuncts(ref d) if d.len() == 2));
        assert!(matches!(m.embed_query(&q, UnionMode::Dm).unwrap(), QueryEmbedding::Single(_)));
    }

    #[test]
    fn anchor_query_is_entity() {
        let m = model();
        let q = parse_query("(e 7)").unwrap();
        let QueryEmbedding::Single(e) = m.embed_query(&q, UnionMode::Dnf).unwrap() else { panic!() };
        assert_eq!(e, m.embed_entity(EntityId(7)).unwrap());
        assert_eq!(m.distance(EntityId(7), &e).unwrap(), 0.0);
    }

    #[test]
    fn per_relation_projection_and_per_dim_attention() {
        let cfg = ModelConfig {
            dim: 3,
            hidden_dim: 5,
            attention_hidden: 4,
            attention: AttentionMode::PerDim,
            projection: ProjectionMode::PerRelation,
            ..ModelConfig::desk()
        };
        let m = BetaModel::new(cfg, 5, 2, 0).unwrap();
        assert_eq!(m.projection.len(), 2);
        assert!(m.relation.is_empty());
        let q = parse_query("(and (p 0 (e 1)) (p 1 (e 2)))").unwrap();
        let QueryEmbedding::Single(e) = m.embed_query(&q, UnionMode::Dm).unwrap() else { panic!() };
        assert!(e.in_working_range());
        let xs = [m.embed_entity(EntityId(0)).unwrap(), m.embed_entity(EntityId(1)).unwrap()];
        assert_eq!(m.attention_weights(&xs).unwrap()[0].len(), 3);
    }
}
