//! Negative-sampling training.
//!
//! For a query embedding `q`, a positive answer `v` and `k` negatives `v'_j`
//! the per-example loss is
//!
//! ```text
//! L = −ln σ(γ − D(v; q)) − (1/k) Σ_j ln σ(D(v'_j; q) − γ)
//! ```
//!
//! Each step trains on one structure (batches are homogeneous), chosen by
//! smooth weighted round-robin over the mix weights. All randomness of step
//! `t` comes from a stream derived from `(seed, t)`, so a run resumed from
//! a checkpoint continues exactly as the uninterrupted run would.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::time::Instant;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::EntityId;
use crate::model::nn::softplus;
use crate::model::{BetaModel, Checkpoint, EntityStats, Gradients, OptimizerState, QueryStats};
use crate::query::{AnswerSet, QueryGraph, Structure};
use crate::sampler::QueryInstance;
use crate::seed::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Margin γ.
    pub gamma: f64,
    /// Negatives per positive.
    pub neg_k: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub steps: u64,
    pub seed: u64,
    /// Relative frequency of batches per structure.
    pub mix: BTreeMap<Structure, f64>,
    /// Checkpoint interval in steps; 0 writes only the final checkpoint.
    pub checkpoint_every: u64,
    /// Rescale the batch gradient to this global L2 norm when it is larger;
    /// 0 disables clipping.
    #[serde(default)]
    pub clip_norm: f64,
}

impl TrainConfig {
    /// Full-scale hyperparameters: γ = 60, 128 negatives, batch 512, lr 5e-4.
    pub fn full_scale() -> Self {
        Self { gamma: 60.0, neg_k: 128, batch_size: 512, lr: 5e-4, steps: 300_000, clip_norm: 0.0, ..Self::desk() }
    }

    /// Small-scale defaults for CPU runs.
    pub fn desk() -> Self {
        Self {
            gamma: 8.0,
            neg_k: 32,
            batch_size: 256,
            lr: 1e-2,
            steps: 2000,
            seed: 0,
            mix: default_mix(),
            checkpoint_every: 0,
            clip_norm: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return bad(format!("gamma must be positive, got {}", self.gamma));
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return bad(format!("learning rate must be finite and >= 0, got {}", self.lr));
        }
        if !(self.clip_norm >= 0.0 && self.clip_norm.is_finite()) {
            return bad(format!("clip_norm must be finite and >= 0, got {}", self.clip_norm));
        }
        if self.neg_k == 0 || self.batch_size == 0 {
            return bad("neg_k and batch_size must be at least 1".into());
        }
        for (s, w) in &self.mix {
            if !s.is_trainable() {
                return bad(format!("structure {s} cannot be trained on"));
            }
            if !(*w >= 0.0 && w.is_finite()) {
                return bad(format!("mix weight for {s} must be finite and >= 0"));
            }
        }
        if self.mix.values().all(|&w| w == 0.0) {
            return bad("all mix weights are zero".into());
        }
        Ok(())
    }

    /// Sets one `key = value` option: `gamma`, `neg_k`, `batch`, `lr`,
    /// `steps`, `seed`, `checkpoint_every`, `clip_norm` or `mix.<structure>`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value.parse().map_err(|_| Error::Config(format!("invalid value {value:?} for {key}")))
        }
        match key {
            "gamma" => self.gamma = num(key, value)?,
            "neg_k" => self.neg_k = num(key, value)?,
            "batch" | "batch_size" => self.batch_size = num(key, value)?,
            "lr" => self.lr = num(key, value)?,
            "steps" => self.steps = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "checkpoint_every" => self.checkpoint_every = num(key, value)?,
            "clip_norm" => self.clip_norm = num(key, value)?,
            _ => match key.strip_prefix("mix.") {
                Some(s) => {
                    let s: Structure = s.parse()?;
                    self.mix.insert(s, num(key, value)?);
                }
                None => return Err(Error::Config(format!("unknown training option {key:?}"))),
            },
        }
        Ok(())
    }
}

/// Conjunctive structures at weight 1, negation structures at 1/10.
pub fn default_mix() -> BTreeMap<Structure, f64> {
    Structure::TRAINABLE.iter().map(|&s| (s, if s.has_negation() { 0.1 } else { 1.0 })).collect()
}

/// `(key, value, line)` triples of a `key = value` file. Blank lines and
/// lines starting with `#` are skipped.
pub fn parse_config_file(text: &str) -> Result<Vec<(String, String, usize)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value, got {line:?}", i + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string(), i + 1));
    }
    Ok(out)
}

/// The margin loss for one example.
pub fn margin_loss(d_pos: f64, d_negs: &[f64], gamma: f64) -> f64 {
    margin_loss_grad(d_pos, d_negs, gamma).0
}

/// Loss, `∂L/∂D(v)` and `∂L/∂D(v'_j)`. With no negatives only the positive term remains.
fn margin_loss_grad(d_pos: f64, d_negs: &[f64], gamma: f64) -> (f64, f64, Vec<f64>) {
    use crate::model::nn::sigmoid;
    let k = d_negs.len().max(1) as f64;
    // −ln σ(x) = softplus(−x)
    let mut loss = softplus(d_pos - gamma);
    let g_pos = sigmoid(d_pos - gamma);
    let mut g_negs = Vec::with_capacity(d_negs.len());
    for &d in d_negs {
        loss += softplus(gamma - d) / k;
        g_negs.push(-sigmoid(gamma - d) / k);
    }
    (loss, g_pos, g_negs)
}

/// `k` entities outside `answers`, uniform. Distinct when at least `k`
/// non-answers exist, with replacement otherwise; empty when every entity
/// is an answer.
pub fn sample_negatives<R: Rng>(answers: &AnswerSet, num_entities: usize, k: usize, rng: &mut R) -> Vec<EntityId> {
    let free = num_entities.saturating_sub(answers.len());
    if free == 0 {
        return Vec::new();
    }
    if free < k || free <= 4 * k || answers.len() * 2 > num_entities {
        let pool: Vec<EntityId> = (0..num_entities as u32).map(EntityId).filter(|v| !answers.contains(v)).collect();
        if free < k {
            return (0..k).map(|_| *pool.choose(rng).expect("non-empty")).collect();
        }
        return pool.choose_multiple(rng, k).copied().collect();
    }
    let mut chosen = Vec::with_capacity(k);
    let mut seen = std::collections::HashSet::with_capacity(k);
    while chosen.len() < k {
        let v = EntityId(rng.random_range(0..num_entities as u32));
        if !answers.contains(&v) && seen.insert(v) {
            chosen.push(v);
        }
    }
    chosen
}

/// One training example: a union-free query, one answer and its negatives.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainExample {
    pub query: QueryGraph,
    pub positive: EntityId,
    pub negatives: Vec<EntityId>,
}

type EntityCache = HashMap<u32, (EntityStats, Vec<f64>)>;

fn entity_cache(model: &BetaModel, ids: impl IntoIterator<Item = EntityId>) -> EntityCache {
    let mut ids: Vec<u32> = ids.into_iter().map(|v| v.0).collect();
    ids.sort_unstable();
    ids.dedup();
    ids.into_par_iter()
        .map(|v| {
            let (params, d_pos) = model.entity_flat(v);
            (v, (EntityStats::new(params, true), d_pos))
        })
        .collect()
}

fn example_with_cache(
    model: &BetaModel,
    ex: &TrainExample,
    gamma: f64,
    cache: &EntityCache,
    grads: &mut Gradients,
) -> Result<f64> {
    let (q_params, trace) = model.forward(&ex.query)?;
    let q = QueryStats::new(q_params, true);
    let ids: Vec<EntityId> = std::iter::once(ex.positive).chain(ex.negatives.iter().copied()).collect();
    for v in &ids {
        if v.index() >= model.num_entities() {
            return Err(Error::UnknownEntity(v.0));
        }
    }
    let dist: Vec<f64> = ids.iter().map(|v| cache[&v.0].0.distance(&q)).collect();
    let (loss, g_pos, g_negs) = margin_loss_grad(dist[0], &dist[1..], gamma);
    let w = 2 * model.dim();
    let mut d_query = vec![0.0; w];
    for (v, g) in ids.iter().zip(std::iter::once(g_pos).chain(g_negs)) {
        let (stats, d_pos) = &cache[&v.0];
        let mut d_entity = vec![0.0; w];
        stats.distance_grad(&q, g, &mut d_entity, &mut d_query);
        let row = grads.entity.entry(v.0).or_insert_with(|| vec![0.0; w]);
        for ((r, d), p) in row.iter_mut().zip(&d_entity).zip(d_pos) {
            *r += d * p;
        }
    }
    model.backward(&trace, d_query, grads);
    Ok(loss)
}

/// Loss of one example; its gradient is added to `grads`.
pub fn example_loss_grad(model: &BetaModel, ex: &TrainExample, gamma: f64, grads: &mut Gradients) -> Result<f64> {
    let cache = entity_cache(model, std::iter::once(ex.positive).chain(ex.negatives.iter().copied()));
    example_with_cache(model, ex, gamma, &cache, grads)
}

/// Examples per parallel work unit. Fixed so that the reduction order,
/// and therefore every bit of the result, is independent of thread count.
const CHUNK: usize = 8;

/// Mean loss and mean gradient over `batch`.
pub fn batch_loss_grad(model: &BetaModel, batch: &[TrainExample], gamma: f64) -> Result<(f64, Gradients)> {
    let cache = entity_cache(
        model,
        batch.iter().flat_map(|ex| std::iter::once(ex.positive).chain(ex.negatives.iter().copied())),
    );
    let parts = batch
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut g = Gradients::zeros(model);
            let mut loss = 0.0;
            for ex in chunk {
                loss += example_with_cache(model, ex, gamma, &cache, &mut g)?;
            }
            Ok((loss, g))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut total = Gradients::zeros(model);
    let mut loss = 0.0;
    for (l, g) in &parts {
        loss += l;
        total.add(g);
    }
    let scale = 1.0 / batch.len().max(1) as f64;
    total.scale(scale);
    Ok((loss * scale, total))
}

/// Adam without weight decay.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub state: OptimizerState,
}

impl Adam {
    pub fn new(model: &BetaModel, lr: f64) -> Self {
        let zeros: Vec<Vec<f64>> = model.tensors().iter().map(|t| vec![0.0; t.len()]).collect();
        Self::from_state(lr, OptimizerState { step: 0, m: zeros.clone(), v: zeros })
    }

    pub fn from_state(lr: f64, state: OptimizerState) -> Self {
        Self { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, state }
    }

    /// Gradient lookup per parameter tensor, in [`BetaModel::tensors`] order.
    fn grad_lookup<'g>(&self, model: &BetaModel, grads: &'g Gradients) -> Vec<Box<dyn Fn(usize) -> f64 + Sync + 'g>> {
        let w = 2 * model.dim();
        let mut out: Vec<Box<dyn Fn(usize) -> f64 + Sync + 'g>> =
            vec![Box::new(move |i| grads.entity.get(&((i / w) as u32)).map_or(0.0, |row| row[i % w]))];
        for t in std::iter::once(&grads.relation)
            .chain(grads.projection.iter().flat_map(|m| m.tensors()))
            .chain(grads.attention.tensors())
        {
            out.push(Box::new(move |i| t[i]));
        }
        out
    }

    fn moments(&self, m: f64, v: f64, g: f64) -> (f64, f64) {
        (self.beta1 * m + (1.0 - self.beta1) * g, self.beta2 * v + (1.0 - self.beta2) * g * g)
    }

    /// Applies one update. Nothing is written when any updated value would
    /// be non-finite.
    pub fn step(&mut self, model: &mut BetaModel, grads: &Gradients) -> Result<()> {
        let t = (self.state.step + 1) as i32;
        let (c1, c2) = (1.0 - self.beta1.powi(t), 1.0 - self.beta2.powi(t));
        let grad_of = self.grad_lookup(model, grads);
        let lr = self.lr;
        let eps = self.eps;
        let delta = |m: f64, v: f64| lr * (m / c1) / ((v / c2).sqrt() + eps);
        for (ti, param) in model.tensors().into_iter().enumerate() {
            for (i, p) in param.iter().enumerate() {
                let (m, v) = self.moments(self.state.m[ti][i], self.state.v[ti][i], grad_of[ti](i));
                if !(p - delta(m, v)).is_finite() {
                    return Err(Error::Numerical(format!("update of parameter tensor {ti} entry {i} is not finite")));
                }
            }
        }
        for (ti, param) in model.tensors_mut().into_iter().enumerate() {
            for (i, p) in param.iter_mut().enumerate() {
                let (m, v) = self.moments(self.state.m[ti][i], self.state.v[ti][i], grad_of[ti](i));
                self.state.m[ti][i] = m;
                self.state.v[ti][i] = v;
                *p -= delta(m, v);
            }
        }
        self.state.step += 1;
        Ok(())
    }
}

/// Smooth weighted round-robin: deterministic, and every structure's share
/// of any window tracks its weight.
#[derive(Debug, Clone)]
pub struct Schedule {
    items: Vec<(Structure, f64)>,
    current: Vec<f64>,
}

impl Schedule {
    pub fn new(weights: &BTreeMap<Structure, f64>) -> Self {
        let items: Vec<(Structure, f64)> = weights.iter().filter(|(_, &w)| w > 0.0).map(|(&s, &w)| (s, w)).collect();
        let current = vec![0.0; items.len()];
        Self { items, current }
    }

    pub fn next_structure(&mut self) -> Structure {
        let total: f64 = self.items.iter().map(|(_, w)| w).sum();
        let mut best = 0;
        for (i, (_, w)) in self.items.iter().enumerate() {
            self.current[i] += w;
            if self.current[i] > self.current[best] {
                best = i;
            }
        }
        self.current[best] -= total;
        self.items[best].0
    }
}

/// One line of the metrics log.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: u64,
    pub structure: Structure,
    pub loss: f64,
    pub elapsed_s: f64,
}

impl fmt::Display for StepRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}\t{:.6}\t{:.3}", self.step, self.structure, self.loss, self.elapsed_s)
    }
}

/// Metadata stored alongside the model in a checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainMeta {
    pub step: u64,
    pub lr: f64,
    pub config: TrainConfig,
}

pub struct Trainer<'a> {
    model: BetaModel,
    adam: Adam,
    config: TrainConfig,
    pools: BTreeMap<Structure, Vec<&'a QueryInstance>>,
    schedule: Schedule,
    step: u64,
    lr_halved: bool,
    started: Instant,
}

impl<'a> Trainer<'a> {
    /// Training instances of structures missing from `instances` are
    /// dropped from the mix with a warning.
    pub fn new(model: BetaModel, instances: &'a [QueryInstance], config: TrainConfig) -> Result<Self> {
        let adam = Adam::new(&model, config.lr);
        Self::with_optimizer(model, adam, 0, instances, config)
    }

    /// Continues from a checkpoint written by [`Trainer::checkpoint`].
    pub fn resume(ckpt: Checkpoint, instances: &'a [QueryInstance], config: TrainConfig) -> Result<Self> {
        let meta: TrainMeta = serde_json::from_value(ckpt.meta.clone())
            .map_err(|e| Error::Checkpoint(format!("no training state in checkpoint: {e}")))?;
        let state = ckpt.optimizer.ok_or_else(|| Error::Checkpoint("checkpoint has no optimizer state".into()))?;
        let adam = Adam::from_state(meta.lr, state);
        let mut t = Self::with_optimizer(ckpt.model, adam, meta.step, instances, config)?;
        t.lr_halved = meta.lr < t.config.lr;
        Ok(t)
    }

    fn with_optimizer(
        model: BetaModel,
        adam: Adam,
        step: u64,
        instances: &'a [QueryInstance],
        mut config: TrainConfig,
    ) -> Result<Self> {
        config.validate()?;
        let mut pools: BTreeMap<Structure, Vec<&QueryInstance>> = BTreeMap::new();
        for inst in instances {
            if inst.structure.is_trainable() && !inst.easy.is_empty() {
                pools.entry(inst.structure).or_default().push(inst);
            }
        }
        for (s, w) in config.mix.iter_mut() {
            if *w > 0.0 && !pools.contains_key(s) {
                log::warn!("no training queries of structure {s}; dropping it from the mix");
                *w = 0.0;
            }
        }
        if config.mix.values().all(|&w| w == 0.0) {
            return Err(Error::Config("no training queries for any structure in the mix".into()));
        }
        let mut schedule = Schedule::new(&config.mix);
        for _ in 0..step {
            schedule.next_structure();
        }
        Ok(Self { model, adam, config, pools, schedule, step, lr_halved: false, started: Instant::now() })
    }

    pub fn model(&self) -> &BetaModel {
        &self.model
    }

    pub fn into_model(self) -> BetaModel {
        self.model
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn learning_rate(&self) -> f64 {
        self.adam.lr
    }

    pub fn seed(&self) -> u64 {
        self.config.seed
    }

    pub fn checkpoint_every(&self) -> u64 {
        self.config.checkpoint_every
    }

    pub fn checkpoint(&self) -> Checkpoint {
        let meta = TrainMeta { step: self.step, lr: self.adam.lr, config: self.config.clone() };
        Checkpoint {
            model: self.model.clone(),
            optimizer: Some(self.adam.state.clone()),
            meta: serde_json::to_value(meta).expect("serializable"),
        }
    }

    /// Draws the batch of step `step` for `structure`.
    fn batch(&self, structure: Structure, step: u64) -> Vec<TrainExample> {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.config.seed, step));
        let pool = &self.pools[&structure];
        (0..self.config.batch_size)
            .map(|_| {
                let inst = pool.choose(&mut rng).expect("non-empty pool");
                let answers: Vec<&EntityId> = inst.easy.iter().collect();
                let positive = **answers.choose(&mut rng).expect("non-empty answers");
                let negatives = sample_negatives(&inst.easy, self.model.num_entities(), self.config.neg_k, &mut rng);
                TrainExample { query: inst.query.clone(), positive, negatives }
            })
            .collect()
    }

    /// Runs one optimization step.
    ///
    /// When the loss, gradient or update is not finite the learning rate is
    /// halved (once per run) and the step retried; a second failure aborts.
    pub fn step(&mut self) -> Result<StepRecord> {
        let step = self.step + 1;
        let structure = self.schedule.next_structure();
        let batch = self.batch(structure, step);
        let mut attempt = 0;
        let loss = loop {
            let result = batch_loss_grad(&self.model, &batch, self.config.gamma).and_then(|(loss, mut grads)| {
                if !loss.is_finite() || !grads.is_finite() {
                    return Err(Error::Numerical(format!(
                        "non-finite loss {loss} (max |grad| {}) at step {step} on {structure} batch; first query {}",
                        grads.max_abs(),
                        batch[0].query
                    )));
                }
                let norm = grads.norm();
                if self.config.clip_norm > 0.0 && norm > self.config.clip_norm {
                    grads.scale(self.config.clip_norm / norm);
                }
                self.adam.step(&mut self.model, &grads).map(|_| loss)
            });
            match result {
                Ok(loss) => break loss,
                Err(Error::Numerical(msg)) if attempt == 0 && !self.lr_halved => {
                    log::warn!("{msg}; halving learning rate to {}", self.adam.lr / 2.0);
                    self.adam.lr /= 2.0;
                    self.lr_halved = true;
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        };
        self.step = step;
        Ok(StepRecord { step, structure, loss, elapsed_s: self.started.elapsed().as_secs_f64() })
    }

    /// Steps until `config.steps`, calling `on_step` after each.
    pub fn run(&mut self, mut on_step: impl FnMut(&Self, &StepRecord) -> Result<()>) -> Result<()> {
        while self.step < self.config.steps {
            let record = self.step()?;
            on_step(self, &record)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;

    #[test]
    fn loss_at_margin_is_two_ln_two() {
        assert!((margin_loss(5.0, &[5.0, 5.0, 5.0], 5.0) - 2.0 * 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn loss_limits() {
        assert!(margin_loss(0.0, &[1e9; 4], 60.0) < 1e-20);
        assert!(margin_loss(0.0, &[], 60.0) < 1e-20);
    }

    #[test]
    fn loss_matches_termwise_formula() {
        let sig = |x: f64| 1.0 / (1.0 + (-x).exp());
        let (dp, dn, g) = (3.7, [1.2, 8.9, 4.4], 4.0);
        let want = -sig(g - dp).ln() - dn.iter().map(|d| sig(d - g).ln()).sum::<f64>() / 3.0;
        assert!((margin_loss(dp, &dn, g) - want).abs() < 1e-14);
    }

    #[test]
    fn forced_negative() {
        let answers: AnswerSet = (0..9).map(EntityId).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(sample_negatives(&answers, 10, 5, &mut rng), vec![EntityId(9); 5]);
        let all: AnswerSet = (0..10).map(EntityId).collect();
        assert!(sample_negatives(&all, 10, 5, &mut rng).is_empty());
    }

    #[test]
    fn negatives_avoid_answers_and_are_reproducible() {
        let answers: AnswerSet = [1, 5, 7].into_iter().map(EntityId).collect();
        for n in [12, 1000] {
            let a = sample_negatives(&answers, n, 8, &mut ChaCha8Rng::seed_from_u64(4));
            let b = sample_negatives(&answers, n, 8, &mut ChaCha8Rng::seed_from_u64(4));
            assert_eq!(a, b);
            assert_eq!(a.len(), 8);
            assert!(a.iter().all(|v| !answers.contains(v)));
            let distinct: std::collections::BTreeSet<_> = a.iter().collect();
            assert_eq!(distinct.len(), 8);
        }
    }

    #[test]
    fn schedule_follows_weights() {
        let mut s = Schedule::new(&default_mix());
        let mut counts: BTreeMap<Structure, usize> = BTreeMap::new();
        for _ in 0..550 {
            *counts.entry(s.next_structure()).or_default() += 1;
        }
        assert_eq!(counts[&Structure::P1], 100);
        assert_eq!(counts[&Structure::In2], 10);
    }

    #[test]
    fn config_keys() {
        let mut c = TrainConfig::desk();
        for (k, v, _) in parse_config_file("# comment\ngamma = 24\n\nmix.2in=0.5\nbatch=8\n").unwrap() {
            c.set(&k, &v).unwrap();
        }
        assert_eq!((c.gamma, c.batch_size, c.mix[&Structure::In2]), (24.0, 8, 0.5));
        assert!(c.set("mix.ip", "1").is_ok());
        assert!(c.validate().is_err());
        assert!(c.set("nope", "1").is_err());
        assert!(parse_config_file("gamma 3").is_err());
    }

    #[test]
    fn zero_learning_rate_keeps_parameters() {
        let mut model = BetaModel::new(ModelConfig { dim: 3, hidden_dim: 4, attention_hidden: 2, ..ModelConfig::desk() }, 6, 2, 0).unwrap();
        let before = model.clone();
        let ex = TrainExample {
            query: QueryGraph::anchor(1).project(0),
            positive: EntityId(2),
            negatives: vec![EntityId(3), EntityId(4)],
        };
        let (_, g) = batch_loss_grad(&model, &[ex], 1.0).unwrap();
        Adam::new(&model, 0.0).step(&mut model, &g).unwrap();
        assert_eq!(model, before);
    }
}
