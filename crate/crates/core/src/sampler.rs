//! Benchmark query generation.
//!
//! A query is instantiated top-down from a seed answer: every projection
//! edge picks one incoming `(relation, head)` pair of its target uniformly
//! at random, every intersection/union branch is grounded from the same
//! target, and a negated branch is grounded from a different entity whose
//! branch answers exclude the target. The seed answer therefore always
//! answers the instantiated query.
//!
//! Validation and test queries are kept only when they have non-trivial
//! answers (answers that need an edge missing from the smaller overlay) and
//! no more than `max_answers` answers in total.

use std::collections::{BTreeMap, HashSet};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::kg::{EntityId, GraphSplits, KnowledgeGraph, RelationId};
use crate::query::{evaluate, AnswerSet, QueryGraph, Structure};
use crate::seed::derive_seed;

/// A generated query with its answers split by difficulty.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryInstance {
    pub query: QueryGraph,
    pub structure: Structure,
    /// Answers on the smaller graph (for training queries: all answers on
    /// the training graph).
    pub easy: AnswerSet,
    /// Answers that only appear on the larger graph.
    pub hard: AnswerSet,
}

impl QueryInstance {
    pub fn all_answers(&self) -> AnswerSet {
        self.easy.union(&self.hard).copied().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Valid, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        }
    }

    /// Graph the query is grounded on and the smaller graph whose answers
    /// count as easy.
    fn graphs(self, splits: &GraphSplits) -> (&KnowledgeGraph, Option<&KnowledgeGraph>) {
        match self {
            Split::Train => (&splits.train, None),
            Split::Valid => (&splits.valid, Some(&splits.train)),
            Split::Test => (&splits.test, Some(&splits.valid)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GenerateConfig {
    pub counts: BTreeMap<(Split, Structure), usize>,
    /// Cap on `|easy ∪ hard|` for validation and test queries.
    pub max_answers: usize,
    /// Consecutive failed attempts tolerated before a structure is abandoned.
    pub retry_budget: usize,
    /// Emit one 1p query per `(head, relation)` with a held-out edge instead
    /// of sampling 1p validation/test queries.
    pub exhaustive_1p: bool,
}

impl GenerateConfig {
    /// `train_conjunctive` queries for each of 1p/2p/3p/2i/3i, a tenth of
    /// that for each negation structure, and `eval_per_structure` validation
    /// and test queries for all fourteen structures.
    pub fn standard(train_conjunctive: usize, eval_per_structure: usize) -> Self {
        let mut counts = BTreeMap::new();
        for s in Structure::TRAINABLE {
            let n = if s.has_negation() { train_conjunctive / 10 } else { train_conjunctive };
            counts.insert((Split::Train, s), n);
        }
        for split in [Split::Valid, Split::Test] {
            for s in Structure::ALL {
                counts.insert((split, s), eval_per_structure);
            }
        }
        Self { counts, max_answers: 100, retry_budget: 100, exhaustive_1p: false }
    }
}

/// Instantiated queries for all three splits.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QueryDataset {
    pub seed: u64,
    pub train: Vec<QueryInstance>,
    pub valid: Vec<QueryInstance>,
    pub test: Vec<QueryInstance>,
}

impl QueryDataset {
    pub fn split(&self, split: Split) -> &[QueryInstance] {
        match split {
            Split::Train => &self.train,
            Split::Valid => &self.valid,
            Split::Test => &self.test,
        }
    }

    pub fn split_mut(&mut self, split: Split) -> &mut Vec<QueryInstance> {
        match split {
            Split::Train => &mut self.train,
            Split::Valid => &mut self.valid,
            Split::Test => &mut self.test,
        }
    }

    pub fn by_structure(&self, split: Split) -> BTreeMap<Structure, Vec<&QueryInstance>> {
        let mut out: BTreeMap<Structure, Vec<&QueryInstance>> = BTreeMap::new();
        for inst in self.split(split) {
            out.entry(inst.structure).or_default().push(inst);
        }
        out
    }
}

/// Per-structure statistics of one split.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitStats {
    pub structure: Structure,
    pub count: usize,
    pub avg_answers: f64,
    pub avg_hard_answers: f64,
}

pub fn split_stats(instances: &[QueryInstance]) -> Vec<SplitStats> {
    let mut groups: BTreeMap<Structure, Vec<&QueryInstance>> = BTreeMap::new();
    for inst in instances {
        groups.entry(inst.structure).or_default().push(inst);
    }
    groups
        .into_iter()
        .map(|(structure, insts)| {
            let n = insts.len() as f64;
            SplitStats {
                structure,
                count: insts.len(),
                avg_answers: insts.iter().map(|i| (i.easy.len() + i.hard.len()) as f64).sum::<f64>() / n,
                avg_hard_answers: insts.iter().map(|i| i.hard.len() as f64).sum::<f64>() / n,
            }
        })
        .collect()
}

/// `easy = ⟦q⟧_small`, `hard = ⟦q⟧_big \ easy`.
pub fn split_answers(q: &QueryGraph, small: &KnowledgeGraph, big: &KnowledgeGraph) -> (AnswerSet, AnswerSet) {
    let easy = evaluate(q, small);
    let hard = evaluate(q, big).difference(&easy).copied().collect();
    (easy, hard)
}

fn entities_with_incoming(g: &KnowledgeGraph) -> Vec<EntityId> {
    g.entities().filter(|&v| !g.incoming(v).is_empty()).collect()
}

struct Grounder<'a, R> {
    g: &'a KnowledgeGraph,
    targets: &'a [EntityId],
    rng: &'a mut R,
}

impl<R: Rng> Grounder<'_, R> {
    fn fill(&mut self, node: &QueryGraph, target: EntityId) -> Option<QueryGraph> {
        match node {
            QueryGraph::Anchor(_) => Some(QueryGraph::Anchor(target)),
            QueryGraph::Projection(_, child) => {
                let &(r, head) = self.g.incoming(target).choose(self.rng)?;
                Some(QueryGraph::Projection(r, Box::new(self.fill(child, head)?)))
            }
            QueryGraph::Negation(child) => self.fill_negated(child, target),
            QueryGraph::Intersection(cs) | QueryGraph::Union(cs) => {
                let children = cs.iter().map(|c| self.fill(c, target)).collect::<Option<Vec<_>>>()?;
                let distinct: HashSet<&QueryGraph> = children.iter().collect();
                if distinct.len() < children.len() {
                    return None;
                }
                Some(if matches!(node, QueryGraph::Intersection(_)) {
                    QueryGraph::Intersection(children)
                } else {
                    QueryGraph::Union(children)
                })
            }
        }
    }

    /// Grounds `child` from another entity so that `target` survives the complement.
    fn fill_negated(&mut self, child: &QueryGraph, target: EntityId) -> Option<QueryGraph> {
        let &other = self.targets.choose(self.rng)?;
        if other == target {
            return None;
        }
        let sub = self.fill(child, other)?;
        if evaluate(&sub, self.g).contains(&target) {
            return None;
        }
        Some(QueryGraph::Negation(Box::new(sub)))
    }
}

/// Grounds `structure` on `g`. `None` means this attempt hit a dead end
/// and should be retried.
pub fn instantiate<R: Rng>(structure: Structure, g: &KnowledgeGraph, rng: &mut R) -> Option<QueryGraph> {
    let targets = entities_with_incoming(g);
    instantiate_with(structure, g, &targets, rng).map(|(q, _)| q)
}

fn instantiate_with<R: Rng>(
    structure: Structure,
    g: &KnowledgeGraph,
    targets: &[EntityId],
    rng: &mut R,
) -> Option<(QueryGraph, EntityId)> {
    let &seed = targets.choose(rng)?;
    let mut grounder = Grounder { g, targets, rng };
    let q = grounder.fill(&structure.skeleton(), seed)?;
    debug_assert!(evaluate(&q, g).contains(&seed), "seed answer lost in {q}");
    Some((q, seed))
}

fn cell_seed(seed: u64, split: Split, structure: Structure) -> u64 {
    derive_seed(seed, ((split as u64) << 8) | structure.index() as u64)
}

/// Outcome of [`generate_dataset`]; `warnings` lists structures that could
/// not be filled.
#[derive(Debug, Clone)]
pub struct Generated {
    pub dataset: QueryDataset,
    pub warnings: Vec<String>,
}

fn generate_one(
    splits: &GraphSplits,
    split: Split,
    structure: Structure,
    count: usize,
    config: &GenerateConfig,
    seed: u64,
) -> (Vec<QueryInstance>, Option<String>) {
    let (big, small) = split.graphs(splits);
    if split != Split::Train && structure == Structure::P1 && config.exhaustive_1p {
        return (exhaustive_one_hop(small.expect("eval split"), big, config.max_answers), None);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cell_seed(seed, split, structure));
    let targets = entities_with_incoming(big);
    let mut out = Vec::with_capacity(count);
    let mut seen = HashSet::new();
    let mut failures = 0;
    while out.len() < count {
        if failures >= config.retry_budget {
            let msg = format!(
                "{} {}: generated {} of {} queries before {} consecutive failed attempts",
                split.name(),
                structure,
                out.len(),
                count,
                config.retry_budget
            );
            return (out, Some(msg));
        }
        let Some((query, _)) = instantiate_with(structure, big, &targets, &mut rng) else {
            failures += 1;
            continue;
        };
        if !seen.insert(query.to_string()) {
            failures += 1;
            continue;
        }
        let (easy, hard) = match small {
            None => (evaluate(&query, big), AnswerSet::new()),
            Some(small) => split_answers(&query, small, big),
        };
        if small.is_some() && (hard.is_empty() || easy.len() + hard.len() > config.max_answers) {
            failures += 1;
            continue;
        }
        failures = 0;
        out.push(QueryInstance { query, structure, easy, hard });
    }
    (out, None)
}

fn exhaustive_one_hop(small: &KnowledgeGraph, big: &KnowledgeGraph, max_answers: usize) -> Vec<QueryInstance> {
    let mut keys: Vec<(EntityId, RelationId)> =
        big.triples().filter(|t| !small.contains(t)).map(|t| (t.head, t.relation)).collect();
    keys.dedup();
    keys.into_iter()
        .filter_map(|(h, r)| {
            let query = QueryGraph::Anchor(h).project(r.0);
            let (easy, hard) = split_answers(&query, small, big);
            (easy.len() + hard.len() <= max_answers).then_some(QueryInstance {
                query,
                structure: Structure::P1,
                easy,
                hard,
            })
        })
        .collect()
}

/// Generates every `(split, structure)` cell of `config.counts`.
///
/// Each cell draws from its own RNG derived from `seed`, so the result does
/// not depend on the number of worker threads.
pub fn generate_dataset(splits: &GraphSplits, config: &GenerateConfig, seed: u64) -> Generated {
    let cells: Vec<(Split, Structure, usize)> = config.counts.iter().map(|(&(sp, st), &n)| (sp, st, n)).collect();
    let results: Vec<_> = cells
        .par_iter()
        .map(|&(split, structure, count)| (split, generate_one(splits, split, structure, count, config, seed)))
        .collect();
    let mut dataset = QueryDataset { seed, ..Default::default() };
    let mut warnings = Vec::new();
    for (split, (instances, warning)) in results {
        dataset.split_mut(split).extend(instances);
        if let Some(w) = warning {
            log::warn!("{w}");
            warnings.push(w);
        }
    }
    Generated { dataset, warnings }
}

/// Draws queries with an empty answer set on `g` by filling the skeleton
/// with uniformly random anchors and relations and rejecting until the
/// answer set is empty.
pub fn sample_empty_queries<R: Rng>(
    structure: Structure,
    g: &KnowledgeGraph,
    count: usize,
    max_attempts: usize,
    rng: &mut R,
) -> Vec<QueryGraph> {
    fn fill_random<R: Rng>(node: &QueryGraph, g: &KnowledgeGraph, rng: &mut R) -> QueryGraph {
        match node {
            QueryGraph::Anchor(_) => QueryGraph::anchor(rng.random_range(0..g.num_entities() as u32)),
            QueryGraph::Projection(_, c) => {
                fill_random(c, g, rng).project(rng.random_range(0..g.num_relations() as u32))
            }
            QueryGraph::Negation(c) => fill_random(c, g, rng).negate(),
            QueryGraph::Intersection(cs) => QueryGraph::and(cs.iter().map(|c| fill_random(c, g, rng)).collect()),
            QueryGraph::Union(cs) => QueryGraph::or(cs.iter().map(|c| fill_random(c, g, rng)).collect()),
        }
    }
    let skeleton = structure.skeleton();
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for _ in 0..max_attempts {
        if out.len() >= count || g.num_entities() == 0 || g.num_relations() == 0 {
            break;
        }
        let q = fill_random(&skeleton, g, rng);
        if evaluate(&q, g).is_empty() && seen.insert(q.to_string()) {
            out.push(q);
        }
    }
    out
}

/// Draws instantiated queries with more than `min_answers` answers on `g`.
pub fn sample_large_queries<R: Rng>(
    structure: Structure,
    g: &KnowledgeGraph,
    min_answers: usize,
    count: usize,
    max_attempts: usize,
    rng: &mut R,
) -> Vec<QueryGraph> {
    let targets = entities_with_incoming(g);
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for _ in 0..max_attempts {
        if out.len() >= count {
            break;
        }
        if let Some((q, _)) = instantiate_with(structure, g, &targets, rng) {
            if evaluate(&q, g).len() > min_answers && seen.insert(q.to_string()) {
                out.push(q);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::Triple;
    use crate::query::structure_of;

    fn chain3() -> KnowledgeGraph {
        KnowledgeGraph::build(&[Triple::new(0, 0, 1), Triple::new(1, 0, 2)], 3, 1)
    }

    #[test]
    fn one_hop_from_chain_end() {
        let g = chain3();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut seen = std::collections::BTreeSet::new();
        for _ in 0..50 {
            if let Some(q) = instantiate(Structure::P1, &g, &mut rng) {
                seen.insert(q.to_string());
            }
        }
        // the seed is 1 or 2; the only grounding answering 2 is (p 0 (e 1))
        assert!(seen.contains("(p 0 (e 1))"));
        assert!(seen.iter().all(|s| s == "(p 0 (e 1))" || s == "(p 0 (e 0))"));
    }

    #[test]
    fn instantiated_queries_contain_their_seed() {
        let triples: Vec<Triple> = (0..40u32)
            .flat_map(|i| (0..4u32).map(move |k| Triple::new(i, (i + k) % 3, (i * (7 + 4 * k) + 3 * k + 1) % 40)))
            .collect();
        let g = KnowledgeGraph::build(&triples, 40, 3);
        let targets = entities_with_incoming(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for s in Structure::ALL {
            let mut hits = 0;
            for _ in 0..200 {
                if let Some((q, seed)) = instantiate_with(s, &g, &targets, &mut rng) {
                    assert_eq!(structure_of(&q).unwrap(), s);
                    assert!(evaluate(&q, &g).contains(&seed), "{s}: {q}");
                    hits += 1;
                }
            }
            assert!(hits > 0, "{s} never instantiated");
        }
    }

    #[test]
    fn split_answers_on_chain() {
        let small = KnowledgeGraph::build(&[Triple::new(0, 0, 1)], 3, 1);
        let big = chain3();
        let q = QueryGraph::anchor(0).project(0).project(0);
        let (easy, hard) = split_answers(&q, &small, &big);
        assert!(easy.is_empty());
        assert_eq!(hard, [EntityId(2)].into_iter().collect());
        let (easy, hard) = split_answers(&QueryGraph::anchor(0).project(0), &small, &big);
        assert_eq!(easy.len(), 1);
        assert!(hard.is_empty());
    }

    #[test]
    fn complete_graph_has_no_eval_queries() {
        let triples: Vec<Triple> = (0..10).map(|i| Triple::new(i, 0, (i + 1) % 10)).collect();
        let splits = GraphSplits::build(&triples, &[], &[], 10, 1);
        let mut cfg = GenerateConfig::standard(20, 5);
        cfg.retry_budget = 20;
        let out = generate_dataset(&splits, &cfg, 3);
        assert!(out.dataset.valid.is_empty());
        assert!(out.dataset.test.is_empty());
        assert!(!out.dataset.train.is_empty());
        assert!(!out.warnings.is_empty());
    }

    #[test]
    fn standard_mix_is_ten_to_one() {
        let cfg = GenerateConfig::standard(1000, 10);
        assert_eq!(cfg.counts[&(Split::Train, Structure::P2)], 1000);
        assert_eq!(cfg.counts[&(Split::Train, Structure::Pni)], 100);
        assert!(!cfg.counts.contains_key(&(Split::Train, Structure::Ip)));
        assert_eq!(cfg.counts[&(Split::Test, Structure::Up)], 10);
    }

    #[test]
    fn empty_pool_queries_are_empty() {
        let g = chain3();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let qs = sample_empty_queries(Structure::I2, &g, 5, 1000, &mut rng);
        assert!(!qs.is_empty());
        assert!(qs.iter().all(|q| evaluate(q, &g).is_empty()));
    }
}
