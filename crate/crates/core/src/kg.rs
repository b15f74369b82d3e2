//! Knowledge-graph storage: vocabularies, triples, relation-indexed
//! adjacency and the cumulative train/valid/test overlays.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EntityId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RelationId(pub u32);

impl EntityId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl RelationId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl fmt::Display for RelationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub head: EntityId,
    pub relation: RelationId,
    pub tail: EntityId,
}

impl Triple {
    pub fn new(head: u32, relation: u32, tail: u32) -> Self {
        Self { head: EntityId(head), relation: RelationId(relation), tail: EntityId(tail) }
    }
}

/// Bijective `id <-> name` map with dense ids.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Vocab {
    names: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocab {
    pub fn from_names(names: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(names.len());
        for (i, name) in names.iter().enumerate() {
            if index.insert(name.clone(), i as u32).is_some() {
                return Err(Error::Config(format!("duplicate vocabulary name {name:?}")));
            }
        }
        Ok(Self { names, index })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, id: u32) -> Option<&str> {
        self.names.get(id as usize).map(String::as_str)
    }

    pub fn id(&self, name: &str) -> Option<u32> {
        self.index.get(name).copied()
    }

    /// Appends `<name>_inverse` for every existing entry; new ids are offset
    /// by the original length.
    pub fn with_inverses(&self) -> Result<Self> {
        let mut names = self.names.clone();
        names.extend(self.names.iter().map(|n| format!("{n}_inverse")));
        Self::from_names(names)
    }
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn read_vocab(path: &Path) -> Result<Vocab> {
    let text = read_to_string(path)?;
    let mut slots: Vec<Option<String>> = Vec::new();
    let mut seen_names: HashMap<String, usize> = HashMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        let (id, name) = line
            .split_once('\t')
            .ok_or_else(|| Error::format(path, lineno, "expected `id<TAB>name`"))?;
        let id: usize =
            id.trim().parse().map_err(|_| Error::format(path, lineno, format!("non-integer id {id:?}")))?;
        if let Some(prev) = seen_names.insert(name.to_string(), lineno) {
            return Err(Error::format(path, lineno, format!("duplicate name {name:?} (first on line {prev})")));
        }
        if id >= slots.len() {
            slots.resize(id + 1, None);
        }
        if slots[id].is_some() {
            return Err(Error::format(path, lineno, format!("duplicate id {id}")));
        }
        slots[id] = Some(name.to_string());
    }
    let names = slots
        .into_iter()
        .enumerate()
        .map(|(i, s)| s.ok_or_else(|| Error::format(path, 0, format!("ids are not dense: {i} missing"))))
        .collect::<Result<Vec<_>>>()?;
    Vocab::from_names(names)
}

/// Reads `entities.dict`/`relations.dict` style files (`id<TAB>name`).
pub fn load_vocab(entity_file: &Path, relation_file: &Path) -> Result<(Vocab, Vocab)> {
    Ok((read_vocab(entity_file)?, read_vocab(relation_file)?))
}

/// Reads `h<TAB>r<TAB>t` integer triples, checking ids against the
/// vocabulary sizes. File order is preserved.
pub fn load_triples(path: &Path, num_entities: usize, num_relations: usize) -> Result<Vec<Triple>> {
    let text = read_to_string(path)?;
    let mut triples = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::format(path, lineno, format!("expected 3 tab-separated fields, got {}", fields.len())));
        }
        let mut ids = [0u32; 3];
        for (slot, field) in ids.iter_mut().zip(&fields) {
            *slot = field
                .trim()
                .parse()
                .map_err(|_| Error::format(path, lineno, format!("non-integer id {field:?}")))?;
        }
        let [h, r, t] = ids;
        if h as usize >= num_entities || t as usize >= num_entities {
            return Err(Error::format(path, lineno, format!("entity id out of range (|V| = {num_entities})")));
        }
        if r as usize >= num_relations {
            return Err(Error::format(path, lineno, format!("relation id {r} out of range (|R| = {num_relations})")));
        }
        triples.push(Triple::new(h, r, t));
    }
    Ok(triples)
}

/// Materializes `r⁻¹` as relation `r + num_relations` for every triple.
pub fn add_inverse_relations(triples: &[Triple], num_relations: usize) -> Vec<Triple> {
    let offset = num_relations as u32;
    triples
        .iter()
        .flat_map(|t| {
            [*t, Triple { head: t.tail, relation: RelationId(t.relation.0 + offset), tail: t.head }]
        })
        .collect()
}

/// Per-entity list of `(relation, other endpoint)` pairs, sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Adjacency {
    offsets: Vec<usize>,
    entries: Vec<(RelationId, EntityId)>,
}

impl Adjacency {
    fn build(num_entities: usize, mut edges: Vec<(EntityId, RelationId, EntityId)>) -> Self {
        edges.sort_unstable();
        edges.dedup();
        let mut offsets = vec![0usize; num_entities + 1];
        for &(from, _, _) in &edges {
            offsets[from.index() + 1] += 1;
        }
        for i in 0..num_entities {
            offsets[i + 1] += offsets[i];
        }
        let entries = edges.into_iter().map(|(_, r, to)| (r, to)).collect();
        Self { offsets, entries }
    }

    fn row(&self, v: EntityId) -> &[(RelationId, EntityId)] {
        match self.offsets.get(v.index()..=v.index() + 1) {
            Some(&[start, end]) => &self.entries[start..end],
            _ => &[],
        }
    }
}

/// Immutable multi-relational graph with forward and reverse adjacency.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnowledgeGraph {
    num_entities: usize,
    num_relations: usize,
    forward: Adjacency,
    reverse: Adjacency,
    /// Tails only, parallel to `forward.entries`, so `neighbors` can hand out a slice.
    forward_tails: Vec<EntityId>,
}

impl KnowledgeGraph {
    /// Builds the adjacency index. Duplicate triples collapse to one edge.
    pub fn build(triples: &[Triple], num_entities: usize, num_relations: usize) -> Self {
        let fwd = triples.iter().map(|t| (t.head, t.relation, t.tail)).collect();
        let rev = triples.iter().map(|t| (t.tail, t.relation, t.head)).collect();
        let forward = Adjacency::build(num_entities, fwd);
        let reverse = Adjacency::build(num_entities, rev);
        let forward_tails = forward.entries.iter().map(|&(_, t)| t).collect();
        Self { num_entities, num_relations, forward, reverse, forward_tails }
    }

    pub fn num_entities(&self) -> usize {
        self.num_entities
    }

    pub fn num_relations(&self) -> usize {
        self.num_relations
    }

    pub fn num_edges(&self) -> usize {
        self.forward.entries.len()
    }

    /// `A_r(v)`: tails reachable from `v` along `r`, ascending. Empty when
    /// `(v, r)` has no edge or `v` is out of range.
    pub fn neighbors(&self, v: EntityId, r: RelationId) -> &[EntityId] {
        let Some(&[start, end]) = self.forward.offsets.get(v.index()..=v.index() + 1) else {
            return &[];
        };
        let row = &self.forward.entries[start..end];
        let lo = row.partition_point(|&(rel, _)| rel < r);
        let hi = row.partition_point(|&(rel, _)| rel <= r);
        &self.forward_tails[start + lo..start + hi]
    }

    /// Incoming `(relation, head)` pairs of `v`.
    pub fn incoming(&self, v: EntityId) -> &[(RelationId, EntityId)] {
        self.reverse.row(v)
    }

    pub fn outgoing(&self, v: EntityId) -> &[(RelationId, EntityId)] {
        self.forward.row(v)
    }

    pub fn contains(&self, t: &Triple) -> bool {
        self.neighbors(t.head, t.relation).binary_search(&t.tail).is_ok()
    }

    /// All edges in `(head, relation, tail)` order.
    pub fn triples(&self) -> impl Iterator<Item = Triple> + '_ {
        (0..self.num_entities).flat_map(move |h| {
            let head = EntityId(h as u32);
            self.outgoing(head).iter().map(move |&(relation, tail)| Triple { head, relation, tail })
        })
    }

    pub fn entities(&self) -> impl Iterator<Item = EntityId> {
        (0..self.num_entities as u32).map(EntityId)
    }

    /// SHA-256 over the sizes and the sorted edge list.
    pub fn checksum(&self) -> String {
        let mut h = Sha256::new();
        h.update(format!("{} {}\n", self.num_entities, self.num_relations));
        for t in self.triples() {
            h.update(format!("{}\t{}\t{}\n", t.head, t.relation, t.tail));
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Cumulative overlays: train ⊆ train+valid ⊆ train+valid+test.
#[derive(Debug, Clone)]
pub struct GraphSplits {
    pub train: KnowledgeGraph,
    pub valid: KnowledgeGraph,
    pub test: KnowledgeGraph,
}

impl GraphSplits {
    /// Overlapping triples between splits are logged and deduplicated.
    pub fn build(
        train: &[Triple],
        valid: &[Triple],
        test: &[Triple],
        num_entities: usize,
        num_relations: usize,
    ) -> Self {
        let train_set: BTreeSet<Triple> = train.iter().copied().collect();
        let overlap_valid = valid.iter().filter(|t| train_set.contains(t)).count();
        let valid_set: BTreeSet<Triple> = train_set.iter().chain(valid).copied().collect();
        let overlap_test = test.iter().filter(|t| valid_set.contains(t)).count();
        if overlap_valid > 0 {
            log::warn!("{overlap_valid} validation triples also appear in training; deduplicated");
        }
        if overlap_test > 0 {
            log::warn!("{overlap_test} test triples also appear in earlier splits; deduplicated");
        }
        let all: Vec<Triple> = valid_set.iter().chain(test).copied().collect();
        let valid_all: Vec<Triple> = valid_set.into_iter().collect();
        Self {
            train: KnowledgeGraph::build(train, num_entities, num_relations),
            valid: KnowledgeGraph::build(&valid_all, num_entities, num_relations),
            test: KnowledgeGraph::build(&all, num_entities, num_relations),
        }
    }

    pub fn num_entities(&self) -> usize {
        self.test.num_entities()
    }

    pub fn num_relations(&self) -> usize {
        self.test.num_relations()
    }
}

/// A benchmark directory loaded from disk.
#[derive(Debug, Clone)]
pub struct GraphDir {
    pub entities: Vocab,
    pub relations: Vocab,
    pub train: Vec<Triple>,
    pub valid: Vec<Triple>,
    pub test: Vec<Triple>,
}

pub const GRAPH_FILES: [&str; 5] = ["entities.dict", "relations.dict", "train.txt", "valid.txt", "test.txt"];

impl GraphDir {
    pub fn load(dir: &Path, add_inverse: bool) -> Result<Self> {
        let missing: Vec<&str> = GRAPH_FILES.iter().copied().filter(|f| !dir.join(f).is_file()).collect();
        if !missing.is_empty() {
            return Err(Error::Config(format!("{}: missing {}", dir.display(), missing.join(", "))));
        }
        let (entities, mut relations) = load_vocab(&dir.join("entities.dict"), &dir.join("relations.dict"))?;
        let (ne, nr) = (entities.len(), relations.len());
        let mut train = load_triples(&dir.join("train.txt"), ne, nr)?;
        let mut valid = load_triples(&dir.join("valid.txt"), ne, nr)?;
        let mut test = load_triples(&dir.join("test.txt"), ne, nr)?;
        if add_inverse {
            train = add_inverse_relations(&train, nr);
            valid = add_inverse_relations(&valid, nr);
            test = add_inverse_relations(&test, nr);
            relations = relations.with_inverses()?;
        }
        Ok(Self { entities, relations, train, valid, test })
    }

    pub fn splits(&self) -> GraphSplits {
        GraphSplits::build(&self.train, &self.valid, &self.test, self.entities.len(), self.relations.len())
    }
}
