use std::collections::BTreeSet;

use super::QueryGraph;
use crate::kg::{EntityId, KnowledgeGraph};

/// `⟦q⟧` on a particular graph.
pub type AnswerSet = BTreeSet<EntityId>;

/// Exact set semantics by post-order traversal. Negation complements
/// against all entities of `g`.
pub fn evaluate(q: &QueryGraph, g: &KnowledgeGraph) -> AnswerSet {
    match q {
        QueryGraph::Anchor(v) => std::iter::once(*v).collect(),
        QueryGraph::Projection(r, c) => {
            let mut out = AnswerSet::new();
            for v in evaluate(c, g) {
                out.extend(g.neighbors(v, *r).iter().copied());
            }
            out
        }
        QueryGraph::Intersection(cs) => {
            let mut sets: Vec<AnswerSet> = cs.iter().map(|c| evaluate(c, g)).collect();
            sets.sort_by_key(|s| s.len());
            let mut iter = sets.into_iter();
            let mut acc = iter.next().unwrap_or_default();
            for s in iter {
                acc.retain(|v| s.contains(v));
            }
            acc
        }
        QueryGraph::Union(cs) => cs.iter().flat_map(|c| evaluate(c, g)).collect(),
        QueryGraph::Negation(c) => {
            let inner = evaluate(c, g);
            g.entities().filter(|v| !inner.contains(v)).collect()
        }
    }
}
