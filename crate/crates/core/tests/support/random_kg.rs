//! Small random graphs paired with the brute-force first-order oracle.
#![allow(dead_code)]

use betae::kg::{EntityId, KnowledgeGraph, Triple};
use betae::query::{AnswerSet, QueryGraph, Structure};
use betae_oracle::fol::{BruteForce, Formula};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn to_formula(q: &QueryGraph) -> Formula {
    match q {
        QueryGraph::Anchor(v) => Formula::Is(v.0),
        QueryGraph::Projection(r, c) => Formula::Exists { relation: r.0, inner: Box::new(to_formula(c)) },
        QueryGraph::Intersection(cs) => Formula::And(cs.iter().map(to_formula).collect()),
        QueryGraph::Union(cs) => Formula::Or(cs.iter().map(to_formula).collect()),
        QueryGraph::Negation(c) => Formula::Not(Box::new(to_formula(c))),
    }
}

pub struct Random {
    pub graph: KnowledgeGraph,
    pub oracle: BruteForce,
}

/// At most 30 entities, 4 relations and 3 edges per entity.
pub fn random_kg(rng: &mut ChaCha8Rng) -> Random {
    let ne = rng.random_range(3..=30u32);
    let nr = rng.random_range(1..=4u32);
    let edges = rng.random_range(0..=(ne * 3));
    let raw: Vec<(u32, u32, u32)> = (0..edges)
        .map(|_| (rng.random_range(0..ne), rng.random_range(0..nr), rng.random_range(0..ne)))
        .collect();
    let triples: Vec<Triple> = raw.iter().map(|&(h, r, t)| Triple::new(h, r, t)).collect();
    Random { graph: KnowledgeGraph::build(&triples, ne as usize, nr as usize), oracle: BruteForce::new(ne, &raw) }
}

pub fn oracle_answers(kg: &Random, q: &QueryGraph) -> AnswerSet {
    kg.oracle.answers(&to_formula(q)).into_iter().map(EntityId).collect()
}

/// A template filled with arbitrary anchors and relations.
pub fn random_fill(s: Structure, g: &KnowledgeGraph, rng: &mut ChaCha8Rng) -> QueryGraph {
    fn go(node: &QueryGraph, g: &KnowledgeGraph, rng: &mut ChaCha8Rng) -> QueryGraph {
        match node {
            QueryGraph::Anchor(_) => QueryGraph::anchor(rng.random_range(0..g.num_entities() as u32)),
            QueryGraph::Projection(_, c) => go(c, g, rng).project(rng.random_range(0..g.num_relations() as u32)),
            QueryGraph::Negation(c) => go(c, g, rng).negate(),
            QueryGraph::Intersection(cs) => QueryGraph::and(cs.iter().map(|c| go(c, g, rng)).collect()),
            QueryGraph::Union(cs) => QueryGraph::or(cs.iter().map(|c| go(c, g, rng)).collect()),
        }
    }
    go(&s.skeleton(), g, rng)
}

/// Sum over unions of `arity + 1`: the node count De Morgan adds.
pub fn union_overhead(q: &QueryGraph) -> usize {
    let own = match q {
        QueryGraph::Union(cs) => cs.len() + 1,
        _ => 0,
    };
    own + q.children().iter().map(union_overhead).sum::<usize>()
}

/// `(a1 or b1) and ... and (an or bn)`, each branch a one-hop projection.
pub fn dnf_worst_case(n: usize) -> QueryGraph {
    let clause = |i: usize| {
        let i = i as u32;
        QueryGraph::or(vec![QueryGraph::anchor(2 * i).project(0), QueryGraph::anchor(2 * i + 1).project(0)])
    };
    if n == 1 {
        clause(0)
    } else {
        QueryGraph::and((0..n).map(clause).collect())
    }
}
