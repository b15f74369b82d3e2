//! Brute-force semantics for tree-shaped existential first-order queries.
//!
//! `Formula` describes a unary predicate over the free (target) variable.
//! Truth is decided for each candidate entity by enumerating every
//! assignment of the existentially bound variables and checking edge
//! membership against the raw triple set. No adjacency index is used.

use std::collections::HashSet;

#[derive(Debug, Clone)]
pub enum Formula {
    /// `x = c`
    Is(u32),
    /// `∃y. inner(y) ∧ relation(y, x)`
    Exists { relation: u32, inner: Box<Formula> },
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Not(Box<Formula>),
}

pub struct BruteForce {
    num_entities: u32,
    edges: HashSet<(u32, u32, u32)>,
}

impl BruteForce {
    pub fn new(num_entities: u32, triples: &[(u32, u32, u32)]) -> Self {
        Self { num_entities, edges: triples.iter().copied().collect() }
    }

    pub fn holds(&self, f: &Formula, x: u32) -> bool {
        match f {
            Formula::Is(c) => x == *c,
            Formula::Exists { relation, inner } => (0..self.num_entities)
                .any(|y| self.edges.contains(&(y, *relation, x)) && self.holds(inner, y)),
            Formula::And(parts) => parts.iter().all(|p| self.holds(p, x)),
            Formula::Or(parts) => parts.iter().any(|p| self.holds(p, x)),
            Formula::Not(inner) => !self.holds(inner, x),
        }
    }

    /// All entities satisfying `f`, ascending.
    pub fn answers(&self, f: &Formula) -> Vec<u32> {
        (0..self.num_entities).filter(|&x| self.holds(f, x)).collect()
    }
}
