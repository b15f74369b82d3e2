//! First-order queries as tree-shaped computation graphs.
//!
//! A query is an expression over entity sets: anchors are singleton sets,
//! projection follows a relation, and intersection, union and negation are
//! the set operations (negation complements against every entity of the
//! graph). The textual form is an s-expression:
//!
//! ```text
//! (e 7)                      anchor
//! (p 3 (e 7))                projection along relation 3
//! (and q1 q2 ...)            intersection, two or more children
//! (or q1 q2 ...)             union, two or more children
//! (not q)                    complement
//! ```

mod eval;
mod parse;
mod rewrite;
mod structure;

use std::fmt;

pub use eval::{evaluate, AnswerSet};
pub use parse::{parse_query, ParseError, ParseErrorKind};
pub use rewrite::{to_dm, to_dnf};
pub use structure::{structure_of, Structure};

use crate::error::{Error, Result};
use crate::kg::{EntityId, RelationId};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum QueryGraph {
    Anchor(EntityId),
    Projection(RelationId, Box<QueryGraph>),
    Intersection(Vec<QueryGraph>),
    Negation(Box<QueryGraph>),
    Union(Vec<QueryGraph>),
}

impl QueryGraph {
    pub fn anchor(v: u32) -> Self {
        QueryGraph::Anchor(EntityId(v))
    }

    pub fn project(self, r: u32) -> Self {
        QueryGraph::Projection(RelationId(r), Box::new(self))
    }

    pub fn negate(self) -> Self {
        QueryGraph::Negation(Box::new(self))
    }

    pub fn and(children: Vec<QueryGraph>) -> Self {
        QueryGraph::Intersection(children)
    }

    pub fn or(children: Vec<QueryGraph>) -> Self {
        QueryGraph::Union(children)
    }

    pub fn children(&self) -> &[QueryGraph] {
        match self {
            QueryGraph::Anchor(_) => &[],
            QueryGraph::Projection(_, c) | QueryGraph::Negation(c) => std::slice::from_ref(c.as_ref()),
            QueryGraph::Intersection(cs) | QueryGraph::Union(cs) => cs,
        }
    }

    /// Total number of nodes.
    pub fn size(&self) -> usize {
        1 + self.children().iter().map(QueryGraph::size).sum::<usize>()
    }

    pub fn count_unions(&self) -> usize {
        usize::from(matches!(self, QueryGraph::Union(_))) + self.children().iter().map(QueryGraph::count_unions).sum::<usize>()
    }

    pub fn contains_union(&self) -> bool {
        matches!(self, QueryGraph::Union(_)) || self.children().iter().any(QueryGraph::contains_union)
    }

    pub fn contains_negation(&self) -> bool {
        matches!(self, QueryGraph::Negation(_)) || self.children().iter().any(QueryGraph::contains_negation)
    }

    /// Anchor entities in left-to-right leaf order, repeats included.
    pub fn anchors(&self) -> Vec<EntityId> {
        let mut out = Vec::new();
        self.collect_anchors(&mut out);
        out
    }

    fn collect_anchors(&self, out: &mut Vec<EntityId>) {
        match self {
            QueryGraph::Anchor(v) => out.push(*v),
            _ => self.children().iter().for_each(|c| c.collect_anchors(out)),
        }
    }

    /// Checks every id against the graph dimensions and every n-ary node's arity.
    pub fn validate(&self, num_entities: usize, num_relations: usize) -> Result<()> {
        match self {
            QueryGraph::Anchor(v) if v.index() >= num_entities => return Err(Error::UnknownEntity(v.0)),
            QueryGraph::Projection(r, _) if r.index() >= num_relations => return Err(Error::UnknownRelation(r.0)),
            QueryGraph::Intersection(cs) | QueryGraph::Union(cs) if cs.len() < 2 => {
                return Err(Error::Unsupported(format!("n-ary node with {} children", cs.len())))
            }
            _ => {}
        }
        self.children().iter().try_for_each(|c| c.validate(num_entities, num_relations))
    }
}

impl fmt::Display for QueryGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QueryGraph::Anchor(v) => write!(f, "(e {v})"),
            QueryGraph::Projection(r, c) => write!(f, "(p {r} {c})"),
            QueryGraph::Negation(c) => write!(f, "(not {c})"),
            QueryGraph::Intersection(cs) | QueryGraph::Union(cs) => {
                f.write_str(if matches!(self, QueryGraph::Intersection(_)) { "(and" } else { "(or" })?;
                for c in cs {
                    write!(f, " {c}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn printing_is_canonical() {
        let q = QueryGraph::and(vec![QueryGraph::anchor(1).project(0), QueryGraph::anchor(4).project(1).negate()]).project(2);
        assert_eq!(q.to_string(), "(p 2 (and (p 0 (e 1)) (not (p 1 (e 4)))))");
        assert_eq!(q.size(), 7);
    }

    #[test]
    fn validation_catches_out_of_range_ids() {
        let q = QueryGraph::anchor(5).project(0);
        assert!(matches!(q.validate(5, 1), Err(Error::UnknownEntity(5))));
        assert!(matches!(q.validate(6, 0), Err(Error::UnknownRelation(0))));
        assert!(q.validate(6, 1).is_ok());
    }

    #[test]
    fn anchors_keep_repeats() {
        let q = QueryGraph::and(vec![QueryGraph::anchor(3).project(0), QueryGraph::anchor(3).project(1)]);
        assert_eq!(q.anchors(), vec![EntityId(3), EntityId(3)]);
    }
}
