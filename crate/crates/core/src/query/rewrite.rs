//! Union elimination: De Morgan form and disjunctive normal form.

use super::QueryGraph;
use crate::error::{Error, Result};

/// Replaces every `Union(a, b, ..)` with `Negation(Intersection(Negation(a), Negation(b), ..))`.
///
/// Each union of arity `k` adds `k + 1` nodes, so the output size is linear
/// in the number of unions.
pub fn to_dm(q: &QueryGraph) -> QueryGraph {
    match q {
        QueryGraph::Anchor(_) => q.clone(),
        QueryGraph::Projection(r, c) => QueryGraph::Projection(*r, Box::new(to_dm(c))),
        QueryGraph::Negation(c) => QueryGraph::Negation(Box::new(to_dm(c))),
        QueryGraph::Intersection(cs) => QueryGraph::Intersection(cs.iter().map(to_dm).collect()),
        QueryGraph::Union(cs) => QueryGraph::Negation(Box::new(QueryGraph::Intersection(
            cs.iter().map(|c| QueryGraph::Negation(Box::new(to_dm(c)))).collect(),
        ))),
    }
}

/// Lifts every union to the top, returning union-free disjuncts whose
/// answer sets union to the answer set of `q`.
///
/// Projection and intersection distribute over union. A negation whose
/// operand contains a union is rejected; lifting through it would need
/// conjunctions of negations rather than a plain disjunct list.
pub fn to_dnf(q: &QueryGraph) -> Result<Vec<QueryGraph>> {
    match q {
        QueryGraph::Anchor(_) => Ok(vec![q.clone()]),
        QueryGraph::Projection(r, c) => {
            Ok(to_dnf(c)?.into_iter().map(|d| QueryGraph::Projection(*r, Box::new(d))).collect())
        }
        QueryGraph::Negation(c) => {
            if c.contains_union() {
                return Err(Error::Unsupported(format!("negation over a union cannot be lifted to DNF: {q}")));
            }
            Ok(vec![q.clone()])
        }
        QueryGraph::Union(cs) => {
            let mut out = Vec::new();
            for c in cs {
                out.extend(to_dnf(c)?);
            }
            Ok(out)
        }
        QueryGraph::Intersection(cs) => {
            let mut combos: Vec<Vec<QueryGraph>> = vec![Vec::new()];
            for c in cs {
                let parts = to_dnf(c)?;
                combos = combos
                    .into_iter()
                    .flat_map(|prefix| {
                        parts.iter().map(move |p| {
                            let mut next = prefix.clone();
                            next.push(p.clone());
                            next
                        })
                    })
                    .collect();
            }
            Ok(combos.into_iter().map(QueryGraph::Intersection).collect())
        }
    }
}
