//! The fourteen query structures and structural matching.
//!
//! Naming: `p` projection, `i` intersection, `u` union, `n` negation.
//! `pin` negates the one-hop branch of `pi`, `pni` negates the two-hop
//! branch, and `inp` is `ip` with one intersected branch negated.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::QueryGraph;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Structure {
    P1,
    P2,
    P3,
    I2,
    I3,
    Ip,
    Pi,
    U2,
    Up,
    In2,
    In3,
    Inp,
    Pin,
    Pni,
}

impl Structure {
    pub const ALL: [Structure; 14] = [
        Structure::P1,
        Structure::P2,
        Structure::P3,
        Structure::I2,
        Structure::I3,
        Structure::Ip,
        Structure::Pi,
        Structure::U2,
        Structure::Up,
        Structure::In2,
        Structure::In3,
        Structure::Inp,
        Structure::Pin,
        Structure::Pni,
    ];

    /// The five conjunctive and five negation structures used for training.
    pub const TRAINABLE: [Structure; 10] = [
        Structure::P1,
        Structure::P2,
        Structure::P3,
        Structure::I2,
        Structure::I3,
        Structure::In2,
        Structure::In3,
        Structure::Inp,
        Structure::Pin,
        Structure::Pni,
    ];

    /// Existential positive structures (no negation).
    pub const EPFO: [Structure; 9] = [
        Structure::P1,
        Structure::P2,
        Structure::P3,
        Structure::I2,
        Structure::I3,
        Structure::Ip,
        Structure::Pi,
        Structure::U2,
        Structure::Up,
    ];

    pub const NEGATION: [Structure; 5] =
        [Structure::In2, Structure::In3, Structure::Inp, Structure::Pin, Structure::Pni];

    pub fn name(self) -> &'static str {
        match self {
            Structure::P1 => "1p",
            Structure::P2 => "2p",
            Structure::P3 => "3p",
            Structure::I2 => "2i",
            Structure::I3 => "3i",
            Structure::Ip => "ip",
            Structure::Pi => "pi",
            Structure::U2 => "2u",
            Structure::Up => "up",
            Structure::In2 => "2in",
            Structure::In3 => "3in",
            Structure::Inp => "inp",
            Structure::Pin => "pin",
            Structure::Pni => "pni",
        }
    }

    pub fn index(self) -> usize {
        Structure::ALL.iter().position(|&s| s == self).expect("listed")
    }

    pub fn is_trainable(self) -> bool {
        Structure::TRAINABLE.contains(&self)
    }

    pub fn has_negation(self) -> bool {
        Structure::NEGATION.contains(&self)
    }

    pub fn has_union(self) -> bool {
        matches!(self, Structure::U2 | Structure::Up)
    }

    /// Uninstantiated shape; every anchor is entity 0 and every relation 0.
    pub fn skeleton(self) -> QueryGraph {
        let e = || QueryGraph::anchor(0);
        let p1 = || e().project(0);
        let p2 = || p1().project(0);
        match self {
            Structure::P1 => p1(),
            Structure::P2 => p2(),
            Structure::P3 => p2().project(0),
            Structure::I2 => QueryGraph::and(vec![p1(), p1()]),
            Structure::I3 => QueryGraph::and(vec![p1(), p1(), p1()]),
            Structure::Ip => QueryGraph::and(vec![p1(), p1()]).project(0),
            Structure::Pi => QueryGraph::and(vec![p2(), p1()]),
            Structure::U2 => QueryGraph::or(vec![p1(), p1()]),
            Structure::Up => QueryGraph::or(vec![p1(), p1()]).project(0),
            Structure::In2 => QueryGraph::and(vec![p1(), p1().negate()]),
            Structure::In3 => QueryGraph::and(vec![p1(), p1(), p1().negate()]),
            Structure::Inp => QueryGraph::and(vec![p1(), p1().negate()]).project(0),
            Structure::Pin => QueryGraph::and(vec![p2(), p1().negate()]),
            Structure::Pni => QueryGraph::and(vec![p2().negate(), p1()]),
        }
    }
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Structure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Structure::ALL
            .iter()
            .copied()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown query structure {s:?}")))
    }
}

/// Shape with ids erased; operands of `and`/`or` are sorted so matching
/// ignores operand order.
fn shape(q: &QueryGraph) -> String {
    match q {
        QueryGraph::Anchor(_) => "e".into(),
        QueryGraph::Projection(_, c) => format!("p({})", shape(c)),
        QueryGraph::Negation(c) => format!("n({})", shape(c)),
        QueryGraph::Intersection(cs) | QueryGraph::Union(cs) => {
            let mut parts: Vec<String> = cs.iter().map(shape).collect();
            parts.sort();
            let op = if matches!(q, QueryGraph::Intersection(_)) { "i" } else { "u" };
            format!("{op}({})", parts.join(","))
        }
    }
}

/// Name of the structure `q` instantiates.
pub fn structure_of(q: &QueryGraph) -> Result<Structure> {
    let s = shape(q);
    Structure::ALL
        .iter()
        .copied()
        .find(|st| shape(&st.skeleton()) == s)
        .ok_or_else(|| Error::NoStructure(q.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::parse_query;

    #[test]
    fn names_round_trip() {
        for s in Structure::ALL {
            assert_eq!(s.name().parse::<Structure>().unwrap(), s);
            assert_eq!(structure_of(&s.skeleton()).unwrap(), s);
        }
        assert_eq!(Structure::TRAINABLE.len() + 4, Structure::ALL.len());
    }

    #[test]
    fn one_hop() {
        assert_eq!(structure_of(&parse_query("(p 4 (e 9))").unwrap()).unwrap(), Structure::P1);
    }

    #[test]
    fn two_in() {
        let q = parse_query("(and (p 1 (e 2)) (not (p 3 (e 4))))").unwrap();
        assert_eq!(structure_of(&q).unwrap(), Structure::In2);
        let swapped = parse_query("(and (not (p 3 (e 4))) (p 1 (e 2)))").unwrap();
        assert_eq!(structure_of(&swapped).unwrap(), Structure::In2);
    }

    #[test]
    fn pin_and_pni_differ_by_negated_branch() {
        let pin = parse_query("(and (p 0 (p 1 (e 2))) (not (p 3 (e 4))))").unwrap();
        let pni = parse_query("(and (not (p 0 (p 1 (e 2)))) (p 3 (e 4)))").unwrap();
        assert_eq!(structure_of(&pin).unwrap(), Structure::Pin);
        assert_eq!(structure_of(&pni).unwrap(), Structure::Pni);
    }

    #[test]
    fn negated_intersection_then_projection_is_inp() {
        let q = parse_query("(p 2 (and (p 0 (e 1)) (not (p 1 (e 4)))))").unwrap();
        assert_eq!(structure_of(&q).unwrap(), Structure::Inp);
    }

    #[test]
    fn arbitrary_trees_do_not_match() {
        let q = parse_query("(p 0 (p 0 (p 0 (p 0 (e 1)))))").unwrap();
        assert!(matches!(structure_of(&q), Err(Error::NoStructure(_))));
        assert!(structure_of(&QueryGraph::anchor(1)).is_err());
    }
}
