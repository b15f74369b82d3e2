//! Summed KL distances with the special-function terms cached per side.
//!
//! `KL(p ‖ q) = lnB(q) − lnB(p) + (a_p − a_q)ψ(a_p) + (b_p − b_q)ψ(b_p)
//!            + (a_q − a_p + b_q − b_p)ψ(a_p + b_p)`
//!
//! Only `lnB(q)` depends on the query alone and everything else involving
//! a special function depends on the entity alone, so a distance costs a
//! few multiply-adds per dimension once both sides are prepared.

use rayon::prelude::*;

use super::{BetaModel, QueryEmbedding};
use crate::beta::{digamma_unchecked, ln_beta_unchecked, trigamma_unchecked};

#[derive(Debug, Clone)]
pub(crate) struct EntityStats {
    params: Vec<f64>,
    ln_beta: Vec<f64>,
    psi_a: Vec<f64>,
    psi_b: Vec<f64>,
    psi_s: Vec<f64>,
    /// `ψ₁(a), ψ₁(b), ψ₁(a + b)`, only when gradients are needed.
    trigamma: Option<[Vec<f64>; 3]>,
}

impl EntityStats {
    pub(crate) fn new(params: Vec<f64>, with_grad: bool) -> Self {
        let n = params.len() / 2;
        let (a, b) = params.split_at(n);
        let s: Vec<f64> = a.iter().zip(b).map(|(x, y)| x + y).collect();
        let trigamma = with_grad.then(|| {
            [
                a.iter().map(|&x| trigamma_unchecked(x)).collect(),
                b.iter().map(|&x| trigamma_unchecked(x)).collect(),
                s.iter().map(|&x| trigamma_unchecked(x)).collect(),
            ]
        });
        Self {
            ln_beta: a.iter().zip(b).map(|(&x, &y)| ln_beta_unchecked(x, y)).collect(),
            psi_a: a.iter().map(|&x| digamma_unchecked(x)).collect(),
            psi_b: b.iter().map(|&x| digamma_unchecked(x)).collect(),
            psi_s: s.iter().map(|&x| digamma_unchecked(x)).collect(),
            trigamma,
            params,
        }
    }

    pub(crate) fn distance(&self, q: &QueryStats) -> f64 {
        let n = self.ln_beta.len();
        let (ap, bp) = self.params.split_at(n);
        let (aq, bq) = q.params.split_at(n);
        let mut total = 0.0;
        for d in 0..n {
            total += q.ln_beta[d] - self.ln_beta[d]
                + (ap[d] - aq[d]) * self.psi_a[d]
                + (bp[d] - bq[d]) * self.psi_b[d]
                + (aq[d] - ap[d] + bq[d] - bp[d]) * self.psi_s[d];
        }
        total
    }

    /// Adds `scale · ∂D/∂(entity params)` to `d_entity` and
    /// `scale · ∂D/∂(query params)` to `d_query`.
    pub(crate) fn distance_grad(&self, q: &QueryStats, scale: f64, d_entity: &mut [f64], d_query: &mut [f64]) {
        let n = self.ln_beta.len();
        let [tri_a, tri_b, tri_s] = self.trigamma.as_ref().expect("entity stats built with gradients");
        let (psi_aq, psi_bq, psi_sq) = q.digamma.as_ref().expect("query stats built with gradients");
        let (ap, bp) = self.params.split_at(n);
        let (aq, bq) = q.params.split_at(n);
        for d in 0..n {
            let cross = aq[d] - ap[d] + bq[d] - bp[d];
            d_entity[d] += scale * ((ap[d] - aq[d]) * tri_a[d] + cross * tri_s[d]);
            d_entity[n + d] += scale * ((bp[d] - bq[d]) * tri_b[d] + cross * tri_s[d]);
            d_query[d] += scale * (psi_aq[d] - psi_sq[d] - self.psi_a[d] + self.psi_s[d]);
            d_query[n + d] += scale * (psi_bq[d] - psi_sq[d] - self.psi_b[d] + self.psi_s[d]);
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct QueryStats {
    params: Vec<f64>,
    ln_beta: Vec<f64>,
    /// `ψ(a), ψ(b), ψ(a + b)`, only when gradients are needed.
    digamma: Option<(Vec<f64>, Vec<f64>, Vec<f64>)>,
}

impl QueryStats {
    pub(crate) fn new(params: Vec<f64>, with_grad: bool) -> Self {
        let n = params.len() / 2;
        let (a, b) = params.split_at(n);
        let digamma = with_grad.then(|| {
            (
                a.iter().map(|&x| digamma_unchecked(x)).collect(),
                b.iter().map(|&x| digamma_unchecked(x)).collect(),
                a.iter().zip(b).map(|(&x, &y)| digamma_unchecked(x + y)).collect(),
            )
        });
        Self { ln_beta: a.iter().zip(b).map(|(&x, &y)| ln_beta_unchecked(x, y)).collect(), digamma, params }
    }
}

/// Distances from every entity to query embeddings, with entity terms
/// computed once.
pub struct Scorer<'a> {
    model: &'a BetaModel,
    entities: Vec<EntityStats>,
}

impl<'a> Scorer<'a> {
    pub fn new(model: &'a BetaModel) -> Self {
        let entities = (0..model.num_entities as u32)
            .into_par_iter()
            .map(|v| EntityStats::new(model.entity_flat(v).0, false))
            .collect();
        Self { model, entities }
    }

    pub fn model(&self) -> &BetaModel {
        self.model
    }

    /// Distance of every entity to `q`; for several disjuncts the minimum.
    pub fn distances(&self, q: &QueryEmbedding) -> Vec<f64> {
        let parts: Vec<QueryStats> = q.parts().iter().map(|e| QueryStats::new(e.to_flat(), false)).collect();
        self.entities
            .iter()
            .map(|e| parts.iter().map(|p| e.distance(p)).fold(f64::INFINITY, f64::min))
            .collect()
    }
}
