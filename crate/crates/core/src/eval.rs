//! Ranking metrics and uncertainty analyses.
//!
//! Each hard answer of a query is ranked by distance against every entity
//! that is not a known answer (filtered setting). Ties count half: the
//! rank is the mean of the optimistic and pessimistic ranks. MRR and
//! Hits@K are averaged over a query's hard answers, then over queries.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kg::EntityId;
use crate::model::{BetaModel, QueryEmbedding, Scorer, UnionMode};
use crate::query::{AnswerSet, QueryGraph, Structure};
use crate::sampler::QueryInstance;

pub const DEFAULT_KS: [usize; 3] = [1, 3, 10];

/// Rank of `answer` among itself and all entities outside `filter`; lower
/// distance ranks higher.
pub fn filtered_rank(distances: &[f64], answer: EntityId, filter: &AnswerSet) -> f64 {
    let target = distances[answer.index()];
    let mut better = 0usize;
    let mut tied = 0usize;
    for (i, &d) in distances.iter().enumerate() {
        if filter.contains(&EntityId(i as u32)) {
            continue;
        }
        if d < target {
            better += 1;
        } else if d == target {
            tied += 1;
        }
    }
    1.0 + better as f64 + tied as f64 / 2.0
}

/// One line of a rank dump.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankRecord {
    pub query_id: usize,
    pub answer: EntityId,
    pub rank: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructureMetrics {
    pub queries: usize,
    pub pairs: usize,
    pub mrr: f64,
    /// `(K, Hits@K)`, ascending in K.
    pub hits: Vec<(usize, f64)>,
}

/// Aggregates a rank dump. `structures[query_id]` names each query's
/// structure. Queries are taken in dump order.
pub fn metrics_from_ranks(
    ranks: &[RankRecord],
    structures: &[Structure],
    ks: &[usize],
) -> BTreeMap<Structure, StructureMetrics> {
    // per-query sums, in first-appearance order
    let mut per_query: Vec<(usize, usize, f64, Vec<f64>)> = Vec::new();
    let mut slot: BTreeMap<usize, usize> = BTreeMap::new();
    for r in ranks {
        let i = *slot.entry(r.query_id).or_insert_with(|| {
            per_query.push((r.query_id, 0, 0.0, vec![0.0; ks.len()]));
            per_query.len() - 1
        });
        let q = &mut per_query[i];
        q.1 += 1;
        q.2 += 1.0 / r.rank;
        for (h, &k) in q.3.iter_mut().zip(ks) {
            if r.rank <= k as f64 {
                *h += 1.0;
            }
        }
    }
    let mut acc: BTreeMap<Structure, (usize, usize, f64, Vec<f64>)> = BTreeMap::new();
    for (qid, pairs, rr, hits) in per_query {
        let n = pairs as f64;
        let e = acc.entry(structures[qid]).or_insert_with(|| (0, 0, 0.0, vec![0.0; ks.len()]));
        e.0 += 1;
        e.1 += pairs;
        e.2 += rr / n;
        for (a, h) in e.3.iter_mut().zip(&hits) {
            *a += h / n;
        }
    }
    acc.into_iter()
        .map(|(s, (queries, pairs, rr, hits))| {
            let q = queries as f64;
            let hits = ks.iter().zip(hits).map(|(&k, h)| (k, h / q)).collect();
            (s, StructureMetrics { queries, pairs, mrr: rr / q, hits })
        })
        .collect()
}

/// Unweighted mean over the listed structures that are present.
pub fn average(per_structure: &BTreeMap<Structure, StructureMetrics>, over: &[Structure]) -> Option<StructureMetrics> {
    let rows: Vec<&StructureMetrics> = over.iter().filter_map(|s| per_structure.get(s)).collect();
    let first = rows.first()?;
    let n = rows.len() as f64;
    Some(StructureMetrics {
        queries: rows.iter().map(|r| r.queries).sum(),
        pairs: rows.iter().map(|r| r.pairs).sum(),
        mrr: rows.iter().map(|r| r.mrr).sum::<f64>() / n,
        hits: first
            .hits
            .iter()
            .enumerate()
            .map(|(i, &(k, _))| (k, rows.iter().map(|r| r.hits[i].1).sum::<f64>() / n))
            .collect(),
    })
}

/// Results under one union mode. Union-free queries rank identically in
/// both modes and appear in each.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeReport {
    pub mode: UnionMode,
    pub per_structure: BTreeMap<Structure, StructureMetrics>,
    pub ranks: Vec<RankRecord>,
}

impl ModeReport {
    pub fn epfo_average(&self) -> Option<StructureMetrics> {
        average(&self.per_structure, &Structure::EPFO)
    }

    pub fn negation_average(&self) -> Option<StructureMetrics> {
        average(&self.per_structure, &Structure::NEGATION)
    }

    /// `query_id<TAB>answer_id<TAB>rank` lines.
    pub fn rank_dump(&self) -> String {
        let mut out = String::new();
        for r in &self.ranks {
            writeln!(out, "{}\t{}\t{}", r.query_id, r.answer, r.rank).expect("write to string");
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub ks: Vec<usize>,
    pub modes: Vec<ModeReport>,
}

fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

impl EvalReport {
    /// Aligned text table; metrics in percent.
    pub fn table(&self) -> String {
        let mut header = vec!["structure".to_string(), "union".into(), "queries".into(), "pairs".into(), "MRR".into()];
        header.extend(self.ks.iter().map(|k| format!("H@{k}")));
        let mut rows = vec![header];
        let mut push = |name: String, mode: &str, m: &StructureMetrics| {
            let mut row = vec![name, mode.to_string(), m.queries.to_string(), m.pairs.to_string(), pct(m.mrr)];
            row.extend(m.hits.iter().map(|&(_, h)| pct(h)));
            rows.push(row);
        };
        if let Some(first) = self.modes.first() {
            for (s, m) in &first.per_structure {
                if !s.has_union() {
                    // identical in every mode
                    push(s.to_string(), "-", m);
                    continue;
                }
                for rep in &self.modes {
                    if let Some(m) = rep.per_structure.get(s) {
                        push(s.to_string(), mode_name(rep.mode), m);
                    }
                }
            }
        }
        for rep in &self.modes {
            if let Some(m) = rep.epfo_average() {
                push("avg-epfo".into(), mode_name(rep.mode), &m);
            }
        }
        if let Some(m) = self.modes.first().and_then(ModeReport::negation_average) {
            push("avg-neg".into(), "-", &m);
        }
        let widths: Vec<usize> = (0..rows[0].len()).map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0)).collect();
        let mut out = String::new();
        for row in rows {
            let cells: Vec<String> = row
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(c, (v, &w))| if c < 2 { format!("{v:<w$}") } else { format!("{v:>w$}") })
                .collect();
            writeln!(out, "{}", cells.join("  ").trim_end()).expect("write to string");
        }
        out
    }

    /// One JSON object per line per (mode, structure) and per average.
    pub fn records(&self) -> String {
        #[derive(Serialize)]
        struct Line<'a> {
            union: &'a str,
            structure: String,
            #[serde(flatten)]
            metrics: &'a StructureMetrics,
        }
        let mut out = String::new();
        for rep in &self.modes {
            let averages = [("avg-epfo", rep.epfo_average()), ("avg-neg", rep.negation_average())];
            let rows = rep.per_structure.iter().map(|(s, m)| (s.to_string(), m.clone())).chain(
                averages.into_iter().filter_map(|(name, m)| m.map(|m| (name.to_string(), m))),
            );
            for (structure, metrics) in rows {
                let line = Line { union: mode_name(rep.mode), structure, metrics: &metrics };
                writeln!(out, "{}", serde_json::to_string(&line).expect("serializable")).expect("write to string");
            }
        }
        out
    }
}

fn mode_name(m: UnionMode) -> &'static str {
    match m {
        UnionMode::Dnf => "dnf",
        UnionMode::Dm => "dm",
    }
}

fn rank_query(scorer: &Scorer, inst: &QueryInstance, qid: usize, mode: UnionMode) -> Result<Vec<RankRecord>> {
    let emb = scorer.model().embed_query(&inst.query, mode)?;
    let distances = scorer.distances(&emb);
    let filter = inst.all_answers();
    Ok(inst
        .hard
        .iter()
        .map(|&answer| RankRecord { query_id: qid, answer, rank: filtered_rank(&distances, answer, &filter) })
        .collect())
}

/// Ranks every hard answer of every query under each requested union mode.
/// Query ids are positions in `instances`.
pub fn evaluate_split(model: &BetaModel, instances: &[QueryInstance], modes: &[UnionMode], ks: &[usize]) -> Result<EvalReport> {
    if modes.is_empty() {
        return Err(Error::Config("at least one union mode is required".into()));
    }
    let scorer = Scorer::new(model);
    let structures: Vec<Structure> = instances.iter().map(|i| i.structure).collect();
    let shared: Vec<Vec<RankRecord>> = instances
        .par_iter()
        .enumerate()
        .map(|(qid, inst)| {
            if inst.query.contains_union() {
                Ok(Vec::new())
            } else {
                rank_query(&scorer, inst, qid, modes[0])
            }
        })
        .collect::<Result<_>>()?;
    let mut reports = Vec::new();
    for &mode in modes {
        let per_query: Vec<Vec<RankRecord>> = instances
            .par_iter()
            .enumerate()
            .map(|(qid, inst)| {
                if inst.query.contains_union() {
                    rank_query(&scorer, inst, qid, mode)
                } else {
                    Ok(shared[qid].clone())
                }
            })
            .collect::<Result<_>>()?;
        let ranks: Vec<RankRecord> = per_query.into_iter().flatten().collect();
        let per_structure = metrics_from_ranks(&ranks, &structures, ks);
        reports.push(ModeReport { mode, per_structure, ranks });
    }
    Ok(EvalReport { ks: ks.to_vec(), modes: reports })
}

/// Average ranks (1-based), ties sharing the mean of their positions.
fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Pearson correlation; `None` for fewer than three points or zero variance.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Spearman rank correlation (Pearson on average ranks).
pub fn spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() {
        return None;
    }
    pearson(&average_ranks(xs), &average_ranks(ys))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationRow {
    pub structure: Structure,
    pub queries: usize,
    pub srcc: Option<f64>,
    pub pcc: Option<f64>,
}

/// Summed differential entropy of the query embedding. Unions are embedded
/// in De Morgan form so that every query has a single embedding.
pub fn query_entropy(model: &BetaModel, q: &QueryGraph) -> Result<f64> {
    match model.embed_query(q, UnionMode::Dm)? {
        QueryEmbedding::Single(e) => Ok(e.entropy()),
        QueryEmbedding::Disjuncts(_) => unreachable!("De Morgan form has one embedding"),
    }
}

/// Correlation between query entropy and `|easy ∪ hard|`, per structure.
pub fn uncertainty_correlation(model: &BetaModel, instances: &[QueryInstance]) -> Result<Vec<CorrelationRow>> {
    let entropies: Vec<f64> = instances.par_iter().map(|i| query_entropy(model, &i.query)).collect::<Result<_>>()?;
    let mut groups: BTreeMap<Structure, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for (inst, h) in instances.iter().zip(entropies) {
        let g = groups.entry(inst.structure).or_default();
        g.0.push(h);
        g.1.push((inst.easy.len() + inst.hard.len()) as f64);
    }
    Ok(groups
        .into_iter()
        .map(|(structure, (h, card))| CorrelationRow {
            structure,
            queries: h.len(),
            srcc: spearman(&h, &card),
            pcc: pearson(&h, &card),
        })
        .collect())
}

/// ROC-AUC of `positives` scoring above `negatives` via the Mann–Whitney
/// statistic; ties count half.
pub fn roc_auc(positives: &[f64], negatives: &[f64]) -> Result<f64> {
    if positives.is_empty() || negatives.is_empty() {
        return Err(Error::Config("AUC needs at least one query in each pool".into()));
    }
    let all: Vec<f64> = positives.iter().chain(negatives).copied().collect();
    let ranks = average_ranks(&all);
    let rank_sum: f64 = ranks[..positives.len()].iter().sum();
    let np = positives.len() as f64;
    let nn = negatives.len() as f64;
    Ok((rank_sum - np * (np + 1.0) / 2.0) / (np * nn))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AucRow {
    /// `None` for the pooled row.
    pub structure: Option<Structure>,
    pub nonempty: usize,
    pub empty: usize,
    pub auc: f64,
}

/// How well query entropy separates queries with answers (positive class,
/// expected to score higher) from queries without.
pub fn empty_answer_auc(
    model: &BetaModel,
    nonempty: &[(Structure, QueryGraph)],
    empty: &[(Structure, QueryGraph)],
) -> Result<Vec<AucRow>> {
    let score = |pool: &[(Structure, QueryGraph)]| -> Result<Vec<(Structure, f64)>> {
        pool.par_iter().map(|(s, q)| query_entropy(model, q).map(|h| (*s, h))).collect()
    };
    let pos = score(nonempty)?;
    let neg = score(empty)?;
    let mut rows = Vec::new();
    let structures: std::collections::BTreeSet<Structure> = pos.iter().chain(&neg).map(|(s, _)| *s).collect();
    for s in structures {
        let p: Vec<f64> = pos.iter().filter(|(t, _)| *t == s).map(|(_, h)| *h).collect();
        let n: Vec<f64> = neg.iter().filter(|(t, _)| *t == s).map(|(_, h)| *h).collect();
        if !p.is_empty() && !n.is_empty() {
            rows.push(AucRow { structure: Some(s), nonempty: p.len(), empty: n.len(), auc: roc_auc(&p, &n)? });
        }
    }
    let p: Vec<f64> = pos.iter().map(|(_, h)| *h).collect();
    let n: Vec<f64> = neg.iter().map(|(_, h)| *h).collect();
    rows.push(AucRow { structure: None, nonempty: p.len(), empty: n.len(), auc: roc_auc(&p, &n)? });
    Ok(rows)
}
