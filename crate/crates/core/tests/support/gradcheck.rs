//! Central finite differences against the analytic loss gradient.
#![allow(dead_code)]

use std::collections::BTreeMap;

use betae::kg::EntityId;
use betae::model::{BetaModel, Gradients, ModelConfig, ParamClass};
use betae::query::{QueryGraph, Structure};
use betae::train::{example_loss_grad, TrainExample};
use betae_oracle::{central_difference, close};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const NE: u32 = 12;
const NR: u32 = 3;
pub const H: f64 = 1e-5;
pub const REL_TOL: f64 = 1e-4;
pub const ABS_FLOOR: f64 = 1e-8;
pub const PROBES: usize = 24;

fn fill(node: &QueryGraph, rng: &mut ChaCha8Rng) -> QueryGraph {
    match node {
        QueryGraph::Anchor(_) => QueryGraph::anchor(rng.random_range(0..NE)),
        QueryGraph::Projection(_, c) => fill(c, rng).project(rng.random_range(0..NR)),
        QueryGraph::Negation(c) => fill(c, rng).negate(),
        QueryGraph::Intersection(cs) => QueryGraph::and(cs.iter().map(|c| fill(c, rng)).collect()),
        QueryGraph::Union(cs) => QueryGraph::or(cs.iter().map(|c| fill(c, rng)).collect()),
    }
}

fn loss(model: &BetaModel, ex: &TrainExample, gamma: f64) -> f64 {
    let mut g = Gradients::zeros(model);
    example_loss_grad(model, ex, gamma, &mut g).unwrap()
}

/// Up to 20 parameters of `class` with a non-zero analytic gradient, topped
/// up with arbitrary ones to `PROBES`.
fn probes(model: &BetaModel, grads: &Gradients, class: ParamClass, rng: &mut ChaCha8Rng) -> (Vec<usize>, usize) {
    let all = model.param_count(class);
    let live: Vec<usize> = (0..all).filter(|&i| grads.get(class, i) != 0.0).collect();
    let mut out: Vec<usize> = live.choose_multiple(rng, 20).copied().collect();
    while out.len() < PROBES {
        out.push(rng.random_range(0..all));
    }
    (out, live.len())
}

#[derive(Debug, Default)]
pub struct Report {
    pub probes: usize,
    pub structures: usize,
    /// Largest `|analytic - fd| / (REL_TOL·|fd| + ABS_FLOOR)`; at most 1 when all probes pass.
    pub worst_ratio: f64,
    pub failures: Vec<String>,
}

pub fn check(config: ModelConfig, seed: u64) -> Report {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gamma = 3.0;
    let mut report = Report::default();
    let mut exercised = BTreeMap::new();
    for s in Structure::TRAINABLE {
        report.structures += 1;
        let model = BetaModel::new(config.clone(), NE as usize, NR as usize, rng.random()).unwrap();
        let ex = TrainExample {
            query: fill(&s.skeleton(), &mut rng),
            positive: EntityId(rng.random_range(0..NE)),
            negatives: (0..5).map(|_| EntityId(rng.random_range(0..NE))).collect(),
        };
        let mut grads = Gradients::zeros(&model);
        example_loss_grad(&model, &ex, gamma, &mut grads).unwrap();
        for class in ParamClass::ALL {
            if model.param_count(class) == 0 {
                continue;
            }
            let (picks, live) = probes(&model, &grads, class, &mut rng);
            // a dead ReLU layer can legitimately zero a class for one query
            *exercised.entry(class).or_insert(0) += usize::from(live > 0);
            let mut probe = model.clone();
            for i in picks {
                let x = model.param(class, i);
                let fd = central_difference(
                    |t| {
                        probe.set_param(class, i, t);
                        loss(&probe, &ex, gamma)
                    },
                    x,
                    H,
                );
                probe.set_param(class, i, x);
                let analytic = grads.get(class, i);
                report.probes += 1;
                report.worst_ratio = report.worst_ratio.max((analytic - fd).abs() / (REL_TOL * fd.abs() + ABS_FLOOR));
                if !close(analytic, fd, REL_TOL, ABS_FLOOR) {
                    report.failures.push(format!("{s} {class:?}[{i}]: analytic {analytic:e}, fd {fd:e} ({})", ex.query));
                }
            }
        }
    }
    for (class, n) in exercised {
        if n < 5 {
            report.failures.push(format!("{class:?} had a non-zero gradient for only {n} structures"));
        }
    }
    report
}
