use betae::kg::{EntityId, GraphSplits, Triple};
use betae::model::{load_checkpoint, save_checkpoint, BetaModel, ModelConfig};
use betae::query::AnswerSet;
use betae::sampler::{generate_dataset, GenerateConfig, QueryInstance};
use betae::train::{sample_negatives, TrainConfig, Trainer};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const NE: usize = 30;
const NR: usize = 3;

fn train_queries() -> Vec<QueryInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let edges: Vec<Triple> = (0..150)
        .map(|_| Triple::new(rng.random_range(0..NE as u32), rng.random_range(0..NR as u32), rng.random_range(0..NE as u32)))
        .collect();
    let splits = GraphSplits::build(&edges, &[], &[], NE, NR);
    generate_dataset(&splits, &GenerateConfig::standard(50, 0), 4).dataset.train
}

fn config() -> TrainConfig {
    TrainConfig { batch_size: 16, neg_k: 8, steps: 100, seed: 21, ..TrainConfig::desk() }
}

fn small_model() -> BetaModel {
    let config = ModelConfig { dim: 6, hidden_dim: 16, attention_hidden: 8, ..ModelConfig::desk() };
    BetaModel::new(config, NE, NR, 21).unwrap()
}

fn losses(trainer: &mut Trainer) -> Vec<f64> {
    let mut out = Vec::new();
    trainer
        .run(|_, r| {
            out.push(r.loss);
            Ok(())
        })
        .unwrap();
    out
}

#[test]
fn every_structure_is_trained_and_losses_are_finite() {
    let data = train_queries();
    let mut t = Trainer::new(small_model(), &data, config()).unwrap();
    let mut seen = std::collections::BTreeSet::new();
    t.run(|_, r| {
        assert!(r.loss.is_finite() && r.loss >= 0.0, "step {}: {}", r.step, r.loss);
        seen.insert(r.structure);
        Ok(())
    })
    .unwrap();
    assert_eq!(seen.len(), 10);
    let model = t.model();
    for v in 0..NE as u32 {
        let e = model.embed_entity(EntityId(v)).unwrap();
        assert!(e.in_working_range());
        for r in 0..NR as u32 {
            assert!(model.project(&e, r).unwrap().in_working_range());
        }
    }
}

#[test]
fn same_seed_gives_the_same_trajectory() {
    let data = train_queries();
    let mut a = Trainer::new(small_model(), &data, config()).unwrap();
    let mut b = Trainer::new(small_model(), &data, config()).unwrap();
    assert_eq!(losses(&mut a), losses(&mut b));
    assert_eq!(a.model(), b.model());
}

#[test]
fn resuming_from_a_checkpoint_continues_the_same_run() {
    let data = train_queries();
    let mut straight = Trainer::new(small_model(), &data, config()).unwrap();
    let full = losses(&mut straight);

    let mut first = Trainer::new(small_model(), &data, TrainConfig { steps: 60, ..config() }).unwrap();
    let mut split = losses(&mut first);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("half.ckpt");
    save_checkpoint(&path, &first.checkpoint()).unwrap();
    let mut second = Trainer::resume(load_checkpoint(&path).unwrap(), &data, config()).unwrap();
    split.extend(losses(&mut second));

    assert_eq!(split, full);
    assert_eq!(second.model(), straight.model());
}

#[test]
fn training_reduces_the_loss() {
    let data = train_queries();
    let mut t = Trainer::new(small_model(), &data, TrainConfig { steps: 400, ..config() }).unwrap();
    let l = losses(&mut t);
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    assert!(mean(&l[300..]) < 0.8 * mean(&l[..100]), "{} -> {}", mean(&l[..100]), mean(&l[300..]));
}

#[test]
fn negatives_are_uniform_over_non_answers() {
    let answers: AnswerSet = [2, 5, 7].into_iter().map(EntityId).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut counts = [0usize; 20];
    let draws = 4000;
    for _ in 0..draws {
        for v in sample_negatives(&answers, 20, 4, &mut rng) {
            counts[v.index()] += 1;
        }
    }
    let expected = (draws * 4) as f64 / 17.0;
    let mut chi2 = 0.0;
    for (v, &c) in counts.iter().enumerate() {
        if answers.contains(&EntityId(v as u32)) {
            assert_eq!(c, 0);
        } else {
            chi2 += (c as f64 - expected).powi(2) / expected;
        }
    }
    // 16 degrees of freedom; the 99.9% quantile is 39.25
    assert!(chi2 < 39.25, "chi-square {chi2}");
}
