use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use betae::dataset::{load_dataset, save_dataset};
use betae::eval::{empty_answer_auc, evaluate_split, uncertainty_correlation, EvalReport};
use betae::kg::{load_vocab, GraphDir, GraphSplits, GRAPH_FILES};
use betae::model::{load_checkpoint, save_checkpoint, BetaModel, Checkpoint, ModelConfig, Scorer};
use betae::query::{parse_query, Structure};
use betae::sampler::{generate_dataset, sample_empty_queries, sample_large_queries, split_stats, GenerateConfig, Split};
use betae::seed::derive_seed;
use betae::train::{TrainConfig, TrainMeta, Trainer};
use betae::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::config;
use crate::{
    AnswerArgs, ClassifyArgs, CorrelateArgs, EvalArgs, GenerateArgs, GraphArgs, IngestArgs, SplitArg, TrainArgs,
    UnionArg,
};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    fs::write(path, body).map_err(io_err(path))
}

/// Left-aligns the first column and right-aligns the rest.
fn render_table(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> =
        (0..cols).map(|c| rows.iter().filter_map(|r| r.get(c)).map(String::len).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for row in rows {
        let cells: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, v)| if c == 0 { format!("{v:<w$}", w = widths[c]) } else { format!("{v:>w$}", w = widths[c]) })
            .collect();
        writeln!(out, "{}", cells.join("  ").trim_end()).expect("write to string");
    }
    out
}

fn load_graphs(args: &GraphArgs) -> Result<(GraphDir, GraphSplits)> {
    let dir = GraphDir::load(&args.graph_dir, args.add_inverse)?;
    let splits = dir.splits();
    Ok((dir, splits))
}

fn load_model(path: &Path, splits: &GraphSplits) -> Result<Checkpoint> {
    let ckpt = load_checkpoint(path)?;
    ckpt.ensure_compatible(splits.num_entities(), splits.num_relations(), None)?;
    Ok(ckpt)
}

fn split_of(arg: SplitArg) -> Split {
    match arg {
        SplitArg::Valid => Split::Valid,
        SplitArg::Test => Split::Test,
    }
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

pub fn ingest(args: &IngestArgs) -> Result<()> {
    let (dir, splits) = load_graphs(&args.graph)?;
    let mut manifest = String::new();
    for name in GRAPH_FILES {
        writeln!(manifest, "{}  {name}", sha256_file(&args.graph.graph_dir.join(name))?).expect("write to string");
    }
    let manifest_path = args.graph.graph_dir.join("manifest.sha256");
    write_file(&manifest_path, &manifest)?;
    println!(
        "{} entities, {} relations, {}/{}/{} edges",
        dir.entities.len(),
        dir.relations.len(),
        dir.train.len(),
        dir.valid.len(),
        dir.test.len()
    );
    let rows = vec![
        vec!["graph".to_string(), "edges".into(), "checksum".into()],
        vec!["train".into(), splits.train.num_edges().to_string(), splits.train.checksum()],
        vec!["train+valid".into(), splits.valid.num_edges().to_string(), splits.valid.checksum()],
        vec!["train+valid+test".into(), splits.test.num_edges().to_string(), splits.test.checksum()],
    ];
    print!("{}", render_table(&rows));
    println!("manifest written to {}", manifest_path.display());
    Ok(())
}

pub fn generate(args: &GenerateArgs) -> Result<()> {
    let (_, splits) = load_graphs(&args.graph)?;
    let mut config = GenerateConfig::standard(args.train_queries, args.eval_queries);
    config.max_answers = args.max_answers;
    config.exhaustive_1p = args.exhaustive_1p;
    let generated = generate_dataset(&splits, &config, args.seed);
    fs::create_dir_all(&args.dataset_dir).map_err(io_err(&args.dataset_dir))?;
    save_dataset(&args.dataset_dir, &generated.dataset, &splits)?;
    let mut rows = vec![vec!["split".to_string(), "structure".into(), "queries".into(), "avg answers".into(), "avg hard".into()]];
    for split in Split::ALL {
        for s in split_stats(generated.dataset.split(split)) {
            rows.push(vec![
                split.name().to_string(),
                s.structure.to_string(),
                s.count.to_string(),
                format!("{:.1}", s.avg_answers),
                format!("{:.1}", s.avg_hard_answers),
            ]);
        }
    }
    print!("{}", render_table(&rows));
    println!("seed {}; dataset written to {}", args.seed, args.dataset_dir.display());
    Ok(())
}

fn metrics_log_path(args: &TrainArgs) -> PathBuf {
    args.metrics_log.clone().unwrap_or_else(|| {
        let mut p = args.checkpoint.clone().into_os_string();
        p.push(".metrics.tsv");
        p.into()
    })
}

pub fn train(args: &TrainArgs) -> Result<()> {
    let (_, splits) = load_graphs(&args.graph)?;
    let dataset = load_dataset(&args.dataset_dir, Some(&splits))?;
    let (ne, nr) = (splits.num_entities(), splits.num_relations());
    let log_path = metrics_log_path(args);
    let mut trainer = if args.resume {
        let ckpt = load_model(&args.checkpoint, &splits)?;
        let meta: TrainMeta = serde_json::from_value(ckpt.meta.clone())
            .map_err(|e| Error::Checkpoint(format!("no training state in checkpoint: {e}")))?;
        let mut model_cfg = ckpt.model.config().clone();
        let mut train_cfg = meta.config;
        config::layer(args, &mut model_cfg, &mut train_cfg)?;
        if &model_cfg != ckpt.model.config() {
            return Err(Error::Config("model options cannot change when resuming".into()));
        }
        Trainer::resume(ckpt, &dataset.train, train_cfg)?
    } else {
        let (mut model_cfg, mut train_cfg) = if args.full_scale {
            (ModelConfig::full_scale(), TrainConfig::full_scale())
        } else {
            (ModelConfig::desk(), TrainConfig::desk())
        };
        config::layer(args, &mut model_cfg, &mut train_cfg)?;
        let model = BetaModel::new(model_cfg, ne, nr, train_cfg.seed)?;
        Trainer::new(model, &dataset.train, train_cfg)?
    };
    let file = if args.resume {
        fs::OpenOptions::new().append(true).create(true).open(&log_path)
    } else {
        fs::File::create(&log_path)
    }
    .map_err(io_err(&log_path))?;
    let mut log = BufWriter::new(file);
    let start = trainer.step_count();
    let every = trainer.checkpoint_every();
    let mut recent = Vec::new();
    trainer.run(|t, record| {
        writeln!(log, "{record}").map_err(io_err(&log_path))?;
        recent.push(record.loss);
        if record.step % 100 == 0 {
            let n = recent.len() as f64;
            log::info!("step {}: mean loss {:.4} over the last {} steps", record.step, recent.iter().sum::<f64>() / n, n);
            recent.clear();
        }
        if every > 0 && record.step % every == 0 {
            log.flush().map_err(io_err(&log_path))?;
            save_checkpoint(&args.checkpoint, &t.checkpoint())?;
        }
        Ok(())
    })?;
    log.flush().map_err(io_err(&log_path))?;
    save_checkpoint(&args.checkpoint, &trainer.checkpoint())?;
    println!(
        "trained steps {}..{} (seed {}, lr {}); checkpoint {}; metrics {}",
        start,
        trainer.step_count(),
        trainer.seed(),
        trainer.learning_rate(),
        args.checkpoint.display(),
        log_path.display()
    );
    Ok(())
}

fn dump_path(base: &Path, mode: &str, several: bool) -> PathBuf {
    if !several {
        return base.to_path_buf();
    }
    let stem = base.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match base.extension() {
        Some(ext) => format!("{stem}.{mode}.{}", ext.to_string_lossy()),
        None => format!("{stem}.{mode}"),
    };
    base.with_file_name(name)
}

pub fn eval(args: &EvalArgs) -> Result<()> {
    if args.ks.contains(&0) {
        return Err(Error::Config("Hits@K cutoffs must be at least 1".into()));
    }
    let (_, splits) = load_graphs(&args.graph)?;
    let dataset = load_dataset(&args.dataset_dir, Some(&splits))?;
    let ckpt = load_model(&args.checkpoint, &splits)?;
    let mut ks = args.ks.clone();
    ks.sort_unstable();
    ks.dedup();
    let instances = dataset.split(split_of(args.split));
    let report: EvalReport = evaluate_split(&ckpt.model, instances, &args.union.modes(), &ks)?;
    print!("{}", report.table());
    if let Some(base) = &args.rank_dump {
        let several = report.modes.len() > 1;
        for rep in &report.modes {
            let path = dump_path(base, &rep.mode.to_string(), several);
            write_file(&path, &rep.rank_dump())?;
        }
    }
    if let Some(path) = &args.records {
        write_file(path, &report.records())?;
    }
    Ok(())
}

fn fmt_coef(c: Option<f64>) -> String {
    c.map_or_else(|| "-".to_string(), |v| format!("{v:.3}"))
}

pub fn correlate(args: &CorrelateArgs) -> Result<()> {
    let (_, splits) = load_graphs(&args.graph)?;
    let dataset = load_dataset(&args.dataset_dir, Some(&splits))?;
    let ckpt = load_model(&args.checkpoint, &splits)?;
    let rows = uncertainty_correlation(&ckpt.model, dataset.split(split_of(args.split)))?;
    let mut table = vec![vec!["structure".to_string(), "queries".into(), "SRCC".into(), "PCC".into()]];
    for r in rows {
        table.push(vec![r.structure.to_string(), r.queries.to_string(), fmt_coef(r.srcc), fmt_coef(r.pcc)]);
    }
    print!("{}", render_table(&table));
    Ok(())
}

pub fn classify_empty(args: &ClassifyArgs) -> Result<()> {
    let (_, splits) = load_graphs(&args.graph)?;
    let ckpt = load_model(&args.checkpoint, &splits)?;
    let g = &splits.test;
    let attempts = args.count.saturating_mul(200).max(1000);
    let mut nonempty = Vec::new();
    let mut empty = Vec::new();
    for s in Structure::ALL {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(args.seed, s.index() as u64));
        empty.extend(sample_empty_queries(s, g, args.count, attempts, &mut rng).into_iter().map(|q| (s, q)));
        nonempty.extend(
            sample_large_queries(s, g, args.min_answers, args.count, attempts, &mut rng).into_iter().map(|q| (s, q)),
        );
    }
    let rows = empty_answer_auc(&ckpt.model, &nonempty, &empty)?;
    let mut table = vec![vec!["structure".to_string(), "non-empty".into(), "empty".into(), "AUC".into()]];
    for r in rows {
        let name = r.structure.map_or_else(|| "all".to_string(), |s| s.to_string());
        table.push(vec![name, r.nonempty.to_string(), r.empty.to_string(), format!("{:.3}", r.auc)]);
    }
    print!("{}", render_table(&table));
    Ok(())
}

pub fn answer(args: &AnswerArgs) -> Result<()> {
    let query = parse_query(&args.query)?;
    let mode = match args.union {
        UnionArg::Dnf => betae::model::UnionMode::Dnf,
        UnionArg::Dm => betae::model::UnionMode::Dm,
        UnionArg::Both => return Err(Error::Config("answer needs a single union mode".into())),
    };
    let names = match &args.graph_dir {
        Some(dir) => Some(load_vocab(&dir.join("entities.dict"), &dir.join("relations.dict"))?.0),
        None => None,
    };
    let ckpt = load_checkpoint(&args.checkpoint)?;
    let model = &ckpt.model;
    let embedding = model.embed_query(&query, mode)?;
    let distances = Scorer::new(model).distances(&embedding);
    let mut order: Vec<usize> = (0..distances.len()).collect();
    order.sort_by(|&a, &b| distances[a].total_cmp(&distances[b]).then(a.cmp(&b)));
    let mut out = String::new();
    for (i, part) in embedding.parts().iter().enumerate() {
        let h: Vec<String> = part.entropy_per_dim().iter().map(|v| format!("{v:.4}")).collect();
        writeln!(out, "# embedding {} entropy per dimension: {}", i + 1, h.join(" ")).expect("write to string");
    }
    let mut rows = vec![vec!["rank".to_string(), "entity".into(), "name".into(), "distance".into()]];
    for (rank, &v) in order.iter().take(args.k).enumerate() {
        let name = names.as_ref().and_then(|n| n.name(v as u32)).unwrap_or("-");
        rows.push(vec![(rank + 1).to_string(), v.to_string(), name.to_string(), format!("{:.6}", distances[v])]);
    }
    out.push_str(&render_table(&rows));
    print!("{out}");
    Ok(())
}
