//! Layering of training options: preset, then config file, then flags.

use std::fs;

use betae::model::{AttentionMode, ModelConfig, ProjectionMode};
use betae::train::{parse_config_file, TrainConfig};
use betae::{Error, Result};

use crate::{AttentionArg, TrainArgs};

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Config(format!("invalid value {value:?} for {key}")))
}

fn set_model(model: &mut ModelConfig, key: &str, value: &str) -> Result<bool> {
    match key {
        "dim" => model.dim = parse(key, value)?,
        "hidden_dim" => model.hidden_dim = parse(key, value)?,
        "num_layers" => model.num_layers = parse(key, value)?,
        "attention_hidden" => model.attention_hidden = parse(key, value)?,
        "init_std" => model.init_std = parse(key, value)?,
        "attention" => model.attention = value.parse()?,
        "per_relation_mlp" => {
            model.projection = if parse::<bool>(key, value)? { ProjectionMode::PerRelation } else { ProjectionMode::Shared }
        }
        _ => return Ok(false),
    }
    Ok(true)
}

/// Applies the config file and flags on top of `model` and `train`.
pub fn layer(args: &TrainArgs, model: &mut ModelConfig, train: &mut TrainConfig) -> Result<()> {
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        for (key, value, line) in parse_config_file(&text)? {
            let applied = set_model(model, &key, &value)?;
            if !applied {
                train.set(&key, &value).map_err(|e| Error::Config(format!("{}:{line}: {e}", path.display())))?;
            }
        }
    }
    if let Some(v) = args.seed {
        train.seed = v;
    }
    if let Some(v) = args.dim {
        model.dim = v;
    }
    if let Some(v) = args.gamma {
        train.gamma = v;
    }
    if let Some(v) = args.neg_k {
        train.neg_k = v;
    }
    if let Some(v) = args.batch {
        train.batch_size = v;
    }
    if let Some(v) = args.lr {
        train.lr = v;
    }
    if let Some(v) = args.steps {
        train.steps = v;
    }
    if args.per_relation_mlp {
        model.projection = ProjectionMode::PerRelation;
    }
    if let Some(a) = args.attention {
        model.attention = match a {
            AttentionArg::Global => AttentionMode::Global,
            AttentionArg::PerDim => AttentionMode::PerDim,
        };
    }
    model.validate()?;
    train.validate()
}
