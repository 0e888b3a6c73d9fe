//! End-to-end commands: train, dissect, explain and the sweep experiments.

mod config;

pub use config::{parse_kv, read_kv_file, DatasetSpec, ModelOverrides, RunConfig, SYNTHETIC_DATASET};

use std::fs;
use std::path::{Path, PathBuf};

use crate::concept::base_vocabulary;
use crate::error::{Error, Result};
use crate::explain::{build_global_explanation, cam_to_dot};
use crate::gnn::{load_checkpoint, save_checkpoint, train, Checkpoint, FeatureSpec, ModelConfig, ModelParams};
use crate::graph::GraphDataset;
use crate::metrics::{
    compute_neuron_metrics, sweep_epochs, sweep_layers, write_epoch_sweep_csv, write_layer_sweep_csv,
    write_neuron_metrics_csv,
};
use crate::search::{beam_search, LayerActivations, NeuronConceptMap};

pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const TRAINING_LOG_FILE: &str = "training_log.csv";
pub const CONCEPT_MAP_FILE: &str = "concept_map.json";
pub const METRICS_FILE: &str = "neuron_metrics.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const RESOLVED_CONFIG_FILE: &str = "resolved_config.txt";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Epochs,
    Layers,
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "epochs" => Ok(ExperimentKind::Epochs),
            "layers" => Ok(ExperimentKind::Layers),
            _ => Err(Error::InvalidArgument(format!("unknown experiment {s:?}; expected epochs or layers"))),
        }
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn echo_config(cfg: &RunConfig, model: Option<&ModelConfig>) -> Result<()> {
    create_dir(&cfg.out)?;
    write_text(&cfg.out.join(RESOLVED_CONFIG_FILE), &cfg.render(model))
}

fn write_training_log(path: &Path, log: &[crate::gnn::EpochStats]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::io(path, std::io::Error::other(e)))?;
    w.write_record(["epoch", "train_loss", "train_acc", "test_acc"])?;
    for s in log {
        w.write_record([
            s.epoch.to_string(),
            s.train_loss.to_string(),
            s.train_acc.to_string(),
            s.test_acc.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Trains a model and writes the checkpoint and per-epoch log.
pub fn cmd_train(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let dataset = cfg.load_dataset()?;
    let config = cfg.model_config(&dataset)?;
    echo_config(cfg, Some(&config))?;
    let outcome = train(&config, &dataset)?;
    let ckpt_path = cfg.out.join(CHECKPOINT_FILE);
    save_checkpoint(
        &ckpt_path,
        &Checkpoint {
            config,
            params: outcome.params,
        },
    )?;
    let log_path = cfg.out.join(TRAINING_LOG_FILE);
    write_training_log(&log_path, &outcome.log)?;
    Ok(vec![ckpt_path, log_path])
}

fn checkpoint_path(cfg: &RunConfig) -> PathBuf {
    cfg.checkpoint.clone().unwrap_or_else(|| cfg.out.join(CHECKPOINT_FILE))
}

/// Loads the checkpoint and checks it against the dataset and any explicit model keys.
fn load_model(cfg: &RunConfig, dataset: &GraphDataset) -> Result<Checkpoint> {
    let path = checkpoint_path(cfg);
    if !path.exists() {
        return Err(Error::MissingArtifact(format!(
            "checkpoint {} not found; run train first",
            path.display()
        )));
    }
    let ckpt = load_checkpoint(&path)?;
    let features = FeatureSpec::for_dataset(dataset)?;
    if ckpt.params.features != features {
        return Err(Error::Config(format!(
            "checkpoint expects {:?} input features but the dataset provides {:?}",
            ckpt.params.features, features
        )));
    }
    if ckpt.params.num_classes() < dataset.num_classes {
        return Err(Error::Config(format!(
            "checkpoint emits {} classes but the dataset has {}",
            ckpt.params.num_classes(),
            dataset.num_classes
        )));
    }
    let m = &cfg.model;
    let c = &ckpt.config;
    if m.num_layers.is_some_and(|v| v != c.num_layers)
        || m.hidden_dim.is_some_and(|v| v != c.hidden_dim)
        || m.layer_type.is_some_and(|v| v != c.layer_type)
    {
        return Err(Error::Config(format!(
            "configured model does not match the checkpoint ({} x {} {})",
            c.num_layers, c.hidden_dim, c.layer_type
        )));
    }
    Ok(ckpt)
}

fn concept_map_name(layer: usize, final_layer: usize) -> String {
    if layer == final_layer {
        CONCEPT_MAP_FILE.to_string()
    } else {
        format!("concept_map_layer{layer}.json")
    }
}

fn metrics_name(layer: usize, final_layer: usize) -> String {
    if layer == final_layer {
        METRICS_FILE.to_string()
    } else {
        format!("neuron_metrics_layer{layer}.csv")
    }
}

/// Beam search on one layer (default final); writes the concept map and metrics.
pub fn cmd_dissect(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let dataset = cfg.load_dataset()?;
    let ckpt = load_model(cfg, &dataset)?;
    echo_config(cfg, Some(&ckpt.config))?;
    let params = &ckpt.params;
    let final_layer = params.num_layers();
    let layer = cfg.layer.unwrap_or(final_layer);
    if layer == 0 || layer > final_layer {
        return Err(Error::InvalidArgument(format!("layer {layer} out of range 1..={final_layer}")));
    }
    let atoms = base_vocabulary(cfg.task()?);
    let acts = LayerActivations::capture(params, &dataset, &dataset.all_indices(), layer)?;
    let map = beam_search(&acts, &dataset, &atoms, &cfg.search)?;
    let metrics = compute_neuron_metrics(params, &dataset, &acts, &map)?;
    let map_path = cfg.out.join(concept_map_name(layer, final_layer));
    write_text(&map_path, &map.to_json()?)?;
    let metrics_path = cfg.out.join(metrics_name(layer, final_layer));
    write_neuron_metrics_csv(&metrics_path, &metrics)?;
    Ok(vec![map_path, metrics_path])
}

/// Global explanation per class (or the configured class) with one DOT per neuron.
pub fn cmd_explain(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let dataset = cfg.load_dataset()?;
    let ckpt = load_model(cfg, &dataset)?;
    echo_config(cfg, Some(&ckpt.config))?;
    let params = &ckpt.params;
    let map_path = cfg.concept_map.clone().unwrap_or_else(|| cfg.out.join(CONCEPT_MAP_FILE));
    if !map_path.exists() {
        return Err(Error::MissingArtifact(format!(
            "concept map {} not found; run dissect first",
            map_path.display()
        )));
    }
    let text = fs::read_to_string(&map_path).map_err(|e| Error::io(&map_path, e))?;
    let map = NeuronConceptMap::from_json(&text)?;
    if map.neurons.len() != params.hidden_dim() {
        return Err(Error::Config(format!(
            "concept map covers {} neurons but the final layer has {}",
            map.neurons.len(),
            params.hidden_dim()
        )));
    }
    let classes: Vec<usize> = match cfg.class {
        Some(c) if c >= params.num_classes() => {
            return Err(Error::InvalidArgument(format!(
                "class {c} out of range for {} classes",
                params.num_classes()
            )))
        }
        Some(c) => vec![c],
        None => (0..params.num_classes()).collect(),
    };
    let acts = LayerActivations::capture(params, &dataset, &dataset.all_indices(), params.num_layers())?;
    let mut written = Vec::new();
    for class in classes {
        let expl = build_global_explanation(params, &dataset, &acts, &map, class, cfg.entropy)?;
        let path = cfg.out.join(format!("explanation_class{class}.json"));
        write_text(&path, &expl.to_json()?)?;
        written.push(path);
        for n in &expl.neurons {
            let graph = &dataset.graphs[n.exemplar_graph];
            let path = cfg.out.join(format!("cam_class{class}_neuron{}.dot", n.neuron));
            write_text(&path, &cam_to_dot(&n.cam, graph, &dataset.label_alphabet))?;
            written.push(path);
        }
    }
    Ok(written)
}

fn trained_or_loaded(cfg: &RunConfig, dataset: &GraphDataset) -> Result<(ModelConfig, ModelParams)> {
    if checkpoint_path(cfg).exists() {
        let ckpt = load_model(cfg, dataset)?;
        return Ok((ckpt.config, ckpt.params));
    }
    let config = cfg.model_config(dataset)?;
    let outcome = train(&config, dataset)?;
    save_checkpoint(
        cfg.out.join(CHECKPOINT_FILE),
        &Checkpoint {
            config: config.clone(),
            params: outcome.params.clone(),
        },
    )?;
    Ok((config, outcome.params))
}

/// Epoch-budget or per-layer sweep with per-point artifacts and a summary table.
pub fn cmd_experiment(cfg: &RunConfig, kind: ExperimentKind) -> Result<Vec<PathBuf>> {
    let dataset = cfg.load_dataset()?;
    let atoms = base_vocabulary(cfg.task()?);
    let mut written = Vec::new();
    match kind {
        ExperimentKind::Epochs => {
            if cfg.epochs_list.is_empty() {
                return Err(Error::InvalidArgument("the epochs experiment needs --epochs-list".into()));
            }
            let config = cfg.model_config(&dataset)?;
            echo_config(cfg, Some(&config))?;
            let points = sweep_epochs(&config, &dataset, &cfg.epochs_list, &atoms, &cfg.search)?;
            for p in &points {
                let dir = cfg.out.join(format!("epochs_{}", p.epochs));
                create_dir(&dir)?;
                let mut c = config.clone();
                c.epochs = p.epochs;
                let ckpt = dir.join(CHECKPOINT_FILE);
                save_checkpoint(
                    &ckpt,
                    &Checkpoint {
                        config: c,
                        params: p.params.clone(),
                    },
                )?;
                let map = dir.join(CONCEPT_MAP_FILE);
                write_text(&map, &p.map.to_json()?)?;
                let metrics = dir.join(METRICS_FILE);
                write_neuron_metrics_csv(&metrics, &p.metrics)?;
                written.extend([ckpt, map, metrics]);
            }
            let summary = cfg.out.join(SUMMARY_FILE);
            write_epoch_sweep_csv(&summary, &points)?;
            written.push(summary);
        }
        ExperimentKind::Layers => {
            create_dir(&cfg.out)?;
            let (config, params) = trained_or_loaded(cfg, &dataset)?;
            echo_config(cfg, Some(&config))?;
            let points = sweep_layers(&params, &dataset, &atoms, &cfg.search)?;
            for p in &points {
                let dir = cfg.out.join(format!("layer_{}", p.layer));
                create_dir(&dir)?;
                let map = dir.join(CONCEPT_MAP_FILE);
                write_text(&map, &p.map.to_json()?)?;
                let metrics = dir.join(METRICS_FILE);
                write_neuron_metrics_csv(&metrics, &p.metrics)?;
                written.extend([map, metrics]);
            }
            let summary = cfg.out.join(SUMMARY_FILE);
            write_layer_sweep_csv(&summary, &points)?;
            written.push(summary);
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(out: &Path) -> RunConfig {
        let mut map = parse_kv("dataset = synthetic-degree\nsynthetic_graphs = 12\nepochs = 3\ndepth = 1\n").unwrap();
        map.insert("out".into(), out.display().to_string());
        RunConfig::from_map(&map).unwrap()
    }

    #[test]
    fn train_dissect_explain() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = quick(dir.path());
        cmd_train(&cfg).unwrap();
        let log = fs::read_to_string(dir.path().join(TRAINING_LOG_FILE)).unwrap();
        assert_eq!(log.lines().count(), 4);
        assert!(log.starts_with("epoch,train_loss,train_acc,test_acc\n"));
        cmd_dissect(&cfg).unwrap();
        let map = NeuronConceptMap::from_json(&fs::read_to_string(dir.path().join(CONCEPT_MAP_FILE)).unwrap()).unwrap();
        assert_eq!(map.neurons.len(), 16);
        cmd_explain(&cfg).unwrap();
        assert!(dir.path().join("explanation_class0.json").exists());
        assert!(dir.path().join("explanation_class1.json").exists());
        assert!(dir.path().join(RESOLVED_CONFIG_FILE).exists());
    }

    #[test]
    fn missing_artifacts_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = quick(dir.path());
        assert!(matches!(cmd_dissect(&cfg), Err(Error::MissingArtifact(_))));
        cmd_train(&cfg).unwrap();
        assert!(matches!(cmd_explain(&cfg), Err(Error::MissingArtifact(_))));
        let mut bad = cfg.clone();
        bad.layer = Some(3);
        assert!(cmd_dissect(&bad).is_err());
        let mut wrong = cfg.clone();
        wrong.model.hidden_dim = Some(8);
        assert!(matches!(cmd_dissect(&wrong), Err(Error::Config(_))));
    }
}
