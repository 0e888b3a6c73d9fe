//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::fmt::Write;
use std::path::{Path, PathBuf};

use crate::concept::Task;
use crate::error::{Error, Result};
use crate::explain::EntropySettings;
use crate::gnn::{LayerType, ModelConfig};
use crate::graph::{gen_planted_degree_dataset, load_tu_dataset, GraphDataset};
use crate::search::SearchConfig;

pub const SYNTHETIC_DATASET: &str = "synthetic-degree";

const KEYS: &[&str] = &[
    "dataset",
    "dataset_name",
    "synthetic_graphs",
    "synthetic_threshold",
    "seed",
    "out",
    "train_fraction",
    "num_layers",
    "hidden_dim",
    "layer_type",
    "learning_rate",
    "weight_decay",
    "epochs",
    "early_stop",
    "batch_size",
    "depth",
    "width",
    "quantiles",
    "probe_graphs",
    "support_threshold",
    "layer",
    "class",
    "epochs_list",
    "checkpoint",
    "concept_map",
    "entropy_steps",
    "entropy_lr",
];

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSpec {
    Synthetic { graphs: usize, threshold: usize },
    Tu { dir: PathBuf, name: String },
}

impl DatasetSpec {
    /// Name used to look up model defaults and the concept vocabulary.
    pub fn task_name(&self) -> &str {
        match self {
            DatasetSpec::Synthetic { .. } => SYNTHETIC_DATASET,
            DatasetSpec::Tu { name, .. } => name,
        }
    }
}

/// Explicit model keys; unset fields fall back to the per-dataset defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModelOverrides {
    pub num_layers: Option<usize>,
    pub hidden_dim: Option<usize>,
    pub layer_type: Option<LayerType>,
    pub learning_rate: Option<f64>,
    pub weight_decay: Option<f64>,
    pub epochs: Option<usize>,
    pub early_stop: Option<Option<usize>>,
    pub batch_size: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dataset: DatasetSpec,
    pub seed: u64,
    pub out: PathBuf,
    pub train_fraction: f64,
    pub model: ModelOverrides,
    pub search: SearchConfig,
    pub layer: Option<usize>,
    pub class: Option<usize>,
    pub epochs_list: Vec<usize>,
    pub checkpoint: Option<PathBuf>,
    pub concept_map: Option<PathBuf>,
    pub entropy: EntropySettings,
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value, found {line:?}", i + 1)))?;
        let key = key.trim().replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return Err(Error::Config(format!("line {}: unknown key {key:?}", i + 1)));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

pub fn read_kv_file(path: impl AsRef<Path>) -> Result<BTreeMap<String, String>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_kv(&text)
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value {value:?} for {key}")))
}

fn list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

impl RunConfig {
    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self> {
        if let Some(bad) = map.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(Error::Config(format!("unknown key {bad:?}")));
        }
        let get = |k: &str| map.get(k).map(String::as_str);
        let opt = |k: &str| -> Result<Option<usize>> { get(k).map(|v| parse(k, v)).transpose() };
        let optf = |k: &str| -> Result<Option<f64>> { get(k).map(|v| parse(k, v)).transpose() };

        let dataset_value = get("dataset").ok_or_else(|| Error::Config("no dataset given".into()))?;
        let dataset = if dataset_value.eq_ignore_ascii_case(SYNTHETIC_DATASET) {
            DatasetSpec::Synthetic {
                graphs: opt("synthetic_graphs")?.unwrap_or(200),
                threshold: opt("synthetic_threshold")?.unwrap_or(5),
            }
        } else {
            let dir = PathBuf::from(dataset_value);
            let name = match get("dataset_name") {
                Some(n) => n.to_string(),
                None => dir
                    .file_name()
                    .and_then(|s| s.to_str())
                    .map(str::to_string)
                    .ok_or_else(|| Error::Config(format!("cannot infer a dataset name from {dataset_value:?}")))?,
            };
            DatasetSpec::Tu { dir, name }
        };

        let defaults = SearchConfig::default();
        let seed: u64 = get("seed").map(|v| parse("seed", v)).transpose()?.unwrap_or(0);
        let search = SearchConfig {
            depth: opt("depth")?.unwrap_or(defaults.depth),
            width: opt("width")?.unwrap_or(defaults.width),
            quantiles: get("quantiles").map(|v| list("quantiles", v)).transpose()?.unwrap_or(defaults.quantiles),
            probe_graphs: opt("probe_graphs")?.unwrap_or(defaults.probe_graphs),
            support_threshold: get("support_threshold")
                .map(|v| parse("support_threshold", v))
                .transpose()?
                .unwrap_or(defaults.support_threshold),
            seed,
            exhaustive_cap: defaults.exhaustive_cap,
        };
        let early_stop = match get("early_stop") {
            None => None,
            Some(v) if v.eq_ignore_ascii_case("none") => Some(None),
            Some(v) => Some(Some(parse("early_stop", v)?)),
        };
        let train_fraction = optf("train_fraction")?.unwrap_or(0.8);
        if !(train_fraction > 0.0 && train_fraction <= 1.0) {
            return Err(Error::Config(format!("train_fraction {train_fraction} must lie in (0, 1]")));
        }
        let entropy_defaults = EntropySettings::default();
        Ok(Self {
            dataset,
            seed,
            out: PathBuf::from(get("out").unwrap_or("out")),
            train_fraction,
            model: ModelOverrides {
                num_layers: opt("num_layers")?,
                hidden_dim: opt("hidden_dim")?,
                layer_type: get("layer_type").map(|v| parse("layer_type", v)).transpose()?,
                learning_rate: optf("learning_rate")?,
                weight_decay: optf("weight_decay")?,
                epochs: opt("epochs")?,
                early_stop,
                batch_size: opt("batch_size")?,
            },
            search,
            layer: opt("layer")?,
            class: opt("class")?,
            epochs_list: get("epochs_list").map(|v| list("epochs_list", v)).transpose()?.unwrap_or_default(),
            checkpoint: get("checkpoint").map(PathBuf::from),
            concept_map: get("concept_map").map(PathBuf::from),
            entropy: EntropySettings {
                steps: opt("entropy_steps")?.unwrap_or(entropy_defaults.steps),
                lr: optf("entropy_lr")?.unwrap_or(entropy_defaults.lr),
            },
        })
    }

    pub fn load_dataset(&self) -> Result<GraphDataset> {
        let mut ds = match &self.dataset {
            DatasetSpec::Synthetic { graphs, threshold } => gen_planted_degree_dataset(*graphs, *threshold, self.seed)?,
            DatasetSpec::Tu { dir, name } => {
                if !dir.is_dir() {
                    return Err(Error::Io {
                        path: dir.clone(),
                        source: std::io::Error::new(std::io::ErrorKind::NotFound, "dataset directory not found"),
                    });
                }
                load_tu_dataset(dir, name)?
            }
        };
        ds.stratified_split(self.train_fraction, self.seed)?;
        Ok(ds)
    }

    /// Per-dataset defaults with explicit keys applied on top.
    pub fn model_config(&self, dataset: &GraphDataset) -> Result<ModelConfig> {
        let m = &self.model;
        let mut config = match ModelConfig::for_dataset(self.dataset.task_name()) {
            Some(c) => c,
            None => match (m.num_layers, m.hidden_dim, m.layer_type) {
                (Some(n), Some(d), Some(t)) => ModelConfig::builder(n, d, t, dataset.num_classes).build(),
                _ => {
                    return Err(Error::Config(format!(
                        "no model defaults for dataset {:?}; set num_layers, hidden_dim and layer_type",
                        self.dataset.task_name()
                    )))
                }
            },
        };
        if let Some(v) = m.num_layers {
            config.num_layers = v;
        }
        if let Some(v) = m.hidden_dim {
            config.hidden_dim = v;
        }
        if let Some(v) = m.layer_type {
            config.layer_type = v;
        }
        if let Some(v) = m.learning_rate {
            config.learning_rate = v;
        }
        if let Some(v) = m.weight_decay {
            config.weight_decay = v;
        }
        if let Some(v) = m.epochs {
            config.epochs = v;
        }
        if let Some(v) = m.early_stop {
            config.early_stop_patience = v;
        }
        if let Some(v) = m.batch_size {
            config.batch_size = v;
        }
        config.num_classes = dataset.num_classes.max(1);
        config.seed = self.seed;
        config.validate()?;
        Ok(config)
    }

    pub fn task(&self) -> Result<Task> {
        self.dataset.task_name().parse()
    }

    /// Every resolved value, one `key = value` per line in key order.
    pub fn render(&self, model: Option<&ModelConfig>) -> String {
        let mut rows: BTreeMap<&str, String> = BTreeMap::new();
        match &self.dataset {
            DatasetSpec::Synthetic { graphs, threshold } => {
                rows.insert("dataset", SYNTHETIC_DATASET.into());
                rows.insert("synthetic_graphs", graphs.to_string());
                rows.insert("synthetic_threshold", threshold.to_string());
            }
            DatasetSpec::Tu { dir, name } => {
                rows.insert("dataset", dir.display().to_string());
                rows.insert("dataset_name", name.clone());
            }
        }
        rows.insert("seed", self.seed.to_string());
        rows.insert("out", self.out.display().to_string());
        rows.insert("train_fraction", self.train_fraction.to_string());
        if let Some(c) = model {
            rows.insert("num_layers", c.num_layers.to_string());
            rows.insert("hidden_dim", c.hidden_dim.to_string());
            rows.insert("layer_type", c.layer_type.to_string());
            rows.insert("learning_rate", c.learning_rate.to_string());
            rows.insert("weight_decay", c.weight_decay.to_string());
            rows.insert("epochs", c.epochs.to_string());
            rows.insert("early_stop", c.early_stop_patience.map_or("none".into(), |p| p.to_string()));
            rows.insert("batch_size", c.batch_size.to_string());
        }
        let s = &self.search;
        rows.insert("depth", s.depth.to_string());
        rows.insert("width", s.width.to_string());
        rows.insert(
            "quantiles",
            s.quantiles.iter().map(f64::to_string).collect::<Vec<_>>().join(","),
        );
        rows.insert("probe_graphs", s.probe_graphs.to_string());
        rows.insert("support_threshold", s.support_threshold.to_string());
        if let Some(l) = self.layer {
            rows.insert("layer", l.to_string());
        }
        if let Some(c) = self.class {
            rows.insert("class", c.to_string());
        }
        if !self.epochs_list.is_empty() {
            rows.insert(
                "epochs_list",
                self.epochs_list.iter().map(usize::to_string).collect::<Vec<_>>().join(","),
            );
        }
        if let Some(p) = &self.checkpoint {
            rows.insert("checkpoint", p.display().to_string());
        }
        if let Some(p) = &self.concept_map {
            rows.insert("concept_map", p.display().to_string());
        }
        rows.insert("entropy_steps", self.entropy.steps.to_string());
        rows.insert("entropy_lr", self.entropy.lr.to_string());
        let mut out = String::new();
        for (k, v) in rows {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}
