//! Neuron importance, correctness and interpretability, plus epoch and depth sweeps.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::concept::BaseConcept;
use crate::error::{Error, Result};
use crate::gnn::{cross_entropy, evaluate, train, ModelConfig, ModelParams};
use crate::graph::GraphDataset;
use crate::search::{beam_search_terms, LayerActivations, NeuronConceptMap, SearchConfig, TermTable};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NeuronMetrics {
    pub neuron: usize,
    /// Only defined for the final layer, which feeds the head.
    pub importance: Option<f64>,
    pub correctness: Option<f64>,
    /// Correctness fell back to 0 because one side had zero variance.
    pub degenerate: bool,
    pub interpretability: f64,
    pub dead: bool,
}

/// Mean over graphs of the population variance of `w^j_k * n^k_G` across classes `j`.
pub fn neuron_importance(k: usize, params: &ModelParams, pooled: &[f64]) -> Result<f64> {
    let w = &params.head.weight;
    if k >= w.ncols() {
        return Err(Error::InvalidArgument(format!("neuron {k} out of range for {} pooled inputs", w.ncols())));
    }
    if pooled.is_empty() {
        return Ok(0.0);
    }
    let col: Vec<f64> = w.column(k).to_vec();
    let r = col.len() as f64;
    let total: f64 = pooled
        .iter()
        .map(|&n| {
            let mean = col.iter().map(|&wj| wj * n).sum::<f64>() / r;
            col.iter().map(|&wj| (wj * n - mean).powi(2)).sum::<f64>() / r
        })
        .sum();
    Ok(total / pooled.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correctness {
    pub value: f64,
    pub degenerate: bool,
}

/// `|Pearson(pooled, -loss)|` across graphs; 0 with the degenerate flag when either
/// side is constant.
pub fn neuron_correctness(pooled: &[f64], neg_losses: &[f64]) -> Result<Correctness> {
    if pooled.len() != neg_losses.len() {
        return Err(Error::Shape(format!("{} pooled values against {} losses", pooled.len(), neg_losses.len())));
    }
    if pooled.len() < 2 {
        return Err(Error::InvalidArgument("correctness needs at least two graphs".into()));
    }
    let n = pooled.len() as f64;
    let mx = pooled.iter().sum::<f64>() / n;
    let my = neg_losses.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in pooled.iter().zip(neg_losses) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Ok(Correctness {
            value: 0.0,
            degenerate: true,
        });
    }
    Ok(Correctness {
        value: (sxy / (sxx.sqrt() * syy.sqrt())).abs().min(1.0),
        degenerate: false,
    })
}

/// Cross-entropy of the model's prediction for each listed graph.
pub fn graph_losses(params: &ModelParams, dataset: &GraphDataset, members: &[usize]) -> Result<Vec<f64>> {
    members
        .par_iter()
        .map(|&g| {
            let graph = &dataset.graphs[g];
            cross_entropy(&params.forward(graph)?.logits, graph.label())
        })
        .collect()
}

/// Metrics for every neuron of `acts`; importance and correctness only when `acts`
/// is the final layer.
pub fn compute_neuron_metrics(
    params: &ModelParams,
    dataset: &GraphDataset,
    acts: &LayerActivations,
    map: &NeuronConceptMap,
) -> Result<Vec<NeuronMetrics>> {
    let final_layer = acts.layer == params.num_layers();
    let neg_losses: Option<Vec<f64>> = if final_layer && acts.members.len() >= 2 {
        Some(graph_losses(params, dataset, &acts.members)?.into_iter().map(|l| -l).collect())
    } else {
        None
    };
    (0..acts.num_neurons())
        .map(|k| {
            let concepts = map
                .get(k)
                .ok_or_else(|| Error::InvalidArgument(format!("concept map has no entry for neuron {k}")))?;
            let pooled = acts.pooled(k);
            let importance = if final_layer {
                Some(neuron_importance(k, params, &pooled)?)
            } else {
                None
            };
            let corr = neg_losses.as_ref().map(|nl| neuron_correctness(&pooled, nl)).transpose()?;
            Ok(NeuronMetrics {
                neuron: k,
                importance,
                correctness: corr.map(|c| c.value),
                degenerate: corr.is_some_and(|c| c.degenerate),
                interpretability: concepts.top().map_or(0.0, |e| e.score),
                dead: concepts.is_dead(),
            })
        })
        .collect()
}

/// Mean interpretability over live neurons.
pub fn model_interpretability(metrics: &[NeuronMetrics]) -> Result<f64> {
    let live: Vec<f64> = metrics.iter().filter(|m| !m.dead).map(|m| m.interpretability).collect();
    if live.is_empty() {
        return Err(Error::Evaluation("every neuron is dead".into()));
    }
    Ok(live.iter().sum::<f64>() / live.len() as f64)
}

/// Same mean computed from a concept map alone.
pub fn map_interpretability(map: &NeuronConceptMap) -> Result<f64> {
    let scores: Vec<f64> = map.neurons.iter().filter_map(|n| n.top()).map(|e| e.score).collect();
    if scores.is_empty() {
        return Err(Error::Evaluation("every neuron is dead".into()));
    }
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochSweepPoint {
    pub epochs: usize,
    pub test_accuracy: f64,
    pub model_interpretability: f64,
    pub params: ModelParams,
    pub map: NeuronConceptMap,
    pub metrics: Vec<NeuronMetrics>,
}

/// Final-layer dissection of an already trained model over every dataset graph.
pub fn dissect_final_layer(
    params: &ModelParams,
    dataset: &GraphDataset,
    atoms: &[BaseConcept],
    search: &SearchConfig,
) -> Result<(NeuronConceptMap, Vec<NeuronMetrics>)> {
    let members = dataset.all_indices();
    let acts = LayerActivations::capture(params, dataset, &members, params.num_layers())?;
    let table = TermTable::build(atoms, dataset, &members)?;
    let map = beam_search_terms(&acts, &table, search)?;
    let metrics = compute_neuron_metrics(params, dataset, &acts, &map)?;
    Ok((map, metrics))
}

/// Trains one model per epoch budget from the same seed and dissects each final layer.
pub fn sweep_epochs(
    config: &ModelConfig,
    dataset: &GraphDataset,
    epoch_list: &[usize],
    atoms: &[BaseConcept],
    search: &SearchConfig,
) -> Result<Vec<EpochSweepPoint>> {
    if epoch_list.is_empty() {
        return Err(Error::InvalidArgument("epoch list is empty".into()));
    }
    epoch_list
        .iter()
        .map(|&epochs| {
            let mut cfg = config.clone();
            cfg.epochs = epochs;
            let outcome = train(&cfg, dataset)?;
            let (_, test_accuracy) = evaluate(&outcome.params, dataset, &dataset.split.test)?;
            let (map, metrics) = dissect_final_layer(&outcome.params, dataset, atoms, search)?;
            Ok(EpochSweepPoint {
                epochs,
                test_accuracy,
                model_interpretability: model_interpretability(&metrics)?,
                params: outcome.params,
                map,
                metrics,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerSweepPoint {
    /// 1-based.
    pub layer: usize,
    pub mean_interpretability: f64,
    pub map: NeuronConceptMap,
    pub metrics: Vec<NeuronMetrics>,
}

/// Concept search on every layer of a trained model.
pub fn sweep_layers(
    params: &ModelParams,
    dataset: &GraphDataset,
    atoms: &[BaseConcept],
    search: &SearchConfig,
) -> Result<Vec<LayerSweepPoint>> {
    let members = dataset.all_indices();
    let layers = LayerActivations::capture_all(params, dataset, &members)?;
    let table = TermTable::build(atoms, dataset, &members)?;
    layers
        .iter()
        .map(|acts| {
            let map = beam_search_terms(acts, &table, search)?;
            let metrics = compute_neuron_metrics(params, dataset, acts, &map)?;
            Ok(LayerSweepPoint {
                layer: acts.layer,
                mean_interpretability: model_interpretability(&metrics)?,
                map,
                metrics,
            })
        })
        .collect()
}

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Evaluation(format!("{other:?}")),
    })?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// One row per neuron: neuron, importance, correctness, interpretability, dead.
pub fn write_neuron_metrics_csv(path: impl AsRef<Path>, metrics: &[NeuronMetrics]) -> Result<()> {
    #[derive(Serialize)]
    struct Row {
        neuron: usize,
        importance: Option<f64>,
        correctness: Option<f64>,
        interpretability: f64,
        dead: bool,
        degenerate: bool,
    }
    write_rows(
        path.as_ref(),
        metrics.iter().map(|m| Row {
            neuron: m.neuron,
            importance: m.importance,
            correctness: m.correctness,
            interpretability: m.interpretability,
            dead: m.dead,
            degenerate: m.degenerate,
        }),
    )
}

pub fn write_epoch_sweep_csv(path: impl AsRef<Path>, points: &[EpochSweepPoint]) -> Result<()> {
    #[derive(Serialize)]
    struct Row {
        epochs: usize,
        test_accuracy: f64,
        model_interpretability: f64,
    }
    write_rows(
        path.as_ref(),
        points.iter().map(|p| Row {
            epochs: p.epochs,
            test_accuracy: p.test_accuracy,
            model_interpretability: p.model_interpretability,
        }),
    )
}

pub fn write_layer_sweep_csv(path: impl AsRef<Path>, points: &[LayerSweepPoint]) -> Result<()> {
    #[derive(Serialize)]
    struct Row {
        layer: usize,
        mean_interpretability: f64,
    }
    write_rows(
        path.as_ref(),
        points.iter().map(|p| Row {
            layer: p.layer,
            mean_interpretability: p.mean_interpretability,
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gnn::{FeatureSpec, LayerType, Linear};
    use ndarray::array;

    fn head_only(weight: ndarray::Array2<f64>) -> ModelParams {
        let config = ModelConfig::builder(1, weight.ncols(), LayerType::Gin, weight.nrows()).build();
        let mut p = ModelParams::init(&config, FeatureSpec::Constant).unwrap();
        let r = weight.nrows();
        p.head = Linear {
            weight,
            bias: ndarray::Array1::zeros(r),
        };
        p
    }

    #[test]
    fn importance_examples() {
        let p = head_only(array![[1.0], [-1.0]]);
        assert_eq!(neuron_importance(0, &p, &[2.0]).unwrap(), 4.0);
        let flat = head_only(array![[0.7, 1.0], [0.7, 3.0]]);
        assert_eq!(neuron_importance(0, &flat, &[5.0, 1.0, 9.0]).unwrap(), 0.0);
        assert_eq!(neuron_importance(1, &flat, &[0.0, 0.0]).unwrap(), 0.0);
        assert!(neuron_importance(2, &flat, &[1.0]).is_err());
    }

    #[test]
    fn importance_scales_quadratically() {
        let p = head_only(array![[0.3], [-1.2], [0.5]]);
        let q = head_only(array![[0.9], [-3.6], [1.5]]);
        let n = [1.0, 2.5, 0.2];
        let a = neuron_importance(0, &p, &n).unwrap();
        let b = neuron_importance(0, &q, &n).unwrap();
        assert!((b - 9.0 * a).abs() < 1e-12);
    }

    #[test]
    fn correctness_examples() {
        let c = neuron_correctness(&[1.0, 2.0, 3.0], &[-3.0, -2.0, -1.0]).unwrap();
        assert!((c.value - 1.0).abs() < 1e-12 && !c.degenerate);
        let c = neuron_correctness(&[2.0, 2.0, 2.0], &[-3.0, -2.0, -1.0]).unwrap();
        assert_eq!(c, Correctness { value: 0.0, degenerate: true });
        let x = [0.3, 1.7, 0.2, 4.0];
        let y = [-1.0, -0.2, -0.9, -0.1];
        let base = neuron_correctness(&x, &y).unwrap().value;
        let scaled: Vec<f64> = x.iter().map(|v| 3.0 * v + 7.0).collect();
        assert!((neuron_correctness(&scaled, &y).unwrap().value - base).abs() < 1e-12);
        assert!(neuron_correctness(&[1.0], &[1.0]).is_err());
    }

    fn metric(neuron: usize, interpretability: f64, dead: bool) -> NeuronMetrics {
        NeuronMetrics {
            neuron,
            importance: None,
            correctness: None,
            degenerate: false,
            interpretability,
            dead,
        }
    }

    #[test]
    fn model_interpretability_skips_dead() {
        assert_eq!(model_interpretability(&[metric(0, 0.2, false), metric(1, 0.8, false)]).unwrap(), 0.5);
        assert_eq!(model_interpretability(&[metric(0, 1.0, false), metric(1, 0.0, true)]).unwrap(), 1.0);
        assert!(model_interpretability(&[metric(0, 0.0, true)]).is_err());
    }
}
