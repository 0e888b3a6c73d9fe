//! Per-neuron concept search: thresholding, scaled IOU scoring and beam search over
//! compositional formulas.

mod beam;
mod score;

pub use beam::{
    beam_search, beam_search_terms, exhaustive_search, exhaustive_space_size, NeuronConceptMap, NeuronConcepts,
    ScoreEntry, SearchConfig, TermTable,
};
pub use score::{
    apply_threshold, compare_vectorized, scaled_iou, score_concept, segment_sum, NeuronScorer, ThresholdGrid,
    ThresholdScore, DEFAULT_QUANTILES,
};

use ndarray::{Array2, Axis};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gnn::{ActivationExport, LayerActivationsExport, ModelParams};
use crate::graph::{BatchIndex, GraphDataset};

/// One layer's activations over a list of dataset graphs laid out as a disjoint union.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerActivations {
    /// 1-based layer number.
    pub layer: usize,
    /// Shape `neurons x nodes`, row-major.
    pub values: Array2<f64>,
    pub index: BatchIndex,
    /// Dataset index of each batch position.
    pub members: Vec<usize>,
}

impl LayerActivations {
    pub fn new(layer: usize, values: Array2<f64>, index: BatchIndex, members: Vec<usize>) -> Result<Self> {
        if values.ncols() != index.num_nodes() || members.len() != index.num_graphs() {
            return Err(Error::Shape(format!(
                "{}x{} activations for a batch of {} nodes in {} graphs ({} members)",
                values.nrows(),
                values.ncols(),
                index.num_nodes(),
                index.num_graphs(),
                members.len()
            )));
        }
        let values = values.as_standard_layout().into_owned();
        Ok(Self {
            layer,
            values,
            index,
            members,
        })
    }

    /// Runs the model on every listed graph and keeps layer `layer` (1-based).
    pub fn capture(params: &ModelParams, dataset: &GraphDataset, members: &[usize], layer: usize) -> Result<Self> {
        if layer == 0 || layer > params.num_layers() {
            return Err(Error::InvalidArgument(format!(
                "layer {layer} out of range 1..={}",
                params.num_layers()
            )));
        }
        let mut all = Self::capture_all(params, dataset, members)?;
        Ok(all.swap_remove(layer - 1))
    }

    /// Activations of every message-passing layer.
    pub fn capture_all(params: &ModelParams, dataset: &GraphDataset, members: &[usize]) -> Result<Vec<Self>> {
        if members.is_empty() {
            return Err(Error::InvalidArgument("no graphs to capture".into()));
        }
        if let Some(&bad) = members.iter().find(|&&g| g >= dataset.len()) {
            return Err(Error::InvalidArgument(format!("graph index {bad} out of range")));
        }
        let records = members
            .par_iter()
            .map(|&g| params.forward(&dataset.graphs[g]))
            .collect::<Result<Vec<_>>>()?;
        let sizes: Vec<usize> = members.iter().map(|&g| dataset.graphs[g].node_count()).collect();
        let labels = members.iter().map(|&g| dataset.graphs[g].label()).collect();
        let index = BatchIndex::from_sizes(&sizes, labels);
        (0..params.num_layers())
            .map(|l| {
                let views: Vec<_> = records.iter().map(|r| r.layers[l].view()).collect();
                let values = ndarray::concatenate(Axis(1), &views).map_err(|e| Error::Shape(e.to_string()))?;
                Self::new(l + 1, values, index.clone(), members.to_vec())
            })
            .collect()
    }

    pub fn num_neurons(&self) -> usize {
        self.values.nrows()
    }

    pub fn num_nodes(&self) -> usize {
        self.values.ncols()
    }

    pub fn neuron(&self, k: usize) -> &[f64] {
        self.values.row(k).to_slice().expect("standard layout")
    }

    /// Add-pooled value of neuron `k` for each graph.
    pub fn pooled(&self, k: usize) -> Vec<f64> {
        (0..self.index.num_graphs())
            .map(|p| self.neuron(k)[self.index.range(p)].iter().sum())
            .collect()
    }

    /// Activations restricted to batch position `pos`.
    pub fn graph_slice(&self, k: usize, pos: usize) -> &[f64] {
        &self.neuron(k)[self.index.range(pos)]
    }

    pub fn to_export(layers: &[Self]) -> Result<ActivationExport> {
        let first = layers
            .first()
            .ok_or_else(|| Error::InvalidArgument("no layers to export".into()))?;
        if layers.iter().any(|l| l.index != first.index) {
            return Err(Error::Shape("layers were captured on different batches".into()));
        }
        Ok(ActivationExport {
            layers: layers
                .iter()
                .map(|l| LayerActivationsExport {
                    layer: l.layer,
                    neurons: l.num_neurons(),
                    nodes: l.num_nodes(),
                    data: l.values.iter().copied().collect(),
                })
                .collect(),
            index: first.index.clone(),
        })
    }

    /// Rebuilds layer `layer` of an export; `members` maps batch positions to dataset graphs.
    pub fn from_export(export: &ActivationExport, layer: usize, members: Vec<usize>) -> Result<Self> {
        export.validate()?;
        let l = export
            .layers
            .iter()
            .find(|l| l.layer == layer)
            .ok_or_else(|| Error::InvalidArgument(format!("export has no layer {layer}")))?;
        let values = Array2::from_shape_vec((l.neurons, l.nodes), l.data.clone())
            .map_err(|e| Error::Shape(e.to_string()))?;
        Self::new(layer, values, export.index.clone(), members)
    }

    /// Checks that batch positions line up with the dataset graphs they claim.
    pub fn check_against(&self, dataset: &GraphDataset) -> Result<()> {
        for (pos, &g) in self.members.iter().enumerate() {
            let graph = dataset
                .graphs
                .get(g)
                .ok_or_else(|| Error::Shape(format!("member {g} not in dataset")))?;
            if graph.node_count() != self.index.range(pos).len() {
                return Err(Error::Shape(format!(
                    "graph {g} has {} nodes but the batch holds {}",
                    graph.node_count(),
                    self.index.range(pos).len()
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gnn::{FeatureSpec, LayerType, ModelConfig};
    use crate::graph::gen_planted_degree_dataset;

    #[test]
    fn capture_matches_per_graph_forward() {
        let ds = gen_planted_degree_dataset(6, 3, 2).unwrap();
        let config = ModelConfig::builder(2, 4, LayerType::Gin, 2).seed(1).build();
        let params = ModelParams::init(&config, FeatureSpec::Constant).unwrap();
        let members = vec![4, 1, 2];
        let layers = LayerActivations::capture_all(&params, &ds, &members).unwrap();
        assert_eq!(layers.len(), 2);
        for (pos, &g) in members.iter().enumerate() {
            let rec = params.forward(&ds.graphs[g]).unwrap();
            for k in 0..4 {
                assert_eq!(layers[1].graph_slice(k, pos), rec.layers[1].row(k).to_vec().as_slice());
                assert!((layers[1].pooled(k)[pos] - rec.pooled[k]).abs() < 1e-12);
            }
        }
        let back = LayerActivations::from_export(&LayerActivations::to_export(&layers).unwrap(), 2, members).unwrap();
        assert_eq!(back, layers[1]);
        assert!(LayerActivations::capture(&params, &ds, &[0], 3).is_err());
    }
}
