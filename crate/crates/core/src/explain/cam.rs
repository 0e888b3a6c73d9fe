use ndarray::Array2;
use serde::Serialize;

use crate::concept::ConceptFormula;
use crate::error::{Error, Result};
use crate::gnn::ModelParams;
use crate::graph::Graph;
use crate::search::{LayerActivations, NeuronConceptMap};

/// Neurons whose head weight towards `class` is positive.
pub fn select_global_neurons(params: &ModelParams, class: usize) -> Result<Vec<usize>> {
    let w = &params.head.weight;
    if class >= w.nrows() {
        return Err(Error::InvalidArgument(format!("class {class} out of range for {} classes", w.nrows())));
    }
    Ok((0..w.ncols()).filter(|&k| w[[class, k]] > 0.0).collect())
}

/// Dataset id of the graph holding neuron `k`'s largest node activation; ties go to
/// the lowest id.
pub fn best_exemplar(k: usize, acts: &LayerActivations) -> Result<usize> {
    if k >= acts.num_neurons() {
        return Err(Error::InvalidArgument(format!("neuron {k} out of range")));
    }
    let mut best: Option<(f64, usize)> = None;
    for (pos, &g) in acts.members.iter().enumerate() {
        let peak = acts.graph_slice(k, pos).iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let better = match best {
            None => true,
            Some((v, id)) => peak > v || (peak == v && g < id),
        };
        if better {
            best = Some((peak, g));
        }
    }
    match best {
        Some((v, g)) if v > 0.0 => Ok(g),
        _ => Err(Error::DeadNeuron(k)),
    }
}

/// Symmetric edge weight stored once per undirected edge (`source < target`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EdgeWeight {
    pub source: usize,
    pub target: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConceptActivationMap {
    pub neuron: usize,
    pub class: usize,
    pub graph: usize,
    pub formula: ConceptFormula,
    pub threshold: f64,
    /// `eta_V[v] = w^y_k * H[k, v]`.
    pub node_mask: Vec<f64>,
    pub edge_mask: Vec<EdgeWeight>,
    /// Nodes whose activation exceeds the concept threshold.
    pub concept_nodes: Vec<usize>,
}

impl ConceptActivationMap {
    /// `eta_E[i, j]`, zero off the edge set.
    pub fn edge(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.edge_mask
            .iter()
            .find(|e| e.source == a && e.target == b)
            .map_or(0.0, |e| e.weight)
    }

    pub fn edge_matrix(&self) -> Array2<f64> {
        let n = self.node_mask.len();
        let mut m = Array2::zeros((n, n));
        for e in &self.edge_mask {
            m[[e.source, e.target]] = e.weight;
            m[[e.target, e.source]] = e.weight;
        }
        m
    }
}

/// `eta_E[i, j] = (eta_V[i] + eta_V[j]) * A[i, j]`.
pub fn edge_mask(graph: &Graph, node_mask: &[f64]) -> Result<Vec<EdgeWeight>> {
    if node_mask.len() != graph.node_count() {
        return Err(Error::Shape(format!(
            "node mask of {} entries for a graph of {} nodes",
            node_mask.len(),
            graph.node_count()
        )));
    }
    Ok(graph
        .edges()
        .map(|(source, target)| EdgeWeight {
            source,
            target,
            weight: node_mask[source] + node_mask[target],
        })
        .collect())
}

pub fn concept_activation_map(
    params: &ModelParams,
    graph: &Graph,
    graph_id: usize,
    class: usize,
    k: usize,
    map: &NeuronConceptMap,
) -> Result<ConceptActivationMap> {
    let w = &params.head.weight;
    if class >= w.nrows() || k >= w.ncols() {
        return Err(Error::InvalidArgument(format!("class {class} or neuron {k} out of range")));
    }
    let entry = map.top(k).ok_or_else(|| {
        Error::MissingArtifact(format!("no concept for neuron {k}; run dissect on the final layer first"))
    })?;
    let record = params.forward(graph)?;
    let h = record.final_layer().row(k);
    let weight = w[[class, k]];
    let node_mask: Vec<f64> = h.iter().map(|&v| weight * v).collect();
    Ok(ConceptActivationMap {
        neuron: k,
        class,
        graph: graph_id,
        formula: entry.formula.clone(),
        threshold: entry.threshold,
        edge_mask: edge_mask(graph, &node_mask)?,
        node_mask,
        concept_nodes: h.iter().enumerate().filter(|(_, &v)| v > entry.threshold).map(|(i, _)| i).collect(),
    })
}

/// Signed contribution `w^y_k * n^k_G` of neuron `k` to logit `y`.
pub fn absolute_contribution(params: &ModelParams, graph: &Graph, class: usize, k: usize) -> Result<f64> {
    let w = &params.head.weight;
    if class >= w.nrows() || k >= w.ncols() {
        return Err(Error::InvalidArgument(format!("class {class} or neuron {k} out of range")));
    }
    let record = params.forward(graph)?;
    Ok(w[[class, k]] * record.pooled[k])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::concept::{BaseConcept, ConceptTerm};
    use crate::gnn::{FeatureSpec, LayerType, Linear, ModelConfig};
    use crate::graph::BatchIndex;
    use crate::search::{NeuronConcepts, ScoreEntry};
    use ndarray::array;

    fn params_with_head(weight: Array2<f64>) -> ModelParams {
        let config = ModelConfig::builder(1, weight.ncols(), LayerType::Gin, weight.nrows()).seed(3).build();
        let mut p = ModelParams::init(&config, FeatureSpec::Constant).unwrap();
        let r = weight.nrows();
        p.head = Linear {
            weight,
            bias: ndarray::Array1::zeros(r),
        };
        p
    }

    fn map_for(neurons: usize) -> NeuronConceptMap {
        let formula = ConceptFormula::single(ConceptTerm::positive(BaseConcept::DegreeGreater(0)));
        NeuronConceptMap {
            neurons: (0..neurons)
                .map(|k| NeuronConcepts {
                    neuron: k,
                    entries: vec![ScoreEntry {
                        formula: formula.clone(),
                        score: 0.5,
                        threshold: 0.0,
                    }],
                })
                .collect(),
        }
    }

    #[test]
    fn global_neurons_have_positive_weight() {
        let p = params_with_head(array![[1.0, -2.0, 0.5], [-1.0, -1.0, -0.1]]);
        assert_eq!(select_global_neurons(&p, 0).unwrap(), vec![0, 2]);
        assert!(select_global_neurons(&p, 1).unwrap().is_empty());
        assert!(select_global_neurons(&p, 2).is_err());
    }

    fn acts(values: Vec<f64>, sizes: &[usize], members: Vec<usize>) -> LayerActivations {
        let n = values.len();
        let index = BatchIndex::from_sizes(sizes, vec![0; sizes.len()]);
        LayerActivations::new(1, Array2::from_shape_vec((1, n), values).unwrap(), index, members).unwrap()
    }

    #[test]
    fn exemplar_peak_and_ties() {
        let a = acts(vec![1.0, 4.9, 0.0, 5.0, 2.0], &[2, 1, 2], vec![0, 1, 3]);
        assert_eq!(best_exemplar(0, &a).unwrap(), 3);
        let tie = acts(vec![3.0, 1.0, 3.0], &[1, 1, 1], vec![7, 4, 2]);
        assert_eq!(best_exemplar(0, &tie).unwrap(), 2);
        let single = acts(vec![0.5], &[1], vec![9]);
        assert_eq!(best_exemplar(0, &single).unwrap(), 9);
        let dead = acts(vec![0.0, 0.0], &[2], vec![0]);
        assert!(matches!(best_exemplar(0, &dead), Err(Error::DeadNeuron(0))));
    }

    #[test]
    fn two_node_edge_weight() {
        let g = Graph::from_edges(2, &[(0, 1)], None, 0).unwrap();
        let e = edge_mask(&g, &[1.0, 3.0]).unwrap();
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].weight, 4.0);
    }

    #[test]
    fn zero_weight_gives_zero_map() {
        let p = params_with_head(array![[0.0, 1.0], [1.0, 1.0]]);
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)], None, 0).unwrap();
        let cam = concept_activation_map(&p, &g, 0, 0, 0, &map_for(2)).unwrap();
        assert!(cam.node_mask.iter().all(|&v| v == 0.0));
        assert!(cam.edge_mask.iter().all(|e| e.weight == 0.0));
        let m = cam.edge_matrix();
        assert_eq!(m, m.t());
    }

    #[test]
    fn single_node_graph() {
        let p = params_with_head(array![[2.0, -1.0]]);
        let g = Graph::from_edges(1, &[], None, 0).unwrap();
        let cam = concept_activation_map(&p, &g, 5, 0, 0, &map_for(2)).unwrap();
        let h = p.forward(&g).unwrap().final_layer()[[0, 0]];
        assert!(cam.edge_mask.is_empty());
        assert_eq!(cam.node_mask, vec![2.0 * h]);
        assert_eq!(cam.graph, 5);
    }

    #[test]
    fn missing_concept_is_reported() {
        let p = params_with_head(array![[1.0]]);
        let g = Graph::from_edges(1, &[], None, 0).unwrap();
        let empty = NeuronConceptMap { neurons: Vec::new() };
        assert!(matches!(
            concept_activation_map(&p, &g, 0, 0, 0, &empty),
            Err(Error::MissingArtifact(_))
        ));
    }
}
