//! Class-level explanations from dissected neurons: neuron selection, exemplars,
//! concept activation maps and local importance.

mod cam;
mod dot;
mod entropy;

pub use cam::{
    absolute_contribution, best_exemplar, concept_activation_map, edge_mask, select_global_neurons,
    ConceptActivationMap, EdgeWeight,
};
pub use dot::cam_to_dot;
pub use entropy::{
    entropy_importance, entropy_mask_optimize, masked_objective, EntropyImportance, EntropyMask,
    DEFAULT_ENTROPY_LR, DEFAULT_ENTROPY_STEPS,
};

use std::collections::BTreeMap;

use serde::Serialize;

use crate::concept::{ConceptFormula, ConceptMask};
use crate::error::{Error, Result};
use crate::gnn::ModelParams;
use crate::graph::GraphDataset;
use crate::search::{LayerActivations, NeuronConceptMap};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NeuronExplanation {
    pub neuron: usize,
    pub formula: ConceptFormula,
    pub score: f64,
    pub threshold: f64,
    pub exemplar_graph: usize,
    pub abs_contribution: f64,
    pub entropy: EntropyImportance,
    /// Higher-ranked neuron whose concept has the same masks on the exemplar graphs.
    pub duplicate_of: Option<usize>,
    #[serde(skip)]
    pub cam: ConceptActivationMap,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GlobalExplanation {
    pub class: usize,
    pub neurons: Vec<NeuronExplanation>,
    pub warnings: Vec<String>,
}

impl GlobalExplanation {
    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropySettings {
    pub steps: usize,
    pub lr: f64,
}

impl Default for EntropySettings {
    fn default() -> Self {
        Self {
            steps: DEFAULT_ENTROPY_STEPS,
            lr: DEFAULT_ENTROPY_LR,
        }
    }
}

/// Explains `class` through its positively weighted final-layer neurons, ranked by
/// concept score. `acts` must be the final layer.
pub fn build_global_explanation(
    params: &ModelParams,
    dataset: &GraphDataset,
    acts: &LayerActivations,
    map: &NeuronConceptMap,
    class: usize,
    entropy: EntropySettings,
) -> Result<GlobalExplanation> {
    if acts.layer != params.num_layers() {
        return Err(Error::InvalidArgument(format!(
            "explanations need final-layer activations, got layer {}",
            acts.layer
        )));
    }
    let mut warnings = Vec::new();
    let selected = select_global_neurons(params, class)?;
    if selected.is_empty() {
        warnings.push(format!("no neuron has a positive weight towards class {class}"));
    }
    let mut masks: BTreeMap<usize, EntropyMask> = BTreeMap::new();
    let mut neurons = Vec::new();
    for k in selected {
        let Some(entry) = map.top(k) else {
            warnings.push(format!("neuron {k} is dead or has no concept and is skipped"));
            continue;
        };
        let g = best_exemplar(k, acts)?;
        let graph = &dataset.graphs[g];
        if let std::collections::btree_map::Entry::Vacant(e) = masks.entry(g) {
            e.insert(entropy_mask_optimize(params, graph, class, entropy.steps, entropy.lr)?);
        }
        let importance = entropy_importance(&masks[&g], params, graph, class)?;
        neurons.push(NeuronExplanation {
            neuron: k,
            formula: entry.formula.clone(),
            score: entry.score,
            threshold: entry.threshold,
            exemplar_graph: g,
            abs_contribution: absolute_contribution(params, graph, class, k)?,
            entropy: importance[k],
            duplicate_of: None,
            cam: concept_activation_map(params, graph, g, class, k, map)?,
        });
    }
    neurons.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.neuron.cmp(&b.neuron)));

    let exemplars: Vec<usize> = {
        let mut e: Vec<usize> = neurons.iter().map(|n| n.exemplar_graph).collect();
        e.sort_unstable();
        e.dedup();
        e
    };
    let keys = neurons
        .iter()
        .map(|n| {
            let parts = exemplars
                .iter()
                .map(|&g| n.formula.eval(&dataset.graphs[g], &dataset.label_alphabet))
                .collect::<Result<Vec<_>>>()?;
            Ok(ConceptMask::concat(&parts))
        })
        .collect::<Result<Vec<_>>>()?;
    for i in 0..neurons.len() {
        if let Some(j) = (0..i).find(|&j| neurons[j].duplicate_of.is_none() && keys[j] == keys[i]) {
            neurons[i].duplicate_of = Some(neurons[j].neuron);
        }
    }
    Ok(GlobalExplanation {
        class,
        neurons,
        warnings,
    })
}
