//! Thresholding, scaled IOU and the batched scorer.

use serde::{Deserialize, Serialize};

use super::LayerActivations;
use crate::concept::{ConceptFormula, ConceptMask};
use crate::error::{Error, Result};
use crate::graph::{BatchIndex, GraphDataset};

pub const DEFAULT_QUANTILES: [f64; 7] = [0.50, 0.60, 0.70, 0.80, 0.90, 0.95, 0.99];

/// Per-neuron binarisation thresholds at fixed quantiles of the neuron's positive
/// activations over the dataset, optionally preceded by the support threshold 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdGrid {
    pub levels: Vec<f64>,
    /// `None` marks a dead neuron (no positive activation anywhere).
    pub thresholds: Vec<Option<Vec<f64>>>,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

impl ThresholdGrid {
    pub fn from_activations(acts: &LayerActivations, levels: &[f64], support: bool) -> Result<Self> {
        if levels.is_empty() || levels.iter().any(|&q| !(q > 0.0 && q < 1.0)) {
            return Err(Error::InvalidArgument(format!("quantile levels {levels:?} must lie in (0, 1)")));
        }
        let mut levels = levels.to_vec();
        levels.sort_by(f64::total_cmp);
        let thresholds = (0..acts.num_neurons())
            .map(|k| {
                let mut pos: Vec<f64> = acts.neuron(k).iter().copied().filter(|&v| v > 0.0).collect();
                if pos.is_empty() {
                    return None;
                }
                pos.sort_by(f64::total_cmp);
                let zero = support.then_some(0.0);
                Some(zero.into_iter().chain(levels.iter().map(|&q| quantile(&pos, q))).collect())
            })
            .collect();
        Ok(Self { levels, thresholds })
    }

    pub fn for_neuron(&self, k: usize) -> Option<&[f64]> {
        self.thresholds.get(k).and_then(|t| t.as_deref())
    }

    pub fn is_dead(&self, k: usize) -> bool {
        self.for_neuron(k).is_none()
    }
}

/// Bit `i` is set iff `activations[i] > tau`.
pub fn apply_threshold(activations: &[f64], tau: f64) -> ConceptMask {
    ConceptMask::from_fn(activations.len(), |i| activations[i] > tau)
}

/// `IOU(mask, activations > tau)` scaled by the share of total activation captured
/// inside their intersection. Lies in `[0, 1]`; the divergence is its negation.
pub fn scaled_iou(mask: &ConceptMask, activations: &[f64], tau: f64) -> Result<f64> {
    if mask.len() != activations.len() {
        return Err(Error::Shape(format!(
            "mask of {} nodes against {} activations",
            mask.len(),
            activations.len()
        )));
    }
    if tau < 0.0 {
        return Err(Error::InvalidArgument(format!("threshold {tau} is negative")));
    }
    let total: f64 = activations.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidArgument("activations sum to zero".into()));
    }
    let mut inter = 0usize;
    let mut union = 0usize;
    let mut captured = 0.0;
    for (i, &b) in activations.iter().enumerate() {
        let a = mask.get(i);
        let t = b > tau;
        if a && t {
            inter += 1;
            captured += b;
        }
        if a || t {
            union += 1;
        }
    }
    if union == 0 {
        return Ok(0.0);
    }
    Ok(inter as f64 / union as f64 * (captured / total))
}

/// Best threshold and its dataset-mean scaled IOU.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdScore {
    pub score: f64,
    pub threshold: f64,
}

/// Picks the first maximum so ties resolve to the lowest threshold.
fn best_over_grid(scores: impl Iterator<Item = (f64, f64)>) -> ThresholdScore {
    let mut best = ThresholdScore {
        score: f64::NEG_INFINITY,
        threshold: 0.0,
    };
    for (score, threshold) in scores {
        if score > best.score {
            best = ThresholdScore { score, threshold };
        }
    }
    best
}

/// Reference scorer: evaluates the formula on each graph and averages per-graph
/// scaled IOU, then takes the best grid threshold.
pub fn score_concept(
    formula: &ConceptFormula,
    neuron: usize,
    dataset: &GraphDataset,
    acts: &LayerActivations,
    grid: &ThresholdGrid,
) -> Result<ThresholdScore> {
    let thresholds = grid.for_neuron(neuron).ok_or(Error::DeadNeuron(neuron))?;
    let h = acts.neuron(neuron);
    let masks = acts
        .members
        .iter()
        .map(|&g| formula.eval(&dataset.graphs[g], &dataset.label_alphabet))
        .collect::<Result<Vec<_>>>()?;
    let graphs = acts.index.num_graphs();
    let per_threshold = thresholds.iter().map(|&tau| {
        let mut sum = 0.0;
        for (pos, mask) in masks.iter().enumerate() {
            let b = &h[acts.index.range(pos)];
            // graphs where the neuron is silent contribute 0
            if let Ok(v) = scaled_iou(mask, b, tau) {
                sum += v;
            }
        }
        (sum / graphs as f64, tau)
    });
    Ok(best_over_grid(per_threshold))
}

/// Scatter addition: `out[s] = sum of x[j] over j with index[j] == s`.
pub fn segment_sum(x: &[f64], index: &[usize], num_segments: usize) -> Result<Vec<f64>> {
    if x.len() != index.len() {
        return Err(Error::Shape(format!("{} values against {} indices", x.len(), index.len())));
    }
    let mut out = vec![0.0; num_segments];
    for (&v, &s) in x.iter().zip(index) {
        *out.get_mut(s).ok_or_else(|| Error::Shape(format!("segment {s} out of range")))? += v;
    }
    Ok(out)
}

/// Per-neuron quantities shared by every candidate formula.
pub struct NeuronScorer<'a> {
    activations: &'a [f64],
    index: &'a [usize],
    thresholds: Vec<f64>,
    /// Number of thresholds strictly below each node's activation.
    rank: Vec<u8>,
    /// Activation mass of each graph.
    total: Vec<f64>,
    /// `above[j][g]`: nodes of graph `g` above threshold `j`.
    above: Vec<Vec<f64>>,
    num_graphs: usize,
}

impl<'a> NeuronScorer<'a> {
    pub fn new(activations: &'a [f64], index: &'a BatchIndex, thresholds: &[f64]) -> Result<Self> {
        if activations.len() != index.num_nodes() {
            return Err(Error::Shape(format!(
                "{} activations against an index of {} nodes",
                activations.len(),
                index.num_nodes()
            )));
        }
        if thresholds.windows(2).any(|w| w[0] > w[1]) || thresholds.len() > u8::MAX as usize {
            return Err(Error::InvalidArgument("thresholds must be sorted ascending".into()));
        }
        let num_graphs = index.num_graphs();
        let iv = &index.index_vector;
        let total = segment_sum(activations, iv, num_graphs)?;
        let above = thresholds
            .iter()
            .map(|&tau| {
                let ind: Vec<f64> = activations.iter().map(|&b| f64::from(u8::from(b > tau))).collect();
                segment_sum(&ind, iv, num_graphs)
            })
            .collect::<Result<Vec<_>>>()?;
        let rank = activations
            .iter()
            .map(|&b| thresholds.iter().take_while(|&&t| b > t).count() as u8)
            .collect();
        Ok(Self {
            activations,
            index: iv,
            thresholds: thresholds.to_vec(),
            rank,
            total,
            above,
            num_graphs,
        })
    }

    /// Dataset-mean scaled IOU at every threshold of the grid.
    pub fn scores_per_threshold(&self, mask: &ConceptMask) -> Vec<f64> {
        let nt = self.thresholds.len();
        let g = self.num_graphs;
        let mut size = vec![0.0; g];
        let mut inter = vec![0.0; nt * g];
        let mut captured = vec![0.0; nt * g];
        for i in mask.iter_ones() {
            let s = self.index[i];
            size[s] += 1.0;
            let b = self.activations[i];
            for j in 0..self.rank[i] as usize {
                inter[j * g + s] += 1.0;
                captured[j * g + s] += b;
            }
        }
        (0..nt)
            .map(|j| {
                let mut sum = 0.0;
                for s in 0..g {
                    if self.total[s] <= 0.0 {
                        continue;
                    }
                    let i = inter[j * g + s];
                    let union = size[s] + self.above[j][s] - i;
                    if union > 0.0 {
                        sum += i / union * (captured[j * g + s] / self.total[s]);
                    }
                }
                sum / g as f64
            })
            .collect()
    }

    pub fn score(&self, mask: &ConceptMask) -> ThresholdScore {
        let per = self.scores_per_threshold(mask);
        best_over_grid(per.into_iter().zip(self.thresholds.iter().copied()))
    }
}

/// Scores every candidate mask against one neuron using segment sums over the batch index.
pub fn compare_vectorized(
    activations: &[f64],
    index: &BatchIndex,
    masks: &[ConceptMask],
    thresholds: &[f64],
) -> Result<Vec<ThresholdScore>> {
    if thresholds.is_empty() {
        return Err(Error::InvalidArgument("empty threshold grid".into()));
    }
    let scorer = NeuronScorer::new(activations, index, thresholds)?;
    masks
        .iter()
        .map(|m| {
            if m.len() != activations.len() {
                return Err(Error::Shape(format!(
                    "mask of {} nodes against {} activations",
                    m.len(),
                    activations.len()
                )));
            }
            Ok(scorer.score(m))
        })
        .collect()
}
