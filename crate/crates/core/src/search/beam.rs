//! Beam search over left-folded formulas, plus the exhaustive oracle.

use std::cmp::Ordering;
use std::collections::HashSet;

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::score::{NeuronScorer, ThresholdGrid, ThresholdScore, DEFAULT_QUANTILES};
use super::LayerActivations;
use crate::concept::{BaseConcept, ConceptFormula, ConceptMask, ConceptTerm, Connective};
use crate::error::{Error, Result};
use crate::graph::GraphDataset;
use crate::rng::{substream, Stream};

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub depth: usize,
    pub width: usize,
    pub quantiles: Vec<f64>,
    /// Graphs in the semantic-dedup probe batch.
    pub probe_graphs: usize,
    /// Adds threshold 0 (the activation support) to every neuron's grid.
    pub support_threshold: bool,
    pub seed: u64,
    /// Largest formula count `exhaustive_search` will enumerate.
    pub exhaustive_cap: u128,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            depth: 3,
            width: 10,
            quantiles: DEFAULT_QUANTILES.to_vec(),
            probe_graphs: 64,
            support_threshold: true,
            seed: 0,
            exhaustive_cap: 5_000_000,
        }
    }
}

impl SearchConfig {
    fn validate(&self) -> Result<()> {
        if self.depth == 0 || self.width == 0 {
            return Err(Error::InvalidArgument(format!(
                "depth {} and width {} must both be at least 1",
                self.depth, self.width
            )));
        }
        if self.probe_graphs == 0 {
            return Err(Error::InvalidArgument("probe batch must hold at least one graph".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreEntry {
    pub formula: ConceptFormula,
    pub score: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuronConcepts {
    pub neuron: usize,
    /// Ranked best first; empty for a dead neuron.
    pub entries: Vec<ScoreEntry>,
}

impl NeuronConcepts {
    pub fn top(&self) -> Option<&ScoreEntry> {
        self.entries.first()
    }

    pub fn is_dead(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Ranked concepts for every neuron of one layer, ordered by neuron index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NeuronConceptMap {
    pub neurons: Vec<NeuronConcepts>,
}

impl NeuronConceptMap {
    pub fn get(&self, neuron: usize) -> Option<&NeuronConcepts> {
        self.neurons.iter().find(|n| n.neuron == neuron)
    }

    pub fn top(&self, neuron: usize) -> Option<&ScoreEntry> {
        self.get(neuron).and_then(NeuronConcepts::top)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Every atom and its negation with dataset-wide masks over the activation batch.
#[derive(Debug, Clone)]
pub struct TermTable {
    pub terms: Vec<ConceptTerm>,
    pub masks: Vec<ConceptMask>,
    renders: Vec<String>,
}

impl TermTable {
    pub fn build(atoms: &[BaseConcept], dataset: &GraphDataset, members: &[usize]) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidArgument("empty atom set".into()));
        }
        let per_atom = atoms
            .par_iter()
            .map(|atom| {
                let parts = members
                    .iter()
                    .map(|&g| crate::concept::eval_base(atom, &dataset.graphs[g], &dataset.label_alphabet))
                    .collect::<Result<Vec<_>>>()?;
                Ok(ConceptMask::concat(&parts))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut table = Self {
            terms: Vec::new(),
            masks: Vec::new(),
            renders: Vec::new(),
        };
        for (atom, mask) in atoms.iter().zip(per_atom) {
            let negated = mask.not();
            for (term, m) in [
                (ConceptTerm::positive(atom.clone()), mask),
                (ConceptTerm::negative(atom.clone()), negated),
            ] {
                table.renders.push(ConceptFormula::single(term.clone()).to_string());
                table.terms.push(term);
                table.masks.push(m);
            }
        }
        Ok(table)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

#[derive(Clone)]
struct Candidate {
    formula: ConceptFormula,
    mask: ConceptMask,
    render: String,
    score: ThresholdScore,
}

impl Candidate {
    fn entry(&self) -> ScoreEntry {
        ScoreEntry {
            formula: self.formula.clone(),
            score: self.score.score,
            threshold: self.score.threshold,
        }
    }
}

/// Higher score, then shorter formula, then lexicographic render.
fn rank(a: &Candidate, b: &Candidate) -> Ordering {
    b.score
        .score
        .total_cmp(&a.score.score)
        .then(a.formula.len().cmp(&b.formula.len()))
        .then_with(|| a.render.cmp(&b.render))
}

fn connective_str(op: Connective) -> &'static str {
    match op {
        Connective::And => " AND ",
        Connective::Or => " OR ",
    }
}

/// Node positions of the seeded probe subsample, in batch order.
fn probe_nodes(acts: &LayerActivations, probe_graphs: usize, seed: u64) -> Vec<usize> {
    let g = acts.index.num_graphs();
    let mut chosen: Vec<usize> = if g <= probe_graphs {
        (0..g).collect()
    } else {
        sample(&mut substream(seed, Stream::Probe), g, probe_graphs).into_vec()
    };
    chosen.sort_unstable();
    chosen.into_iter().flat_map(|p| acts.index.range(p)).collect()
}

fn probe_key(mask: &ConceptMask, probe: &[usize]) -> ConceptMask {
    ConceptMask::from_fn(probe.len(), |j| mask.get(probe[j]))
}

/// Sorts, drops masks seen before (in earlier iterations or by a better-ranked
/// candidate of this one) and records the survivors as seen.
fn dedup(mut candidates: Vec<Candidate>, seen: &mut HashSet<ConceptMask>, probe: &[usize]) -> Vec<Candidate> {
    candidates.sort_by(rank);
    candidates
        .into_iter()
        .filter(|c| seen.insert(probe_key(&c.mask, probe)))
        .collect()
}

fn search_neuron(scorer: &NeuronScorer, table: &TermTable, probe: &[usize], config: &SearchConfig) -> Vec<ScoreEntry> {
    let mut seen = HashSet::new();
    let first: Vec<Candidate> = (0..table.len())
        .map(|t| Candidate {
            formula: ConceptFormula::single(table.terms[t].clone()),
            mask: table.masks[t].clone(),
            render: table.renders[t].clone(),
            score: scorer.score(&table.masks[t]),
        })
        .collect();
    let mut kept = dedup(first, &mut seen, probe);
    let mut map: Vec<Candidate> = kept.iter().take(config.width).cloned().collect();
    kept.truncate(config.width);
    for _ in 1..config.depth {
        let mut next = Vec::with_capacity(kept.len() * table.len() * 2);
        for base in &kept {
            for t in 0..table.len() {
                for op in [Connective::And, Connective::Or] {
                    let mask = op.apply(&base.mask, &table.masks[t]);
                    let score = scorer.score(&mask);
                    next.push(Candidate {
                        formula: base.formula.extended(op, table.terms[t].clone()),
                        render: format!("{}{}{}", base.render, connective_str(op), table.renders[t]),
                        mask,
                        score,
                    });
                }
            }
        }
        kept = dedup(next, &mut seen, probe);
        kept.truncate(config.width);
        map.extend(kept.iter().cloned());
        map.sort_by(rank);
        map.truncate(config.width);
        if kept.is_empty() {
            break;
        }
    }
    map.iter().map(Candidate::entry).collect()
}

/// Beam search on every neuron of `acts` over `atoms` and their negations.
pub fn beam_search(
    acts: &LayerActivations,
    dataset: &GraphDataset,
    atoms: &[BaseConcept],
    config: &SearchConfig,
) -> Result<NeuronConceptMap> {
    config.validate()?;
    acts.check_against(dataset)?;
    let table = TermTable::build(atoms, dataset, &acts.members)?;
    beam_search_terms(acts, &table, config)
}

/// Beam search with precomputed term masks (reusable across layers of one batch).
pub fn beam_search_terms(acts: &LayerActivations, table: &TermTable, config: &SearchConfig) -> Result<NeuronConceptMap> {
    config.validate()?;
    if table.is_empty() {
        return Err(Error::InvalidArgument("empty atom set".into()));
    }
    if table.masks[0].len() != acts.num_nodes() {
        return Err(Error::Shape("term masks do not match the activation batch".into()));
    }
    let grid = ThresholdGrid::from_activations(acts, &config.quantiles, config.support_threshold)?;
    let probe = probe_nodes(acts, config.probe_graphs, config.seed);
    let neurons = (0..acts.num_neurons())
        .into_par_iter()
        .map(|k| {
            let entries = match grid.for_neuron(k) {
                None => Vec::new(),
                Some(th) => {
                    let scorer = NeuronScorer::new(acts.neuron(k), &acts.index, th)?;
                    search_neuron(&scorer, table, &probe, config)
                }
            };
            Ok(NeuronConcepts { neuron: k, entries })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NeuronConceptMap { neurons })
}

/// Number of left-fold formulas with at most `max_len` terms over `atoms` atoms.
pub fn exhaustive_space_size(atoms: usize, max_len: usize) -> u128 {
    let terms = 2 * atoms as u128;
    (1..=max_len as u32).map(|l| terms.pow(l) * 2u128.pow(l - 1)).sum()
}

/// Scores every left-fold formula up to `max_len` terms and returns the best under
/// the beam's ranking.
pub fn exhaustive_search(
    neuron: usize,
    dataset: &GraphDataset,
    acts: &LayerActivations,
    atoms: &[BaseConcept],
    max_len: usize,
    config: &SearchConfig,
) -> Result<ScoreEntry> {
    if max_len == 0 || max_len > 3 {
        return Err(Error::InvalidArgument(format!("max_len {max_len} must lie in 1..=3")));
    }
    let size = exhaustive_space_size(atoms.len(), max_len);
    if size > config.exhaustive_cap {
        return Err(Error::SearchSpace {
            size,
            cap: config.exhaustive_cap,
        });
    }
    acts.check_against(dataset)?;
    let grid = ThresholdGrid::from_activations(acts, &config.quantiles, config.support_threshold)?;
    let th = grid.for_neuron(neuron).ok_or(Error::DeadNeuron(neuron))?;
    let table = TermTable::build(atoms, dataset, &acts.members)?;
    let scorer = NeuronScorer::new(acts.neuron(neuron), &acts.index, th)?;

    let mut best: Option<Candidate> = None;
    let mut level: Vec<Candidate> = (0..table.len())
        .map(|t| Candidate {
            formula: ConceptFormula::single(table.terms[t].clone()),
            mask: table.masks[t].clone(),
            render: table.renders[t].clone(),
            score: ThresholdScore {
                score: 0.0,
                threshold: 0.0,
            },
        })
        .collect();
    for len in 1..=max_len {
        for c in &mut level {
            c.score = scorer.score(&c.mask);
        }
        for c in &level {
            if best.as_ref().is_none_or(|b| rank(c, b) == Ordering::Less) {
                best = Some(c.clone());
            }
        }
        if len == max_len {
            break;
        }
        let mut next = Vec::with_capacity(level.len() * table.len() * 2);
        for base in &level {
            for t in 0..table.len() {
                for op in [Connective::And, Connective::Or] {
                    next.push(Candidate {
                        formula: base.formula.extended(op, table.terms[t].clone()),
                        mask: op.apply(&base.mask, &table.masks[t]),
                        render: format!("{}{}{}", base.render, connective_str(op), table.renders[t]),
                        score: base.score,
                    });
                }
            }
        }
        level = next;
    }
    Ok(best.expect("at least one formula").entry())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use ndarray::Array2;

    fn path_and_star() -> GraphDataset {
        let path = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)], None, 0).unwrap();
        let star = Graph::from_edges(5, &[(0, 1), (0, 2), (0, 3), (0, 4)], None, 1).unwrap();
        GraphDataset::new("toy", vec![path, star], 2, Vec::new()).unwrap()
    }

    /// Neuron 0 fires on degree > 2, neuron 1 on degree-1 nodes, neuron 2 is silent.
    fn acts(ds: &GraphDataset) -> LayerActivations {
        let degrees: Vec<f64> = ds
            .graphs
            .iter()
            .flat_map(|g| (0..g.node_count()).map(|v| g.degree(v) as f64))
            .collect();
        let n = degrees.len();
        let mut values = Array2::zeros((3, n));
        for (i, &d) in degrees.iter().enumerate() {
            values[[0, i]] = if d > 2.0 { d } else { 0.0 };
            values[[1, i]] = if d == 1.0 { 1.0 } else { 0.0 };
        }
        let index = crate::graph::BatchIndex::from_sizes(&[4, 5], vec![0, 1]);
        LayerActivations::new(2, values, index, vec![0, 1]).unwrap()
    }

    fn atoms() -> Vec<BaseConcept> {
        vec![
            BaseConcept::DegreeGreater(1),
            BaseConcept::DegreeGreater(2),
            BaseConcept::DegreeIs(1),
        ]
    }

    #[test]
    fn counting_the_space() {
        assert_eq!(exhaustive_space_size(3, 2), 78);
        assert_eq!(exhaustive_space_size(3, 1), 6);
    }

    #[test]
    fn recovers_planted_detectors() {
        let ds = path_and_star();
        let a = acts(&ds);
        let map = beam_search(&a, &ds, &atoms(), &SearchConfig::default()).unwrap();
        let top0 = map.top(0).unwrap();
        // the path is silent, so any formula picking out the star centre ties at 0.5
        assert_eq!(top0.formula.to_string(), "NOT deg-is(1)");
        assert_eq!(top0.score, 0.5);
        assert_eq!(top0.threshold, 0.0);
        let top1 = map.top(1).unwrap();
        assert_eq!(top1.formula.to_string(), "NOT deg-greater(1)");
        assert_eq!(top1.score, 1.0);
        assert!(map.get(2).unwrap().is_dead());
    }

    #[test]
    fn map_is_ranked_and_deduplicated() {
        let ds = path_and_star();
        let a = acts(&ds);
        let map = beam_search(&a, &ds, &atoms(), &SearchConfig::default()).unwrap();
        for n in &map.neurons {
            assert!(n.entries.len() <= 10);
            for w in n.entries.windows(2) {
                assert!(w[0].score >= w[1].score);
            }
        }
        let masks: HashSet<_> = map.neurons[1]
            .entries
            .iter()
            .map(|e| {
                let parts: Vec<_> = ds.graphs.iter().map(|g| e.formula.eval(g, &[]).unwrap()).collect();
                ConceptMask::concat(&parts)
            })
            .collect();
        assert_eq!(masks.len(), map.neurons[1].entries.len());
    }

    #[test]
    fn wide_beam_matches_exhaustive() {
        let ds = path_and_star();
        let a = acts(&ds);
        let config = SearchConfig {
            depth: 2,
            width: 100,
            ..SearchConfig::default()
        };
        let map = beam_search(&a, &ds, &atoms(), &config).unwrap();
        for k in 0..2 {
            let ex = exhaustive_search(k, &ds, &a, &atoms(), 2, &config).unwrap();
            assert_eq!(map.top(k).unwrap(), &ex);
        }
        assert!(matches!(
            exhaustive_search(2, &ds, &a, &atoms(), 2, &config),
            Err(Error::DeadNeuron(2))
        ));
    }

    #[test]
    fn bad_arguments() {
        let ds = path_and_star();
        let a = acts(&ds);
        assert!(beam_search(&a, &ds, &[], &SearchConfig::default()).is_err());
        let zero = SearchConfig {
            width: 0,
            ..SearchConfig::default()
        };
        assert!(beam_search(&a, &ds, &atoms(), &zero).is_err());
        let capped = SearchConfig {
            exhaustive_cap: 10,
            ..SearchConfig::default()
        };
        assert!(matches!(
            exhaustive_search(0, &ds, &a, &atoms(), 2, &capped),
            Err(Error::SearchSpace { size: 78, cap: 10 })
        ));
    }

    #[test]
    fn json_round_trip() {
        let ds = path_and_star();
        let map = beam_search(&acts(&ds), &ds, &atoms(), &SearchConfig::default()).unwrap();
        let text = map.to_json().unwrap();
        assert!(text.starts_with("[\n"));
        assert_eq!(NeuronConceptMap::from_json(&text).unwrap(), map);
    }
}
