#![allow(dead_code)]

use std::path::PathBuf;

use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use gnn_dissect::concept::{BaseConcept, ConceptFormula, ConceptTerm, Connective};
use gnn_dissect::graph::{load_tu_dataset, BatchIndex, Graph, GraphDataset};
use gnn_dissect::search::LayerActivations;

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/mutag_mini")
}

pub fn mutag_fixture() -> GraphDataset {
    load_tu_dataset(fixture_dir(), "MUTAG").expect("fixture loads")
}

/// Connected random graph: a random tree plus a few chords.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, labels: Option<usize>, class: usize) -> Graph {
    let mut edges = Vec::new();
    for v in 1..n {
        edges.push((rng.gen_range(0..v), v));
    }
    for _ in 0..rng.gen_range(0..=n / 2) {
        let (u, v) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if u != v {
            edges.push((u, v));
        }
    }
    let node_labels = labels.map(|k| (0..n).map(|_| rng.gen_range(0..k)).collect());
    Graph::from_edges(n, &edges, node_labels, class).unwrap()
}

pub fn random_dataset(rng: &mut ChaCha8Rng, graphs: usize, max_nodes: usize) -> GraphDataset {
    let gs = (0..graphs)
        .map(|i| {
            let n = rng.gen_range(2..=max_nodes);
            random_graph(rng, n, None, i % 2)
        })
        .collect();
    GraphDataset::new("random", gs, 2, Vec::new()).unwrap()
}

/// ReLU-like activations: roughly a third of the entries are exactly zero.
pub fn random_activations(rng: &mut ChaCha8Rng, ds: &GraphDataset, neurons: usize) -> LayerActivations {
    let sizes: Vec<usize> = ds.graphs.iter().map(|g| g.node_count()).collect();
    let index = BatchIndex::from_sizes(&sizes, ds.graphs.iter().map(|g| g.label()).collect());
    let total = index.num_nodes();
    let values = Array2::from_shape_fn((neurons, total), |_| {
        if rng.gen_bool(0.35) {
            0.0
        } else {
            rng.gen_range(0.0..3.0)
        }
    });
    LayerActivations::new(1, values, index, ds.all_indices()).unwrap()
}

pub fn degree_atoms(max: usize) -> Vec<BaseConcept> {
    (1..=max)
        .map(BaseConcept::DegreeGreater)
        .chain((1..=max).map(BaseConcept::DegreeIs))
        .collect()
}

pub fn random_formula(rng: &mut ChaCha8Rng, atoms: &[BaseConcept], max_len: usize) -> ConceptFormula {
    let term = |rng: &mut ChaCha8Rng| {
        let base = atoms[rng.gen_range(0..atoms.len())].clone();
        if rng.gen_bool(0.5) {
            ConceptTerm::negative(base)
        } else {
            ConceptTerm::positive(base)
        }
    };
    let mut f = ConceptFormula::single(term(rng));
    for _ in 1..rng.gen_range(1..=max_len) {
        let op = if rng.gen_bool(0.5) { Connective::And } else { Connective::Or };
        let t = term(rng);
        f = f.extended(op, t);
    }
    f
}
