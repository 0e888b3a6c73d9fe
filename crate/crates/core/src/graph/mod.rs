//! Graph data model, batching and dataset splits.

mod synthetic;
mod tu;

pub use synthetic::{gen_planted_degree_dataset, gen_planted_degree_dataset_with, PlantedDegreeConfig};
pub use tu::{export_tu_dataset, load_tu_dataset};

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{substream, Stream};

/// Node-labelled undirected graph with a class label.
///
/// Neighbour lists are kept sorted so every traversal is deterministic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
    node_labels: Option<Vec<usize>>,
    label: usize,
}

impl Graph {
    /// Builds a graph from an undirected edge list. Each edge may appear once or in
    /// both directions; duplicates collapse.
    pub fn from_edges(
        node_count: usize,
        edges: &[(usize, usize)],
        node_labels: Option<Vec<usize>>,
        label: usize,
    ) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); node_count];
        for &(u, v) in edges {
            if u >= node_count || v >= node_count {
                return Err(Error::InvalidGraph(format!(
                    "edge ({u}, {v}) out of range for {node_count} nodes"
                )));
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop on node {u}")));
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        if let Some(labels) = &node_labels {
            if labels.len() != node_count {
                return Err(Error::InvalidGraph(format!(
                    "{} node labels for {node_count} nodes",
                    labels.len()
                )));
            }
        }
        Ok(Self {
            adjacency,
            node_labels,
            label,
        })
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }

    /// Each undirected edge once, as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, nbrs)| nbrs.iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
    }

    pub fn node_labels(&self) -> Option<&[usize]> {
        self.node_labels.as_deref()
    }

    pub fn label(&self) -> usize {
        self.label
    }

    pub fn set_label(&mut self, label: usize) {
        self.label = label;
    }

    /// Relabels nodes so that old node `i` becomes node `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.node_count();
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::InvalidArgument("not a permutation of the node set".into()));
        }
        let edges: Vec<_> = self.edges().map(|(u, v)| (perm[u], perm[v])).collect();
        let labels = self.node_labels.as_ref().map(|labels| {
            let mut out = vec![0; n];
            for (i, &l) in labels.iter().enumerate() {
                out[perm[i]] = l;
            }
            out
        });
        Self::from_edges(n, &edges, labels, self.label)
    }
}

/// Train/test partition of a dataset by graph index.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDataset {
    pub name: String,
    pub graphs: Vec<Graph>,
    pub num_classes: usize,
    /// Names of the categorical node labels; empty for unlabelled datasets.
    pub label_alphabet: Vec<String>,
    pub split: Split,
}

impl GraphDataset {
    pub fn new(
        name: impl Into<String>,
        graphs: Vec<Graph>,
        num_classes: usize,
        label_alphabet: Vec<String>,
    ) -> Result<Self> {
        let name = name.into();
        for (i, g) in graphs.iter().enumerate() {
            if g.label() >= num_classes {
                return Err(Error::InvalidGraph(format!(
                    "graph {i} has class {} but the dataset has {num_classes} classes",
                    g.label()
                )));
            }
            if let Some(labels) = g.node_labels() {
                if let Some(&bad) = labels.iter().find(|&&l| l >= label_alphabet.len()) {
                    return Err(Error::InvalidGraph(format!(
                        "graph {i} uses node label {bad} outside an alphabet of {}",
                        label_alphabet.len()
                    )));
                }
            }
        }
        let split = Split {
            train: (0..graphs.len()).collect(),
            test: Vec::new(),
        };
        Ok(Self {
            name,
            graphs,
            num_classes,
            label_alphabet,
            split,
        })
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn is_labeled(&self) -> bool {
        self.graphs.iter().any(|g| g.node_labels().is_some())
    }

    pub fn total_nodes(&self) -> usize {
        self.graphs.iter().map(Graph::node_count).sum()
    }

    pub fn set_split(&mut self, split: Split) -> Result<()> {
        let n = self.graphs.len();
        let mut seen = vec![false; n];
        for &i in split.train.iter().chain(&split.test) {
            if i >= n {
                return Err(Error::InvalidArgument(format!("split index {i} out of range")));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidArgument(format!(
                    "graph {i} appears twice in the split"
                )));
            }
        }
        self.split = split;
        Ok(())
    }

    /// Seeded split stratified by class; each class contributes
    /// `round(train_fraction * class_size)` graphs to the training side.
    pub fn stratified_split(&mut self, train_fraction: f64, seed: u64) -> Result<()> {
        if !(0.0..=1.0).contains(&train_fraction) {
            return Err(Error::InvalidArgument(format!(
                "train fraction {train_fraction} outside [0, 1]"
            )));
        }
        let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, g) in self.graphs.iter().enumerate() {
            by_class.entry(g.label()).or_default().push(i);
        }
        let mut rng = substream(seed, Stream::Split);
        let mut split = Split::default();
        for members in by_class.values_mut() {
            members.shuffle(&mut rng);
            let cut = (train_fraction * members.len() as f64).round() as usize;
            split.train.extend_from_slice(&members[..cut]);
            split.test.extend_from_slice(&members[cut..]);
        }
        split.train.sort_unstable();
        split.test.sort_unstable();
        self.set_split(split)
    }

    pub fn all_indices(&self) -> Vec<usize> {
        (0..self.graphs.len()).collect()
    }
}

/// Maps every node of a batched (disjoint-union) graph back to its source graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchIndex {
    /// Owning position in the batch for each node; nondecreasing.
    pub index_vector: Vec<usize>,
    /// First node of each member graph, plus a final entry equal to the total node count.
    pub offsets: Vec<usize>,
    /// Class label of each member graph.
    pub labels: Vec<usize>,
}

impl BatchIndex {
    pub fn from_sizes(sizes: &[usize], labels: Vec<usize>) -> Self {
        let mut offsets = Vec::with_capacity(sizes.len() + 1);
        let mut index_vector = Vec::with_capacity(sizes.iter().sum());
        let mut start = 0;
        for (g, &n) in sizes.iter().enumerate() {
            offsets.push(start);
            index_vector.extend(std::iter::repeat_n(g, n));
            start += n;
        }
        offsets.push(start);
        Self {
            index_vector,
            offsets,
            labels,
        }
    }

    pub fn num_graphs(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn num_nodes(&self) -> usize {
        self.index_vector.len()
    }

    pub fn range(&self, position: usize) -> std::ops::Range<usize> {
        self.offsets[position]..self.offsets[position + 1]
    }

    /// Extracts member graph `position` from the batched graph.
    pub fn slice(&self, batched: &Graph, position: usize) -> Graph {
        let range = self.range(position);
        let start = range.start;
        let edges: Vec<_> = range
            .clone()
            .flat_map(|u| {
                batched
                    .neighbors(u)
                    .iter()
                    .filter(move |&&v| u < v)
                    .map(move |&v| (u - start, v - start))
            })
            .collect();
        let labels = batched.node_labels().map(|l| l[range.clone()].to_vec());
        Graph::from_edges(range.len(), &edges, labels, self.labels[position])
            .expect("slice of a valid batch is a valid graph")
    }
}

/// Disjoint union of the selected graphs with a block-diagonal adjacency.
pub fn make_batch(dataset: &GraphDataset, graph_indices: &[usize]) -> Result<(Graph, BatchIndex)> {
    if graph_indices.is_empty() {
        return Err(Error::InvalidArgument("cannot batch an empty list of graphs".into()));
    }
    if let Some(&bad) = graph_indices.iter().find(|&&i| i >= dataset.len()) {
        return Err(Error::InvalidArgument(format!(
            "graph index {bad} out of range for {} graphs",
            dataset.len()
        )));
    }
    let members: Vec<&Graph> = graph_indices.iter().map(|&i| &dataset.graphs[i]).collect();
    let sizes: Vec<usize> = members.iter().map(|g| g.node_count()).collect();
    let index = BatchIndex::from_sizes(&sizes, members.iter().map(|g| g.label()).collect());

    let labeled = members.iter().all(|g| g.node_labels().is_some());
    let mut edges = Vec::new();
    let mut labels = Vec::new();
    for (pos, g) in members.iter().enumerate() {
        let off = index.offsets[pos];
        edges.extend(g.edges().map(|(u, v)| (u + off, v + off)));
        if labeled {
            labels.extend_from_slice(g.node_labels().unwrap_or_default());
        }
    }
    let batched = Graph::from_edges(
        index.num_nodes(),
        &edges,
        labeled.then_some(labels),
        members[0].label(),
    )?;
    Ok((batched, index))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(n: usize, label: usize) -> Graph {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Graph::from_edges(n, &edges, None, label).unwrap()
    }

    fn toy_dataset() -> GraphDataset {
        GraphDataset::new("toy", vec![path(3, 0), path(2, 1)], 2, vec![]).unwrap()
    }

    #[test]
    fn batch_of_two_graphs() {
        let ds = toy_dataset();
        let (g, idx) = make_batch(&ds, &[0, 1]).unwrap();
        assert_eq!(g.node_count(), 5);
        assert_eq!(idx.index_vector, vec![0, 0, 0, 1, 1]);
        assert_eq!(idx.offsets, vec![0, 3, 5]);
        assert!(g.has_edge(3, 4));
        assert!(!g.has_edge(2, 3));
    }

    #[test]
    fn batch_of_one_graph_is_identity() {
        let ds = toy_dataset();
        let (g, idx) = make_batch(&ds, &[0]).unwrap();
        assert_eq!(g, ds.graphs[0]);
        assert_eq!(idx.index_vector, vec![0, 0, 0]);
    }

    #[test]
    fn empty_batch_is_rejected() {
        assert!(make_batch(&toy_dataset(), &[]).is_err());
    }

    #[test]
    fn slicing_restores_members() {
        let ds = toy_dataset();
        let (g, idx) = make_batch(&ds, &[1, 0, 1]).unwrap();
        assert_eq!(idx.slice(&g, 0), ds.graphs[1]);
        assert_eq!(idx.slice(&g, 1), ds.graphs[0]);
        assert_eq!(idx.slice(&g, 2), ds.graphs[1]);
    }

    #[test]
    fn self_loops_rejected() {
        assert!(Graph::from_edges(2, &[(1, 1)], None, 0).is_err());
    }

    #[test]
    fn duplicate_edges_collapse() {
        let g = Graph::from_edges(2, &[(0, 1), (1, 0), (0, 1)], None, 0).unwrap();
        assert_eq!(g.degree(0), 1);
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn stratified_split_is_disjoint_and_balanced() {
        let graphs: Vec<_> = (0..50).map(|i| path(2, usize::from(i % 5 == 0))).collect();
        let mut ds = GraphDataset::new("s", graphs, 2, vec![]).unwrap();
        ds.stratified_split(0.8, 3).unwrap();
        assert_eq!(ds.split.train.len() + ds.split.test.len(), 50);
        let test_pos = ds.split.test.iter().filter(|&&i| ds.graphs[i].label() == 1).count();
        assert_eq!(test_pos, 2);
        let mut again = ds.clone();
        again.stratified_split(0.8, 3).unwrap();
        assert_eq!(again.split, ds.split);
    }
}
