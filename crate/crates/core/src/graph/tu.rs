//! Reader and writer for the TU plain-text graph dataset format.
//!
//! A dataset `NAME` lives in four files:
//!
//! * `NAME_A.txt`: one `u, v` pair of 1-based global node ids per line,
//! * `NAME_graph_indicator.txt`: 1-based graph id of every node,
//! * `NAME_graph_labels.txt`: class label of every graph,
//! * `NAME_node_labels.txt` (optional): categorical label of every node.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{Graph, GraphDataset};
use crate::error::{Error, Result};

const MUTAG_ATOMS: [&str; 7] = ["C", "N", "O", "F", "I", "Cl", "Br"];
const PROTEINS_TYPES: [&str; 3] = ["A", "B", "C"];

fn file_path(dir: &Path, name: &str, suffix: &str) -> PathBuf {
    dir.join(format!("{name}_{suffix}.txt"))
}

struct Lines {
    path: PathBuf,
    text: String,
}

impl Lines {
    fn read(path: PathBuf) -> Result<Self> {
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok(Self { path, text })
    }

    fn try_read(path: PathBuf) -> Result<Option<Self>> {
        if path.exists() {
            Self::read(path).map(Some)
        } else {
            Ok(None)
        }
    }

    fn err(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Format {
            file: self.path.clone(),
            line,
            message: message.into(),
        }
    }

    /// Non-empty records with their 1-based line numbers.
    fn records(&self) -> impl Iterator<Item = (usize, &str)> {
        self.text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty())
    }

    fn integers(&self) -> Result<Vec<(usize, i64)>> {
        self.records()
            .map(|(line, rec)| {
                let field = rec.split(',').next().unwrap_or(rec).trim();
                field
                    .parse::<i64>()
                    .or_else(|_| field.parse::<f64>().map(|f| f as i64))
                    .map(|v| (line, v))
                    .map_err(|_| self.err(line, format!("expected an integer, found {rec:?}")))
            })
            .collect()
    }
}

fn alphabet_for(name: &str, raw: &BTreeSet<i64>) -> (Vec<String>, Box<dyn Fn(i64) -> Option<usize>>) {
    let fixed: Option<&[&str]> = match name.to_ascii_uppercase().as_str() {
        "MUTAG" => Some(&MUTAG_ATOMS),
        "PROTEINS" => Some(&PROTEINS_TYPES),
        _ => None,
    };
    match fixed {
        Some(names) if raw.iter().all(|&r| r >= 0 && (r as usize) < names.len()) => {
            let n = names.len();
            (
                names.iter().map(|s| s.to_string()).collect(),
                Box::new(move |r| (r >= 0 && (r as usize) < n).then_some(r as usize)),
            )
        }
        _ => {
            let sorted: Vec<i64> = raw.iter().copied().collect();
            let names = sorted.iter().map(|r| r.to_string()).collect();
            (names, Box::new(move |r| sorted.binary_search(&r).ok()))
        }
    }
}

/// Loads `dir/NAME_*.txt` into a dataset with 0-based nodes, symmetric adjacency and
/// graph labels remapped to `0..r`. The split defaults to a stratified 80/20 split with seed 0.
pub fn load_tu_dataset(dir: impl AsRef<Path>, name: &str) -> Result<GraphDataset> {
    let dir = dir.as_ref();
    let edges_file = Lines::read(file_path(dir, name, "A"))?;
    let indicator_file = Lines::read(file_path(dir, name, "graph_indicator"))?;
    let labels_file = Lines::read(file_path(dir, name, "graph_labels"))?;
    let node_labels_file = Lines::try_read(file_path(dir, name, "node_labels"))?;

    let graph_labels = labels_file.integers()?;
    let num_graphs = graph_labels.len();
    let indicator = indicator_file.integers()?;
    let num_nodes = indicator.len();

    // global node -> (graph, local index)
    let mut owner = Vec::with_capacity(num_nodes);
    let mut sizes = vec![0usize; num_graphs];
    for &(line, gid) in &indicator {
        if gid < 1 || gid as usize > num_graphs {
            return Err(indicator_file.err(
                line,
                format!("graph id {gid} outside 1..={num_graphs}"),
            ));
        }
        let g = gid as usize - 1;
        owner.push((g, sizes[g]));
        sizes[g] += 1;
    }

    let mut edges: Vec<Vec<(usize, usize)>> = vec![Vec::new(); num_graphs];
    for (line, rec) in edges_file.records() {
        let mut parts = rec.split(',').map(str::trim);
        let mut endpoint = || -> Result<usize> {
            let field = parts
                .next()
                .ok_or_else(|| edges_file.err(line, "expected two comma-separated node ids"))?;
            let id: i64 = field
                .parse()
                .map_err(|_| edges_file.err(line, format!("bad node id {field:?}")))?;
            if id < 1 || id as usize > num_nodes {
                return Err(edges_file.err(
                    line,
                    format!("node id {id} outside 1..={num_nodes}"),
                ));
            }
            Ok(id as usize - 1)
        };
        let (u, v) = (endpoint()?, endpoint()?);
        let ((gu, lu), (gv, lv)) = (owner[u], owner[v]);
        if gu != gv {
            return Err(edges_file.err(
                line,
                format!("edge joins nodes of graphs {} and {}", gu + 1, gv + 1),
            ));
        }
        if lu == lv {
            return Err(edges_file.err(line, format!("self-loop on node {}", u + 1)));
        }
        edges[gu].push((lu, lv));
    }

    let (alphabet, node_labels) = match &node_labels_file {
        Some(file) => {
            let raw = file.integers()?;
            if raw.len() != num_nodes {
                return Err(file.err(
                    raw.last().map_or(1, |r| r.0),
                    format!("{} node labels for {num_nodes} nodes", raw.len()),
                ));
            }
            let distinct: BTreeSet<i64> = raw.iter().map(|r| r.1).collect();
            let (alphabet, lookup) = alphabet_for(name, &distinct);
            let mut per_graph: Vec<Vec<usize>> = sizes.iter().map(|&n| Vec::with_capacity(n)).collect();
            for (node, &(line, r)) in raw.iter().enumerate() {
                let idx = lookup(r).ok_or_else(|| file.err(line, format!("unknown node label {r}")))?;
                per_graph[owner[node].0].push(idx);
            }
            (alphabet, Some(per_graph))
        }
        None => (Vec::new(), None),
    };

    let classes: Vec<i64> = graph_labels
        .iter()
        .map(|r| r.1)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut node_labels = node_labels.map(|v| v.into_iter());
    let mut graphs = Vec::with_capacity(num_graphs);
    for (g, &(_, raw_class)) in graph_labels.iter().enumerate() {
        let class = classes.binary_search(&raw_class).expect("class collected above");
        let labels = node_labels.as_mut().and_then(Iterator::next);
        graphs.push(Graph::from_edges(sizes[g], &edges[g], labels, class)?);
    }

    let mut dataset = GraphDataset::new(name, graphs, classes.len(), alphabet)?;
    dataset.stratified_split(0.8, 0)?;
    Ok(dataset)
}

/// Writes the dataset in TU format. Class labels and node labels are written as their
/// dense indices.
pub fn export_tu_dataset(dataset: &GraphDataset, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = &dataset.name;
    let mut a = String::new();
    let mut indicator = String::new();
    let mut labels = String::new();
    let mut node_labels = String::new();
    let mut offset = 0;
    for (gi, g) in dataset.graphs.iter().enumerate() {
        for u in 0..g.node_count() {
            for &v in g.neighbors(u) {
                let _ = writeln!(a, "{}, {}", u + offset + 1, v + offset + 1);
            }
            let _ = writeln!(indicator, "{}", gi + 1);
        }
        if let Some(nl) = g.node_labels() {
            for l in nl {
                let _ = writeln!(node_labels, "{l}");
            }
        }
        let _ = writeln!(labels, "{}", g.label());
        offset += g.node_count();
    }
    let write = |suffix: &str, body: &str| {
        let path = file_path(dir, name, suffix);
        fs::write(&path, body).map_err(|e| Error::io(path, e))
    };
    write("A", &a)?;
    write("graph_indicator", &indicator)?;
    write("graph_labels", &labels)?;
    if dataset.is_labeled() {
        write("node_labels", &node_labels)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_files(dir: &Path, name: &str, files: &[(&str, &str)]) {
        for (suffix, body) in files {
            fs::write(file_path(dir, name, suffix), body).unwrap();
        }
    }

    #[test]
    fn single_isolated_node() {
        let dir = tempfile::tempdir().unwrap();
        write_files(dir.path(), "ONE", &[("A", ""), ("graph_indicator", "1\n"), ("graph_labels", "1\n")]);
        let ds = load_tu_dataset(dir.path(), "ONE").unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.graphs[0].node_count(), 1);
        assert_eq!(ds.graphs[0].degree(0), 0);
        assert!(!ds.is_labeled());
    }

    #[test]
    fn zero_node_id_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        write_files(
            dir.path(),
            "BAD",
            &[("A", "1, 2\n0, 1\n"), ("graph_indicator", "1\n1\n"), ("graph_labels", "0\n")],
        );
        match load_tu_dataset(dir.path(), "BAD") {
            Err(Error::Format { line, file, .. }) => {
                assert_eq!(line, 2);
                assert!(file.ends_with("BAD_A.txt"));
            }
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn missing_file_names_the_file() {
        let dir = tempfile::tempdir().unwrap();
        write_files(dir.path(), "X", &[("A", ""), ("graph_indicator", "1\n")]);
        let err = load_tu_dataset(dir.path(), "X").unwrap_err();
        assert!(err.to_string().contains("X_graph_labels.txt"), "{err}");
    }

    #[test]
    fn single_direction_edges_are_symmetrized() {
        let dir = tempfile::tempdir().unwrap();
        write_files(
            dir.path(),
            "S",
            &[
                ("A", "1, 2\n2,3\n3, 2\n"),
                ("graph_indicator", "1\n1\n1\n"),
                ("graph_labels", "-1\n"),
            ],
        );
        let ds = load_tu_dataset(dir.path(), "S").unwrap();
        let g = &ds.graphs[0];
        assert!(g.has_edge(1, 0) && g.has_edge(0, 1));
        assert_eq!(g.degree(1), 2);
        assert_eq!(g.label(), 0);
    }

    #[test]
    fn class_labels_are_densified() {
        let dir = tempfile::tempdir().unwrap();
        write_files(
            dir.path(),
            "C",
            &[("A", ""), ("graph_indicator", "1\n2\n3\n"), ("graph_labels", "1\n-1\n1\n")],
        );
        let ds = load_tu_dataset(dir.path(), "C").unwrap();
        assert_eq!(ds.num_classes, 2);
        let labels: Vec<_> = ds.graphs.iter().map(Graph::label).collect();
        assert_eq!(labels, vec![1, 0, 1]);
    }

    #[test]
    fn generic_node_labels_use_sorted_raw_values() {
        let dir = tempfile::tempdir().unwrap();
        write_files(
            dir.path(),
            "G",
            &[
                ("A", "1, 2\n2, 1\n"),
                ("graph_indicator", "1\n1\n"),
                ("graph_labels", "0\n"),
                ("node_labels", "7\n3\n"),
            ],
        );
        let ds = load_tu_dataset(dir.path(), "G").unwrap();
        assert_eq!(ds.label_alphabet, vec!["3", "7"]);
        assert_eq!(ds.graphs[0].node_labels(), Some(&[1, 0][..]));
    }
}
