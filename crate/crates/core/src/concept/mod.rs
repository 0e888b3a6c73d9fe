//! Node-level concepts: base predicates, negation, left-folded AND/OR composition and
//! their evaluation to boolean node masks.

mod mask;
mod render;
mod vocab;

pub use mask::ConceptMask;
pub use render::parse_formula;
pub use vocab::{base_vocabulary, Task};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Atomic node predicate. Label arguments are node-label names from the dataset alphabet.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BaseConcept {
    /// The node has label `A`.
    Is(String),
    /// The neighbourhood contains the listed labels, counted with multiplicity over
    /// distinct neighbours.
    NextTo(Vec<String>),
    /// Some neighbour satisfies `NextTo` of the listed labels.
    NbNextTo(Vec<String>),
    /// Degree exactly `X`.
    DegreeIs(usize),
    /// Some neighbour has degree exactly `X`.
    NbDegreeIs(usize),
    /// At least `X` neighbours have degree exactly `Y`.
    NbDegreeEqual(usize, usize),
    /// Degree greater than `X`.
    DegreeGreater(usize),
    /// At least `X` neighbours have degree greater than `Y`.
    NbDegreeGreater(usize, usize),
}

impl BaseConcept {
    fn uses_labels(&self) -> bool {
        matches!(self, BaseConcept::Is(_) | BaseConcept::NextTo(_) | BaseConcept::NbNextTo(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ConceptTerm {
    pub base: BaseConcept,
    pub negated: bool,
}

impl ConceptTerm {
    pub fn positive(base: BaseConcept) -> Self {
        Self { base, negated: false }
    }

    pub fn negative(base: BaseConcept) -> Self {
        Self { base, negated: true }
    }

    pub fn eval(&self, graph: &Graph, alphabet: &[String]) -> Result<ConceptMask> {
        let mask = eval_base(&self.base, graph, alphabet)?;
        Ok(if self.negated { mask.not() } else { mask })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Connective {
    And,
    Or,
}

impl Connective {
    pub fn apply(self, left: &ConceptMask, right: &ConceptMask) -> ConceptMask {
        match self {
            Connective::And => left.and(right),
            Connective::Or => left.or(right),
        }
    }
}

/// `t1 c1 t2 c2 ... tk`, evaluated strictly left to right with no precedence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConceptFormula {
    terms: Vec<ConceptTerm>,
    connectives: Vec<Connective>,
}

impl ConceptFormula {
    pub fn new(terms: Vec<ConceptTerm>, connectives: Vec<Connective>) -> Result<Self> {
        if terms.is_empty() || connectives.len() + 1 != terms.len() {
            return Err(Error::InvalidArgument(format!(
                "{} terms need {} connectives, got {}",
                terms.len(),
                terms.len().saturating_sub(1),
                connectives.len()
            )));
        }
        Ok(Self { terms, connectives })
    }

    pub fn single(term: ConceptTerm) -> Self {
        Self {
            terms: vec![term],
            connectives: Vec::new(),
        }
    }

    /// `self op term`.
    pub fn extended(&self, op: Connective, term: ConceptTerm) -> Self {
        let mut out = self.clone();
        out.terms.push(term);
        out.connectives.push(op);
        out
    }

    pub fn terms(&self) -> &[ConceptTerm] {
        &self.terms
    }

    pub fn connectives(&self) -> &[Connective] {
        &self.connectives
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn eval(&self, graph: &Graph, alphabet: &[String]) -> Result<ConceptMask> {
        let mut acc = self.terms[0].eval(graph, alphabet)?;
        for (op, term) in self.connectives.iter().zip(&self.terms[1..]) {
            acc = op.apply(&acc, &term.eval(graph, alphabet)?);
        }
        Ok(acc)
    }
}

impl std::fmt::Display for ConceptFormula {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&render::render(self))
    }
}

impl std::str::FromStr for ConceptFormula {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_formula(s)
    }
}

impl Serialize for ConceptFormula {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ConceptFormula {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        parse_formula(&text).map_err(serde::de::Error::custom)
    }
}

pub fn eval_formula(formula: &ConceptFormula, graph: &Graph, alphabet: &[String]) -> Result<ConceptMask> {
    formula.eval(graph, alphabet)
}

fn resolve(name: &str, alphabet: &[String]) -> Result<usize> {
    alphabet
        .iter()
        .position(|a| a == name)
        .ok_or_else(|| Error::Evaluation(format!("label {name:?} is not in the alphabet {alphabet:?}")))
}

/// `required[l]` = how many distinct neighbours with label `l` are needed.
fn requirements(names: &[String], alphabet: &[String]) -> Result<Vec<(usize, usize)>> {
    let mut req: Vec<(usize, usize)> = Vec::new();
    for name in names {
        let l = resolve(name, alphabet)?;
        match req.iter_mut().find(|r| r.0 == l) {
            Some(r) => r.1 += 1,
            None => req.push((l, 1)),
        }
    }
    Ok(req)
}

fn next_to_mask(graph: &Graph, labels: &[usize], req: &[(usize, usize)]) -> ConceptMask {
    ConceptMask::from_fn(graph.node_count(), |v| {
        req.iter().all(|&(l, need)| {
            graph.neighbors(v).iter().filter(|&&u| labels[u] == l).count() >= need
        })
    })
}

/// Evaluates one predicate at every node.
pub fn eval_base(base: &BaseConcept, graph: &Graph, alphabet: &[String]) -> Result<ConceptMask> {
    let n = graph.node_count();
    let labels = if base.uses_labels() {
        Some(graph.node_labels().ok_or_else(|| {
            Error::Evaluation(format!("{} needs node labels but the graph is unlabeled", render::render_base(base)))
        })?)
    } else {
        None
    };
    let count_nbrs = |v: usize, pred: &dyn Fn(usize) -> bool| graph.neighbors(v).iter().filter(|&&u| pred(u)).count();
    Ok(match base {
        BaseConcept::Is(name) => {
            let l = resolve(name, alphabet)?;
            let labels = labels.expect("checked above");
            ConceptMask::from_fn(n, |v| labels[v] == l)
        }
        BaseConcept::NextTo(names) => next_to_mask(graph, labels.expect("checked above"), &requirements(names, alphabet)?),
        BaseConcept::NbNextTo(names) => {
            let inner = next_to_mask(graph, labels.expect("checked above"), &requirements(names, alphabet)?);
            ConceptMask::from_fn(n, |v| graph.neighbors(v).iter().any(|&u| inner.get(u)))
        }
        BaseConcept::DegreeIs(x) => ConceptMask::from_fn(n, |v| graph.degree(v) == *x),
        BaseConcept::NbDegreeIs(x) => ConceptMask::from_fn(n, |v| count_nbrs(v, &|u| graph.degree(u) == *x) >= 1),
        BaseConcept::NbDegreeEqual(x, y) => ConceptMask::from_fn(n, |v| count_nbrs(v, &|u| graph.degree(u) == *y) >= *x),
        BaseConcept::DegreeGreater(x) => ConceptMask::from_fn(n, |v| graph.degree(v) > *x),
        BaseConcept::NbDegreeGreater(x, y) => ConceptMask::from_fn(n, |v| count_nbrs(v, &|u| graph.degree(u) > *y) >= *x),
    })
}
