//! Atomic concept sets per task.

use super::BaseConcept;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Mutag,
    Proteins,
    ImdbBinary,
    RedditBinary,
    SyntheticDegree,
}

impl std::str::FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "MUTAG" => Ok(Task::Mutag),
            "PROTEINS" => Ok(Task::Proteins),
            "IMDB-B" | "IMDB-BINARY" => Ok(Task::ImdbBinary),
            "REDDIT-B" | "REDDIT-BINARY" => Ok(Task::RedditBinary),
            "SYNTHETIC-DEGREE" => Ok(Task::SyntheticDegree),
            _ => Err(Error::Config(format!("no concept vocabulary for task {s:?}"))),
        }
    }
}

fn labels(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

pub fn base_vocabulary(task: Task) -> Vec<BaseConcept> {
    use BaseConcept::*;
    match task {
        Task::Mutag => {
            let atoms = ["C", "N", "O", "Cl", "Br", "I", "F"];
            let mut v: Vec<BaseConcept> = atoms.iter().map(|a| Is(a.to_string())).collect();
            v.extend(atoms.iter().map(|a| NextTo(labels(&[a]))));
            v.push(NextTo(labels(&["C", "C"])));
            v.push(NextTo(labels(&["C", "C", "C"])));
            v.extend((1..=4).map(DegreeIs));
            v.extend((1..=3).map(NbDegreeIs));
            v
        }
        Task::Proteins => {
            let mut v: Vec<BaseConcept> = ["A", "B", "C"].iter().map(|a| Is(a.to_string())).collect();
            for (label, max) in [("A", 3), ("B", 3), ("C", 5)] {
                v.extend((1..=max).map(|k| NextTo(vec![label.to_string(); k])));
            }
            for label in ["A", "B", "C"] {
                v.extend((1..=3).map(|k| NbNextTo(vec![label.to_string(); k])));
            }
            v
        }
        Task::ImdbBinary => {
            let mut v: Vec<BaseConcept> = (1..=99).step_by(2).map(DegreeGreater).collect();
            for x in [10, 30] {
                v.extend((1..=5).map(|y| NbDegreeGreater(x, y)));
            }
            v
        }
        Task::RedditBinary => {
            let mut v: Vec<BaseConcept> = (1..=97).step_by(3).map(DegreeGreater).collect();
            v.push(DegreeGreater(99));
            for x in [5, 10, 30] {
                v.extend((1..=2).map(|y| NbDegreeGreater(x, y)));
            }
            v.extend([1, 2, 3, 4, 10].into_iter().map(|y| NbDegreeEqual(1, y)));
            v
        }
        Task::SyntheticDegree => (1..=12).map(DegreeGreater).chain((1..=12).map(DegreeIs)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mutag_vocabulary() {
        let v = base_vocabulary(Task::Mutag);
        assert_eq!(v.len(), 23);
        assert!(v.contains(&BaseConcept::Is("C".into())));
        assert!(v.contains(&BaseConcept::NextTo(labels(&["C", "C", "C"]))));
    }

    #[test]
    fn imdb_vocabulary() {
        let v = base_vocabulary(Task::ImdbBinary);
        assert!(v.contains(&BaseConcept::NbDegreeGreater(30, 5)));
        assert!(v.contains(&BaseConcept::DegreeGreater(99)));
        assert!(!v.contains(&BaseConcept::DegreeGreater(2)));
        assert_eq!(v.len(), 60);
    }

    #[test]
    fn proteins_and_reddit_sizes() {
        assert_eq!(base_vocabulary(Task::Proteins).len(), 23);
        let reddit = base_vocabulary(Task::RedditBinary);
        assert!(reddit.contains(&BaseConcept::NbDegreeEqual(1, 10)));
        assert!(reddit.contains(&BaseConcept::DegreeGreater(4)));
    }

    #[test]
    fn synthetic_vocabulary_has_24_predicates() {
        assert_eq!(base_vocabulary(Task::SyntheticDegree).len(), 24);
    }

    #[test]
    fn unknown_task() {
        assert!("cora".parse::<Task>().is_err());
        assert_eq!("imdb-binary".parse::<Task>().unwrap(), Task::ImdbBinary);
    }
}
