mod common;

use gnn_dissect::concept::{parse_formula, BaseConcept, ConceptFormula, ConceptTerm, Connective};
use gnn_dissect::search::{scaled_iou, score_concept, LayerActivations, ThresholdGrid};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn de_morgan_holds_on_fixture() {
    let ds = common::mutag_fixture();
    let a = BaseConcept::Is("N".into());
    let b = BaseConcept::NextTo(vec!["O".into()]);
    let and_neg = ConceptFormula::single(ConceptTerm::negative(a.clone()))
        .extended(Connective::And, ConceptTerm::negative(b.clone()));
    let or_pos = ConceptFormula::single(ConceptTerm::positive(a.clone())).extended(Connective::Or, ConceptTerm::positive(b.clone()));
    let or_neg = ConceptFormula::single(ConceptTerm::negative(a)).extended(Connective::Or, ConceptTerm::negative(b));
    let and_pos = parse_formula("is(N) AND next-to(O)").unwrap();
    for g in &ds.graphs {
        let al = &ds.label_alphabet;
        assert_eq!(and_neg.eval(g, al).unwrap(), or_pos.eval(g, al).unwrap().not());
        assert_eq!(or_neg.eval(g, al).unwrap(), and_pos.eval(g, al).unwrap().not());
    }
}

#[test]
fn nitro_nitrogen_is_found() {
    let ds = common::mutag_fixture();
    let f = parse_formula("is(N) AND next-to(O, O)").unwrap();
    let hits: Vec<usize> = ds
        .graphs
        .iter()
        .map(|g| f.eval(g, &ds.label_alphabet).unwrap().count_ones())
        .collect();
    for (g, &h) in ds.graphs.iter().zip(&hits) {
        assert_eq!(h > 0, g.label() == 1);
    }
    assert_eq!(hits[2], 2);
}

#[test]
fn rendered_formulas_parse_back() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut atoms = common::degree_atoms(4);
    atoms.push(BaseConcept::NbNextTo(vec!["C".into(), "N".into()]));
    atoms.push(BaseConcept::NbDegreeGreater(2, 3));
    for _ in 0..200 {
        let f = common::random_formula(&mut rng, &atoms, 3);
        assert_eq!(parse_formula(&f.to_string()).unwrap(), f);
    }
}

#[test]
fn naive_scores_stay_in_unit_interval() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let atoms = common::degree_atoms(4);
    for _ in 0..20 {
        let ds = common::random_dataset(&mut rng, 6, 8);
        let acts: LayerActivations = common::random_activations(&mut rng, &ds, 1);
        let grid = ThresholdGrid {
            levels: vec![0.5],
            thresholds: vec![Some(vec![0.0, rng.gen_range(0.0..2.0)])],
        };
        let f = common::random_formula(&mut rng, &atoms, 3);
        let s = score_concept(&f, 0, &ds, &acts, &grid).unwrap();
        assert!((0.0..=1.0).contains(&s.score));
        for pos in 0..ds.len() {
            let mask = f.eval(&ds.graphs[pos], &ds.label_alphabet).unwrap();
            if let Ok(v) = scaled_iou(&mask, acts.graph_slice(0, pos), s.threshold) {
                assert!((0.0..=1.0).contains(&v));
            }
        }
    }
}
