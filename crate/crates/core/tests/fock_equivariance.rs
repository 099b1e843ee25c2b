mod common;

use common::pyr;
use walg::fock::{intertwiner_commutation_check, screening_apply, vertex_operator_apply, FockState, FockWeight};
use walg::glstruct::Root;
use walg::suites;
use walg::wakimoto::{class_of, Screenings};
use walg::{Error, FieldState, Scalar};

#[test]
fn subregular_gl3_suite() {
    let rep = suites::fock_equivariance().unwrap();
    // five degree-zero currents, two class members, three modes each
    assert_eq!(rep.records.len(), 30);
    assert!(rep.all_pass(), "{:#?}", rep.failures());
}

#[test]
fn other_pyramids() {
    for cols in [vec![1, 1, 1], vec![1, 2], vec![2, 1, 1], vec![1, 3]] {
        let rep = suites::intertwiners(&pyr(&cols)).unwrap();
        assert!(!rep.records.is_empty());
        assert!(rep.all_pass(), "{cols:?}: {:#?}", rep.failures());
    }
}

#[test]
fn class_of_the_cut_root() {
    let p = pyr(&[2, 1]);
    assert_eq!(class_of(&p, Root::simple(2)), vec![Root::new(2, 3), Root::new(1, 3)]);
}

#[test]
fn intertwiner_rejects_bad_inputs() {
    let scr = Screenings::new(&pyr(&[2, 1])).unwrap();
    // degree-zero root
    assert!(matches!(intertwiner_commutation_check(&scr, (1, 1), 1, Root::simple(1)), Err(Error::Invalid(_))));
    // u outside the degree-zero part
    assert!(matches!(intertwiner_commutation_check(&scr, (1, 3), 2, Root::new(2, 3)), Err(Error::Invalid(_))));
    // beta outside the class
    assert!(matches!(intertwiner_commutation_check(&scr, (1, 1), 2, Root::new(1, 2)), Err(Error::Invalid(_))));
}

#[test]
fn screening_of_vacuum_and_weights() {
    let scr = Screenings::new(&pyr(&[1, 1])).unwrap();
    let spec = scr.spec(1).unwrap();
    let t = spec.table().clone();
    // the screening current has no singular part with the vacuum
    assert!(screening_apply(&spec, &FockState::vacuum(&t)).unwrap().is_zero());
    // the exponent pairs to -2/(k+2) with itself: not integral
    let twice = FockState::new(spec.exponent.clone(), FieldState::vacuum(&t));
    let err = vertex_operator_apply(&spec.exponent, &spec.dressing, 0, &twice).unwrap_err();
    assert!(matches!(err, Error::NonIntegralExponents(_)));
    let zero = FockWeight::zero();
    assert!(zero.is_zero());
    assert_eq!(spec.exponent.pairing(&t, &zero), Scalar::zero());
}
