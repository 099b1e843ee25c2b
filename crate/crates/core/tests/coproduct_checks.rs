mod common;

use common::pyr;
use proptest::prelude::*;
use walg::coproduct::{
    binomial_identity_check, coassociativity_check, factorization_check, lowering_by_factors,
    miura_compatibility_check, screening_restriction, subregular_coproduct_check, subregular_lowering_image,
    LoweringReading,
};
use walg::miura::{linear_factors, principal_table, product, subregular_generators};
use walg::report::Status;
use walg::{suites, Error, FieldState};

fn status(r: &walg::report::Report, id: &str) -> Status {
    let recs: Vec<_> = r.records.iter().filter(|x| x.check == id).collect();
    assert!(!recs.is_empty(), "no record {id}");
    if recs.iter().all(|x| x.status == Status::Pass) {
        Status::Pass
    } else {
        Status::Fail
    }
}

#[test]
fn factorization_suite() {
    let rep = suites::coproducts().unwrap();
    assert!(rep.all_pass(), "{:#?}", rep.failures());
}

#[test]
fn principal_gl3_images() {
    let r = factorization_check(&pyr(&[1, 1, 1]), 2).unwrap();
    assert!(r.all_pass(), "{:#?}", r.report.failures());
    assert_eq!(r.levels["k1"], "k + 1");
    assert_eq!(r.levels["k2"], "k + 2");
    assert_eq!(r.images[0].image, "1*W1[1] + 1*W2[1]");
}

#[test]
fn larger_principal_and_rectangular_splits() {
    for (cols, after) in [(vec![1, 1, 1, 1], 2), (vec![1, 1, 1, 1], 1), (vec![2, 2, 2], 1), (vec![2, 2, 2], 2)] {
        let r = miura_compatibility_check(&pyr(&cols), after).unwrap();
        assert!(r.all_pass(), "{cols:?} after {after}: {:#?}", r.report.failures());
        assert!(r.report.find("coproduct.tensor_split").is_some());
        assert_eq!(status(&r.report, "coproduct.leading_terms_distinct"), Status::Pass);
    }
}

#[test]
fn general_pyramid_cuts() {
    let p = pyr(&[1, 3, 2, 1]);
    for after in 1..=3 {
        let r = factorization_check(&p, after).unwrap();
        assert!(r.all_pass(), "after {after}: {:#?}", r.report.failures());
        let s = screening_restriction(&p, after).unwrap();
        assert!(s.all_pass());
    }
    let r = coassociativity_check(&p, 1, 2).unwrap();
    assert!(r.all_pass(), "{:#?}", r.report.failures());
    assert_eq!(r.levels["k"], "k");
}

#[test]
fn four_column_coassociativity() {
    for (c1, c2) in [(1, 2), (1, 3), (2, 3)] {
        let r = coassociativity_check(&pyr(&[1, 1, 1, 1]), c1, c2).unwrap();
        assert!(r.all_pass(), "{c1},{c2}: {:#?}", r.report.failures());
    }
}

#[test]
fn bad_cuts() {
    assert!(matches!(factorization_check(&pyr(&[1, 1]), 0), Err(Error::InvalidColumn(_))));
    assert!(matches!(factorization_check(&pyr(&[1, 1]), 2), Err(Error::InvalidColumn(_))));
    assert!(matches!(coassociativity_check(&pyr(&[1, 1, 1]), 1, 3), Err(Error::InvalidColumn(_))));
}

#[test]
fn subregular_literal_and_corrected_forms() {
    let r = subregular_coproduct_check(3, 2).unwrap();
    let rep = &r.report;
    assert_eq!(status(rep, "coproduct.subregular.raising"), Status::Pass);
    assert_eq!(status(rep, "coproduct.subregular.lowering"), Status::Pass);
    assert_eq!(status(rep, "coproduct.subregular.center"), Status::Pass);
    // W_1 = -(h_3) here, so the stated sign of W_1 is off
    assert_eq!(status(rep, "coproduct.subregular.cartan"), Status::Fail);
    assert_eq!(status(rep, "coproduct.subregular.trace"), Status::Fail);
    assert_eq!(status(rep, "coproduct.subregular.cartan_sign_adjusted"), Status::Pass);
    assert_eq!(status(rep, "coproduct.subregular.trace_sign_adjusted"), Status::Pass);
    let w = &rep.find("coproduct.subregular.trace").unwrap().witness[0];
    assert_eq!(w, "2*e[3,3]");
}

#[test]
fn subregular_lowering_readings() {
    for (n, n1) in [(4, 2), (4, 3), (5, 2), (5, 3)] {
        let r = subregular_coproduct_check(n, n1).unwrap();
        let rep = &r.report;
        assert_eq!(status(rep, "coproduct.subregular.lowering_flattened"), Status::Pass, "{n},{n1}");
        assert_eq!(status(rep, "coproduct.subregular.raising"), Status::Pass);
        assert_eq!(status(rep, "coproduct.subregular.trace_sign_adjusted"), Status::Pass);
        assert_eq!(status(rep, "coproduct.subregular.cartan_sign_adjusted"), Status::Pass);
        assert_eq!(status(rep, "coproduct.subregular.center"), Status::Pass);
        let literal = if n - n1 <= 1 { Status::Pass } else { Status::Fail };
        assert_eq!(status(rep, "coproduct.subregular.lowering"), literal, "{n},{n1}");
    }
}

#[test]
fn trivial_split_reproduces_lowering_field() {
    let f = subregular_generators(4, 4).unwrap();
    let direct = lowering_by_factors(&f).unwrap();
    assert_eq!(direct, f.f);
    for reading in [LoweringReading::Literal, LoweringReading::Flattened] {
        assert_eq!(subregular_lowering_image(&f, reading).unwrap(), f.f);
    }
}

#[test]
fn binomial_identity_through_six() {
    for n in 1..=6 {
        let r = binomial_identity_check(n).unwrap();
        let cases = (n + 1) * (n + 2) / 2;
        assert_eq!(r.records.len(), cases);
        assert!(r.all_pass(), "n={n}: {:#?}", r.failures());
    }
    assert!(binomial_identity_check(0).is_err());
}

#[test]
fn binomial_hand_case() {
    // n = 2, i = 1, j = 1: both sides are -(u1 + u2)
    let t = principal_table(2).unwrap();
    let r = binomial_identity_check(2).unwrap();
    let rec = r.records.iter().find(|x| x.inputs["i"] == 1 && x.inputs["j"] == 1).unwrap();
    assert_eq!(rec.status, Status::Pass);
    let u: Vec<FieldState> = (1..=2).map(|i| FieldState::named(&t, "h", &[i]).unwrap()).collect();
    let op = product(&linear_factors(&u, -1, &walg::Scalar::k_plus(1))).unwrap();
    assert_eq!(op.generators()[1], FieldState::parse(&t, "-h[1] - h[2]").unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn level_ledgers_balance(cols in proptest::sample::select(vec![vec![1, 1, 1], vec![2, 2], vec![1, 2, 1], vec![2, 1, 1], vec![1, 3, 2, 1]]), pick in 0usize..3) {
        let p = pyr(&cols);
        let after = 1 + pick % (cols.len() - 1);
        let r = factorization_check(&p, after).unwrap();
        prop_assert_eq!(status(&r.report, "coproduct.levels"), Status::Pass);
        prop_assert_eq!(status(&r.report, "coproduct.level_map"), Status::Pass);
        prop_assert!(r.all_pass(), "{:#?}", r.report.failures());
        let k1 = walg::Scalar::parse(&r.levels["k1"]).unwrap();
        let (a, _, _) = p.split(after).unwrap();
        prop_assert_eq!(&k1 + &walg::Scalar::int(a.n as i64), walg::Scalar::k_plus(p.n as i64));
    }
}
