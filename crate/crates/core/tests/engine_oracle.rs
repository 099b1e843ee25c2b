use std::sync::Arc;

use walg::oracle::*;
use proptest::prelude::*;
use walg::glstruct::Pyramid;
use walg::vertexcore::{nth_product, Bracket, TableBuilder};
use walg::wakimoto::degree_zero_currents;
use walg::{FieldState, GeneratorTable, Scalar};

fn agree(t: &Arc<GeneratorTable>) {
    let rep = oracle_agreement(t, 8);
    assert!(rep.all_pass(), "{:#?}", rep.failures());
    assert!(rep.records[0].ledger["cases"].parse::<usize>().unwrap() > 1000);
}

#[test]
fn beta_gamma_with_boson_matches_modes() {
    agree(&beta_gamma_boson());
}

#[test]
fn non_diagonal_bosons_match_modes() {
    agree(&skew_bosons());
}

#[test]
fn symplectic_fields_match_modes() {
    agree(&symplectic_boson());
}

#[test]
fn oracle_reproduces_hand_values() {
    let t = beta_gamma_boson();
    let o = ModeOracle::new(&t);
    let a = FieldState::parse(&t, "a[1]").unwrap();
    let s = FieldState::parse(&t, "as[1]").unwrap();
    let h = FieldState::parse(&t, "h[1]").unwrap();
    assert_eq!(o.nth(&a, 0, &s), FieldState::vacuum(&t));
    assert_eq!(o.nth(&s, 0, &a), FieldState::scalar(&t, Scalar::int(-1)));
    assert_eq!(o.nth(&h, 1, &h), FieldState::scalar(&t, Scalar::k_plus(2)));
    let j = FieldState::parse(&t, "NO(a[1],as[1])").unwrap();
    assert_eq!(o.nth(&a, 0, &j), a);
    // L = NO(h,h)/2(k+2): L_(1) h = h
    let l = FieldState::parse(&t, "NO(h[1],h[1])").unwrap().scale(&Scalar::k_plus(2).recip().unwrap().scale_rational(&walg::scalars::rat(1, 2)));
    assert_eq!(o.nth(&l, 1, &h), h);
}

/// `gl_2` currents at level `k` for the non-free axioms.
fn gl2_currents() -> Arc<GeneratorTable> {
    degree_zero_currents(&Pyramid::from_columns(&[2]).unwrap()).unwrap()
}

fn affine_sl2_with_boson() -> Arc<GeneratorTable> {
    let mut b = TableBuilder::new("sl2 plus boson");
    let e = b.generator("e", &[1], 2);
    let h = b.generator("h", &[1], 2);
    let f = b.generator("f", &[1], 2);
    let x = b.generator("x", &[1], 2);
    b.pair1(h, e, Bracket::linear(vec![(e, Scalar::int(2))]));
    b.pair1(h, f, Bracket::linear(vec![(f, Scalar::int(-2))]));
    b.pair1(e, f, Bracket::linear(vec![(h, Scalar::one())]));
    b.pair2(e, f, Scalar::k());
    b.pair2(h, h, Scalar::k() * Scalar::int(2));
    b.pair2(x, x, Scalar::k_plus(1));
    b.build().unwrap()
}

fn binom(p: i64, j: i64) -> i64 {
    let mut r: i128 = 1;
    for i in 0..j {
        r = r * (p - i) as i128 / (i + 1) as i128;
    }
    r as i64
}

type Picks = Vec<(usize, i64)>;

fn picks() -> impl Strategy<Value = Picks> {
    proptest::collection::vec((0usize..1000, -3i64..=3), 1..=3)
}

/// A small combination of monomials of weight at most 2.
fn build(t: &Arc<GeneratorTable>, p: &Picks) -> FieldState {
    let monos = monomials(t, 4, 2);
    let mut x = FieldState::zero(t);
    for &(i, c) in p {
        x = x.try_add(&monos[i % monos.len()].scale(&Scalar::int(c))).unwrap();
    }
    x
}

fn tables() -> Vec<Arc<GeneratorTable>> {
    vec![gl2_currents(), affine_sl2_with_boson(), beta_gamma_boson(), symplectic_boson()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn skew_symmetry(which in 0usize..4, pa in picks(), pb in picks(), n in 0i64..=3) {
        let t = tables()[which].clone();
        let (a, b) = (build(&t, &pa), build(&t, &pb));
        // B_(n)A = sum_j (-1)^(n+j+1) D^j(A_(n+j)B)/j!
        let mut rhs = FieldState::zero(&t);
        let mut fact = 1i64;
        for j in 0..=8 {
            if j > 0 { fact *= j; }
            let term = a.nth(n + j, &b).derive_n(j as u32).scale(&Scalar::frac(if (n + j + 1) % 2 == 0 { 1 } else { -1 }, fact));
            rhs = rhs.try_add(&term).unwrap();
        }
        prop_assert_eq!(b.nth(n, &a), rhs);
    }

    #[test]
    fn translation_covariance(which in 0usize..4, pa in picks(), pb in picks(), n in -2i64..=3) {
        let t = tables()[which].clone();
        let (a, b) = (build(&t, &pa), build(&t, &pb));
        // (DA)_(n)B = -n A_(n-1)B and D(A_(n)B) = (DA)_(n)B + A_(n)(DB)
        prop_assert_eq!(a.derive().nth(n, &b), a.nth(n - 1, &b).scale(&Scalar::int(-n)));
        prop_assert_eq!(a.nth(n, &b).derive(), a.derive().nth(n, &b).try_add(&a.nth(n, &b.derive())).unwrap());
    }

    #[test]
    fn commutator_formula(which in 0usize..4, pa in picks(), pb in picks(), m in 0i64..=2, n in 0i64..=2) {
        let t = tables()[which].clone();
        let (a, b) = (build(&t, &pa), build(&t, &pb));
        let c = build(&t, &pa.iter().chain(&pb).map(|&(i, x)| (i + 7, x)).collect());
        let lhs = a.nth(m, &b.nth(n, &c)).try_sub(&b.nth(n, &a.nth(m, &c))).unwrap();
        let mut rhs = FieldState::zero(&t);
        for j in 0..=m {
            let term = a.nth(j, &b).nth(m + n - j, &c).scale(&Scalar::int(binom(m, j)));
            rhs = rhs.try_add(&term).unwrap();
        }
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn bilinearity(which in 0usize..4, pa in picks(), pb in picks(), n in -1i64..=2, s in -4i64..=4) {
        let t = tables()[which].clone();
        let (a, b) = (build(&t, &pa), build(&t, &pb));
        let c = build(&t, &pb.iter().map(|&(i, x)| (i + 3, -x)).collect());
        let sum = b.scale(&Scalar::int(s)).try_add(&c).unwrap();
        let want = a.nth(n, &b).scale(&Scalar::int(s)).try_add(&a.nth(n, &c)).unwrap();
        prop_assert_eq!(a.nth(n, &sum), want);
    }

    #[test]
    fn printed_form_parses_back(which in 0usize..4, pa in picks(), pb in picks()) {
        let t = tables()[which].clone();
        let (a, b) = (build(&t, &pa), build(&t, &pb));
        let x = a.no(&b).try_add(&a.derive().scale(&Scalar::k_plus(3))).unwrap();
        prop_assert_eq!(FieldState::parse(&t, &x.to_string()).unwrap(), x);
    }

    #[test]
    fn vacuum_is_unit(which in 0usize..4, pa in picks()) {
        let t = tables()[which].clone();
        let a = build(&t, &pa);
        let one = FieldState::vacuum(&t);
        prop_assert_eq!(one.no(&a), a.clone());
        prop_assert_eq!(a.nth(-1, &one), a.clone());
        prop_assert!(a.nth(0, &one).is_zero());
        prop_assert_eq!(nth_product(&a, -2, &one).unwrap(), a.derive());
    }
}
