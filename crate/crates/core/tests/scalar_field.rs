use proptest::prelude::*;
use walg::scalars::{rat, solve_linear, Poly};
use walg::{Rational, Scalar};

fn poly() -> impl Strategy<Value = Poly> {
    proptest::collection::vec((-6i64..=6, 1i64..=4), 0..=3)
        .prop_map(|c| Poly::from_coeffs(c.into_iter().map(|(n, d)| rat(n, d)).collect()))
}

fn scalar() -> impl Strategy<Value = Scalar> {
    (poly(), poly()).prop_filter_map("nonzero denominator", |(n, d)| {
        if d.is_zero() {
            None
        } else {
            Scalar::from_parts(n, d).ok()
        }
    })
}

proptest! {
    #[test]
    fn field_axioms(a in scalar(), b in scalar(), c in scalar()) {
        prop_assert_eq!(&a + &b, &b + &a);
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        prop_assert!((&a - &a).is_zero());
        if !a.is_zero() {
            prop_assert!((&a * &a.recip().unwrap()).is_one());
        }
    }

    #[test]
    fn canonical_form_is_unique(a in scalar(), s in poly()) {
        // multiplying numerator and denominator by a common factor changes nothing
        prop_assume!(!s.is_zero());
        let b = Scalar::from_parts(a.numer().mul(&s), a.denom().mul(&s)).unwrap();
        prop_assert_eq!(&b, &a);
        prop_assert!(a.denom().lead() == Rational::from_integer(1.into()));
    }

    #[test]
    fn printed_form_parses_back(a in scalar()) {
        prop_assert_eq!(Scalar::parse(&a.to_string()).unwrap(), a);
    }

    #[test]
    fn evaluation_is_a_homomorphism(a in scalar(), b in scalar(), k0 in -20i64..=20) {
        let x = rat(k0, 3);
        if let (Ok(va), Ok(vb)) = (a.eval(&x), b.eval(&x)) {
            prop_assert_eq!((&a * &b).eval(&x).unwrap(), &va * &vb);
            prop_assert_eq!((&a + &b).eval(&x).unwrap(), &va + &vb);
        }
    }

    #[test]
    fn level_shift_composes(a in scalar(), d in -5i64..=5, e in -5i64..=5) {
        prop_assert_eq!(a.shift_level(d).shift_level(e), a.shift_level(d + e));
        prop_assert_eq!(Scalar::k().shift_level(d), Scalar::k_plus(d));
    }

    #[test]
    fn triangular_systems_solve(diag in proptest::collection::vec(1i64..=5, 1..=4), off in -3i64..=3) {
        let n = diag.len();
        let rows: Vec<Vec<Scalar>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { Scalar::k_plus(diag[i]) } else if j < i { Scalar::int(off) } else { Scalar::zero() }).collect())
            .collect();
        let x: Vec<Scalar> = (0..n).map(|i| Scalar::frac(i as i64 + 1, 2)).collect();
        let rhs: Vec<Scalar> = rows.iter().map(|r| r.iter().zip(&x).fold(Scalar::zero(), |s, (a, b)| &s + &(a * b))).collect();
        prop_assert_eq!(solve_linear(rows, rhs, n).unwrap(), x);
    }
}

#[test]
fn documented_values() {
    let c = Scalar::parse("2 - 6*(k + 1)^2/(k + 2)").unwrap();
    assert_eq!(c.eval(&rat(1, 1)).unwrap(), rat(-6, 1));
    assert!(Scalar::k_plus(2).recip().unwrap().eval(&rat(-2, 1)).is_err());
    assert_eq!(Scalar::k_plus(3).to_string(), "k + 3");
}
