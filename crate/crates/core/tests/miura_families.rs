mod common;

use proptest::prelude::*;
use walg::miura::{
    classical_shadow, elementary_symmetric, linear_factors, principal_generators, product, rectangular_generators,
    subregular_generators, virasoro_extraction, PrincipalFamily,
};
use walg::suites;
use walg::{FieldState, Scalar};

#[test]
fn principal_suite() {
    let rep = suites::principal_miura().unwrap();
    assert!(rep.all_pass(), "{:#?}", rep.failures());
}

#[test]
fn principal_gl3_by_hand() {
    let f = principal_generators(3).unwrap();
    let t = &f.table;
    assert_eq!(f.w(1), FieldState::parse(t, "h[1] + h[2] + h[3]").unwrap());
    // (d + h1)(d + h2)(d + h3), c = k + 2, right-nested
    let w2 = "NO(h[1],h[2]) + NO(h[1],h[3]) + NO(h[2],h[3]) + (k + 2)*D(h[2]) + (2*k + 4)*D(h[3])";
    assert_eq!(f.w(2), FieldState::parse(t, w2).unwrap());
    let shadow = classical_shadow(&f.w(3));
    assert_eq!(shadow, FieldState::parse(t, "NO(h[1],h[2],h[3])").unwrap());
}

#[test]
fn principal_shadows_up_to_five() {
    for n in 1..=5 {
        let f = principal_generators(n).unwrap();
        for i in 0..=n {
            assert_eq!(classical_shadow(&f.w(i)), elementary_symmetric(&f.h, i).unwrap(), "N={n} i={i}");
        }
    }
}

#[test]
fn virasoro_of_gl2() {
    let rep = suites::virasoro().unwrap();
    assert!(rep.all_pass(), "{:#?}", rep.failures());
    let v = virasoro_extraction().unwrap();
    assert_eq!(v.central_charge.eval(&walg::scalars::rat(-1, 1)).unwrap(), walg::scalars::rat(2, 1));
}

/// Entries of `W_1` of the `2 x 2` rectangular family close onto affine gl_2
/// whose sl_2 level is the sum of the factor levels.
#[test]
fn rectangular_first_generator_closes() {
    let f = rectangular_generators(2, 2).unwrap();
    let t = &f.table;
    let w1 = f.w(1);
    // entry (i, j) of W_1 is e[j,i,1] + e[j,i,2]
    let cur = |a: usize, b: usize| w1.entry(b - 1, a - 1).clone();
    for a in 1..=2 {
        for b in 1..=2 {
            let want = FieldState::parse(t, &format!("e[{a},{b},1] + e[{a},{b},2]")).unwrap();
            assert_eq!(cur(a, b), want);
        }
    }
    let level = &f.c * &Scalar::int(2);
    let d = |x: usize, y: usize| if x == y { 1 } else { 0 };
    for a in 1..=2 {
        for b in 1..=2 {
            for c in 1..=2 {
                for e in 1..=2 {
                    let x = cur(a, b);
                    let y = cur(c, e);
                    let mut bracket = FieldState::zero(t);
                    if d(b, c) == 1 {
                        bracket = &bracket + &cur(a, e);
                    }
                    if d(e, a) == 1 {
                        bracket = &bracket - &cur(c, b);
                    }
                    assert_eq!(x.nth(0, &y), bracket, "({a}{b}) (0) ({c}{e})");
                    let pair = &level * &Scalar::int(d(b, c) * d(a, e)) + Scalar::int(2 * d(a, b) * d(c, e));
                    assert_eq!(x.nth(1, &y), FieldState::scalar(t, pair), "({a}{b}) (1) ({c}{e})");
                    assert!(x.nth(2, &y).is_zero());
                }
            }
        }
    }
    // the traceless part is at level 2(k + 2), the sum of two copies at k + 2
    assert_eq!(level, Scalar::k_plus(2) * Scalar::int(2));
}

#[test]
fn rectangular_width_one_is_the_current_matrix() {
    let f = rectangular_generators(2, 1).unwrap();
    let w1 = f.w(1);
    assert_eq!(*w1.entry(0, 1), FieldState::parse(&f.table, "e[2,1,1]").unwrap());
}

#[test]
fn subregular_gl3_fields() {
    let f = subregular_generators(3, 3).unwrap();
    let t = &f.table;
    assert_eq!(f.e, FieldState::parse(t, "e[1,2]").unwrap());
    assert_eq!(f.z, FieldState::parse(t, "e[1,1] + e[2,2] + e[3,3]").unwrap());
    // F = (d + h1 - h3) e21 with c = k + 2
    let want = "NO(e[1,1],e[2,1]) - NO(e[3,3],e[2,1]) + (k + 2)*D(e[2,1])";
    assert_eq!(f.f, FieldState::parse(t, want).unwrap());
    // Z is central for H, E, F
    for (name, x) in f.named_generators() {
        for n in 0..=2 {
            if name != "Z" {
                assert!(f.z.nth(n, &x).is_zero(), "Z_({n}){name}");
            }
        }
    }
    assert!(subregular_generators(3, 1).is_err());
    assert!(subregular_generators(3, 4).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Reordering the factors changes the quantum corrections but not the
    /// classical shadow.
    #[test]
    fn shadow_ignores_factor_order(perm in Just(vec![0usize, 1, 2, 3]).prop_shuffle()) {
        let f = principal_generators(4).unwrap();
        let h: Vec<FieldState> = perm.iter().map(|&i| f.h[i].clone()).collect();
        let g = PrincipalFamily::over(h, f.c.clone()).unwrap();
        for i in 0..=4 {
            prop_assert_eq!(classical_shadow(&g.w(i)), classical_shadow(&f.w(i)));
        }
    }

    /// Splitting a product into two right-nested blocks gives the same operator
    /// when the blocks use disjoint fields.
    #[test]
    fn product_splits_into_blocks(cut in 1usize..4) {
        let f = principal_generators(4).unwrap();
        let factors = linear_factors(&f.h, 1, &f.c);
        let left = product(&factors[..cut]).unwrap();
        let right = product(&factors[cut..]).unwrap();
        let both = product(&[left, right]).unwrap();
        prop_assert_eq!(both.coeffs(), f.operator.coeffs());
    }
}
