use proptest::prelude::*;
use walg::glstruct::{conjugate, orbit_dimension, BcdPyramid, BcdType, Cut, Pyramid, Root};
use walg::report::Status;
use walg::suites;
use walg::Scalar;

/// Unimodal column heights: rising then falling.
fn columns() -> impl Strategy<Value = Vec<usize>> {
    (proptest::collection::vec(1usize..=3, 0..=3), 1usize..=4, proptest::collection::vec(1usize..=3, 0..=3)).prop_map(
        |(mut up, top, mut down)| {
            up.sort();
            down.sort();
            down.reverse();
            let top = top.max(*up.last().unwrap_or(&1)).max(*down.first().unwrap_or(&1));
            up.push(top);
            up.extend(down);
            up
        },
    )
}

#[test]
fn suite_passes() {
    let rep = suites::combinatorics().unwrap();
    assert!(rep.all_pass(), "{:#?}", rep.failures());
}

#[test]
fn seven_box_pyramid_data() {
    let p = Pyramid::from_columns(&[1, 3, 2, 1]).unwrap();
    assert_eq!(p.grading().pi1, vec![1, 4, 6]);
    assert_eq!(p.jordan_type(), vec![4, 2, 1]);
    assert_eq!(Pyramid::parse("1,3,2,1").unwrap(), p);
}

#[test]
fn bcd_shapes() {
    for (kind, h, w, l1) in [(BcdType::So, 3, 7, 2), (BcdType::So, 3, 5, 1), (BcdType::So, 1, 5, 2), (BcdType::Sp, 2, 5, 2), (BcdType::Sp, 4, 4, 1)] {
        let p = BcdPyramid::new(kind, h, w, l1).unwrap();
        assert_eq!(p.check().status, Status::Pass, "{kind:?} {h}x{w} l1={l1}: {:?}", p.check().witness);
    }
}

#[test]
fn sp_levels_carry_the_factor_two() {
    let p = BcdPyramid::new(BcdType::Sp, 2, 5, 2).unwrap();
    let [a, b, c] = p.level_relations();
    assert_eq!(a, b);
    assert_eq!(b, c);
    assert_eq!(p.gamma, 2);
    assert_eq!(a, Scalar::k_plus(p.dual_coxeter));
}

proptest! {
    #[test]
    fn jordan_type_is_the_row_partition(cols in columns()) {
        let p = Pyramid::from_columns(&cols).unwrap();
        let mut rows = p.rows.clone();
        rows.sort_unstable_by(|a, b| b.cmp(a));
        prop_assert_eq!(p.jordan_type(), rows.clone());
        let n = p.n;
        let dual = conjugate(&rows);
        prop_assert_eq!(orbit_dimension(&rows), n * n - dual.iter().map(|x| x * x).sum::<usize>());
    }

    #[test]
    fn grading_is_even_and_good(cols in columns()) {
        let p = Pyramid::from_columns(&cols).unwrap();
        let g = p.grading();
        prop_assert!(g.degrees.iter().all(|d| *d == 0 || *d == 1));
        prop_assert_eq!(g.pi0, p.pi0_by_rows());
        for (i, j) in p.nilpotent_edges() {
            prop_assert_eq!(p.deg(Root::new(i, j)), 1);
        }
        prop_assert_eq!(p.check_root_classes().status, Status::Pass);
    }

    #[test]
    fn every_column_cut_induces(cols in columns()) {
        let p = Pyramid::from_columns(&cols).unwrap();
        for c in 1..cols.len() {
            let r = p.induced_orbit_check(Cut::AfterColumn(c)).unwrap();
            prop_assert_eq!(r.status, Status::Pass, "{:?}", r.witness);
            let (a, b, lm) = p.split(c).unwrap();
            prop_assert!(lm.consistent());
            prop_assert_eq!(a.n + b.n, p.n);
            prop_assert_eq!(lm.k1.clone(), Scalar::k_plus(b.n as i64));
        }
    }
}
