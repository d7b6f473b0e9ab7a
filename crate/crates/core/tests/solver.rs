mod common;

use common::{ot2x2, ot3x3, random_lp};
use lplimit::rng::stream;
use lplimit::simplex::solve_status;
use lplimit::{enumerate_feasible_bases, optimal_vertices, solve, verify_kkt, Lp, Lp32, LpJson, LpStatus, StandardLp};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn simplex_matches_enumeration(seed in any::<u64>()) {
        let lp = random_lp(&mut stream(seed, &[]), 4, 8);
        let r = solve(&lp).unwrap();
        let opt = optimal_vertices(&lp).unwrap();
        prop_assert!((r.objective - opt.objective).abs() <= 2.0 * lp.obj_tol(opt.objective));
        prop_assert!(opt.contains_basis(&r.basis));
        prop_assert!(verify_kkt(&lp, &r));
    }

    #[test]
    fn returned_basis_reproduces_the_vertex(seed in any::<u64>()) {
        let lp = random_lp(&mut stream(seed, &[]), 4, 8);
        let r = solve(&lp).unwrap();
        let x = lp.basic_vector(&r.basis, lp.b()).unwrap();
        prop_assert_eq!(x, r.x_hat);
        prop_assert!(enumerate_feasible_bases(&lp).unwrap().contains(&r.basis));
    }

    #[test]
    fn json_round_trip(seed in any::<u64>()) {
        let lp = random_lp(&mut stream(seed, &[]), 4, 8);
        let back = Lp::from_json(&lp.to_json()).unwrap();
        prop_assert_eq!(back, lp);
    }

    #[test]
    fn ot_marginals_give_a_transport_plan(r1 in 0.0f64..1.0, s1 in 0.0f64..1.0) {
        let lp = ot2x2([r1, 1.0 - r1, s1]);
        let r = solve(&lp).unwrap();
        prop_assert!((r.objective - (r1 - s1).abs()).abs() <= 1e-12);
        prop_assert!(verify_kkt(&lp, &r));
    }
}

#[test]
fn ot3x3_has_several_optimal_vertices() {
    let lp = ot3x3();
    let opt = optimal_vertices(&lp).unwrap();
    assert!(opt.polytope.len() > 1);
    assert_eq!(opt.objective, 0.0);
    let r = solve(&lp).unwrap();
    assert!(opt.contains_basis(&r.basis));
}

#[test]
fn single_precision_solve() {
    let lp: Lp32 = StandardLp::from_rows(
        &[vec![1.0, 1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0, 0.0]],
        &[0.55, 0.45, 0.5],
        &[0.0, 1.0, 1.0, 0.0],
    )
    .unwrap();
    let r = solve(&lp).unwrap();
    assert!((r.objective - 0.05).abs() < 1e-5);
    assert!(verify_kkt(&lp, &r));
}

#[test]
fn status_classes() {
    let lp = StandardLp::from_rows(&[vec![1.0, 1.0]], &[-1.0], &[1.0, 1.0]).unwrap();
    assert_eq!(solve_status(&lp).unwrap(), LpStatus::Infeasible);
    let lp = StandardLp::from_rows(&[vec![1.0, -1.0]], &[0.0], &[-1.0, 0.0]).unwrap();
    assert_eq!(solve_status(&lp).unwrap(), LpStatus::Unbounded);
}

#[test]
fn json_rejects_unknown_fields_and_bad_shapes() {
    assert!(serde_json::from_str::<LpJson>(r#"{"A":[[1]],"b":[1],"c":[1],"d":1}"#).is_err());
    assert!(Lp::from_json(r#"{"A":[[1,0]],"b":[1,2],"c":[1,1]}"#).is_err());
    assert!(Lp::from_json(r#"{"A":[[1,1],[2,2]],"b":[1,2],"c":[1,1]}"#).is_err());
}
