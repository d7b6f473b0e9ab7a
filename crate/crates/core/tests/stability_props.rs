mod common;

use common::{norm, ot2x2, ot3x3, sphere_point};
use lplimit::rng::stream;
use lplimit::stability::{
    basic_solution_ratio, check_basis_inclusion, check_feasible_inclusion, check_hausdorff_lipschitz, find_slater_point,
    stability_report,
};
use lplimit::{optimal_vertices, Lp};
use proptest::prelude::*;

fn perturb(lp: &Lp, seed: u64, frac: f64, radius: f64) -> Vec<f64> {
    let step = sphere_point(&mut stream(seed, &[]), lp.k(), frac * radius);
    lp.b().iter().zip(&step).map(|(a, d)| a + d).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn inclusions_hold_inside_the_radius(seed in any::<u64>(), frac in 0.0f64..0.999, which in 0usize..2) {
        let lp = if which == 0 { ot2x2([0.5; 3]) } else { ot3x3() };
        let rep = stability_report(&lp, &find_slater_point(&lp).unwrap()).unwrap();
        let b2 = perturb(&lp, seed, frac, rep.delta_star);
        prop_assert!(check_feasible_inclusion(&lp, &b2).unwrap());
        prop_assert!(check_basis_inclusion(&lp, &b2).unwrap());
        if frac > 0.0 {
            prop_assert!(basic_solution_ratio(&lp, &b2).unwrap() <= rep.c1 * (1.0 + 1e-9));
        }
    }

    #[test]
    fn value_is_lipschitz_with_c2(seed in any::<u64>(), radius in 0.01f64..0.3) {
        let lp = ot3x3();
        let rep = stability_report(&lp, &find_slater_point(&lp).unwrap()).unwrap();
        let b2 = perturb(&lp, seed, 1.0, radius);
        if let Ok(opt2) = optimal_vertices(&lp.with_rhs(b2.clone()).unwrap()) {
            let f1 = optimal_vertices(&lp).unwrap().objective;
            let d = norm(&b2.iter().zip(lp.b()).map(|(a, b)| a - b).collect::<Vec<_>>());
            prop_assert!((opt2.objective - f1).abs() <= rep.c2 * d + 1e-12);
        }
    }
}

#[test]
fn report_fields_are_positive() {
    for lp in [ot2x2([0.5; 3]), ot3x3()] {
        let rep = stability_report(&lp, &find_slater_point(&lp).unwrap()).unwrap();
        for v in [rep.delta_b1, rep.tau, rep.tau_min, rep.c1, rep.c2, rep.delta_prime, rep.delta_star] {
            assert!(v > 0.0 && v.is_finite(), "{rep:?}");
        }
        assert!(rep.tau_min <= rep.tau);
    }
}

#[test]
fn hausdorff_ratio_is_finite_with_multiple_optima() {
    let lp = ot3x3();
    let b2 = perturb(&lp, 3, 1.0, 0.05);
    let r = check_hausdorff_lipschitz(&lp, lp.b(), &b2).unwrap();
    assert!(r.is_finite());
}

#[test]
fn identity_ratio_is_at_most_one() {
    let lp = Lp::new(lplimit::Mat::identity(3), vec![1.0, 2.0, 3.0], vec![1.0, 0.0, -1.0]).unwrap();
    let r = check_hausdorff_lipschitz(&lp, &[1.0, 2.0, 3.0], &[1.5, 1.0, 3.2]).unwrap();
    assert!(r <= 1.0 + 1e-12);
}
