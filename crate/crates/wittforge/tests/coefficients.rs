use wittforge::coeff_analysis::{
    congruent_mod_pn, cyclotomic_order, goodness_check, level_one_form,
    multinomial_bound_exhaustive, XFraction,
};
use wittforge::fontaine::{build_scenario, multiply_back, scenario_quotient, theta_of_a};
use wittforge::tower_rings::ScenarioTag;
use wittforge::{Error, Q};

#[test]
fn level_one_matches_closed_form() {
    for p in [2, 3, 5] {
        let sc = build_scenario(p, 1, &ScenarioTag::SPlusT).unwrap();
        let a = theta_of_a(&sc).unwrap();
        let form = level_one_form(a.spec()).unwrap();
        assert!(congruent_mod_pn(&a, &form, 1).unwrap(), "p={p}");
        // A perturbed form is rejected.
        let off = form.add(&XFraction::int(a.spec(), 1));
        assert!(!congruent_mod_pn(&a, &off, 1).unwrap(), "p={p}");
    }
}

#[test]
fn coefficients_are_good() {
    for (p, n) in [(2, 1), (2, 2), (3, 1)] {
        let sc = build_scenario(p, n, &ScenarioTag::SPlusT).unwrap();
        let g = goodness_check(&theta_of_a(&sc).unwrap(), n).unwrap();
        assert!(g.verdict, "p={p} n={n}: {:?}", g.witness);
    }
}

#[test]
fn quotient_multiplies_back() {
    let sc = build_scenario(2, 2, &ScenarioTag::SPlusT).unwrap();
    let a = scenario_quotient(&sc).unwrap();
    assert!(multiply_back(&a, &sc.b, &sc.pflat).unwrap().all_within());
}

#[test]
fn affine_scenario_divides() {
    let sc = build_scenario(3, 1, &ScenarioTag::Affine { s: 2, t: -1 }).unwrap();
    let a = theta_of_a(&sc).unwrap();
    assert!(goodness_check(&a, 1).unwrap().verdict);
}

#[test]
fn cyclotomic_orders() {
    for (p, order) in [
        (2, Q::from_integer(0)),
        (3, Q::new(1, 2)),
        (5, Q::new(1, 4)),
    ] {
        let sc = build_scenario(p, 1, &ScenarioTag::Cyclotomic).unwrap();
        let a = theta_of_a(&sc).unwrap();
        assert_eq!(cyclotomic_order(&a).unwrap(), Some(order), "p={p}");
    }
}

#[test]
fn multinomial_bound_has_no_counterexample() {
    for (p, m) in [(2, 4), (3, 3), (5, 2)] {
        let (count, fail) = multinomial_bound_exhaustive(p, m).unwrap();
        assert!(count > 0);
        assert_eq!(fail, None, "p={p} m={m}");
    }
}

#[test]
fn level_zero_is_rejected() {
    assert!(matches!(
        build_scenario(2, 0, &ScenarioTag::SPlusT),
        Err(Error::Config(_))
    ));
}
