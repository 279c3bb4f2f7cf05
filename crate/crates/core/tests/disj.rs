use infocost::cost::internal_ic;
use infocost::disjointness::{
    balanced_p, disj_error_audit, disj_ic_exact, disj_monte_carlo, disj_protocol, AndFactory, DisjInstance,
    GridAndFactory,
};
use infocost::distributions::truncated_entropy;
use infocost::JointDistribution;

fn skewed() -> JointDistribution {
    JointDistribution::from_rows(&[&[0.4, 0.2], &[0.3, 0.1]]).unwrap()
}

#[test]
fn single_coordinate_is_the_subprotocol() {
    let factory = GridAndFactory { grid: 64 };
    let w = skewed();
    let inst = DisjInstance::iid(1, w.clone()).unwrap();
    let eps = 0.05;
    let proto = disj_protocol(&inst, eps, &factory).unwrap();
    let sub = factory.and_law(&w, proto.round_epsilon().unwrap()).unwrap();
    let ic = disj_ic_exact(&inst, eps, &factory).unwrap();
    assert!((ic - internal_ic(&sub)).abs() <= 1e-9, "{ic} vs {}", internal_ic(&sub));
}

#[test]
fn two_coordinates_cost_at_most_twice_one() {
    let factory = GridAndFactory { grid: 32 };
    for w in [JointDistribution::uniform(2, 2), skewed()] {
        for eps in [0.0, 0.02, 0.1] {
            let two = disj_ic_exact(&DisjInstance::iid(2, w.clone()).unwrap(), eps, &factory).unwrap();
            let proto = disj_protocol(&DisjInstance::iid(2, w.clone()).unwrap(), eps, &factory).unwrap();
            let round = proto.round_epsilon().unwrap_or(0.0);
            let one = internal_ic(&factory.and_law(&w, round).unwrap());
            assert!(two <= 2.0 * one + 1e-9, "eps {eps}: {two} > 2 × {one}");
        }
    }
}

#[test]
fn cost_ignores_coordinate_labels() {
    let factory = GridAndFactory { grid: 16 };
    let priors = vec![
        JointDistribution::uniform(2, 2),
        skewed(),
        JointDistribution::from_rows(&[&[0.1, 0.3], &[0.2, 0.4]]).unwrap(),
    ];
    let inst = DisjInstance::new(priors).unwrap();
    for eps in [0.0, 0.05] {
        let base = disj_ic_exact(&inst, eps, &factory).unwrap();
        for order in [[1, 0, 2], [2, 1, 0], [1, 2, 0]] {
            let moved = disj_ic_exact(&inst.relabel(&order).unwrap(), eps, &factory).unwrap();
            assert!((moved - base).abs() <= 1e-9, "eps {eps} {order:?}: {moved} vs {base}");
        }
    }
}

#[test]
fn expected_rounds_within_bounds() {
    let factory = GridAndFactory { grid: 16 };
    for n in 1..=4 {
        for eps in [0.01, 0.1] {
            let a = disj_error_audit(&DisjInstance::iid(n, JointDistribution::uniform(2, 2)).unwrap(), eps, &factory)
                .unwrap();
            assert!(a.expected_rounds <= a.expected_rounds_bound + 1e-12, "n {n}");
            if n >= 3 {
                assert!(a.expected_rounds <= a.expected_rounds_simplified + 1e-12, "n {n}");
            }
        }
    }
}

#[test]
fn monte_carlo_agrees_with_exact_error() {
    let factory = GridAndFactory { grid: 32 };
    let inst = DisjInstance::iid(3, JointDistribution::uniform(2, 2)).unwrap();
    let exact = disj_error_audit(&inst, 0.1, &factory).unwrap();
    let proto = disj_protocol(&inst, 0.1, &factory).unwrap();
    let mc = disj_monte_carlo(&proto, 200_000, 4);
    assert_eq!(mc.disjoint_errors, 0);
    assert!((mc.error_rate - exact.distributional_error).abs() <= 4.0 * mc.error_std_err);
    assert_eq!(mc.error_rate, disj_monte_carlo(&proto, 200_000, 4).error_rate);
}

#[test]
fn balanced_point_solves_first_order_condition() {
    for eps in [1e-6, 1e-4, 1e-2] {
        let p = balanced_p(eps);
        assert!((p - truncated_entropy(eps / p)).abs() <= 1e-9, "eps {eps}: p {p}");
    }
}
