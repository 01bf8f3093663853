mod common;

use monobeam::analysis::{beam_pattern, max_sll, slope_at, slope_finite_difference};
use monobeam::array::{
    coupling_matrix, effective_response, steering_derivative_along, steering_vector,
};
use monobeam::reselection::{self, is_disjoint, pairwise_cost, shared_count, WeightVector};
use monobeam::solver::SolverOptions;
use monobeam::{Angle, ArrayGeometry, Axis, CouplingModel, Interval, C64};
use nalgebra::DVector;
use proptest::prelude::*;

fn geometry() -> impl Strategy<Value = ArrayGeometry> {
    prop_oneof![
        (2usize..40).prop_map(|n| ArrayGeometry::linear(n, 0.5).unwrap()),
        (1usize..8, 2usize..8).prop_map(|(nx, ny)| ArrayGeometry::planar(nx, ny, 0.5).unwrap()),
    ]
}

fn weights(n: usize) -> impl Strategy<Value = DVector<C64>> {
    prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), n)
        .prop_map(|v| DVector::from_iterator(v.len(), v.into_iter().map(|(a, b)| C64::new(a, b))))
}

fn sparse_weights(n: usize) -> impl Strategy<Value = DVector<C64>> {
    prop::collection::vec(
        prop_oneof![
            2 => Just(C64::new(0.0, 0.0)),
            1 => (-1e-5f64..1e-5).prop_map(|x| C64::new(x, 0.0)),
            3 => (-2.0f64..2.0, -2.0f64..2.0).prop_map(|(a, b)| C64::new(a, b)),
        ],
        n,
    )
    .prop_map(DVector::from_vec)
}

fn angle() -> impl Strategy<Value = Angle> {
    (-80.0f64..80.0, -80.0f64..80.0).prop_map(|(az, el)| Angle::new(az, el))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn steering_elements_have_unit_modulus(g in geometry(), a in angle()) {
        let a = if g.is_linear() { Angle::bearing(a.az) } else { a };
        let s = steering_vector(&g, a).unwrap();
        for x in s.iter() {
            prop_assert!((x.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn steering_derivative_matches_finite_difference(g in geometry(), a in angle(), elev in any::<bool>()) {
        let axis = if elev && !g.is_linear() { Axis::Elevation } else { Axis::Azimuth };
        let a = if g.is_linear() { Angle::bearing(a.az) } else { a };
        let h = 1e-5;
        let shift = |s: f64| match axis {
            Axis::Azimuth => Angle::new(a.az + s, a.el),
            Axis::Elevation => Angle::new(a.az, a.el + s),
        };
        let fd = (steering_vector(&g, shift(h)).unwrap() - steering_vector(&g, shift(-h)).unwrap())
            / C64::new(2.0 * h, 0.0);
        let exact = steering_derivative_along(&g, a, axis).unwrap();
        let scale = exact.norm().max(1e-3);
        let err = (fd - &exact).norm();
        prop_assert!(err <= 1e-6 * scale, "{} vs {}", err, scale);
    }

    #[test]
    fn coupling_matrix_is_positive_definite(n in 1usize..80, rho in 0.0f64..0.99) {
        let m = coupling_matrix(&CouplingModel::new(rho, n).unwrap());
        prop_assert!(m.clone().cholesky().is_some());
        prop_assert_eq!(m.clone(), m.transpose());
    }

    #[test]
    fn coupled_response_equals_matrix_product(n in 2usize..50, rho in 0.0f64..0.9, theta in -89.0f64..89.0) {
        let g = ArrayGeometry::linear(n, 0.5).unwrap();
        let cm = CouplingModel::new(rho, n).unwrap();
        let a = steering_vector(&g, Angle::bearing(theta)).unwrap();
        let dense = coupling_matrix(&cm).map(|x| C64::new(x, 0.0)) * a;
        let fast = effective_response(&g, &cm, Angle::bearing(theta)).unwrap();
        prop_assert!((dense - fast).norm() < 1e-12 * n as f64);
    }

    #[test]
    fn pattern_is_linear_in_weights(
        (n, w1, w2) in (2usize..40).prop_flat_map(|n| (Just(n), weights(n), weights(n))),
        alpha in (-3.0f64..3.0, -3.0f64..3.0),
        beta in (-3.0f64..3.0, -3.0f64..3.0),
        rho in 0.0f64..0.5,
    ) {
        let g = ArrayGeometry::linear(n, 0.5).unwrap();
        let cm = CouplingModel::new(rho, n).unwrap();
        let grid: Vec<Angle> = (-9..=9).map(|i| Angle::bearing(i as f64 * 10.0)).collect();
        let (a, b) = (C64::new(alpha.0, alpha.1), C64::new(beta.0, beta.1));
        let combo = &w1 * a + &w2 * b;
        let f = beam_pattern(&combo, &g, &cm, &grid).unwrap();
        let f1 = beam_pattern(&w1, &g, &cm, &grid).unwrap();
        let f2 = beam_pattern(&w2, &g, &cm, &grid).unwrap();
        let scale = (w1.norm() + w2.norm()) * 6.0 * n as f64;
        for i in 0..grid.len() {
            let expect = a * f1.values[i] + b * f2.values[i];
            prop_assert!((f.values[i] - expect).norm() <= 1e-12 * scale);
        }
    }

    #[test]
    fn sidelobe_level_shifts_with_weight_scale(
        (n, w) in (2usize..30).prop_flat_map(|n| (Just(n), weights(n))),
        gamma in 0.01f64..100.0,
    ) {
        let g = ArrayGeometry::linear(n, 0.5).unwrap();
        let cm = CouplingModel::none(n);
        let grid: Vec<Angle> = (0..=180).map(|i| Angle::bearing(-90.0 + i as f64)).collect();
        let region = ["[-90, -10]".parse::<Interval>().unwrap(), "[10, 90]".parse().unwrap()];
        let base = max_sll(&beam_pattern(&w, &g, &cm, &grid).unwrap(), &region).unwrap();
        prop_assume!(base.is_finite());
        let scaled = max_sll(&beam_pattern(&(&w * C64::new(gamma, 0.0)), &g, &cm, &grid).unwrap(), &region).unwrap();
        prop_assert!((scaled - base - 20.0 * gamma.log10()).abs() < 1e-9);
    }

    #[test]
    fn disjointness_test_matches_pair_cost(
        (w1, w2) in (1usize..30).prop_flat_map(|n| (sparse_weights(n), sparse_weights(n))),
    ) {
        let thr: f64 = 1e-8;
        let zero = thr.sqrt();
        let a = WeightVector::new(w1, zero).unwrap();
        let b = WeightVector::new(w2, zero).unwrap();
        let pair = [a.clone(), b.clone()];
        let cost = pairwise_cost(&pair).unwrap();
        let disjoint = is_disjoint(&pair, thr);
        prop_assert_eq!(disjoint, cost <= thr * a.max_modulus() * b.max_modulus());
        if disjoint {
            prop_assert_eq!(shared_count(&pair, zero).unwrap(), vec![0]);
        }
    }

    #[test]
    fn interval_text_round_trips(
        lo in -90.0f64..90.0,
        len in 0.0f64..90.0,
        lc in any::<bool>(),
        hc in any::<bool>(),
    ) {
        let hi = (lo + len).min(90.0);
        let (lc, hc) = if hi == lo { (true, true) } else { (lc, hc) };
        let iv = Interval { lo, hi, lo_closed: lc, hi_closed: hc };
        let back: Interval = iv.to_string().parse().unwrap();
        prop_assert_eq!(back, iv);
    }
}

#[test]
fn analytic_slope_matches_finite_difference_for_random_weights() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
    let cases = [
        (ArrayGeometry::linear(24, 0.5).unwrap(), Axis::Azimuth),
        (ArrayGeometry::planar(6, 5, 0.5).unwrap(), Axis::Azimuth),
        (ArrayGeometry::planar(6, 5, 0.5).unwrap(), Axis::Elevation),
    ];
    for t in 0..100 {
        let (g, axis) = &cases[t % cases.len()];
        let cm = CouplingModel::new(rng.random_range(0.0..0.4), g.len()).unwrap();
        let w = DVector::from_iterator(
            g.len(),
            (0..g.len()).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))),
        );
        let angle = if g.is_linear() {
            Angle::bearing(rng.random_range(-60.0..60.0))
        } else {
            Angle::new(rng.random_range(-60.0..60.0), rng.random_range(-60.0..60.0))
        };
        let exact = slope_at(&w, g, &cm, angle, *axis).unwrap();
        let fd = slope_finite_difference(&w, g, &cm, angle, *axis, 1e-5).unwrap();
        assert!(
            (exact - fd).norm() <= 1e-6 * exact.norm().max(1.0),
            "trial {t}: {exact} vs {fd}"
        );
    }
}

#[test]
fn reselection_cost_never_increases_on_small_problems() {
    let opts = SolverOptions::default();
    for i in 0..6 {
        let sp = common::small_problem(i);
        let cm = CouplingModel::new(sp.rho, sp.geom.len()).unwrap();
        let ropts = reselection::ReselectionOptions {
            seed: sp.seed,
            max_outer_iterations: 30,
            ..Default::default()
        };
        let r = reselection::run(&sp.specs, &sp.geom, &cm, &opts, &ropts).unwrap();
        for pair in r.cost_history.windows(2) {
            assert!(
                pair[1] <= pair[0] * (1.0 + opts.tol_gap) + 1e-12,
                "problem {i}: {:?}",
                r.cost_history
            );
        }
    }
}
