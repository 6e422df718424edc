use std::sync::Arc;

use proptest::prelude::*;

use mixlab::evolve::{check_ordering, solve_parabolic, time_monotonicity, ProblemSpec};
use mixlab::grid::build_grid;
use mixlab::linalg::ShiftedSolver;
use mixlab::operators::{assemble_mixed, kato_inequality, OperatorMatrix};
use mixlab::source::{GammaField, InitialData, SourceData, SourceTerm};

fn operator(dim: usize, cells: usize, s: f64) -> Arc<OperatorMatrix> {
    Arc::new(assemble_mixed(&build_grid(dim, cells).unwrap(), s).unwrap())
}

fn field(len: usize, seed: &[f64]) -> Vec<f64> {
    (0..len)
        .map(|i| seed[i % seed.len()] * (1.0 + (i as f64).sin()))
        .collect()
}

fn spec(op: Arc<OperatorMatrix>, gamma: f64, f: f64, u0: f64) -> ProblemSpec {
    let data = SourceData::new(SourceTerm::constant(f).unwrap(), InitialData::Constant(u0));
    ProblemSpec::new(op, GammaField::constant(gamma).unwrap(), data, 0.1, 0.01).unwrap()
}

fn order() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.25), Just(0.5), Just(0.75), 0.05f64..0.95]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn operator_is_a_symmetric_m_matrix(dim in 1usize..=2, cells in 4usize..14, s in order()) {
        let a = operator(dim, cells, s);
        let n = a.size();
        for (i, &sum) in a.row_sums().iter().enumerate() {
            prop_assert!(sum >= 0.0);
            for j in 0..n {
                if i != j {
                    prop_assert!(a.entry(i, j) <= 0.0);
                    prop_assert_eq!(a.entry(i, j), a.entry(j, i));
                }
            }
        }
    }

    #[test]
    fn bilinear_form_is_symmetric_and_coercive(
        dim in 1usize..=2,
        cells in 4usize..14,
        s in order(),
        u_seed in proptest::collection::vec(-1.0f64..1.0, 1..8),
        v_seed in proptest::collection::vec(-1.0f64..1.0, 1..8),
    ) {
        let a = operator(dim, cells, s);
        let u = field(a.size(), &u_seed);
        let v = field(a.size(), &v_seed);
        let uv = a.bilinear(&u, &v).unwrap();
        let vu = a.bilinear(&v, &u).unwrap();
        let scale = a.bilinear(&u, &u).unwrap().abs() + a.bilinear(&v, &v).unwrap().abs();
        prop_assert!((uv - vu).abs() <= 1e-12 * (1.0 + scale));
        prop_assert!(a.bilinear(&u, &u).unwrap() >= 0.0);
    }

    #[test]
    fn resolvent_preserves_nonnegativity(
        dim in 1usize..=2,
        cells in 4usize..14,
        s in order(),
        shift in 0.1f64..1e3,
        seed in proptest::collection::vec(0.0f64..1.0, 1..8),
    ) {
        let a = operator(dim, cells, s);
        let b = field(a.size(), &seed);
        let mut x = vec![0.0; a.size()];
        ShiftedSolver::new(a, shift).unwrap().solve(None, &b, &mut x).unwrap();
        prop_assert!(x.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn kato_inequality_holds(
        dim in 1usize..=2,
        cells in 4usize..14,
        s in order(),
        eps in prop_oneof![Just(1e-3), Just(1e-1), 1e-4f64..1.0],
        seed in proptest::collection::vec(-1.0f64..1.0, 1..8),
    ) {
        let a = operator(dim, cells, s);
        let u = field(a.size(), &seed);
        let r = kato_inequality(&a, &u, eps).unwrap();
        prop_assert!(r.holds(1e-12), "{:?}", r);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn ordered_data_give_ordered_solutions(
        gamma in 0.1f64..3.0,
        f in 0.0f64..2.0,
        df in 0.0f64..2.0,
        u0 in 0.0f64..1.0,
        du0 in 0.0f64..1.0,
        k in 1.0f64..50.0,
    ) {
        let op = operator(1, 16, 0.5);
        let lower = solve_parabolic(&spec(op.clone(), gamma, f, u0), k).unwrap();
        let upper = solve_parabolic(&spec(op, gamma, f + df, u0 + du0), k).unwrap();
        prop_assert!(check_ordering("comparison", &lower, &upper, 1e-10).passed);
    }

    #[test]
    fn ladder_is_monotone_and_cauchy(
        gamma in 0.1f64..3.0,
        f in 0.0f64..1.0,
        k in 1.0f64..20.0,
        dk in 0.0f64..100.0,
    ) {
        let op = operator(1, 16, 0.5);
        let sp = spec(op, gamma, f, 0.0);
        let low = solve_parabolic(&sp, k).unwrap();
        let high = solve_parabolic(&sp, k + dk).unwrap();
        prop_assert!(check_ordering("ladder", &low, &high, 1e-10).passed);
        // with f <= 1 <= k the truncation is inactive
        let bound = 1.0 / k - 1.0 / (k + dk);
        let gap = low.fields.iter().zip(&high.fields)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| y - x))
            .fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(gap <= bound + 1e-10, "gap {} bound {}", gap, bound);
    }

    #[test]
    fn zero_start_increases_in_time(gamma in 0.1f64..3.0, f in 0.01f64..2.0, k in 1.0f64..100.0) {
        let op = operator(1, 16, 0.5);
        let traj = solve_parabolic(&spec(op, gamma, f, 0.0), k).unwrap();
        prop_assert!(time_monotonicity(&traj, 1e-10).passed);
        prop_assert!(traj.fields.iter().flatten().all(|&v| v >= 0.0));
    }

    #[test]
    fn free_evolution_decays(u0 in 0.0f64..5.0, s in order()) {
        let op = operator(1, 16, s);
        let traj = solve_parabolic(&spec(op, 1.0, 0.0, u0), 10.0).unwrap();
        let sups: Vec<f64> = traj.fields.iter().map(|u| u.iter().copied().fold(0.0, f64::max)).collect();
        prop_assert!(sups.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }
}
