use coordlab::code::{build_codebook_code, expected_tv_exact};
use coordlab::oracle::{
    code_search_space, exhaustive_best_code, grid_lipschitz, grid_min_mi, multiset_count, theorem_consistency_scan,
    Optimizer, ScanOptions,
};
use coordlab::prob::{compose, mutual_information, total_variation, CondPmf, Pmf};
use coordlab::region::{solve_two_node, SolverConfig};
use coordlab::CoordError;
use proptest::prelude::*;

#[test]
fn search_space_sizes() {
    assert_eq!(multiset_count(4, 2), Some(10));
    assert_eq!(multiset_count(0, 0), Some(1));
    assert_eq!(code_search_space(2, None, 2, 2, None), Some(10));
    // C(2 + 1, 2) second-hop books times C(2 * 2 + 1, 2) pair lists
    assert_eq!(code_search_space(2, Some(2), 1, 2, Some(2)), Some(3 * 10));
    assert_eq!(multiset_count(u64::MAX, 3), None);
}

#[test]
fn exhaustive_cascade_optimum_is_its_codes_value() {
    let p0 = Pmf::new(vec![0.3, 0.7]).unwrap();
    let q = CondPmf::from_rows(vec![vec![0.6, 0.2, 0.1, 0.1], vec![0.1, 0.1, 0.2, 0.6]], vec![2, 2]).unwrap();
    let target = compose(&p0, &q).unwrap();
    let report = exhaustive_best_code(&p0, &target, 2, 1.0, Some(0.5), 1_000_000).unwrap();
    let Optimizer::Code(code) = &report.optimizer else { panic!("expected a code") };
    assert!((expected_tv_exact(code, &p0, &target).unwrap() - report.optimum).abs() < 1e-12);
    assert_eq!(report.evaluated, report.search_space_size);
}

#[test]
fn exhaustive_guard_is_reported() {
    let p0 = Pmf::uniform(2).unwrap();
    let target = compose(&p0, &CondPmf::identity(2).unwrap()).unwrap();
    let err = exhaustive_best_code(&p0, &target, 4, 1.0, None, 1000).unwrap_err();
    assert!(matches!(err, CoordError::GuardExceeded { limit: 1000, .. }));
}

#[test]
fn grid_matches_solver_on_a_skewed_source() {
    let p0 = Pmf::new(vec![0.2, 0.8]).unwrap();
    let q = CondPmf::binary_symmetric(0.05).unwrap();
    let report = grid_min_mi(&p0, &q, 0.1, 1e-3).unwrap();
    let solved = solve_two_node(&p0, &q, 0.1, &SolverConfig::default()).unwrap();
    assert!((report.optimum - solved.r1).abs() <= 1e-3);
    assert!(report.optimum >= solved.r1 - solved.certificate - 1e-12, "{} {:?}", report.optimum, solved);
    let Optimizer::Conditional(best) = &report.optimizer else { panic!("expected a conditional") };
    let tv = total_variation(&compose(&p0, best).unwrap(), &compose(&p0, &q).unwrap()).unwrap();
    assert!(tv <= 0.1 + 1e-12);
    assert_eq!(report.discretization_bound, Some(grid_lipschitz(&p0, 2, 1e-3) * 1e-3));
}

#[test]
fn scan_rows_cover_the_grid_and_rates_are_honest() {
    let p0 = Pmf::uniform(2).unwrap();
    let q = CondPmf::binary_symmetric(0.1).unwrap();
    let options = ScanOptions { samples: 300, seed: 4, ..Default::default() };
    let deltas = [0.0, 0.1, 0.3];
    let report = theorem_consistency_scan(&p0, &q, &[1, 2], &deltas, u64::MAX, &options).unwrap();
    assert_eq!(report.rows.len(), 6);
    assert_eq!(report.flags, 0);
    assert!(!report.partial);
    for row in &report.rows {
        if let (Some(rate), Some(tv)) = (row.best_code_rate, row.best_code_tv) {
            assert!(tv <= row.delta + 1e-12);
            assert!(rate + 1e-9 >= row.frontier_rate - row.frontier_gap);
        }
    }
    let mut csv = Vec::new();
    report.write_csv(&mut csv).unwrap();
    assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 2 + 6);
}

#[test]
fn scan_rejects_cascades() {
    let p0 = Pmf::uniform(2).unwrap();
    let q = CondPmf::from_rows(vec![vec![0.25; 4]; 2], vec![2, 2]).unwrap();
    assert!(theorem_consistency_scan(&p0, &q, &[1], &[0.1], 10, &ScanOptions::default()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn exhaustive_beats_random_codes(flip in 0.0f64..0.5, p in 0.05f64..0.95, seed in any::<u64>()) {
        let p0 = Pmf::new(vec![p, 1.0 - p]).unwrap();
        let q = CondPmf::binary_symmetric(flip).unwrap();
        let target = compose(&p0, &q).unwrap();
        let best = exhaustive_best_code(&p0, &target, 3, 2.0 / 3.0, None, 1_000_000).unwrap().optimum;
        let random = build_codebook_code(&p0, &q, 3, 2.0 / 3.0, None, seed).unwrap();
        prop_assert!(best <= expected_tv_exact(&random, &p0, &target).unwrap() + 1e-12);
    }

    #[test]
    fn grid_optimum_is_an_upper_bound_near_the_solver(flip in 0.0f64..0.5, p in 0.1f64..0.9, delta in 0.0f64..0.3) {
        let p0 = Pmf::new(vec![p, 1.0 - p]).unwrap();
        let q = CondPmf::binary_symmetric(flip).unwrap();
        let grid = grid_min_mi(&p0, &q, delta, 1e-2).unwrap();
        let solved = solve_two_node(&p0, &q, delta, &SolverConfig::default()).unwrap();
        prop_assert!(grid.optimum >= solved.r1 - 1e-6);
        prop_assert!(grid.optimum - solved.r1 <= grid.discretization_bound.unwrap() + 1e-6);
        let info = mutual_information(&compose(&p0, &q).unwrap(), &[0], &[1]).unwrap();
        prop_assert!(grid.optimum <= info + 1e-12);
    }
}
