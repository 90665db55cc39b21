use coordlab::check::{random_conditional, random_pmf};
use coordlab::prob::{compose, h2, mutual_information, total_variation, CondPmf, Pmf};
use coordlab::region::{
    cascade_rates, delta_star, delta_star_with_output, region_membership, scalarization_sweep, solve_cascade,
    solve_two_node, Provenance, SolverConfig,
};
use coordlab::CoordError;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn sweep_config() -> SolverConfig {
    SolverConfig { scalarization_weights: (0..=8).map(|i| i as f64 / 8.0).collect(), ..Default::default() }
}

#[test]
fn uniform_identity_closed_form() {
    let (p0, id) = (Pmf::uniform(2).unwrap(), CondPmf::identity(2).unwrap());
    for delta in [0.05, 0.2, 0.4] {
        let point = solve_two_node(&p0, &id, delta, &SolverConfig::default()).unwrap();
        assert!((point.r1 - (1.0 - h2(delta))).abs() < 1e-6, "delta {delta}: {}", point.r1);
        assert_eq!(point.provenance, Provenance::Solver);
    }
    assert!((delta_star(&p0, &id).unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn delta_star_output_is_attained() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let p0 = random_pmf(&mut rng, 3);
    let q = random_conditional(&mut rng, 3, &[3]);
    let star = delta_star_with_output(&p0, &q).unwrap();
    let constant = CondPmf::constant(3, &star.output);
    let tv = total_variation(&compose(&p0, &constant).unwrap(), &compose(&p0, &q).unwrap()).unwrap();
    assert!((tv - star.value).abs() < 1e-12);
}

#[test]
fn bad_inputs() {
    let p0 = Pmf::uniform(3).unwrap();
    let id = CondPmf::identity(2).unwrap();
    assert!(matches!(solve_two_node(&p0, &id, 0.1, &SolverConfig::default()), Err(CoordError::ShapeMismatch { .. })));
    let p0 = Pmf::uniform(2).unwrap();
    assert!(matches!(solve_two_node(&p0, &id, -0.1, &SolverConfig::default()), Err(CoordError::NegativeDelta(_))));
    let bad = SolverConfig { duality_gap_tol: 0.0, ..Default::default() };
    assert!(solve_two_node(&p0, &id, 0.1, &bad).is_err());
}

#[test]
fn cascade_frontier_is_a_pareto_staircase() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let p0 = random_pmf(&mut rng, 2);
    let q = random_conditional(&mut rng, 2, &[2, 2]);
    let config = sweep_config();
    let frontier = solve_cascade(&p0, &q, 0.05, &config).unwrap();
    assert!(!frontier.points.is_empty());
    for w in frontier.points.windows(2) {
        assert!(w[0].r1 <= w[1].r1);
        assert!(w[0].r2.unwrap() >= w[1].r2.unwrap() - config.duality_gap_tol);
    }
    for p in &frontier.points {
        let (r1, r2) = cascade_rates(&p0, &p.argmin).unwrap();
        assert!((r1 - p.r1).abs() < 1e-12 && (r2 - p.r2.unwrap()).abs() < 1e-12);
        assert!(r2 <= r1 + 1e-9);
    }
    assert_eq!(scalarization_sweep(&p0, &q, 0.05, &config).unwrap().len(), 9);
}

#[test]
fn membership_sign() {
    let (p0, id) = (Pmf::uniform(2).unwrap(), CondPmf::identity(2).unwrap());
    let config = SolverConfig::default();
    let mut point = solve_two_node(&p0, &id, 0.1, &config).unwrap();
    point.r1 += 0.01;
    let inside = region_membership(&p0, &id, &point, &config).unwrap();
    assert!(inside.member && (inside.margin - 0.01).abs() < 1e-6);
    point.r1 -= 0.02;
    assert!(!region_membership(&p0, &id, &point, &config).unwrap().member);
}

#[test]
fn frontier_json_round_trips() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let p0 = random_pmf(&mut rng, 2);
    let q = random_conditional(&mut rng, 2, &[2, 2]);
    let frontier = solve_cascade(&p0, &q, 0.1, &sweep_config()).unwrap();
    let back = serde_json::from_str(&serde_json::to_string(&frontier).unwrap()).unwrap();
    assert_eq!(frontier, back);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn two_node_solution_is_certified_and_feasible(seed in any::<u64>(), nx in 2usize..=3, ny in 2usize..=3, frac in 0.0f64..=1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p0 = random_pmf(&mut rng, nx);
        let q = random_conditional(&mut rng, nx, &[ny]);
        let config = SolverConfig::default();
        let delta = frac * delta_star(&p0, &q).unwrap();
        let point = solve_two_node(&p0, &q, delta, &config).unwrap();
        prop_assert!(point.converged);
        prop_assert!(point.certificate <= config.duality_gap_tol);
        let tv = total_variation(&compose(&p0, &point.argmin).unwrap(), &compose(&p0, &q).unwrap()).unwrap();
        prop_assert!(tv <= delta + config.projection_tol);
        let info = mutual_information(&compose(&p0, &point.argmin).unwrap(), &[0], &[1]).unwrap();
        prop_assert!((info - point.r1).abs() <= 1e-12);
        let at_target = mutual_information(&compose(&p0, &q).unwrap(), &[0], &[1]).unwrap();
        prop_assert!(point.r1 <= at_target + 1e-9);
    }

    #[test]
    fn rate_is_non_increasing_in_delta(seed in any::<u64>(), a in 0.0f64..0.5, b in 0.0f64..0.5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p0 = random_pmf(&mut rng, 2);
        let q = random_conditional(&mut rng, 2, &[3]);
        let config = SolverConfig::default();
        let (lo, hi) = (a.min(b), a.max(b));
        let r_lo = solve_two_node(&p0, &q, lo, &config).unwrap().r1;
        let r_hi = solve_two_node(&p0, &q, hi, &config).unwrap().r1;
        prop_assert!(r_hi <= r_lo + 2.0 * config.duality_gap_tol);
    }
}
