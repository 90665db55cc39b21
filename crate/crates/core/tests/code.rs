use coordlab::code::{
    apply_code, block_repeat, build_codebook_code, build_codebook_code_capped, expected_tv_exact,
    expected_tv_monte_carlo, induced_distribution, message_count, Codebook, CoordinationCode, Encoder,
};
use coordlab::prob::{compose, joint_type, total_variation, CondPmf, Pmf};
use coordlab::CoordError;
use proptest::prelude::*;

fn copy_code() -> CoordinationCode {
    let book = Codebook::from_words(&[vec![0], vec![1]], 1, 2).unwrap();
    CoordinationCode::two_node(1, 1.0, 2, Encoder::Table(vec![0, 1]), book).unwrap()
}

#[test]
fn message_counts_round_up() {
    assert_eq!(message_count(4, 0.0).unwrap(), 1);
    assert_eq!(message_count(4, 0.5).unwrap(), 4);
    assert_eq!(message_count(3, 0.5).unwrap(), 3);
    assert_eq!(message_count(10, 0.1).unwrap(), 2);
}

#[test]
fn single_letter_copy_code() {
    // a length-1 type is a point mass: TV 0.7 after x = 0, 0.3 after x = 1
    let p0 = Pmf::new(vec![0.3, 0.7]).unwrap();
    let target = compose(&p0, &CondPmf::identity(2).unwrap()).unwrap();
    let exact = expected_tv_exact(&copy_code(), &p0, &target).unwrap();
    assert!((exact - 0.42).abs() < 1e-12);
    let sim = expected_tv_monte_carlo(&copy_code(), &p0, &target, 4000, 1).unwrap();
    assert!((sim.mean_tv - exact).abs() < 4.0 * sim.standard_error);
    let (lo, hi) = (sim.quantile(0.0).unwrap(), sim.quantile(1.0).unwrap());
    assert!((lo - 0.3).abs() < 1e-12 && (hi - 0.7).abs() < 1e-12);
}

#[test]
fn malformed_codes_are_rejected() {
    let book = Codebook::from_words(&[vec![0], vec![1]], 1, 2).unwrap();
    let short = CoordinationCode::two_node(1, 1.0, 2, Encoder::Table(vec![0]), book.clone());
    assert!(matches!(short, Err(CoordError::InvalidArgument(_))));
    let wrong_rate = CoordinationCode::two_node(1, 0.0, 2, Encoder::Table(vec![0, 1]), book);
    assert!(wrong_rate.is_err());
    assert!(matches!(Codebook::from_words(&[vec![2]], 1, 2), Err(CoordError::SymbolOutOfRange { .. })));
}

#[test]
fn wrong_input_length_is_an_error() {
    assert!(matches!(apply_code(&copy_code(), &[0, 1]), Err(CoordError::LengthMismatch { .. })));
}

#[test]
fn table_cap_is_enforced() {
    let p0 = Pmf::uniform(2).unwrap();
    let q = CondPmf::identity(2).unwrap();
    let err = build_codebook_code_capped(&p0, &q, 12, 1.0, None, 0, 1024).unwrap_err();
    assert!(matches!(err, CoordError::TableCap { size: 4096, cap: 1024 }));
}

#[test]
fn cascade_codes_produce_both_actions() {
    let p0 = Pmf::uniform(2).unwrap();
    let rows = vec![vec![0.7, 0.1, 0.1, 0.1], vec![0.1, 0.1, 0.1, 0.7]];
    let q = CondPmf::from_rows(rows, vec![2, 2]).unwrap();
    let code = build_codebook_code(&p0, &q, 3, 1.0, Some(0.7), 9).unwrap();
    assert!(code.is_cascade());
    let actions = apply_code(&code, &[0, 1, 1]).unwrap();
    assert_eq!(actions.z.as_ref().map(Vec::len), Some(3));
    let law = induced_distribution(&code, &p0).unwrap();
    assert!((law.total_mass() - 1.0).abs() < 1e-12);
    assert_eq!(law.expected_type().shape(), &[2, 2, 2]);
}

#[test]
fn more_rate_helps_on_average() {
    let p0 = Pmf::uniform(2).unwrap();
    let q = CondPmf::binary_symmetric(0.05).unwrap();
    let target = compose(&p0, &q).unwrap();
    let mean = |r: f64| {
        (0..8)
            .map(|s| expected_tv_exact(&build_codebook_code(&p0, &q, 6, r, None, s).unwrap(), &p0, &target).unwrap())
            .sum::<f64>()
            / 8.0
    };
    assert!(mean(1.0) < mean(0.2));
}

#[test]
fn monte_carlo_is_thread_count_independent() {
    let p0 = Pmf::new(vec![0.4, 0.6]).unwrap();
    let q = CondPmf::binary_symmetric(0.2).unwrap();
    let target = compose(&p0, &q).unwrap();
    let code = build_codebook_code(&p0, &q, 8, 0.5, None, 3).unwrap();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| expected_tv_monte_carlo(&code, &p0, &target, 3000, 77).unwrap())
    };
    assert_eq!(run(1), run(3));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn block_repeat_keeps_rates_and_concatenates_types(
        seed in any::<u64>(),
        k in 1usize..6,
        x in prop::collection::vec(0u8..2, 15),
    ) {
        let p0 = Pmf::uniform(2).unwrap();
        let q = CondPmf::binary_symmetric(0.15).unwrap();
        let base = build_codebook_code(&p0, &q, 3, 0.7, None, seed).unwrap();
        let code = block_repeat(&base, k).unwrap();
        prop_assert_eq!(code.rates(), base.rates());
        prop_assert_eq!(code.blocklength(), 3 * k);
        let x = &x[..3 * k];
        let y = apply_code(&code, x).unwrap().y;
        let mut blocks = joint_type(&[&x[..3], &y[..3]], &[2, 2]).unwrap();
        for b in 1..k {
            let (xs, ys) = (&x[3 * b..3 * b + 3], &y[3 * b..3 * b + 3]);
            prop_assert_eq!(apply_code(&base, xs).unwrap().y, ys.to_vec());
            blocks = blocks.concat(&joint_type(&[xs, ys], &[2, 2]).unwrap()).unwrap();
        }
        prop_assert_eq!(joint_type(&[x, &y], &[2, 2]).unwrap(), blocks);
    }

    #[test]
    fn exact_tv_dominates_tv_of_expected_type(seed in any::<u64>(), flip in 0.0f64..0.5, rate in 0.0f64..1.0) {
        let p0 = Pmf::new(vec![0.35, 0.65]).unwrap();
        let q = CondPmf::binary_symmetric(flip).unwrap();
        let target = compose(&p0, &q).unwrap();
        let code = build_codebook_code(&p0, &q, 4, rate, None, seed).unwrap();
        let exact = expected_tv_exact(&code, &p0, &target).unwrap();
        let expected = induced_distribution(&code, &p0).unwrap().expected_type();
        prop_assert!(total_variation(&expected, &target).unwrap() <= exact + 1e-12);
        prop_assert!((0.0..=1.0).contains(&exact));
    }

    #[test]
    fn codes_round_trip_through_json(seed in any::<u64>(), cascade in any::<bool>()) {
        let p0 = Pmf::uniform(2).unwrap();
        let code = if cascade {
            let q = CondPmf::from_rows(vec![vec![0.4, 0.1, 0.1, 0.4]; 2], vec![2, 2]).unwrap();
            build_codebook_code(&p0, &q, 3, 0.8, Some(0.5), seed).unwrap()
        } else {
            build_codebook_code(&p0, &CondPmf::identity(2).unwrap(), 3, 0.8, None, seed).unwrap()
        };
        let back: CoordinationCode = serde_json::from_str(&serde_json::to_string(&code).unwrap()).unwrap();
        prop_assert_eq!(back, code);
    }
}
