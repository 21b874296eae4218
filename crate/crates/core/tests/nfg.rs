use kwtopo::nfg::random::{random_nfg, RandomNfgSpec};
use kwtopo::nfg::{
    exterior_function, global_function_value, min_degree_order, partition_sum_brute,
    partition_sum_contracted, projected_valid_configs, support_constant, support_nfg,
    table_args, ContractOptions, Nfg, NfgBuilder,
};
use kwtopo::{Error, EvalConfig};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn draw(seed: u64, q: u32, interactions_only: bool) -> Nfg {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = RandomNfgSpec {
        interactions_only,
        complex_tables: seed.is_multiple_of(2),
        ..RandomNfgSpec::new(q, 6, 8)
    };
    random_nfg(&mut rng, &spec).unwrap()
}

fn close(a: Complex64, b: Complex64) -> bool {
    (a - b).norm() <= 1e-9 * a.norm().max(b.norm()).max(1.0)
}

/// Sum of the global function over every edge assignment.
fn naive_sum(nfg: &Nfg) -> Complex64 {
    let q = nfg.q();
    let m = nfg.edges().len();
    (0..(q as usize).pow(m as u32))
        .map(|i| global_function_value(nfg, &table_args(i, m, q)).unwrap())
        .sum()
}

fn q_strategy() -> impl Strategy<Value = u32> {
    prop_oneof![Just(2u32), Just(3), Just(5)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn brute_force_and_contraction_agree(seed in any::<u64>(), q in q_strategy(), io in any::<bool>()) {
        let nfg = draw(seed, q, io);
        let cfg = EvalConfig::default();
        let brute = partition_sum_brute(&nfg, &cfg).unwrap();
        let fast = partition_sum_contracted(&nfg, None, &ContractOptions::default()).unwrap();
        prop_assert!(close(brute, fast), "{brute} vs {fast}");
        let order = min_degree_order(&nfg);
        let ordered = partition_sum_contracted(&nfg, Some(&order), &ContractOptions::default()).unwrap();
        prop_assert!(close(brute, ordered));
    }

    #[test]
    fn brute_force_matches_naive_enumeration(seed in any::<u64>(), q in prop_oneof![Just(2u32), Just(3)]) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nfg = random_nfg(&mut rng, &RandomNfgSpec::new(q, 4, 5)).unwrap();
        let brute = partition_sum_brute(&nfg, &EvalConfig::default()).unwrap();
        prop_assert!(close(brute, naive_sum(&nfg)));
    }

    #[test]
    fn negation_twice_is_identity(seed in any::<u64>(), q in q_strategy(), pick in any::<usize>(), end in 0usize..2) {
        let nfg = draw(seed, q, false);
        let e = pick % nfg.edges().len();
        let twice = nfg
            .with_negation_toggled(e, end)
            .unwrap()
            .with_negation_toggled(e, end)
            .unwrap();
        prop_assert_eq!(twice, nfg);
    }

    #[test]
    fn marks_do_not_matter_for_q2(seed in any::<u64>(), pick in any::<usize>(), end in 0usize..2) {
        let nfg = draw(seed, 2, false);
        let e = pick % nfg.edges().len();
        let toggled = nfg.with_negation_toggled(e, end).unwrap();
        let cfg = EvalConfig::default();
        prop_assert_eq!(
            partition_sum_brute(&nfg, &cfg).unwrap(),
            partition_sum_brute(&toggled, &cfg).unwrap()
        );
    }

    #[test]
    fn splitting_an_edge_keeps_the_sum(seed in any::<u64>(), q in q_strategy(), pick in any::<usize>()) {
        let nfg = draw(seed, q, false);
        let e = pick % nfg.edges().len();
        let split = nfg.split_edge(e).unwrap();
        prop_assert_eq!(split.edges().len(), nfg.edges().len() + 1);
        let cfg = EvalConfig::default();
        prop_assert!(close(
            partition_sum_brute(&nfg, &cfg).unwrap(),
            partition_sum_brute(&split, &cfg).unwrap()
        ));
    }

    #[test]
    fn json_round_trip(seed in any::<u64>(), q in q_strategy(), io in any::<bool>()) {
        let nfg = draw(seed, q, io);
        let back = Nfg::from_json(&nfg.to_json()).unwrap();
        prop_assert_eq!(&back, &nfg);
        let cfg = EvalConfig::default();
        prop_assert_eq!(
            partition_sum_brute(&back, &cfg).unwrap(),
            partition_sum_brute(&nfg, &cfg).unwrap()
        );
    }

    #[test]
    fn support_exterior_is_constant(seed in any::<u64>(), q in q_strategy()) {
        // With at most one table per indicator neighbourhood, the
        // exterior function of the support is c times an indicator.
        let nfg = draw(seed, q, true);
        prop_assume!(support_nfg(&nfg).is_ok());
        let cfg = EvalConfig::default();
        let c = support_constant(&nfg, &cfg).unwrap();
        let support = support_nfg(&nfg).unwrap();
        let ext = exterior_function(&support, &cfg).unwrap();
        let valid = projected_valid_configs(&nfg, &cfg).unwrap();
        for (i, v) in ext.values().iter().enumerate() {
            let args = table_args(i, ext.variables().len(), q);
            let expected = if valid.contains(&args) { c as f64 } else { 0.0 };
            prop_assert!((v.re - expected).abs() < 1e-9 && v.im.abs() < 1e-9);
        }
    }
}

#[test]
fn contraction_and_brute_force_on_a_ring() {
    // Ring of Potts-like interactions: Z = tr(T^n) with T(a, b) = w(b - a).
    let q = 3;
    let w = [2.0, 0.5, 0.25];
    let n = 5;
    let mut b = NfgBuilder::new(q);
    let sites: Vec<usize> = (0..n).map(|_| b.add_equality()).collect();
    for i in 0..n {
        let p = b.add_parity();
        let t = b.add_real_table(&w);
        b.edge(sites[(i + 1) % n], false, p, false);
        b.edge(sites[i], false, p, true);
        b.edge(p, true, t, false);
    }
    let nfg = b.build().unwrap();
    // Eigenvalues of a circulant: lambda_k = sum_x w(x) omega^(k x).
    let expected: f64 = (0..q)
        .map(|k| {
            (0..q as usize)
                .map(|x| {
                    let a = 2.0 * std::f64::consts::PI * (k as usize * x) as f64 / q as f64;
                    Complex64::from_polar(w[x], a)
                })
                .sum::<Complex64>()
                .powi(n as i32)
                .re
        })
        .sum();
    let brute = partition_sum_brute(&nfg, &EvalConfig::default()).unwrap();
    let fast = partition_sum_contracted(&nfg, None, &ContractOptions::default()).unwrap();
    assert!((brute.re - expected).abs() < 1e-9 * expected);
    assert!((fast.re - expected).abs() < 1e-9 * expected);
}

#[test]
fn worker_count_does_not_change_results() {
    let nfg = draw(11, 3, false);
    let one = partition_sum_brute(&nfg, &EvalConfig::default()).unwrap();
    let four = partition_sum_brute(&nfg, &EvalConfig::default().with_workers(4)).unwrap();
    assert_eq!(one.re.to_bits(), four.re.to_bits());
    assert_eq!(one.im.to_bits(), four.im.to_bits());
}

#[test]
fn invalid_documents_are_rejected() {
    assert!(matches!(Nfg::from_json("{}"), Err(Error::InvalidNfg(_))));
    let unknown_field = r#"{"q":2,"nodes":[],"edges":[],"extra":1}"#;
    assert!(Nfg::from_json(unknown_field).is_err());
    let bad_modulus = r#"{"q":1,"nodes":[],"edges":[]}"#;
    assert!(Nfg::from_json(bad_modulus).is_err());
}

#[test]
fn contraction_rejects_open_graphs() {
    let mut b = NfgBuilder::new(2);
    let e = b.add_equality();
    b.half_edge(e, false);
    b.half_edge(e, false);
    let nfg = b.build().unwrap();
    assert_eq!(
        partition_sum_contracted(&nfg, None, &ContractOptions::default()),
        Err(Error::HalfEdgesPresent { count: 2 })
    );
}
