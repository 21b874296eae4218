use kwtopo::models::{
    c_beta, dual_beta_ising, ising_nfg_torus, ising_nfg_torus3d, kw_verify_2d, kw_verify_potts,
    match_dual_interaction, potts_nfg_torus, self_dual_beta, twisted_nfg, twisted_nfg_by, Cycle,
    InteractionForm, InteractionKernel, KernelKind, SiteKind, TorusModel,
};
use kwtopo::nfg::{
    partition_sum_brute, partition_sum_contracted, projected_valid_configs, support_constant,
    ContractOptions,
};
use kwtopo::{Error, EvalConfig};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn ising_dual_is_recovered_from_the_transform(beta in 0.01f64..6.0) {
        let k = InteractionKernel::ising(beta).unwrap();
        let m = match_dual_interaction(&k.fourier(), InteractionForm::Hamming).unwrap();
        prop_assert!((m.beta_dual - dual_beta_ising(beta).unwrap()).abs() <= 1e-10 * m.beta_dual.max(1.0));
        prop_assert!((m.scale - (2.0 * c_beta(beta).unwrap()).sqrt()).abs() <= 1e-10 * m.scale);
    }

    #[test]
    fn duality_is_an_involution(beta in 0.01f64..6.0) {
        let back = dual_beta_ising(dual_beta_ising(beta).unwrap()).unwrap();
        prop_assert!((back - beta).abs() <= 1e-9 * beta.max(1.0));
    }

    #[test]
    fn standard_potts_dual_temperature(beta in 0.05f64..3.0, q in prop_oneof![Just(3u32), Just(5), Just(7)]) {
        let k = InteractionKernel::standard_potts(q, beta).unwrap();
        let m = match_dual_interaction(&k.fourier(), InteractionForm::Hamming).unwrap();
        // (e^2b' - 1)(e^2b - 1) = q for the Hamming-form kernels.
        let product = ((2.0 * m.beta_dual).exp() - 1.0) * ((2.0 * beta).exp() - 1.0);
        prop_assert!((product - q as f64).abs() < 1e-9 * q as f64);
    }
}

#[test]
fn self_dual_point() {
    let b = self_dual_beta();
    assert!((dual_beta_ising(b).unwrap() - b).abs() < 1e-12);
    assert!((c_beta(b).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn three_state_vector_potts_is_hamming() {
    let k = InteractionKernel::vector_potts(3, 0.9).unwrap();
    let lee = match_dual_interaction(&k.fourier(), InteractionForm::Lee).unwrap();
    let ham = match_dual_interaction(&k.fourier(), InteractionForm::Hamming).unwrap();
    // cos takes values 1 and -1/2, so the Lee slope is 2/3 of the Hamming one.
    assert!((lee.beta_dual * 1.5 - ham.beta_dual * 2.0).abs() < 1e-12);
}

#[test]
fn five_state_vector_potts_has_no_dual_of_its_form() {
    assert!(matches!(
        kw_verify_potts(2, 5, 0.8, KernelKind::VectorPotts, &EvalConfig::default()),
        Err(Error::AssumptionViolated(_))
    ));
}

#[test]
fn model_nfg_matches_the_spin_sum() {
    let cfg = EvalConfig::default();
    for (q, kind) in [(3, KernelKind::StandardPotts), (5, KernelKind::VectorPotts)] {
        let model =
            TorusModel::torus_2d(2, InteractionKernel::new(kind, q, 0.6).unwrap(), SiteKind::Vertices)
                .unwrap();
        let spin = model.spin_model(&[]).unwrap().partition_sum(&cfg).unwrap();
        let nfg = potts_nfg_torus(2, q, 0.6, kind).unwrap().nfg;
        let brute = partition_sum_brute(&nfg, &cfg).unwrap();
        assert!((brute.re - spin).abs() < 1e-10 * spin);
        // Twisting a vertex model by a cycle is a different, lower sum.
        let twisted = model.spin_model(&[(Cycle::H, 1)]).unwrap().partition_sum(&cfg).unwrap();
        assert!(twisted < spin);
    }
}

#[test]
fn twists_accumulate_mod_q() {
    let base = potts_nfg_torus(2, 3, 0.5, KernelKind::StandardPotts).unwrap();
    let once = twisted_nfg(&base, &[Cycle::H]).unwrap();
    let thrice = twisted_nfg(&twisted_nfg(&once, &[Cycle::H]).unwrap(), &[Cycle::H]).unwrap();
    assert_eq!(thrice.shifts(), base.shifts());
    assert_eq!(thrice.nfg, base.nfg);
    let two = twisted_nfg_by(&base, &[(Cycle::H, 2)]).unwrap();
    assert_eq!(
        twisted_nfg(&once, &[Cycle::H]).unwrap().shifts(),
        two.shifts()
    );
    assert_eq!(once.shifts().iter().filter(|&&s| s != 0).count(), 2);
}

#[test]
fn three_dimensional_twists_use_all_cycles() {
    let base = ising_nfg_torus3d(2, 0.4).unwrap();
    let t = twisted_nfg(&base, &[Cycle::H, Cycle::V, Cycle::D]).unwrap();
    assert_eq!(t.shifts().iter().filter(|&&s| s == 1).count(), 6);
    assert_eq!(
        twisted_nfg(&ising_nfg_torus(2, 0.4).unwrap(), &[Cycle::D]).err(),
        Some(Error::UnknownCycle("d".into()))
    );
}

#[test]
fn contraction_handles_the_largest_models() {
    let nfg = ising_nfg_torus(4, 0.8).unwrap().nfg;
    let cfg = EvalConfig::default();
    let a = partition_sum_brute(&nfg, &cfg).unwrap();
    let b = partition_sum_contracted(&nfg, None, &ContractOptions::default()).unwrap();
    assert!((a.re - b.re).abs() < 1e-10 * a.re);
}

#[test]
fn reports_do_not_depend_on_worker_count() {
    let one = kw_verify_2d(3, 0.8, &EvalConfig::default()).unwrap();
    let four = kw_verify_2d(3, 0.8, &EvalConfig::default().with_workers(4)).unwrap();
    assert_eq!(one.rhs.to_bits(), four.rhs.to_bits());
    assert_eq!(one.z_primal.to_bits(), four.z_primal.to_bits());
    assert_eq!(one.twisted, four.twisted);
}

#[test]
fn temperature_limits() {
    assert_eq!(kw_verify_2d(2, 0.0, &EvalConfig::default()).err(), Some(Error::NonpositiveBeta(0.0)));
    assert_eq!(InteractionKernel::ising(13.0).err(), Some(Error::BetaOutOfRange(13.0)));
    assert_eq!(InteractionKernel::ising(-1.0).err(), Some(Error::BetaOutOfRange(-1.0)));
}

#[test]
fn budget_limits_the_spin_sum() {
    let cfg = EvalConfig::default().with_budget(1000);
    assert!(matches!(
        kw_verify_2d(4, 0.8, &cfg),
        Err(Error::BudgetExceeded { .. })
    ));
}

#[test]
fn support_factorizes_the_partition_sum() {
    let cfg = EvalConfig::default();
    for (q, beta) in [(2u32, 0.45), (3, 0.7)] {
        let kernel = if q == 2 {
            InteractionKernel::ising(beta).unwrap()
        } else {
            InteractionKernel::standard_potts(q, beta).unwrap()
        };
        let nfg = potts_nfg_torus(2, q, beta, kernel.kind()).unwrap().nfg;
        let c = support_constant(&nfg, &cfg).unwrap() as f64;
        let k = kernel.values();
        let sum: f64 = projected_valid_configs(&nfg, &cfg)
            .unwrap()
            .iter()
            .map(|x| x.iter().map(|&v| k[v as usize]).product::<f64>())
            .sum();
        let z = partition_sum_brute(&nfg, &cfg).unwrap().re;
        assert!((z - c * sum).abs() <= 1e-12 * z, "q={q}");
    }
}

#[test]
fn the_identity_holds_at_the_dual_temperature() {
    let cfg = EvalConfig::default();
    for beta in [0.3, 0.6, 1.1] {
        let r = kw_verify_2d(3, beta, &cfg).unwrap();
        let back = kw_verify_2d(3, r.beta_dual, &cfg).unwrap();
        assert!(back.passes(1e-10));
        assert!((back.beta_dual - beta).abs() < 1e-9);
    }
}
