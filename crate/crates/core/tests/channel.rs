use pda_core::channel::{channel_ber, measure_ber, read_back, simulate_retention, RetentionConfig};
use pda_core::io::gen_random_block;
use pda_core::solvers::greedy_arrange;
use pda_core::types::apply_permutation;
use pda_core::ArchConfig;
use proptest::prelude::*;

proptest! {
    #[test]
    fn ber_is_symmetric_and_zero_only_on_equality(seed_a in any::<u64>(), seed_b in any::<u64>()) {
        let cfg = ArchConfig::new(4, 16);
        let a = gen_random_block(&cfg, seed_a).unwrap();
        let b = gen_random_block(&cfg, seed_b).unwrap();
        let ab = measure_ber(&a, &b).unwrap();
        prop_assert_eq!(ab, measure_ber(&b, &a).unwrap());
        prop_assert_eq!(ab == 0.0, a == b);
        prop_assert!((0.0..=1.0).contains(&ab));
    }

    #[test]
    fn small_drift_is_absorbed_by_quantization(seed in any::<u64>()) {
        // |drift| <= rate * 1.5 * 15 < 0.5
        let r = RetentionConfig { coupling: 0.02, noise_sigma: 0.0, ..RetentionConfig::default() };
        let cfg = ArchConfig::new(6, 20);
        let block = gen_random_block(&cfg, seed).unwrap();
        prop_assert_eq!(channel_ber(&block, &cfg, &r).unwrap(), 0.0);
    }
}

#[test]
fn no_coupling_no_noise_reads_back_exactly() {
    let cfg = ArchConfig::new(8, 64);
    let block = gen_random_block(&cfg, 1).unwrap();
    let r = RetentionConfig {
        coupling: 0.0,
        noise_sigma: 0.0,
        ..RetentionConfig::default()
    };
    assert_eq!(read_back(&simulate_retention(&block, &cfg, &r).unwrap()), block);
}

#[test]
fn noise_is_seeded() {
    let cfg = ArchConfig::new(5, 10);
    let block = gen_random_block(&cfg, 1).unwrap();
    let r = |seed| RetentionConfig {
        noise_sigma: 1.0,
        seed,
        ..RetentionConfig::default()
    };
    assert_eq!(channel_ber(&block, &cfg, &r(3)).unwrap(), channel_ber(&block, &cfg, &r(3)).unwrap());
    assert_ne!(
        simulate_retention(&block, &cfg, &r(3)).unwrap(),
        simulate_retention(&block, &cfg, &r(4)).unwrap()
    );
}

#[test]
fn negative_parameters_are_rejected() {
    let cfg = ArchConfig::new(3, 1);
    let block = gen_random_block(&cfg, 0).unwrap();
    let bad = RetentionConfig {
        noise_sigma: -1.0,
        ..RetentionConfig::default()
    };
    assert!(simulate_retention(&block, &cfg, &bad).is_err());
}

#[test]
fn better_arrangements_have_fewer_errors() {
    let cfg = ArchConfig::new(8, 64);
    let mut not_worse = 0;
    for seed in 0..50u64 {
        let block = gen_random_block(&cfg, 1_000 + seed).unwrap();
        let arranged = apply_permutation(&block, &greedy_arrange(&block, &cfg).unwrap().perm).unwrap();
        let r = RetentionConfig {
            seed,
            ..RetentionConfig::default()
        };
        if channel_ber(&arranged, &cfg, &r).unwrap() <= channel_ber(&block, &cfg, &r).unwrap() {
            not_worse += 1;
        }
    }
    assert!(not_worse >= 45, "{not_worse}/50");
}
