//! Scoring checked against a direct evaluation of the cell formula and the
//! triple-tensor decomposition.

use pda_core::io::gen_random_block;
use pda_core::scoring::{block_score, build_score_tensor, cell_score, page_triple_score};
use pda_core::types::apply_permutation;
use pda_core::{ArchConfig, BlockPattern, Permutation, ProgramLevel};
use proptest::prelude::*;

/// The cell formula typed out directly from its definition, with the
/// coupling coefficient taken from a literal lookup of the eight
/// erased/programmed neighborhoods.
fn reference_cell(under: u8, mid: u8, up: u8, k1: f64, k2: f64, alpha: f64) -> f64 {
    let ae = match (under > 0, mid > 0, up > 0) {
        (true, false, true) => 5.0,
        (false, false, false) => 5.0,
        (true, true, true) => 5.0,
        (false, true, false) => 1.0,
        (false, false, true) => 5.0,
        (false, true, true) => 2.0,
        (true, false, false) => 5.0,
        (true, true, false) => 2.0,
    };
    let (x0, x1, x2) = (under as f64, mid as f64, up as f64);
    let f = (k2 * (16.0 - (x0 - x1).abs()) + k1 * (16.0 - (x1 - x2).abs())) / (alpha * (k1 + k2));
    ae * (16.0 - x1) * f
}

fn reference_block(block: &BlockPattern, cfg: &ArchConfig) -> f64 {
    let mut total = 0.0;
    for n in 1..block.num_wordlines() - 1 {
        for col in 0..block.cells_per_page() {
            total += reference_cell(
                block.get(n - 1, col),
                block.get(n, col),
                block.get(n + 1, col),
                cfg.k1,
                cfg.k2,
                cfg.alpha,
            );
        }
    }
    total
}

fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut stack = vec![(Vec::new(), (0..n).collect::<Vec<_>>())];
    while let Some((prefix, rest)) = stack.pop() {
        if rest.is_empty() {
            out.push(prefix);
            continue;
        }
        for (k, &v) in rest.iter().enumerate() {
            let mut p = prefix.clone();
            p.push(v);
            let mut r = rest.clone();
            r.remove(k);
            stack.push((p, r));
        }
    }
    out
}

#[test]
fn cell_score_matches_reference_everywhere() {
    for cfg in [
        ArchConfig::default(),
        ArchConfig {
            k1: 2.0,
            k2: 3.0,
            alpha: 0.5,
            ..ArchConfig::default()
        },
    ] {
        for a in 0..16u8 {
            for b in 0..16u8 {
                for c in 0..16u8 {
                    let lib = cell_score(
                        ProgramLevel::new(a).unwrap(),
                        ProgramLevel::new(b).unwrap(),
                        ProgramLevel::new(c).unwrap(),
                        &cfg,
                    );
                    let r = reference_cell(a, b, c, cfg.k1, cfg.k2, cfg.alpha);
                    assert!((lib - r).abs() <= 1e-12 * r.abs().max(1.0), "({a},{b},{c}): {lib} vs {r}");
                }
            }
        }
    }
}

#[test]
fn all_zero_four_by_one_block() {
    let block = BlockPattern::zeros(4, 1);
    assert_eq!(block_score(&block, &ArchConfig::new(4, 1)).unwrap(), 2560.0);
}

#[test]
fn three_wordlines_is_a_single_triple() {
    let block = gen_random_block(&ArchConfig::new(3, 17), 5).unwrap();
    let cfg = ArchConfig::new(3, 17);
    let direct = page_triple_score(block.row(0), block.row(1), block.row(2), &cfg).unwrap();
    assert_eq!(block_score(&block, &cfg).unwrap(), direct);
}

#[test]
fn decomposition_identity_over_all_arrangements() {
    let cfg = ArchConfig::new(5, 8);
    let perms = all_permutations(5);
    assert_eq!(perms.len(), 120);
    let mut worst = 0.0f64;
    for seed in 0..100 {
        let block = gen_random_block(&cfg, 7_000 + seed).unwrap();
        let sac = build_score_tensor(&block, &cfg).unwrap();
        for map in &perms {
            let arranged = apply_permutation(&block, &Permutation::new(map.clone()).unwrap()).unwrap();
            let direct = block_score(&arranged, &cfg).unwrap();
            let summed: f64 = map.windows(3).map(|w| sac.get(w[0], w[1], w[2])).sum();
            worst = worst.max((direct - summed).abs() / direct.abs());
        }
    }
    assert!(worst < 1e-9, "worst relative error {worst:e}");
}

proptest! {
    #[test]
    fn block_score_matches_reference(n in 3usize..9, c in 1usize..12, seed in any::<u64>()) {
        let cfg = ArchConfig::new(n, c);
        let block = gen_random_block(&cfg, seed).unwrap();
        let lib = block_score(&block, &cfg).unwrap();
        let r = reference_block(&block, &cfg);
        prop_assert!((lib - r).abs() <= 1e-9 * r);
    }

    #[test]
    fn tensor_is_zero_off_distinct_triples(seed in any::<u64>()) {
        let cfg = ArchConfig::new(5, 4);
        let sac = build_score_tensor(&gen_random_block(&cfg, seed).unwrap(), &cfg).unwrap();
        for a in 0..5 {
            for b in 0..5 {
                for c in 0..5 {
                    let distinct = a != b && b != c && a != c;
                    prop_assert_eq!(sac.get(a, b, c) > 0.0, distinct);
                }
            }
        }
    }
}
