use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::types::{ArchConfig, BlockPattern};

/// Identifies the block generator so datasets can be regenerated elsewhere:
/// a ChaCha8 stream seeded with `seed_from_u64(seed)`, each cell drawn as
/// `random_range(0..16)` in wordline-major order (rand 0.9).
pub const GENERATOR_ID: &str = "chacha8-seed_from_u64-random_range-0..16";

/// I.i.d. uniform levels, deterministic in `seed`.
pub fn gen_random_block(cfg: &ArchConfig, seed: u64) -> Result<BlockPattern> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells = (0..cfg.num_wordlines * cfg.cells_per_page)
        .map(|_| rng.random_range(0..16u8))
        .collect();
    BlockPattern::from_raw(cfg.num_wordlines, cfg.cells_per_page, cells)
}

/// Seeded shuffle followed by a 7:3 split; the training part has
/// `round(0.7 n)` items.
pub fn split_dataset<T: Clone>(items: &[T], seed: u64) -> Result<(Vec<T>, Vec<T>)> {
    let (train, test) = split_indices(items.len(), seed)?;
    Ok((
        train.iter().map(|&i| items[i].clone()).collect(),
        test.iter().map(|&i| items[i].clone()).collect(),
    ))
}

/// Index form of [`split_dataset`].
pub fn split_indices(n: usize, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if n < 10 {
        return Err(Error::TooFewBlocks(n));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let train_len = (0.7 * n as f64).round() as usize;
    let test = idx.split_off(train_len);
    Ok((idx, test))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_block() {
        let cfg = ArchConfig::new(8, 32);
        assert_eq!(gen_random_block(&cfg, 5).unwrap(), gen_random_block(&cfg, 5).unwrap());
        assert_ne!(gen_random_block(&cfg, 5).unwrap(), gen_random_block(&cfg, 6).unwrap());
    }

    #[test]
    fn full_page_width() {
        let cfg = ArchConfig::new(16, 18 * 1024 * 8);
        let b = gen_random_block(&cfg, 1).unwrap();
        assert_eq!((b.num_wordlines(), b.cells_per_page()), (16, 147_456));
        assert!(b.first_invalid_cell().is_none());
    }

    #[test]
    fn split_sizes() {
        let (train, test) = split_dataset(&(0..10).collect::<Vec<_>>(), 3).unwrap();
        assert_eq!((train.len(), test.len()), (7, 3));
        let mut all: Vec<_> = train.iter().chain(&test).copied().collect();
        all.sort();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert_eq!(split_dataset(&(0..10).collect::<Vec<_>>(), 3).unwrap().0, train);
        assert!(matches!(split_dataset(&[1, 2, 3], 0), Err(Error::TooFewBlocks(3))));
        let (train, test) = split_indices(100, 9).unwrap();
        assert_eq!((train.len(), test.len()), (70, 30));
    }
}
