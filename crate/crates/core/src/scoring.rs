//! LCM evaluation model.
//!
//! A cell's score depends on its own level and the levels of the cells
//! directly below (`under`, wordline `n - 1`) and above (`up`, wordline
//! `n + 1`) on the same string. Higher scores mean less lateral charge
//! migration. Page-triple scores sum cell scores across bitlines and the
//! block score sums page-triple scores over every interior wordline.

use std::cell::Cell;

use ndarray::Array3;

use crate::error::{Error, Result};
use crate::types::{ArchConfig, BlockPattern, Permutation, ProgramLevel, LEVELS};

thread_local! {
    static TENSOR_BUILDS: Cell<u64> = const { Cell::new(0) };
}

/// Number of [`build_score_tensor`] calls made on the current thread.
pub fn tensor_builds() -> u64 {
    TENSOR_BUILDS.with(Cell::get)
}

/// Coupling coefficient of adjacent erased states.
///
/// Only the erased/programmed pattern matters. An erased middle cell, or a
/// fully programmed triple, gets 5. A programmed middle cell between two
/// erased neighbors gets 1, and with exactly one erased neighbor gets 2.
pub fn ae_coefficient(under: ProgramLevel, mid: ProgramLevel, up: ProgramLevel) -> u32 {
    match (under.is_erased(), mid.is_erased(), up.is_erased()) {
        (_, true, _) => 5,
        (false, false, false) => 5,
        (true, false, true) => 1,
        (true, false, false) | (false, false, true) => 2,
    }
}

/// Score of the middle cell of a vertical triple.
pub fn cell_score(under: ProgramLevel, mid: ProgramLevel, up: ProgramLevel, cfg: &ArchConfig) -> f64 {
    let (xu, xm, xp) = (under.value() as f64, mid.value() as f64, up.value() as f64);
    let levels = LEVELS as f64;
    let f = (cfg.k2 * (levels - (xu - xm).abs()) + cfg.k1 * (levels - (xm - xp).abs()))
        / (cfg.alpha * (cfg.k1 + cfg.k2));
    ae_coefficient(under, mid, up) as f64 * (levels - xm) * f
}

/// All `16^3` cell scores for one configuration, indexed `[under][mid][up]`.
#[derive(Clone, Debug)]
pub struct CellScoreTable {
    table: Vec<f64>,
}

impl CellScoreTable {
    pub fn new(cfg: &ArchConfig) -> Self {
        let l = LEVELS as usize;
        let mut table = Vec::with_capacity(l * l * l);
        for a in 0..LEVELS {
            for b in 0..LEVELS {
                for c in 0..LEVELS {
                    table.push(cell_score(
                        ProgramLevel::new_unchecked(a),
                        ProgramLevel::new_unchecked(b),
                        ProgramLevel::new_unchecked(c),
                        cfg,
                    ));
                }
            }
        }
        CellScoreTable { table }
    }

    #[inline]
    pub fn get(&self, under: u8, mid: u8, up: u8) -> f64 {
        self.table[((under as usize) << 8) | ((mid as usize) << 4) | up as usize]
    }

    /// Sum of cell scores across bitlines; slices must have equal length and
    /// hold valid levels.
    pub fn page_triple(&self, under: &[u8], mid: &[u8], up: &[u8]) -> f64 {
        under
            .iter()
            .zip(mid)
            .zip(up)
            .map(|((&a, &b), &c)| self.get(a, b, c))
            .sum()
    }
}

fn levels_of(page: &[u8]) -> Result<()> {
    match page.iter().position(|&v| v >= LEVELS) {
        Some(col) => Err(Error::LevelOutOfRange {
            row: 0,
            col,
            value: page[col] as u32,
        }),
        None => Ok(()),
    }
}

/// Sum of [`cell_score`] over the bitlines of three stacked pages.
pub fn page_triple_score(under: &[u8], mid: &[u8], up: &[u8], cfg: &ArchConfig) -> Result<f64> {
    if under.len() != mid.len() || mid.len() != up.len() {
        return Err(Error::LengthMismatch(under.len(), mid.len(), up.len()));
    }
    levels_of(under)?;
    levels_of(mid)?;
    levels_of(up)?;
    Ok(under
        .iter()
        .zip(mid)
        .zip(up)
        .map(|((&a, &b), &c)| {
            cell_score(
                ProgramLevel::new_unchecked(a),
                ProgramLevel::new_unchecked(b),
                ProgramLevel::new_unchecked(c),
                cfg,
            )
        })
        .sum())
}

/// Block score: the sum of page-triple scores of every interior wordline.
/// The first and last wordlines contribute only as neighbors.
pub fn block_score(pattern: &BlockPattern, cfg: &ArchConfig) -> Result<f64> {
    let n = pattern.num_wordlines();
    if n < 3 {
        return Err(Error::TooFewWordlines(n));
    }
    if let Some((row, col, value)) = pattern.first_invalid_cell() {
        return Err(Error::LevelOutOfRange {
            row,
            col,
            value: value as u32,
        });
    }
    let table = CellScoreTable::new(cfg);
    Ok((1..n - 1)
        .map(|m| table.page_triple(pattern.row(m - 1), pattern.row(m), pattern.row(m + 1)))
        .sum())
}

/// Page-triple scores of every ordered triple of distinct source pages.
/// Entry `(a, b, c)` places `a` under, `b` in the middle and `c` above.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreTensor {
    entries: Array3<f64>,
}

impl ScoreTensor {
    pub fn from_array(entries: Array3<f64>) -> Result<Self> {
        let (a, b, c) = entries.dim();
        if a != b || b != c {
            return Err(Error::dims("cubic tensor", format!("{a}x{b}x{c}")));
        }
        Ok(ScoreTensor { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.dim().0
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize, c: usize) -> f64 {
        self.entries[[a, b, c]]
    }

    pub fn as_array(&self) -> &Array3<f64> {
        &self.entries
    }

    /// Sum of the entries of consecutive triples of `perm`. Equals the
    /// block score of the pattern arranged by `perm`.
    pub fn arrangement_score(&self, perm: &[usize]) -> f64 {
        perm.windows(3).map(|w| self.get(w[0], w[1], w[2])).sum()
    }

    pub fn permutation_score(&self, perm: &Permutation) -> f64 {
        self.arrangement_score(perm.as_slice())
    }
}

pub fn build_score_tensor(pattern: &BlockPattern, cfg: &ArchConfig) -> Result<ScoreTensor> {
    if let Some((row, col, value)) = pattern.first_invalid_cell() {
        return Err(Error::LevelOutOfRange {
            row,
            col,
            value: value as u32,
        });
    }
    TENSOR_BUILDS.with(|c| c.set(c.get() + 1));
    let n = pattern.num_wordlines();
    let table = CellScoreTable::new(cfg);
    let mut entries = Array3::<f64>::zeros((n, n, n));
    for a in 0..n {
        for b in 0..n {
            if b == a {
                continue;
            }
            for c in 0..n {
                if c == a || c == b {
                    continue;
                }
                entries[[a, b, c]] = table.page_triple(pattern.row(a), pattern.row(b), pattern.row(c));
            }
        }
    }
    Ok(ScoreTensor { entries })
}
