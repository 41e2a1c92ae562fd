//! Domain types: program levels, block patterns, permutations.

use std::fmt;

use crate::error::{Error, Result};

/// Number of threshold-voltage levels of a QLC cell.
pub const LEVELS: u8 = 16;

/// A QLC threshold-voltage level. `0` is the erased state, `1..=15` are the
/// programmed states P1..P15.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ProgramLevel(u8);

impl ProgramLevel {
    pub const ERASED: ProgramLevel = ProgramLevel(0);
    pub const MAX: ProgramLevel = ProgramLevel(LEVELS - 1);

    pub fn new(value: u8) -> Result<Self> {
        if value < LEVELS {
            Ok(ProgramLevel(value))
        } else {
            Err(Error::LevelOutOfRange {
                row: 0,
                col: 0,
                value: value as u32,
            })
        }
    }

    /// Caller guarantees `value < 16`.
    pub(crate) const fn new_unchecked(value: u8) -> Self {
        ProgramLevel(value)
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn is_erased(self) -> bool {
        self.0 == 0
    }
}

impl TryFrom<u8> for ProgramLevel {
    type Error = Error;
    fn try_from(value: u8) -> Result<Self> {
        ProgramLevel::new(value)
    }
}

impl From<ProgramLevel> for u8 {
    fn from(l: ProgramLevel) -> u8 {
        l.0
    }
}

/// Block geometry and scoring coefficients.
///
/// `k1` weights the upside neighbor (wordline `n + 1`), `k2` the underside
/// neighbor (wordline `n - 1`), `alpha` scales the score range.
#[derive(Clone, Debug, PartialEq)]
pub struct ArchConfig {
    pub num_wordlines: usize,
    pub cells_per_page: usize,
    pub k1: f64,
    pub k2: f64,
    pub alpha: f64,
}

impl ArchConfig {
    pub fn new(num_wordlines: usize, cells_per_page: usize) -> Self {
        ArchConfig {
            num_wordlines,
            cells_per_page,
            ..ArchConfig::default()
        }
    }

    pub fn levels(&self) -> u8 {
        LEVELS
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_wordlines < 3 {
            return Err(Error::TooFewWordlines(self.num_wordlines));
        }
        if self.cells_per_page == 0 {
            return Err(Error::InvalidConfig("cells_per_page must be positive".into()));
        }
        for (name, v) in [("k1", self.k1), ("k2", self.k2), ("alpha", self.alpha)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

impl Default for ArchConfig {
    fn default() -> Self {
        ArchConfig {
            num_wordlines: 16,
            cells_per_page: 64,
            k1: 4.0,
            k2: 1.0,
            alpha: 1.0,
        }
    }
}

/// `N` wordlines by `C` cells of program levels, stored wordline-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BlockPattern {
    rows: usize,
    cols: usize,
    cells: Vec<u8>,
}

impl BlockPattern {
    /// Builds a pattern from wordline-major raw levels. Levels are not
    /// checked here; see [`validate_pattern`].
    pub fn from_raw(rows: usize, cols: usize, cells: Vec<u8>) -> Result<Self> {
        if cells.len() != rows * cols {
            return Err(Error::dims(
                format!("{rows}x{cols} = {} cells", rows * cols),
                format!("{} cells", cells.len()),
            ));
        }
        Ok(BlockPattern { rows, cols, cells })
    }

    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut cells = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::dims(format!("row {i} of length {cols}"), r.len()));
            }
            cells.extend_from_slice(r);
        }
        Ok(BlockPattern {
            rows: rows.len(),
            cols,
            cells,
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        BlockPattern {
            rows,
            cols,
            cells: vec![0; rows * cols],
        }
    }

    pub fn num_wordlines(&self) -> usize {
        self.rows
    }

    pub fn cells_per_page(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.cells[i * self.cols..(i + 1) * self.cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u8]> + '_ {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.cells[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, level: ProgramLevel) {
        self.cells[row * self.cols + col] = level.value();
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.cells
    }

    /// First cell outside `0..=15`, if any.
    pub fn first_invalid_cell(&self) -> Option<(usize, usize, u8)> {
        self.cells
            .iter()
            .position(|&v| v >= LEVELS)
            .map(|k| (k / self.cols, k % self.cols, self.cells[k]))
    }
}

impl fmt::Debug for BlockPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BlockPattern {}x{} [", self.rows, self.cols)?;
        for r in self.rows() {
            writeln!(f, "  {r:?}")?;
        }
        write!(f, "]")
    }
}

/// Checks the pattern against the configured geometry and the level range.
pub fn validate_pattern(pattern: &BlockPattern, cfg: &ArchConfig) -> Result<()> {
    if pattern.rows != cfg.num_wordlines || pattern.cols != cfg.cells_per_page {
        return Err(Error::dims(
            format!("{}x{}", cfg.num_wordlines, cfg.cells_per_page),
            format!("{}x{}", pattern.rows, pattern.cols),
        ));
    }
    if let Some((row, col, value)) = pattern.first_invalid_cell() {
        return Err(Error::LevelOutOfRange {
            row,
            col,
            value: value as u32,
        });
    }
    Ok(())
}

/// Position-to-source map: `map[i]` is the source page stored at physical
/// wordline `i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    pub fn new(map: Vec<usize>) -> Result<Self> {
        let n = map.len();
        let mut seen = vec![false; n];
        for &m in &map {
            if m >= n || std::mem::replace(&mut seen[m], true) {
                return Err(Error::NotABijection { len: n });
            }
        }
        Ok(Permutation { map })
    }

    pub fn identity(n: usize) -> Self {
        Permutation {
            map: (0..n).collect(),
        }
    }

    pub(crate) fn from_vec_unchecked(map: Vec<usize>) -> Self {
        debug_assert!(Permutation::new(map.clone()).is_ok());
        Permutation { map }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(i, &m)| i == m)
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.map.len()];
        for (pos, &src) in self.map.iter().enumerate() {
            inv[src] = pos;
        }
        Permutation { map: inv }
    }
}

impl std::ops::Index<usize> for Permutation {
    type Output = usize;
    fn index(&self, i: usize) -> &usize {
        &self.map[i]
    }
}

/// Gathers rows: result row `i` is `pattern` row `perm[i]`.
pub fn apply_permutation(pattern: &BlockPattern, perm: &Permutation) -> Result<BlockPattern> {
    if perm.len() != pattern.rows {
        return Err(Error::dims(
            format!("permutation of length {}", pattern.rows),
            perm.len(),
        ));
    }
    let mut cells = Vec::with_capacity(pattern.cells.len());
    for &src in perm.as_slice() {
        cells.extend_from_slice(pattern.row(src));
    }
    Ok(BlockPattern {
        rows: pattern.rows,
        cols: pattern.cols,
        cells,
    })
}

/// Inverse map: `result[perm[i]] = i`.
pub fn invert_permutation(perm: &[usize]) -> Result<Permutation> {
    Ok(Permutation::new(perm.to_vec())?.inverse())
}
