//! Binary formats. All integers are little-endian.
//!
//! Pattern file (`PDAP`):
//!
//! ```text
//! "PDAP" | version u8 = 1 | N u32 | C u32 | N*C level bytes, wordline-major
//! ```
//!
//! Mapping table (`PDAM`):
//!
//! ```text
//! "PDAM" | version u8 = 1 | N u16 | N entries u16
//! ```
//!
//! Entry `i` of a mapping table is the source page stored at physical
//! wordline `i`. The payload after the 7-byte header is exactly `2N` bytes.

use crate::error::{Error, Result};
use crate::types::{BlockPattern, Permutation, LEVELS};

pub const PATTERN_MAGIC: [u8; 4] = *b"PDAP";
pub const PATTERN_VERSION: u8 = 1;
pub const PATTERN_HEADER_LEN: usize = 13;

pub const MAPPING_MAGIC: [u8; 4] = *b"PDAM";
pub const MAPPING_VERSION: u8 = 1;
pub const MAPPING_HEADER_LEN: usize = 7;

/// Bounds-checked little-endian cursor.
pub(crate) struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        Reader { bytes, pos: 0 }
    }

    pub fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self.pos + len;
        if end > self.bytes.len() {
            return Err(Error::TruncatedFile {
                needed: end,
                available: self.bytes.len(),
            });
        }
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn array<const K: usize>(&mut self) -> Result<[u8; K]> {
        Ok(self.take(K)?.try_into().expect("length checked"))
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.array()?))
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.array()?))
    }

    pub fn finish(self) -> Result<()> {
        match self.bytes.len() - self.pos {
            0 => Ok(()),
            extra => Err(Error::TrailingData(extra)),
        }
    }
}

pub(crate) fn check_header(r: &mut Reader<'_>, magic: [u8; 4], version: u8) -> Result<()> {
    let found: [u8; 4] = r.array()?;
    if found != magic {
        return Err(Error::BadMagic { expected: magic, found });
    }
    let v = r.u8()?;
    if v != version {
        return Err(Error::UnsupportedVersion(v));
    }
    Ok(())
}

/// Serialized form of a permutation: one `u16` per wordline.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MappingTable {
    entries: Vec<u16>,
}

impl MappingTable {
    pub fn from_permutation(perm: &Permutation) -> Result<Self> {
        if perm.len() > u16::MAX as usize {
            return Err(Error::InvalidConfig(format!(
                "mapping table holds at most 65535 wordlines, got {}",
                perm.len()
            )));
        }
        Ok(MappingTable {
            entries: perm.as_slice().iter().map(|&v| v as u16).collect(),
        })
    }

    pub fn entries(&self) -> &[u16] {
        &self.entries
    }

    pub fn to_permutation(&self) -> Permutation {
        Permutation::from_vec_unchecked(self.entries.iter().map(|&v| v as usize).collect())
    }

    /// Physical wordline holding `source_page` (read-path lookup).
    pub fn physical_of(&self, source_page: u16) -> Option<usize> {
        self.entries.iter().position(|&e| e == source_page)
    }

    pub fn payload_len(&self) -> usize {
        2 * self.entries.len()
    }
}

pub fn write_mapping_table(perm: &Permutation) -> Result<Vec<u8>> {
    let table = MappingTable::from_permutation(perm)?;
    let mut out = Vec::with_capacity(MAPPING_HEADER_LEN + table.payload_len());
    out.extend_from_slice(&MAPPING_MAGIC);
    out.push(MAPPING_VERSION);
    out.extend_from_slice(&(table.entries.len() as u16).to_le_bytes());
    for e in &table.entries {
        out.extend_from_slice(&e.to_le_bytes());
    }
    Ok(out)
}

pub fn read_mapping_table(bytes: &[u8]) -> Result<MappingTable> {
    let mut r = Reader::new(bytes);
    check_header(&mut r, MAPPING_MAGIC, MAPPING_VERSION)?;
    let n = r.u16()? as usize;
    let entries = (0..n).map(|_| r.u16()).collect::<Result<Vec<_>>>()?;
    r.finish()?;
    Permutation::new(entries.iter().map(|&v| v as usize).collect())?;
    Ok(MappingTable { entries })
}

pub fn write_pattern(pattern: &BlockPattern) -> Result<Vec<u8>> {
    if let Some((row, col, value)) = pattern.first_invalid_cell() {
        return Err(Error::LevelOutOfRange {
            row,
            col,
            value: value as u32,
        });
    }
    let dim = |v: usize| u32::try_from(v).map_err(|_| Error::InvalidConfig(format!("dimension {v} exceeds u32")));
    let mut out = Vec::with_capacity(PATTERN_HEADER_LEN + pattern.as_slice().len());
    out.extend_from_slice(&PATTERN_MAGIC);
    out.push(PATTERN_VERSION);
    out.extend_from_slice(&dim(pattern.num_wordlines())?.to_le_bytes());
    out.extend_from_slice(&dim(pattern.cells_per_page())?.to_le_bytes());
    out.extend_from_slice(pattern.as_slice());
    Ok(out)
}

pub fn read_pattern(bytes: &[u8]) -> Result<BlockPattern> {
    let mut r = Reader::new(bytes);
    check_header(&mut r, PATTERN_MAGIC, PATTERN_VERSION)?;
    let n = r.u32()? as usize;
    let c = r.u32()? as usize;
    let len = n.checked_mul(c).ok_or_else(|| Error::InvalidConfig(format!("{n}x{c} overflows")))?;
    let cells = r.take(len)?.to_vec();
    r.finish()?;
    if let Some(k) = cells.iter().position(|&v| v >= LEVELS) {
        return Err(Error::LevelOutOfRange {
            row: k / c,
            col: k % c,
            value: cells[k] as u32,
        });
    }
    BlockPattern::from_raw(n, c, cells)
}
