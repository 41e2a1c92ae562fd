//! Reflected binary Gray code for QLC levels. Bit `k` of a code is the bit
//! stored on logical page `k`.

use crate::error::{Error, Result};

pub fn gray_encode(level: u8) -> Result<u8> {
    if level > 15 {
        return Err(Error::LevelOutOfRange {
            row: 0,
            col: 0,
            value: level as u32,
        });
    }
    Ok(level ^ (level >> 1))
}

/// Inverse of [`gray_encode`]; only the low four bits of `code` are used.
pub fn gray_decode(code: u8) -> u8 {
    let mut level = code & 0x0f;
    level ^= level >> 1;
    level ^= level >> 2;
    level
}
